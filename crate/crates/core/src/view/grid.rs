use std::fmt::Write as _;

use super::*;
use crate::world::Direction;

pub const LEGEND: &str = "Legend: K=key, B=ball, X=box, D=door, O=boulder, G=goal, N=notice board, S=signpost, @=agent, #=wall, .=floor, ?=unknown";
pub const COLORS: &str = "Colors: r=red, b=blue, g=green, y=yellow, p=purple, e=grey";
pub const TILES: &str = "Tiles: ~> ~< ~^ ~v=river (arrow is the current), ^^=fire, ^.=extinguished fire, ww=flood water, w.=passable water or dry channel, _.=pressure plate";

fn arrow(d: Direction) -> char {
    match d {
        Direction::North => '^',
        Direction::East => '>',
        Direction::South => 'v',
        Direction::West => '<',
    }
}

/// Two-character code for a visible cell that the agent is not standing on.
/// Objects win over tiles; among tiles the one that matters for movement wins.
pub fn cell_code(cell: &Cell) -> String {
    if cell.is_wall() {
        return "##".into();
    }
    if let Some(o) = &cell.object {
        return o.code();
    }
    if cell.fire_active() {
        return "^^".into();
    }
    if cell.flooded() {
        return "ww".into();
    }
    if let Some((d, _)) = cell.river() {
        return format!("~{}", arrow(d));
    }
    if cell.has_overlay("fire") {
        return "^.".into();
    }
    if cell.has_overlay("flood") {
        return "w.".into();
    }
    if cell.plate().is_some() {
        return "_.".into();
    }
    "..".into()
}

/// The whole level, every cell regardless of view, one string of codes per
/// row. The agent shows as `@` followed by its facing arrow.
pub fn world_map(world: &crate::world::World) -> Vec<String> {
    let agent = world.agent();
    (0..world.height())
        .map(|row| {
            (0..world.width())
                .map(|col| {
                    let pos = crate::world::Pos::new(col, row);
                    if pos == agent.pos() {
                        format!("@{}", arrow(agent.facing))
                    } else {
                        world.cell(pos).map_or_else(|| "??".into(), cell_code)
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// The ASCII table: a header of lateral labels, one `ahead k` row per depth
/// step nearest first, then notes, carried item, testimony and legend.
pub fn serialize_grid(obs: &Observation) -> String {
    let (depth, width, half) = (obs.config.depth, obs.config.width, obs.config.half());
    let label_w = format!("ahead {}", depth.saturating_sub(1)).len();
    let mut out = String::new();
    let _ = writeln!(out, "{}", header(obs));

    let mut head = " ".repeat(label_w);
    for i in 0..width as i64 {
        let _ = write!(head, " {:<2}", lateral_label(i - half));
    }
    let _ = writeln!(out, "{}", head.trim_end());

    for a in 0..depth as i64 {
        let mut row = format!("{:<label_w$}", format!("ahead {a}"));
        for l in -half..=half {
            let code = match obs.get(a, l) {
                _ if (a, l) == (0, 0) => "@.".to_string(),
                Some(seen) => cell_code(&seen.cell),
                None => "??".to_string(),
            };
            let _ = write!(row, " {code}");
        }
        let _ = writeln!(out, "{row}");
    }

    let notes = notes(obs);
    if !notes.is_empty() {
        out.push_str("Notes:\n");
        for n in notes {
            let _ = writeln!(out, "- {n}");
        }
    }
    let _ = writeln!(
        out,
        "Carrying: {}",
        obs.carrying
            .as_ref()
            .map_or_else(|| "nothing".to_string(), describe_with_state)
    );
    push_testimony(&mut out, obs);
    let _ = writeln!(out, "{LEGEND}");
    let _ = writeln!(out, "{COLORS}");
    let _ = writeln!(out, "{TILES}");
    out
}

/// Facts the 2-char codes cannot carry: door states, wetness, tiles hidden
/// under objects, and extra tiles sharing a cell.
fn notes(obs: &Observation) -> Vec<String> {
    let mut notes = Vec::new();
    for (a, l, seen) in obs.visible() {
        let at = ego_label(a, l);
        let cell = &seen.cell;
        if (a, l) == (0, 0) {
            if let Some(o) = &cell.object {
                notes.push(format!("you are standing on a {}", describe_with_state(o)));
            }
            for t in &cell.overlays {
                notes.push(format!("you are standing on {}", describe_overlay(t)));
            }
            continue;
        }
        if let Some(o) = &cell.object {
            if o.door_state.is_some() || o.is_wet() {
                notes.push(format!("{} at {at}", describe_with_state(o)));
            }
            for t in &cell.overlays {
                notes.push(format!(
                    "{} at {at} is on {}",
                    o.describe(),
                    describe_overlay(t)
                ));
            }
        } else if cell.overlays.len() > 1 {
            let tiles: Vec<String> = cell.overlays.iter().map(describe_overlay).collect();
            notes.push(format!("{at} has {}", tiles.join(" and ")));
        } else if let Some(TileOverlay::River { direction, speed }) = cell.overlays.first() {
            if *speed != 1 {
                notes.push(format!(
                    "{at} has river flowing {direction} (speed {speed})"
                ));
            }
        }
    }
    notes
}

pub(crate) fn push_testimony(out: &mut String, obs: &Observation) {
    if obs.testimony.is_empty() {
        return;
    }
    out.push_str("Testimony:\n");
    for t in &obs.testimony {
        let quoted = serde_json::to_string(&t.text).expect("string serializes");
        let mut source = format!("{} {}", t.color.name(), t.kind.name());
        if let Some((a, l)) = t.ego {
            let _ = write!(source, " at {}", ego_label(a, l));
        }
        if let Some(acc) = t.accuracy {
            let _ = write!(source, " (stated accuracy {acc})");
        }
        let _ = writeln!(out, "- {source} says: {quoted}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_unknown_fov_is_question_marks() {
        let obs = Observation {
            level_id: "x".into(),
            segment: 0,
            step: 0,
            pose: Pose::new(Pos::new(1, 1), Direction::North),
            config: ViewConfig::square(3),
            cells: vec![None; 9],
            carrying: None,
            testimony: Vec::new(),
            last_event: None,
        };
        let text = serialize_grid(&obs);
        let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("ahead")).collect();
        assert_eq!(
            rows,
            ["ahead 0 ?? @. ??", "ahead 1 ?? ?? ??", "ahead 2 ?? ?? ??"]
        );
        assert!(text.lines().any(|l| l == "        L1 0  R1"));
    }

    #[test]
    fn tile_priority() {
        let mut c = Cell::floor();
        c.overlays.push(TileOverlay::River {
            direction: Direction::East,
            speed: 1,
        });
        assert_eq!(cell_code(&c), "~>");
        c.overlays = vec![
            TileOverlay::Fire { active: true },
            TileOverlay::Flood {
                rise_step: 9,
                active: false,
                spent: false,
            },
        ];
        assert_eq!(cell_code(&c), "^^");
        c.overlays = vec![
            TileOverlay::Fire { active: false },
            TileOverlay::Flood {
                rise_step: 1,
                active: true,
                spent: true,
            },
        ];
        assert_eq!(cell_code(&c), "^.");
    }
}
