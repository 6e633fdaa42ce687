use std::fmt::Write as _;

use super::*;

fn fmt_f64(x: f64) -> String {
    // Shortest representation that parses back to the same value.
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Canonical text for a valid level: fixed section order, sorted meta keys,
/// sorted `key=value` pairs, overlays and texts in (row, col) order.
pub fn emit_level(spec: &LevelSpec) -> Result<String, ValidationError> {
    spec.validate()?;
    let mut spec = spec.clone();
    spec.canonicalize();
    let mut out = String::new();

    out.push_str("[META]\n");
    for (key, value) in meta_pairs(&spec) {
        let _ = writeln!(out, "{key}={value}");
    }
    out.push_str("\n[GRID]\n");
    for row in &spec.grid {
        let codes: Vec<String> = row.iter().map(CellCode::as_str).collect();
        out.push_str(&codes.join(" "));
        out.push('\n');
    }

    out.push_str("\n[OVERLAYS]\n");
    for line in &spec.overlays {
        out.push_str(&overlay_text(line));
        out.push('\n');
    }
    for set in &spec.randomized_sets {
        out.push_str(&random_set_text(set));
        out.push('\n');
    }

    out.push_str("\n[TEXTS]\n");
    for t in &spec.texts {
        let quoted = serde_json::to_string(&t.text).expect("string serializes");
        let _ = match t.accuracy {
            Some(a) => writeln!(
                out,
                "{} {} accuracy={} {quoted}",
                t.pos.col,
                t.pos.row,
                fmt_f64(a)
            ),
            None => writeln!(out, "{} {} {quoted}", t.pos.col, t.pos.row),
        };
    }
    Ok(out)
}

/// `[META]` assignments in emitted order. `agent_start` is left out when
/// the grid has no agent.
pub fn meta_pairs(spec: &LevelSpec) -> Vec<(&'static str, String)> {
    let dir = match spec.meta.agent_dir {
        AgentDir::Fixed(d) => d.as_str(),
        AgentDir::Random => "random",
    };
    let view = spec.meta.view;
    let view = if view.depth == view.width {
        view.width.to_string()
    } else {
        format!("{}x{}", view.depth, view.width)
    };
    let mut pairs = vec![("agent_dir", dir.to_string())];
    if let Some(start) = spec.agent_start() {
        pairs.push(("agent_start", format!("{},{}", start.col, start.row)));
    }
    pairs.extend([
        ("id", spec.id.clone()),
        ("max_steps", spec.meta.max_steps.to_string()),
        ("see_through_walls", spec.meta.see_through_walls.to_string()),
        ("soak_duration", spec.meta.soak_duration.to_string()),
        ("view_size", view),
    ]);
    pairs
}

/// One `[OVERLAYS]` line in canonical form, without the newline.
pub fn overlay_text(line: &OverlayLine) -> String {
    let p = line.pos();
    match line {
        OverlayLine::Tile { tile, .. } => match tile {
            TileSpec::River { direction, speed } => format!(
                "river {} {} direction={direction} speed={speed}",
                p.col, p.row
            ),
            TileSpec::Fire { active: true } => format!("fire {} {}", p.col, p.row),
            TileSpec::Fire { active: false } => format!("fire {} {} active=false", p.col, p.row),
            TileSpec::Flood { rise_step } => {
                format!("flood {} {} rise_step={rise_step}", p.col, p.row)
            }
            TileSpec::Plate { effect, link } => {
                format!(
                    "plate {} {} effect={} link={},{}",
                    p.col,
                    p.row,
                    effect.as_str(),
                    link.col,
                    link.row
                )
            }
            TileSpec::Dark => format!("dark {} {}", p.col, p.row),
        },
        OverlayLine::Door { state, .. } => {
            format!("door {} {} state={}", p.col, p.row, state.as_str())
        }
        OverlayLine::Wet {
            condition, turns, ..
        } => {
            format!(
                "wet {} {} condition={} turns={turns}",
                p.col,
                p.row,
                condition.as_str()
            )
        }
    }
}

pub fn random_set_text(set: &RandomSet) -> String {
    let code = |(k, c): (ObjectKind, Color)| format!("{}{}", c.code(), k.code());
    let mut out = format!(
        "random {} {} {} {} absent={} fill={}",
        set.from.col,
        set.from.row,
        set.to.col,
        set.to.row,
        set.absent,
        code(set.fill)
    );
    if !set.swaps.is_empty() {
        let swaps: Vec<String> = set
            .swaps
            .iter()
            .map(|(o, n)| format!("{}:{n}", code(*o)))
            .collect();
        let _ = write!(out, " swap={}", swaps.join(","));
    }
    out
}
