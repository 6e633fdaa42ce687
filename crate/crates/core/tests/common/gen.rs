//! Random valid level specs and comment-sprinkled renderings of them.

use gridprobe::level::{
    AgentDir, CellCode, LevelSpec, OverlayLine, RandomSet, TextEntry, TileSpec, ViewSize,
};
use gridprobe::world::{Color, Condition, Direction, DoorState, ObjectKind, PlateEffect, Pos};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TEXTS: [&str; 5] = [
    "The exit is north.",
    "Say \"hi\" to the guard",
    "tab\there, slash \\ and unicode: café",
    "#not a comment",
    "  padded  ",
];

/// A random valid level covering every section and line form.
pub fn random_spec(seed: u64) -> LevelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.random_range(5..14);
    let h = rng.random_range(5..12);
    let mut spec = LevelSpec::blank(format!("lvl_{seed}"), w, h);
    spec.grid[1][1] = CellCode::Floor;
    let mut interior: Vec<Pos> = (1..h - 1)
        .flat_map(|r| (1..w - 1).map(move |c| Pos::new(c, r)))
        .collect();
    interior.shuffle(&mut rng);
    let mut cells = interior.into_iter();
    let agent = cells.next().unwrap();
    spec.grid[agent.row][agent.col] = CellCode::Agent;
    spec.meta.agent_dir = if rng.random_bool(0.2) {
        AgentDir::Random
    } else {
        AgentDir::Fixed(*Direction::ALL.choose(&mut rng).unwrap())
    };
    let depth = rng.random_range(1..9);
    let width = 2 * rng.random_range(0..5) + 1;
    spec.meta.view = ViewSize { depth, width };
    spec.meta.see_through_walls = rng.random_bool(0.3);
    spec.meta.max_steps = rng.random_range(1..500);
    spec.meta.soak_duration = rng.random_range(1..9);

    let mut doors = Vec::new();
    let mut floors = Vec::new();
    for pos in cells.by_ref().take(rng.random_range(0..12)) {
        let kind = *ObjectKind::ALL.choose(&mut rng).unwrap();
        let color = *Color::ALL.choose(&mut rng).unwrap();
        spec.grid[pos.row][pos.col] = CellCode::Object(kind, color);
        match kind {
            ObjectKind::Door => {
                doors.push(pos);
                if rng.random_bool(0.7) {
                    let state = [DoorState::Open, DoorState::Closed, DoorState::Locked]
                        [rng.random_range(0..3)];
                    spec.overlays.push(OverlayLine::Door { pos, state });
                }
            }
            k if k.is_testimony() => {
                let accuracy = (k == ObjectKind::Signpost && rng.random_bool(0.5))
                    .then(|| [0.0, 0.25, 0.5, 0.8, 1.0][rng.random_range(0..5)]);
                let text = TEXTS.choose(&mut rng).unwrap().to_string();
                spec.texts.push(TextEntry {
                    pos,
                    text,
                    accuracy,
                });
            }
            k if k.drifts() && rng.random_bool(0.3) => {
                let turns = rng.random_range(0..4);
                let condition = match turns {
                    0 => Condition::Dry,
                    _ if rng.random_bool(0.5) => Condition::Wet,
                    _ => Condition::Soaked,
                };
                spec.overlays.push(OverlayLine::Wet {
                    pos,
                    condition,
                    turns,
                });
            }
            _ => {}
        }
    }
    for pos in cells.by_ref().take(rng.random_range(0..10)) {
        let tile = match rng.random_range(0..5) {
            0 => TileSpec::River {
                direction: *Direction::ALL.choose(&mut rng).unwrap(),
                speed: rng.random_range(1..4),
            },
            1 => TileSpec::Fire {
                active: rng.random_bool(0.7),
            },
            2 => TileSpec::Flood {
                rise_step: rng.random_range(0..40),
            },
            3 if !doors.is_empty() => TileSpec::Plate {
                effect: if rng.random_bool(0.5) {
                    PlateEffect::Trigger
                } else {
                    PlateEffect::Continuous
                },
                link: *doors.choose(&mut rng).unwrap(),
            },
            _ => TileSpec::Dark,
        };
        spec.overlays.push(OverlayLine::Tile { pos, tile });
        floors.push(pos);
    }
    // Second, differently ranked tile on one cell.
    if let Some(&pos) = floors.first() {
        if !spec
            .overlays
            .iter()
            .any(|o| matches!(o, OverlayLine::Tile { pos: p, tile: TileSpec::Dark } if *p == pos))
        {
            spec.overlays.push(OverlayLine::Tile {
                pos,
                tile: TileSpec::Dark,
            });
        }
    }
    if rng.random_bool(0.4) {
        let from = Pos::new(1, 1);
        let to = Pos::new(w - 2, h - 2);
        let free = spec
            .cells()
            .filter(|(p, c)| *c == CellCode::Floor && p.col >= 1 && p.row >= 1)
            .count() as u32;
        let absent = rng.random_range(0..=free.min(3));
        let swap = rng.random_range(0..=(free - absent).min(2));
        let swaps = if swap > 0 {
            vec![((ObjectKind::Key, Color::Yellow), swap)]
        } else {
            vec![]
        };
        spec.randomized_sets.push(RandomSet {
            from,
            to,
            fill: (ObjectKind::Ball, Color::Blue),
            absent,
            swaps,
        });
    }
    spec.overlays.shuffle(&mut rng);
    spec.texts.shuffle(&mut rng);
    spec
}

/// Sprinkle comments and blank lines, which parsing must ignore.
pub fn decorate(text: &str, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("# leading comment\n\n");
    for line in text.lines() {
        out.push_str(line);
        out.push('\n');
        match rng.random_range(0..6) {
            0 => out.push_str("# note\n"),
            1 => out.push('\n'),
            2 => out.push_str("#\n"),
            _ => {}
        }
    }
    out
}

/// A valid random trajectory recorded over 1 to 3 fixture levels, with
/// probes of every builtin type planted at random steps.
pub fn random_trajectory(
    seed: u64,
    registry: &gridprobe::probe::ProbeRegistry,
) -> gridprobe::trajectory::Trajectory {
    use gridprobe::trajectory::{PlantRequest, RecordSession};
    use gridprobe::world::Action;

    const TYPES: [&str; 6] = [
        "presence",
        "count",
        "state",
        "location",
        "causal",
        "uncertainty",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = super::level_names();
    let pick = |rng: &mut ChaCha8Rng| {
        let name = names.choose(rng).unwrap().clone();
        (
            format!("levels/{name}.txt"),
            super::level(&name),
            rng.random_range(0..100u64),
        )
    };
    let (file, spec, s) = pick(&mut rng);
    let mut session = RecordSession::new(file, spec, s).unwrap();
    for seg in 0..rng.random_range(1..4) {
        if seg > 0 {
            let (file, spec, s) = pick(&mut rng);
            session.next_segment(file, spec, s).unwrap();
        }
        for _ in 0..rng.random_range(0..30) {
            if rng.random_bool(0.2) {
                let plugin = registry
                    .get(TYPES.choose(&mut rng).unwrap())
                    .unwrap()
                    .clone();
                if let Some(g) = plugin.generate(session.world(), session.history(), session.step())
                {
                    let ground_truth = g.query.is_none().then(|| g.truth.render());
                    let req = PlantRequest {
                        probe_type: plugin.name().to_string(),
                        question: g.question,
                        ground_truth,
                        query: g.query,
                        category: Some(g.category),
                    };
                    session.plant(req, registry).unwrap();
                }
            }
            session.append(Action::from_code(rng.random_range(0..7)).unwrap());
        }
    }
    let mut t = session.finalize();
    for p in t.probes.iter_mut() {
        if rng.random_bool(0.3) {
            p.metadata.insert(
                "note".into(),
                TEXTS.choose(&mut rng).unwrap().to_string().into(),
            );
        }
    }
    t
}
