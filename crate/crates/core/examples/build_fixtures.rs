//! Regenerate the fixture levels and trajectories under `fixtures/`.
//!
//! The outputs are checked in and treated as frozen; tests read them and
//! never call this. Run with `cargo run -p gridprobe-core --example
//! build_fixtures` after an intentional change, then review the diff.

use std::fs;
use std::path::{Path, PathBuf};

use gridprobe::level::{emit_level, parse_level, LevelSpec};
use gridprobe::probe::{
    Attribute, Category, ObjectPattern, Outcome, ProbeRegistry, Query, Scope, Subject,
    UncertainFact,
};
use gridprobe::trajectory::{PlantRequest, RecordSession};
use gridprobe::world::{Action, Color, ObjectKind, Pos};

const P1: &str = r#"# Dense array: a regular block of balls with seeded violations.
[META]
id=p1_dense_array
agent_dir=north
view_size=8x13

[GRID]
## ## ## ## ## ## ## ## ## ## ## ## ##
## rK rK rK rK rK rK rK rK rK .. .. ##
## rK rK rK rK rK rK rK bK rK .. .. ##
## rK rK rK .. rK rK rK rK rK .. .. ##
## .. .. .. .. .. .. .. .. .. .. .. ##
## .. .. .. .. .. .. .. .. .. .. .. ##
## .. .. .. .. .. rB .. .. .. .. .. ##
## .. .. .. .. .. .. .. .. gB .. .. ##
## .. .. .. .. @. .. .. .. .. .. .. ##
## ## ## ## ## ## ## ## ## ## ## ## ##

[OVERLAYS]
random 1 5 9 7 fill=bB absent=6 swap=yB:3,pB:2
"#;

const P2: &str = r#"# Corridor gauntlet: objects at staggered depths in a narrow hall.
[META]
id=p2_corridor_gauntlet
agent_dir=north

[GRID]
## ## ## ## ##
## .. .. .. ##
## .. .. rB ##
## .. .. .. ##
## .. pX .. ##
## .. .. bB ##
## yB .. .. ##
## .. gK .. ##
## .. .. bB ##
## rB .. .. ##
## .. @. .. ##
## ## ## ## ##
"#;

const P3: &str = r#"# Rotation challenge: fixed scene, spawn direction drawn from the seed.
[META]
id=p3_rotation_challenge
agent_dir=random

[GRID]
## ## ## ## ## ## ## ##
## .. .. rB .. .. .. ##
## .. .. .. .. .. .. ##
## .. .. .. .. .. bX ##
## .. .. @. .. .. .. ##
## .. .. .. .. .. .. ##
## gK .. .. .. .. .. ##
## ## ## ## ## ## ## ##
"#;

const M1: &str = r#"# River field: three balls ride an eastward river; the board shows the start.
[META]
id=m1_river_field
agent_dir=north
view_size=7x13

[GRID]
## ## ## ## ## ## ## ## ## ## ## ## ##
## .. .. .. .. .. .. .. .. .. .. .. ##
## bB .. rB .. yB .. .. .. .. .. .. ##
## .. .. .. .. .. .. .. .. .. .. .. ##
## .. eN .. .. .. .. .. .. .. .. .. ##
## .. .. .. .. .. @. .. .. .. .. .. ##
## ## ## ## ## ## ## ## ## ## ## ## ##

[OVERLAYS]
river 1 2 direction=east speed=1
river 2 2 direction=east speed=1
river 3 2 direction=east speed=1
river 4 2 direction=east speed=1
river 5 2 direction=east speed=1
river 6 2 direction=east speed=1
river 7 2 direction=east speed=1
river 8 2 direction=east speed=1
river 9 2 direction=east speed=1
river 10 2 direction=east speed=1

[TEXTS]
2 4 "River survey: blue ball at column 1, red ball at column 3, yellow ball at column 5."
"#;

const M4: &str = r#"# Unreliable narrator: a signpost makes three false claims.
[META]
id=m4_unreliable_narrator
agent_dir=north

[GRID]
## ## ## ## ## ## ## ## ##
## .. .. .. .. .. .. .. ##
## ## ## ## eD ## ## ## ##
## .. yK .. .. .. gK .. ##
## .. .. .. .. .. .. .. ##
## .. eS .. @. .. .. .. ##
## .. .. .. .. .. .. .. ##
## .. .. .. bX .. .. .. ##
## ## ## ## ## ## ## ## ##

[OVERLAYS]
door 4 2 state=open

[TEXTS]
2 5 "Both keys in this room are red. The door to the north is locked. There is no box here."
"#;

const C1A: &str = r#"# Persistent chain: one-shot plates open their doors for good.
[META]
id=c1a_persistent_chain
agent_dir=south

[GRID]
## ## ## ## ## ## ## ## ## ## ## ##
## .. .. @. .. .. ## .. .. ## .. ##
## .. .. eO .. yK eD .. .. eD gG ##
## eN .. .. .. .. ## .. .. ## .. ##
## ## ## ## ## ## ## ## ## ## ## ##

[OVERLAYS]
plate 3 3 effect=trigger link=6,2
door 6 2 state=closed
plate 8 2 effect=trigger link=9,2
door 9 2 state=closed

[TEXTS]
1 3 "Each plate here opens its door for good, even after it is cleared."
"#;

const C1B: &str = r#"# Continuous chain: same layout, doors stay open only while weighted.
[META]
id=c1b_continuous_chain
agent_dir=south

[GRID]
## ## ## ## ## ## ## ## ## ## ## ##
## .. .. @. .. .. ## .. .. ## .. ##
## .. .. eO .. yK eD .. .. eD gG ##
## eN .. .. .. .. ## .. .. ## .. ##
## ## ## ## ## ## ## ## ## ## ## ##

[OVERLAYS]
plate 3 3 effect=continuous link=6,2
door 6 2 state=closed
plate 8 2 effect=continuous link=9,2
door 9 2 state=closed

[TEXTS]
1 3 "Each door here stays open only while its plate is weighed down."
"#;

const C2: &str = r#"# Fire crossing: only the river-soaked ball can put out the barrier.
[META]
id=c2_fire_crossing
agent_dir=west
soak_duration=6

[GRID]
## ## ## ## ## ## ## ##
## .. gG .. .. .. .. ##
## .. .. .. .. .. .. ##
## .. .. .. .. .. .. ##
## bB @. .. rB .. .. ##
## .. .. .. .. .. .. ##
## ## ## ## ## ## ## ##

[OVERLAYS]
fire 1 2
fire 2 2
fire 3 2
fire 4 2
fire 5 2
fire 6 2
river 1 4 direction=west speed=1
wet 1 4 condition=wet turns=6
"#;

const C3: &str = r#"# Flood room: the water rises one row per step behind the agent.
[META]
id=c3_flood_room
agent_dir=north

[GRID]
## ## ## ## ## ## ##
## .. .. gG .. .. ##
## .. .. .. .. .. ##
## .. .. .. .. .. ##
## .. .. .. .. .. ##
## .. .. .. .. .. ##
## .. .. .. .. .. ##
## .. .. @. .. .. ##
## ## ## ## ## ## ##

[OVERLAYS]
flood 1 7 rise_step=2
flood 2 7 rise_step=2
flood 3 7 rise_step=2
flood 4 7 rise_step=2
flood 5 7 rise_step=2
flood 1 6 rise_step=3
flood 2 6 rise_step=3
flood 3 6 rise_step=3
flood 4 6 rise_step=3
flood 5 6 rise_step=3
flood 1 5 rise_step=4
flood 2 5 rise_step=4
flood 3 5 rise_step=4
flood 4 5 rise_step=4
flood 5 5 rise_step=4
flood 1 4 rise_step=5
flood 2 4 rise_step=5
flood 3 4 rise_step=5
flood 4 4 rise_step=5
flood 5 4 rise_step=5
flood 1 3 rise_step=6
flood 2 3 rise_step=6
flood 3 3 rise_step=6
flood 4 3 rise_step=6
flood 5 3 rise_step=6
flood 1 2 rise_step=7
flood 2 2 rise_step=7
flood 3 2 rise_step=7
flood 4 2 rise_step=7
flood 5 2 rise_step=7
"#;

const U1: &str = r#"# Fog of war: four sealed rooms, described only by the board.
[META]
id=u1_fog_of_war
agent_dir=north

[GRID]
## ## ## ## ## ## ## ## ## ## ##
## .. rB .. ## ## ## .. .. bX ##
## .. .. .. ## ## ## .. gK .. ##
## .. .. .. ## ## ## .. .. .. ##
## ## yD ## ## ## ## ## pD ## ##
## .. .. eN .. @. .. .. .. .. ##
## ## eD ## ## ## ## ## yD ## ##
## .. .. .. ## ## ## .. pB .. ##
## .. .. .. ## ## ## .. .. .. ##
## .. .. .. ## ## ## pB .. .. ##
## ## ## ## ## ## ## ## ## ## ##

[OVERLAYS]
door 2 4 state=locked
door 8 4 state=locked
door 2 6 state=locked
door 8 6 state=locked

[TEXTS]
3 5 "North-west room: a red ball. North-east room: a blue box and a green key. South-west room: empty. South-east room: two purple balls."
"#;

fn u2(id: &str, accuracy: &str) -> String {
    format!(
        r#"# Oracle problem: two signposts disagree about a sealed room.
[META]
id={id}
agent_dir=north

[GRID]
## ## ## ## ## ## ## ## ##
## .. .. .. .. .. .. .. ##
## .. .. gX .. .. .. .. ##
## .. .. .. .. .. .. .. ##
## ## ## ## eD ## ## ## ##
## .. eS .. .. .. eS .. ##
## .. .. .. .. .. .. eN ##
## .. .. .. @. .. .. .. ##
## ## ## ## ## ## ## ## ##

[OVERLAYS]
door 4 4 state=locked

[TEXTS]
2 5 accuracy={accuracy} "The sealed room holds a green box."
6 5 accuracy={accuracy} "The sealed room holds a red ball."
7 6 "Signposts in this hall are right {pct}% of the time."
"#,
        pct = (accuracy.parse::<f64>().unwrap() * 100.0).round()
    )
}

const X1_A: &str = r#"# Facility tour, zone A: storage.
[META]
id=x1_zone_a
agent_dir=north

[GRID]
## ## ## ## ## ## ##
## rB .. .. .. rB ##
## .. .. .. .. .. ##
## .. .. bK .. .. ##
## .. .. @. .. .. ##
## ## ## ## ## ## ##
"#;

const X1_B: &str = r#"# Facility tour, zone B: workshop.
[META]
id=x1_zone_b
agent_dir=north

[GRID]
## ## ## ## ## ## ##
## .. gX .. yX .. ##
## .. .. .. .. .. ##
## rB .. .. .. .. ##
## .. .. @. .. .. ##
## ## ## ## ## ## ##
"#;

const X1_C: &str = r#"# Facility tour, zone C: exit hall.
[META]
id=x1_zone_c
agent_dir=north

[GRID]
## ## ## ## ## ## ##
## .. .. bD .. .. ##
## .. .. .. .. .. ##
## pB .. .. .. .. ##
## .. .. @. .. .. ##
## ## ## ## ## ## ##

[OVERLAYS]
door 3 1 state=locked
"#;

/// C6 is built with the generator below so the long flood overlay list
/// stays consistent.
fn c6() -> String {
    let mut grid = vec![vec!["##"; 13]; 11];
    for row in grid.iter_mut().take(10).skip(1) {
        for cell in row.iter_mut().take(12).skip(1) {
            *cell = "..";
        }
    }
    for row in grid.iter_mut().take(10).skip(1) {
        row[10] = "##";
    }
    for row in 7..10 {
        grid[row][9] = "##";
    }
    grid[4][10] = "eD";
    grid[4][11] = "gG";
    grid[6][7] = "eO";
    grid[9][7] = "@.";
    grid[8][2] = "eN";
    let mut out = String::from(
        "# Flood-fire escape: floods quench the fire barrier at step 14; the board lies.\n\
         [META]\nid=c6_flood_fire_escape\nagent_dir=north\nmax_steps=200\n\n[GRID]\n",
    );
    for row in &grid {
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("\n[OVERLAYS]\n");
    for (i, row) in (1..=5).rev().enumerate() {
        for col in 1..=6 {
            out.push_str(&format!("flood {col} {row} rise_step={i}\n"));
        }
    }
    for col in [1, 2, 3, 4, 5, 6, 8] {
        out.push_str(&format!("fire {col} 6\nflood {col} 6 rise_step=14\n"));
    }
    out.push_str("plate 9 6 effect=trigger link=10,4\ndoor 10 4 state=locked\n");
    out.push_str(
        "\n[TEXTS]\n2 8 \"The flood reaches the fire barrier at step 2 and puts it out.\"\n",
    );
    out
}

struct Builder {
    root: PathBuf,
    registry: ProbeRegistry,
}

struct Rec<'a> {
    b: &'a Builder,
    s: RecordSession,
}

impl Builder {
    fn level(&self, name: &str, text: &str) -> LevelSpec {
        let spec = parse_level(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let canonical = emit_level(&spec).expect("valid");
        fs::write(
            self.root.join("levels").join(format!("{name}.txt")),
            canonical,
        )
        .expect("write level");
        spec
    }

    fn record(&self, name: &str, spec: &LevelSpec, seed: u64) -> Rec<'_> {
        let s =
            RecordSession::new(format!("levels/{name}.txt"), spec.clone(), seed).expect("session");
        Rec { b: self, s }
    }
}

impl Rec<'_> {
    fn act(&mut self, codes: &[u8]) -> &mut Self {
        for &c in codes {
            self.s
                .append(Action::from_code(u64::from(c)).expect("action code"));
        }
        self
    }

    fn ask(
        &mut self,
        probe_type: &str,
        category: Category,
        question: &str,
        query: Query,
    ) -> &mut Self {
        let req = PlantRequest {
            probe_type: probe_type.into(),
            question: question.into(),
            ground_truth: None,
            query: Some(query),
            category: Some(category),
        };
        let rec = self
            .s
            .plant(req, &self.b.registry)
            .unwrap_or_else(|e| panic!("{question}: {e}"));
        println!(
            "  step {:>2} {:<12} {} -> {}",
            rec.step, rec.probe_type, rec.question, rec.ground_truth
        );
        self
    }

    fn literal(&mut self, probe_type: &str, question: &str, truth: &str) -> &mut Self {
        let req = PlantRequest {
            probe_type: probe_type.into(),
            question: question.into(),
            ground_truth: Some(truth.into()),
            ..PlantRequest::default()
        };
        self.s.plant(req, &self.b.registry).expect("literal probe");
        self
    }

    fn next(&mut self, name: &str, spec: &LevelSpec, seed: u64) -> &mut Self {
        self.s
            .next_segment(format!("levels/{name}.txt"), spec.clone(), seed)
            .expect("segment");
        self
    }

    fn save(&mut self, file: &str) {
        let path = self.b.root.join("trajectories").join(file);
        self.s.finalize().save(&path).expect("save trajectory");
        println!("wrote {}", path.display());
    }
}

fn pat(kind: ObjectKind, color: Color) -> ObjectPattern {
    ObjectPattern::of(kind, color)
}

fn fov(kind: ObjectKind, color: Color) -> (ObjectPattern, Scope) {
    (pat(kind, color), Scope::Fov)
}

fn presence(t: (ObjectPattern, Scope)) -> Query {
    Query::Presence {
        target: t.0,
        scope: t.1,
    }
}

fn count(t: (ObjectPattern, Scope)) -> Query {
    Query::Count {
        target: t.0,
        scope: t.1,
    }
}

fn location(t: (ObjectPattern, Scope)) -> Query {
    Query::Location {
        target: t.0,
        scope: t.1,
    }
}

fn causal(script: &[Action], outcome: Outcome) -> Query {
    Query::Causal {
        script: script.to_vec(),
        outcome,
    }
}

use Action::*;
use Category::*;
use Color::*;
use ObjectKind::*;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(root.join("levels")).unwrap();
    fs::create_dir_all(root.join("trajectories")).unwrap();
    let b = Builder {
        root,
        registry: ProbeRegistry::with_builtins(),
    };

    // P1: four probes from the paper's example, asked again after waiting.
    let p1 = b.level("p1", P1);
    for seed in [42, 7, 3] {
        let mut r = b.record("p1", &p1, seed);
        for step in [0, 4] {
            if step > 0 {
                r.act(&[6, 6, 6, 6]);
            }
            r.ask(
                "presence",
                P,
                "Is there a green ball in your current field of view?",
                presence(fov(Ball, Green)),
            )
            .ask(
                "count",
                P,
                "How many blue balls do you see?",
                count(fov(Ball, Blue)),
            )
            .ask(
                "state",
                P,
                "What color is the ball at R1, ahead 2?",
                Query::State {
                    subject: Subject::Ego {
                        ahead: 2,
                        lateral: 1,
                    },
                    attribute: Attribute::Color,
                },
            )
            .ask(
                "location",
                P,
                "Where is the blue key relative to you?",
                location(fov(Key, Blue)),
            );
        }
        r.save(&format!("p1_s{seed}.json"));
    }

    let p2 = b.level("p2", P2);
    let mut r = b.record("p2", &p2, 1);
    r.ask(
        "count",
        P,
        "How many blue balls do you see?",
        count(fov(Ball, Blue)),
    )
    .ask(
        "location",
        P,
        "Where is the green key relative to you?",
        location(fov(Key, Green)),
    )
    .ask(
        "location",
        P,
        "Where is the yellow ball relative to you?",
        location(fov(Ball, Yellow)),
    )
    .act(&[6, 6, 6])
    .ask(
        "presence",
        P,
        "Is there a red ball in your current field of view?",
        presence(fov(Ball, Red)),
    )
    .ask(
        "location",
        P,
        "Where is the purple box relative to you?",
        location(fov(Box, Purple)),
    )
    .act(&[6, 6]);
    r.save("p2_s1.json");

    let p3 = b.level("p3", P3);
    // First three seeds that spawn the agent facing different ways.
    let mut facings = Vec::new();
    let seeds: Vec<u64> = (1..)
        .filter(|&s| {
            let f = gridprobe::level::init_world(&p3, s)
                .expect("p3")
                .agent()
                .facing;
            let new = !facings.contains(&f);
            facings.push(f);
            new
        })
        .take(3)
        .collect();
    for seed in seeds {
        let mut r = b.record("p3", &p3, seed);
        let room = |k, c| (pat(k, c), Scope::Room);
        r.ask(
            "location",
            P,
            "Where is the red ball relative to you?",
            location(room(Ball, Red)),
        )
        .ask(
            "location",
            P,
            "Where is the blue box relative to you?",
            location(room(Box, Blue)),
        )
        .act(&[6, 6, 6])
        .ask(
            "location",
            P,
            "Where is the green key relative to you?",
            location(room(Key, Green)),
        )
        .act(&[6]);
        r.save(&format!("p3_s{seed}.json"));
    }

    let m1 = b.level("m1", M1);
    let mut r = b.record("m1", &m1, 1);
    let yb = Subject::Object {
        pattern: pat(Ball, Yellow),
    };
    r.ask(
        "count",
        M,
        "How many balls are in your field of view?",
        count((ObjectPattern::kind(Ball), Scope::Fov)),
    );
    for _ in 0..3 {
        r.act(&[6, 6, 6])
            .ask(
                "location",
                M,
                "Where is the yellow ball relative to you?",
                location(fov(Ball, Yellow)),
            )
            .ask(
                "location",
                M,
                "Where is the red ball relative to you?",
                location(fov(Ball, Red)),
            )
            .ask(
                "state",
                M,
                "Is the yellow ball dry, wet or soaked?",
                Query::State {
                    subject: yb.clone(),
                    attribute: Attribute::Condition,
                },
            );
    }
    r.save("m1_s1.json");

    let m4 = b.level("m4", M4);
    let mut r = b.record("m4", &m4, 1);
    r.ask(
        "state",
        M,
        "Is the door to the north open, closed or locked?",
        Query::State {
            subject: Subject::Object {
                pattern: ObjectPattern::kind(Door),
            },
            attribute: Attribute::DoorState,
        },
    )
    .ask(
        "count",
        M,
        "How many keys do you see?",
        count((ObjectPattern::kind(Key), Scope::Fov)),
    )
    .ask(
        "state",
        M,
        "What color is the key on your left?",
        Query::State {
            subject: Subject::Cell {
                pos: Pos::new(2, 3),
            },
            attribute: Attribute::Color,
        },
    )
    .act(&[6, 6, 0, 0])
    .ask(
        "presence",
        M,
        "Is there a box in your current field of view?",
        presence((ObjectPattern::kind(Box), Scope::Fov)),
    )
    .ask(
        "presence",
        M,
        "When you started, was there a box in your field of view?",
        Query::Recall {
            step: 0,
            query: std::boxed::Box::new(presence((ObjectPattern::kind(Box), Scope::Fov))),
        },
    )
    .act(&[2, 6])
    .ask(
        "location",
        M,
        "Where is the blue box relative to you?",
        location(fov(Box, Blue)),
    );
    r.save("m4_s1.json");

    for (name, text) in [("c1a", C1A), ("c1b", C1B)] {
        let spec = b.level(name, text);
        let mut r = b.record(name, &spec, 1);
        r.ask(
            "causal",
            C,
            "If you move forward once, what state will the door at the end of this room be in?",
            causal(&[Forward], Outcome::DoorState { pos: Pos::new(6, 2) }),
        )
        .act(&[2, 0, 2])
        .ask("presence", P, "Is there a key in your current field of view?", presence((ObjectPattern::kind(Key), Scope::Fov)))
        .act(&[3, 2, 2, 2, 2])
        .ask(
            "causal",
            C,
            "If you turn around and step off this plate, what state will the door ahead of you be in?",
            causal(&[TurnLeft, TurnLeft, Forward], Outcome::DoorState { pos: Pos::new(9, 2) }),
        )
        .ask(
            "causal",
            C,
            "If you move forward twice, will you reach the goal?",
            causal(&[Forward, Forward], Outcome::AgentAt { pos: Pos::new(10, 2) }),
        )
        .act(&[2, 2]);
        r.save(&format!("{name}_s1.json"));
    }

    let c2 = b.level("c2", C2);
    let mut r = b.record("c2", &c2, 1);
    let fire = Outcome::Fire {
        pos: Pos::new(2, 2),
    };
    r.ask(
        "causal",
        C,
        "If you carry the red ball to the fire and drop it there, will the fire be burning or extinguished?",
        causal(&[TurnLeft, TurnLeft, Forward, Pickup, TurnLeft, Forward, Drop], Outcome::Fire { pos: Pos::new(3, 2) }),
    )
    .act(&[3])
    .ask(
        "state",
        C,
        "Is the ball you are carrying dry, wet or soaked?",
        Query::State { subject: Subject::Carried, attribute: Attribute::Condition },
    )
    .act(&[1, 2])
    .ask("causal", C, "If you drop the ball you carry onto the fire ahead, what happens to the fire?", causal(&[Drop], fire.clone()))
    .act(&[4])
    .ask("causal", C, "Is the fire directly ahead burning or extinguished right now?", causal(&[], fire))
    .act(&[3, 2, 2]);
    r.save("c2_s1.json");

    let c3 = b.level("c3", C3);
    let mut r = b.record("c3", &c3, 1);
    r.ask(
        "causal",
        C,
        "If you wait three turns, will the cell directly ahead be passable or blocked?",
        causal(
            &[Wait, Wait, Wait],
            Outcome::Passable {
                pos: Pos::new(3, 6),
            },
        ),
    )
    .ask(
        "causal",
        C,
        "If you move forward six times, will you reach the goal?",
        causal(
            &[Forward; 6],
            Outcome::AgentAt {
                pos: Pos::new(3, 1),
            },
        ),
    )
    .act(&[2, 2, 2])
    .ask(
        "causal",
        C,
        "Is the cell where you started passable or blocked right now?",
        causal(
            &[],
            Outcome::Passable {
                pos: Pos::new(3, 7),
            },
        ),
    )
    .act(&[2, 2, 2]);
    r.save("c3_s1.json");

    let c6 = b.level("c6", &c6());
    let mut r = b.record("c6", &c6, 42);
    let barrier = Outcome::Fire {
        pos: Pos::new(3, 6),
    };
    r.ask(
        "causal",
        C,
        "If you wait two turns, will the fire barrier be burning or extinguished?",
        causal(&[Wait, Wait], barrier.clone()),
    )
    .act(&[2, 2, 0, 2, 5, 6, 6, 6, 6, 6, 6, 6])
    .literal(
        "presence",
        "Is the fire barrier at row 6 currently passable?",
        "false",
    )
    .ask(
        "causal",
        C,
        "If you wait two more turns, will the fire barrier be burning or extinguished?",
        causal(&[Wait, Wait], barrier),
    )
    .act(&[6, 6, 1, 2, 1, 2, 2])
    .ask(
        "causal",
        C,
        "What state is the exit door in right now?",
        causal(
            &[],
            Outcome::DoorState {
                pos: Pos::new(10, 4),
            },
        ),
    )
    .act(&[0, 2, 2, 1, 2, 2, 2])
    .ask(
        "causal",
        C,
        "Have you reached the goal?",
        causal(
            &[],
            Outcome::AgentAt {
                pos: Pos::new(11, 4),
            },
        ),
    );
    r.save("c6_s42.json");

    let u1 = b.level("u1", U1);
    let mut r = b.record("u1", &u1, 1);
    r.ask(
        "presence",
        P,
        "Is there a notice board in your current field of view?",
        presence((ObjectPattern::kind(NoticeBoard), Scope::Fov)),
    )
    .ask(
        "uncertainty",
        U,
        "What is in the north-west corner of the north-west room right now?",
        Query::Uncertainty {
            fact: UncertainFact::CellContents {
                pos: Pos::new(1, 1),
            },
        },
    )
    .act(&[0, 0])
    .ask(
        "uncertainty",
        U,
        "Is there a purple ball in the south-east room right now?",
        Query::Uncertainty {
            fact: UncertainFact::RegionPresence {
                from: Pos::new(7, 7),
                to: Pos::new(9, 9),
                target: pat(Ball, Purple),
            },
        },
    )
    .ask(
        "uncertainty",
        U,
        "What is on the cell directly ahead of you right now?",
        Query::Uncertainty {
            fact: UncertainFact::CellContents {
                pos: Pos::new(5, 6),
            },
        },
    )
    .act(&[0, 0]);
    r.save("u1_s1.json");

    for (name, acc) in [("u2_high", "0.8"), ("u2_mid", "0.5"), ("u2_low", "0.2")] {
        let spec = b.level(name, &u2(&format!("{name}_oracle"), acc));
        let mut r = b.record(name, &spec, 1);
        let room = |k, c| (pat(k, c), Scope::Room);
        r.ask(
            "presence",
            U,
            "Is there a green box in this level?",
            presence(room(Box, Green)),
        )
        .ask(
            "presence",
            U,
            "Is there a red ball in this level?",
            presence(room(Ball, Red)),
        )
        .act(&[6, 6])
        .ask(
            "uncertainty",
            U,
            "What is directly behind the sealed door right now?",
            Query::Uncertainty {
                fact: UncertainFact::CellContents {
                    pos: Pos::new(4, 3),
                },
            },
        )
        .act(&[6]);
        r.save(&format!("{name}_s1.json"));
    }

    let xa = b.level("x1_a", X1_A);
    let xb = b.level("x1_b", X1_B);
    let xc = b.level("x1_c", X1_C);
    let mut r = b.record("x1_a", &xa, 5);
    r.ask(
        "count",
        P,
        "How many red balls do you see?",
        count(fov(Ball, Red)),
    )
    .act(&[3])
    .ask(
        "state",
        X,
        "What color is the key you carry?",
        Query::State {
            subject: Subject::Carried,
            attribute: Attribute::Color,
        },
    )
    .next("x1_b", &xb, 5)
    .ask(
        "count",
        X,
        "How many red balls have you seen so far on this tour?",
        Query::Seen {
            target: pat(Ball, Red),
        },
    )
    .act(&[6, 0, 0])
    .next("x1_c", &xc, 5)
    .ask(
        "presence",
        X,
        "Is there a yellow box in your current field of view?",
        presence(fov(Box, Yellow)),
    )
    .ask(
        "count",
        X,
        "How many boxes have you seen so far on this tour?",
        Query::Seen {
            target: ObjectPattern::kind(Box),
        },
    )
    .act(&[2, 2])
    .ask(
        "causal",
        X,
        "If you use the key you carry on the door ahead, what state will the door be in?",
        causal(
            &[Toggle],
            Outcome::DoorState {
                pos: Pos::new(3, 1),
            },
        ),
    )
    .act(&[5]);
    r.save("x1_s5.json");
}
