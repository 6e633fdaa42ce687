mod common;

use std::collections::BTreeMap;

use gridprobe::probe::ProbeRegistry;
use gridprobe::trajectory::replay;
use gridprobe::view::{observe, serialize_grid, serialize_symbolic, Observation, ViewConfig};
use gridprobe::world::{
    Color, Direction, DoorState, ObjectKind, Pos, Pose, TileOverlay, World, WorldObject,
};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Everything placed in a random world, in absolute coordinates, so the
/// same layout can be built at any rotation.
struct Layout {
    w: usize,
    h: usize,
    walls: Vec<Pos>,
    objects: Vec<(Pos, WorldObject)>,
    tiles: Vec<(Pos, TileOverlay)>,
    agent: Pos,
    facing: Direction,
}

fn random_layout(seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (rng.random_range(5..13), rng.random_range(5..13));
    let mut free: Vec<Pos> = (1..h - 1)
        .flat_map(|r| (1..w - 1).map(move |c| Pos::new(c, r)))
        .collect();
    let take = |rng: &mut ChaCha8Rng, free: &mut Vec<Pos>| {
        free.swap_remove(rng.random_range(0..free.len()))
    };
    let agent = take(&mut rng, &mut free);
    let mut walls = Vec::new();
    let mut objects = Vec::new();
    let mut tiles = Vec::new();
    for _ in 0..rng.random_range(0..free.len() / 2) {
        let p = take(&mut rng, &mut free);
        match rng.random_range(0..6) {
            0 | 1 => walls.push(p),
            2 => {
                let state =
                    [DoorState::Open, DoorState::Closed, DoorState::Locked][rng.random_range(0..3)];
                objects.push((
                    p,
                    WorldObject::door(*Color::ALL.choose(&mut rng).unwrap(), state),
                ));
            }
            3 => {
                let kind = [
                    ObjectKind::Ball,
                    ObjectKind::Key,
                    ObjectKind::Box,
                    ObjectKind::Boulder,
                    ObjectKind::Goal,
                ][rng.random_range(0..5)];
                objects.push((
                    p,
                    WorldObject::new(kind, *Color::ALL.choose(&mut rng).unwrap()),
                ));
            }
            4 => tiles.push((p, TileOverlay::DarkZone)),
            _ => tiles.push((
                p,
                TileOverlay::Fire {
                    active: rng.random_bool(0.5),
                },
            )),
        }
    }
    Layout {
        w,
        h,
        walls,
        objects,
        tiles,
        agent,
        facing: *Direction::ALL.choose(&mut rng).unwrap(),
    }
}

/// Build the layout turned clockwise `quarters` times.
fn build(l: &Layout, quarters: usize) -> World {
    let (mut w, mut h) = (l.w, l.h);
    let mut map: Box<dyn Fn(Pos) -> Pos> = Box::new(|p| p);
    let mut facing = l.facing;
    for _ in 0..quarters {
        let hh = h;
        map = Box::new(move |p| {
            let q = map(p);
            Pos::new(hh - 1 - q.row, q.col)
        });
        std::mem::swap(&mut w, &mut h);
        facing = facing.turn_right();
    }
    let mut world = World::empty(w, h, Pose::new(map(l.agent), facing));
    for &p in &l.walls {
        world.set_wall(map(p)).unwrap();
    }
    for (p, o) in &l.objects {
        world.place_object(map(*p), o.clone()).unwrap();
    }
    for (p, t) in &l.tiles {
        world.add_overlay(map(*p), t.clone()).unwrap();
    }
    world.finish().unwrap()
}

fn cfg(seed: u64) -> ViewConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    ViewConfig {
        depth: rng.random_range(1..9),
        width: 2 * rng.random_range(0..5) + 1,
        see_through_walls: rng.random_bool(0.3),
    }
}

fn opaque(obs: &Observation, a: i64, l: i64) -> bool {
    let Some(seen) = obs.get(a, l) else {
        return true;
    };
    let c = &seen.cell;
    c.is_dark()
        || (!obs.config.see_through_walls
            && (c.is_wall()
                || c.object.as_ref().is_some_and(|o| {
                    o.kind == ObjectKind::Door && o.door_state != Some(DoorState::Open)
                })))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Turning the whole world and the agent together leaves the egocentric
    /// view unchanged.
    #[test]
    fn view_is_rotation_invariant(seed in any::<u64>(), quarters in 1usize..4) {
        let layout = random_layout(seed);
        let cfg = cfg(seed);
        let base = observe(&build(&layout, 0), cfg);
        let turned = observe(&build(&layout, quarters), cfg);
        let half = cfg.half();
        for a in 0..cfg.depth as i64 {
            for l in -half..=half {
                let x = base.get(a, l).map(|s| &s.cell);
                let y = turned.get(a, l).map(|s| &s.cell);
                prop_assert_eq!(x, y, "ahead {} lateral {}", a, l);
            }
        }
        // Only the absolute heading in the header line differs.
        let body = |t: String| t.lines().skip(1).collect::<Vec<_>>().join("\n");
        prop_assert_eq!(body(serialize_symbolic(&base)), body(serialize_symbolic(&turned)));
        prop_assert_eq!(body(serialize_grid(&base)), body(serialize_grid(&turned)));
    }

    /// Each visible cell maps to the absolute cell given by the facing.
    #[test]
    fn egocentric_indexing(seed in any::<u64>()) {
        let layout = random_layout(seed);
        let world = build(&layout, 0);
        let obs = observe(&world, cfg(seed));
        let (c, r) = (layout.agent.col as i64, layout.agent.row as i64);
        for (a, l, seen) in obs.visible() {
            let (ec, er) = match layout.facing {
                Direction::North => (c + l, r - a),
                Direction::East => (c + a, r + l),
                Direction::South => (c - l, r + a),
                Direction::West => (c - a, r - l),
            };
            prop_assert_eq!(seen.pos, Pos::new(ec as usize, er as usize));
            prop_assert_eq!(&seen.cell, world.cell(seen.pos).unwrap());
        }
    }

    /// Nothing is seen without a line of transparent cells back to the agent,
    /// and dark cells are never shown.
    #[test]
    fn occlusion_soundness(seed in any::<u64>()) {
        let layout = random_layout(seed);
        let obs = observe(&build(&layout, 0), cfg(seed));
        prop_assert!(obs.get(0, 0).is_some());
        for (a, l, seen) in obs.visible() {
            if (a, l) == (0, 0) {
                continue;
            }
            prop_assert!(!seen.cell.is_dark());
            let preds = [(a, l - 1), (a, l + 1), (a - 1, l - 1), (a - 1, l), (a - 1, l + 1)];
            let lit = preds.iter().any(|&(pa, pl)| {
                pa >= 0 && obs.get(pa, pl).is_some() && ((pa, pl) == (0, 0) || !opaque(&obs, pa, pl))
            });
            prop_assert!(lit, "ahead {} lateral {} seen with no clear neighbour", a, l);
        }
    }

    /// In a walled room with nothing inside, every in-bounds cell of the
    /// view rectangle is visible.
    #[test]
    fn open_room_is_fully_visible(w in 5usize..14, h in 5usize..14, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = Pos::new(rng.random_range(1..w - 1), rng.random_range(1..h - 1));
        let facing = *Direction::ALL.choose(&mut rng).unwrap();
        let world = World::empty(w, h, Pose::new(agent, facing)).finish().unwrap();
        let cfg = ViewConfig { see_through_walls: false, ..cfg(seed) };
        let obs = observe(&world, cfg);
        let half = cfg.half();
        for a in 0..cfg.depth as i64 {
            for l in -half..=half {
                let p = Pose::new(agent, facing).ego_to_abs(a, l).filter(|p| p.col < w && p.row < h);
                let interior = p.is_some_and(|p| p.col > 0 && p.row > 0 && p.col < w - 1 && p.row < h - 1);
                if interior {
                    prop_assert!(obs.get(a, l).is_some(), "ahead {} lateral {}", a, l);
                }
            }
        }
    }
}

/// Object codes in the grid table, agent cell and unknowns excluded.
fn grid_objects(text: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| l.starts_with("ahead ")) {
        for code in line.split_whitespace().skip(2) {
            let mut ch = code.chars();
            let (c, k) = (ch.next().unwrap(), ch.next().unwrap());
            if Color::from_code(c).is_some() && ObjectKind::from_code(k).is_some() {
                *out.entry(code.to_string()).or_default() += 1;
            }
        }
    }
    out
}

/// Object codes named in the symbolic object list.
fn symbolic_objects(text: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    let section = text.split("Objects in view:\n").nth(1).unwrap();
    for line in section.lines().take_while(|l| l.starts_with("- ")) {
        let name = line[2..].split(" at (").next().unwrap();
        let name = name.split(" (").next().unwrap();
        if name == "no objects visible" {
            continue;
        }
        let (color, kind) = name.split_once(' ').unwrap();
        let code = format!(
            "{}{}",
            Color::from_name(color).unwrap().code(),
            ObjectKind::from_name(kind).unwrap().code()
        );
        *out.entry(code).or_default() += 1;
    }
    out
}

#[test]
fn grid_and_symbolic_list_the_same_objects() {
    let reg = ProbeRegistry::with_builtins();
    let mut checked = 0;
    for (id, t, lib) in common::trajectories() {
        replay(&t, &lib, &reg, |s| {
            let obs = s.history.last().unwrap();
            let g = grid_objects(&serialize_grid(obs));
            let y = symbolic_objects(&serialize_symbolic(obs));
            assert_eq!(g, y, "{id} step {}", s.step);
            checked += 1;
        })
        .unwrap();
    }
    assert!(checked > 100);
}

#[test]
fn dense_array_view_holds_fourteen_blue_balls() {
    let (t, lib) = common::trajectory("p1_s42");
    let reg = ProbeRegistry::with_builtins();
    let mut first = None;
    replay(&t, &lib, &reg, |s| {
        if s.step == 0 {
            first = Some(s.history[0].clone());
        }
    })
    .unwrap();
    let obs = first.unwrap();
    let sym = serialize_symbolic(&obs);
    assert_eq!(
        sym.lines()
            .filter(|l| l.starts_with("- blue ball at "))
            .count(),
        14
    );
    let grid = serialize_grid(&obs);
    let rows: Vec<&str> = grid.lines().filter(|l| l.starts_with("ahead ")).collect();
    assert_eq!(rows.len(), 8);
    for (a, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(cols[1], a.to_string());
        assert_eq!(cols.len(), 2 + 13);
        assert!(cols[2..].iter().all(|c| c.len() == 2));
    }
    assert_eq!(grid_objects(&grid)["bB"], 14);
    assert!(grid
        .lines()
        .nth(1)
        .unwrap()
        .trim_start()
        .starts_with("L6 L5"));
}
