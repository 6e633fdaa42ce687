//! Brute-force mechanics oracles. Each builds a small random world from a
//! seed, then steps it while recomputing the expected state with its own
//! model of the rule under test. Any mismatch is returned as a message.

use gridprobe::world::{
    Action, Color, Condition, Direction, DoorState, ObjectKind, PlateEffect, Pos, Pose,
    TileOverlay, World, WorldObject,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Oracle = fn(u64) -> Result<(), String>;

pub const ALL: [(&str, Oracle); 5] = [
    ("river displacement", river_displacement),
    ("flood passability", flood_passability),
    ("wetness decay", wetness_decay),
    ("plate relock", plate_relock),
    ("flood on fire", flood_on_fire),
];

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn offset(p: Pos, dir: Direction, n: i64) -> Option<Pos> {
    let (dc, dr) = dir.delta();
    p.offset(dc * n, dr * n)
}

fn fire_on(w: &World, p: Pos) -> Option<bool> {
    w.cell(p)?.overlays.iter().find_map(|o| match o {
        TileOverlay::Fire { active } => Some(*active),
        _ => None,
    })
}

fn wall_at(w: usize, h: usize, extra: &[Pos], p: Pos) -> bool {
    p.col == 0 || p.row == 0 || p.col + 1 >= w || p.row + 1 >= h || extra.contains(&p)
}

/// A straight river with a random direction, speed and length carries one
/// ball. It may be cut short by a wall. Until something stops it the ball
/// sits at start + t * speed * dir.
pub fn river_displacement(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (rng.random_range(6..16), rng.random_range(6..16));
    let dir = *Direction::ALL.choose(&mut rng).unwrap();
    let speed = rng.random_range(1..4u32);
    let horizontal = matches!(dir, Direction::East | Direction::West);
    let (span, across) = if horizontal { (w, h) } else { (h, w) };
    let lane = rng.random_range(2..across - 1);
    let at = |i: usize| {
        if horizontal {
            Pos::new(i, lane)
        } else {
            Pos::new(lane, i)
        }
    };
    let river: Vec<Pos> = (1..span - 1).map(at).collect();
    let blocker = rng
        .random_bool(0.5)
        .then(|| *river.choose(&mut rng).unwrap());
    let start = **river
        .iter()
        .filter(|p| Some(**p) != blocker)
        .collect::<Vec<_>>()
        .choose(&mut rng)
        .unwrap();
    let agent = Pos::new(1, 1);

    let mut world = World::empty(w, h, Pose::new(agent, Direction::South)).with_soak_duration(2);
    let mut walls = Vec::new();
    if let Some(b) = blocker {
        world.set_wall(b).map_err(|e| e.to_string())?;
        walls.push(b);
    }
    for &p in &river {
        if Some(p) != blocker {
            world
                .add_overlay(
                    p,
                    TileOverlay::River {
                        direction: dir,
                        speed,
                    },
                )
                .map_err(|e| e.to_string())?;
        }
    }
    let on_river = |p: Pos| river.contains(&p) && Some(p) != blocker;
    world
        .place_object(start, WorldObject::new(ObjectKind::Ball, Color::Red))
        .map_err(|e| e.to_string())?;
    let mut world = world.finish().map_err(|e| e.to_string())?;

    let mut pos = start;
    let mut free = true;
    for t in 1..=20i64 {
        world.step(Action::Wait);
        if on_river(pos) {
            for _ in 0..speed {
                if !on_river(pos) {
                    break;
                }
                match offset(pos, dir, 1) {
                    Some(n) if !wall_at(w, h, &walls, n) && n != agent => pos = n,
                    _ => {
                        free = false;
                        break;
                    }
                }
            }
        }
        let (actual, obj) = world.objects().next().ok_or("ball vanished")?;
        ensure!(
            actual == pos,
            "seed {seed} t={t}: ball at {actual}, expected {pos}"
        );
        if free {
            let closed = offset(start, dir, t * speed as i64);
            ensure!(
                closed == Some(pos),
                "seed {seed} t={t}: {pos} is not start + t*s*dir"
            );
        }
        ensure!(
            obj.is_wet() && obj.wet_turns_remaining == 2,
            "seed {seed} t={t}: ball on river is not fully wet"
        );
    }
    Ok(())
}

/// Random flood tiles with random rise steps, and an agent walking at
/// random. Water blocks a cell exactly from its rise step, and the agent
/// never walks into it.
pub fn flood_passability(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (rng.random_range(5..12), rng.random_range(5..12));
    let agent = Pos::new(rng.random_range(1..w - 1), rng.random_range(1..h - 1));
    let mut world = World::empty(w, h, Pose::new(agent, Direction::North));
    let mut floods = Vec::new();
    for _ in 0..rng.random_range(1..10) {
        let p = Pos::new(rng.random_range(1..w - 1), rng.random_range(1..h - 1));
        if p == agent || floods.iter().any(|&(q, _)| q == p) {
            continue;
        }
        let rise = rng.random_range(0..25u64);
        world
            .add_overlay(
                p,
                TileOverlay::Flood {
                    rise_step: rise,
                    active: false,
                    spent: false,
                },
            )
            .map_err(|e| e.to_string())?;
        floods.push((p, rise));
    }
    let mut world = world.finish().map_err(|e| e.to_string())?;
    let (mut pose_pos, mut facing) = (agent, Direction::North);
    for t in 0..30u64 {
        if t > 0 {
            let a = *[
                Action::Forward,
                Action::Forward,
                Action::TurnLeft,
                Action::TurnRight,
                Action::Wait,
            ]
            .choose(&mut rng)
            .unwrap();
            world.step(a);
            match a {
                Action::TurnLeft => facing = facing.turn_left(),
                Action::TurnRight => facing = facing.turn_right(),
                Action::Forward => {
                    let next = pose_pos.step(facing).filter(|&n| !wall_at(w, h, &[], n));
                    // The move is judged against water as it stood before the tick.
                    let wet = |n: Pos| floods.iter().any(|&(q, r)| q == n && t > r);
                    if let Some(n) = next.filter(|&n| !wet(n)) {
                        pose_pos = n;
                    }
                }
                _ => {}
            }
        }
        ensure!(
            world.agent().pos() == pose_pos,
            "seed {seed} t={t}: agent at {}, expected {pose_pos}",
            world.agent().pos()
        );
        for &(p, rise) in &floods {
            let cell = world.cell(p).unwrap();
            ensure!(
                cell.flooded() == (t >= rise),
                "seed {seed} t={t}: flood at {p} rise {rise}"
            );
            ensure!(
                world.passable(p) == (t < rise),
                "seed {seed} t={t}: passable at {p} rise {rise}"
            );
        }
    }
    Ok(())
}

/// Balls on a river stay at the full soak count; off the river they lose
/// exactly one turn per step and dry at zero. A river feeding onto dry floor
/// shows both phases on one ball; a carried ball shows decay alone.
pub fn wetness_decay(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.random_range(8..16);
    let h = rng.random_range(5..9);
    let soak = rng.random_range(1..6u32);
    let row = h - 2;
    let river_end = rng.random_range(2..w - 3);
    let mut world =
        World::empty(w, h, Pose::new(Pos::new(1, 1), Direction::North)).with_soak_duration(soak);
    for col in 1..=river_end {
        world
            .add_overlay(
                Pos::new(col, row),
                TileOverlay::River {
                    direction: Direction::East,
                    speed: 1,
                },
            )
            .map_err(|e| e.to_string())?;
    }
    let start = rng.random_range(1..=river_end);
    world
        .place_object(
            Pos::new(start, row),
            WorldObject::new(ObjectKind::Ball, Color::Blue),
        )
        .map_err(|e| e.to_string())?;

    let mut carried = WorldObject::new(ObjectKind::Ball, Color::Green);
    let carried_turns = rng.random_range(0..8u32);
    if carried_turns > 0 {
        carried.condition = if rng.random_bool(0.5) {
            Condition::Soaked
        } else {
            Condition::Wet
        };
        carried.wet_turns_remaining = carried_turns;
    }
    world.set_inventory(Some(carried));
    let mut world = world.finish().map_err(|e| e.to_string())?;

    let mut col = start;
    let mut turns = 0u32;
    let mut held = carried_turns;
    for t in 1..=25u32 {
        world.step(Action::Wait);
        if col <= river_end {
            col += 1;
        }
        if col <= river_end {
            turns = soak;
        } else {
            turns = turns.saturating_sub(1);
        }
        held = held.saturating_sub(1);
        let obj = world
            .object_at(Pos::new(col, row))
            .ok_or(format!("seed {seed} t={t}: ball not at col {col}"))?;
        ensure!(
            obj.wet_turns_remaining == turns,
            "seed {seed} t={t}: turns {} expected {turns}",
            obj.wet_turns_remaining
        );
        ensure!(
            (obj.condition == Condition::Dry) == (turns == 0),
            "seed {seed} t={t}: condition {:?}",
            obj.condition
        );
        let inv = world.inventory().ok_or("inventory emptied")?;
        ensure!(
            inv.wet_turns_remaining == held,
            "seed {seed} t={t}: carried turns {} expected {held}",
            inv.wet_turns_remaining
        );
        ensure!(
            (inv.condition == Condition::Dry) == (held == 0),
            "seed {seed} t={t}: carried condition"
        );
    }
    Ok(())
}

/// An agent wandering a corridor over a plate. Continuous plates hold the
/// door open only while weighted; trigger plates latch it open. Toggling a
/// gated door does nothing. Odd seeds use a trigger plate.
pub fn plate_relock(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.random_range(7..16);
    let door = Pos::new(w - 2, 1);
    let plate = Pos::new(rng.random_range(2..door.col), 1);
    let rest = if rng.random_bool(0.5) {
        DoorState::Locked
    } else {
        DoorState::Closed
    };
    let effect = if seed % 2 == 1 {
        PlateEffect::Trigger
    } else {
        PlateEffect::Continuous
    };
    let mut world = World::empty(w, 3, Pose::new(Pos::new(1, 1), Direction::East));
    world
        .place_object(door, WorldObject::door(Color::Purple, rest))
        .map_err(|e| e.to_string())?;
    world
        .add_overlay(
            plate,
            TileOverlay::PressurePlate {
                effect,
                link: door,
                fired: false,
            },
        )
        .map_err(|e| e.to_string())?;
    let mut world = world.finish().map_err(|e| e.to_string())?;

    let (mut pos, mut facing) = (Pos::new(1, 1), Direction::East);
    let mut latched = false;
    for t in 1..=60 {
        let a = *[
            Action::Forward,
            Action::Forward,
            Action::Forward,
            Action::TurnLeft,
            Action::Toggle,
            Action::Wait,
        ]
        .choose(&mut rng)
        .unwrap();
        let open_before = match effect {
            PlateEffect::Trigger => latched,
            PlateEffect::Continuous => pos == plate,
        };
        world.step(a);
        match a {
            Action::TurnLeft => facing = facing.turn_left(),
            Action::Forward => {
                if let Some(n) = pos.step(facing).filter(|&n| !wall_at(w, 3, &[], n)) {
                    if n != door || open_before {
                        pos = n;
                    }
                }
            }
            _ => {}
        }
        latched |= pos == plate;
        let open = match effect {
            PlateEffect::Trigger => latched,
            PlateEffect::Continuous => pos == plate || pos == door,
        };
        ensure!(
            world.agent().pos() == pos,
            "seed {seed} t={t}: agent at {}, expected {pos}",
            world.agent().pos()
        );
        let state = world
            .object_at(door)
            .and_then(|o| o.door_state)
            .ok_or("door vanished")?;
        let expect = if open { DoorState::Open } else { rest };
        ensure!(
            state == expect,
            "seed {seed} t={t} {effect:?}: door {state:?}, expected {expect:?}"
        );
    }
    Ok(())
}

/// Fire tiles, some with floods underneath at random rise steps. A fire
/// burns until its flood rises, then is out for good; the water is used up
/// quenching it and never blocks that cell. Fires with no flood never go out.
pub fn flood_on_fire(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (rng.random_range(5..12), rng.random_range(5..12));
    let mut world = World::empty(w, h, Pose::new(Pos::new(1, 1), Direction::East));
    let mut fires: Vec<(Pos, Option<u64>)> = Vec::new();
    for _ in 0..rng.random_range(1..8) {
        let p = Pos::new(rng.random_range(1..w - 1), rng.random_range(2..h - 1));
        if fires.iter().any(|&(q, _)| q == p) {
            continue;
        }
        world
            .add_overlay(p, TileOverlay::Fire { active: true })
            .map_err(|e| e.to_string())?;
        let rise = rng.random_bool(0.75).then(|| rng.random_range(0..20u64));
        if let Some(r) = rise {
            world
                .add_overlay(
                    p,
                    TileOverlay::Flood {
                        rise_step: r,
                        active: false,
                        spent: false,
                    },
                )
                .map_err(|e| e.to_string())?;
        }
        fires.push((p, rise));
    }
    let mut world = world.finish().map_err(|e| e.to_string())?;
    for t in 0..25u64 {
        if t > 0 {
            world.step(Action::Wait);
        }
        for &(p, rise) in &fires {
            let burning = rise.is_none_or(|r| t < r);
            ensure!(
                fire_on(&world, p) == Some(burning),
                "seed {seed} t={t}: fire at {p} rise {rise:?}"
            );
            ensure!(
                !world.cell(p).unwrap().flooded(),
                "seed {seed} t={t}: water stands on fire cell {p}"
            );
            ensure!(
                world.passable(p) == !burning,
                "seed {seed} t={t}: passable at {p}"
            );
        }
    }
    Ok(())
}
