//! Print the first observation of a trajectory in every serializer.
//!
//! `cargo run --example show_observation -- fixtures/trajectories/p1_s42.json`

use std::path::PathBuf;

use gridprobe::probe::ProbeRegistry;
use gridprobe::trajectory::{replay, LevelLibrary, Trajectory};
use gridprobe::view::Serializer;

fn main() {
    let path = PathBuf::from(
        std::env::args()
            .nth(1)
            .expect("usage: show_observation <trajectory.json> [step]"),
    );
    let step: u64 = std::env::args()
        .nth(2)
        .map_or(0, |s| s.parse().expect("step is an integer"));
    let traj = Trajectory::load(&path).expect("trajectory loads");
    let levels = LevelLibrary::for_trajectory(&path);
    replay(&traj, &levels, &ProbeRegistry::with_builtins(), |s| {
        if s.segment == 0 && s.step == step {
            for ser in [Serializer::Symbolic, Serializer::Grid] {
                println!(
                    "== {ser}\n{}",
                    ser.render(&s.history[s.history.len() - 1..]).unwrap()
                );
            }
        }
    })
    .expect("trajectory replays");
}
