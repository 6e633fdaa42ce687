use std::fmt::Write as _;

use super::grid::push_testimony;
use super::*;

/// Object list: one line per visible object in row-major egocentric order,
/// then tiles, the carried item and testimony.
pub fn serialize_symbolic(obs: &Observation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header(obs));

    out.push_str("Objects in view:\n");
    let mut any = false;
    for (a, l, _, o) in obs.visible_objects() {
        let _ = writeln!(out, "- {} at {}", describe_with_state(o), ego_label(a, l));
        any = true;
    }
    if !any {
        out.push_str("- no objects visible\n");
    }

    let mut tiles = Vec::new();
    for (a, l, seen) in obs.visible() {
        for t in &seen.cell.overlays {
            tiles.push(format!("- {} at {}", describe_overlay(t), ego_label(a, l)));
        }
    }
    if !tiles.is_empty() {
        out.push_str("Tiles in view:\n");
        for t in tiles {
            let _ = writeln!(out, "{t}");
        }
    }
    if let Some(o) = obs.get(0, 0).and_then(|c| c.cell.object.as_ref()) {
        let _ = writeln!(out, "Standing on: {}", describe_with_state(o));
    }
    let _ = writeln!(
        out,
        "Carrying: {}",
        obs.carrying
            .as_ref()
            .map_or_else(|| "nothing".to_string(), describe_with_state)
    );
    push_testimony(&mut out, obs);
    out
}
