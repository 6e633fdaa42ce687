use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::*;

/// Narrative of the history followed by the current observation in symbolic
/// and grid form. A single observation renders as symbolic + grid with no
/// narrative.
pub fn serialize_memory(history: &[Observation]) -> Result<String, ViewError> {
    let current = history.last().ok_or(ViewError::EmptyHistory)?;
    let mut out = String::new();
    if history.len() > 1 {
        out.push_str("History:\n");
        for (i, obs) in history.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| &history[j]);
            for line in narrate(prev, obs) {
                let _ = writeln!(out, "{line}");
            }
        }
        out.push_str("Current observation:\n");
    }
    out.push_str(&serialize_symbolic(current));
    out.push('\n');
    out.push_str(&serialize_grid(current));
    Ok(out)
}

fn narrate(prev: Option<&Observation>, obs: &Observation) -> Vec<String> {
    let mut lines = Vec::new();
    let new_room = prev.is_none_or(|p| p.segment != obs.segment || p.level_id != obs.level_id);
    let facing = obs.pose.facing;
    let sentence = if new_room {
        if prev.is_some() {
            lines.push(format!(
                "Step {}: You entered a new room ({}).",
                obs.step, obs.level_id
            ));
        }
        format!("You are in {} facing {facing}.", obs.level_id)
    } else {
        match &obs.last_event {
            Some(ev) => event_sentence(ev, facing),
            None => "Nothing happened.".into(),
        }
    };
    lines.push(format!(
        "Step {}: {sentence} In view: {}.",
        obs.step,
        in_view_summary(obs)
    ));
    lines
}

/// One fixed template per event type.
pub fn event_sentence(ev: &StepEvent, facing: crate::world::Direction) -> String {
    match ev {
        StepEvent::Turned { left, facing } => {
            format!(
                "You turned {} and now face {facing}.",
                if *left { "left" } else { "right" }
            )
        }
        StepEvent::Moved => format!("You moved one step {facing}."),
        StepEvent::Blocked { by: Some(by) } => {
            format!("You tried to move {facing} but a {by} blocked the way.")
        }
        StepEvent::Blocked { by: None } => {
            format!("You tried to move {facing} but the way was blocked.")
        }
        StepEvent::Pushed { object } => format!("You pushed the {object} {facing}."),
        StepEvent::PushBlocked { object } => {
            format!("You tried to push the {object} but it did not move.")
        }
        StepEvent::PickedUp { object } => format!("You picked up the {object}."),
        StepEvent::PickupFailed => "You tried to pick something up but could not.".into(),
        StepEvent::Dropped { object } => format!("You dropped the {object}."),
        StepEvent::DropFailed => "You tried to drop something but could not.".into(),
        StepEvent::Toggled { object, state } => {
            format!("You toggled the {object}; it is now {}.", state.as_str())
        }
        StepEvent::ToggleFailed {
            object: Some(object),
        } => {
            format!("You tried to toggle the {object} but nothing happened.")
        }
        StepEvent::ToggleFailed { object: None } => {
            "You tried to toggle but there was nothing there.".into()
        }
        StepEvent::Waited => "You waited.".into(),
    }
}

/// `blue ball x14, green ball x1`, sorted by name.
fn in_view_summary(obs: &Observation) -> String {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (_, _, _, o) in obs.visible_objects() {
        *counts.entry(o.describe()).or_default() += 1;
    }
    if counts.is_empty() {
        return "nothing".into();
    }
    counts
        .into_iter()
        .map(|(k, n)| format!("{k} x{n}"))
        .collect::<Vec<_>>()
        .join(", ")
}
