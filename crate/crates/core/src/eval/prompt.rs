//! Prompt templates. Changing any text here changes what models see, so
//! bump [`PROMPT_VERSION`] with it; every record carries the version.

use crate::probe::Probe;
use crate::view::{Observation, Serializer, ViewError};
use crate::world::Action;

use super::Message;

pub const PROMPT_VERSION: &str = "1";

pub const SYSTEM_STATIC: &str = "You are an agent in a grid world. You will be shown what you currently observe, \
then asked one question about it. Answer only from the information given. If the information given is not \
enough to answer, reply CANNOT_DETERMINE. End your reply with a final line of the form `ANSWER: <value>`.";

pub const SYSTEM_IN_NAV: &str = "You are riding along with an agent exploring a grid world. Each turn you see \
the action the agent took and what it observed afterwards. From time to time you will be asked a question \
about the world. Answer only from what you have observed. If your observations are not enough to answer, \
reply CANNOT_DETERMINE. End each answer with a final line of the form `ANSWER: <value>`.";

/// Stands in for a reply that never arrived, so the dialogue stays well formed.
pub const NO_REPLY: &str = "(no reply)";

/// Observation text for an isolated prompt: the current view, or the whole
/// history for the memory serializer.
pub fn render_static(serializer: Serializer, history: &[Observation]) -> Result<String, ViewError> {
    serializer.render(history)
}

pub fn ctrl_static(observation: &str, probe: &Probe) -> Vec<Message> {
    vec![
        Message::system(SYSTEM_STATIC),
        Message::user(format!(
            "{observation}\n\nQuestion: {}",
            probe.prompt_question()
        )),
    ]
}

/// Turns appended for one replay step. The first observation of a
/// segment arrives as a user turn on its own; later steps add the action as
/// an assistant turn followed by the new observation. The memory serializer
/// narrates only the latest transition, since the dialogue already holds
/// the rest.
pub fn in_nav_step(
    serializer: Serializer,
    history: &[Observation],
    action: Option<Action>,
) -> Result<Vec<Message>, ViewError> {
    let current = history.last().ok_or(ViewError::EmptyHistory)?;
    let window = match (serializer, action) {
        (Serializer::Memory, Some(_)) => &history[history.len().saturating_sub(2)..],
        _ => &history[history.len() - 1..],
    };
    let view = serializer.render(window)?;
    Ok(match action {
        None if current.segment == 0 => {
            vec![Message::user(format!("Initial observation:\n{view}"))]
        }
        None => vec![Message::user(format!(
            "You entered a new room. Observation:\n{view}"
        ))],
        Some(a) => vec![
            Message::assistant(format!("ACTION: {}", a.name())),
            Message::user(format!("Observation after step {}:\n{view}", current.step)),
        ],
    })
}

pub fn in_nav_question(probe: &Probe) -> String {
    format!("Question: {}", probe.prompt_question())
}
