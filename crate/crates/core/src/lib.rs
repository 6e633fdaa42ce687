//! Gridworld reference simulator with hallucination labels by construction.

pub mod eval;
pub mod level;
pub mod probe;
pub mod trajectory;
pub mod view;
pub mod world;
