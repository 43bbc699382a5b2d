//! General game playing stack: a ludeme description language, a rules
//! engine, tensor encodings of states and moves, Monte-Carlo tree search,
//! a small policy/value network, self-play training and match evaluation.

pub mod codec;
pub mod dsl;
pub mod engine;
pub mod geometry;
pub mod harness;
pub mod nn;
pub mod player;
pub mod search;
pub mod training;

pub use player::Player;
