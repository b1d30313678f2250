//! Plan-safety toolkit built around finite-trace LTL.

pub mod automaton;
pub mod datagen;
pub mod decoding;
pub mod environment;
pub mod evaluation;
pub mod ltl;
pub mod oracle;
pub mod voting;
