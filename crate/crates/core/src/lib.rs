//! Alarm specification, diagnosability analysis and diagnoser synthesis for
//! finite partially observable transition systems.

pub mod aslk;
pub mod epistemic;
pub mod expr;
pub mod gen;
pub mod kernel;
pub mod models;
pub mod pastltl;
pub mod sim;
pub mod symbol;
pub mod syntax;
pub mod synth;
pub mod verify;
