//! Model checking of bounded-until formulae over stochastic automata with
//! generally distributed clocks.
//!
//! Two deciding engines are provided: [`region`] unfolds the automaton into a
//! tree of clock-ordering classes and integrates the exact probability of each
//! branch with [`polyint`]; [`matrix`] discretises time into steps of `delta`
//! and pushes clock-bin probabilities forward. [`simulate`] samples paths and
//! serves as a statistical cross-check of both.

pub mod adversary;
pub mod automaton;
pub mod exec;
pub mod fixtures;
pub mod lexer;
pub mod logic;
pub mod matrix;
pub mod polyint;
pub mod rational;
pub mod region;
pub mod simulate;
