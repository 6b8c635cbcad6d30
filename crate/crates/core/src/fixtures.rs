//! The packet-producer example models and the benevolent policy, shipped for tests,
//! benches and the CLI.

use crate::adversary::{load_policy, StaticPolicy};
use crate::automaton::{parse_automaton, StochasticAutomaton};

pub const PACKET_MODEL: &str = include_str!("../fixtures/packet.sa");
pub const PACKET_SHIFTED_MODEL: &str = include_str!("../fixtures/packet_shifted.sa");
pub const BENEVOLENT_POLICY: &str = include_str!("../fixtures/benevolent.pol");

/// Clocks on `[0,1]`: `x` with CDF `2t - t^2`, `y` with `t^2`, `z` uniform.
pub fn packet_producer() -> StochasticAutomaton {
    parse_automaton(PACKET_MODEL).expect("bundled model parses")
}

/// The same automaton with every distribution shifted right by 1/2.
pub fn packet_shifted() -> StochasticAutomaton {
    parse_automaton(PACKET_SHIFTED_MODEL).expect("bundled model parses")
}

/// Chooses `conc` over `tryagain` when `x` expires in `s0`.
pub fn benevolent() -> StaticPolicy {
    load_policy(BENEVOLENT_POLICY).expect("bundled policy parses")
}
