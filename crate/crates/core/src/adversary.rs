//! Resolution of the choice between several edges triggered by the same clock.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::automaton::{ClockId, Edge, LocationId, StochasticAutomaton};
use crate::lexer::{Cursor, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("no policy entry for location `{location}` and clock `{clock}`")]
    MissingPolicy { location: String, clock: String },
    #[error("policy picks `{action}` at `{location}` but no such edge is triggered by `{clock}`")]
    UnavailableAction { location: String, clock: String, action: String },
    #[error("conflicting policy entries for location `{location}` and clock `{clock}`: `{first}` and `{second}`")]
    ConflictingPolicy { location: String, clock: String, first: String, second: String },
    #[error("no candidate edges at `{0}`")]
    NoCandidates(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Chooses one edge among `candidates`, all leaving `current` and triggered by `expiring`.
pub trait Adversary: Send + Sync {
    fn resolve<'e>(
        &self,
        sa: &StochasticAutomaton,
        history: &[LocationId],
        current: LocationId,
        expiring: ClockId,
        candidates: &[&'e Edge],
    ) -> Result<&'e Edge, AdversaryError>;

    /// True when the choice never depends on `history`.
    fn is_memoryless(&self) -> bool;

    fn name(&self) -> String;
}

/// Memoryless map `(location, clock) -> action`, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticPolicy {
    entries: BTreeMap<(String, String), String>,
}

impl StaticPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, location: &str, clock: &str, action: &str) -> Result<(), AdversaryError> {
        let key = (location.to_string(), clock.to_string());
        if let Some(prev) = self.entries.get(&key) {
            if prev != action {
                return Err(AdversaryError::ConflictingPolicy {
                    location: key.0,
                    clock: key.1,
                    first: prev.clone(),
                    second: action.to_string(),
                });
            }
        }
        self.entries.insert(key, action.to_string());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, location: &str, clock: &str) -> Option<&str> {
        self.entries
            .get(&(location.to_string(), clock.to_string()))
            .map(String::as_str)
    }
}

impl Adversary for StaticPolicy {
    fn resolve<'e>(
        &self,
        sa: &StochasticAutomaton,
        _history: &[LocationId],
        current: LocationId,
        expiring: ClockId,
        candidates: &[&'e Edge],
    ) -> Result<&'e Edge, AdversaryError> {
        let location = &sa.location(current).name;
        let clock = &sa.clock(expiring).name;
        match (candidates, self.get(location, clock)) {
            ([], _) => Err(AdversaryError::NoCandidates(location.clone())),
            ([only], None) => Ok(only),
            (_, None) => Err(AdversaryError::MissingPolicy { location: location.clone(), clock: clock.clone() }),
            (_, Some(action)) => candidates
                .iter()
                .find(|e| e.action == action)
                .copied()
                .ok_or_else(|| AdversaryError::UnavailableAction {
                    location: location.clone(),
                    clock: clock.clone(),
                    action: action.to_string(),
                }),
        }
    }

    fn is_memoryless(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "static-policy".into()
    }
}

/// Picks the candidate whose action name sorts first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FirstEdge;

impl Adversary for FirstEdge {
    fn resolve<'e>(
        &self,
        sa: &StochasticAutomaton,
        _history: &[LocationId],
        current: LocationId,
        _expiring: ClockId,
        candidates: &[&'e Edge],
    ) -> Result<&'e Edge, AdversaryError> {
        candidates
            .iter()
            .min_by(|a, b| a.action.cmp(&b.action))
            .copied()
            .ok_or_else(|| AdversaryError::NoCandidates(sa.location(current).name.clone()))
    }

    fn is_memoryless(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "first-edge".into()
    }
}

/// Parses `<location> <clock> -> <action>` lines (`#` comments allowed).
pub fn load_policy(text: &str) -> Result<StaticPolicy, AdversaryError> {
    let mut cur = Cursor::new(text)?;
    let mut policy = StaticPolicy::new();
    while !cur.at_end() {
        let location = cur.expect_ident()?;
        let clock = cur.expect_ident()?;
        cur.expect_sym("->")?;
        let action = cur.expect_ident()?;
        policy.insert(&location, &clock, &action)?;
    }
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn edges_of<'a>(sa: &'a StochasticAutomaton, loc: &str, clock: &str) -> (LocationId, ClockId, Vec<&'a Edge>) {
        let l = sa.location_named(loc).unwrap();
        let c = sa.clock_named(clock).unwrap();
        (l, c, sa.candidates(l, c))
    }

    #[test]
    fn benevolent_policy_connects() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let (l, c, cands) = edges_of(&sa, "s0", "x");
        assert_eq!(cands.len(), 2);
        assert_eq!(adv.resolve(&sa, &[], l, c, &cands).unwrap().action, "conc");
        let (l, c, cands) = edges_of(&sa, "s0", "y");
        assert_eq!(adv.resolve(&sa, &[], l, c, &cands).unwrap().action, "fail");
    }

    #[test]
    fn missing_entry_with_real_choice_fails() {
        let sa = fixtures::packet_producer();
        let (l, c, cands) = edges_of(&sa, "s0", "x");
        let err = StaticPolicy::new().resolve(&sa, &[], l, c, &cands).unwrap_err();
        assert!(matches!(err, AdversaryError::MissingPolicy { .. }));
    }

    #[test]
    fn policy_file_parsing() {
        assert_eq!(load_policy("s0 x -> conc").unwrap().len(), 1);
        assert!(load_policy("").unwrap().is_empty());
        let err = load_policy("s0 x -> conc\ns0 x -> tryagain\n").unwrap_err();
        assert!(matches!(err, AdversaryError::ConflictingPolicy { .. }));
        assert!(matches!(load_policy("s0 x conc"), Err(AdversaryError::Syntax(_))));
    }

    #[test]
    fn first_edge_is_lexicographic() {
        let sa = fixtures::packet_producer();
        let (l, c, cands) = edges_of(&sa, "s0", "x");
        assert_eq!(FirstEdge.resolve(&sa, &[], l, c, &cands).unwrap().action, "conc");
    }
}
