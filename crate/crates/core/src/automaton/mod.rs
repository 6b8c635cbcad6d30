//! Stochastic automata: locations, clocks with general distributions, singleton-trigger
//! edges, the clock-setting map and the proposition labelling.

mod distribution;
mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use distribution::{
    CdfDefect, Distribution, DistributionError, Piece, Poly1, MONOTONICITY_PROBES, SAMPLE_TOLERANCE,
};
pub use format::{parse_automaton, parse_polynomial, write_automaton, FormatError};
pub(crate) use format::parse_pieces;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clock {
    pub name: String,
    pub dist: Distribution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    /// Clocks set on entry, in the order the matrix engine uses for its dimensions.
    pub setting: Vec<ClockId>,
    pub props: BTreeSet<String>,
}

/// `source -action{trigger}-> target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: LocationId,
    pub action: String,
    pub trigger: ClockId,
    pub target: LocationId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StochasticAutomaton {
    pub locations: Vec<Location>,
    pub initial: LocationId,
    pub clocks: Vec<Clock>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown clock `{0}`")]
    UnknownClock(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("location `{location}` has two edges labelled `{action}`")]
    DuplicateAction { location: String, action: String },
    #[error("no initial location declared")]
    NoInitial,
}

impl StochasticAutomaton {
    pub fn location(&self, id: LocationId) -> &Location {
        &self.locations[id.0]
    }

    pub fn clock(&self, id: ClockId) -> &Clock {
        &self.clocks[id.0]
    }

    pub fn location_ids(&self) -> impl Iterator<Item = LocationId> {
        (0..self.locations.len()).map(LocationId)
    }

    pub fn location_named(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|l| l.name == name).map(LocationId)
    }

    pub fn clock_named(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c.name == name).map(ClockId)
    }

    pub fn setting(&self, id: LocationId) -> &[ClockId] {
        &self.locations[id.0].setting
    }

    pub fn outgoing(&self, id: LocationId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.source == id)
    }

    /// Edges leaving `loc` whose trigger is `clock`.
    pub fn candidates(&self, loc: LocationId, clock: ClockId) -> Vec<&Edge> {
        self.edges
            .iter()
            .filter(|e| e.source == loc && e.trigger == clock)
            .collect()
    }

    /// No outgoing edges.
    pub fn is_terminating(&self, id: LocationId) -> bool {
        self.outgoing(id).next().is_none()
    }

    pub fn actions(&self) -> BTreeSet<&str> {
        self.edges.iter().map(|e| e.action.as_str()).collect()
    }

    /// Every proposition labelling some location.
    pub fn propositions(&self) -> BTreeSet<&str> {
        self.locations
            .iter()
            .flat_map(|l| l.props.iter().map(String::as_str))
            .collect()
    }

    pub fn has_prop(&self, id: LocationId, prop: &str) -> bool {
        self.locations[id.0].props.contains(prop)
    }

    /// Largest number of clocks set in one location.
    pub fn max_clocks_per_location(&self) -> usize {
        self.locations.iter().map(|l| l.setting.len()).max().unwrap_or(0)
    }

    /// All well-formedness violations; empty means valid.
    pub fn validate(&self) -> ValidationReport {
        validate_automaton(self)
    }
}

impl fmt::Display for StochasticAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_automaton(self))
    }
}

/// Incremental, name-based construction.
#[derive(Debug, Default, Clone)]
pub struct AutomatonBuilder {
    clocks: Vec<Clock>,
    locations: Vec<(String, Vec<String>, Vec<String>)>,
    initial: Option<String>,
    edges: Vec<(String, String, String, String)>,
}

impl AutomatonBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(mut self, name: &str, dist: Distribution) -> Self {
        self.clocks.push(Clock { name: name.to_string(), dist });
        self
    }

    pub fn location(mut self, name: &str, setting: &[&str], props: &[&str]) -> Self {
        self.locations.push((
            name.to_string(),
            setting.iter().map(|s| s.to_string()).collect(),
            props.iter().map(|s| s.to_string()).collect(),
        ));
        self
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.initial = Some(name.to_string());
        self
    }

    pub fn edge(mut self, source: &str, action: &str, trigger: &str, target: &str) -> Self {
        self.edges
            .push((source.into(), action.into(), trigger.into(), target.into()));
        self
    }

    pub fn build(self) -> Result<StochasticAutomaton, ModelError> {
        let mut clock_index = BTreeMap::new();
        for (i, c) in self.clocks.iter().enumerate() {
            if clock_index.insert(c.name.clone(), ClockId(i)).is_some() {
                return Err(ModelError::Duplicate { kind: "clock", name: c.name.clone() });
            }
        }
        let mut loc_index = BTreeMap::new();
        for (i, (name, _, _)) in self.locations.iter().enumerate() {
            if loc_index.insert(name.clone(), LocationId(i)).is_some() {
                return Err(ModelError::Duplicate { kind: "location", name: name.clone() });
            }
        }
        let clock_of = |n: &str| {
            clock_index
                .get(n)
                .copied()
                .ok_or_else(|| ModelError::UnknownClock(n.to_string()))
        };
        let loc_of = |n: &str| {
            loc_index
                .get(n)
                .copied()
                .ok_or_else(|| ModelError::UnknownLocation(n.to_string()))
        };
        let mut locations = Vec::with_capacity(self.locations.len());
        for (name, setting, props) in &self.locations {
            let setting = setting.iter().map(|c| clock_of(c)).collect::<Result<Vec<_>, _>>()?;
            locations.push(Location {
                name: name.clone(),
                setting,
                props: props.iter().cloned().collect(),
            });
        }
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (src, action, trigger, dst) in &self.edges {
            if !seen.insert((src.clone(), action.clone())) {
                return Err(ModelError::DuplicateAction { location: src.clone(), action: action.clone() });
            }
            edges.push(Edge {
                source: loc_of(src)?,
                action: action.clone(),
                trigger: clock_of(trigger)?,
                target: loc_of(dst)?,
            });
        }
        let initial = loc_of(self.initial.as_deref().ok_or(ModelError::NoInitial)?)?;
        Ok(StochasticAutomaton { locations, initial, clocks: self.clocks, edges })
    }
}

/// Machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    UnknownInitial,
    UnknownLocation,
    UnknownClock,
    ClockScopeViolation,
    ClockWithoutEdge,
    DuplicateAction,
    DuplicateSetting,
    CdfNotNormalized,
    CdfNotZeroAtLowerBound,
    CdfDiscontinuous,
    CdfPiecesNotContiguous,
    CdfDecreasing,
    EmptySupport,
    NegativeLowerBound,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::UnknownInitial => "UnknownInitial",
            ViolationCode::UnknownLocation => "UnknownLocation",
            ViolationCode::UnknownClock => "UnknownClock",
            ViolationCode::ClockScopeViolation => "ClockScopeViolation",
            ViolationCode::ClockWithoutEdge => "ClockWithoutEdge",
            ViolationCode::DuplicateAction => "DuplicateAction",
            ViolationCode::DuplicateSetting => "DuplicateSetting",
            ViolationCode::CdfNotNormalized => "CdfNotNormalized",
            ViolationCode::CdfNotZeroAtLowerBound => "CdfNotZeroAtLowerBound",
            ViolationCode::CdfDiscontinuous => "CdfDiscontinuous",
            ViolationCode::CdfPiecesNotContiguous => "CdfPiecesNotContiguous",
            ViolationCode::CdfDecreasing => "CdfDecreasing",
            ViolationCode::EmptySupport => "EmptySupport",
            ViolationCode::NegativeLowerBound => "NegativeLowerBound",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    /// The offending element, e.g. `clock x` or `edge s1 -send{x}-> s0`.
    pub element: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.code, self.element, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// Checks every structural invariant and every clock CDF; never fails.
pub fn validate_automaton(sa: &StochasticAutomaton) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |code, element: String, detail: String| out.push(Violation { code, element, detail });
    let nloc = sa.locations.len();
    let nclk = sa.clocks.len();

    if sa.initial.0 >= nloc {
        push(ViolationCode::UnknownInitial, format!("initial #{}", sa.initial.0), "initial location does not exist".into());
    }
    for clock in &sa.clocks {
        for defect in clock.dist.check() {
            let element = format!("clock {}", clock.name);
            let (code, detail) = match defect {
                CdfDefect::EmptySupport => (ViolationCode::EmptySupport, "support or piece interval is empty".to_string()),
                CdfDefect::NegativeLowerBound => (ViolationCode::NegativeLowerBound, "support lower bound is negative".to_string()),
                CdfDefect::PiecesNotContiguous { piece } => (ViolationCode::CdfPiecesNotContiguous, format!("piece {piece} does not start where the previous one ends")),
                CdfDefect::Discontinuity { piece } => (ViolationCode::CdfDiscontinuous, format!("CDF jumps at the start of piece {piece}")),
                CdfDefect::NotZeroAtLowerBound => (ViolationCode::CdfNotZeroAtLowerBound, "CDF is not 0 at the support lower bound".to_string()),
                CdfDefect::NotNormalized { value_at_hi } => (
                    ViolationCode::CdfNotNormalized,
                    format!("CDF is {} at the support upper bound", crate::rational::format_rational(&value_at_hi)),
                ),
                CdfDefect::Decreasing { piece } => (ViolationCode::CdfDecreasing, format!("negative density in piece {piece}")),
            };
            push(code, element, detail);
        }
    }
    for loc in &sa.locations {
        let mut seen = BTreeSet::new();
        for c in &loc.setting {
            if c.0 >= nclk {
                push(ViolationCode::UnknownClock, format!("location {}", loc.name), format!("clock #{} does not exist", c.0));
            } else if !seen.insert(*c) {
                push(ViolationCode::DuplicateSetting, format!("location {}", loc.name), format!("clock {} set twice", sa.clocks[c.0].name));
            }
        }
    }
    let mut actions = BTreeSet::new();
    for e in &sa.edges {
        let name = |l: LocationId| sa.locations.get(l.0).map(|l| l.name.clone()).unwrap_or_else(|| format!("#{}", l.0));
        let clock = sa.clocks.get(e.trigger.0).map(|c| c.name.clone()).unwrap_or_else(|| format!("#{}", e.trigger.0));
        let element = format!("edge {} -{}{{{}}}-> {}", name(e.source), e.action, clock, name(e.target));
        if e.source.0 >= nloc || e.target.0 >= nloc {
            push(ViolationCode::UnknownLocation, element, "edge endpoint does not exist".into());
            continue;
        }
        if e.trigger.0 >= nclk {
            push(ViolationCode::UnknownClock, element, "trigger clock does not exist".into());
            continue;
        }
        if !sa.locations[e.source.0].setting.contains(&e.trigger) {
            push(
                ViolationCode::ClockScopeViolation,
                element.clone(),
                format!("clock {} is not set in {}", clock, name(e.source)),
            );
        }
        if !actions.insert((e.source, e.action.clone())) {
            push(ViolationCode::DuplicateAction, element, "action label repeated at this source".into());
        }
    }
    for (i, loc) in sa.locations.iter().enumerate() {
        for c in &loc.setting {
            if c.0 < nclk && !sa.edges.iter().any(|e| e.source == LocationId(i) && e.trigger == *c) {
                push(
                    ViolationCode::ClockWithoutEdge,
                    format!("location {}", loc.name),
                    format!("clock {} triggers no edge here", sa.clocks[c.0].name),
                );
            }
        }
    }
    ValidationReport { violations: out }
}
