//! Exact engine: unfolds the automaton into a tree of clock-ordering classes under
//! an adversary and integrates the probability of every branch.
//!
//! Each clock set on entering a location becomes a fresh integration variable.
//! The remaining global time `a` is an affine expression in those variables
//! (the bound minus every fired value so far), so it never needs a density.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::Zero;
use thiserror::Error;

use crate::adversary::{Adversary, AdversaryError};
use crate::automaton::{ClockId, LocationId, StochasticAutomaton};
use crate::exec::Parallelism;
use crate::logic::{eval_state_formula, Cmp, Formula, FormulaError, UntilFormula, Verdict};
use crate::polyint::{default_order, polytope_probability, AffineExpr, Constraint, Density, IntegrationOptions, PolyIntError, Var};
use crate::rational::{format_rational, one, zero, Rational};

/// Default number of tree levels expanded before giving up.
pub const DEFAULT_MAX_DEPTH: usize = 12;

/// Default cap on integration cells per branch.
pub const DEFAULT_MAX_CELLS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("model is not valid: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Integration(#[from] PolyIntError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("probability mass is not conserved after level {level}: {total}")]
    MassNotConserved { level: usize, total: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Pass,
    Fail,
    Undecided,
    Unlabeled,
}

impl Label {
    pub fn as_char(self) -> char {
        match self {
            Label::Pass => 'p',
            Label::Fail => 'f',
            Label::Undecided => 'u',
            Label::Unlabeled => '-',
        }
    }
}

/// An element of a clock ordering: a clock's fresh value or the remaining global time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderElem {
    Clock(ClockId, Var),
    Global,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionNode {
    pub location: LocationId,
    pub depth: usize,
    /// Remaining global time on entry.
    pub global: AffineExpr,
    pub constraints: Vec<Constraint>,
    /// Clock-setting variables on the path, in creation order.
    pub vars: Vec<(Var, ClockId, usize)>,
    /// The ordering class (smallest first) that produced this node; empty at the root.
    pub ordering: Vec<OrderElem>,
    pub history: Vec<LocationId>,
    /// The global time ran out before any clock fired.
    pub timed_out: bool,
    pub label: Label,
    /// Probability of the path to this node.
    pub mass: Rational,
}

impl RegionNode {
    /// `clockN` names of the path variables.
    pub fn var_name(&self, sa: &StochasticAutomaton, v: Var) -> String {
        self.vars
            .iter()
            .find(|(x, _, _)| *x == v)
            .map(|(_, c, d)| format!("{}{}", sa.clock(*c).name, d))
            .unwrap_or_else(|| format!("v{v}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegionTotals {
    pub sigma_p: Rational,
    pub sigma_f: Rational,
    pub undecided_mass: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionReport {
    pub verdict: Verdict,
    pub totals: RegionTotals,
    /// Levels expanded.
    pub depth: usize,
    /// Totals after each level, starting with the root.
    pub levels: Vec<RegionTotals>,
    pub frontier_size: usize,
}

impl RegionReport {
    /// `[sigma_p, 1 - sigma_f]`.
    pub fn interval(&self) -> (Rational, Rational) {
        (self.totals.sigma_p.clone(), one() - &self.totals.sigma_f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionOptions {
    pub max_depth: usize,
    pub max_cells: usize,
    pub parallelism: Parallelism,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions { max_depth: DEFAULT_MAX_DEPTH, max_cells: DEFAULT_MAX_CELLS, parallelism: Parallelism::default() }
    }
}

/// Root of the tree: the initial location with `a = c` and nothing else set.
pub fn initial_node(sa: &StochasticAutomaton, c: &Rational) -> RegionNode {
    RegionNode {
        location: sa.initial,
        depth: 0,
        global: AffineExpr::constant_expr(c.clone()),
        constraints: Vec::new(),
        vars: Vec::new(),
        ordering: Vec::new(),
        history: vec![sa.initial],
        timed_out: false,
        label: Label::Unlabeled,
        mass: one(),
    }
}

/// Labels a node: `p` if the location satisfies `phi2` within the time bound,
/// otherwise `f` if it violates `phi1`, time is up, or it is terminating; else `u`.
pub fn label_node(
    node: &RegionNode,
    phi1: &Formula,
    phi2: &Formula,
    time_cmp: Cmp,
    sa: &StochasticAutomaton,
) -> Result<Label, FormulaError> {
    // Off the root, a child only exists with its fired clock below `a`, so the
    // remaining time is positive unless the node is a timeout.
    let in_time = if node.depth == 0 { time_cmp.holds(&zero(), node.global.constant()) } else { !node.timed_out };
    if in_time && eval_state_formula(phi2, node.location, sa, false)? {
        return Ok(Label::Pass);
    }
    let exhausted = node.timed_out || (node.global.is_constant() && node.global.constant() <= &zero());
    if exhausted || !eval_state_formula(phi1, node.location, sa, false)? || sa.is_terminating(node.location) {
        return Ok(Label::Fail);
    }
    Ok(Label::Undecided)
}

/// Probability of the path constraints under the product of the clock densities.
pub fn path_probability(node: &RegionNode, sa: &StochasticAutomaton, max_cells: usize) -> Result<Rational, RegionError> {
    let densities: BTreeMap<Var, Density> = node
        .vars
        .iter()
        .map(|(v, c, _)| (*v, Density::of_distribution(&sa.clock(*c).dist)))
        .collect();
    let order = default_order(node.vars.iter().map(|(v, _, _)| *v));
    Ok(polytope_probability(&densities, &node.constraints, &order, IntegrationOptions { max_cells })?)
}

/// Children of `node`, one per ordering class of the fresh clocks and the remaining
/// time that has positive probability. Children are unlabeled; `mass` is set.
pub fn expand(
    node: &RegionNode,
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    max_cells: usize,
) -> Result<Vec<RegionNode>, RegionError> {
    let setting = sa.setting(node.location);
    if setting.is_empty() {
        return Ok(Vec::new());
    }
    let depth = node.depth;
    let mut elems = Vec::with_capacity(setting.len() + 1);
    let mut vars = node.vars.clone();
    for clock in setting {
        let v = vars.len() as Var;
        vars.push((v, *clock, depth));
        elems.push(OrderElem::Clock(*clock, v));
    }
    elems.push(OrderElem::Global);
    let expr = |e: &OrderElem| match e {
        OrderElem::Clock(_, v) => AffineExpr::var(*v),
        OrderElem::Global => node.global.clone(),
    };
    let mut children = Vec::new();
    for perm in elems.iter().copied().permutations(elems.len()) {
        let mut constraints = node.constraints.clone();
        for pair in perm.windows(2) {
            constraints.push(Constraint::lt(&expr(&pair[0]), &expr(&pair[1])));
        }
        if constraints.iter().any(|c| c.constant_truth() == Some(false)) {
            continue;
        }
        constraints.retain(|c| c.constant_truth().is_none());
        let (location, global, timed_out) = match perm[0] {
            OrderElem::Global => (node.location, node.global.clone(), true),
            OrderElem::Clock(clock, v) => {
                let candidates = sa.candidates(node.location, clock);
                let edge = adv.resolve(sa, &node.history, node.location, clock, &candidates)?;
                (edge.target, &node.global - &AffineExpr::var(v), false)
            }
        };
        let mut history = node.history.clone();
        if !timed_out {
            history.push(location);
        }
        let mut child = RegionNode {
            location,
            depth: depth + 1,
            global,
            constraints,
            vars: vars.clone(),
            ordering: perm,
            history,
            timed_out,
            label: Label::Unlabeled,
            mass: zero(),
        };
        child.mass = path_probability(&child, sa, max_cells)?;
        if !child.mass.is_zero() {
            children.push(child);
        }
    }
    Ok(children)
}

/// Breadth-first expansion until the accumulated pass or fail mass decides the
/// formula, the frontier empties, or `max_depth` levels have been expanded.
pub fn run_region_check(
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    f: &UntilFormula,
    opts: RegionOptions,
) -> Result<RegionReport, RegionError> {
    if !matches!(f.time_cmp, Cmp::Lt | Cmp::Le) {
        return Err(FormulaError::UnsupportedTimeBound(format!("{}{}", f.time_cmp, format_rational(&f.time_bound))).into());
    }
    if let Some(v) = sa.validate().violations.first() {
        return Err(RegionError::InvalidModel(v.to_string()));
    }
    let mut root = initial_node(sa, &f.time_bound);
    root.label = label_node(&root, &f.left, &f.right, f.time_cmp, sa)?;
    let mut totals = RegionTotals::default();
    let mut frontier = Vec::new();
    match root.label {
        Label::Pass => totals.sigma_p = one(),
        Label::Fail => totals.sigma_f = one(),
        _ => {
            totals.undecided_mass = one();
            frontier.push(root);
        }
    }
    let mut levels = vec![totals.clone()];
    let mut depth = 0;
    let decide = |t: &RegionTotals| f.prob_cmp.decide(&t.sigma_p, &(one() - &t.sigma_f), &f.prob_bound);
    let mut verdict = decide(&totals);
    while verdict == Verdict::Undecided && depth < opts.max_depth && !frontier.is_empty() {
        depth += 1;
        let expanded = opts.parallelism.map(std::mem::take(&mut frontier), |n| {
            let children = expand(&n, sa, adv, opts.max_cells)?;
            children
                .into_iter()
                .map(|mut c| {
                    c.label = label_node(&c, &f.left, &f.right, f.time_cmp, sa)?;
                    Ok(c)
                })
                .collect::<Result<Vec<_>, RegionError>>()
        });
        let mut undecided = zero();
        for children in expanded {
            for child in children? {
                match child.label {
                    Label::Pass => totals.sigma_p += &child.mass,
                    Label::Fail => totals.sigma_f += &child.mass,
                    _ => {
                        undecided += &child.mass;
                        frontier.push(child);
                    }
                }
            }
        }
        totals.undecided_mass = undecided;
        let sum = &totals.sigma_p + &totals.sigma_f + &totals.undecided_mass;
        if sum != one() {
            return Err(RegionError::MassNotConserved { level: depth, total: format_rational(&sum) });
        }
        levels.push(totals.clone());
        verdict = decide(&totals);
    }
    Ok(RegionReport { verdict, totals, depth, levels, frontier_size: frontier.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::logic::parse_formula;
    use crate::rational::rat;

    fn until(text: &str) -> UntilFormula {
        match parse_formula(text).unwrap() {
            Formula::Until(u) => *u,
            _ => unreachable!(),
        }
    }

    #[test]
    fn root_has_two_ordering_classes() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let root = initial_node(&sa, &one());
        let children = expand(&root, &sa, &adv, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(children.len(), 2);
        let masses: Vec<Rational> = children.iter().map(|c| c.mass.clone()).collect();
        assert!(masses.contains(&rat(1, 6)));
        assert!(masses.contains(&rat(5, 6)));
        assert!(children.iter().all(|c| c.ordering.last() == Some(&OrderElem::Global)));
    }

    #[test]
    fn reentered_location_has_six_classes() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let root = initial_node(&sa, &one());
        let s1 = expand(&root, &sa, &adv, DEFAULT_MAX_CELLS)
            .unwrap()
            .into_iter()
            .find(|c| sa.location(c.location).name == "s1")
            .unwrap();
        let back = expand(&s1, &sa, &adv, DEFAULT_MAX_CELLS)
            .unwrap()
            .into_iter()
            .find(|c| !c.timed_out)
            .unwrap();
        assert_eq!(sa.location(back.location).name, "s0");
        assert_eq!(back.mass, rat(3, 5));
        assert_eq!(expand(&back, &sa, &adv, DEFAULT_MAX_CELLS).unwrap().len(), 6);
    }

    #[test]
    fn packet_formula_is_false_at_depth_two() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let f = until("[ (phi0|phi1) U{<1} phi2 ] >= 9/10");
        let report = run_region_check(&sa, &adv, &f, RegionOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::False);
        assert_eq!(report.depth, 2);
        assert_eq!(report.totals.sigma_p, rat(1, 6));
        assert_eq!(report.totals.sigma_f, rat(7, 30));
        assert_eq!(report.totals.undecided_mass, rat(3, 5));
    }

    #[test]
    fn positive_probability_is_true_at_depth_one() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let f = until("[ (phi0|phi1) U{<1} phi2 ] > 0");
        let report = run_region_check(&sa, &adv, &f, RegionOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::True);
        assert_eq!(report.depth, 1);
    }

    #[test]
    fn depth_zero_brackets_everything() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let f = until("[ (phi0|phi1) U{<1} phi2 ] >= 9/10");
        let opts = RegionOptions { max_depth: 0, ..Default::default() };
        let report = run_region_check(&sa, &adv, &f, opts).unwrap();
        assert_eq!(report.verdict, Verdict::Undecided);
        assert_eq!(report.interval(), (zero(), one()));
    }

    #[test]
    fn labels() {
        let sa = fixtures::packet_producer();
        let phi1 = parse_formula("phi0 | phi1").unwrap();
        let phi2 = Formula::atom("phi2");
        let mut node = initial_node(&sa, &one());
        node.depth = 1;
        node.location = sa.location_named("s2").unwrap();
        assert_eq!(label_node(&node, &phi1, &phi2, Cmp::Lt, &sa), Ok(Label::Pass));
        node.location = sa.location_named("s1").unwrap();
        assert_eq!(label_node(&node, &phi1, &phi2, Cmp::Lt, &sa), Ok(Label::Undecided));
        node.timed_out = true;
        assert_eq!(label_node(&node, &phi1, &phi2, Cmp::Lt, &sa), Ok(Label::Fail));
        let root = initial_node(&sa, &zero());
        assert_eq!(label_node(&root, &phi1, &phi2, Cmp::Lt, &sa), Ok(Label::Fail));
    }
}
