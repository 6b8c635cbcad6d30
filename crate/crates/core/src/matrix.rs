//! Discretised engine: time advances in steps of `delta`; each live location holds
//! a matrix of clock-bin probabilities that is shifted one bin per step. Mass whose
//! single clock reaches bin 1 fires an edge; mass with two or more clocks in bin 1
//! cannot be ordered and is charged to the error budget.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::adversary::{Adversary, AdversaryError};
use crate::automaton::{ClockId, LocationId, StochasticAutomaton};
use crate::exec::Parallelism;
use crate::logic::{eval_state_formula, Cmp, FormulaError, UntilFormula, Verdict};
use crate::rational::{ceil_to_usize, format_rational, int, one, pow, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("delta must be positive")]
    NonPositiveDelta,
    #[error("delta {delta} exceeds the lower bound {lower_bound} of clock `{clock}`")]
    DeltaTooLarge { delta: String, clock: String, lower_bound: String },
    #[error("delta {delta} does not divide the time bound {bound}")]
    DeltaNotDividingBound { delta: String, bound: String },
    #[error("the matrix engine needs a memoryless adversary, got `{0}`")]
    AdversaryNotMemoryless(String),
    #[error("model is not valid: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Per-clock bin probabilities `pr(c in ((k-1)·delta, k·delta])`, `k = 1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinTable {
    pub delta: Rational,
    bins: Vec<Vec<Rational>>,
}

impl BinTable {
    /// Bin `k` (1-based) of `clock`; zero beyond the table.
    pub fn prob(&self, clock: ClockId, k: usize) -> Rational {
        self.bins[clock.0].get(k - 1).cloned().unwrap_or_else(zero)
    }

    pub fn bins(&self, clock: ClockId) -> &[Rational] {
        &self.bins[clock.0]
    }
}

/// Sparse matrix of clock-configuration probabilities for one location. Keys are
/// 1-based bin vectors in the location's clock order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClockMatrix {
    pub location: LocationId,
    pub time_index: usize,
    pub dims: Vec<usize>,
    entries: BTreeMap<Vec<usize>, Rational>,
}

impl ClockMatrix {
    pub fn empty(sa: &StochasticAutomaton, bins: &BinTable, location: LocationId, time_index: usize) -> Self {
        let dims = sa.setting(location).iter().map(|c| bins.bins(*c).len()).collect();
        ClockMatrix { location, time_index, dims, entries: BTreeMap::new() }
    }

    pub fn get(&self, idx: &[usize]) -> Rational {
        self.entries.get(idx).cloned().unwrap_or_else(zero)
    }

    pub fn add(&mut self, idx: Vec<usize>, p: Rational) {
        if p.is_zero() {
            return;
        }
        *self.entries.entry(idx).or_insert_with(zero) += p;
    }

    /// Non-zero entries in index order.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> Rational {
        self.entries.values().fold(zero(), |acc, p| acc + p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GlobalTotals {
    pub total_pass: Rational,
    pub total_fail: Rational,
    pub error: Rational,
}

/// Result of advancing one location's matrix by one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeStep {
    pub next: ClockMatrix,
    pub new_states: BTreeSet<LocationId>,
    pub remain: bool,
    pub prob_increments: BTreeMap<LocationId, Rational>,
    pub error_increment: Rational,
}

pub fn clock_config_probs(sa: &StochasticAutomaton, delta: &Rational) -> Result<BinTable, MatrixError> {
    if *delta <= zero() {
        return Err(MatrixError::NonPositiveDelta);
    }
    let mut bins = Vec::with_capacity(sa.clocks.len());
    for clock in &sa.clocks {
        let lo = clock.dist.support_lo();
        if delta > lo {
            return Err(MatrixError::DeltaTooLarge {
                delta: format_rational(delta),
                clock: clock.name.clone(),
                lower_bound: format_rational(lo),
            });
        }
        let n = ceil_to_usize(&(clock.dist.support_hi() / delta));
        let row = (1..=n)
            .map(|k| {
                let a = delta * int(k as i64 - 1);
                let b = delta * int(k as i64);
                clock.dist.cdf_at(&b) - clock.dist.cdf_at(&a)
            })
            .collect();
        bins.push(row);
    }
    Ok(BinTable { delta: delta.clone(), bins })
}

/// Product of fresh bin probabilities for every clock set in `location`, scaled by `weight`.
fn fresh_configurations(sa: &StochasticAutomaton, bins: &BinTable, location: LocationId, weight: &Rational) -> Vec<(Vec<usize>, Rational)> {
    let mut acc: Vec<(Vec<usize>, Rational)> = vec![(Vec::new(), weight.clone())];
    for clock in sa.setting(location) {
        let mut next = Vec::new();
        for (idx, p) in &acc {
            for (k, b) in bins.bins(*clock).iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let mut i = idx.clone();
                i.push(k + 1);
                next.push((i, p * b));
            }
        }
        acc = next;
    }
    acc.retain(|(_, p)| !p.is_zero());
    acc
}

/// Matrix of `location` at time index 0 when entered with certainty.
pub fn init_matrix(sa: &StochasticAutomaton, bins: &BinTable, location: LocationId) -> ClockMatrix {
    let mut m = ClockMatrix::empty(sa, bins, location, 0);
    new_state_matrix(&mut m, sa, &one(), bins);
    m
}

/// Adds `entry_prob` times the fresh clock-configuration distribution to `target`.
pub fn new_state_matrix(target: &mut ClockMatrix, sa: &StochasticAutomaton, entry_prob: &Rational, bins: &BinTable) {
    if entry_prob.is_zero() {
        return;
    }
    for (idx, p) in fresh_configurations(sa, bins, target.location, entry_prob) {
        target.add(idx, p);
    }
}

/// Shifts every configuration down one bin, firing the clocks that reach bin 1.
pub fn new_time_matrix(
    prev: &ClockMatrix,
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
) -> Result<TimeStep, MatrixError> {
    let loc = prev.location;
    let setting = sa.setting(loc);
    let mut next = ClockMatrix { location: loc, time_index: prev.time_index + 1, dims: prev.dims.clone(), entries: BTreeMap::new() };
    let mut step = TimeStep {
        next: next.clone(),
        new_states: BTreeSet::new(),
        remain: false,
        prob_increments: BTreeMap::new(),
        error_increment: zero(),
    };
    let mut chosen: BTreeMap<ClockId, LocationId> = BTreeMap::new();
    for (idx, p) in prev.entries() {
        let ones: Vec<usize> = (0..idx.len()).filter(|&i| idx[i] == 1).collect();
        match ones.as_slice() {
            [] => {
                next.add(idx.iter().map(|k| k - 1).collect(), p.clone());
            }
            [i] => {
                let clock = setting[*i];
                let target = match chosen.get(&clock) {
                    Some(t) => *t,
                    None => {
                        let candidates = sa.candidates(loc, clock);
                        let edge = adv.resolve(sa, &[], loc, clock, &candidates)?;
                        chosen.insert(clock, edge.target);
                        edge.target
                    }
                };
                step.new_states.insert(target);
                *step.prob_increments.entry(target).or_insert_with(zero) += p;
            }
            _ => step.error_increment += p,
        }
    }
    step.remain = !next.is_zero();
    step.next = next;
    Ok(step)
}

/// Totals after one iteration, before any timeout adjustment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub time_index: usize,
    pub totals: GlobalTotals,
    pub live_mass: Rational,
    pub live: BTreeSet<LocationId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixReport {
    pub verdict: Verdict,
    pub totals: GlobalTotals,
    pub iterations: usize,
    pub delta: Rational,
    pub records: Vec<IterationRecord>,
}

/// Stepwise execution of the matrix engine.
pub struct MatrixRun<'a> {
    sa: &'a StochasticAutomaton,
    adv: &'a dyn Adversary,
    f: &'a UntilFormula,
    bins: BinTable,
    steps: usize,
    parallelism: Parallelism,
    ct: usize,
    matrices: BTreeMap<LocationId, ClockMatrix>,
    totals: GlobalTotals,
    verdict: Option<Verdict>,
    records: Vec<IterationRecord>,
}

impl<'a> MatrixRun<'a> {
    pub fn new(
        sa: &'a StochasticAutomaton,
        adv: &'a dyn Adversary,
        f: &'a UntilFormula,
        delta: &Rational,
        parallelism: Parallelism,
    ) -> Result<Self, MatrixError> {
        if !matches!(f.time_cmp, Cmp::Lt | Cmp::Le) {
            return Err(FormulaError::UnsupportedTimeBound(format!("{}{}", f.time_cmp, format_rational(&f.time_bound))).into());
        }
        let report = sa.validate();
        if let Some(v) = report.violations.first() {
            return Err(MatrixError::InvalidModel(v.to_string()));
        }
        if !adv.is_memoryless() {
            return Err(MatrixError::AdversaryNotMemoryless(adv.name()));
        }
        let bins = clock_config_probs(sa, delta)?;
        let ratio = &f.time_bound / delta;
        if !ratio.is_integer() {
            return Err(MatrixError::DeltaNotDividingBound {
                delta: format_rational(delta),
                bound: format_rational(&f.time_bound),
            });
        }
        let steps = ceil_to_usize(&ratio);
        let mut run = MatrixRun {
            sa,
            adv,
            f,
            bins,
            steps,
            parallelism,
            ct: 0,
            matrices: BTreeMap::new(),
            totals: GlobalTotals::default(),
            verdict: None,
            records: Vec::new(),
        };
        run.start()?;
        Ok(run)
    }

    fn holds(&self, phi: &crate::logic::Formula, loc: LocationId) -> Result<bool, MatrixError> {
        Ok(eval_state_formula(phi, loc, self.sa, false)?)
    }

    fn start(&mut self) -> Result<(), MatrixError> {
        let s0 = self.sa.initial;
        if self.f.time_cmp.holds(&zero(), &self.f.time_bound) && self.holds(&self.f.right, s0)? {
            self.totals.total_pass = one();
        } else if self.holds(&self.f.left, s0)? && !self.sa.is_terminating(s0) {
            self.matrices.insert(s0, init_matrix(self.sa, &self.bins, s0));
        } else {
            self.totals.total_fail = one();
        }
        self.decide_after_step();
        Ok(())
    }

    pub fn bins(&self) -> &BinTable {
        &self.bins
    }

    pub fn totals(&self) -> &GlobalTotals {
        &self.totals
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.verdict
    }

    pub fn time_index(&self) -> usize {
        self.ct
    }

    pub fn live(&self) -> BTreeSet<LocationId> {
        self.matrices.keys().copied().collect()
    }

    pub fn matrix(&self, loc: LocationId) -> Option<&ClockMatrix> {
        self.matrices.get(&loc)
    }

    pub fn live_mass(&self) -> Rational {
        self.matrices.values().fold(zero(), |acc, m| acc + m.mass())
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    /// Advances one step of `delta`. Returns the record of the completed iteration,
    /// or `None` once a verdict has been reached.
    pub fn step(&mut self) -> Result<Option<IterationRecord>, MatrixError> {
        if self.verdict.is_some() {
            return Ok(None);
        }
        self.ct += 1;
        let sa = self.sa;
        let adv = self.adv;
        let current: Vec<ClockMatrix> = std::mem::take(&mut self.matrices).into_values().collect();
        let results = self.parallelism.map(current, |m| new_time_matrix(&m, sa, adv));
        let mut entered: BTreeMap<LocationId, Rational> = BTreeMap::new();
        for r in results {
            let step = r?;
            self.totals.error += &step.error_increment;
            for (loc, p) in step.prob_increments {
                *entered.entry(loc).or_insert_with(zero) += p;
            }
            if step.remain {
                self.matrices.insert(step.next.location, step.next);
            }
        }
        for (q, p) in entered {
            if self.holds(&self.f.right, q)? {
                self.totals.total_pass += p;
            } else if self.holds(&self.f.left, q)? && !sa.is_terminating(q) {
                let bins = &self.bins;
                let ct = self.ct;
                let m = self
                    .matrices
                    .entry(q)
                    .or_insert_with(|| ClockMatrix::empty(sa, bins, q, ct));
                new_state_matrix(m, sa, &p, bins);
            } else {
                self.totals.total_fail += p;
            }
        }
        self.matrices.retain(|_, m| !m.is_zero());
        let record = IterationRecord {
            time_index: self.ct,
            totals: self.totals.clone(),
            live_mass: self.live_mass(),
            live: self.live(),
        };
        self.records.push(record.clone());
        self.decide_after_step();
        Ok(Some(record))
    }

    fn decide_after_step(&mut self) {
        let p = &self.f.prob_bound;
        let t = &self.totals;
        let upper = one() - &t.total_fail;
        match self.f.prob_cmp.decide(&t.total_pass, &upper, p) {
            Verdict::Undecided => {}
            v => {
                self.verdict = Some(v);
                return;
            }
        }
        if t.error >= one() - p && t.error >= *p {
            self.verdict = Some(Verdict::Undecided);
            return;
        }
        if self.ct >= self.steps || self.matrices.is_empty() {
            // out of time (or nothing left to move): whatever has not passed and is
            // not in the error budget counts as failed
            self.totals.total_fail = one() - &self.totals.total_pass - &self.totals.error;
            let upper = one() - &self.totals.total_fail;
            self.verdict = Some(self.f.prob_cmp.decide(&self.totals.total_pass, &upper, p));
        }
    }

    /// Runs to completion.
    pub fn finish(mut self) -> Result<MatrixReport, MatrixError> {
        while self.step()?.is_some() {}
        Ok(MatrixReport {
            verdict: self.verdict.unwrap_or(Verdict::Undecided),
            totals: self.totals,
            iterations: self.ct,
            delta: self.bins.delta.clone(),
            records: self.records,
        })
    }
}

pub fn run_matrix_check(
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    f: &UntilFormula,
    delta: &Rational,
    parallelism: Parallelism,
) -> Result<MatrixReport, MatrixError> {
    MatrixRun::new(sa, adv, f, delta, parallelism)?.finish()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityBound {
    pub time_units: Rational,
    pub space_units: Rational,
}

/// Step and storage estimates: time `(t/δ)·min(t/δ, n₂/δ)^{n₁}·|S|` and space
/// `2·(n₂/δ)^{n₁}·|S|`, where `n₁` is the most clocks set in one location and
/// `n₂` the largest clock upper bound.
pub fn complexity_bound(sa: &StochasticAutomaton, f: &UntilFormula, delta: &Rational) -> ComplexityBound {
    let n1 = sa.max_clocks_per_location() as u32;
    let n2 = sa
        .clocks
        .iter()
        .map(|c| c.dist.support_hi().clone())
        .max()
        .unwrap_or_else(zero);
    let states = int(sa.locations.len() as i64);
    let steps = &f.time_bound / delta;
    let width = &n2 / delta;
    let narrow = if steps < width { steps.clone() } else { width.clone() };
    ComplexityBound {
        time_units: &steps * pow(&narrow, n1) * &states,
        space_units: int(2) * pow(&width, n1) * &states,
    }
}
