//! Top-level checking: every until leaf is decided by one engine, then the
//! propositional skeleton is evaluated at the initial location.

use thiserror::Error;

use super::{atoms, ground_eval, Formula, FormulaError, UntilFormula, Verdict};
use crate::adversary::Adversary;
use crate::automaton::StochasticAutomaton;
use crate::exec::Parallelism;
use crate::matrix::{run_matrix_check, MatrixError, MatrixReport};
use crate::rational::Rational;
use crate::region::{run_region_check, RegionError, RegionOptions, RegionReport, DEFAULT_MAX_CELLS, DEFAULT_MAX_DEPTH};
use crate::simulate::{estimate_until, Estimate, SimError, SimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineKind {
    Matrix,
    #[default]
    Region,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    pub engine: EngineKind,
    /// Step size of the matrix engine; required for it.
    pub delta: Option<Rational>,
    pub max_depth: usize,
    pub max_cells: usize,
    pub samples: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Reject propositions that label no location instead of reading them as false.
    pub strict: bool,
    pub parallelism: Parallelism,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            engine: EngineKind::default(),
            delta: None,
            max_depth: DEFAULT_MAX_DEPTH,
            max_cells: DEFAULT_MAX_CELLS,
            samples: 100_000,
            seed: 0,
            confidence: 0.99,
            strict: false,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("the matrix engine needs a step size")]
    MissingDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EngineReport {
    Matrix(MatrixReport),
    Region(RegionReport),
    MonteCarlo(Estimate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafOutcome {
    pub until: UntilFormula,
    pub verdict: Verdict,
    pub report: EngineReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub verdict: Verdict,
    /// One entry per until occurrence, in [`Formula::untils`] order.
    pub leaves: Vec<LeafOutcome>,
}

/// Decides a single until with the configured engine.
pub fn check_until(
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    u: &UntilFormula,
    opts: &EngineOptions,
) -> Result<LeafOutcome, CheckError> {
    let (verdict, report) = match opts.engine {
        EngineKind::Matrix => {
            let delta = opts.delta.as_ref().ok_or(CheckError::MissingDelta)?;
            let r = run_matrix_check(sa, adv, u, delta, opts.parallelism)?;
            (r.verdict, EngineReport::Matrix(r))
        }
        EngineKind::Region => {
            let ro = RegionOptions { max_depth: opts.max_depth, max_cells: opts.max_cells, parallelism: opts.parallelism };
            let r = run_region_check(sa, adv, u, ro)?;
            (r.verdict, EngineReport::Region(r))
        }
        EngineKind::MonteCarlo => {
            let so = SimOptions {
                samples: opts.samples,
                seed: opts.seed,
                confidence: opts.confidence,
                parallelism: opts.parallelism,
            };
            let e = estimate_until(sa, adv, u, so)?;
            (e.verdict(u.prob_cmp, &u.prob_bound), EngineReport::MonteCarlo(e))
        }
    };
    Ok(LeafOutcome { until: u.clone(), verdict, report })
}

/// Checks a core formula at the initial location.
pub fn check(
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    f: &Formula,
    opts: &EngineOptions,
) -> Result<CheckResult, CheckError> {
    let known = sa.propositions();
    for a in atoms(f) {
        if !known.contains(a.as_str()) {
            if opts.strict {
                return Err(FormulaError::UnknownProposition(a).into());
            }
            log::warn!("proposition `{a}` labels no location and is read as false");
        }
    }
    let mut leaves: Vec<LeafOutcome> = Vec::new();
    for u in f.untils() {
        let outcome = match leaves.iter().find(|l| &l.until == u) {
            Some(done) => done.clone(),
            None => check_until(sa, adv, u, opts)?,
        };
        leaves.push(outcome);
    }
    let verdicts: Vec<Verdict> = leaves.iter().map(|l| l.verdict).collect();
    let verdict = ground_eval(f, &verdicts, sa.initial, sa, opts.strict)?;
    Ok(CheckResult { verdict, leaves })
}
