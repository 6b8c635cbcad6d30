//! Monte Carlo estimation of bounded-until probabilities.
//!
//! Path `i` of a run with seed `s` draws from the ChaCha8 stream `i` of seed `s`,
//! so results do not depend on how paths are spread over threads.

use std::fmt;

use num_traits::FromPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::adversary::{Adversary, AdversaryError};
use crate::automaton::{ClockId, LocationId, StochasticAutomaton};
use crate::exec::Parallelism;
use crate::logic::{eval_state_formula, Cmp, FormulaError, UntilFormula, Verdict};
use crate::rational::{format_rational, to_f64, Rational};

/// Paths are cut after this many transitions even if time remains.
pub const MAX_PATH_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("model is not valid: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    InvalidConfidence(f64),
    #[error("at least one sample is required")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStep {
    pub location: LocationId,
    /// Global time at which the location was entered.
    pub time: f64,
    /// Clock whose expiry left the previous location, and the action taken.
    pub fired: Option<(ClockId, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub steps: Vec<SimStep>,
    /// The path ended in a terminating location.
    pub terminal: bool,
}

impl SimPath {
    /// One `time location action` line per step; the action is `-` for the
    /// initial entry and `end` marks a terminating location.
    pub fn trace(&self, sa: &StochasticAutomaton) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let action = step.fired.as_ref().map_or("-", |(_, a)| a.as_str());
            out.push_str(&format!("{} {} {}\n", step.time, sa.location(step.location).name, action));
        }
        if self.terminal {
            let last = self.steps.last().expect("paths are never empty");
            out.push_str(&format!("{} {} end\n", last.time, sa.location(last.location).name));
        }
        out
    }

    pub fn display<'a>(&'a self, sa: &'a StochasticAutomaton) -> impl fmt::Display + 'a {
        PathDisplay { path: self, sa }
    }
}

struct PathDisplay<'a> {
    path: &'a SimPath,
    sa: &'a StochasticAutomaton,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.path.steps.iter().enumerate() {
            if let Some((_, action)) = &step.fired {
                write!(f, " -{action}-> ")?;
            } else if i > 0 {
                write!(f, " -> ")?;
            }
            write!(f, "{}@{:.4}", self.sa.location(step.location).name, step.time)?;
        }
        if self.path.terminal {
            write!(f, " (end)")?;
        }
        Ok(())
    }
}

/// Samples a path from the initial location until the next transition would
/// happen after `horizon`, a terminating location is reached, or `stop` accepts
/// the last step.
pub fn sample_path<R: Rng>(
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    rng: &mut R,
    horizon: f64,
    mut stop: impl FnMut(&SimStep) -> bool,
) -> Result<SimPath, SimError> {
    let mut history = vec![sa.initial];
    let mut steps = vec![SimStep { location: sa.initial, time: 0.0, fired: None }];
    let mut now = 0.0;
    let mut terminal = false;
    while steps.len() < MAX_PATH_STEPS && !stop(steps.last().unwrap()) {
        let current = steps.last().unwrap().location;
        // ties go to the clock listed first in the location's setting
        let mut next: Option<(f64, ClockId)> = None;
        for &clock in sa.setting(current) {
            let value = sa.clock(clock).dist.sample(rng.random::<f64>());
            if next.is_none_or(|(v, _)| value < v) {
                next = Some((value, clock));
            }
        }
        let Some((delay, clock)) = next else {
            terminal = true;
            break;
        };
        if now + delay > horizon {
            break;
        }
        now += delay;
        let candidates = sa.candidates(current, clock);
        let edge = adv.resolve(sa, &history, current, clock, &candidates)?;
        history.push(edge.target);
        steps.push(SimStep { location: edge.target, time: now, fired: Some((clock, edge.action.clone())) });
    }
    Ok(SimPath { steps, terminal })
}

/// Whether the path satisfies the until: some location satisfying the right-hand
/// side is entered within the time bound and every location before it satisfies
/// the left-hand side.
pub fn until_holds(path: &SimPath, f: &UntilFormula, sa: &StochasticAutomaton) -> Result<bool, FormulaError> {
    let bound = to_f64(&f.time_bound);
    for step in &path.steps {
        if !f.time_cmp.holds(&step.time, &bound) {
            return Ok(false);
        }
        if eval_state_formula(&f.right, step.location, sa, false)? {
            return Ok(true);
        }
        if !eval_state_formula(&f.left, step.location, sa, false)? {
            return Ok(false);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub samples: u64,
    pub seed: u64,
    pub confidence: f64,
    pub parallelism: Parallelism,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { samples: 100_000, seed: 0, confidence: 0.99, parallelism: Parallelism::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub successes: u64,
    pub samples: u64,
    pub mean: f64,
    /// Half width of the normal-approximation confidence interval.
    pub half_width: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl Estimate {
    pub fn interval(&self) -> (f64, f64) {
        ((self.mean - self.half_width).max(0.0), (self.mean + self.half_width).min(1.0))
    }

    /// Verdict of `prob cmp bound` from the confidence interval; undecided when the
    /// interval straddles the bound.
    pub fn verdict(&self, cmp: Cmp, bound: &Rational) -> Verdict {
        let (lo, hi) = self.interval();
        let lo = Rational::from_f64(lo).unwrap_or_else(crate::rational::zero);
        let hi = Rational::from_f64(hi).unwrap_or_else(crate::rational::one);
        cmp.decide(&lo, &hi, bound)
    }
}

/// Standard normal quantile for a two-sided interval at `confidence`.
pub fn z_value(confidence: f64) -> Result<f64, SimError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(SimError::InvalidConfidence(confidence));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// The generator for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Estimates the probability of the until's path formula.
pub fn estimate_until(
    sa: &StochasticAutomaton,
    adv: &dyn Adversary,
    f: &UntilFormula,
    opts: SimOptions,
) -> Result<Estimate, SimError> {
    if opts.samples == 0 {
        return Err(SimError::NoSamples);
    }
    if let Some(v) = sa.validate().violations.first() {
        return Err(SimError::InvalidModel(v.to_string()));
    }
    if !matches!(f.time_cmp, Cmp::Lt | Cmp::Le) {
        let shown = format!("{}{}", f.time_cmp, format_rational(&f.time_bound));
        return Err(FormulaError::UnsupportedTimeBound(shown).into());
    }
    let z = z_value(opts.confidence)?;
    let horizon = to_f64(&f.time_bound);
    let outcomes = opts.parallelism.map_range(0, opts.samples, |i| {
        let mut rng = path_rng(opts.seed, i);
        let mut decided = |s: &SimStep| -> bool {
            eval_state_formula(&f.right, s.location, sa, false).unwrap_or(true)
                || !eval_state_formula(&f.left, s.location, sa, false).unwrap_or(false)
        };
        let path = sample_path(sa, adv, &mut rng, horizon, &mut decided)?;
        Ok::<bool, SimError>(until_holds(&path, f, sa)?)
    });
    let mut successes = 0u64;
    for o in outcomes {
        successes += o? as u64;
    }
    let n = opts.samples as f64;
    let mean = successes as f64 / n;
    let half_width = z * (mean * (1.0 - mean) / n).sqrt();
    Ok(Estimate { successes, samples: opts.samples, mean, half_width, confidence: opts.confidence, seed: opts.seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::logic::{parse_formula, Formula};

    fn until(text: &str) -> UntilFormula {
        match parse_formula(text).unwrap() {
            Formula::Until(u) => *u,
            _ => unreachable!(),
        }
    }

    #[test]
    fn z_for_ninety_nine_percent() {
        assert!((z_value(0.99).unwrap() - 2.5758).abs() < 1e-3);
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn seeded_runs_are_reproducible_across_modes() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let f = until("[ (phi0|phi1) U{<1} phi2 ] >= 9/10");
        let seq = SimOptions { samples: 2_000, seed: 7, parallelism: Parallelism::Sequential, ..Default::default() };
        let par = SimOptions { parallelism: Parallelism::Parallel, ..seq };
        let a = estimate_until(&sa, &adv, &f, seq).unwrap();
        let b = estimate_until(&sa, &adv, &f, par).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn packet_estimate_is_near_the_lower_bound() {
        // at least 1/6 and at most 1 - 7/30 from the exact engine
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let f = until("[ (phi0|phi1) U{<1} phi2 ] >= 9/10");
        let est = estimate_until(&sa, &adv, &f, SimOptions { samples: 20_000, ..Default::default() }).unwrap();
        assert!(est.mean > 1.0 / 6.0 - 0.02 && est.mean < 23.0 / 30.0 + 0.02, "{}", est.mean);
        assert_eq!(est.verdict(f.prob_cmp, &f.prob_bound), Verdict::False);
    }

    #[test]
    fn paths_respect_the_horizon() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let mut rng = path_rng(3, 0);
        let path = sample_path(&sa, &adv, &mut rng, 1.0, |_| false).unwrap();
        assert_eq!(path.steps[0].location, sa.initial);
        assert!(path.steps.iter().all(|s| s.time <= 1.0));
        assert!(path.steps.windows(2).all(|w| w[0].time <= w[1].time));
        let again = sample_path(&sa, &adv, &mut path_rng(3, 0), 1.0, |_| false).unwrap();
        assert_eq!(path, again);
    }

    #[test]
    fn unbounded_paths_end_in_the_terminating_location() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let s2 = sa.location_named("s2").unwrap();
        for seed in 0..20 {
            let path = sample_path(&sa, &adv, &mut path_rng(seed, 0), f64::INFINITY, |_| false).unwrap();
            assert!(path.terminal);
            assert_eq!(path.steps.last().unwrap().location, s2);
            assert_eq!(path.steps.last().unwrap().fired.as_ref().unwrap().1, "fail");
            assert!(path.trace(&sa).ends_with("s2 end\n"));
        }
    }

    #[test]
    fn trivial_estimates_are_exact() {
        let sa = fixtures::packet_producer();
        let adv = fixtures::benevolent();
        let opts = SimOptions { samples: 500, ..Default::default() };
        let at_start = estimate_until(&sa, &adv, &until("[ tt U{<1} phi0 ] > 0"), opts).unwrap();
        assert_eq!((at_start.mean, at_start.half_width), (1.0, 0.0));
        let nowhere = estimate_until(&sa, &adv, &until("[ tt U{<1} nowhere ] > 0"), opts).unwrap();
        assert_eq!(nowhere.mean, 0.0);
    }
}
