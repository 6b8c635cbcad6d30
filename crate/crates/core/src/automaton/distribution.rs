//! Piecewise-polynomial clock distributions with exact rational coefficients.

use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, int, one, to_f64, zero, Rational};

/// Number of uniformly spaced density probes per piece in the monotonicity check.
pub const MONOTONICITY_PROBES: usize = 1024;

/// Absolute tolerance of the inverse-CDF root search.
pub const SAMPLE_TOLERANCE: f64 = 1e-12;

/// Dense univariate polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly1 {
    coeffs: Vec<Rational>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly1 { coeffs }
    }

    pub fn constant(c: Rational) -> Self {
        Poly1::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(zero(), |acc, c| acc * t + c)
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + to_f64(c))
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * int(k as i64))
                .collect(),
        )
    }

    /// Composition `p(t + shift)`.
    pub fn shifted(&self, shift: &Rational) -> Poly1 {
        let mut out = vec![zero(); self.coeffs.len()];
        // Horner on polynomials: acc = acc * (t + shift) + c
        for c in self.coeffs.iter().rev() {
            let mut next = vec![zero(); out.len()];
            for (k, a) in out.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                next[k] += a * shift;
                if k + 1 < next.len() {
                    next[k + 1] += a;
                }
            }
            next[0] += c;
            out = next;
        }
        Poly1::new(out)
    }
}

impl fmt::Display for Poly1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", format_rational(&mag))?,
                1 => write!(f, "{}*t", format_rational(&mag))?,
                _ => write!(f, "{}*t^{}", format_rational(&mag), k)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// One CDF piece: the polynomial is the CDF on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub lo: Rational,
    pub hi: Rational,
    pub cdf: Poly1,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("distribution has no pieces")]
    Empty,
    #[error("interval ({a}, {b}] is reversed")]
    ReversedInterval { a: String, b: String },
}

/// Defects found by [`Distribution::check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CdfDefect {
    EmptySupport,
    NegativeLowerBound,
    PiecesNotContiguous { piece: usize },
    Discontinuity { piece: usize },
    NotZeroAtLowerBound,
    NotNormalized { value_at_hi: Rational },
    Decreasing { piece: usize },
}

/// Continuous CDF given by polynomial pieces on a bounded support.
#[derive(Debug, Clone)]
pub struct Distribution {
    pieces: Vec<Piece>,
    // f64 copies of the coefficients used by the sampler
    fast: Vec<(f64, f64, Vec<f64>)>,
}

impl PartialEq for Distribution {
    fn eq(&self, other: &Self) -> bool {
        self.pieces == other.pieces
    }
}

impl Eq for Distribution {}

impl Distribution {
    pub fn new(pieces: Vec<Piece>) -> Result<Self, DistributionError> {
        if pieces.is_empty() {
            return Err(DistributionError::Empty);
        }
        let fast = pieces
            .iter()
            .map(|p| {
                (
                    to_f64(&p.lo),
                    to_f64(&p.hi),
                    p.cdf.coeffs().iter().map(to_f64).collect(),
                )
            })
            .collect();
        Ok(Distribution { pieces, fast })
    }

    /// Single-piece CDF on `[lo, hi]`.
    pub fn single(lo: Rational, hi: Rational, cdf: Poly1) -> Self {
        Distribution::new(vec![Piece { lo, hi, cdf }]).expect("one piece")
    }

    /// Uniform distribution on `[lo, hi]`.
    pub fn uniform(lo: Rational, hi: Rational) -> Self {
        let width = &hi - &lo;
        let cdf = Poly1::new(vec![-&lo / &width, one() / &width]);
        Distribution::single(lo, hi, cdf)
    }

    /// Piecewise-linear CDF through the given `(t, F(t))` knots.
    pub fn piecewise_linear(knots: &[(Rational, Rational)]) -> Result<Self, DistributionError> {
        if knots.len() < 2 {
            return Err(DistributionError::Empty);
        }
        let pieces = knots
            .windows(2)
            .map(|w| {
                let (t0, f0) = &w[0];
                let (t1, f1) = &w[1];
                let slope = (f1 - f0) / (t1 - t0);
                let intercept = f0 - &slope * t0;
                Piece { lo: t0.clone(), hi: t1.clone(), cdf: Poly1::new(vec![intercept, slope]) }
            })
            .collect();
        Distribution::new(pieces)
    }

    /// The same distribution delayed by `shift` time units.
    pub fn shifted(&self, shift: &Rational) -> Self {
        let neg = -shift;
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { lo: &p.lo + shift, hi: &p.hi + shift, cdf: p.cdf.shifted(&neg) })
            .collect();
        Distribution::new(pieces).expect("non-empty")
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn support_lo(&self) -> &Rational {
        &self.pieces[0].lo
    }

    pub fn support_hi(&self) -> &Rational {
        &self.pieces[self.pieces.len() - 1].hi
    }

    /// Piecewise derivative of the CDF.
    pub fn density_pieces(&self) -> Vec<(Rational, Rational, Poly1)> {
        self.pieces
            .iter()
            .map(|p| (p.lo.clone(), p.hi.clone(), p.cdf.derivative()))
            .collect()
    }

    /// Exact CDF value: 0 below the support, 1 at or above its upper end.
    pub fn cdf_at(&self, t: &Rational) -> Rational {
        if t <= self.support_lo() {
            return zero();
        }
        if t >= self.support_hi() {
            return one();
        }
        for p in &self.pieces {
            if t <= &p.hi {
                return p.cdf.eval(t);
            }
        }
        one()
    }

    /// `F(b) - F(a)`: probability of a value in `(a, b]`.
    pub fn interval_probability(&self, a: &Rational, b: &Rational) -> Result<Rational, DistributionError> {
        if a > b {
            return Err(DistributionError::ReversedInterval {
                a: format_rational(a),
                b: format_rational(b),
            });
        }
        Ok(self.cdf_at(b) - self.cdf_at(a))
    }

    pub fn cdf_f64(&self, t: f64) -> f64 {
        let (lo, _, _) = self.fast[0];
        let (_, hi, _) = self.fast[self.fast.len() - 1];
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        for (_, phi, coeffs) in &self.fast {
            if t <= *phi {
                return coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
            }
        }
        1.0
    }

    /// Inverse-transform sample: the smallest `t` in the support with `F(t) >= u`,
    /// located by bisection to [`SAMPLE_TOLERANCE`].
    pub fn sample(&self, u: f64) -> f64 {
        let mut lo = self.fast[0].0;
        let mut hi = self.fast[self.fast.len() - 1].1;
        if u <= 0.0 {
            return lo;
        }
        while hi - lo > SAMPLE_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf_f64(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Structural and CDF-shape checks; an empty result means the distribution is valid.
    /// Monotonicity is probed on [`MONOTONICITY_PROBES`] points per piece.
    pub fn check(&self) -> Vec<CdfDefect> {
        let mut defects = Vec::new();
        if self.support_lo().is_negative() {
            defects.push(CdfDefect::NegativeLowerBound);
        }
        if self.support_lo() >= self.support_hi() {
            defects.push(CdfDefect::EmptySupport);
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if p.lo >= p.hi {
                defects.push(CdfDefect::EmptySupport);
            }
            if i + 1 < self.pieces.len() {
                let next = &self.pieces[i + 1];
                if p.hi != next.lo {
                    defects.push(CdfDefect::PiecesNotContiguous { piece: i + 1 });
                } else if p.cdf.eval(&p.hi) != next.cdf.eval(&next.lo) {
                    defects.push(CdfDefect::Discontinuity { piece: i + 1 });
                }
            }
        }
        let first = &self.pieces[0];
        if !first.cdf.eval(&first.lo).is_zero() {
            defects.push(CdfDefect::NotZeroAtLowerBound);
        }
        let last = &self.pieces[self.pieces.len() - 1];
        let top = last.cdf.eval(&last.hi);
        if top != one() {
            defects.push(CdfDefect::NotNormalized { value_at_hi: top });
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if p.lo >= p.hi {
                continue;
            }
            let density = p.cdf.derivative();
            let step = (&p.hi - &p.lo) / int(MONOTONICITY_PROBES as i64 - 1);
            let decreasing = (0..MONOTONICITY_PROBES).any(|k| {
                let t = &p.lo + &step * int(k as i64);
                density.eval(&t).is_negative()
            });
            if decreasing {
                defects.push(CdfDefect::Decreasing { piece: i });
            }
        }
        defects
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cdf {{ ")?;
        for p in &self.pieces {
            write!(f, "[{},{}]: {}; ", format_rational(&p.lo), format_rational(&p.hi), p.cdf)?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn f_x() -> Distribution {
        // 2t - t^2 on [0,1]
        Distribution::single(zero(), one(), Poly1::new(vec![zero(), int(2), int(-1)]))
    }

    fn f_y() -> Distribution {
        Distribution::single(zero(), one(), Poly1::new(vec![zero(), zero(), one()]))
    }

    #[test]
    fn cdf_closed_form_values() {
        assert_eq!(f_x().cdf_at(&rat(1, 2)), rat(3, 4));
        assert_eq!(f_x().cdf_at(&rat(-1, 2)), zero());
        assert_eq!(f_x().cdf_at(&one()), one());
        assert_eq!(f_x().cdf_at(&int(7)), one());
    }

    #[test]
    fn interval_probabilities() {
        let shifted = f_x().shifted(&rat(1, 2));
        assert_eq!(shifted.interval_probability(&rat(1, 2), &one()).unwrap(), rat(3, 4));
        assert_eq!(f_y().interval_probability(&zero(), &rat(1, 2)).unwrap(), rat(1, 4));
        assert_eq!(f_y().interval_probability(&rat(1, 3), &rat(1, 3)).unwrap(), zero());
        assert!(f_y().interval_probability(&one(), &zero()).is_err());
    }

    #[test]
    fn shifted_cdf_matches_closed_form() {
        // 2(t-1/2) - (t-1/2)^2 = -t^2 + 3t - 5/4
        let s = f_x().shifted(&rat(1, 2));
        assert_eq!(s.pieces()[0].cdf, Poly1::new(vec![rat(-5, 4), int(3), int(-1)]));
        assert!(s.check().is_empty());
    }

    #[test]
    fn sampling_inverts_the_cdf() {
        assert!((f_x().sample(0.75) - 0.5).abs() < 1e-9);
        assert!((f_y().sample(0.25) - 0.5).abs() < 1e-9);
        assert_eq!(f_x().sample(0.0), 0.0);
        let s = f_x().shifted(&rat(1, 2));
        assert_eq!(s.sample(0.0), 0.5);
    }

    #[test]
    fn detects_unnormalized_cdf() {
        let d = Distribution::single(zero(), one(), Poly1::new(vec![zero(), rat(9, 10)]));
        assert!(matches!(d.check().as_slice(), [CdfDefect::NotNormalized { .. }]));
    }

    #[test]
    fn detects_decreasing_and_discontinuous_pieces() {
        // t^2 - t/2 ... dips below zero density near 0
        let d = Distribution::single(zero(), one(), Poly1::new(vec![zero(), rat(-1, 2), rat(3, 2)]));
        assert!(d.check().contains(&CdfDefect::Decreasing { piece: 0 }));
        let gap = Distribution::new(vec![
            Piece { lo: zero(), hi: rat(1, 2), cdf: Poly1::new(vec![zero(), one()]) },
            Piece { lo: rat(1, 2), hi: one(), cdf: Poly1::new(vec![int(-1), int(2)]) },
        ])
        .unwrap();
        assert!(gap.check().contains(&CdfDefect::Discontinuity { piece: 1 }));
    }

    #[test]
    fn piecewise_linear_knots() {
        let d = Distribution::piecewise_linear(&[
            (rat(1, 2), zero()),
            (one(), rat(1, 4)),
            (int(2), one()),
        ])
        .unwrap();
        assert!(d.check().is_empty());
        assert_eq!(d.cdf_at(&rat(3, 2)), rat(5, 8));
    }

    #[test]
    fn display_round_trips_through_text() {
        assert_eq!(f_x().pieces()[0].cdf.to_string(), "2*t - 1*t^2");
    }
}
