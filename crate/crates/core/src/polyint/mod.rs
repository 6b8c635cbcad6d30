//! Exact iterated integration of polynomial densities over regions cut out by
//! linear constraints.
//!
//! Variables are eliminated one at a time. When several lower (or upper) bounds
//! on the variable being eliminated remain and their order depends on outer
//! variables, the outer domain is split by the pairwise comparisons and the
//! pieces are summed.

mod affine;
mod poly;
mod problem;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use thiserror::Error;

pub use affine::{AffineExpr, Constraint};
pub use poly::{Monomial, MultiPoly};
pub use problem::{parse_problem, Problem, ProblemError};

use crate::automaton::{Distribution, Poly1};
use crate::rational::{format_rational, one, Rational};

/// Integration variable index.
pub type Var = u32;

/// Default cap on the number of cells the case split may produce.
pub const DEFAULT_MAX_CELLS: usize = 64;

/// How many rounds of interval propagation run before each elimination step.
const PROPAGATION_ROUNDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyIntError {
    #[error("bound mentions the integration variable v{0}")]
    VarInBound(Var),
    #[error("variable v{0} is not bounded by the constraints and supports")]
    UnboundedRegion(Var),
    #[error("case split exceeded the limit of {0} cells")]
    DepthExceeded(usize),
    #[error("density of v{var} integrates to {total}, not 1")]
    DensityNotNormalized { var: Var, total: String },
    #[error("variable v{0} appears in a constraint but not in the elimination order")]
    UneliminatedVariable(Var),
    #[error("variable v{0} appears twice in the elimination order")]
    RepeatedVariable(Var),
}

/// Piecewise-polynomial density: `(lo, hi, density polynomial)` per piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Density {
    pieces: Vec<(Rational, Rational, Poly1)>,
}

impl Density {
    pub fn new(pieces: Vec<(Rational, Rational, Poly1)>) -> Self {
        Density { pieces }
    }

    /// The piecewise derivative of a CDF.
    pub fn of_distribution(dist: &Distribution) -> Self {
        Density { pieces: dist.density_pieces() }
    }

    pub fn uniform(lo: Rational, hi: Rational) -> Self {
        let h = one() / (&hi - &lo);
        Density { pieces: vec![(lo, hi, Poly1::constant(h))] }
    }

    pub fn pieces(&self) -> &[(Rational, Rational, Poly1)] {
        &self.pieces
    }

    pub fn support(&self) -> (Rational, Rational) {
        (self.pieces[0].0.clone(), self.pieces[self.pieces.len() - 1].1.clone())
    }

    pub fn total_mass(&self) -> Rational {
        let mut total = Rational::zero();
        for (lo, hi, p) in &self.pieces {
            let anti = MultiPoly::from_poly1(p, 0).antiderivative(0);
            let at = |t: &Rational| {
                let mut m = BTreeMap::new();
                m.insert(0, t.clone());
                anti.eval(&m).expect("single variable")
            };
            total += at(hi) - at(lo);
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrationOptions {
    pub max_cells: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { max_cells: DEFAULT_MAX_CELLS }
    }
}

/// `∫_{lower}^{upper} p d(var)`.
pub fn poly_integrate(
    p: &MultiPoly,
    var: Var,
    lower: &AffineExpr,
    upper: &AffineExpr,
) -> Result<MultiPoly, PolyIntError> {
    if lower.mentions(var) || upper.mentions(var) {
        return Err(PolyIntError::VarInBound(var));
    }
    let anti = p.antiderivative(var);
    Ok(&anti.substitute(var, &MultiPoly::from_affine(upper)) - &anti.substitute(var, &MultiPoly::from_affine(lower)))
}

/// Elimination order with the last declared variable innermost.
pub fn default_order(vars: impl IntoIterator<Item = Var>) -> Vec<Var> {
    let mut vs: Vec<Var> = vars.into_iter().collect();
    vs.sort_unstable();
    vs.dedup();
    vs.reverse();
    vs
}

type Bounds = BTreeMap<Var, (Rational, Rational)>;

/// Probability mass of the region `constraints` under the product of `densities`,
/// eliminating variables in `order` (first entry innermost). Variables listed in
/// `order` without a density carry Lebesgue measure and must be bounded by the
/// constraints.
pub fn polytope_probability(
    densities: &BTreeMap<Var, Density>,
    constraints: &[Constraint],
    order: &[Var],
    opts: IntegrationOptions,
) -> Result<Rational, PolyIntError> {
    for (v, d) in densities {
        let total = d.total_mass();
        if total != one() {
            return Err(PolyIntError::DensityNotNormalized { var: *v, total: format_rational(&total) });
        }
    }
    let mut seen = BTreeSet::new();
    for v in order {
        if !seen.insert(*v) {
            return Err(PolyIntError::RepeatedVariable(*v));
        }
    }
    for c in constraints {
        if let Some(v) = c.expr.vars().find(|v| !seen.contains(v)) {
            return Err(PolyIntError::UneliminatedVariable(v));
        }
    }
    let mut live = Vec::new();
    for c in constraints {
        match c.constant_truth() {
            Some(true) => {}
            Some(false) => return Ok(Rational::zero()),
            None => live.push(c.clone()),
        }
    }
    let bounds: Bounds = densities
        .iter()
        .filter(|(v, _)| seen.contains(v))
        .map(|(v, d)| (*v, d.support()))
        .collect();
    let mut ctx = Ctx { densities, opts, cells: 0 };
    ctx.solve(MultiPoly::one(), live, order, bounds)
}

struct Ctx<'a> {
    densities: &'a BTreeMap<Var, Density>,
    opts: IntegrationOptions,
    cells: usize,
}

impl Ctx<'_> {
    fn solve(
        &mut self,
        integrand: MultiPoly,
        constraints: Vec<Constraint>,
        order: &[Var],
        bounds: Bounds,
    ) -> Result<Rational, PolyIntError> {
        let Some((&v, rest)) = order.split_first() else {
            self.cells += 1;
            if self.cells > self.opts.max_cells {
                return Err(PolyIntError::DepthExceeded(self.opts.max_cells));
            }
            return Ok(integrand.as_constant().unwrap_or_else(Rational::zero));
        };
        let pieces: Vec<Option<(Rational, Rational, Poly1)>> = match self.densities.get(&v) {
            Some(d) => d.pieces().iter().cloned().map(Some).collect(),
            None => vec![None],
        };
        let mut total = Rational::zero();
        for piece in pieces {
            let mut cons = constraints.clone();
            let mut bounds = bounds.clone();
            let integrand_v = match &piece {
                Some((lo, hi, dens)) => {
                    cons.push(Constraint::ge(&AffineExpr::var(v), &AffineExpr::constant_expr(lo.clone())));
                    cons.push(Constraint::le(&AffineExpr::var(v), &AffineExpr::constant_expr(hi.clone())));
                    bounds.insert(v, (lo.clone(), hi.clone()));
                    let d = MultiPoly::from_poly1(dens, v);
                    if d.is_zero() {
                        continue;
                    }
                    &integrand * &d
                }
                None => integrand.clone(),
            };
            let Some(bounds) = propagate(&cons, bounds) else {
                continue;
            };
            let mut lowers = BTreeSet::new();
            let mut uppers = BTreeSet::new();
            let mut outer = Vec::new();
            for c in cons {
                let a = c.expr.coeff(v);
                if a.is_zero() {
                    outer.push(c);
                } else {
                    let r = c.expr.without(v);
                    if a.is_positive() {
                        lowers.insert((-&r).scale(&(one() / &a)));
                    } else {
                        uppers.insert(r.scale(&(one() / -&a)));
                    }
                }
            }
            if lowers.is_empty() || uppers.is_empty() {
                return Err(PolyIntError::UnboundedRegion(v));
            }
            let lowers = undominated(lowers.into_iter().collect(), &bounds, true);
            let uppers = undominated(uppers.into_iter().collect(), &bounds, false);
            let anti = integrand_v.antiderivative(v);
            let mut inner_bounds = bounds.clone();
            inner_bounds.remove(&v);
            for (i, lo) in lowers.iter().enumerate() {
                for (j, hi) in uppers.iter().enumerate() {
                    let mut cell = outer.clone();
                    for (k, other) in lowers.iter().enumerate() {
                        if k != i {
                            cell.push(Constraint::ge(lo, other));
                        }
                    }
                    for (k, other) in uppers.iter().enumerate() {
                        if k != j {
                            cell.push(Constraint::le(hi, other));
                        }
                    }
                    cell.push(Constraint::lt(lo, hi));
                    let Some(cell) = simplify(cell) else {
                        continue;
                    };
                    let Some(cell_bounds) = propagate(&cell, inner_bounds.clone()) else {
                        continue;
                    };
                    let value = &anti.substitute(v, &MultiPoly::from_affine(hi))
                        - &anti.substitute(v, &MultiPoly::from_affine(lo));
                    if value.is_zero() {
                        continue;
                    }
                    total += self.solve(value, cell, rest, cell_bounds)?;
                }
            }
        }
        Ok(total)
    }
}

/// Drops constant-true constraints; `None` if one is constant-false.
fn simplify(cons: Vec<Constraint>) -> Option<Vec<Constraint>> {
    let mut out = Vec::with_capacity(cons.len());
    for c in cons {
        match c.constant_truth() {
            Some(true) => {}
            Some(false) => return None,
            None => {
                if !out.contains(&c) {
                    out.push(c)
                }
            }
        }
    }
    Some(out)
}

/// Tightens per-variable intervals from the constraints; `None` when some
/// interval becomes empty (the region has measure zero).
fn propagate(cons: &[Constraint], mut bounds: Bounds) -> Option<Bounds> {
    for _ in 0..PROPAGATION_ROUNDS {
        let mut changed = false;
        for c in cons {
            for (&k, a) in c.expr.coeffs() {
                let Some((lo_k, hi_k)) = bounds.get(&k).cloned() else {
                    continue;
                };
                let rest = c.expr.without(k);
                let (_, Some(rest_hi)) = rest.range(&bounds) else {
                    continue;
                };
                // a*v_k + rest > 0 implies a*v_k > -rest_hi
                if a.is_positive() {
                    let cand = -&rest_hi / a;
                    if cand > lo_k {
                        bounds.insert(k, (cand, hi_k));
                        changed = true;
                    }
                } else {
                    let cand = &rest_hi / -a;
                    if cand < hi_k {
                        bounds.insert(k, (lo_k, cand));
                        changed = true;
                    }
                }
            }
        }
        if bounds.values().any(|(lo, hi)| lo >= hi) {
            return None;
        }
        if !changed {
            break;
        }
    }
    Some(bounds)
}

/// Removes bounds that can never be the binding one within `bounds`.
fn undominated(mut exprs: Vec<AffineExpr>, bounds: &Bounds, lower: bool) -> Vec<AffineExpr> {
    let mut i = 0;
    while i < exprs.len() {
        let dominated = (0..exprs.len()).any(|k| {
            if k == i {
                return false;
            }
            // lower bounds: k dominates i if other >= this everywhere; uppers mirrored
            let diff = if lower { &exprs[k] - &exprs[i] } else { &exprs[i] - &exprs[k] };
            matches!(diff.range(bounds), (Some(lo), _) if !lo.is_negative())
        });
        if dominated {
            exprs.remove(i);
        } else {
            i += 1;
        }
    }
    exprs
}
