//! Sparse multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::affine::AffineExpr;
use super::Var;
use crate::automaton::Poly1;
use crate::rational::{format_rational, int, Rational};

/// Sorted `(variable, exponent)` pairs; exponents are positive.
pub type Monomial = Vec<(Var, u32)>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Rational>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = MultiPoly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn one() -> Self {
        MultiPoly::constant(Rational::one())
    }

    pub fn var(v: Var) -> Self {
        let mut p = MultiPoly::zero();
        p.add_term(vec![(v, 1)], Rational::one());
        p
    }

    /// Univariate polynomial read in variable `v`.
    pub fn from_poly1(p: &Poly1, v: Var) -> Self {
        let mut out = MultiPoly::zero();
        for (k, c) in p.coeffs().iter().enumerate() {
            let mono = if k == 0 { Vec::new() } else { vec![(v, k as u32)] };
            out.add_term(mono, c.clone());
        }
        out
    }

    pub fn from_affine(e: &AffineExpr) -> Self {
        let mut out = MultiPoly::constant(e.constant().clone());
        for (v, c) in e.coeffs() {
            out.add_term(vec![(*v, 1)], c.clone());
        }
        out
    }

    fn add_term(&mut self, mono: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.iter().any(|(x, _)| *x == v))
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| *v)).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut out = MultiPoly::one();
        for _ in 0..exp {
            out = &out * self;
        }
        out
    }

    /// Antiderivative with respect to `v` (zero constant of integration).
    pub fn antiderivative(&self, v: Var) -> Self {
        let mut out = MultiPoly::zero();
        for (mono, c) in &self.terms {
            let mut m = mono.clone();
            let k = match m.iter_mut().find(|(x, _)| *x == v) {
                Some(pair) => {
                    pair.1 += 1;
                    pair.1
                }
                None => {
                    let pos = m.partition_point(|(x, _)| *x < v);
                    m.insert(pos, (v, 1));
                    1
                }
            };
            out.add_term(m, c / int(k as i64));
        }
        out
    }

    /// Replaces every occurrence of `v` by `e`.
    pub fn substitute(&self, v: Var, e: &MultiPoly) -> Self {
        let mut powers: Vec<MultiPoly> = vec![MultiPoly::one()];
        let mut out = MultiPoly::zero();
        for (mono, c) in &self.terms {
            let mut rest = Vec::with_capacity(mono.len());
            let mut k = 0u32;
            for &(x, e) in mono {
                if x == v {
                    k = e;
                } else {
                    rest.push((x, e));
                }
            }
            while powers.len() <= k as usize {
                let next = powers.last().expect("non-empty") * e;
                powers.push(next);
            }
            let mut base = MultiPoly::zero();
            base.add_term(rest, c.clone());
            out = out + &base * &powers[k as usize];
        }
        out
    }

    /// Evaluates with every variable bound in `values`; missing variables are an error.
    pub fn eval(&self, values: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for (mono, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in mono {
                let x = values.get(v)?;
                t *= crate::rational::pow(x, *e);
            }
            total += t;
        }
        Some(total)
    }

    pub fn eval_f64(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(mono, c)| {
                mono.iter()
                    .fold(crate::rational::to_f64(c), |acc, (v, e)| acc * values[*v as usize].powi(*e as i32))
            })
            .sum()
    }
}

impl Add<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Add<MultiPoly> for MultiPoly {
    type Output = MultiPoly;
    fn add(mut self, rhs: MultiPoly) -> MultiPoly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Sub<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &(-rhs)
    }
}

impl Mul<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (mono, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", format_rational(c))?;
            for (v, e) in mono {
                if *e == 1 {
                    write!(f, "*v{v}")?;
                } else {
                    write!(f, "*v{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn arithmetic_cancels_terms() {
        let x = MultiPoly::var(0);
        let y = MultiPoly::var(1);
        let s = &(&x + &y) * &(&x - &y);
        let expected = &x.pow(2) - &y.pow(2);
        assert_eq!(s, expected);
        assert!((&s - &expected).is_zero());
    }

    #[test]
    fn substitution_composes() {
        // (v0 + 1)^2 with v0 := 2*v1
        let p = (&MultiPoly::var(0) + &MultiPoly::one()).pow(2);
        let q = p.substitute(0, &MultiPoly::var(1).scale(&rat(2, 1)));
        let mut at = BTreeMap::new();
        at.insert(1, rat(1, 2));
        assert_eq!(q.eval(&at), Some(rat(4, 1)));
    }

    #[test]
    fn antiderivative_power_rule() {
        let p = MultiPoly::var(0).scale(&rat(2, 1));
        assert_eq!(p.antiderivative(0), MultiPoly::var(0).pow(2));
        let c = MultiPoly::var(1).antiderivative(0);
        assert_eq!(c, &MultiPoly::var(0) * &MultiPoly::var(1));
    }
}
