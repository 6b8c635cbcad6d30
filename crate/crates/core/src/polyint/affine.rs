//! Affine expressions and linear constraints over integration variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{Signed, Zero};

use super::Var;
use crate::rational::{format_rational, Rational};

/// `constant + Σ coeff·var`, with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AffineExpr {
    constant: Rational,
    coeffs: BTreeMap<Var, Rational>,
}

impl AffineExpr {
    pub fn constant_expr(c: Rational) -> Self {
        AffineExpr { constant: c, coeffs: BTreeMap::new() }
    }

    pub fn var(v: Var) -> Self {
        AffineExpr::term(v, Rational::from_integer(1.into()))
    }

    pub fn term(v: Var, c: Rational) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(v, c);
        }
        AffineExpr { constant: Rational::zero(), coeffs }
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rational> {
        &self.coeffs
    }

    pub fn coeff(&self, v: Var) -> Rational {
        self.coeffs.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.coeffs.contains_key(&v)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return AffineExpr::default();
        }
        AffineExpr {
            constant: &self.constant * c,
            coeffs: self.coeffs.iter().map(|(v, k)| (*v, k * c)).collect(),
        }
    }

    /// The expression with the `v` term dropped.
    pub fn without(&self, v: Var) -> Self {
        let mut out = self.clone();
        out.coeffs.remove(&v);
        out
    }

    /// Replaces `v` by `e`.
    pub fn substitute(&self, v: Var, e: &AffineExpr) -> Self {
        match self.coeffs.get(&v) {
            None => self.clone(),
            Some(c) => &self.without(v) + &e.scale(c),
        }
    }

    /// Range of the expression when each variable lies in its interval of `bounds`.
    /// Variables missing from `bounds` make the range unbounded (`None`).
    pub fn range(&self, bounds: &BTreeMap<Var, (Rational, Rational)>) -> (Option<Rational>, Option<Rational>) {
        let mut lo = Some(self.constant.clone());
        let mut hi = Some(self.constant.clone());
        for (v, c) in &self.coeffs {
            match bounds.get(v) {
                Some((a, b)) => {
                    let (small, large) = if c.is_positive() { (c * a, c * b) } else { (c * b, c * a) };
                    lo = lo.map(|l| l + small);
                    hi = hi.map(|h| h + large);
                }
                None => return (None, None),
            }
        }
        (lo, hi)
    }

    pub fn eval(&self, values: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut total = self.constant.clone();
        for (v, c) in &self.coeffs {
            total += c * values.get(v)?;
        }
        Some(total)
    }
}

impl Add<&AffineExpr> for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant += &rhs.constant;
        for (v, c) in &rhs.coeffs {
            let entry = out.coeffs.entry(*v).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out
    }
}

impl Neg for &AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        AffineExpr {
            constant: -&self.constant,
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, -c)).collect(),
        }
    }
}

impl Sub<&AffineExpr> for &AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: &AffineExpr) -> AffineExpr {
        self + &(-rhs)
    }
}

impl AffineExpr {
    /// Renders with `name` for each variable.
    pub fn render(&self, name: &dyn Fn(Var) -> String) -> String {
        let mut out = String::new();
        for (v, c) in &self.coeffs {
            if out.is_empty() {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                out.push_str(if c.is_negative() { " - " } else { " + " });
            }
            let mag = c.abs();
            if mag != Rational::from_integer(1.into()) {
                out.push_str(&format_rational(&mag));
                out.push('*');
            }
            out.push_str(&name(*v));
        }
        if out.is_empty() {
            out.push_str(&format_rational(&self.constant));
        } else if !self.constant.is_zero() {
            let sign = if self.constant.is_negative() { "-" } else { "+" };
            out.push_str(&format!(" {sign} {}", format_rational(&self.constant.abs())));
        }
        out
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| format!("v{v}")))
    }
}

/// `expr > 0` when strict, `expr >= 0` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub expr: AffineExpr,
    pub strict: bool,
}

impl Constraint {
    /// `a < b`.
    pub fn lt(a: &AffineExpr, b: &AffineExpr) -> Self {
        Constraint { expr: b - a, strict: true }
    }

    /// `a <= b`.
    pub fn le(a: &AffineExpr, b: &AffineExpr) -> Self {
        Constraint { expr: b - a, strict: false }
    }

    pub fn gt(a: &AffineExpr, b: &AffineExpr) -> Self {
        Constraint::lt(b, a)
    }

    pub fn ge(a: &AffineExpr, b: &AffineExpr) -> Self {
        Constraint::le(b, a)
    }

    /// Truth value if the constraint has no variables.
    pub fn constant_truth(&self) -> Option<bool> {
        if !self.expr.is_constant() {
            return None;
        }
        let c = self.expr.constant();
        Some(if self.strict { c.is_positive() } else { !c.is_negative() })
    }

    /// The complementary half-space (boundary handling flips strictness).
    pub fn negate(&self) -> Self {
        Constraint { expr: -&self.expr, strict: !self.strict }
    }

    pub fn holds(&self, values: &BTreeMap<Var, Rational>) -> Option<bool> {
        let v = self.expr.eval(values)?;
        Some(if self.strict { v.is_positive() } else { !v.is_negative() })
    }
}

impl Constraint {
    pub fn render(&self, name: &dyn Fn(Var) -> String) -> String {
        format!("{} {} 0", self.expr.render(name), if self.strict { ">" } else { ">=" })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| format!("v{v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn canonical_form_drops_zero_terms() {
        let x = AffineExpr::var(0);
        let d = &(&x + &AffineExpr::constant_expr(int(1))) - &x;
        assert!(d.is_constant());
        assert_eq!(d, AffineExpr::constant_expr(int(1)));
    }

    #[test]
    fn ranges_follow_coefficient_sign() {
        let e = &AffineExpr::constant_expr(int(1)) - &AffineExpr::var(0);
        let mut b = BTreeMap::new();
        b.insert(0, (rat(1, 4), rat(1, 2)));
        assert_eq!(e.range(&b), (Some(rat(1, 2)), Some(rat(3, 4))));
    }

    #[test]
    fn constant_constraints_resolve() {
        let zero = AffineExpr::default();
        assert_eq!(Constraint::lt(&zero, &zero).constant_truth(), Some(false));
        assert_eq!(Constraint::le(&zero, &zero).constant_truth(), Some(true));
    }
}
