//! Text format for standalone integration problems.
//!
//! ```text
//! var x cdf { [0,1]: 2*x - x^2; }
//! var y density { [0,1]: 2*y; }
//! var w                # Lebesgue measure; must be bounded by the constraints
//! require x + w < 1
//! require y >= x
//! order w x y          # optional, innermost first
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use super::{default_order, polytope_probability, AffineExpr, Constraint, Density, IntegrationOptions, PolyIntError, Var};
use crate::automaton::{parse_pieces, Distribution, DistributionError};
use crate::lexer::{Cursor, SyntaxError, Tok};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("variable `{var}`: {source}")]
    Distribution { var: String, source: DistributionError },
    #[error(transparent)]
    Integration(#[from] PolyIntError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    /// Variable names; `Var` `i` is `names[i]`.
    pub names: Vec<String>,
    pub densities: BTreeMap<Var, Density>,
    pub constraints: Vec<Constraint>,
    pub order: Vec<Var>,
}

impl Problem {
    pub fn solve(&self, opts: IntegrationOptions) -> Result<Rational, PolyIntError> {
        polytope_probability(&self.densities, &self.constraints, &self.order, opts)
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    let mut cur = Cursor::new(text)?;
    let mut names: Vec<String> = Vec::new();
    let mut densities = BTreeMap::new();
    let mut constraints = Vec::new();
    let mut order = None;
    while !cur.at_end() {
        if cur.eat_keyword("var") {
            let name = cur.expect_ident()?;
            if names.contains(&name) {
                return Err(cur.error(format!("variable `{name}` declared twice")).into());
            }
            let v = names.len() as Var;
            if cur.eat_keyword("cdf") {
                let pieces = parse_pieces(&mut cur, &name)?;
                let dist = Distribution::new(pieces)
                    .map_err(|source| ProblemError::Distribution { var: name.clone(), source })?;
                densities.insert(v, Density::of_distribution(&dist));
            } else if cur.eat_keyword("density") {
                let pieces = parse_pieces(&mut cur, &name)?;
                densities.insert(v, Density::new(pieces.into_iter().map(|p| (p.lo, p.hi, p.cdf)).collect()));
            }
            names.push(name);
        } else if cur.eat_keyword("require") {
            let lhs = affine(&mut cur, &names)?;
            let cmp = match cur.advance() {
                Some(Tok::Sym(s @ ("<" | "<=" | ">" | ">="))) => s,
                _ => return Err(cur.error("expected a comparator (<, <=, >, >=)").into()),
            };
            let rhs = affine(&mut cur, &names)?;
            constraints.push(match cmp {
                "<" => Constraint::lt(&lhs, &rhs),
                "<=" => Constraint::le(&lhs, &rhs),
                ">" => Constraint::gt(&lhs, &rhs),
                _ => Constraint::ge(&lhs, &rhs),
            });
        } else if cur.eat_keyword("order") {
            let mut vs = Vec::new();
            while let Some(Tok::Ident(_)) = cur.peek() {
                if cur.is_keyword("var") || cur.is_keyword("require") || cur.is_keyword("order") {
                    break;
                }
                vs.push(lookup(&mut cur, &names)?);
            }
            order = Some(vs);
        } else {
            return Err(cur.error("expected `var`, `require` or `order`").into());
        }
    }
    let order = order.unwrap_or_else(|| default_order(0..names.len() as Var));
    Ok(Problem { names, densities, constraints, order })
}

fn lookup(cur: &mut Cursor, names: &[String]) -> Result<Var, SyntaxError> {
    let name = cur.expect_ident()?;
    names
        .iter()
        .position(|n| *n == name)
        .map(|i| i as Var)
        .ok_or_else(|| cur.error(format!("undeclared variable `{name}`")))
}

/// `[-] term (("+" | "-") term)*` with `term := rational ["*" var] | var`.
fn affine(cur: &mut Cursor, names: &[String]) -> Result<AffineExpr, SyntaxError> {
    let mut acc = AffineExpr::constant_expr(Rational::from_integer(0.into()));
    let mut negative = cur.eat_sym("-");
    loop {
        let term = match cur.peek() {
            Some(Tok::Number(_)) => {
                let c = cur.expect_rational()?;
                if cur.eat_sym("*") {
                    AffineExpr::term(lookup(cur, names)?, c)
                } else {
                    AffineExpr::constant_expr(c)
                }
            }
            Some(Tok::Ident(_)) => AffineExpr::var(lookup(cur, names)?),
            _ => return Err(cur.error("expected a number or a variable")),
        };
        acc = if negative { &acc - &term } else { &acc + &term };
        if cur.eat_sym("+") {
            negative = false;
        } else if cur.eat_sym("-") {
            negative = true;
        } else {
            return Ok(acc);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn packet_systems_from_text() {
        let base = "var x cdf { [0,1]: 2*x - x^2; }\nvar y cdf { [0,1]: y^2; }\nvar z cdf { [0,1]: z; }\n";
        let one_sixth = parse_problem(&format!("{base}require y < x")).unwrap();
        assert_eq!(one_sixth.solve(IntegrationOptions::default()).unwrap(), rat(1, 6));
        let three_fifths = parse_problem(&format!("{base}require x < y\nrequire x + z < 1\norder z y x")).unwrap();
        assert_eq!(three_fifths.order, vec![2, 1, 0]);
        assert_eq!(three_fifths.solve(IntegrationOptions::default()).unwrap(), rat(3, 5));
    }

    #[test]
    fn lebesgue_and_density_forms() {
        let p = parse_problem("var u density { [0,1]: 1; }\nvar w\nrequire w > 0\nrequire 2*w - u < 0").unwrap();
        assert!(!p.densities.contains_key(&1));
        // area under w < u/2 over the unit interval
        assert_eq!(p.solve(IntegrationOptions::default()).unwrap(), rat(1, 4));
    }

    #[test]
    fn errors_have_positions() {
        match parse_problem("var x\nrequire x < q") {
            Err(ProblemError::Syntax(e)) => assert_eq!(e.line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_problem("var x\nvar x").is_err());
    }
}
