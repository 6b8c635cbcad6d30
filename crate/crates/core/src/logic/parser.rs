//! Formula parser.
//!
//! ```text
//! phi   := imp
//! imp   := or ( "=>" imp )?
//! or    := and ( "|" and )*
//! and   := unary ( "&" unary )*
//! unary := "!" unary | primary
//! primary := "tt" | "ff" | atom | "(" phi ")"
//!          | "[" phi "U" time phi "]" cmp r
//!          | "<>" time? phi cmp r | "[" "]" time? phi cmp r
//!          | ("forall" | "exists") "[" phi "U" time phi "]"
//! time  := "{" cmp r "}"
//! ```

use thiserror::Error;

use super::ast::{Cmp, Formula, TimeBound, UntilFormula};
use crate::lexer::{Cursor, SyntaxError, Tok};
use crate::rational::{one, zero, Rational};

const RESERVED: &[&str] = &["tt", "ff", "U", "forall", "exists"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("parse error at {0}")]
    Parse(#[from] SyntaxError),
    #[error("until formulae cannot be nested (line {line}, column {column})")]
    NestedUntil { line: usize, column: usize },
    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),
    #[error("time bound `{0}` is not supported; only < and <= bounds can be checked")]
    UnsupportedTimeBound(String),
    #[error("`{0}` is not a state formula")]
    NotAStateFormula(String),
}

/// Parses and desugars a formula.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    parse_surface(text).map(|f| super::desugar(&f))
}

/// Parses a formula keeping the derived operators.
pub fn parse_surface(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser { cur: Cursor::new(text)?, in_path: false };
    let f = p.implication()?;
    p.cur.expect_end()?;
    Ok(f)
}

struct Parser {
    cur: Cursor,
    in_path: bool,
}

impl Parser {
    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if self.cur.eat_sym("=>") {
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.conjunction()?;
        while self.cur.eat_sym("|") {
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.unary()?;
        while self.cur.eat_sym("&") {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if self.cur.eat_sym("!") {
            return Ok(Formula::negation(self.unary()?));
        }
        self.primary()
    }

    fn nested_check(&self) -> Result<(), FormulaError> {
        if self.in_path {
            let (line, column) = self.cur.position();
            return Err(FormulaError::NestedUntil { line, column });
        }
        Ok(())
    }

    /// Parses a state formula inside a path operator.
    fn state(&mut self) -> Result<Formula, FormulaError> {
        let saved = std::mem::replace(&mut self.in_path, true);
        let f = self.implication();
        self.in_path = saved;
        f
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        if self.cur.eat_sym("(") {
            let f = self.implication()?;
            self.cur.expect_sym(")")?;
            return Ok(f);
        }
        if self.cur.is_sym("[") {
            self.nested_check()?;
            self.cur.advance();
            if self.cur.eat_sym("]") {
                let time = self.optional_time()?;
                let body = self.state()?;
                let (prob_cmp, prob_bound) = self.prob()?;
                return Ok(Formula::Always { time, body: Box::new(body), prob_cmp, prob_bound });
            }
            let (left, time, right) = self.until_body()?;
            let (prob_cmp, prob_bound) = self.prob()?;
            return Ok(Formula::until(UntilFormula {
                left,
                right,
                time_cmp: time.cmp,
                time_bound: time.bound,
                prob_cmp,
                prob_bound,
            }));
        }
        if self.cur.is_sym("<>") {
            self.nested_check()?;
            self.cur.advance();
            let time = self.optional_time()?;
            let body = self.state()?;
            let (prob_cmp, prob_bound) = self.prob()?;
            return Ok(Formula::Eventually { time, body: Box::new(body), prob_cmp, prob_bound });
        }
        if self.cur.is_keyword("forall") || self.cur.is_keyword("exists") {
            self.nested_check()?;
            let universal = self.cur.is_keyword("forall");
            self.cur.advance();
            self.cur.expect_sym("[")?;
            let (left, time, right) = self.until_body()?;
            let (left, right) = (Box::new(left), Box::new(right));
            return Ok(if universal {
                Formula::Forall { left, right, time }
            } else {
                Formula::Exists { left, right, time }
            });
        }
        match self.cur.advance() {
            Some(Tok::Ident(name)) => match name.as_str() {
                "tt" => Ok(Formula::True),
                "ff" => Ok(Formula::False),
                _ if RESERVED.contains(&name.as_str()) => {
                    Err(self.cur.error(format!("unexpected keyword `{name}`")).into())
                }
                _ => Ok(Formula::Atom(name)),
            },
            Some(t) => Err(self.cur.error(format!("unexpected {t}")).into()),
            None => Err(self.cur.error("unexpected end of formula").into()),
        }
    }

    /// `phi U time phi ]`, after the opening bracket.
    fn until_body(&mut self) -> Result<(Formula, TimeBound, Formula), FormulaError> {
        let left = self.state()?;
        if !self.cur.eat_keyword("U") {
            return Err(self.cur.error("expected `U`").into());
        }
        let time = self.time()?;
        let right = self.state()?;
        self.cur.expect_sym("]")?;
        Ok((left, time, right))
    }

    fn cmp(&mut self) -> Result<Cmp, FormulaError> {
        let c = match self.cur.peek() {
            Some(Tok::Sym("<")) => Cmp::Lt,
            Some(Tok::Sym("<=")) => Cmp::Le,
            Some(Tok::Sym(">")) => Cmp::Gt,
            Some(Tok::Sym(">=")) => Cmp::Ge,
            _ => return Err(self.cur.error("expected a comparator (<, <=, >, >=)").into()),
        };
        self.cur.advance();
        Ok(c)
    }

    fn time(&mut self) -> Result<TimeBound, FormulaError> {
        self.cur.expect_sym("{")?;
        let cmp = self.cmp()?;
        let bound = self.cur.expect_rational()?;
        if bound < zero() {
            return Err(self.cur.error("time bound must be non-negative").into());
        }
        self.cur.expect_sym("}")?;
        Ok(TimeBound { cmp, bound })
    }

    fn optional_time(&mut self) -> Result<TimeBound, FormulaError> {
        if self.cur.is_sym("{") {
            self.time()
        } else {
            Ok(TimeBound { cmp: Cmp::Ge, bound: zero() })
        }
    }

    fn prob(&mut self) -> Result<(Cmp, Rational), FormulaError> {
        let cmp = self.cmp()?;
        let p = self.cur.expect_rational()?;
        if p < zero() || p > one() {
            return Err(self.cur.error("probability bound must lie in [0, 1]").into());
        }
        Ok((cmp, p))
    }
}
