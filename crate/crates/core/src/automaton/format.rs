//! Plain-text model format.
//!
//! ```text
//! clock x cdf { [0,1]: 2*t - t^2; }
//! location s0 init set {x, y} props {phi0}
//! edge s0 -conc{x}-> s1
//! ```

use num_traits::Zero;
use thiserror::Error;

use super::{AutomatonBuilder, Distribution, DistributionError, ModelError, Piece, Poly1, StochasticAutomaton};
use crate::lexer::{Cursor, SyntaxError, Tok};
use crate::rational::{one, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("clock `{clock}`: {source}")]
    Distribution { clock: String, source: DistributionError },
}

pub fn parse_automaton(text: &str) -> Result<StochasticAutomaton, FormatError> {
    let mut cur = Cursor::new(text)?;
    let mut builder = AutomatonBuilder::new();
    let mut initial = None;
    while !cur.at_end() {
        let keyword = cur.expect_ident()?;
        match keyword.as_str() {
            "clock" => {
                let name = cur.expect_ident()?;
                if !cur.eat_keyword("cdf") {
                    return Err(cur.error("expected `cdf` after the clock name").into());
                }
                let pieces = parse_pieces(&mut cur, "t")?;
                let dist = Distribution::new(pieces)
                    .map_err(|source| FormatError::Distribution { clock: name.clone(), source })?;
                builder = builder.clock(&name, dist);
            }
            "location" => {
                let name = cur.expect_ident()?;
                let mut setting = Vec::new();
                let mut props = Vec::new();
                loop {
                    if cur.eat_keyword("init") {
                        if initial.replace(name.clone()).is_some() {
                            return Err(cur.error("more than one initial location").into());
                        }
                    } else if cur.eat_keyword("set") {
                        setting = cur.name_set()?;
                    } else if cur.eat_keyword("props") {
                        props = cur.name_set()?;
                    } else {
                        break;
                    }
                }
                let setting: Vec<&str> = setting.iter().map(String::as_str).collect();
                let props: Vec<&str> = props.iter().map(String::as_str).collect();
                builder = builder.location(&name, &setting, &props);
            }
            "edge" => {
                let source = cur.expect_ident()?;
                cur.expect_sym("-")?;
                let action = cur.expect_ident()?;
                cur.expect_sym("{")?;
                let trigger = cur.expect_ident()?;
                cur.expect_sym("}")?;
                cur.expect_sym("->")?;
                let target = cur.expect_ident()?;
                builder = builder.edge(&source, &action, &trigger, &target);
            }
            other => {
                return Err(cur.error(format!("unknown declaration `{other}`")).into())
            }
        }
    }
    if let Some(init) = initial {
        builder = builder.initial(&init);
    }
    Ok(builder.build()?)
}

/// `{ [lo,hi]: poly; ... }`, where `poly` is a polynomial in `var`.
pub(crate) fn parse_pieces(cur: &mut Cursor, var: &str) -> Result<Vec<Piece>, SyntaxError> {
    cur.expect_sym("{")?;
    let mut pieces = Vec::new();
    while !cur.eat_sym("}") {
        cur.expect_sym("[")?;
        let lo = cur.expect_rational()?;
        cur.expect_sym(",")?;
        let hi = cur.expect_rational()?;
        cur.expect_sym("]")?;
        cur.expect_sym(":")?;
        let cdf = poly_expr(cur, var)?;
        pieces.push(Piece { lo, hi, cdf });
        if !cur.eat_sym(";") && !cur.is_sym("}") {
            return Err(cur.error("expected `;` after a piece"));
        }
    }
    Ok(pieces)
}

/// Parses a standalone polynomial in `var`, e.g. `2*t - t^2`.
pub fn parse_polynomial(text: &str, var: &str) -> Result<Poly1, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let p = poly_expr(&mut cur, var)?;
    cur.expect_end()?;
    Ok(p)
}

fn poly_expr(cur: &mut Cursor, var: &str) -> Result<Poly1, SyntaxError> {
    let mut acc = if cur.eat_sym("-") {
        neg(&poly_term(cur, var)?)
    } else {
        cur.eat_sym("+");
        poly_term(cur, var)?
    };
    loop {
        if cur.eat_sym("+") {
            acc = add(&acc, &poly_term(cur, var)?);
        } else if cur.eat_sym("-") {
            acc = add(&acc, &neg(&poly_term(cur, var)?));
        } else {
            return Ok(acc);
        }
    }
}

fn poly_term(cur: &mut Cursor, var: &str) -> Result<Poly1, SyntaxError> {
    let mut acc = poly_power(cur, var)?;
    loop {
        if cur.eat_sym("*") {
            acc = mul(&acc, &poly_power(cur, var)?);
        } else if cur.eat_sym("/") {
            let d = poly_power(cur, var)?;
            match d.degree() {
                Some(0) => {
                    let c = d.coeffs()[0].clone();
                    acc = Poly1::new(acc.coeffs().iter().map(|a| a / &c).collect());
                }
                Some(_) => return Err(cur.error("division by a non-constant polynomial")),
                None => return Err(cur.error("division by zero")),
            }
        } else {
            return Ok(acc);
        }
    }
}

fn poly_power(cur: &mut Cursor, var: &str) -> Result<Poly1, SyntaxError> {
    let base = poly_atom(cur, var)?;
    if cur.eat_sym("^") {
        let exp = match cur.advance() {
            Some(Tok::Number(n)) => n.parse::<u32>().map_err(|_| cur.error("exponent must be a small integer"))?,
            _ => return Err(cur.error("expected an integer exponent")),
        };
        let mut out = Poly1::constant(one());
        for _ in 0..exp {
            out = mul(&out, &base);
        }
        return Ok(out);
    }
    Ok(base)
}

fn poly_atom(cur: &mut Cursor, var: &str) -> Result<Poly1, SyntaxError> {
    match cur.advance() {
        Some(Tok::Number(n)) => {
            let v = parse_rational(&n).map_err(|e| cur.error(e.to_string()))?;
            Ok(Poly1::constant(v))
        }
        Some(Tok::Ident(name)) if name == var => Ok(Poly1::new(vec![Rational::zero(), one()])),
        Some(Tok::Ident(name)) => Err(cur.error(format!("unknown variable `{name}` (expected `{var}`)"))),
        Some(Tok::Sym("(")) => {
            let inner = poly_expr(cur, var)?;
            cur.expect_sym(")")?;
            Ok(inner)
        }
        Some(Tok::Sym("-")) => Ok(neg(&poly_atom(cur, var)?)),
        Some(t) => Err(cur.error(format!("unexpected {t} in polynomial"))),
        None => Err(cur.error("unexpected end of polynomial")),
    }
}

fn add(a: &Poly1, b: &Poly1) -> Poly1 {
    let n = a.coeffs().len().max(b.coeffs().len());
    let get = |p: &Poly1, k: usize| p.coeffs().get(k).cloned().unwrap_or_else(Rational::zero);
    Poly1::new((0..n).map(|k| get(a, k) + get(b, k)).collect())
}

fn neg(a: &Poly1) -> Poly1 {
    Poly1::new(a.coeffs().iter().map(|c| -c).collect())
}

fn mul(a: &Poly1, b: &Poly1) -> Poly1 {
    if a.coeffs().is_empty() || b.coeffs().is_empty() {
        return Poly1::default();
    }
    let mut out = vec![Rational::zero(); a.coeffs().len() + b.coeffs().len() - 1];
    for (i, x) in a.coeffs().iter().enumerate() {
        for (j, y) in b.coeffs().iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Poly1::new(out)
}

/// Renders a model in the format accepted by [`parse_automaton`].
pub fn write_automaton(sa: &StochasticAutomaton) -> String {
    let mut out = String::new();
    for c in &sa.clocks {
        out.push_str(&format!("clock {} {}\n", c.name, c.dist));
    }
    for (i, l) in sa.locations.iter().enumerate() {
        out.push_str(&format!("location {}", l.name));
        if sa.initial.0 == i {
            out.push_str(" init");
        }
        let setting: Vec<&str> = l.setting.iter().map(|c| sa.clocks[c.0].name.as_str()).collect();
        out.push_str(&format!(" set {{{}}}", setting.join(", ")));
        let props: Vec<&str> = l.props.iter().map(String::as_str).collect();
        out.push_str(&format!(" props {{{}}}\n", props.join(", ")));
    }
    for e in &sa.edges {
        out.push_str(&format!(
            "edge {} -{}{{{}}}-> {}\n",
            sa.locations[e.source.0].name,
            e.action,
            sa.clocks[e.trigger.0].name,
            sa.locations[e.target.0].name
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, rat};

    #[test]
    fn parses_polynomials() {
        let p = parse_polynomial("2*t - t^2", "t").unwrap();
        assert_eq!(p, Poly1::new(vec![int(0), int(2), int(-1)]));
        let q = parse_polynomial("(t - 1/2)^2 / 2", "t").unwrap();
        assert_eq!(q, Poly1::new(vec![rat(1, 8), rat(-1, 2), rat(1, 2)]));
        assert!(parse_polynomial("t*u", "t").is_err());
    }

    #[test]
    fn fixture_round_trips() {
        let sa = fixtures::packet_producer();
        let text = write_automaton(&sa);
        let again = parse_automaton(&text).unwrap();
        assert_eq!(sa, again);
    }

    #[test]
    fn duplicate_actions_are_rejected() {
        let text = "clock x cdf { [0,1]: t; }\nlocation s init set {x}\nedge s -a{x}-> s\nedge s -a{x}-> s\n";
        assert!(matches!(
            parse_automaton(text),
            Err(FormatError::Model(ModelError::DuplicateAction { .. }))
        ));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = parse_automaton("clock x cdf { [0,1]: t; }\nlocation s init set {x\n").unwrap_err();
        assert!(matches!(err, FormatError::Syntax(SyntaxError { line: 2, .. })));
    }
}
