//! Probabilistic real-time logic: syntax, desugaring, state-formula evaluation and
//! the top-level checking recipe.

mod ast;
mod check;
mod parser;

use std::collections::BTreeSet;

pub use ast::{Cmp, Formula, TimeBound, UntilFormula};
pub use check::{check, check_until, CheckError, CheckResult, EngineKind, EngineOptions, EngineReport, LeafOutcome};
pub use parser::{parse_formula, parse_surface, FormulaError};

use crate::automaton::{LocationId, StochasticAutomaton};
use crate::rational::one;

/// Three-valued outcome shared by every engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    True,
    False,
    Undecided,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Verdict {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::True => Some(true),
            Verdict::False => Some(false),
            Verdict::Undecided => None,
        }
    }
}

/// Rewrites every derived operator into the core grammar.
pub fn desugar(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::negation(Formula::True),
        Formula::Atom(a) => Formula::Atom(a.clone()),
        Formula::Not(a) => Formula::negation(desugar(a)),
        Formula::And(a, b) => Formula::and(desugar(a), desugar(b)),
        Formula::Or(a, b) => or_core(desugar(a), desugar(b)),
        Formula::Implies(a, b) => or_core(Formula::negation(desugar(a)), desugar(b)),
        Formula::Until(u) => Formula::until(UntilFormula {
            left: desugar(&u.left),
            right: desugar(&u.right),
            ..(**u).clone()
        }),
        Formula::Eventually { time, body, prob_cmp, prob_bound } => Formula::until(UntilFormula {
            left: Formula::True,
            right: desugar(body),
            time_cmp: time.cmp,
            time_bound: time.bound.clone(),
            prob_cmp: *prob_cmp,
            prob_bound: prob_bound.clone(),
        }),
        // P(always phi) = 1 - P(eventually !phi)
        Formula::Always { time, body, prob_cmp, prob_bound } => Formula::until(UntilFormula {
            left: Formula::True,
            right: Formula::negation(desugar(body)),
            time_cmp: time.cmp,
            time_bound: time.bound.clone(),
            prob_cmp: prob_cmp.mirrored(),
            prob_bound: one() - prob_bound,
        }),
        Formula::Forall { left, right, time } => Formula::until(UntilFormula {
            left: desugar(left),
            right: desugar(right),
            time_cmp: time.cmp,
            time_bound: time.bound.clone(),
            prob_cmp: Cmp::Ge,
            prob_bound: one(),
        }),
        Formula::Exists { left, right, time } => Formula::until(UntilFormula {
            left: desugar(left),
            right: desugar(right),
            time_cmp: time.cmp,
            time_bound: time.bound.clone(),
            prob_cmp: Cmp::Gt,
            prob_bound: crate::rational::zero(),
        }),
    }
}

fn or_core(a: Formula, b: Formula) -> Formula {
    Formula::negation(Formula::and(Formula::negation(a), Formula::negation(b)))
}

/// Atomic propositions mentioned anywhere in `f`.
pub fn atoms(f: &Formula) -> BTreeSet<String> {
    fn walk(f: &Formula, out: &mut BTreeSet<String>) {
        match f {
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::True | Formula::False => {}
            Formula::Not(a) => walk(a, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            Formula::Until(u) => {
                walk(&u.left, out);
                walk(&u.right, out);
            }
            Formula::Eventually { body, .. } | Formula::Always { body, .. } => walk(body, out),
            Formula::Forall { left, right, .. } | Formula::Exists { left, right, .. } => {
                walk(left, out);
                walk(right, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(f, &mut out);
    out
}

/// Propositional evaluation of a state formula at `loc`. Atoms that label no
/// location are false, or an error when `strict`.
pub fn eval_state_formula(
    phi: &Formula,
    loc: LocationId,
    sa: &StochasticAutomaton,
    strict: bool,
) -> Result<bool, FormulaError> {
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => {
            if sa.has_prop(loc, a) {
                true
            } else if strict && !sa.propositions().contains(a.as_str()) {
                return Err(FormulaError::UnknownProposition(a.clone()));
            } else {
                false
            }
        }
        Formula::Not(a) => !eval_state_formula(a, loc, sa, strict)?,
        Formula::And(a, b) => eval_state_formula(a, loc, sa, strict)? && eval_state_formula(b, loc, sa, strict)?,
        Formula::Or(a, b) => eval_state_formula(a, loc, sa, strict)? || eval_state_formula(b, loc, sa, strict)?,
        Formula::Implies(a, b) => !eval_state_formula(a, loc, sa, strict)? || eval_state_formula(b, loc, sa, strict)?,
        _ => return Err(FormulaError::NotAStateFormula(phi.to_string())),
    })
}

/// Evaluates the propositional skeleton of `f` at `loc`, with the until leaves
/// (in [`Formula::untils`] order) replaced by `leaves`. Undecided leaves are
/// resolved by trying every assignment: the result is definite only if all
/// assignments agree.
pub fn ground_eval(
    f: &Formula,
    leaves: &[Verdict],
    loc: LocationId,
    sa: &StochasticAutomaton,
    strict: bool,
) -> Result<Verdict, FormulaError> {
    let open: Vec<usize> = leaves
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == Verdict::Undecided)
        .map(|(i, _)| i)
        .collect();
    let mut seen: Option<bool> = None;
    for mask in 0u64..(1u64 << open.len()) {
        let mut values: Vec<bool> = leaves.iter().map(|v| v.as_bool().unwrap_or(false)).collect();
        for (bit, &i) in open.iter().enumerate() {
            values[i] = mask & (1 << bit) != 0;
        }
        let mut next = 0;
        let v = eval_with_leaves(f, &values, &mut next, loc, sa, strict)?;
        match seen {
            None => seen = Some(v),
            Some(prev) if prev != v => return Ok(Verdict::Undecided),
            Some(_) => {}
        }
    }
    Ok(Verdict::from_bool(seen.unwrap_or(false)))
}

fn eval_with_leaves(
    f: &Formula,
    values: &[bool],
    next: &mut usize,
    loc: LocationId,
    sa: &StochasticAutomaton,
    strict: bool,
) -> Result<bool, FormulaError> {
    Ok(match f {
        Formula::Until(_) => {
            let v = values[*next];
            *next += 1;
            v
        }
        Formula::Not(a) => !eval_with_leaves(a, values, next, loc, sa, strict)?,
        Formula::And(a, b) => {
            // both sides are always walked so leaf numbering stays aligned
            let x = eval_with_leaves(a, values, next, loc, sa, strict)?;
            let y = eval_with_leaves(b, values, next, loc, sa, strict)?;
            x && y
        }
        Formula::Or(a, b) => {
            let x = eval_with_leaves(a, values, next, loc, sa, strict)?;
            let y = eval_with_leaves(b, values, next, loc, sa, strict)?;
            x || y
        }
        Formula::Implies(a, b) => {
            let x = eval_with_leaves(a, values, next, loc, sa, strict)?;
            let y = eval_with_leaves(b, values, next, loc, sa, strict)?;
            !x || y
        }
        other => eval_state_formula(other, loc, sa, strict)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat;

    #[test]
    fn derived_operators_desugar() {
        let f = parse_formula("<>{<=5} a > 1/2").unwrap();
        assert_eq!(f.to_string(), "[ tt U{<=5} a ] > 1/2");
        assert_eq!(parse_formula("ff").unwrap(), Formula::negation(Formula::True));
        let imp = parse_formula("a => b").unwrap();
        let expected = Formula::negation(Formula::and(
            Formula::negation(Formula::negation(Formula::atom("a"))),
            Formula::negation(Formula::atom("b")),
        ));
        assert_eq!(imp, expected);
    }

    #[test]
    fn box_and_quantifier_forms() {
        let f = parse_formula("[]{<1} a >= 9/10").unwrap();
        let Formula::Until(u) = f else { panic!() };
        assert_eq!(u.right, Formula::negation(Formula::atom("a")));
        assert_eq!(u.prob_cmp, Cmp::Le);
        assert_eq!(u.prob_bound, rat(1, 10));
        let Formula::Until(u) = parse_formula("forall [ a U{<2} b ]").unwrap() else { panic!() };
        assert_eq!((u.prob_cmp, u.prob_bound), (Cmp::Ge, one()));
        let Formula::Until(u) = parse_formula("exists [ a U{<2} b ]").unwrap() else { panic!() };
        assert_eq!(u.prob_cmp, Cmp::Gt);
    }

    #[test]
    fn state_evaluation_on_the_packet_model() {
        let sa = fixtures::packet_producer();
        let s0 = sa.location_named("s0").unwrap();
        let s2 = sa.location_named("s2").unwrap();
        assert!(eval_state_formula(&Formula::atom("phi2"), s2, &sa, false).unwrap());
        let not_ff = parse_formula("!ff").unwrap();
        assert!(eval_state_formula(&not_ff, s0, &sa, false).unwrap());
        let both = parse_formula("phi0 & phi1").unwrap();
        assert!(!eval_state_formula(&both, s0, &sa, false).unwrap());
        assert!(!eval_state_formula(&Formula::atom("nowhere"), s0, &sa, false).unwrap());
        assert_eq!(
            eval_state_formula(&Formula::atom("nowhere"), s0, &sa, true),
            Err(FormulaError::UnknownProposition("nowhere".into()))
        );
    }

    #[test]
    fn ground_evaluation_is_three_valued() {
        let sa = fixtures::packet_producer();
        let s0 = sa.initial;
        let taut = parse_formula("[ a U{<1} b ] > 0 | ![ a U{<1} b ] > 0").unwrap();
        // the same until appears twice; each occurrence is its own leaf
        assert_eq!(ground_eval(&taut, &[Verdict::True, Verdict::True], s0, &sa, false), Ok(Verdict::True));
        let single = parse_formula("[ a U{<1} b ] > 0 & phi0").unwrap();
        assert_eq!(ground_eval(&single, &[Verdict::Undecided], s0, &sa, false), Ok(Verdict::Undecided));
        let masked = parse_formula("[ a U{<1} b ] > 0 & phi1").unwrap();
        assert_eq!(ground_eval(&masked, &[Verdict::Undecided], s0, &sa, false), Ok(Verdict::False));
    }
}
