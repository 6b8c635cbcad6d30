//! Formula syntax trees. One type carries both the core grammar and the derived
//! operators; [`super::desugar`] removes the latter.

use std::fmt;

use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
        }
    }

    /// Three-valued decision of `prob cmp bound` knowing only `lower <= prob <= upper`.
    pub fn decide(self, lower: &Rational, upper: &Rational, bound: &Rational) -> super::Verdict {
        use super::Verdict;
        let (yes, no) = match self {
            Cmp::Gt => (lower > bound, upper <= bound),
            Cmp::Ge => (lower >= bound, upper < bound),
            Cmp::Lt => (upper < bound, lower >= bound),
            Cmp::Le => (upper <= bound, lower > bound),
        };
        if yes {
            Verdict::True
        } else if no {
            Verdict::False
        } else {
            Verdict::Undecided
        }
    }

    /// The comparator `c'` with `x c p  <=>  (1 - x) c' (1 - p)`.
    pub fn mirrored(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Gt,
            Cmp::Le => Cmp::Ge,
            Cmp::Gt => Cmp::Lt,
            Cmp::Ge => Cmp::Le,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `[left U{time_cmp time_bound} right] prob_cmp prob_bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UntilFormula {
    pub left: Formula,
    pub right: Formula,
    pub time_cmp: Cmp,
    pub time_bound: Rational,
    pub prob_cmp: Cmp,
    pub prob_bound: Rational,
}

/// Time bound of a derived path operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeBound {
    pub cmp: Cmp,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Until(Box<UntilFormula>),
    // derived operators
    False,
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `<>{~c} body ≃ p`
    Eventually { time: TimeBound, body: Box<Formula>, prob_cmp: Cmp, prob_bound: Rational },
    /// `[]{~c} body ≃ p`
    Always { time: TimeBound, body: Box<Formula>, prob_cmp: Cmp, prob_bound: Rational },
    /// `forall [left U{~c} right]`: the until holds with probability 1.
    Forall { left: Box<Formula>, right: Box<Formula>, time: TimeBound },
    /// `exists [left U{~c} right]`: the until holds with positive probability.
    Exists { left: Box<Formula>, right: Box<Formula>, time: TimeBound },
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn negation(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(u: UntilFormula) -> Formula {
        Formula::Until(Box::new(u))
    }

    /// True if no derived operator occurs.
    pub fn is_core(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(a) => a.is_core(),
            Formula::And(a, b) => a.is_core() && b.is_core(),
            Formula::Until(u) => u.left.is_core() && u.right.is_core(),
            _ => false,
        }
    }

    /// True if no path operator occurs.
    pub fn is_state_formula(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(a) => a.is_state_formula(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.is_state_formula() && b.is_state_formula()
            }
            _ => false,
        }
    }

    /// Until leaves, left to right.
    pub fn untils(&self) -> Vec<&UntilFormula> {
        let mut out = Vec::new();
        self.collect_untils(&mut out);
        out
    }

    fn collect_untils<'a>(&'a self, out: &mut Vec<&'a UntilFormula>) {
        match self {
            Formula::Until(u) => out.push(u),
            Formula::Not(a) => a.collect_untils(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_untils(out);
                b.collect_untils(out);
            }
            _ => {}
        }
    }
}

fn write_time(f: &mut fmt::Formatter<'_>, t: &TimeBound) -> fmt::Result {
    write!(f, "{{{}{}}}", t.cmp, format_rational(&t.bound))
}

impl fmt::Display for UntilFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[ {} U{{{}{}}} {} ] {} {}",
            self.left,
            self.time_cmp,
            format_rational(&self.time_bound),
            self.right,
            self.prob_cmp,
            format_rational(&self.prob_bound)
        )
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "tt"),
            Formula::False => write!(f, "ff"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} => {b})"),
            Formula::Until(u) => write!(f, "{u}"),
            Formula::Eventually { time, body, prob_cmp, prob_bound } => {
                write!(f, "(<>")?;
                write_time(f, time)?;
                write!(f, " {body} {prob_cmp} {})", format_rational(prob_bound))
            }
            Formula::Always { time, body, prob_cmp, prob_bound } => {
                write!(f, "([]")?;
                write_time(f, time)?;
                write!(f, " {body} {prob_cmp} {})", format_rational(prob_bound))
            }
            Formula::Forall { left, right, time } => {
                write!(f, "forall [ {left} U")?;
                write_time(f, time)?;
                write!(f, " {right} ]")
            }
            Formula::Exists { left, right, time } => {
                write!(f, "exists [ {left} U")?;
                write_time(f, time)?;
                write!(f, " {right} ]")
            }
        }
    }
}
