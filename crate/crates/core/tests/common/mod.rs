//! Random small models shared by the property and acceptance tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stochcheck::adversary::StaticPolicy;
use stochcheck::automaton::{write_automaton, AutomatonBuilder, Distribution, StochasticAutomaton};
use stochcheck::logic::{parse_formula, Formula, UntilFormula};
use stochcheck::rational::{rat, Rational};

pub struct Case {
    pub seed: u64,
    pub sa: StochasticAutomaton,
    pub policy: StaticPolicy,
    pub formula: UntilFormula,
    pub formula_text: String,
    pub delta: Rational,
}

impl Case {
    /// Model, policy and formula as text, for failure messages.
    pub fn describe(&self) -> String {
        format!("seed {}\n{}policy {:?}\nformula {}\ndelta {}", self.seed, write_automaton(&self.sa), self.policy, self.formula_text, self.delta)
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty")
}

/// Piecewise-linear CDF with one or two pieces on `[lo, lo + width]`.
fn random_distribution(rng: &mut ChaCha8Rng) -> Distribution {
    let lo = pick(rng, &[rat(1, 2), rat(3, 4), rat(1, 1)]).clone();
    let width = pick(rng, &[rat(1, 4), rat(1, 2), rat(1, 1)]).clone();
    let hi = &lo + &width;
    let mut knots = vec![(lo.clone(), rat(0, 1))];
    if rng.random_bool(0.5) {
        let mid = (&lo + &hi) / rat(2, 1);
        knots.push((mid, pick(rng, &[rat(1, 4), rat(1, 2), rat(3, 4)]).clone()));
    }
    knots.push((hi, rat(1, 1)));
    Distribution::piecewise_linear(&knots).expect("knots are increasing")
}

/// A valid model with 2 to 4 locations and at most 2 clocks per location, a
/// memoryless policy resolving every choice, and a bounded until whose time
/// bound is a multiple of the step size.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_loc = rng.random_range(2..=4usize);
    let names: Vec<String> = (0..n_loc).map(|i| format!("l{i}")).collect();
    let mut builder = AutomatonBuilder::new();
    let mut policy = StaticPolicy::new();
    let mut settings: Vec<Vec<String>> = Vec::new();
    for i in 0..n_loc {
        let k = if i == 0 { rng.random_range(1..=2) } else { rng.random_range(0..=2) };
        let clocks: Vec<String> = (0..k).map(|j| format!("c{i}{j}")).collect();
        for c in &clocks {
            builder = builder.clock(c, random_distribution(&mut rng));
        }
        settings.push(clocks);
    }
    for (i, name) in names.iter().enumerate() {
        // the initial location satisfies every generated left side and no right side
        let props: Vec<&str> = if i == 0 {
            vec!["a"]
        } else {
            ["a", "b"].into_iter().filter(|_| rng.random_bool(0.5)).collect()
        };
        let setting: Vec<&str> = settings[i].iter().map(String::as_str).collect();
        builder = builder.location(name, &setting, &props);
    }
    builder = builder.initial("l0");
    for (i, name) in names.iter().enumerate() {
        for (j, clock) in settings[i].iter().enumerate() {
            let fanout = if rng.random_bool(0.25) { 2 } else { 1 };
            let mut actions = Vec::new();
            for e in 0..fanout {
                let action = format!("e{i}{j}{e}");
                let target = pick(&mut rng, &names).clone();
                builder = builder.edge(name, &action, clock, &target);
                actions.push(action);
            }
            let chosen = pick(&mut rng, &actions).clone();
            policy.insert(name, clock, &chosen).expect("one choice per pair");
        }
    }
    let sa = builder.build().expect("generated model is well-formed");
    let left = pick(&mut rng, &["tt", "a", "!b"]);
    let right = pick(&mut rng, &["b", "a & b", "!a"]);
    let time_cmp = pick(&mut rng, &["<", "<="]);
    let bound = pick(&mut rng, &["1", "3/2", "2"]);
    let prob_cmp = pick(&mut rng, &["<", "<=", ">", ">="]);
    let p = pick(&mut rng, &["1/10", "1/4", "1/2", "3/4", "9/10"]);
    let formula_text = format!("[ {left} U{{{time_cmp}{bound}}} {right} ] {prob_cmp} {p}");
    let formula = match parse_formula(&formula_text).expect("generated formula parses") {
        Formula::Until(u) => *u,
        other => panic!("not an until: {other}"),
    };
    let delta = pick(&mut rng, &[rat(1, 4), rat(1, 8)]).clone();
    Case { seed, sa, policy, formula, formula_text, delta }
}
