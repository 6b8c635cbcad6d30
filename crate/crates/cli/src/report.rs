//! Serializable reports. Rationals appear as exact `p/q` strings next to a
//! `_decimal` approximation.

use std::fmt::Write;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{Map, Value};

use stochcheck::automaton::ValidationReport;
use stochcheck::logic::{CheckResult, EngineKind, EngineOptions, EngineReport, LeafOutcome, Verdict};
use stochcheck::polyint::Problem;
use stochcheck::rational::{format_rational, to_f64, Rational};

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub verdict: String,
    pub engine: String,
    pub formula: String,
    /// Totals of the single until, or null when the formula has several.
    pub totals: Option<Map<String, Value>>,
    pub iterations_or_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_decimal: Option<f64>,
    pub leaves: Vec<LeafReport>,
    pub wall_time_ms: u64,
    pub model_hash: String,
}

#[derive(Debug, Serialize)]
pub struct LeafReport {
    pub until: String,
    pub verdict: String,
    pub totals: Map<String, Value>,
    pub iterations_or_depth: usize,
}

fn put_rational(map: &mut Map<String, Value>, key: &str, r: &Rational) {
    map.insert(key.to_string(), Value::from(format_rational(r)));
    map.insert(format!("{key}_decimal"), Value::from(to_f64(r)));
}

fn verdict_name(engine: EngineKind, v: Verdict) -> &'static str {
    match (engine, v) {
        (_, Verdict::Undecided) => "undecided",
        (EngineKind::Matrix, Verdict::True) => "pass",
        (EngineKind::Matrix, Verdict::False) => "fail",
        (_, Verdict::True) => "true",
        (_, Verdict::False) => "false",
    }
}

fn engine_name(engine: EngineKind) -> &'static str {
    match engine {
        EngineKind::Matrix => "matrix",
        EngineKind::Region => "region",
        EngineKind::MonteCarlo => "monte-carlo",
    }
}

fn leaf_report(engine: EngineKind, leaf: &LeafOutcome) -> LeafReport {
    let mut totals = Map::new();
    let steps = match &leaf.report {
        EngineReport::Matrix(r) => {
            put_rational(&mut totals, "total_pass", &r.totals.total_pass);
            put_rational(&mut totals, "total_fail", &r.totals.total_fail);
            put_rational(&mut totals, "error", &r.totals.error);
            r.iterations
        }
        EngineReport::Region(r) => {
            put_rational(&mut totals, "sigma_p", &r.totals.sigma_p);
            put_rational(&mut totals, "sigma_f", &r.totals.sigma_f);
            put_rational(&mut totals, "undecided_mass", &r.totals.undecided_mass);
            r.depth
        }
        EngineReport::MonteCarlo(e) => {
            totals.insert("mean".into(), Value::from(e.mean));
            totals.insert("half_width".into(), Value::from(e.half_width));
            totals.insert("confidence".into(), Value::from(e.confidence));
            totals.insert("successes".into(), Value::from(e.successes));
            totals.insert("samples".into(), Value::from(e.samples));
            totals.insert("seed".into(), Value::from(e.seed));
            e.samples as usize
        }
    };
    LeafReport {
        until: leaf.until.to_string(),
        verdict: verdict_name(engine, leaf.verdict).to_string(),
        totals,
        iterations_or_depth: steps,
    }
}

impl RunReport {
    pub fn new(opts: &EngineOptions, formula: &str, result: &CheckResult, wall_time_ms: u64, model_hash: String) -> Self {
        let leaves: Vec<LeafReport> = result.leaves.iter().map(|l| leaf_report(opts.engine, l)).collect();
        let single = (leaves.len() == 1).then(|| &leaves[0]);
        let delta = match opts.engine {
            EngineKind::Matrix => opts.delta.as_ref(),
            _ => None,
        };
        RunReport {
            verdict: verdict_name(opts.engine, result.verdict).to_string(),
            engine: engine_name(opts.engine).to_string(),
            formula: formula.to_string(),
            totals: single.map(|l| l.totals.clone()),
            iterations_or_depth: single.map(|l| l.iterations_or_depth),
            delta: delta.map(format_rational),
            delta_decimal: delta.map(to_f64),
            leaves,
            wall_time_ms,
            model_hash,
        }
    }
}

fn write_totals(out: &mut String, totals: &Map<String, Value>, indent: &str) {
    for (k, v) in totals {
        if k.ends_with("_decimal") {
            continue;
        }
        let shown = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match totals.get(&format!("{k}_decimal")) {
            Some(d) => writeln!(out, "{indent}{k}: {shown} ({d})").unwrap(),
            None => writeln!(out, "{indent}{k}: {shown}").unwrap(),
        }
    }
}

pub fn render_text(r: &RunReport) -> String {
    let mut out = String::new();
    writeln!(out, "verdict: {}", r.verdict).unwrap();
    writeln!(out, "engine: {}", r.engine).unwrap();
    writeln!(out, "formula: {}", r.formula).unwrap();
    if let Some(d) = &r.delta {
        writeln!(out, "delta: {d}").unwrap();
    }
    for leaf in &r.leaves {
        writeln!(out, "until {} -> {} after {}", leaf.until, leaf.verdict, leaf.iterations_or_depth).unwrap();
        write_totals(&mut out, &leaf.totals, "  ");
    }
    writeln!(out, "wall time: {} ms", r.wall_time_ms).unwrap();
    writeln!(out, "model hash: {}", r.model_hash).unwrap();
    out
}

/// 0 for pass/true, 1 for fail/false, 3 for undecided.
pub fn exit_code(verdict: &str) -> ExitCode {
    match verdict {
        "pass" | "true" => ExitCode::SUCCESS,
        "fail" | "false" => ExitCode::from(1),
        _ => ExitCode::from(3),
    }
}

#[derive(Debug, Serialize)]
pub struct IntegrateReport {
    pub probability: String,
    pub probability_decimal: f64,
    pub order: Vec<String>,
    pub constraints: Vec<String>,
}

impl IntegrateReport {
    pub fn new(problem: &Problem, p: &Rational) -> Self {
        let name = |v: u32| problem.names[v as usize].clone();
        let constraints = problem
            .constraints
            .iter()
            .map(|c| c.render(&name))
            .collect();
        IntegrateReport {
            probability: format_rational(p),
            probability_decimal: to_f64(p),
            order: problem.order.iter().map(|v| name(*v)).collect(),
            constraints,
        }
    }

    pub fn text(&self) -> String {
        format!("probability: {} ({})\n", self.probability, self.probability_decimal)
    }
}

#[derive(Debug, Serialize)]
pub struct ViolationEntry {
    pub code: String,
    pub element: String,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub valid: bool,
    pub violations: Vec<ViolationEntry>,
}

impl ValidateReport {
    pub fn new(report: &ValidationReport) -> Self {
        ValidateReport {
            valid: report.is_ok(),
            violations: report
                .violations
                .iter()
                .map(|v| ViolationEntry { code: v.code.to_string(), element: v.element.clone(), detail: v.detail.clone() })
                .collect(),
        }
    }

    pub fn text(&self) -> String {
        if self.valid {
            return "valid\n".into();
        }
        let mut out = String::new();
        for v in &self.violations {
            writeln!(out, "{}: {} ({})", v.code, v.element, v.detail).unwrap();
        }
        out
    }
}
