use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use stochcheck::adversary::{load_policy, StaticPolicy};
use stochcheck::automaton::{parse_automaton, StochasticAutomaton};
use stochcheck::exec::Parallelism;
use stochcheck::logic::{check, parse_formula, EngineKind, EngineOptions, Formula};
use stochcheck::polyint::{parse_problem, IntegrationOptions};
use stochcheck::rational::{parse_rational, to_f64, Rational};
use stochcheck::region::{DEFAULT_MAX_CELLS, DEFAULT_MAX_DEPTH};
use stochcheck::simulate::{path_rng, sample_path};

mod report;

use report::{exit_code, render_text, IntegrateReport, RunReport, ValidateReport};

#[derive(Parser)]
#[command(name = "stochcheck", version, about = "Bounded-until model checking for stochastic automata")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a formula with the discretised matrix engine.
    Check {
        #[command(flatten)]
        input: Input,
        /// Time step, e.g. 1/2.
        #[arg(long, value_parser = rational_arg)]
        delta: Rational,
    },
    /// Decide a formula with the exact region-tree engine.
    RegionCheck {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
        /// Cap on integration cells per branch.
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: usize,
    },
    /// Estimate until probabilities by sampling paths.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        /// Write one sampled path as `time location action` lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Integrate a constraint system given in a problem file.
    Integrate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: usize,
    },
    /// Check a model for well-formedness.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    formula: String,
    /// Policy file; without one, only unambiguous edges can be resolved.
    #[arg(long)]
    adversary: Option<PathBuf>,
    /// Reject propositions that label no location.
    #[arg(long)]
    strict: bool,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

type Failure = String;

struct Loaded {
    sa: StochasticAutomaton,
    adversary: StaticPolicy,
    formula: Formula,
    hash: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load(input: &Input) -> Result<Loaded, Failure> {
    let model_text = read(&input.model)?;
    let sa = parse_automaton(&model_text).map_err(|e| format!("{}: {e}", input.model.display()))?;
    let report = sa.validate();
    if !report.is_ok() {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(format!("{}: invalid model\n{}", input.model.display(), lines.join("\n")));
    }
    let mut hasher = Sha256::new();
    hash_part(&mut hasher, model_text.as_bytes());
    let adversary = match &input.adversary {
        Some(path) => {
            let text = read(path)?;
            hash_part(&mut hasher, text.as_bytes());
            load_policy(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => StaticPolicy::new(),
    };
    hash_part(&mut hasher, input.formula.as_bytes());
    let formula = parse_formula(&input.formula).map_err(|e| format!("formula: {e}"))?;
    Ok(Loaded { sa, adversary, formula, hash: hex::encode(hasher.finalize().as_ref() as &[u8]) })
}

fn hash_part(hasher: &mut Sha256, bytes: &[u8]) {
    hasher.update((bytes.len() as u64).to_le_bytes());
    hasher.update(bytes);
}

fn parallelism(jobs: usize) -> Result<Parallelism, Failure> {
    match jobs {
        1 => Ok(Parallelism::Sequential),
        0 => Ok(Parallelism::Parallel),
        n => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("cannot start {n} workers: {e}"))?;
            Ok(Parallelism::Parallel)
        }
    }
}

fn run_engine(cli: &Cli, input: &Input, opts: EngineOptions) -> Result<ExitCode, Failure> {
    let loaded = load(input)?;
    let start = Instant::now();
    let result = check(&loaded.sa, &loaded.adversary, &loaded.formula, &opts).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_millis() as u64;
    let report = RunReport::new(&opts, &input.formula, &result, elapsed, loaded.hash);
    emit(cli.format, &report, render_text(&report));
    Ok(exit_code(&report.verdict))
}

fn emit<T: serde::Serialize>(format: Format, value: &T, text: String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("reports serialize")),
        Format::Text => print!("{text}"),
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let parallelism = parallelism(cli.jobs)?;
    let base = |input: &Input| EngineOptions { strict: input.strict, parallelism, ..EngineOptions::default() };
    match &cli.command {
        Command::Check { input, delta } => {
            let opts = EngineOptions { engine: EngineKind::Matrix, delta: Some(delta.clone()), ..base(input) };
            run_engine(cli, input, opts)
        }
        Command::RegionCheck { input, max_depth, max_cells } => {
            let opts = EngineOptions { engine: EngineKind::Region, max_depth: *max_depth, max_cells: *max_cells, ..base(input) };
            run_engine(cli, input, opts)
        }
        Command::Simulate { input, samples, seed, confidence, trace } => {
            if let Some(path) = trace {
                write_trace(input, *seed, path)?;
            }
            let opts = EngineOptions {
                engine: EngineKind::MonteCarlo,
                samples: *samples,
                seed: *seed,
                confidence: *confidence,
                ..base(input)
            };
            run_engine(cli, input, opts)
        }
        Command::Integrate { file, max_cells } => {
            let text = read(file)?;
            let problem = parse_problem(&text).map_err(|e| format!("{}: {e}", file.display()))?;
            let p = problem.solve(IntegrationOptions { max_cells: *max_cells }).map_err(|e| e.to_string())?;
            let report = IntegrateReport::new(&problem, &p);
            emit(cli.format, &report, report.text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { model } => {
            let text = read(model)?;
            let sa = parse_automaton(&text).map_err(|e| format!("{}: {e}", model.display()))?;
            let validation = sa.validate();
            for v in &validation.violations {
                eprintln!("error: {v}");
            }
            let report = ValidateReport::new(&validation);
            emit(cli.format, &report, report.text());
            Ok(if validation.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

/// Samples path 0 of the run up to the first until's time bound.
fn write_trace(input: &Input, seed: u64, path: &Path) -> Result<(), Failure> {
    let loaded = load(input)?;
    let horizon = loaded
        .formula
        .untils()
        .first()
        .map(|u| to_f64(&u.time_bound))
        .ok_or("--trace needs a formula with an until")?;
    let sampled = sample_path(&loaded.sa, &loaded.adversary, &mut path_rng(seed, 0), horizon, |_| false)
        .map_err(|e| e.to_string())?;
    fs::write(path, sampled.trace(&loaded.sa)).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
