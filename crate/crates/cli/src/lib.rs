use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pwcet_core::engine::{wcet_accelerated_with, EngineOptions};
use pwcet_core::explorer::{simulate_with, wcet_baseline_with, BaselineOptions, SimOptions};
use pwcet_core::model::{parse_model, validate, Pta};
use pwcet_core::report::{emit_comparison, emit_dot, emit_report, ComparisonDoc, Format, Report};
use pwcet_core::{bundled, AnalysisError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNBOUNDED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pwcet", version, about = "Expected worst-case execution time of probabilistic timed automata")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the expected WCET of a model.
    Analyze(AnalyzeArgs),
    /// Estimate the expected WCET by sampling runs.
    Simulate(SimulateArgs),
    /// Check a model against the structural assumptions of the analysis.
    Validate(ModelArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file. Names of bundled models are accepted when no such file exists.
    pub model: PathBuf,
    /// Print machine-readable JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Accel,
    Baseline,
    Compare,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Probabilities at or below this bound are treated as zero.
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Accel)]
    pub mode: ModeArg,
    /// Write the explored zone graph in Graphviz format.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn load(path: &Path) -> Result<String, String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => bundled::get(&path.to_string_lossy())
            .map(str::to_owned)
            .ok_or_else(|| format!("cannot read {}: {e}", path.display())),
    }
}

fn load_model(args: &ModelArgs, err: &mut dyn Write) -> Result<Pta, i32> {
    let src = load(&args.model).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INVALID
    })?;
    parse_model(&src).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", args.model.display());
        EXIT_INVALID
    })
}

/// Loads and validates; warnings go to `err`, errors abort.
fn checked_model(args: &ModelArgs, err: &mut dyn Write) -> Result<Pta, i32> {
    let pta = load_model(args, err)?;
    let violations = validate(&pta);
    for v in &violations {
        let _ = writeln!(err, "{v}");
    }
    if violations.iter().any(|v| v.is_error()) {
        return Err(EXIT_INVALID);
    }
    Ok(pta)
}

fn failure(e: &AnalysisError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    match e {
        AnalysisError::WcetUnbounded { .. }
        | AnalysisError::NonConvergingCycle { .. }
        | AnalysisError::NoExitEdge { .. } => EXIT_UNBOUNDED,
        _ => EXIT_INVALID,
    }
}

fn format(json: bool) -> Format {
    if json {
        Format::Json
    } else {
        Format::Text
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Validate(args) => {
            let pta = match load_model(&args, err) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let violations = validate(&pta);
            if args.json {
                let items: Vec<_> = violations
                    .iter()
                    .map(|v| serde_json::json!({"error": v.is_error(), "message": v.to_string()}))
                    .collect();
                let _ = writeln!(out, "{}", serde_json::json!({"model": pta.name, "violations": items}));
            } else {
                for v in &violations {
                    let _ = writeln!(out, "{v}");
                }
                let _ = writeln!(out, "{} violations", violations.len());
            }
            if violations.iter().any(|v| v.is_error()) {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
        Command::Simulate(args) => {
            let pta = match checked_model(&args.model, err) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let stats = simulate_with(
                &pta,
                &SimOptions {
                    trials: args.trials,
                    seed: args.seed,
                    ..Default::default()
                },
            );
            if args.model.json {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                let _ = writeln!(out, "trials:     {}", stats.trials);
                let _ = writeln!(out, "mean:       {}", stats.mean);
                let _ = writeln!(out, "std_err:    {}", stats.std_err);
                let _ = writeln!(out, "terminated: {}", stats.terminated_fraction);
            }
            EXIT_OK
        }
        Command::Analyze(args) => analyze(args, out, err),
    }
}

fn analyze(args: AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(args.delta > 0.0 && args.delta < 1.0) {
        let _ = writeln!(err, "error: --delta must lie in (0, 1)");
        return EXIT_INVALID;
    }
    let pta = match checked_model(&args.model, err) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let graph = args.dot.is_some();
    let run_accel = || {
        wcet_accelerated_with(
            &pta,
            args.delta,
            &EngineOptions {
                capture_graph: graph,
                ..Default::default()
            },
        )
    };
    let run_baseline = |capture: bool| {
        wcet_baseline_with(
            &pta,
            args.delta,
            &BaselineOptions {
                capture_graph: capture,
                ..Default::default()
            },
        )
    };
    let fmt = format(args.model.json);
    let shown: Report = match args.mode {
        ModeArg::Accel => match run_accel() {
            Ok(r) => {
                let _ = writeln!(out, "{}", emit_report(&r, fmt));
                r
            }
            Err(e) => return failure(&e, err),
        },
        ModeArg::Baseline => match run_baseline(graph) {
            Ok(r) => {
                let _ = writeln!(out, "{}", emit_report(&r, fmt));
                r
            }
            Err(e) => return failure(&e, err),
        },
        ModeArg::Compare => {
            let (b, a) = std::thread::scope(|s| {
                let b = s.spawn(|| run_baseline(false));
                let a = run_accel();
                (b.join().expect("baseline thread"), a)
            });
            let (b, a) = match (b, a) {
                (Ok(b), Ok(a)) => (b, a),
                (Err(e), _) | (_, Err(e)) => return failure(&e, err),
            };
            let _ = writeln!(out, "{}", emit_comparison(&ComparisonDoc::new(&b, &a), fmt));
            a
        }
    };
    if let Some(path) = &args.dot {
        let dot = emit_dot(shown.graph.as_ref().expect("graph was captured"));
        if let Err(e) = std::fs::write(path, dot) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_INVALID;
        }
    }
    EXIT_OK
}
