use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use powsec::harness::{
    bounds_report, catalog, catalog_entry, emit_results, oracle_report, parse_config, run_scenario,
    HarnessError, OutputFormat, ScenarioReport, ScenarioSpec,
};

/// Proof-of-work attack simulator and bound calculator.
#[derive(Parser)]
#[command(name = "powsec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every closed-form bound for a scenario as one JSON object.
    Bounds(Source),
    /// Run one scenario (a sweep in the file is ignored).
    Simulate(RunArgs),
    /// Run every point of the scenario's `[sweep]`.
    Sweep(RunArgs),
    /// Check the formulas against brute-force oracles.
    Oracle {
        #[arg(long, env = "POWSEC_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// List the built-in scenarios, or print one.
    Catalog { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// Scenario file (TOML).
    #[arg(long, env = "POWSEC_CONFIG", conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name; see `powsec catalog`.
    #[arg(long, env = "POWSEC_SCENARIO")]
    scenario: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// First seed; repetition i uses seed + i.
    #[arg(long, env = "POWSEC_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "POWSEC_REPS")]
    reps: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "POWSEC_JOBS")]
    jobs: Option<usize>,
    /// Per-run records go here.
    #[arg(long, env = "POWSEC_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "POWSEC_FORMAT", default_value = "csv")]
    format: OutputFormat,
}

enum Failure {
    Band,
    Config(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(src: &Source) -> Result<ScenarioSpec, Failure> {
    match (&src.config, &src.scenario) {
        (Some(path), _) => Ok(parse_config(path)?),
        (None, Some(name)) => match catalog_entry(name) {
            Some(e) => Ok(e.spec()?),
            None => Err(Failure::Config(format!(
                "no built-in scenario `{name}`; run `powsec catalog`"
            ))),
        },
        (None, None) => Err(Failure::Config(
            "need --config PATH or --scenario NAME".into(),
        )),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Failure::Config(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").map_err(|e| Failure::Config(e.to_string()))
}

fn report_verdict(report: &ScenarioReport) -> Result<(), Failure> {
    for s in &report.summaries {
        if let Some(v) = &s.verdict {
            eprintln!(
                "{} {}: {} = {:.6} (band [{}, {}])",
                if v.pass { "PASS" } else { "FAIL" },
                s.scenario,
                v.metric,
                v.value,
                v.lower,
                v.upper
            );
        }
    }
    for row in &report.tx_gap {
        if let (Some(l), Some(g), Some(p)) = (row.l, row.gap_ok, row.pass_rate_ok) {
            eprintln!(
                "{} {} l={l}: mean gap {:.6} vs bound {:.6}; filter pass rate {:.6} vs {:.6}",
                if g && p { "PASS" } else { "FAIL" },
                report.name,
                row.gap.mean,
                row.bound.unwrap_or(f64::NAN),
                row.pass_rate,
                row.expected_pass_rate.unwrap_or(f64::NAN)
            );
        }
    }
    match report.verdict() {
        Some(false) => Err(Failure::Band),
        _ => Ok(()),
    }
}

fn run(args: RunArgs, sweep: bool) -> Result<(), Failure> {
    let mut spec = load(&args.source)?;
    if sweep && spec.sweep.is_none() {
        return Err(Failure::Config(format!(
            "scenario `{}` has no [sweep] table",
            spec.name
        )));
    }
    if !sweep {
        spec.sweep = None;
    }
    if let Some(s) = args.seed {
        spec.seed_base = s;
    }
    if let Some(r) = args.reps {
        if r == 0 {
            return Err(Failure::Config("--reps must be at least 1".into()));
        }
        spec.repetitions = r;
    }
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_scenario(&spec, jobs)?;
    if let Some(path) = &args.out {
        emit_results(&report.records, path, args.format)?;
    }
    print_json(&report)?;
    report_verdict(&report)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bounds(src) => {
            let spec = load(&src)?;
            print_json(&bounds_report(&spec.config, spec.horizon))
        }
        Command::Simulate(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Oracle { seed } => {
            let checks = oracle_report(seed);
            print_json(&checks)?;
            let mut ok = true;
            for c in &checks {
                eprintln!(
                    "{} {}: delta {:.3e} (tolerance {:.3e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.delta,
                    c.tolerance
                );
                ok &= c.pass;
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Band)
            }
        }
        Command::Catalog { name: None } => {
            for e in catalog() {
                println!("{:<22} {}", e.name, e.description());
            }
            Ok(())
        }
        Command::Catalog { name: Some(n) } => match catalog_entry(&n) {
            Some(e) => {
                print!("{}", e.toml);
                Ok(())
            }
            None => Err(Failure::Config(format!("no built-in scenario `{n}`"))),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Band) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            error!("{msg}");
            ExitCode::from(2)
        }
    }
}
