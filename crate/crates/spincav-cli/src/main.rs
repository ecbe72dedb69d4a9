//! `spincav` command-line tool: runs a scenario from a JSON config and writes a
//! CSV table plus a JSON manifest next to it.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use spincav::harness::{preset, run, run_selfcheck, ScenarioConfig, ScenarioKind};

const WORKERS_ENV: &str = "SPINCAV_WORKERS";

#[derive(Parser)]
#[command(name = "spincav", version, about = "Cavity and broadened spin ensemble simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Long rectangular pulse and ring-down
    LongPulse(RunArgs),
    /// Pulse-train response over a range of pulse lengths
    TrainMap(RunArgs),
    /// Free-decay rate versus coupling
    GammaSweep(RunArgs),
    /// Configured density against a Lorentzian under the same train
    TrainCompare(RunArgs),
    /// Settled maximum of |A|^2 over pulse length and detuning
    MaxScan(RunArgs),
    /// Closed-form Lorentzian dynamics
    LorentzAnalytic(RunArgs),
    /// Fast invariant checks
    Validate,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; the built-in preset is used when omitted
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// CSV output path (the manifest goes next to it)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit
    #[arg(long)]
    print_config: bool,
    /// Overrides such as system.coupling_mhz=12 or time.dt_ns=0.1
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<spincav::Error> for Failure {
    fn from(e: spincav::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the worker pool: {e}")))
}

fn load(kind: ScenarioKind, args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut doc: Value = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => serde_json::to_value(preset(kind)).expect("preset serialises"),
    };
    let obj = doc.as_object_mut().ok_or_else(|| Failure::Config("configuration must be a JSON object".into()))?;
    match obj.get("scenario").and_then(Value::as_str) {
        Some(name) if name != kind.name() => {
            return Err(Failure::Config(format!("configuration is for `{name}`, not `{}`", kind.name())));
        }
        _ => {
            obj.insert("scenario".into(), Value::from(kind.name()));
        }
    }
    Ok(ScenarioConfig::from_json_with_overrides(&doc.to_string(), &args.overrides)?)
}

fn run_scenario(kind: ScenarioKind, args: &RunArgs) -> Result<(), Failure> {
    let cfg = load(kind, args)?;
    if args.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let out_path = args.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(format!("{}.csv", kind.name())));
    let out = run(&cfg)?;
    let manifest = out.write(&out_path)?;
    eprintln!("{} rows -> {}", out.table.len(), out_path.display());
    eprintln!("manifest -> {}", manifest.display());
    for d in &out.manifest.diagnostics {
        eprintln!("note: {d}");
    }
    Ok(())
}

fn validate() -> Result<(), Failure> {
    let results = run_selfcheck();
    for r in &results {
        println!("{} {:<48} {:>10.3e} (limit {:.0e}, {:.2}s)", if r.passed { "ok  " } else { "FAIL" }, r.name, r.value, r.limit, r.seconds);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_workers().and_then(|_| match &cli.command {
        Command::LongPulse(a) => run_scenario(ScenarioKind::LongPulse, a),
        Command::TrainMap(a) => run_scenario(ScenarioKind::TrainMap, a),
        Command::GammaSweep(a) => run_scenario(ScenarioKind::GammaSweep, a),
        Command::TrainCompare(a) => run_scenario(ScenarioKind::TrainCompare, a),
        Command::MaxScan(a) => run_scenario(ScenarioKind::MaxScan, a),
        Command::LorentzAnalytic(a) => run_scenario(ScenarioKind::LorentzAnalytic, a),
        Command::Validate => validate(),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
