use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lambda_soliton::Error;
use lambda_soliton_cli::presets::Preset;
use lambda_soliton_cli::run::{figure, simulate};
use lambda_soliton_cli::scenario::{Scenario, ScenarioConfig};
use lambda_soliton_cli::verify::{verify, Level, VerifyReport};
use lambda_soliton_cli::output::write_json;

/// Exact multi-soliton solutions of the Λ-system Maxwell-Bloch equations.
#[derive(Parser)]
#[command(name = "lambda-soliton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario and write CSV/JSON outputs.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "dump_config")]
        out: Option<PathBuf>,
        /// Print the fully resolved configuration as TOML and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Reproduce one of the built-in figure scenarios.
    Figure {
        /// pulse1, den1, pulse2, den2, pulse3 or den3
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant and convergence checks on a scenario.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Failure {
    Verify(String),
    Failed(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Failed(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownPreset(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Names the offending soliton pair when two durations coincide.
fn explain(err: Error, scenario: &Scenario) -> Error {
    if let (Error::DegenerateSpectralParams { .. }, Some((i, j))) = (&err, scenario.degenerate_pair()) {
        eprintln!("solitons[{i}] and solitons[{j}] have the same duration");
    }
    err
}

fn load(config: Option<&PathBuf>) -> Result<Scenario, Error> {
    match config {
        Some(path) => Scenario::from_path(path),
        None => Scenario::from_config(ScenarioConfig::from_toml_str("name = \"default\"")?),
    }
}

fn print_verify(report: &VerifyReport) {
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark} {:<24} value {:.3e} tol {:.1e}  {}", c.name, c.value, c.tolerance, c.detail);
    }
    println!("wall clock {:.1} s", report.wall_clock_s);
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, out, dump_config } => {
            let scenario = load(config.as_ref())?;
            if dump_config {
                print!("{}", scenario.config.to_toml_string()?);
                return Ok(());
            }
            let out = out.expect("clap enforces --out");
            let report = simulate(&scenario, &out).map_err(|e| explain(e, &scenario))?;
            println!("{}: order {}, wrote {}", report.name, report.order, out.display());
            for s in &report.snapshots {
                if let Some(e) = &s.error {
                    eprintln!("snapshot t = {}: {e}", s.t);
                }
            }
        }
        Command::Figure { preset, out } => {
            let preset: Preset = preset.parse()?;
            let report = figure(preset, &out)?;
            println!("{}: {} run(s), wrote {}", report.preset, report.runs.len(), out.display());
        }
        Command::Verify { config, level, report } => {
            let scenario = Scenario::from_path(&config)?;
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let result = verify(&scenario, level).map_err(|e| explain(e, &scenario))?;
            print_verify(&result);
            if let Some(path) = report {
                write_json(&path, &result)?;
            }
            if let Some(c) = result.first_failure() {
                return Err(Failure::Verify(c.name.clone()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("LAMBDA_SOLITON_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: LAMBDA_SOLITON_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify(name)) => {
            eprintln!("verification failed: {name}");
            ExitCode::from(1)
        }
        Err(Failure::Failed(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
