use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyson_cli::config::{apply_overrides, from_table, load_table, parse_scenario, ConfigError, Issue};
use dyson_cli::output::{check_table, summary_json, write_run};
use dyson_cli::sweep::{run_sweep, sweep_csv, Axis};
use dyson_cli::{exit, CliError};
use dyson_core::diagnostics::diagnose;
use dyson_core::oscillator::pt_analysis;

const WORKERS_VAR: &str = "DYSON_WORKERS";

/// Time-dependent Dyson maps for the driven non-Hermitian oscillator.
///
/// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
/// 3 numerical failure.
#[derive(Parser)]
#[command(name = "dyson", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML, schema 1)
    file: PathBuf,
    /// Override an existing key, e.g. `--set kappa=0.05` or `--set alpha=[1,0]`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run all diagnostics and write series.csv and summary.json
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory [default: out/<scenario name>]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all diagnostics and print the check table
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Print the summary document instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the PT label and metric drift along one numeric key
    Sweep {
        #[command(flatten)]
        common: Common,
        /// KEY:START:STOP:COUNT
        #[arg(long)]
        axis: String,
        /// Also write sweep.csv into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the PT-symmetry analysis
    PtPhase {
        #[command(flatten)]
        common: Common,
    },
}

fn workers() -> Result<Option<usize>, ConfigError> {
    match std::env::var(WORKERS_VAR) {
        Err(_) => Ok(None),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError(vec![Issue {
                location: WORKERS_VAR.into(),
                message: format!("expected a positive integer, found `{raw}`"),
            }])),
        },
    }
}

fn stem(path: &Path) -> &str {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario")
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = workers()? {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Run { common, out } => {
            let config = parse_scenario(&common.file, &common.overrides)?;
            let s = &config.scenario;
            let report = diagnose(s, &config.tolerances)?;
            let dir = out.unwrap_or_else(|| Path::new("out").join(&s.name));
            write_run(&dir, &report, s.dim, s.guard())?;
            print!("{}", check_table(&report));
            println!("wrote {}", dir.display());
            Ok(if report.passed() { exit::PASS } else { exit::CHECK_FAILURE })
        }
        Command::Diagnose { common, json } => {
            let config = parse_scenario(&common.file, &common.overrides)?;
            let s = &config.scenario;
            let report = diagnose(s, &config.tolerances)?;
            if json {
                print!("{}", summary_json(&report, s.dim, s.guard()));
            } else {
                print!("{}", check_table(&report));
            }
            Ok(if report.passed() { exit::PASS } else { exit::CHECK_FAILURE })
        }
        Command::Sweep { common, axis, out } => {
            let axis = Axis::parse(&axis)?;
            let mut table = load_table(&common.file)?;
            apply_overrides(&mut table, &common.overrides)?;
            // validates the unswept file too, so typos surface as config errors
            from_table(&table, stem(&common.file))?;
            let rows = run_sweep(&table, &axis, stem(&common.file))?;
            let csv = sweep_csv(&axis.key, &rows);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("sweep.csv"), &csv)?;
            }
            print!("{csv}");
            Ok(exit::PASS)
        }
        Command::PtPhase { common } => {
            let config = parse_scenario(&common.file, &common.overrides)?;
            let r = pt_analysis(&config.scenario)?;
            println!("phase {}", r.phase);
            println!(
                "symmetric {} (omega even {}, alpha odd {}, beta odd {})",
                r.symmetric, r.omega_even, r.alpha_odd, r.beta_odd
            );
            println!("window [{}, {}]", r.window.0, r.window.1);
            for (m, x) in r.max_imag_energy.iter().enumerate() {
                println!("max |Im E_{m}| {x:.16e}");
            }
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
