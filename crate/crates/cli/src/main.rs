use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use harvest_core::config::{load_config_with, parse_config, ExperimentConfig};
use harvest_core::exec::{set_threads, Exec};
use harvest_core::oracles::run_verification_suite;
use harvest_core::scan::{ScanSpec, ScanTable, Scanner};

/// Entanglement and correlation harvesting scans for two-beam
/// electro-optic sampling.
#[derive(Debug, Parser)]
#[command(name = "harvest", version)]
struct Cli {
    /// Config file (TOML). Without one the built-in baseline is used.
    #[arg(long, global = true, env = "HARVEST_CONFIG")]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set filter.kind=band`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Evaluate rows one at a time.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quarter-wave two-beam correlation versus one parameter.
    ScanCorrelation(ScanArgs),
    /// Negativity and state parameters versus one parameter.
    ScanNegativity(ScanArgs),
    /// Optimized Bell value versus one parameter (monochromatic filter).
    ScanBell(ScanArgs),
    /// Witness measurement record at one configuration.
    Witness(OutArgs),
    /// Run the verification suite; exits 1 on any failure.
    Verify(OutArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// name:start:stop:count[:log], name one of dr, dr_w, dt, T, omega_min,
    /// omega_min_sigma, omega_d, omega_d_sigma.
    #[arg(long)]
    sweep: ScanSpecArg,

    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output CSV (a .gp plot script is written next to it). Default: stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct ScanSpecArg(ScanSpec);

impl std::str::FromStr for ScanSpecArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse()
            .map(ScanSpecArg)
            .map_err(|e: harvest_core::Error| e.to_string())
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let cfg = match &cli.config {
        Some(path) => load_config_with(path, &cli.overrides).with_context(|| format!("loading {}", path.display())),
        None => parse_config("", "built-in baseline", None, &cli.overrides).context("applying overrides"),
    };
    cfg.map_err(Failure::Usage)
}

fn emit(table: &ScanTable, out: &OutArgs) -> Result<(), Failure> {
    match &out.out {
        Some(path) => {
            table.write(path).map_err(|e| Failure::Runtime(e.into()))?;
            eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        set_threads(n).map_err(|e| Failure::Usage(e.into()))?;
    }
    let cfg = load(cli)?;
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let scanner = Scanner::new(exec);
    let runtime = |e: harvest_core::Error| match e {
        harvest_core::Error::UnsupportedFilter(_) | harvest_core::Error::Validation { .. } => Failure::Usage(e.into()),
        other => Failure::Runtime(other.into()),
    };
    match &cli.command {
        Command::ScanCorrelation(a) => emit(&scanner.scan_correlation(&cfg, &a.sweep.0).map_err(runtime)?, &a.out),
        Command::ScanNegativity(a) => emit(&scanner.scan_negativity(&cfg, &a.sweep.0).map_err(runtime)?, &a.out),
        Command::ScanBell(a) => emit(&scanner.scan_bell(&cfg, &a.sweep.0).map_err(runtime)?, &a.out),
        Command::Witness(o) => emit(&scanner.witness(&cfg).map_err(runtime)?, o),
        Command::Verify(o) => {
            let reports = run_verification_suite(&cfg);
            let mut text = String::from("check,status,rel_error,threshold,reference,fast\n");
            for r in &reports {
                text.push_str(&r.line());
                text.push('\n');
            }
            match &o.out {
                Some(path) => std::fs::write(path, &text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Runtime)?,
                None => print!("{text}"),
            }
            let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(Failure::Runtime(anyhow::anyhow!(
                    "verification failed: {}",
                    failed.join(", ")
                )));
            }
            eprintln!("all {} checks passed", reports.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
