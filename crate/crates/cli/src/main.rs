use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use bellbias_cli::config::{self, GallerySpec, Overrides, RunConfig, CONFIG_VERSION};
use bellbias_cli::{combos, oracle, runner, EXIT_CONFIG, EXIT_GATES};
use bellbias_core::protocols::Geometry;
use bellbias_core::quantum::BellLabel;

/// Bell-type correlation experiments and their classical selection
/// counterparts, with exact reference tables to check them against.
#[derive(Parser)]
#[command(name = "bellbias", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured job and write events.csv plus summary.json.
    Run(RunArgs),
    /// Print the closed-form joint table for a Bell state and one
    /// analyzer pair.
    Oracle(OracleArgs),
    /// List setting/outcome tuples the swap run can never produce.
    Combos(CombosArgs),
    /// Run one classical generator with its default parameters.
    Gallery(GalleryArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial-count override (sorties, shifts, population, or digit
    /// positions for the generators).
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 if any statistical gate fails.
    #[arg(long)]
    gates: bool,
    /// Worker thread count; defaults to all cores. The outputs are
    /// identical whatever the count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Bell label: psi-, phi+, phi-, psi+ (singlet is an alias).
    #[arg(long)]
    label: String,
    /// First analyzer angle in radians.
    #[arg(long)]
    a: f64,
    /// Second analyzer angle in radians.
    #[arg(long)]
    b: f64,
}

#[derive(Args)]
struct CombosArgs {
    /// Midpoint measurement placement: past, intermediate, or future.
    #[arg(long)]
    geometry: String,
    /// Comma-separated first-side angles in radians.
    #[arg(long, value_delimiter = ',', required = true)]
    a_grid: Vec<f64>,
    /// Comma-separated second-side angles; defaults to the first grid.
    #[arg(long, value_delimiter = ',')]
    b_grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct GalleryArgs {
    /// survivorship, coin_factory, clinic, or digit_parity.
    name: String,
    /// Master seed; generated (and echoed) when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Sorties, shifts, population, or digit positions.
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 3 if any statistical gate fails.
    #[arg(long)]
    gates: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(args) => {
            let config = config::load(&args.config)?;
            let resolved = config.resolve(&Overrides {
                seed: args.seed,
                trials: args.trials,
                out_dir: args.out.clone(),
            })?;
            finish_run(runner::execute(&resolved, args.threads)?, args.gates)
        }
        Command::Oracle(args) => {
            let label = BellLabel::parse(&args.label).ok_or_else(|| {
                anyhow!("--label: unknown Bell label {:?} (expected psi-/phi+/phi-/psi+)", args.label)
            })?;
            print!("{}", oracle::oracle_text(label, args.a, args.b)?);
            Ok(0)
        }
        Command::Combos(args) => {
            let geometry = Geometry::parse(&args.geometry).ok_or_else(|| {
                anyhow!(
                    "--geometry: unknown geometry {:?} (expected past/intermediate/future)",
                    args.geometry
                )
            })?;
            print!(
                "{}",
                combos::combos_text(geometry, &args.a_grid, args.b_grid.as_deref())?
            );
            Ok(0)
        }
        Command::Gallery(args) => {
            let config = RunConfig {
                version: CONFIG_VERSION,
                seed: args.seed,
                out_dir: args.out.clone(),
                reports: None,
                protocol: None,
                gallery: Some(GallerySpec::bare(&args.name)),
            };
            let resolved = config.resolve(&Overrides {
                seed: args.seed,
                trials: args.trials,
                out_dir: args.out,
            })?;
            finish_run(runner::execute(&resolved, None)?, args.gates)
        }
    }
}

fn finish_run(outcome: runner::RunOutcome, enforce_gates: bool) -> Result<u8> {
    println!("events:  {}", outcome.events_path.display());
    if let Some(details) = &outcome.details_path {
        println!("details: {}", details.display());
    }
    println!("summary: {}", outcome.summary_path.display());
    for gate in &outcome.gates {
        println!(
            "gate {:<44} {}",
            gate.name,
            if gate.passed { "pass" } else { "FAIL" }
        );
    }
    if enforce_gates && !outcome.gates_passed() {
        eprintln!("error: one or more gates failed");
        return Ok(EXIT_GATES as u8);
    }
    Ok(0)
}
