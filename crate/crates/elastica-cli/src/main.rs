use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elastica_cli::config::ExperimentConfig;
use elastica_cli::csvout::fmt_f64;
use elastica_cli::drive::{cmd_convergence, cmd_run, CliError};

/// Finite element solver for the elastic flow of inextensible curves.
#[derive(Parser)]
#[command(name = "elastica", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes reports.csv and curve snapshots
    Run { config: PathBuf },
    /// Run a mesh refinement study; writes one EOC table per error norm
    Convergence { config: PathBuf },
    /// List the registered analytic flows
    Flows,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::parse(&text)?)
}

/// Output directory: `ELASTICA_OUT_DIR` overrides the configured one.
fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os("ELASTICA_OUT_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(&cfg.out_dir),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg);
            let summary = cmd_run(&cfg, &dir)?;
            println!("steps = {}", summary.steps);
            println!("final_energy = {}", fmt_f64(summary.final_energy));
            println!("max_constraint_violation = {}", fmt_f64(summary.max_violation));
            println!(
                "final_constraint_violation = {}",
                fmt_f64(summary.final_violation)
            );
            println!("wrote {}", dir.join("reports.csv").display());
        }
        Command::Convergence { config } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg);
            let tables = cmd_convergence(&cfg, &dir)?;
            for table in &tables {
                for col in &table.columns {
                    let eocs: Vec<String> = col
                        .eocs
                        .iter()
                        .skip(1)
                        .map(|e| match e {
                            Some(v) => format!("{v:.2}"),
                            None => "-".into(),
                        })
                        .collect();
                    println!(
                        "{} {}: error {} -> {}  eoc [{}]",
                        table.norm.label(),
                        col.label(),
                        fmt_f64(col.errors[0]),
                        fmt_f64(*col.errors.last().unwrap()),
                        eocs.join(", "),
                    );
                }
            }
            println!("wrote tables to {}", dir.display());
        }
        Command::Flows => {
            for spec in [
                elastica::forcing::FlowSpec::Circle,
                elastica::forcing::FlowSpec::Helix,
                elastica::forcing::FlowSpec::ForcedHelix,
            ] {
                let (a, b) = spec.domain();
                let bc = spec.default_boundary();
                println!(
                    "{:<13} dim {}  domain [{a:.6}, {b:.6}]  forced {}  bc position={:?} slope={:?}",
                    spec.name(),
                    spec.dim(),
                    spec.default_forced(),
                    (bc.position_fixed.a, bc.position_fixed.b),
                    (bc.slope_fixed.a, bc.slope_fixed.b),
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
