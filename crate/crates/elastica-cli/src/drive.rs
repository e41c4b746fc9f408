//! Dispatch from configuration to the generic solver entry points, plus the
//! threaded sweep driver behind `convergence`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use elastica::analysis::{build_tables, measure_errors, ConvergenceTable, StudyEntry};
use elastica::assembly::ConstraintMode;
use elastica::flow::{run, FlowConfig, FlowError};
use elastica::forcing::{AnalyticFlow, CircleFlow, FlowSpec, ForcedHelixFlow, HelixFlow};
use elastica::mesh::{Dissection, MeshError};

use crate::config::{ConfigError, ExperimentConfig};
use crate::csvout;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Usage(String),
    Setup(FlowError),
    Numeric(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Setup(e) => write!(f, "configuration: {e}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// 1 for configuration/usage problems, 2 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 2,
            _ => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Usage(format!("mesh: {e}"))
    }
}

/// Configuration-time flow errors are the user's problem (exit 1); errors
/// raised while stepping are numeric failures (exit 2).
fn setup_err(e: FlowError) -> CliError {
    CliError::Setup(e)
}

fn step_err(context: String) -> impl FnOnce(FlowError) -> CliError {
    move |e| CliError::Numeric(format!("{context}: {e}"))
}

/// What `run` prints at the end.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub steps: usize,
    pub final_energy: f64,
    pub max_violation: f64,
    pub final_violation: f64,
}

pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    if cfg.levels.len() != 1 || cfg.taus.len() != 1 || cfg.modes.len() != 1 {
        return Err(CliError::Usage(
            "`run` expects exactly one level, one tau and one mode; use `convergence` for sweeps"
                .into(),
        ));
    }
    match cfg.flow {
        FlowSpec::Circle => run_one::<CircleFlow, 2>(CircleFlow, cfg, out_dir),
        FlowSpec::Helix => run_one::<HelixFlow, 3>(HelixFlow, cfg, out_dir),
        FlowSpec::ForcedHelix => run_one::<ForcedHelixFlow, 3>(ForcedHelixFlow, cfg, out_dir),
    }
}

fn run_one<F: AnalyticFlow<D> + Clone, const D: usize>(
    flow: F,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunSummary, CliError> {
    let (a, b) = flow.domain();
    let mesh = Arc::new(Dissection::uniform(a, b, cfg.levels[0])?);
    let fc = FlowConfig::new(
        mesh,
        cfg.taus[0],
        cfg.t_final,
        cfg.modes[0],
        cfg.bc,
        flow,
        cfg.forced,
    )
    .map_err(setup_err)?;
    let output = run(fc, cfg.stride).map_err(step_err(format!(
        "{} M={} tau={}",
        cfg.flow.name(),
        cfg.levels[0],
        cfg.taus[0]
    )))?;

    std::fs::create_dir_all(out_dir)?;
    csvout::write_reports(&out_dir.join("reports.csv"), &output.reports)?;
    for (n, state) in &output.snapshots {
        let path = out_dir.join(format!("snapshot_{n:06}.csv"));
        csvout::write_snapshot(&path, state, cfg.samples_per_element)?;
    }

    let last = output.reports.last().expect("at least one step");
    let max_violation = output
        .reports
        .iter()
        .map(|r| r.constraint_violation)
        .fold(0.0f64, f64::max);
    Ok(RunSummary {
        steps: output.reports.len(),
        final_energy: last.energy,
        max_violation,
        final_violation: last.constraint_violation,
    })
}

pub fn cmd_convergence(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<ConvergenceTable>, CliError> {
    if cfg.levels.len() < 2 {
        return Err(CliError::Usage(
            "`convergence` needs at least two mesh levels".into(),
        ));
    }
    let tables = match cfg.flow {
        FlowSpec::Circle => study::<CircleFlow, 2>(CircleFlow, cfg),
        FlowSpec::Helix => study::<HelixFlow, 3>(HelixFlow, cfg),
        FlowSpec::ForcedHelix => study::<ForcedHelixFlow, 3>(ForcedHelixFlow, cfg),
    }?;
    std::fs::create_dir_all(out_dir)?;
    for table in &tables {
        let path = out_dir.join(format!("table_{}.csv", table.norm.label()));
        csvout::write_table(&path, table)?;
    }
    Ok(tables)
}

/// Level runs share no mutable state, so each `(mode, τ, level)` combination
/// gets its own thread; results are collected in job order, keeping output
/// deterministic.
fn study<F: AnalyticFlow<D> + Clone + Send + Sync, const D: usize>(
    flow: F,
    cfg: &ExperimentConfig,
) -> Result<Vec<ConvergenceTable>, CliError> {
    let mut jobs: Vec<(ConstraintMode, f64, usize)> = Vec::new();
    for &mode in &cfg.modes {
        for &tau in &cfg.taus {
            for &level in &cfg.levels {
                jobs.push((mode, tau, level));
            }
        }
    }
    let results: Vec<Result<StudyEntry, CliError>> = thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(mode, tau, level)| {
                let flow = flow.clone();
                let bc = cfg.bc;
                let forced = cfg.forced;
                let t_final = cfg.t_final;
                scope.spawn(move || {
                    let (a, b) = flow.domain();
                    let mesh = Arc::new(Dissection::uniform(a, b, level)?);
                    let h = mesh.h_max();
                    let fc = FlowConfig::new(mesh, tau, t_final, mode, bc, flow, forced)
                        .map_err(setup_err)?;
                    let (report, _) = measure_errors(fc)
                        .map_err(step_err(format!("mode {mode} tau={tau} M={level}")))?;
                    Ok(StudyEntry {
                        mode,
                        tau,
                        h,
                        report,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("study worker panicked"))
            .collect()
    });
    let mut entries = Vec::with_capacity(results.len());
    for r in results {
        entries.push(r?);
    }
    Ok(build_tables(&entries))
}
