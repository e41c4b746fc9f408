//! Error norms against exact solutions, experimental orders of convergence,
//! and the study driver behind the convergence tables.
//!
//! Four quantities are tracked per run, following the error notions the
//! scheme converges in: with `e^n = z(t_n) − Z^n`, `ẽ^n = I_h z(t_n) − Z^n`
//! and `e_t^n = I_h z_t(t_n) − d_t Z^n`,
//!
//! * `max_n |e^n|_{H²}` — evaluated through the binomial identity
//!   `|e^n|² = |z(t_n)|²_{H²} + |Z^n|²_{H²} − 2 ∫ (I_h z)_xx · Z^n_xx`,
//!   which is exact because the cubic interpolant is the H²-orthogonal
//!   projection of `z`,
//! * `(τ Σ_n ‖e_t^n‖²)^{1/2}` — exact via the mass matrix,
//! * `max_n |ẽ^n|_{H¹}` and `max_n ‖ẽ^n‖` — exact coefficient-space norms.
//!
//! Maxima are taken over every step, not just snapshot strides.

use alloc::string::String;
use alloc::vec::Vec;

use crate::assembly::{BoundarySpec, ConstraintMode, SymBandMatrix};
use crate::flow::{FlowConfig, FlowError, StepReport, Stepper};
use crate::forcing::{AnalyticFlow, PositionAt, VelocityAt};
use crate::hermite::CurveState;
use crate::interpolate::interp_hermite;
use crate::math;
use crate::mesh::Dissection;

/// `|z(t) − Z|_{H²}` by the binomial identity, clamped at zero before the
/// square root.
pub fn h2_error<F: AnalyticFlow<D>, const D: usize>(
    flow: &F,
    t: f64,
    z: &CurveState<D>,
    stiffness: &SymBandMatrix,
) -> f64 {
    let interp = interp_hermite(&PositionAt { flow, t }, z.mesh());
    let sz = stiffness.mul_vec(z.coeffs());
    let cross: f64 = interp.coeffs().iter().zip(&sz).map(|(a, b)| a * b).sum();
    let sq = flow.h2_norm_sq(t) + stiffness.quadratic_form(z.coeffs()) - 2.0 * cross;
    math::sqrt(sq.max(0.0))
}

/// `(τ Σ_n ‖I_h z_t(t_n) − d_t Z^n‖²)^{1/2}` over a trajectory of rates,
/// exact via the mass matrix.
pub fn h1l2_error<F: AnalyticFlow<D>, const D: usize>(
    flow: &F,
    mesh: &alloc::sync::Arc<Dissection>,
    rates: &[(f64, Vec<f64>)],
    tau: f64,
    mass: &SymBandMatrix,
) -> f64 {
    let mut sum = 0.0;
    for (t, rate) in rates {
        let interp = interp_hermite(&VelocityAt { flow, t: *t }, mesh);
        let diff: Vec<f64> = interp
            .coeffs()
            .iter()
            .zip(rate)
            .map(|(a, b)| a - b)
            .collect();
        sum += mass.quadratic_form(&diff);
    }
    math::sqrt(tau * sum)
}

/// `(max_n ‖ẽ^n‖, max_n |ẽ^n|_{H¹})` over a trajectory of states.
pub fn weak_errors<F: AnalyticFlow<D>, const D: usize>(
    flow: &F,
    states: &[(f64, CurveState<D>)],
    mass: &SymBandMatrix,
) -> (f64, f64) {
    let mut linf_l2 = 0.0f64;
    let mut linf_h1 = 0.0f64;
    for (t, z) in states {
        let mut diff = interp_hermite(&PositionAt { flow, t: *t }, z.mesh());
        diff.axpy(-1.0, z);
        linf_l2 = linf_l2.max(math::sqrt(mass.quadratic_form(diff.coeffs()).max(0.0)));
        linf_h1 = linf_h1.max(math::sqrt(diff.seminorm_sq(1)));
    }
    (linf_l2, linf_h1)
}

/// The four error norms of one run plus its grid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub linf_h2: f64,
    pub h1l2: f64,
    pub linf_h1: f64,
    pub linf_l2: f64,
    pub h: f64,
    pub tau: f64,
    pub mode: ConstraintMode,
}

/// Streaming accumulator for the four norms; observes every step.
pub struct ErrorTracker<'a, F, const D: usize> {
    flow: &'a F,
    stiffness: &'a SymBandMatrix,
    mass: &'a SymBandMatrix,
    linf_h2: f64,
    h1l2_sum: f64,
    linf_l2: f64,
    linf_h1: f64,
}

impl<'a, F: AnalyticFlow<D>, const D: usize> ErrorTracker<'a, F, D> {
    pub fn new(flow: &'a F, mass: &'a SymBandMatrix, stiffness: &'a SymBandMatrix) -> Self {
        Self {
            flow,
            stiffness,
            mass,
            linf_h2: 0.0,
            h1l2_sum: 0.0,
            linf_l2: 0.0,
            linf_h1: 0.0,
        }
    }

    /// Fold the state `Z^n` at time `t` into the max-over-n norms.
    pub fn observe_state(&mut self, t: f64, z: &CurveState<D>) {
        self.linf_h2 = self.linf_h2.max(h2_error(self.flow, t, z, self.stiffness));
        let mut diff = interp_hermite(
            &PositionAt { flow: self.flow, t },
            z.mesh(),
        );
        diff.axpy(-1.0, z);
        self.linf_l2 = self
            .linf_l2
            .max(math::sqrt(self.mass.quadratic_form(diff.coeffs()).max(0.0)));
        self.linf_h1 = self.linf_h1.max(math::sqrt(diff.seminorm_sq(1)));
    }

    /// Fold the rate `d_t Z^n` at time `t_n` into the `H¹L²` sum.
    pub fn observe_rate(&mut self, t: f64, mesh: &alloc::sync::Arc<Dissection>, rate: &[f64]) {
        let interp = interp_hermite(&VelocityAt { flow: self.flow, t }, mesh);
        let diff: Vec<f64> = interp
            .coeffs()
            .iter()
            .zip(rate)
            .map(|(a, b)| a - b)
            .collect();
        self.h1l2_sum += self.mass.quadratic_form(&diff);
    }

    pub fn finish(self, h: f64, tau: f64, mode: ConstraintMode) -> ErrorReport {
        ErrorReport {
            linf_h2: self.linf_h2,
            h1l2: math::sqrt(tau * self.h1l2_sum),
            linf_h1: self.linf_h1,
            linf_l2: self.linf_l2,
            h,
            tau,
            mode,
        }
    }
}

/// Run one configuration to the final time while measuring all error norms
/// at every step.
pub fn measure_errors<F: AnalyticFlow<D> + Clone, const D: usize>(
    cfg: FlowConfig<F, D>,
) -> Result<(ErrorReport, Vec<StepReport>), FlowError> {
    let h = cfg.mesh.h_max();
    let tau = cfg.tau;
    let mode = cfg.mode;
    let mut stepper = Stepper::new(cfg);
    let mass = stepper.mass().clone();
    let stiffness = stepper.stiffness().clone();
    let flow = stepper.config().flow.clone();
    let mesh = stepper.config().mesh.clone();
    let mut tracker = ErrorTracker::new(&flow, &mass, &stiffness);
    tracker.observe_state(0.0, stepper.state());
    let mut reports = Vec::with_capacity(stepper.config().num_steps());
    while !stepper.is_finished() {
        let report = stepper.advance()?;
        tracker.observe_state(report.t, stepper.state());
        tracker.observe_rate(report.t, &mesh, stepper.rate());
        reports.push(report);
    }
    Ok((tracker.finish(h, tau, mode), reports))
}

/// Experimental order of convergence between two levels; uses `log₂` of the
/// error ratio under exact mesh halving and the general log-ratio otherwise.
pub fn eoc(h_coarse: f64, e_coarse: f64, h_fine: f64, e_fine: f64) -> f64 {
    let ratio = h_coarse / h_fine;
    if math::abs(ratio - 2.0) < 1e-12 {
        math::log2(e_coarse / e_fine)
    } else {
        math::ln(e_coarse / e_fine) / math::ln(ratio)
    }
}

/// The error norms a convergence table can be built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    LinfH2,
    H1L2,
    LinfH1,
    LinfL2,
}

pub const NORMS: [Norm; 4] = [Norm::LinfH2, Norm::H1L2, Norm::LinfH1, Norm::LinfL2];

impl Norm {
    pub fn label(&self) -> &'static str {
        match self {
            Norm::LinfH2 => "linf_h2",
            Norm::H1L2 => "h1l2",
            Norm::LinfH1 => "linf_h1",
            Norm::LinfL2 => "linf_l2",
        }
    }

    pub fn extract(&self, r: &ErrorReport) -> f64 {
        match self {
            Norm::LinfH2 => r.linf_h2,
            Norm::H1L2 => r.h1l2,
            Norm::LinfH1 => r.linf_h1,
            Norm::LinfL2 => r.linf_l2,
        }
    }
}

/// One measured run inside a study.
#[derive(Debug, Clone)]
pub struct StudyEntry {
    pub mode: ConstraintMode,
    pub tau: f64,
    pub h: f64,
    pub report: ErrorReport,
}

/// Errors and EOC values of one `(mode, τ)` column across the mesh levels.
#[derive(Debug, Clone)]
pub struct ConvergenceColumn {
    pub mode: ConstraintMode,
    pub tau: f64,
    pub errors: Vec<f64>,
    /// `eocs[i]` relates level `i-1` to level `i`; the first entry is `None`.
    pub eocs: Vec<Option<f64>>,
}

impl ConvergenceColumn {
    pub fn label(&self) -> String {
        alloc::format!("{}_{}", self.mode, self.tau)
    }
}

/// Per-norm table of errors and EOC values over mesh levels.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub norm: Norm,
    /// Mesh sizes, coarse to fine.
    pub hs: Vec<f64>,
    pub columns: Vec<ConvergenceColumn>,
}

/// Group measured runs into per-norm tables. Columns appear in the order the
/// `(mode, τ)` pairs first occur; levels are sorted coarse to fine.
pub fn build_tables(entries: &[StudyEntry]) -> Vec<ConvergenceTable> {
    let mut hs: Vec<f64> = Vec::new();
    for e in entries {
        if !hs.contains(&e.h) {
            hs.push(e.h);
        }
    }
    hs.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut pairs: Vec<(ConstraintMode, f64)> = Vec::new();
    for e in entries {
        if !pairs.iter().any(|&(m, t)| m == e.mode && t == e.tau) {
            pairs.push((e.mode, e.tau));
        }
    }

    NORMS
        .iter()
        .map(|&norm| {
            let columns = pairs
                .iter()
                .map(|&(mode, tau)| {
                    let errors: Vec<f64> = hs
                        .iter()
                        .map(|&h| {
                            entries
                                .iter()
                                .find(|e| e.mode == mode && e.tau == tau && e.h == h)
                                .map(|e| norm.extract(&e.report))
                                .expect("every (mode, tau) pair must cover every level")
                        })
                        .collect();
                    let eocs = core::iter::once(None)
                        .chain(errors.windows(2).zip(hs.windows(2)).map(|(e, h)| {
                            Some(eoc(h[0], e[0], h[1], e[1]))
                        }))
                        .collect();
                    ConvergenceColumn {
                        mode,
                        tau,
                        errors,
                        eocs,
                    }
                })
                .collect();
            ConvergenceTable {
                norm,
                hs: hs.clone(),
                columns,
            }
        })
        .collect()
}

/// A convergence study: one flow, several mesh levels, time steps and
/// constraint modes.
#[derive(Debug, Clone)]
pub struct StudySpec<F> {
    pub flow: F,
    pub bc: BoundarySpec,
    pub forced: bool,
    pub levels: Vec<usize>,
    pub taus: Vec<f64>,
    pub modes: Vec<ConstraintMode>,
    pub t_final: f64,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub entries: Vec<StudyEntry>,
    pub tables: Vec<ConvergenceTable>,
}

/// Run every `(mode, τ, level)` combination of the study. Runs share no
/// mutable state, so callers may also fan the level runs out over threads and
/// rebuild the tables with [`build_tables`].
pub fn run_study<F: AnalyticFlow<D> + Clone, const D: usize>(
    spec: &StudySpec<F>,
) -> Result<StudyResult, FlowError> {
    let (a, b) = spec.flow.domain();
    let mut entries = Vec::new();
    for &mode in &spec.modes {
        for &tau in &spec.taus {
            for &level in &spec.levels {
                let mesh = alloc::sync::Arc::new(
                    Dissection::uniform(a, b, level).expect("valid level"),
                );
                let cfg = FlowConfig::new(
                    mesh,
                    tau,
                    spec.t_final,
                    mode,
                    spec.bc,
                    spec.flow.clone(),
                    spec.forced,
                )?;
                let h = cfg.mesh.h_max();
                let (report, _) = measure_errors(cfg)?;
                entries.push(StudyEntry {
                    mode,
                    tau,
                    h,
                    report,
                });
            }
        }
    }
    let tables = build_tables(&entries);
    Ok(StudyResult { entries, tables })
}
