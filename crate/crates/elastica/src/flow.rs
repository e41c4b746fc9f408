//! The fully discrete time stepper.
//!
//! Each step linearizes the arc-length constraint about the previous iterate
//! `Z^n` and solves
//!
//! ```text
//! (d_t Z^{n+1}, Y) + τ (d_t Z^{n+1}_xx, Y_xx) = -(Z^n_xx, Y_xx)  [+ forcing]
//! ```
//!
//! over all `Y` satisfying the linearized constraint and boundary rows, then
//! updates `Z^{n+1} = Z^n + τ d_t Z^{n+1}`. The scheme is unconditionally
//! stable: bending energy plus the accumulated dissipation is conserved
//! exactly, which the per-step reports track.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::assembly::{
    boundary_rows, constraint_matrix, forced_load, mass_matrix, stiffness_matrix, AssemblyError,
    BoundaryData, BoundarySpec, ConstraintMatrix, ConstraintMode, SymBandMatrix,
};
use crate::forcing::{forced_terms, AnalyticFlow, PositionAt};
use crate::hermite::CurveState;
use crate::interpolate::interp_j3;
use crate::math;
use crate::mesh::Dissection;
use crate::saddle::{solve_kkt, SaddleSystem, SolveError};

/// Errors from configuration validation or the per-step solves.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    /// `T` is not an integer multiple of `τ` (or `τ` is not positive).
    InvalidTimeGrid { tau: f64, t_final: f64 },
    /// Mesh interval and flow domain differ.
    DomainMismatch {
        mesh: (f64, f64),
        flow: (f64, f64),
    },
    /// Initial curve violates `|z'| = 1` at a constraint node.
    NotUnitSpeed { x: f64, deviation: f64 },
    Boundary(AssemblyError),
    Solve(SolveError),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::InvalidTimeGrid { tau, t_final } => write!(
                f,
                "time step {tau} does not divide the final time {t_final} into whole steps"
            ),
            FlowError::DomainMismatch { mesh, flow } => write!(
                f,
                "mesh interval [{}, {}] differs from the flow domain [{}, {}]",
                mesh.0, mesh.1, flow.0, flow.1
            ),
            FlowError::NotUnitSpeed { x, deviation } => write!(
                f,
                "initial curve violates |z'| = 1 at constraint node x = {x} (deviation {deviation:e})"
            ),
            FlowError::Boundary(e) => write!(f, "{e}"),
            FlowError::Solve(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FlowError {}

impl From<AssemblyError> for FlowError {
    fn from(e: AssemblyError) -> Self {
        FlowError::Boundary(e)
    }
}

impl From<SolveError> for FlowError {
    fn from(e: SolveError) -> Self {
        FlowError::Solve(e)
    }
}

/// Full description of one run.
#[derive(Debug, Clone)]
pub struct FlowConfig<F, const D: usize> {
    pub mesh: Arc<Dissection>,
    pub tau: f64,
    pub t_final: f64,
    pub mode: ConstraintMode,
    pub bc: BoundarySpec,
    pub flow: F,
    /// Apply the manufactured right-hand side built from `flow`.
    pub forced: bool,
}

impl<F: AnalyticFlow<D>, const D: usize> FlowConfig<F, D> {
    pub fn new(
        mesh: Arc<Dissection>,
        tau: f64,
        t_final: f64,
        mode: ConstraintMode,
        bc: BoundarySpec,
        flow: F,
        forced: bool,
    ) -> Result<Self, FlowError> {
        if !(tau > 0.0) || t_final < tau {
            return Err(FlowError::InvalidTimeGrid { tau, t_final });
        }
        let n = math::round(t_final / tau);
        if math::abs(n * tau - t_final) > 1e-12 * t_final.max(1.0) {
            return Err(FlowError::InvalidTimeGrid { tau, t_final });
        }
        bc.validate()?;
        let (fa, fb) = flow.domain();
        let tol = 1e-12 * (math::abs(fb - fa)).max(1.0);
        if math::abs(mesh.a() - fa) > tol || math::abs(mesh.b() - fb) > tol {
            return Err(FlowError::DomainMismatch {
                mesh: (mesh.a(), mesh.b()),
                flow: (fa, fb),
            });
        }
        let cfg = Self {
            mesh,
            tau,
            t_final,
            mode,
            bc,
            flow,
            forced,
        };
        cfg.check_initial_constraint()?;
        Ok(cfg)
    }

    pub fn num_steps(&self) -> usize {
        math::round(self.t_final / self.tau) as usize
    }

    /// The constraint nodes of the configured mode.
    pub fn constraint_points(&self) -> Vec<f64> {
        match self.mode {
            ConstraintMode::P1 => self.mesh.nodes_p1().to_vec(),
            ConstraintMode::P2 => self.mesh.nodes_p2(),
        }
    }

    fn check_initial_constraint(&self) -> Result<(), FlowError> {
        for x in self.constraint_points() {
            let speed = math::sqrt(math::norm_sq(&self.flow.dx(x, 0.0)));
            let deviation = math::abs(speed - 1.0);
            if deviation > 1e-8 {
                return Err(FlowError::NotUnitSpeed { x, deviation });
            }
        }
        Ok(())
    }
}

/// Initial state `Z⁰`: the integral-mean interpolant of the initial curve,
/// whose slopes satisfy the discrete constraint exactly wherever the initial
/// curve is unit speed.
pub fn init_state<F: AnalyticFlow<D>, const D: usize>(cfg: &FlowConfig<F, D>) -> CurveState<D> {
    interp_j3(
        &PositionAt {
            flow: &cfg.flow,
            t: 0.0,
        },
        &cfg.mesh,
    )
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    /// Step index (the report describes `Z^n`).
    pub n: usize,
    pub t: f64,
    /// Bending energy `½ ‖Z^n_xx‖²`.
    pub energy: f64,
    /// `‖d_t Z^n‖²`.
    pub dissipation_l2: f64,
    /// `τ ‖d_t Z^n_xx‖²`.
    pub dissipation_h2: f64,
    /// `max ||Z^n_x(x̃)|² − 1|` over the constraint nodes.
    pub constraint_violation: f64,
    pub kkt_residual: f64,
    /// Structurally zero constraint rows encountered (diagnostic only).
    pub zero_constraint_rows: usize,
}

/// Drives one run step by step; the per-step system matrix `M + τS` is built
/// once, the constraint block is reassembled from `Z^n` every step.
pub struct Stepper<F, const D: usize> {
    cfg: FlowConfig<F, D>,
    mass: SymBandMatrix,
    stiffness: SymBandMatrix,
    system_matrix: SymBandMatrix,
    state: CurveState<D>,
    rate: Vec<f64>,
    n: usize,
}

impl<F: AnalyticFlow<D>, const D: usize> Stepper<F, D> {
    pub fn new(cfg: FlowConfig<F, D>) -> Self {
        let mass = mass_matrix(&cfg.mesh, D);
        let stiffness = stiffness_matrix(&cfg.mesh, D);
        let mut system_matrix = mass.clone();
        system_matrix.add_scaled(&stiffness, cfg.tau);
        let state = init_state(&cfg);
        let rate = alloc::vec![0.0; state.coeffs().len()];
        Self {
            cfg,
            mass,
            stiffness,
            system_matrix,
            state,
            rate,
            n: 0,
        }
    }

    pub fn config(&self) -> &FlowConfig<F, D> {
        &self.cfg
    }

    pub fn state(&self) -> &CurveState<D> {
        &self.state
    }

    /// Coefficients of `d_t Z^n` from the last completed step.
    pub fn rate(&self) -> &[f64] {
        &self.rate
    }

    pub fn mass(&self) -> &SymBandMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SymBandMatrix {
        &self.stiffness
    }

    pub fn step_index(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.cfg.tau
    }

    pub fn is_finished(&self) -> bool {
        self.n >= self.cfg.num_steps()
    }

    /// The constraint block linearized at the current state: arc-length rows
    /// (without the ones implied by pinned slopes) stacked over boundary rows.
    fn constraint_block(&self) -> Result<ConstraintMatrix, FlowError> {
        let mut b = constraint_matrix(&self.state, self.cfg.mode);
        b.drop_arc_rows_pinned_by(&self.cfg.bc, self.cfg.mesh.num_elements());
        let data: Option<&dyn BoundaryData<D>> = if self.cfg.forced {
            Some(&self.cfg.flow)
        } else {
            None
        };
        let bdry = boundary_rows::<D>(&self.cfg.bc, &self.cfg.mesh, self.cfg.tau, self.time(), data)?;
        Ok(b.stack(bdry))
    }

    /// Advance `Z^n → Z^{n+1}`.
    pub fn advance(&mut self) -> Result<StepReport, FlowError> {
        assert!(!self.is_finished(), "run is already complete");
        let b = self.constraint_block()?;
        let rhs = if self.cfg.forced {
            let t_next = (self.n + 1) as f64 * self.cfg.tau;
            let (u, v, w) = forced_terms(&self.cfg.flow, &self.cfg.mesh, t_next);
            forced_load(&self.state, &u, &v, &w, &self.mass, &self.stiffness)
        } else {
            self.stiffness
                .mul_vec(self.state.coeffs())
                .iter()
                .map(|v| -v)
                .collect()
        };
        let sys = SaddleSystem::new(self.system_matrix.clone(), b, rhs)?;
        let sol = solve_kkt(&sys)?;
        self.rate = sol.primal;
        for (c, r) in self.state.coeffs_mut().iter_mut().zip(&self.rate) {
            *c += self.cfg.tau * r;
        }
        self.n += 1;

        Ok(StepReport {
            n: self.n,
            t: self.time(),
            energy: 0.5 * self.stiffness.quadratic_form(self.state.coeffs()),
            dissipation_l2: self.mass.quadratic_form(&self.rate),
            dissipation_h2: self.cfg.tau * self.stiffness.quadratic_form(&self.rate),
            constraint_violation: self.constraint_violation(),
            kkt_residual: sol.residual,
            zero_constraint_rows: sol.zero_rows.len(),
        })
    }

    /// `max ||Z_x(x̃)|² − 1|` over the constraint nodes of the current state.
    pub fn constraint_violation(&self) -> f64 {
        self.cfg
            .constraint_points()
            .iter()
            .map(|&x| {
                let d = self.state.eval(x, 1).expect("constraint node in domain");
                math::abs(math::norm_sq(&d) - 1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Trajectory snapshots and per-step reports of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput<const D: usize> {
    /// `(step index, state)` at step 0, every `stride` steps, and the end.
    pub snapshots: Vec<(usize, CurveState<D>)>,
    pub reports: Vec<StepReport>,
}

/// Run the configured flow to `T`, keeping snapshots every `stride` steps.
pub fn run<F: AnalyticFlow<D>, const D: usize>(
    cfg: FlowConfig<F, D>,
    stride: usize,
) -> Result<RunOutput<D>, FlowError> {
    let stride = stride.max(1);
    let total = cfg.num_steps();
    let mut stepper = Stepper::new(cfg);
    let mut snapshots = Vec::new();
    let mut reports = Vec::with_capacity(total);
    snapshots.push((0, stepper.state().clone()));
    while !stepper.is_finished() {
        let report = stepper.advance()?;
        if report.n % stride == 0 || report.n == total {
            snapshots.push((report.n, stepper.state().clone()));
        }
        reports.push(report);
    }
    Ok(RunOutput { snapshots, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::{CircleFlow, ForcedHelixFlow, HelixFlow};
    use core::f64::consts::PI;

    fn circle_cfg(m: usize, tau: f64, t_final: f64, mode: ConstraintMode) -> FlowConfig<CircleFlow, 2> {
        let mesh = Arc::new(Dissection::uniform(0.0, 2.0 * PI, m).unwrap());
        FlowConfig::new(
            mesh,
            tau,
            t_final,
            mode,
            BoundarySpec::semi_clamped(),
            CircleFlow,
            false,
        )
        .unwrap()
    }

    #[test]
    fn initial_state_satisfies_constraint_to_roundoff() {
        for mode in [ConstraintMode::P1, ConstraintMode::P2] {
            for m in [4usize, 16] {
                let cfg = circle_cfg(m, 0.1, 1.0, mode);
                let stepper = Stepper::new(cfg);
                assert!(
                    stepper.constraint_violation() <= 1e-14,
                    "mode {mode}, M={m}: {}",
                    stepper.constraint_violation()
                );
            }
        }
    }

    #[test]
    fn stationary_circle_under_p2_constraint() {
        let cfg = circle_cfg(16, 0.1, 1.0, ConstraintMode::P2);
        let mut stepper = Stepper::new(cfg);
        let report = stepper.advance().unwrap();
        // ‖d_t Z¹‖ = √(dissipation_l2)
        assert!(
            math::sqrt(report.dissipation_l2) <= 1e-9,
            "rate norm {}",
            math::sqrt(report.dissipation_l2)
        );
    }

    #[test]
    fn p1_circle_moves() {
        let cfg = circle_cfg(16, 0.1, 1.0, ConstraintMode::P1);
        let mut stepper = Stepper::new(cfg);
        let report = stepper.advance().unwrap();
        assert!(math::sqrt(report.dissipation_l2) > 1e-6);
    }

    #[test]
    fn per_step_energy_identity() {
        let cfg = circle_cfg(12, 0.2, 2.0, ConstraintMode::P1);
        let mut stepper = Stepper::new(cfg);
        let mut prev_energy = 0.5 * stepper.stiffness().quadratic_form(stepper.state().coeffs());
        while !stepper.is_finished() {
            let r = stepper.advance().unwrap();
            let lhs = r.energy
                + stepper.cfg.tau * r.dissipation_l2
                + 0.5 * stepper.cfg.tau * r.dissipation_h2;
            assert!(
                math::abs(lhs - prev_energy) <= 1e-9 * prev_energy,
                "step {}: {lhs} vs {prev_energy}",
                r.n
            );
            prev_energy = r.energy;
        }
    }

    #[test]
    fn nodal_drift_identity() {
        let cfg = circle_cfg(8, 0.1, 1.0, ConstraintMode::P2);
        let points = cfg.constraint_points();
        let mesh = cfg.mesh.clone();
        let mut stepper = Stepper::new(cfg);
        let initial: Vec<f64> = points
            .iter()
            .map(|&x| math::norm_sq(&stepper.state().eval(x, 1).unwrap()))
            .collect();
        let mut accumulated = alloc::vec![0.0f64; points.len()];
        while !stepper.is_finished() {
            stepper.advance().unwrap();
            let rate_curve = CurveState::<2>::from_coeffs(mesh.clone(), stepper.rate().to_vec());
            for (acc, &x) in accumulated.iter_mut().zip(&points) {
                *acc += stepper.cfg.tau.powi(2) * math::norm_sq(&rate_curve.eval(x, 1).unwrap());
            }
        }
        for ((&x, &init), &acc) in points.iter().zip(&initial).zip(&accumulated) {
            let now = math::norm_sq(&stepper.state().eval(x, 1).unwrap());
            assert!(
                math::abs(now - init - acc) <= 1e-9,
                "x={x}: |Z_x|²-|Z⁰_x|²={} vs Στ²|d_tZ_x|²={acc}",
                now - init
            );
        }
    }

    #[test]
    fn rate_satisfies_linearized_constraint() {
        let cfg = circle_cfg(10, 0.5, 2.0, ConstraintMode::P2);
        let mut stepper = Stepper::new(cfg);
        while !stepper.is_finished() {
            let b = stepper.constraint_block().unwrap();
            let r = stepper.advance().unwrap();
            // arc rows have zero rhs; the rate must lie in their kernel
            let violation = b
                .rows
                .iter()
                .filter(|row| {
                    matches!(
                        row.kind,
                        crate::assembly::RowKind::ArcNode { .. }
                            | crate::assembly::RowKind::ArcMidpoint { .. }
                    )
                })
                .map(|row| math::abs(row.apply(stepper.rate())))
                .fold(0.0, f64::max);
            assert!(violation <= 1e-9_f64.max(10.0 * r.kkt_residual));
        }
    }

    #[test]
    fn helix_p2_rate_is_fourth_order() {
        // the clamped helix is not exactly stationary discretely; the first
        // step rate decays like h⁴ and the energy barely moves
        let b = 2.0 * (PI * PI + 1.0).sqrt();
        let mut rates = alloc::vec::Vec::new();
        for m in [16usize, 32] {
            let mesh = Arc::new(Dissection::uniform(0.0, b, m).unwrap());
            let cfg = FlowConfig::new(
                mesh,
                0.1,
                0.5,
                ConstraintMode::P2,
                BoundarySpec::clamped(),
                HelixFlow,
                false,
            )
            .unwrap();
            let mut stepper = Stepper::new(cfg);
            let e0 = 0.5 * stepper.stiffness().quadratic_form(stepper.state().coeffs());
            let r1 = stepper.advance().unwrap();
            rates.push(math::sqrt(r1.dissipation_l2));
            let mut last = r1;
            while !stepper.is_finished() {
                last = stepper.advance().unwrap();
            }
            assert!(math::abs(last.energy - e0) <= 1e-7 * e0);
        }
        assert!(rates[0] < 1e-4);
        let ratio = rates[0] / rates[1];
        assert!((10.0..=24.0).contains(&ratio), "rate ratio {ratio}");
    }

    #[test]
    fn forced_run_tracks_boundary_data() {
        let mesh = Arc::new(Dissection::uniform(0.0, 2.0 * PI, 8).unwrap());
        let cfg = FlowConfig::new(
            mesh.clone(),
            1e-3,
            0.05,
            ConstraintMode::P2,
            BoundarySpec::clamped(),
            ForcedHelixFlow,
            true,
        )
        .unwrap();
        let flow = cfg.flow;
        let z0 = init_state(&cfg);
        let mut stepper = Stepper::new(cfg);
        while !stepper.is_finished() {
            stepper.advance().unwrap();
        }
        let t = stepper.time();
        let last = mesh.num_elements();
        // at x = a the interpolant matches the data, so tracking is exact
        let za = stepper.state().value(0);
        let expect_a = ForcedHelixFlow.value(0.0, t);
        for j in 0..3 {
            assert!((za[j] - expect_a[j]).abs() < 1e-10);
        }
        // at x = b the initial O(h⁴) interpolation offset is transported along
        let zb = stepper.state().value(last);
        for j in 0..3 {
            let moved = zb[j] - z0.value(last)[j];
            let exact_move = flow.value(2.0 * PI, t)[j] - flow.value(2.0 * PI, 0.0)[j];
            assert!((moved - exact_move).abs() < 1e-10);
        }
        // slopes at both ends track the data exactly as well
        for (node, x) in [(0usize, 0.0), (last, 2.0 * PI)] {
            let got = stepper.state().slope(node);
            let expect = ForcedHelixFlow.dx(x, t);
            for j in 0..3 {
                assert!((got[j] - expect[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn energy_identity_holds_for_large_time_steps() {
        // unconditional stability: the identity is exact even for tau >> h
        let cfg = circle_cfg(64, 10.0, 50.0, ConstraintMode::P1);
        let tau = cfg.tau;
        let mut stepper = Stepper::new(cfg);
        let e0 = 0.5 * stepper.stiffness().quadratic_form(stepper.state().coeffs());
        let mut dissipated = 0.0;
        let mut energy = e0;
        while !stepper.is_finished() {
            let r = stepper.advance().unwrap();
            dissipated += tau * r.dissipation_l2 + 0.5 * tau * r.dissipation_h2;
            energy = r.energy;
        }
        assert!(((energy + dissipated - e0) / e0).abs() <= 1e-9);
    }

    #[test]
    fn run_produces_reports_and_snapshots() {
        let cfg = circle_cfg(8, 0.1, 1.0, ConstraintMode::P2);
        let out = run(cfg, 3).unwrap();
        assert_eq!(out.reports.len(), 10);
        let indices: Vec<usize> = out.snapshots.iter().map(|(n, _)| *n).collect();
        assert_eq!(indices, alloc::vec![0, 3, 6, 9, 10]);
        // unforced runs never increase energy
        for w in out.reports.windows(2) {
            assert!(w[1].energy <= w[0].energy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn invalid_time_grid_rejected() {
        let mesh = Arc::new(Dissection::uniform(0.0, 2.0 * PI, 4).unwrap());
        let err = FlowConfig::new(
            mesh,
            0.3,
            1.0,
            ConstraintMode::P2,
            BoundarySpec::semi_clamped(),
            CircleFlow,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, FlowError::InvalidTimeGrid { .. }));
    }

    #[test]
    fn non_unit_speed_initial_curve_rejected() {
        #[derive(Debug)]
        struct WideCircle;
        impl AnalyticFlow<2> for WideCircle {
            fn domain(&self) -> (f64, f64) {
                (0.0, 2.0 * PI)
            }
            fn value(&self, x: f64, _t: f64) -> [f64; 2] {
                [2.0 * x.cos(), 2.0 * x.sin()]
            }
            fn dx(&self, x: f64, _t: f64) -> [f64; 2] {
                [-2.0 * x.sin(), 2.0 * x.cos()]
            }
            fn dxx(&self, x: f64, _t: f64) -> [f64; 2] {
                [-2.0 * x.cos(), -2.0 * x.sin()]
            }
            fn dxxx(&self, x: f64, _t: f64) -> [f64; 2] {
                [2.0 * x.sin(), -2.0 * x.cos()]
            }
            fn dt(&self, _x: f64, _t: f64) -> [f64; 2] {
                [0.0; 2]
            }
            fn dtx(&self, _x: f64, _t: f64) -> [f64; 2] {
                [0.0; 2]
            }
        }
        let mesh = Arc::new(Dissection::uniform(0.0, 2.0 * PI, 4).unwrap());
        let err = FlowConfig::new(
            mesh,
            0.1,
            1.0,
            ConstraintMode::P1,
            BoundarySpec::semi_clamped(),
            WideCircle,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, FlowError::NotUnitSpeed { .. }));
    }

    #[test]
    fn domain_mismatch_rejected() {
        let mesh = Arc::new(Dissection::uniform(0.0, PI, 4).unwrap());
        let err = FlowConfig::new(
            mesh,
            0.1,
            1.0,
            ConstraintMode::P1,
            BoundarySpec::semi_clamped(),
            CircleFlow,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, FlowError::DomainMismatch { .. }));
    }

    #[test]
    fn periodic_circle_runs_stable() {
        let mesh = Arc::new(Dissection::uniform(0.0, 2.0 * PI, 8).unwrap());
        let cfg = FlowConfig::new(
            mesh,
            0.1,
            0.5,
            ConstraintMode::P2,
            BoundarySpec::periodic(),
            CircleFlow,
            false,
        )
        .unwrap();
        let out = run(cfg, 10).unwrap();
        for w in out.reports.windows(2) {
            assert!(w[1].energy <= w[0].energy * (1.0 + 1e-12));
        }
        let last = out.reports.last().unwrap();
        assert!(last.kkt_residual < 1e-9 * 10.0);
        assert!(last.constraint_violation < 1e-3);
    }
}
