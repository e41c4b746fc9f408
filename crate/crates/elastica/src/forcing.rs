//! Analytic reference flows and construction of manufactured right-hand
//! sides.
//!
//! An [`AnalyticFlow`] provides a curve family `z(x, t)` with enough
//! derivatives to serve as initial datum, boundary data, exact solution for
//! error measurement, and source of the forcing terms. The scalar field
//! [`AnalyticFlow::tension`] is the line tension enforcing inextensibility,
//! `λ = −(∫_x^b z_t dσ)·z_x − |z_xx|²`; a prescribed non-stationary curve
//! solves the flow equation driven by the load built from `z_t` and
//! `(λ z_x)_x`, which is what the forced experiments exploit.
//!
//! Built-in flows are hand-coded with closed-form derivatives; the provided
//! trait defaults fall back to adaptive quadrature for the tension's tail
//! integral, so user-supplied flows only need the listed derivatives.

use alloc::sync::Arc;

use crate::assembly::{BoundaryData, BoundarySpec, End};
use crate::hermite::CurveState;
use crate::interpolate::{interp_hermite, SampledCurve, SampledFunction};
use crate::math;
use crate::mesh::Dissection;
use crate::quad::adaptive_simpson;

/// Absolute tolerance of the adaptive quadrature fallbacks.
const QUAD_TOL: f64 = 1e-12;

/// A time-dependent curve family `z(·, t): [a,b] → ℝᵈ` with the derivatives
/// the scheme consumes. All built-in flows keep `|z_x| = 1` exactly.
pub trait AnalyticFlow<const D: usize> {
    /// Natural interval `(a, b)` of the parametrization.
    fn domain(&self) -> (f64, f64);

    fn value(&self, x: f64, t: f64) -> [f64; D];
    fn dx(&self, x: f64, t: f64) -> [f64; D];
    fn dxx(&self, x: f64, t: f64) -> [f64; D];
    fn dxxx(&self, x: f64, t: f64) -> [f64; D];
    fn dt(&self, x: f64, t: f64) -> [f64; D];
    fn dtx(&self, x: f64, t: f64) -> [f64; D];

    /// `∫_a^b |z_xx(·, t)|² dx`; default by adaptive quadrature.
    fn h2_norm_sq(&self, t: f64) -> f64 {
        let (a, b) = self.domain();
        adaptive_simpson(&|x| math::norm_sq(&self.dxx(x, t)), a, b, QUAD_TOL)
    }

    /// Tail integral `∫_x^b z_t dσ`; default by adaptive quadrature.
    fn tail_velocity_integral(&self, x: f64, t: f64) -> [f64; D] {
        let (_, b) = self.domain();
        core::array::from_fn(|j| adaptive_simpson(&|s| self.dt(s, t)[j], x, b, QUAD_TOL))
    }

    /// Line tension `λ = −(∫_x^b z_t dσ)·z_x − |z_xx|²`.
    fn tension(&self, x: f64, t: f64) -> f64 {
        let tail = self.tail_velocity_integral(x, t);
        -math::dot(&tail, &self.dx(x, t)) - math::norm_sq(&self.dxx(x, t))
    }

    /// `∂_x λ = z_t·z_x − (∫_x^b z_t dσ)·z_xx − 2 z_xx·z_xxx`.
    fn tension_dx(&self, x: f64, t: f64) -> f64 {
        let tail = self.tail_velocity_integral(x, t);
        math::dot(&self.dt(x, t), &self.dx(x, t))
            - math::dot(&tail, &self.dxx(x, t))
            - 2.0 * math::dot(&self.dxx(x, t), &self.dxxx(x, t))
    }

    /// `∂_xx λ`; the default differentiates [`Self::tension_dx`] numerically,
    /// built-in flows override it with the closed form.
    fn tension_dxx(&self, x: f64, t: f64) -> f64 {
        let step = 1e-5;
        let (a, b) = self.domain();
        let (lo, hi) = ((x - step).max(a), (x + step).min(b));
        (self.tension_dx(hi, t) - self.tension_dx(lo, t)) / (hi - lo)
    }
}

/// The curve `x ↦ z(x, t)` at a fixed time, as a sampled function.
pub struct PositionAt<'a, F: ?Sized> {
    pub flow: &'a F,
    pub t: f64,
}

impl<F: AnalyticFlow<D> + ?Sized, const D: usize> SampledFunction<D> for PositionAt<'_, F> {
    fn value(&self, x: f64) -> [f64; D] {
        self.flow.value(x, self.t)
    }
}

impl<F: AnalyticFlow<D> + ?Sized, const D: usize> SampledCurve<D> for PositionAt<'_, F> {
    fn derivative(&self, x: f64) -> [f64; D] {
        self.flow.dx(x, self.t)
    }
}

/// The velocity `x ↦ z_t(x, t)` at a fixed time.
pub struct VelocityAt<'a, F: ?Sized> {
    pub flow: &'a F,
    pub t: f64,
}

impl<F: AnalyticFlow<D> + ?Sized, const D: usize> SampledFunction<D> for VelocityAt<'_, F> {
    fn value(&self, x: f64) -> [f64; D] {
        self.flow.dt(x, self.t)
    }
}

impl<F: AnalyticFlow<D> + ?Sized, const D: usize> SampledCurve<D> for VelocityAt<'_, F> {
    fn derivative(&self, x: f64) -> [f64; D] {
        self.flow.dtx(x, self.t)
    }
}

/// The tension force density `x ↦ (λ z_x)_x (x, t)` at a fixed time.
pub struct TensionForceAt<'a, F: ?Sized> {
    pub flow: &'a F,
    pub t: f64,
}

impl<F: AnalyticFlow<D> + ?Sized, const D: usize> SampledFunction<D> for TensionForceAt<'_, F> {
    fn value(&self, x: f64) -> [f64; D] {
        // (λ z_x)_x = λ_x z_x + λ z_xx
        let l = self.flow.tension(x, self.t);
        let lx = self.flow.tension_dx(x, self.t);
        let zx = self.flow.dx(x, self.t);
        let zxx = self.flow.dxx(x, self.t);
        core::array::from_fn(|j| lx * zx[j] + l * zxx[j])
    }
}

impl<F: AnalyticFlow<D> + ?Sized, const D: usize> SampledCurve<D> for TensionForceAt<'_, F> {
    fn derivative(&self, x: f64) -> [f64; D] {
        // (λ z_x)_xx = λ_xx z_x + 2 λ_x z_xx + λ z_xxx
        let l = self.flow.tension(x, self.t);
        let lx = self.flow.tension_dx(x, self.t);
        let lxx = self.flow.tension_dxx(x, self.t);
        let zx = self.flow.dx(x, self.t);
        let zxx = self.flow.dxx(x, self.t);
        let zxxx = self.flow.dxxx(x, self.t);
        core::array::from_fn(|j| lxx * zx[j] + 2.0 * lx * zxx[j] + l * zxxx[j])
    }
}

/// The three Hermite interpolants `(U, V, W)` of the forced scheme at time
/// `t`: position, velocity and tension force density.
pub fn forced_terms<F: AnalyticFlow<D> + ?Sized, const D: usize>(
    flow: &F,
    mesh: &Arc<Dissection>,
    t: f64,
) -> (CurveState<D>, CurveState<D>, CurveState<D>) {
    let u = interp_hermite(&PositionAt { flow, t }, mesh);
    let v = interp_hermite(&VelocityAt { flow, t }, mesh);
    let w = interp_hermite(&TensionForceAt { flow, t }, mesh);
    (u, v, w)
}

impl<F: AnalyticFlow<D>, const D: usize> BoundaryData<D> for F {
    fn position(&self, end: End, t: f64) -> [f64; D] {
        let (a, b) = self.domain();
        let x = match end {
            End::A => a,
            End::B => b,
        };
        self.value(x, t)
    }

    fn slope(&self, end: End, t: f64) -> [f64; D] {
        let (a, b) = self.domain();
        let x = match end {
            End::A => a,
            End::B => b,
        };
        self.dx(x, t)
    }
}

/// Largest deviation `| |z_x(x,t)| − 1 |` over a deterministic sample grid.
pub fn unit_speed_deviation<F: AnalyticFlow<D>, const D: usize>(flow: &F, times: &[f64]) -> f64 {
    let (a, b) = flow.domain();
    let mut worst = 0.0f64;
    let samples = 257;
    for &t in times {
        for k in 0..samples {
            let x = a + (b - a) * (k as f64) / ((samples - 1) as f64);
            let dev = math::abs(math::sqrt(math::norm_sq(&flow.dx(x, t))) - 1.0);
            worst = worst.max(dev);
        }
    }
    worst
}

/// Stationary unit circle in the plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleFlow;

impl AnalyticFlow<2> for CircleFlow {
    fn domain(&self) -> (f64, f64) {
        (0.0, 2.0 * core::f64::consts::PI)
    }

    fn value(&self, x: f64, _t: f64) -> [f64; 2] {
        [math::cos(x), math::sin(x)]
    }

    fn dx(&self, x: f64, _t: f64) -> [f64; 2] {
        [-math::sin(x), math::cos(x)]
    }

    fn dxx(&self, x: f64, _t: f64) -> [f64; 2] {
        [-math::cos(x), -math::sin(x)]
    }

    fn dxxx(&self, x: f64, _t: f64) -> [f64; 2] {
        [math::sin(x), -math::cos(x)]
    }

    fn dt(&self, _x: f64, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn dtx(&self, _x: f64, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn h2_norm_sq(&self, _t: f64) -> f64 {
        // |z_xx| = 1, integrated over [0, 2π]
        2.0 * core::f64::consts::PI
    }

    fn tail_velocity_integral(&self, _x: f64, _t: f64) -> [f64; 2] {
        [0.0; 2]
    }

    fn tension(&self, _x: f64, _t: f64) -> f64 {
        -1.0
    }

    fn tension_dx(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn tension_dxx(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
}

/// Stationary arc-length parameterized helix in space.
///
/// With `κ = π/√(π²+1)` and `μ = 1/√(π²+1)` the curve
/// `x ↦ (cos(κx), sin(κx), μx)` on `[0, 2√(π²+1)]` winds once around the
/// cylinder while `κ² + μ² = 1` keeps it unit speed.
#[derive(Debug, Clone, Copy, Default)]
pub struct HelixFlow;

impl HelixFlow {
    pub fn angular_rate() -> f64 {
        let pi = core::f64::consts::PI;
        pi / math::sqrt(pi * pi + 1.0)
    }

    pub fn pitch_rate() -> f64 {
        let pi = core::f64::consts::PI;
        1.0 / math::sqrt(pi * pi + 1.0)
    }
}

impl AnalyticFlow<3> for HelixFlow {
    fn domain(&self) -> (f64, f64) {
        let pi = core::f64::consts::PI;
        (0.0, 2.0 * math::sqrt(pi * pi + 1.0))
    }

    fn value(&self, x: f64, _t: f64) -> [f64; 3] {
        let k = Self::angular_rate();
        [math::cos(k * x), math::sin(k * x), Self::pitch_rate() * x]
    }

    fn dx(&self, x: f64, _t: f64) -> [f64; 3] {
        let k = Self::angular_rate();
        [-k * math::sin(k * x), k * math::cos(k * x), Self::pitch_rate()]
    }

    fn dxx(&self, x: f64, _t: f64) -> [f64; 3] {
        let k = Self::angular_rate();
        [-k * k * math::cos(k * x), -k * k * math::sin(k * x), 0.0]
    }

    fn dxxx(&self, x: f64, _t: f64) -> [f64; 3] {
        let k = Self::angular_rate();
        [k * k * k * math::sin(k * x), -k * k * k * math::cos(k * x), 0.0]
    }

    fn dt(&self, _x: f64, _t: f64) -> [f64; 3] {
        [0.0; 3]
    }

    fn dtx(&self, _x: f64, _t: f64) -> [f64; 3] {
        [0.0; 3]
    }

    fn h2_norm_sq(&self, _t: f64) -> f64 {
        // |z_xx|² = κ⁴ is constant over the interval
        let k = Self::angular_rate();
        let (a, b) = self.domain();
        k * k * k * k * (b - a)
    }

    fn tail_velocity_integral(&self, _x: f64, _t: f64) -> [f64; 3] {
        [0.0; 3]
    }

    fn tension(&self, _x: f64, _t: f64) -> f64 {
        let k = Self::angular_rate();
        -(k * k * k * k)
    }

    fn tension_dx(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn tension_dxx(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
}

/// Non-stationary flow on `[0, 2π]` that starts as a planar unit circle and
/// winds up into a helix: `z(x,t) = (r(t)cos x, r(t)sin x, tx/(2π))` with
/// `r(t) = √(1 − t²/(4π²))`, which keeps `|z_x| = 1` for all `t < 2π`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForcedHelixFlow;

impl ForcedHelixFlow {
    fn radius(t: f64) -> f64 {
        let pi = core::f64::consts::PI;
        math::sqrt(1.0 - t * t / (4.0 * pi * pi))
    }

    fn radius_dt(t: f64) -> f64 {
        let pi = core::f64::consts::PI;
        -t / (4.0 * pi * pi * Self::radius(t))
    }
}

impl AnalyticFlow<3> for ForcedHelixFlow {
    fn domain(&self) -> (f64, f64) {
        (0.0, 2.0 * core::f64::consts::PI)
    }

    fn value(&self, x: f64, t: f64) -> [f64; 3] {
        let pi = core::f64::consts::PI;
        let r = Self::radius(t);
        [r * math::cos(x), r * math::sin(x), t * x / (2.0 * pi)]
    }

    fn dx(&self, x: f64, t: f64) -> [f64; 3] {
        let pi = core::f64::consts::PI;
        let r = Self::radius(t);
        [-r * math::sin(x), r * math::cos(x), t / (2.0 * pi)]
    }

    fn dxx(&self, x: f64, t: f64) -> [f64; 3] {
        let r = Self::radius(t);
        [-r * math::cos(x), -r * math::sin(x), 0.0]
    }

    fn dxxx(&self, x: f64, t: f64) -> [f64; 3] {
        let r = Self::radius(t);
        [r * math::sin(x), -r * math::cos(x), 0.0]
    }

    fn dt(&self, x: f64, t: f64) -> [f64; 3] {
        let pi = core::f64::consts::PI;
        let rd = Self::radius_dt(t);
        [rd * math::cos(x), rd * math::sin(x), x / (2.0 * pi)]
    }

    fn dtx(&self, x: f64, t: f64) -> [f64; 3] {
        let pi = core::f64::consts::PI;
        let rd = Self::radius_dt(t);
        [-rd * math::sin(x), rd * math::cos(x), 1.0 / (2.0 * pi)]
    }

    fn h2_norm_sq(&self, t: f64) -> f64 {
        // |z_xx|² = r(t)² over [0, 2π]
        let pi = core::f64::consts::PI;
        let r = Self::radius(t);
        2.0 * pi * r * r
    }

    fn tail_velocity_integral(&self, x: f64, t: f64) -> [f64; 3] {
        let pi = core::f64::consts::PI;
        let rd = Self::radius_dt(t);
        [
            -rd * math::sin(x),
            rd * (math::cos(x) - 1.0),
            (4.0 * pi * pi - x * x) / (4.0 * pi),
        ]
    }

    fn tension(&self, x: f64, t: f64) -> f64 {
        let pi = core::f64::consts::PI;
        let r = Self::radius(t);
        let p2 = 4.0 * pi * pi;
        t / p2 * (1.0 - math::cos(x)) - t * (p2 - x * x) / (2.0 * p2) - r * r
    }

    fn tension_dx(&self, x: f64, t: f64) -> f64 {
        let pi = core::f64::consts::PI;
        t / (4.0 * pi * pi) * (math::sin(x) + x)
    }

    fn tension_dxx(&self, x: f64, t: f64) -> f64 {
        let pi = core::f64::consts::PI;
        t / (4.0 * pi * pi) * (math::cos(x) + 1.0)
    }
}

/// Named flows selectable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSpec {
    Circle,
    Helix,
    ForcedHelix,
}

pub const FLOW_NAMES: [&str; 3] = ["circle", "helix", "forced_helix"];

impl FlowSpec {
    pub fn lookup(name: &str) -> Option<FlowSpec> {
        match name {
            "circle" => Some(FlowSpec::Circle),
            "helix" => Some(FlowSpec::Helix),
            "forced_helix" => Some(FlowSpec::ForcedHelix),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowSpec::Circle => "circle",
            FlowSpec::Helix => "helix",
            FlowSpec::ForcedHelix => "forced_helix",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FlowSpec::Circle => 2,
            FlowSpec::Helix | FlowSpec::ForcedHelix => 3,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            FlowSpec::Circle => CircleFlow.domain(),
            FlowSpec::Helix => HelixFlow.domain(),
            FlowSpec::ForcedHelix => ForcedHelixFlow.domain(),
        }
    }

    /// The boundary conditions of the corresponding experiment.
    pub fn default_boundary(&self) -> BoundarySpec {
        match self {
            FlowSpec::Circle => BoundarySpec::semi_clamped(),
            FlowSpec::Helix | FlowSpec::ForcedHelix => BoundarySpec::clamped(),
        }
    }

    /// Whether the flow needs the manufactured right-hand side.
    pub fn default_forced(&self) -> bool {
        matches!(self, FlowSpec::ForcedHelix)
    }
}
