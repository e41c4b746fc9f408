//! Interpolation operators onto the discrete spaces and composite Simpson
//! quadrature.
//!
//! Three operators matter for the scheme:
//!
//! * [`interp_p2`] — the continuous piecewise-quadratic interpolant matching
//!   function values at nodes and midpoints,
//! * [`interp_hermite`] — the cubic C¹ interpolant matching values and slopes
//!   at the nodes,
//! * [`interp_j3`] — the cubic C¹ curve whose derivative is the quadratic
//!   interpolant of `f'`; values accumulate from `f(a)` by the per-element
//!   Simpson rule. Its slopes match `f'` at nodes *and* midpoints, which is
//!   what makes it the right initial state under the midpoint constraint.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::hermite::CurveState;
use crate::mesh::{Dissection, MeshError};

/// A function `[a,b] → ℝᵈ` that can be evaluated pointwise.
pub trait SampledFunction<const D: usize> {
    fn value(&self, x: f64) -> [f64; D];
}

/// A continuously differentiable sampled function.
pub trait SampledCurve<const D: usize>: SampledFunction<D> {
    fn derivative(&self, x: f64) -> [f64; D];
}

impl<F, const D: usize> SampledFunction<D> for F
where
    F: Fn(f64) -> [f64; D],
{
    fn value(&self, x: f64) -> [f64; D] {
        self(x)
    }
}

/// Bundle a value closure with its derivative.
pub struct WithDerivative<F, G> {
    pub value: F,
    pub derivative: G,
}

impl<F, G, const D: usize> SampledFunction<D> for WithDerivative<F, G>
where
    F: Fn(f64) -> [f64; D],
    G: Fn(f64) -> [f64; D],
{
    fn value(&self, x: f64) -> [f64; D] {
        (self.value)(x)
    }
}

impl<F, G, const D: usize> SampledCurve<D> for WithDerivative<F, G>
where
    F: Fn(f64) -> [f64; D],
    G: Fn(f64) -> [f64; D],
{
    fn derivative(&self, x: f64) -> [f64; D] {
        (self.derivative)(x)
    }
}

/// Continuous piecewise quadratic determined by values at nodes and
/// midpoints (the sorted `N2` points).
#[derive(Debug, Clone)]
pub struct QuadraticPP<const D: usize> {
    mesh: Arc<Dissection>,
    /// Values at the sorted `N2` points, length `2M + 1`.
    values: Vec<[f64; D]>,
}

impl<const D: usize> QuadraticPP<D> {
    pub fn mesh(&self) -> &Arc<Dissection> {
        &self.mesh
    }

    pub fn values(&self) -> &[[f64; D]] {
        &self.values
    }

    /// Evaluate at `x`; ties at interior nodes resolve to the left element
    /// (the two candidate quadratics agree there anyway).
    pub fn eval(&self, x: f64) -> Result<[f64; D], MeshError> {
        let e = self.mesh.element_containing(x)?;
        let h = self.mesh.element_size(e);
        let s = (x - self.mesh.node(e)) / h;
        // Lagrange basis on {0, 1/2, 1}
        let l0 = 2.0 * s * s - 3.0 * s + 1.0;
        let l1 = 4.0 * s * (1.0 - s);
        let l2 = s * (2.0 * s - 1.0);
        let v0 = &self.values[2 * e];
        let v1 = &self.values[2 * e + 1];
        let v2 = &self.values[2 * e + 2];
        Ok(core::array::from_fn(|j| l0 * v0[j] + l1 * v1[j] + l2 * v2[j]))
    }
}

/// Quadratic interpolant matching `f` at all `N2` points.
pub fn interp_p2<const D: usize>(
    f: &impl SampledFunction<D>,
    mesh: &Arc<Dissection>,
) -> QuadraticPP<D> {
    let values = mesh.nodes_p2().iter().map(|&x| f.value(x)).collect();
    QuadraticPP {
        mesh: mesh.clone(),
        values,
    }
}

/// Cubic C¹ interpolant with nodal values `f(x_i)` and slopes `f'(x_i)`.
pub fn interp_hermite<const D: usize>(
    f: &impl SampledCurve<D>,
    mesh: &Arc<Dissection>,
) -> CurveState<D> {
    let mut u = CurveState::zeros(mesh.clone());
    for i in 0..mesh.num_nodes() {
        let x = mesh.node(i);
        u.set_value(i, f.value(x));
        u.set_slope(i, f.derivative(x));
    }
    u
}

/// The integral-mean cubic interpolant: slopes are `f'` at the nodes and
/// values accumulate left to right by the per-element Simpson rule
/// `v_i = v_{i-1} + (h_i/6)(f'(x_{i-1}) + 4 f'(m_i) + f'(x_i))`.
///
/// The derivative of the result is the quadratic interpolant of `f'`, so the
/// slope of the returned curve also matches `f'` at every midpoint.
pub fn interp_j3<const D: usize>(
    f: &impl SampledCurve<D>,
    mesh: &Arc<Dissection>,
) -> CurveState<D> {
    let mut u = CurveState::zeros(mesh.clone());
    let mut value = f.value(mesh.a());
    u.set_value(0, value);
    u.set_slope(0, f.derivative(mesh.a()));
    for e in 0..mesh.num_elements() {
        let h = mesh.element_size(e);
        let d0 = f.derivative(mesh.node(e));
        let dm = f.derivative(mesh.midpoint(e));
        let d1 = f.derivative(mesh.node(e + 1));
        for j in 0..D {
            value[j] += h / 6.0 * (d0[j] + 4.0 * dm[j] + d1[j]);
        }
        u.set_value(e + 1, value);
        u.set_slope(e + 1, d1);
    }
    u
}

/// Composite Simpson quadrature of `f` over the dissection, componentwise;
/// equals the exact integral of [`interp_p2`]`(f)`.
pub fn simpson<const D: usize>(f: &impl SampledFunction<D>, mesh: &Dissection) -> [f64; D] {
    let mut total = [0.0; D];
    let mut right = f.value(mesh.a());
    for e in 0..mesh.num_elements() {
        let left = right;
        let mid = f.value(mesh.midpoint(e));
        right = f.value(mesh.node(e + 1));
        let h = mesh.element_size(e);
        for j in 0..D {
            total[j] += h / 6.0 * (left[j] + 4.0 * mid[j] + right[j]);
        }
    }
    total
}
