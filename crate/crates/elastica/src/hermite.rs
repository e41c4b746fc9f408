//! Cubic C¹ Hermite representation of d-valued curves.
//!
//! A [`CurveState`] stores, per node and spatial component, a value and a
//! physical slope. The represented function is the unique piecewise cubic
//! matching these data, hence globally C¹ by construction. Shape functions on
//! the reference element `[0,1]` carry the element-size scaling internally,
//! so slope degrees of freedom equal `z'(x_i)` directly.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mesh::{Dissection, MeshError};
use crate::quad::{GAUSS2, GAUSS3, GAUSS4};

/// Kind of a nodal degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Value = 0,
    Slope = 1,
}

/// Bijection between `(node, component, kind)` and flat coefficient indices.
///
/// Ordering is node-major with components minor and values before slopes
/// within a node, which keeps element coupling inside a band of half-width
/// `4*dim - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub n_nodes: usize,
    pub dim: usize,
}

impl DofLayout {
    pub fn new(n_nodes: usize, dim: usize) -> Self {
        Self { n_nodes, dim }
    }

    #[inline]
    pub fn index(&self, node: usize, comp: usize, kind: DofKind) -> usize {
        debug_assert!(node < self.n_nodes && comp < self.dim);
        2 * self.dim * node + (kind as usize) * self.dim + comp
    }

    pub fn len(&self) -> usize {
        2 * self.dim * self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node_of(&self, index: usize) -> usize {
        index / (2 * self.dim)
    }

    pub fn decode(&self, index: usize) -> (usize, usize, DofKind) {
        let node = index / (2 * self.dim);
        let rem = index % (2 * self.dim);
        let kind = if rem < self.dim { DofKind::Value } else { DofKind::Slope };
        (node, rem % self.dim, kind)
    }
}

/// Value of the `deriv`-th derivative of reference basis function `basis`
/// at `s ∈ [0,1]`. Basis order: value-left, slope-left, value-right,
/// slope-right.
pub(crate) fn shape(basis: usize, deriv: usize, s: f64) -> f64 {
    match (basis, deriv) {
        (0, 0) => 2.0 * s * s * s - 3.0 * s * s + 1.0,
        (0, 1) => 6.0 * s * s - 6.0 * s,
        (0, 2) => 12.0 * s - 6.0,
        (0, 3) => 12.0,
        (1, 0) => s * s * s - 2.0 * s * s + s,
        (1, 1) => 3.0 * s * s - 4.0 * s + 1.0,
        (1, 2) => 6.0 * s - 4.0,
        (1, 3) => 6.0,
        (2, 0) => -2.0 * s * s * s + 3.0 * s * s,
        (2, 1) => -6.0 * s * s + 6.0 * s,
        (2, 2) => -12.0 * s + 6.0,
        (2, 3) => -12.0,
        (3, 0) => s * s * s - s * s,
        (3, 1) => 3.0 * s * s - 2.0 * s,
        (3, 2) => 6.0 * s - 2.0,
        (3, 3) => 6.0,
        _ => panic!("hermite shape: basis {basis}, derivative {deriv}"),
    }
}

/// Weights `w` such that the `k`-th derivative of the element-local cubic at
/// local coordinate `s` equals `w · (v0, w0, v1, w1)` for an element of size
/// `h` with physical-slope degrees of freedom.
#[inline]
pub(crate) fn local_deriv_weights(h: f64, s: f64, k: usize) -> [f64; 4] {
    let scale = match k {
        0 => 1.0,
        1 => 1.0 / h,
        2 => 1.0 / (h * h),
        3 => 1.0 / (h * h * h),
        _ => panic!("derivative order {k} out of range"),
    };
    [
        scale * shape(0, k, s),
        scale * h * shape(1, k, s),
        scale * shape(2, k, s),
        scale * h * shape(3, k, s),
    ]
}

/// Coefficient vector of a d-valued piecewise-cubic C¹ curve.
#[derive(Debug, Clone)]
pub struct CurveState<const D: usize> {
    mesh: Arc<Dissection>,
    coeffs: Vec<f64>,
}

impl<const D: usize> CurveState<D> {
    /// The zero curve on the given dissection.
    pub fn zeros(mesh: Arc<Dissection>) -> Self {
        let n = 2 * D * mesh.num_nodes();
        Self {
            mesh,
            coeffs: vec![0.0; n],
        }
    }

    /// Wrap an existing coefficient vector; its length must match the layout.
    pub fn from_coeffs(mesh: Arc<Dissection>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), 2 * D * mesh.num_nodes(), "coefficient length");
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Arc<Dissection> {
        &self.mesh
    }

    pub fn layout(&self) -> DofLayout {
        DofLayout::new(self.mesh.num_nodes(), D)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn value(&self, node: usize) -> [f64; D] {
        let l = self.layout();
        core::array::from_fn(|j| self.coeffs[l.index(node, j, DofKind::Value)])
    }

    pub fn slope(&self, node: usize) -> [f64; D] {
        let l = self.layout();
        core::array::from_fn(|j| self.coeffs[l.index(node, j, DofKind::Slope)])
    }

    pub fn set_value(&mut self, node: usize, v: [f64; D]) {
        let l = self.layout();
        for j in 0..D {
            self.coeffs[l.index(node, j, DofKind::Value)] = v[j];
        }
    }

    pub fn set_slope(&mut self, node: usize, v: [f64; D]) {
        let l = self.layout();
        for j in 0..D {
            self.coeffs[l.index(node, j, DofKind::Slope)] = v[j];
        }
    }

    pub fn same_mesh(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    /// `self += alpha * other` on the coefficient vectors.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert!(self.same_mesh(other));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    /// `k`-th derivative at `x`, one-sided from the element containing `x`
    /// with ties broken to the left element.
    pub fn eval(&self, x: f64, k: usize) -> Result<[f64; D], MeshError> {
        let e = self.mesh.element_containing(x)?;
        Ok(self.eval_in_element(e, x, k))
    }

    /// Evaluate using the cubic of element `e` regardless of which element
    /// contains `x`.
    pub(crate) fn eval_in_element(&self, e: usize, x: f64, k: usize) -> [f64; D] {
        let h = self.mesh.element_size(e);
        let s = (x - self.mesh.node(e)) / h;
        let w = local_deriv_weights(h, s, k);
        let l = self.layout();
        core::array::from_fn(|j| {
            w[0] * self.coeffs[l.index(e, j, DofKind::Value)]
                + w[1] * self.coeffs[l.index(e, j, DofKind::Slope)]
                + w[2] * self.coeffs[l.index(e + 1, j, DofKind::Value)]
                + w[3] * self.coeffs[l.index(e + 1, j, DofKind::Slope)]
        })
    }

    /// Exact value of `∫ |D^k u|² dx` for `k ∈ {0,1,2}`.
    ///
    /// Element-wise Gauss quadrature of fixed order: the integrand has degree
    /// `6 - 2k`, so 4/3/2 points suffice for `k = 0/1/2`.
    pub fn seminorm_sq(&self, k: usize) -> f64 {
        let rule: &[(f64, f64)] = match k {
            0 => &GAUSS4,
            1 => &GAUSS3,
            2 => &GAUSS2,
            _ => panic!("seminorm order {k} out of range"),
        };
        let mut total = 0.0;
        for e in 0..self.mesh.num_elements() {
            let h = self.mesh.element_size(e);
            let x0 = self.mesh.node(e);
            for &(s, w) in rule {
                let v = self.eval_in_element(e, x0 + s * h, k);
                total += w * h * math::norm_sq(&v);
            }
        }
        total
    }

    /// `∫ u_xx · v_xx dx`, exact via 2-point Gauss per element.
    pub fn inner_h2(&self, other: &Self) -> Result<f64, MeshError> {
        if !self.same_mesh(other) {
            return Err(MeshError::MeshMismatch);
        }
        let mut total = 0.0;
        for e in 0..self.mesh.num_elements() {
            let h = self.mesh.element_size(e);
            let x0 = self.mesh.node(e);
            for &(s, w) in &GAUSS2 {
                let a = self.eval_in_element(e, x0 + s * h, 2);
                let b = other.eval_in_element(e, x0 + s * h, 2);
                total += w * h * math::dot(&a, &b);
            }
        }
        Ok(total)
    }

    /// Sample the curve at `points_per_element` equispaced points per element
    /// plus the right interval end, for snapshot export.
    pub fn sample(&self, points_per_element: usize) -> Vec<(f64, [f64; D])> {
        let p = points_per_element.max(1);
        let m = self.mesh.num_elements();
        let mut out = Vec::with_capacity(m * p + 1);
        for e in 0..m {
            let h = self.mesh.element_size(e);
            let x0 = self.mesh.node(e);
            for j in 0..p {
                let x = x0 + h * (j as f64) / (p as f64);
                out.push((x, self.eval_in_element(e, x, 0)));
            }
        }
        let b = self.mesh.b();
        out.push((b, self.eval_in_element(m - 1, b, 0)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mesh(a: f64, b: f64, m: usize) -> Arc<Dissection> {
        Arc::new(Dissection::uniform(a, b, m).unwrap())
    }

    /// Hermite state interpolating a cubic (per component) exactly.
    fn interpolate_poly<const D: usize>(
        mesh: &Arc<Dissection>,
        p: impl Fn(f64) -> [f64; D],
        dp: impl Fn(f64) -> [f64; D],
    ) -> CurveState<D> {
        let mut u = CurveState::<D>::zeros(mesh.clone());
        for i in 0..mesh.num_nodes() {
            let x = mesh.node(i);
            u.set_value(i, p(x));
            u.set_slope(i, dp(x));
        }
        u
    }

    #[test]
    fn constant_curve_has_zero_derivative() {
        let m = mesh(0.0, 2.0, 3);
        let u = interpolate_poly::<2>(&m, |_| [4.0, -1.5], |_| [0.0, 0.0]);
        for &x in &[0.0, 0.3, 1.0, 1.7, 2.0] {
            let d = u.eval(x, 1).unwrap();
            assert!(d[0].abs() < 1e-14 && d[1].abs() < 1e-14);
        }
    }

    #[test]
    fn reproduces_x_cubed_on_single_element() {
        let m = mesh(0.0, 1.0, 1);
        let u = interpolate_poly::<1>(&m, |x| [x * x * x], |x| [3.0 * x * x]);
        assert!((u.eval(0.5, 0).unwrap()[0] - 0.125).abs() < 1e-15);
        for &x in &[0.0, 0.25, 0.9, 1.0] {
            assert!((u.eval(x, 3).unwrap()[0] - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_random_cubics_all_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = mesh(-1.0, 2.5, 5);
        for _ in 0..10 {
            let c: [[f64; 4]; 2] = core::array::from_fn(|_| {
                core::array::from_fn(|_| rng.random_range(-2.0..2.0))
            });
            let p = |x: f64| {
                core::array::from_fn(|j| {
                    c[j][0] + c[j][1] * x + c[j][2] * x * x + c[j][3] * x * x * x
                })
            };
            let dp = |x: f64| {
                core::array::from_fn(|j| c[j][1] + 2.0 * c[j][2] * x + 3.0 * c[j][3] * x * x)
            };
            let u = interpolate_poly::<2>(&m, p, dp);
            for i in 0..=20 {
                let x = -1.0 + 3.5 * (i as f64) / 20.0;
                for k in 0..=3usize {
                    let exact: [f64; 2] = match k {
                        0 => p(x),
                        1 => dp(x),
                        2 => core::array::from_fn(|j| 2.0 * c[j][2] + 6.0 * c[j][3] * x),
                        _ => core::array::from_fn(|j| 6.0 * c[j][3]),
                    };
                    let got = u.eval(x, k).unwrap();
                    for j in 0..2 {
                        let scale = 1.0 + exact[j].abs();
                        assert!(
                            (got[j] - exact[j]).abs() < 1e-12 * scale,
                            "k={k} x={x}: {} vs {}",
                            got[j],
                            exact[j]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn c1_continuity_at_interior_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = mesh(0.0, 1.0, 6);
        let mut u = CurveState::<3>::zeros(m.clone());
        for c in u.coeffs_mut() {
            *c = rng.random_range(-1.0..1.0);
        }
        for i in 1..m.num_elements() {
            let x = m.node(i);
            for k in 0..=1usize {
                let left = u.eval_in_element(i - 1, x, k);
                let right = u.eval_in_element(i, x, k);
                for j in 0..3 {
                    assert!((left[j] - right[j]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn seminorms_match_brute_force_simpson() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = mesh(0.0, 2.0, 4);
        let mut u = CurveState::<2>::zeros(m.clone());
        for c in u.coeffs_mut() {
            *c = rng.random_range(-1.0..1.0);
        }
        // composite Simpson with 10^4 panels per element on |D^k u|^2
        for k in 0..=2usize {
            let mut oracle = 0.0;
            for e in 0..m.num_elements() {
                let x0 = m.node(e);
                let h = m.element_size(e);
                let n = 10_000usize;
                let dx = h / n as f64;
                let f = |x: f64| {
                    let v = u.eval_in_element(e, x, k);
                    v[0] * v[0] + v[1] * v[1]
                };
                let mut s = f(x0) + f(x0 + h);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * f(x0 + i as f64 * dx);
                }
                oracle += s * dx / 3.0;
            }
            let got = u.seminorm_sq(k);
            assert!(
                (got - oracle).abs() < 1e-8 * oracle.abs().max(1.0),
                "k={k}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn seminorm2_of_x_squared_is_four() {
        let m = mesh(0.0, 1.0, 1);
        let u = interpolate_poly::<1>(&m, |x| [x * x], |x| [2.0 * x]);
        assert!((u.seminorm_sq(2) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn inner_h2_cases() {
        let m = mesh(0.0, 1.0, 1);
        let u = interpolate_poly::<1>(&m, |x| [x * x], |x| [2.0 * x]);
        let v = interpolate_poly::<1>(&m, |x| [x * x * x], |x| [3.0 * x * x]);
        // ∫ 2 * 6x dx on [0,1] = 6
        assert!((u.inner_h2(&v).unwrap() - 6.0).abs() < 1e-13);
        let w = interpolate_poly::<1>(&m, |_| [5.0], |_| [0.0]);
        assert!(u.inner_h2(&w).unwrap().abs() < 1e-14);
        assert!((u.inner_h2(&u).unwrap() - u.seminorm_sq(2)).abs() < 1e-14);

        let other = mesh(0.0, 1.0, 2);
        let z = CurveState::<1>::zeros(other);
        assert!(matches!(u.inner_h2(&z), Err(MeshError::MeshMismatch)));
    }

    #[test]
    fn eval_outside_domain_errors() {
        let m = mesh(0.0, 1.0, 2);
        let u = CurveState::<2>::zeros(m);
        assert!(matches!(u.eval(1.0001, 0), Err(MeshError::OutOfDomain { .. })));
    }

    #[test]
    fn sampling_covers_interval() {
        let m = mesh(0.0, 1.0, 4);
        let u = interpolate_poly::<1>(&m, |x| [x], |_| [1.0]);
        let pts = u.sample(10);
        assert_eq!(pts.len(), 41);
        assert_eq!(pts[0].0, 0.0);
        assert_eq!(pts.last().unwrap().0, 1.0);
        for (x, v) in pts {
            assert!((v[0] - x).abs() < 1e-14);
        }
    }
}
