//! Assembly of mass and bending stiffness matrices, linearized arc-length
//! constraint rows, boundary-condition rows and forced-flow load vectors over
//! the Hermite coefficient layout.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::hermite::{local_deriv_weights, CurveState, DofKind, DofLayout};
use crate::math;
use crate::mesh::Dissection;
use crate::quad::{GAUSS2, GAUSS4};

/// Which discrete arc-length constraint is imposed.
///
/// `P1` enforces `|z_x|² = 1` at element endpoints only, `P2` additionally at
/// element midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    P1,
    P2,
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintMode::P1 => write!(f, "p1"),
            ConstraintMode::P2 => write!(f, "p2"),
        }
    }
}

/// Errors from boundary-condition assembly.
#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyError {
    /// Periodic coupling combined with the same condition pinned at both
    /// interval ends leaves dependent rows.
    ContradictoryBoundary,
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::ContradictoryBoundary => write!(
                f,
                "periodic coupling is redundant when the same data is fixed at both interval ends"
            ),
        }
    }
}

impl core::error::Error for AssemblyError {}

/// Symmetric banded matrix over the Hermite coefficient layout.
///
/// Only the upper band is stored (column-major by diagonals); element
/// coupling keeps the half bandwidth at `4*dim - 1`.
#[derive(Debug, Clone)]
pub struct SymBandMatrix {
    n: usize,
    bandwidth: usize,
    /// `data[col * (bandwidth+1) + (col - row)]` holds entry `(row, col)`
    /// for `col - bandwidth <= row <= col`.
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(row <= col && col - row <= self.bandwidth);
        col * (self.bandwidth + 1) + (col - row)
    }

    /// Add `v` to the symmetric entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        let s = self.slot(row, col);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        if col - row > self.bandwidth {
            return 0.0;
        }
        self.data[self.slot(row, col)]
    }

    /// `self += factor * other` (same size and bandwidth).
    pub fn add_scaled(&mut self, other: &SymBandMatrix, factor: f64) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bandwidth, other.bandwidth);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// Visit every stored entry of the upper band including the diagonal.
    pub fn for_each_upper(&self, mut visit: impl FnMut(usize, usize, f64)) {
        for col in 0..self.n {
            let lo = col.saturating_sub(self.bandwidth);
            for row in lo..=col {
                let v = self.data[self.slot(row, col)];
                if v != 0.0 {
                    visit(row, col, v);
                }
            }
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for col in 0..self.n {
            let lo = col.saturating_sub(self.bandwidth);
            for row in lo..=col {
                let v = self.data[self.slot(row, col)];
                y[row] += v * x[col];
                if row != col {
                    y[col] += v * x[row];
                }
            }
        }
    }

    /// `uᵀ A u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.n);
        let mut total = 0.0;
        for col in 0..self.n {
            let lo = col.saturating_sub(self.bandwidth);
            for row in lo..=col {
                let v = self.data[self.slot(row, col)];
                total += if row == col {
                    v * u[row] * u[col]
                } else {
                    2.0 * v * u[row] * u[col]
                };
            }
        }
        total
    }
}

fn element_dofs(layout: &DofLayout, e: usize, comp: usize) -> [usize; 4] {
    [
        layout.index(e, comp, DofKind::Value),
        layout.index(e, comp, DofKind::Slope),
        layout.index(e + 1, comp, DofKind::Value),
        layout.index(e + 1, comp, DofKind::Slope),
    ]
}

fn assemble_galerkin(mesh: &Dissection, dim: usize, deriv: usize, rule: &[(f64, f64)]) -> SymBandMatrix {
    let layout = DofLayout::new(mesh.num_nodes(), dim);
    let mut mat = SymBandMatrix::zeros(layout.len(), 4 * dim - 1);
    for e in 0..mesh.num_elements() {
        let h = mesh.element_size(e);
        let mut local = [[0.0f64; 4]; 4];
        for &(s, w) in rule {
            let phi = local_deriv_weights(h, s, deriv);
            for a in 0..4 {
                for b in a..4 {
                    local[a][b] += w * h * phi[a] * phi[b];
                }
            }
        }
        for comp in 0..dim {
            let dofs = element_dofs(&layout, e, comp);
            for a in 0..4 {
                for b in a..4 {
                    mat.add(dofs[a], dofs[b], local[a][b]);
                }
            }
        }
    }
    mat
}

/// Mass matrix: `(M u, v) = ∫ u·v dx` exactly for Hermite curves.
pub fn mass_matrix(mesh: &Dissection, dim: usize) -> SymBandMatrix {
    assemble_galerkin(mesh, dim, 0, &GAUSS4)
}

/// Bending stiffness: `(S u, v) = ∫ u_xx · v_xx dx` exactly.
pub fn stiffness_matrix(mesh: &Dissection, dim: usize) -> SymBandMatrix {
    assemble_galerkin(mesh, dim, 2, &GAUSS2)
}

/// Interval ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    A,
    B,
}

impl End {
    pub fn node(self, mesh: &Dissection) -> usize {
        match self {
            End::A => 0,
            End::B => mesh.num_elements(),
        }
    }

    pub fn coordinate(self, mesh: &Dissection) -> f64 {
        match self {
            End::A => mesh.a(),
            End::B => mesh.b(),
        }
    }
}

/// Subset of the two interval ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EndpointSet {
    pub a: bool,
    pub b: bool,
}

impl EndpointSet {
    pub const NONE: Self = Self { a: false, b: false };
    pub const A: Self = Self { a: true, b: false };
    pub const B: Self = Self { a: false, b: true };
    pub const BOTH: Self = Self { a: true, b: true };

    pub fn contains(&self, end: End) -> bool {
        match end {
            End::A => self.a,
            End::B => self.b,
        }
    }

    pub fn both(&self) -> bool {
        self.a && self.b
    }
}

/// Dirichlet / periodic boundary conditions for the flow.
///
/// `position_fixed` pins curve values, `slope_fixed` pins first derivatives
/// at the named ends; `periodic` couples both ends of the increment instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundarySpec {
    pub position_fixed: EndpointSet,
    pub slope_fixed: EndpointSet,
    pub periodic: bool,
}

impl BoundarySpec {
    /// Position fixed at the left end, slopes fixed at both ends.
    pub fn semi_clamped() -> Self {
        Self {
            position_fixed: EndpointSet::A,
            slope_fixed: EndpointSet::BOTH,
            periodic: false,
        }
    }

    /// Positions and slopes fixed at both ends.
    pub fn clamped() -> Self {
        Self {
            position_fixed: EndpointSet::BOTH,
            slope_fixed: EndpointSet::BOTH,
            periodic: false,
        }
    }

    pub fn periodic() -> Self {
        Self {
            position_fixed: EndpointSet::NONE,
            slope_fixed: EndpointSet::NONE,
            periodic: true,
        }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if self.periodic && (self.position_fixed.both() || self.slope_fixed.both()) {
            return Err(AssemblyError::ContradictoryBoundary);
        }
        Ok(())
    }
}

/// Provides time-dependent boundary data for forced runs.
pub trait BoundaryData<const D: usize> {
    fn position(&self, end: End, t: f64) -> [f64; D];
    fn slope(&self, end: End, t: f64) -> [f64; D];
}

/// Identifies what a constraint row enforces; used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Linearized arc-length constraint at node `node`.
    ArcNode { node: usize },
    /// Linearized arc-length constraint at the midpoint of element `element`.
    ArcMidpoint { element: usize },
    BoundaryPosition { end: End, comp: usize },
    BoundarySlope { end: End, comp: usize },
    PeriodicPosition { comp: usize },
    PeriodicSlope { comp: usize },
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKind::ArcNode { node } => write!(f, "arc-length row at node {node}"),
            RowKind::ArcMidpoint { element } => {
                write!(f, "arc-length row at midpoint of element {element}")
            }
            RowKind::BoundaryPosition { end, comp } => {
                write!(f, "boundary position row at {end:?}, component {comp}")
            }
            RowKind::BoundarySlope { end, comp } => {
                write!(f, "boundary slope row at {end:?}, component {comp}")
            }
            RowKind::PeriodicPosition { comp } => {
                write!(f, "periodic position row, component {comp}")
            }
            RowKind::PeriodicSlope { comp } => write!(f, "periodic slope row, component {comp}"),
        }
    }
}

/// One sparse linear functional on the coefficient vector plus its
/// right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub kind: RowKind,
    /// Sparse `(column, coefficient)` pairs, ascending by column.
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl ConstraintRow {
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * x[c]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0.0)
    }
}

/// Stacked constraint rows (arc-length rows first, boundary rows after).
#[derive(Debug, Clone, Default)]
pub struct ConstraintMatrix {
    pub n_cols: usize,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            rows: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn stack(mut self, mut other: ConstraintMatrix) -> Self {
        assert_eq!(self.n_cols, other.n_cols);
        self.rows.append(&mut other.rows);
        self
    }

    /// `max_r |row_r · x - rhs_r|`.
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| math::abs(r.apply(x) - r.rhs))
            .fold(0.0, f64::max)
    }

    /// Drop arc-length rows whose constraint node has its slope already
    /// pinned by the boundary conditions (the boundary rows imply them, and
    /// keeping both would leave dependent rows). Under periodic coupling the
    /// arc row at the right end duplicates the one at the left end and is
    /// dropped as well. Returns the number of rows removed.
    pub fn drop_arc_rows_pinned_by(&mut self, bc: &BoundarySpec, last_node: usize) -> usize {
        let before = self.rows.len();
        self.rows.retain(|row| match row.kind {
            RowKind::ArcNode { node } => {
                let pinned = (node == 0 && bc.slope_fixed.a)
                    || (node == last_node && bc.slope_fixed.b)
                    || (node == last_node && bc.periodic);
                !pinned
            }
            _ => true,
        });
        before - self.rows.len()
    }
}

/// Rows of the linearized arc-length constraint about the state `z`:
/// one row per constraint node `x̃` encoding `Y ↦ Y_x(x̃) · z_x(x̃)`.
///
/// Nodal rows read slope degrees of freedom directly (`d` nonzeros);
/// midpoint rows use the Hermite derivative stencil over the `4d` degrees of
/// freedom of one element. All right-hand sides are zero.
pub fn constraint_matrix<const D: usize>(
    z: &CurveState<D>,
    mode: ConstraintMode,
) -> ConstraintMatrix {
    let mesh = z.mesh();
    let layout = z.layout();
    let mut out = ConstraintMatrix::new(layout.len());

    let node_row = |i: usize| -> ConstraintRow {
        let g = z.slope(i);
        let entries = (0..D)
            .map(|j| (layout.index(i, j, DofKind::Slope), g[j]))
            .collect();
        ConstraintRow {
            kind: RowKind::ArcNode { node: i },
            entries,
            rhs: 0.0,
        }
    };

    match mode {
        ConstraintMode::P1 => {
            for i in 0..mesh.num_nodes() {
                out.rows.push(node_row(i));
            }
        }
        ConstraintMode::P2 => {
            out.rows.push(node_row(0));
            for e in 0..mesh.num_elements() {
                let h = mesh.element_size(e);
                let m = mesh.midpoint(e);
                let w = local_deriv_weights(h, 0.5, 1);
                let g = z.eval_in_element(e, m, 1);
                let mut entries = Vec::with_capacity(4 * D);
                for (slot, kind_node) in [
                    (0usize, (e, DofKind::Value)),
                    (1, (e, DofKind::Slope)),
                    (2, (e + 1, DofKind::Value)),
                    (3, (e + 1, DofKind::Slope)),
                ] {
                    for j in 0..D {
                        entries.push((layout.index(kind_node.0, j, kind_node.1), w[slot] * g[j]));
                    }
                }
                out.rows.push(ConstraintRow {
                    kind: RowKind::ArcMidpoint { element: e },
                    entries,
                    rhs: 0.0,
                });
                out.rows.push(node_row(e + 1));
            }
        }
    }
    out
}

/// Boundary-condition rows acting on the step increment `d_t Z`.
///
/// Fixed positions and slopes become unit rows with right-hand sides from the
/// difference quotient of the boundary data over `[t, t + tau]` (zero for
/// static data); periodic coupling ties both ends of the increment together.
pub fn boundary_rows<const D: usize>(
    bc: &BoundarySpec,
    mesh: &Dissection,
    tau: f64,
    t: f64,
    data: Option<&dyn BoundaryData<D>>,
) -> Result<ConstraintMatrix, AssemblyError> {
    bc.validate()?;
    let layout = DofLayout::new(mesh.num_nodes(), D);
    let mut out = ConstraintMatrix::new(layout.len());

    let rate = |end: End, kind: DofKind| -> [f64; D] {
        match data {
            None => [0.0; D],
            Some(d) => {
                let (now, next) = match kind {
                    DofKind::Value => (d.position(end, t), d.position(end, t + tau)),
                    DofKind::Slope => (d.slope(end, t), d.slope(end, t + tau)),
                };
                core::array::from_fn(|j| (next[j] - now[j]) / tau)
            }
        }
    };

    for end in [End::A, End::B] {
        if bc.position_fixed.contains(end) {
            let q = rate(end, DofKind::Value);
            for j in 0..D {
                out.rows.push(ConstraintRow {
                    kind: RowKind::BoundaryPosition { end, comp: j },
                    entries: vec![(layout.index(end.node(mesh), j, DofKind::Value), 1.0)],
                    rhs: q[j],
                });
            }
        }
    }
    for end in [End::A, End::B] {
        if bc.slope_fixed.contains(end) {
            let q = rate(end, DofKind::Slope);
            for j in 0..D {
                out.rows.push(ConstraintRow {
                    kind: RowKind::BoundarySlope { end, comp: j },
                    entries: vec![(layout.index(end.node(mesh), j, DofKind::Slope), 1.0)],
                    rhs: q[j],
                });
            }
        }
    }
    if bc.periodic {
        let last = mesh.num_elements();
        for j in 0..D {
            out.rows.push(ConstraintRow {
                kind: RowKind::PeriodicPosition { comp: j },
                entries: vec![
                    (layout.index(0, j, DofKind::Value), 1.0),
                    (layout.index(last, j, DofKind::Value), -1.0),
                ],
                rhs: 0.0,
            });
        }
        for j in 0..D {
            out.rows.push(ConstraintRow {
                kind: RowKind::PeriodicSlope { comp: j },
                entries: vec![
                    (layout.index(0, j, DofKind::Slope), 1.0),
                    (layout.index(last, j, DofKind::Slope), -1.0),
                ],
                rhs: 0.0,
            });
        }
    }
    Ok(out)
}

/// Load vector `M(V - W) + S(U - Z)` of the forced scheme.
pub fn forced_load<const D: usize>(
    z: &CurveState<D>,
    u: &CurveState<D>,
    v: &CurveState<D>,
    w: &CurveState<D>,
    mass: &SymBandMatrix,
    stiffness: &SymBandMatrix,
) -> Vec<f64> {
    let n = z.coeffs().len();
    assert!(u.coeffs().len() == n && v.coeffs().len() == n && w.coeffs().len() == n);
    let vw: Vec<f64> = v
        .coeffs()
        .iter()
        .zip(w.coeffs())
        .map(|(a, b)| a - b)
        .collect();
    let uz: Vec<f64> = u
        .coeffs()
        .iter()
        .zip(z.coeffs())
        .map(|(a, b)| a - b)
        .collect();
    let mut load = mass.mul_vec(&vw);
    let s_uz = stiffness.mul_vec(&uz);
    for (l, s) in load.iter_mut().zip(s_uz) {
        *l += s;
    }
    load
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolate::{interp_j3, WithDerivative};
    use alloc::sync::Arc;
    use core::f64::consts::PI;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mesh(a: f64, b: f64, m: usize) -> Arc<Dissection> {
        Arc::new(Dissection::uniform(a, b, m).unwrap())
    }

    fn random_state<const D: usize>(mesh: &Arc<Dissection>, seed: u64) -> CurveState<D> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = CurveState::<D>::zeros(mesh.clone());
        for c in u.coeffs_mut() {
            *c = rng.random_range(-1.0..1.0);
        }
        u
    }

    fn circle_j3(m_elems: usize) -> CurveState<2> {
        let m = mesh(0.0, 2.0 * PI, m_elems);
        let f = WithDerivative {
            value: |x: f64| [x.cos(), x.sin()],
            derivative: |x: f64| [-x.sin(), x.cos()],
        };
        interp_j3(&f, &m)
    }

    #[test]
    fn mass_corner_entry_single_element() {
        let m = mesh(0.0, 1.0, 1);
        let mm = mass_matrix(&m, 1);
        // ∫ (2s³-3s²+1)² ds = 13/35
        assert!((mm.get(0, 0) - 13.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn stiffness_corner_entry_single_element() {
        let m = mesh(0.0, 1.0, 1);
        let sm = stiffness_matrix(&m, 1);
        // ∫ (12s-6)² ds = 12
        assert!((sm.get(0, 0) - 12.0).abs() < 1e-13);
    }

    #[test]
    fn mass_quadratic_form_matches_l2_norm() {
        let m = mesh(0.0, 3.0, 4);
        let mm = mass_matrix(&m, 2);
        let u = random_state::<2>(&m, 5);
        let direct = u.seminorm_sq(0);
        let via_matrix = mm.quadratic_form(u.coeffs());
        assert!((direct - via_matrix).abs() < 1e-12 * direct.max(1.0));

        // constant-one curve integrates to b - a
        let mut ones = CurveState::<2>::zeros(m.clone());
        for i in 0..m.num_nodes() {
            ones.set_value(i, [1.0, 0.0]);
        }
        assert!((mm.quadratic_form(ones.coeffs()) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn stiffness_quadratic_form_and_kernel() {
        let m = mesh(0.0, 2.0, 3);
        let sm = stiffness_matrix(&m, 3);
        let u = random_state::<3>(&m, 9);
        assert!(
            (sm.quadratic_form(u.coeffs()) - u.seminorm_sq(2)).abs()
                < 1e-12 * u.seminorm_sq(2).max(1.0)
        );

        // componentwise affine curve lies in the kernel
        let mut aff = CurveState::<3>::zeros(m.clone());
        for i in 0..m.num_nodes() {
            let x = m.node(i);
            aff.set_value(i, [2.0 - x, 0.5 * x, 1.0]);
            aff.set_slope(i, [-1.0, 0.5, 0.0]);
        }
        let sv = sm.mul_vec(aff.coeffs());
        let max = sv.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(max <= 1e-12, "kernel residual {max}");
    }

    #[test]
    fn assembled_matrices_are_exactly_symmetric() {
        let m = mesh(0.0, 1.0, 3);
        for mat in [mass_matrix(&m, 2), stiffness_matrix(&m, 2)] {
            let n = mat.size();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(mat.get(i, j), mat.get(j, i));
                }
            }
        }
    }

    #[test]
    fn band_matvec_matches_dense() {
        let m = mesh(0.0, 1.0, 4);
        let mm = mass_matrix(&m, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: alloc::vec::Vec<f64> = (0..mm.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = mm.mul_vec(&x);
        for i in 0..mm.size() {
            let mut yi = 0.0;
            for j in 0..mm.size() {
                yi += mm.get(i, j) * x[j];
            }
            assert!((y[i] - yi).abs() < 1e-13);
        }
    }

    #[test]
    fn constraint_row_counts() {
        let z = circle_j3(4);
        assert_eq!(constraint_matrix(&z, ConstraintMode::P2).num_rows(), 9);
        assert_eq!(constraint_matrix(&z, ConstraintMode::P1).num_rows(), 5);
    }

    #[test]
    fn constraint_rows_applied_to_seeded_circle_give_one() {
        let z = circle_j3(4);
        for mode in [ConstraintMode::P1, ConstraintMode::P2] {
            let b = constraint_matrix(&z, mode);
            for row in &b.rows {
                // row encodes Y ↦ Y_x(x̃)·Z_x(x̃); applied to Z it is |Z_x(x̃)|²
                assert!(
                    (row.apply(z.coeffs()) - 1.0).abs() < 1e-12,
                    "{:?}",
                    row.kind
                );
            }
        }
    }

    #[test]
    fn midpoint_rows_touch_one_element() {
        let z = circle_j3(4);
        let layout = z.layout();
        let b = constraint_matrix(&z, ConstraintMode::P2);
        for row in &b.rows {
            if let RowKind::ArcMidpoint { element } = row.kind {
                assert_eq!(row.entries.len(), 4 * 2);
                for &(col, _) in &row.entries {
                    let node = layout.node_of(col);
                    assert!(node == element || node == element + 1);
                }
            }
        }
    }

    #[test]
    fn boundary_row_counts_and_static_rhs() {
        let m = mesh(0.0, 2.0 * PI, 4);
        let semi = boundary_rows::<2>(&BoundarySpec::semi_clamped(), &m, 0.1, 0.0, None).unwrap();
        assert_eq!(semi.num_rows(), 2 + 4); // d position rows + 2d slope rows
        assert!(semi.rows.iter().all(|r| r.rhs == 0.0));

        let clamped = boundary_rows::<3>(&BoundarySpec::clamped(), &m, 0.1, 0.0, None).unwrap();
        assert_eq!(clamped.num_rows(), 4 * 3);
    }

    #[test]
    fn contradictory_periodic_spec_rejected() {
        let m = mesh(0.0, 1.0, 2);
        let bad = BoundarySpec {
            position_fixed: EndpointSet::BOTH,
            slope_fixed: EndpointSet::NONE,
            periodic: true,
        };
        assert!(matches!(
            boundary_rows::<2>(&bad, &m, 0.1, 0.0, None),
            Err(AssemblyError::ContradictoryBoundary)
        ));
    }

    #[test]
    fn forced_boundary_rates_telescope_to_data_difference() {
        struct Spiral;
        impl BoundaryData<2> for Spiral {
            fn position(&self, end: End, t: f64) -> [f64; 2] {
                let s = match end {
                    End::A => 0.0,
                    End::B => 1.0,
                };
                [(t + s).sin(), (0.5 * t - s).cos()]
            }
            fn slope(&self, end: End, t: f64) -> [f64; 2] {
                let s = match end {
                    End::A => 0.0,
                    End::B => 1.0,
                };
                [t * s + 1.0, (t - s).exp() * 0.1]
            }
        }
        let m = mesh(0.0, 1.0, 2);
        let bc = BoundarySpec::clamped();
        let tau = 0.01;
        let steps = 100;
        // summing tau * q over all steps recovers data(T) - data(0)
        let mut acc = [[0.0f64; 2]; 2]; // [end][comp] position accumulators
        for n in 0..steps {
            let rows = boundary_rows::<2>(&bc, &m, tau, n as f64 * tau, Some(&Spiral)).unwrap();
            for row in &rows.rows {
                if let RowKind::BoundaryPosition { end, comp } = row.kind {
                    let e = match end {
                        End::A => 0,
                        End::B => 1,
                    };
                    acc[e][comp] += tau * row.rhs;
                }
            }
        }
        let t_final = tau * steps as f64;
        for (e, end) in [End::A, End::B].into_iter().enumerate() {
            let expect: [f64; 2] = core::array::from_fn(|j| {
                Spiral.position(end, t_final)[j] - Spiral.position(end, 0.0)[j]
            });
            for j in 0..2 {
                assert!((acc[e][j] - expect[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn drop_arc_rows_under_pinned_slopes_and_periodic() {
        let z = circle_j3(4);
        let last = z.mesh().num_elements();

        let mut b = constraint_matrix(&z, ConstraintMode::P2);
        let dropped = b.drop_arc_rows_pinned_by(&BoundarySpec::semi_clamped(), last);
        assert_eq!(dropped, 2);
        assert_eq!(b.num_rows(), 7);

        let mut b = constraint_matrix(&z, ConstraintMode::P1);
        let dropped = b.drop_arc_rows_pinned_by(&BoundarySpec::periodic(), last);
        assert_eq!(dropped, 1);
        assert!(b
            .rows
            .iter()
            .all(|r| !matches!(r.kind, RowKind::ArcNode { node } if node == last)));
    }

    #[test]
    fn forced_load_vanishing_cases() {
        let m = mesh(0.0, 1.0, 3);
        let mm = mass_matrix(&m, 2);
        let sm = stiffness_matrix(&m, 2);
        let z = random_state::<2>(&m, 2);
        let v = random_state::<2>(&m, 3);

        // U = Z и V = W: both differences vanish
        let load = forced_load(&z, &z, &v, &v, &mm, &sm);
        assert!(load.iter().all(|&x| x.abs() < 1e-12));

        // W = V, U = Z + affine: S annihilates the affine part
        let mut u = z.clone();
        for i in 0..m.num_nodes() {
            let x = m.node(i);
            let mut val = u.value(i);
            val[0] += 1.0 + 2.0 * x;
            val[1] -= 0.3 * x;
            u.set_value(i, val);
            let mut sl = u.slope(i);
            sl[0] += 2.0;
            sl[1] -= 0.3;
            u.set_slope(i, sl);
        }
        let load = forced_load(&z, &u, &v, &v, &mm, &sm);
        let max = load.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        assert!(max < 1e-11, "residual {max}");
    }

    #[test]
    fn forced_load_matches_quadrature_oracle() {
        let m = mesh(0.0, 1.0, 2);
        let mm = mass_matrix(&m, 2);
        let sm = stiffness_matrix(&m, 2);
        let z = random_state::<2>(&m, 11);
        let u = random_state::<2>(&m, 12);
        let v = random_state::<2>(&m, 13);
        let w = random_state::<2>(&m, 14);
        let load = forced_load(&z, &u, &v, &w, &mm, &sm);

        let layout = z.layout();
        for idx in 0..layout.len() {
            let mut y = CurveState::<2>::zeros(m.clone());
            y.coeffs_mut()[idx] = 1.0;
            // ∫ (V-W)·Y dx + ∫ (U-Z)_xx · Y_xx dx by adaptive quadrature
            let mut oracle = 0.0;
            for part in 0..2 {
                oracle += crate::quad::adaptive_simpson(
                    &|x| {
                        let yy = y.eval(x, if part == 0 { 0 } else { 2 }).unwrap();
                        let (p, q, k) = if part == 0 {
                            (v.eval(x, 0).unwrap(), w.eval(x, 0).unwrap(), yy)
                        } else {
                            (u.eval(x, 2).unwrap(), z.eval(x, 2).unwrap(), yy)
                        };
                        (p[0] - q[0]) * k[0] + (p[1] - q[1]) * k[1]
                    },
                    0.0,
                    1.0,
                    1e-13,
                );
            }
            assert!(
                (load[idx] - oracle).abs() < 1e-10,
                "dof {idx}: {} vs {}",
                load[idx],
                oracle
            );
        }
    }
}
