//! The per-step KKT system `[A, Bᵀ; B, 0] (x, λ) = (f, q)` and its direct
//! solver.
//!
//! The full block system is factorized directly (no Schur complement): the
//! constraint count is comparable to the primal size at the mesh sizes this
//! solver targets, and a direct solve yields a clean residual certificate.
//! Multiplier unknowns are interleaved with the primal unknowns right after
//! the last coefficient their row touches, which keeps the block system
//! banded for local constraints; rows coupling both interval ends (periodic
//! conditions) fall back to a dense factorization. Both paths use partial
//! pivoting and one step of iterative refinement.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::assembly::{ConstraintMatrix, RowKind, SymBandMatrix};
use crate::math;

/// Which unknown a pivot column belongs to, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum UnknownId {
    Primal { index: usize },
    Multiplier { row: usize, kind: RowKind },
}

impl fmt::Display for UnknownId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownId::Primal { index } => write!(f, "primal coefficient {index}"),
            UnknownId::Multiplier { row, kind } => write!(f, "multiplier of row {row} ({kind})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// Constraint rows are linearly dependent beyond exact duplicates.
    RankDeficient { rows: Vec<RowKind> },
    /// Factorization hit an exactly zero pivot on a primal unknown.
    Breakdown { unknown: UnknownId, pivot: f64 },
    /// A structurally zero row carries a nonzero right-hand side.
    InfeasibleZeroRow { row: usize, kind: RowKind },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::RankDeficient { rows } => {
                write!(f, "constraint rows are linearly dependent:")?;
                for k in rows {
                    write!(f, " [{k}]")?;
                }
                Ok(())
            }
            SolveError::Breakdown { unknown, pivot } => {
                write!(f, "factorization breakdown at {unknown} (pivot {pivot:e})")
            }
            SolveError::InfeasibleZeroRow { row, kind } => {
                write!(f, "zero constraint row {row} ({kind}) has nonzero right-hand side")
            }
        }
    }
}

impl core::error::Error for SolveError {}

/// The assembled saddle-point system of one time step.
///
/// `A = M + τS` is symmetric positive definite; the stacked constraint
/// matrix holds arc-length rows over boundary rows. Exact duplicate rows are
/// deduplicated at construction.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: SymBandMatrix,
    pub b: ConstraintMatrix,
    pub rhs_primal: Vec<f64>,
    pub rhs_dual: Vec<f64>,
    /// Indices of rows kept active (not duplicate, not structurally zero).
    active: Vec<usize>,
    /// Structurally zero rows, tolerated and reported.
    zero_rows: Vec<usize>,
    duplicates: usize,
}

impl SaddleSystem {
    pub fn new(
        a: SymBandMatrix,
        b: ConstraintMatrix,
        rhs_primal: Vec<f64>,
    ) -> Result<Self, SolveError> {
        assert_eq!(a.size(), b.n_cols);
        assert_eq!(rhs_primal.len(), a.size());
        let rhs_dual: Vec<f64> = b.rows.iter().map(|r| r.rhs).collect();

        let mut seen: BTreeMap<Vec<(usize, u64)>, usize> = BTreeMap::new();
        let mut active = Vec::with_capacity(b.rows.len());
        let mut zero_rows = Vec::new();
        let mut duplicates = 0usize;
        for (r, row) in b.rows.iter().enumerate() {
            if row.is_zero() {
                if row.rhs != 0.0 {
                    return Err(SolveError::InfeasibleZeroRow {
                        row: r,
                        kind: row.kind,
                    });
                }
                zero_rows.push(r);
                continue;
            }
            let mut key: Vec<(usize, u64)> =
                row.entries.iter().map(|&(c, v)| (c, v.to_bits())).collect();
            key.sort_unstable();
            key.push((usize::MAX, row.rhs.to_bits()));
            if seen.insert(key, r).is_some() {
                duplicates += 1;
            } else {
                active.push(r);
            }
        }
        Ok(Self {
            a,
            b,
            rhs_primal,
            rhs_dual,
            active,
            zero_rows,
            duplicates,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.a.size() + self.active.len()
    }

    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }
}

/// Solution of a saddle-point step.
#[derive(Debug, Clone)]
pub struct KktSolution {
    /// The primal unknown (the step rate `d_t Z`).
    pub primal: Vec<f64>,
    /// One multiplier per original constraint row; duplicates and zero rows
    /// carry zero.
    pub multipliers: Vec<f64>,
    /// `‖A x + Bᵀλ − f‖_∞ + ‖B x − q‖_∞` of the returned solution.
    pub residual: f64,
    /// Structurally zero constraint rows encountered (diagnostic only).
    pub zero_rows: Vec<usize>,
    /// Number of exact duplicate rows merged away.
    pub deduplicated_rows: usize,
}

/// Solve the block system directly.
pub fn solve_kkt(sys: &SaddleSystem) -> Result<KktSolution, SolveError> {
    let p = sys.a.size();
    let c = sys.active.len();
    let n = p + c;

    // Interleave each multiplier right after the last primal coefficient its
    // row touches. `order[k]` lists the unknown at permuted position k.
    #[derive(Clone, Copy)]
    enum Unknown {
        Primal(usize),
        Mult(usize), // index into sys.active
    }
    let mut keyed: Vec<(usize, usize, usize)> = Vec::with_capacity(n);
    for i in 0..p {
        keyed.push((i, 0, i));
    }
    for (k, &r) in sys.active.iter().enumerate() {
        let maxcol = sys.b.rows[r]
            .entries
            .iter()
            .map(|&(c, _)| c)
            .max()
            .expect("active rows are nonzero");
        keyed.push((maxcol, 1, k));
    }
    keyed.sort_unstable();
    let order: Vec<Unknown> = keyed
        .iter()
        .map(|&(_, tag, idx)| {
            if tag == 0 {
                Unknown::Primal(idx)
            } else {
                Unknown::Mult(idx)
            }
        })
        .collect();
    let mut pos_primal = vec![0usize; p];
    let mut pos_mult = vec![0usize; c];
    for (k, u) in order.iter().enumerate() {
        match *u {
            Unknown::Primal(i) => pos_primal[i] = k,
            Unknown::Mult(m) => pos_mult[m] = k,
        }
    }

    // Assemble the permuted block matrix as triples.
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    sys.a.for_each_upper(|i, j, v| {
        triples.push((pos_primal[i], pos_primal[j], v));
        if i != j {
            triples.push((pos_primal[j], pos_primal[i], v));
        }
    });
    for (m, &r) in sys.active.iter().enumerate() {
        for &(col, v) in &sys.b.rows[r].entries {
            if v != 0.0 {
                triples.push((pos_mult[m], pos_primal[col], v));
                triples.push((pos_primal[col], pos_mult[m], v));
            }
        }
    }

    let mut rhs = vec![0.0; n];
    for i in 0..p {
        rhs[pos_primal[i]] = sys.rhs_primal[i];
    }
    for (m, &r) in sys.active.iter().enumerate() {
        rhs[pos_mult[m]] = sys.rhs_dual[r];
    }

    let bw = triples
        .iter()
        .map(|&(i, j, _)| i.abs_diff(j))
        .max()
        .unwrap_or(0);

    let describe = |k: usize| -> UnknownId {
        match order[k] {
            Unknown::Primal(i) => UnknownId::Primal { index: i },
            Unknown::Mult(m) => {
                let r = sys.active[m];
                UnknownId::Multiplier {
                    row: r,
                    kind: sys.b.rows[r].kind,
                }
            }
        }
    };
    let on_zero_pivot = |k: usize, pivot: f64| -> SolveError {
        match describe(k) {
            UnknownId::Multiplier { kind, .. } => SolveError::RankDeficient { rows: vec![kind] },
            unknown => SolveError::Breakdown { unknown, pivot },
        }
    };

    // Banded factorization when the band saves space, dense otherwise
    // (periodic rows couple both interval ends and defeat the band).
    let mut x = rhs.clone();
    let use_band = 2 * bw + 1 < n;
    if use_band {
        let lu = BandLu::factor(n, bw, &triples).map_err(|(k, piv)| on_zero_pivot(k, piv))?;
        lu.solve(&mut x);
        refine(&triples, &rhs, &mut x, |v| lu.solve(v));
    } else {
        let lu = DenseLu::factor(n, &triples).map_err(|(k, piv)| on_zero_pivot(k, piv))?;
        lu.solve(&mut x);
        refine(&triples, &rhs, &mut x, |v| lu.solve(v));
    }

    // Scatter back to natural ordering.
    let mut primal = vec![0.0; p];
    for i in 0..p {
        primal[i] = x[pos_primal[i]];
    }
    let mut multipliers = vec![0.0; sys.b.rows.len()];
    for (m, &r) in sys.active.iter().enumerate() {
        multipliers[r] = x[pos_mult[m]];
    }

    // Residual certificate on the original block system.
    let mut r1 = sys.a.mul_vec(&primal);
    for (v, f) in r1.iter_mut().zip(&sys.rhs_primal) {
        *v -= f;
    }
    for (r, row) in sys.b.rows.iter().enumerate() {
        let lam = multipliers[r];
        if lam != 0.0 {
            for &(col, v) in &row.entries {
                r1[col] += v * lam;
            }
        }
    }
    let mut residual = r1.iter().fold(0.0f64, |a, &v| a.max(math::abs(v)));
    for (r, row) in sys.b.rows.iter().enumerate() {
        residual = residual.max(math::abs(row.apply(&primal) - sys.rhs_dual[r]));
    }

    // A step is accepted only with a certified residual; a finite blow-up
    // means rows were dependent beyond exact duplicates, and the rows with
    // the largest multipliers point at the dependency.
    let rhs_scale = sys
        .rhs_primal
        .iter()
        .chain(&sys.rhs_dual)
        .fold(0.0f64, |a, &v| a.max(math::abs(v)));
    if !residual.is_finite() || residual > 1e-9 * (1.0 + rhs_scale) {
        let max_l = multipliers
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, &v| a.max(math::abs(v)));
        let rows = sys
            .b
            .rows
            .iter()
            .enumerate()
            .filter(|(r, _)| {
                !multipliers[*r].is_finite()
                    || (max_l > 0.0 && math::abs(multipliers[*r]) >= 0.5 * max_l)
            })
            .map(|(_, row)| row.kind)
            .collect();
        return Err(SolveError::RankDeficient { rows });
    }

    Ok(KktSolution {
        primal,
        multipliers,
        residual,
        zero_rows: sys.zero_rows.clone(),
        deduplicated_rows: sys.duplicates,
    })
}

fn refine(
    triples: &[(usize, usize, f64)],
    rhs: &[f64],
    x: &mut [f64],
    solve: impl Fn(&mut [f64]),
) {
    let n = rhs.len();
    let mut r = rhs.to_vec();
    for &(i, j, v) in triples {
        r[i] -= v * x[j];
    }
    solve(&mut r);
    for i in 0..n {
        x[i] += r[i];
    }
}

/// LU factorization of a general band matrix with partial pivoting
/// (band storage with `kl` extra superdiagonals for pivot fill).
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // stored rows: kl fill rows, then ku superdiagonals, diagonal, kl subdiagonals
        j * (2 * self.kl + self.ku + 1) + (self.kl + self.ku + i - j)
    }

    fn factor(n: usize, bw: usize, triples: &[(usize, usize, f64)]) -> Result<Self, (usize, f64)> {
        let (kl, ku) = (bw, bw);
        let mut lu = BandLu {
            n,
            kl,
            ku,
            ab: vec![0.0; n * (2 * kl + ku + 1)],
            ipiv: vec![0; n],
        };
        for &(i, j, v) in triples {
            let s = lu.idx(i, j);
            lu.ab[s] += v;
        }
        let reach = kl + ku; // widest superdiagonal after row swaps
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            let mut piv = j;
            let mut pmag = math::abs(lu.ab[lu.idx(j, j)]);
            for i in (j + 1)..=imax {
                let m = math::abs(lu.ab[lu.idx(i, j)]);
                if m > pmag {
                    pmag = m;
                    piv = i;
                }
            }
            if pmag == 0.0 {
                return Err((j, 0.0));
            }
            lu.ipiv[j] = piv;
            if piv != j {
                let cmax = (j + reach).min(n - 1);
                for c in j..=cmax {
                    let s1 = lu.idx(j, c);
                    let s2 = lu.idx(piv, c);
                    lu.ab.swap(s1, s2);
                }
            }
            let diag = lu.ab[lu.idx(j, j)];
            for i in (j + 1)..=imax {
                let s = lu.idx(i, j);
                lu.ab[s] /= diag;
            }
            let cmax = (j + reach).min(n - 1);
            for c in (j + 1)..=cmax {
                let ujc = lu.ab[lu.idx(j, c)];
                if ujc != 0.0 {
                    for i in (j + 1)..=imax {
                        let mult = lu.ab[lu.idx(i, j)];
                        if mult != 0.0 {
                            let s = lu.idx(i, c);
                            lu.ab[s] -= mult * ujc;
                        }
                    }
                }
            }
        }
        Ok(lu)
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                b.swap(j, piv);
            }
            let imax = (j + self.kl).min(n - 1);
            let bj = b[j];
            if bj != 0.0 {
                for i in (j + 1)..=imax {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
        let reach = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                let imin = j.saturating_sub(reach);
                for i in imin..j {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
    }
}

/// Dense LU with partial pivoting; used when the band does not pay off.
struct DenseLu {
    n: usize,
    a: Vec<f64>,
    ipiv: Vec<usize>,
}

impl DenseLu {
    fn factor(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self, (usize, f64)> {
        let mut a = vec![0.0; n * n];
        for &(i, j, v) in triples {
            a[i * n + j] += v;
        }
        let mut ipiv = vec![0; n];
        for j in 0..n {
            let mut piv = j;
            let mut pmag = math::abs(a[j * n + j]);
            for i in (j + 1)..n {
                let m = math::abs(a[i * n + j]);
                if m > pmag {
                    pmag = m;
                    piv = i;
                }
            }
            if pmag == 0.0 {
                return Err((j, 0.0));
            }
            ipiv[j] = piv;
            if piv != j {
                for c in 0..n {
                    a.swap(j * n + c, piv * n + c);
                }
            }
            let diag = a[j * n + j];
            for i in (j + 1)..n {
                a[i * n + j] /= diag;
                let mult = a[i * n + j];
                if mult != 0.0 {
                    for c in (j + 1)..n {
                        a[i * n + c] -= mult * a[j * n + c];
                    }
                }
            }
        }
        Ok(Self { n, a, ipiv })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        // factor swaps whole rows, so apply the full pivot sequence first
        for j in 0..n {
            if self.ipiv[j] != j {
                b.swap(j, self.ipiv[j]);
            }
        }
        for j in 0..n {
            let bj = b[j];
            if bj != 0.0 {
                for i in (j + 1)..n {
                    b[i] -= self.a[i * n + j] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.a[j * n + j];
            let bj = b[j];
            if bj != 0.0 {
                for i in 0..j {
                    b[i] -= self.a[i * n + j] * bj;
                }
            }
        }
    }
}
