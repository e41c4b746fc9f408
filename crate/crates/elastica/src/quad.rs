//! Fixed Gauss–Legendre rules on the reference element [0,1] and an adaptive
//! Simpson fallback for integrands without a closed form.
//!
//! The fixed rule orders are chosen once for exactness of the element
//! integrals that arise from cubic Hermite functions (see `hermite` and
//! `assembly`) rather than adaptively, so results are deterministic.

// nodes and weights frozen at full precision; f64 rounds them to nearest
#![allow(clippy::excessive_precision)]

/// 2-point rule, exact for polynomials of degree ≤ 3.
pub(crate) const GAUSS2: [(f64, f64); 2] = [
    (0.21132486540518711775, 0.5),
    (0.78867513459481288225, 0.5),
];

/// 3-point rule, exact for degree ≤ 5.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (0.11270166537925831148, 0.27777777777777777778),
    (0.5, 0.44444444444444444444),
    (0.88729833462074168852, 0.27777777777777777778),
];

/// 4-point rule, exact for degree ≤ 7.
pub(crate) const GAUSS4: [(f64, f64); 4] = [
    (0.069431844202973712388, 0.17392742256872692869),
    (0.3300094782075718676, 0.32607257743127307131),
    (0.6699905217924281324, 0.32607257743127307131),
    (0.93056815579702628761, 0.17392742256872692869),
];

/// Adaptive Simpson quadrature of a scalar integrand to absolute tolerance.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || crate::math::abs(err) <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
