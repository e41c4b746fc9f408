//! Dissections of the interval `I = (a,b)` and their node sets.
//!
//! A [`Dissection`] stores the ordered nodes `a = x_0 < x_1 < ... < x_M = b`.
//! The set `N1` consists of the nodes themselves, `N2` additionally contains
//! the element midpoints; these are the points at which the arc-length
//! constraint is imposed for the two constraint discretizations.

use alloc::vec::Vec;
use core::fmt;

/// Errors from mesh construction and point location.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// Fewer than two nodes / zero elements requested.
    TooFewNodes,
    /// Interval end does not lie strictly right of the start.
    EmptyInterval { a: f64, b: f64 },
    /// Node list is not strictly increasing at the given index.
    NotIncreasing { index: usize },
    /// Point lies outside `[a, b]`.
    OutOfDomain { x: f64, a: f64, b: f64 },
    /// Two states live on different dissections.
    MeshMismatch,
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::TooFewNodes => write!(f, "a dissection needs at least one element"),
            MeshError::EmptyInterval { a, b } => {
                write!(f, "interval end {b} must lie right of start {a}")
            }
            MeshError::NotIncreasing { index } => {
                write!(f, "nodes must be strictly increasing (violated at index {index})")
            }
            MeshError::OutOfDomain { x, a, b } => {
                write!(f, "point {x} lies outside the interval [{a}, {b}]")
            }
            MeshError::MeshMismatch => write!(f, "operands live on different dissections"),
        }
    }
}

impl core::error::Error for MeshError {}

/// A dissection of the interval `(a,b)` into `M` elements.
///
/// Immutable after construction; safe to share between workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissection {
    nodes: Vec<f64>,
    h_max: f64,
    quasi_uniformity: f64,
}

impl Dissection {
    /// Uniform dissection with `m` elements.
    ///
    /// Nodes are computed as `a + (b-a)*i/m` rather than by incremental
    /// addition, so element sizes are reproducible across runs.
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Self, MeshError> {
        if m == 0 {
            return Err(MeshError::TooFewNodes);
        }
        if !(b > a) {
            return Err(MeshError::EmptyInterval { a, b });
        }
        let len = b - a;
        let nodes: Vec<f64> = (0..=m).map(|i| a + len * (i as f64) / (m as f64)).collect();
        Self::from_nodes(nodes)
    }

    /// Dissection from an explicit strictly increasing node list.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, MeshError> {
        if nodes.len() < 2 {
            return Err(MeshError::TooFewNodes);
        }
        let mut h_max = 0.0f64;
        let mut h_min = f64::INFINITY;
        for i in 1..nodes.len() {
            let h = nodes[i] - nodes[i - 1];
            if !(h > 0.0) {
                return Err(MeshError::NotIncreasing { index: i });
            }
            h_max = h_max.max(h);
            h_min = h_min.min(h);
        }
        Ok(Self {
            nodes,
            h_max,
            quasi_uniformity: h_max / h_min,
        })
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Number of elements `M`.
    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of nodes `M + 1`.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Size `h_e` of element `e` (elements are indexed from 0).
    pub fn element_size(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    /// Largest element size `h`.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// The stored quasi-uniformity constant `c` with `h_max <= c * h_e`;
    /// equals 1 for uniform meshes up to rounding.
    pub fn quasi_uniformity(&self) -> f64 {
        self.quasi_uniformity
    }

    /// Midpoint of element `e`.
    pub fn midpoint(&self, e: usize) -> f64 {
        0.5 * (self.nodes[e] + self.nodes[e + 1])
    }

    /// The node set `N1 = {x_0, ..., x_M}`.
    pub fn nodes_p1(&self) -> &[f64] {
        &self.nodes
    }

    /// The node set `N2 = N1 ∪ {midpoints}`, sorted; has `2M + 1` points.
    pub fn nodes_p2(&self) -> Vec<f64> {
        let m = self.num_elements();
        let mut out = Vec::with_capacity(2 * m + 1);
        out.push(self.nodes[0]);
        for e in 0..m {
            out.push(self.midpoint(e));
            out.push(self.nodes[e + 1]);
        }
        out
    }

    /// Index of the element containing `x`; at interior nodes ties break to
    /// the left element (except at `x = a`).
    pub fn element_containing(&self, x: f64) -> Result<usize, MeshError> {
        if x < self.a() || x > self.b() {
            return Err(MeshError::OutOfDomain {
                x,
                a: self.a(),
                b: self.b(),
            });
        }
        let k = self.nodes.partition_point(|&n| n < x);
        Ok(if k == 0 { 0 } else { k - 1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn uniform_nodes_and_spacing() {
        let d = Dissection::uniform(0.0, 2.0 * PI, 4).unwrap();
        let expect = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0, 2.0 * PI];
        for (n, e) in d.nodes_p1().iter().zip(expect) {
            assert!((n - e).abs() <= 4.0 * f64::EPSILON * e.abs());
        }
        assert!((d.h_max() - PI / 2.0).abs() < 1e-15);

        let d = Dissection::uniform(0.0, 1.0, 1).unwrap();
        assert_eq!(d.nodes_p1(), &[0.0, 1.0]);
    }

    #[test]
    fn helix_interval_spacing() {
        let b = 2.0 * (PI * PI + 1.0).sqrt();
        let d = Dissection::uniform(0.0, b, 8).unwrap();
        let h = (PI * PI + 1.0).sqrt() / 4.0;
        assert!((d.h_max() - h).abs() < 4.0 * f64::EPSILON * h);
    }

    #[test]
    fn uniform_element_sizes_agree_to_ulps() {
        // nodes are a + (b-a)i/M, so consecutive differences agree to a few ulps
        let d = Dissection::uniform(0.0, 2.0 * PI, 7).unwrap();
        for e in 0..d.num_elements() {
            let diff = (d.element_size(e) - d.h_max()).abs();
            assert!(diff <= 4.0 * f64::EPSILON * d.h_max());
        }
        assert!(d.quasi_uniformity() < 1.0 + 1e-12);
    }

    #[test]
    fn node_set_sizes() {
        for m in [1usize, 2, 5, 17] {
            let d = Dissection::uniform(-1.0, 3.0, m).unwrap();
            assert_eq!(d.nodes_p1().len(), m + 1);
            assert_eq!(d.nodes_p2().len(), 2 * m + 1);
        }
        let d = Dissection::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(d.nodes_p2(), alloc::vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let d = Dissection::uniform(0.0, 1.0, 1).unwrap();
        assert_eq!(d.nodes_p2(), alloc::vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Dissection::uniform(0.0, 1.0, 0),
            Err(MeshError::TooFewNodes)
        ));
        assert!(matches!(
            Dissection::uniform(1.0, 1.0, 3),
            Err(MeshError::EmptyInterval { .. })
        ));
        assert!(matches!(
            Dissection::from_nodes(alloc::vec![0.0, 0.5, 0.5, 1.0]),
            Err(MeshError::NotIncreasing { index: 2 })
        ));
    }

    #[test]
    fn element_lookup_ties_left() {
        let d = Dissection::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(d.element_containing(0.0).unwrap(), 0);
        assert_eq!(d.element_containing(0.25).unwrap(), 0);
        assert_eq!(d.element_containing(0.26).unwrap(), 1);
        assert_eq!(d.element_containing(1.0).unwrap(), 3);
        assert!(d.element_containing(1.5).is_err());
        assert!(d.element_containing(-0.1).is_err());
    }

    #[test]
    fn non_uniform_constructor() {
        let d = Dissection::from_nodes(alloc::vec![0.0, 0.1, 0.4, 1.0]).unwrap();
        assert_eq!(d.num_elements(), 3);
        assert!((d.h_max() - 0.6).abs() < 1e-15);
        assert!((d.quasi_uniformity() - 6.0).abs() < 1e-12);
        assert!((d.midpoint(1) - 0.25).abs() < 1e-15);
    }
}
