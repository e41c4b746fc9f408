//! Finite element solver for the L² gradient flow of the bending energy of
//! inextensible curves.
//!
//! A curve `z: (a,b) → ℝᵈ` is represented as a piecewise-cubic, globally C¹
//! Hermite function over a dissection of the interval. The inextensibility
//! (arc-length) constraint `|z_x|² = 1` is imposed either at the element
//! endpoints only ([`ConstraintMode::P1`]) or at endpoints and midpoints
//! ([`ConstraintMode::P2`]), linearized about the previous iterate, and
//! enforced through a saddle-point system that is assembled and solved in
//! every time step. The semi-implicit stepper is unconditionally stable: the
//! discrete bending energy satisfies an exact dissipation identity.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm` feature
//! instead of the default `std` feature to build without the standard
//! library. IO, configuration files and the command line live in the
//! companion crate `elastica-cli`.
//!
//! Module map:
//!
//! * [`mesh`] — dissections of the interval and their node sets
//! * [`hermite`] — cubic C¹ curves, evaluation and Sobolev (semi)norms
//! * [`interpolate`] — nodal and integral-mean interpolation operators,
//!   composite Simpson quadrature
//! * [`assembly`] — mass/stiffness matrices, constraint and boundary rows,
//!   forced-flow load vectors
//! * [`saddle`] — the per-step KKT system and its direct solver
//! * [`flow`] — the time stepper and per-step diagnostics
//! * [`forcing`] — analytic reference flows and manufactured right-hand sides
//! * [`analysis`] — error norms against exact solutions and EOC studies
//!
//! # Example
//!
//! Evolve the semi-clamped unit circle under the midpoint constraint and
//! measure the error against the exact solution:
//!
//! ```
//! use elastica::assembly::{BoundarySpec, ConstraintMode};
//! use elastica::forcing::CircleFlow;
//! use elastica::{analysis, flow, Dissection};
//! use std::sync::Arc;
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let mesh = Arc::new(Dissection::uniform(0.0, 2.0 * std::f64::consts::PI, 16)?);
//! let cfg = flow::FlowConfig::new(
//!     mesh, 0.1, 0.5, ConstraintMode::P2,
//!     BoundarySpec::semi_clamped(), CircleFlow, false,
//! )?;
//! let (errors, reports) = analysis::measure_errors(cfg)?;
//! assert!(errors.h1l2 < 1e-8);            // the discrete circle is stationary
//! assert!(reports[0].constraint_violation < 1e-12);
//! # Ok(())
//! # }
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub(crate) mod math;
pub(crate) mod quad;

pub mod analysis;
pub mod assembly;
pub mod flow;
pub mod forcing;
pub mod hermite;
pub mod interpolate;
pub mod mesh;
pub mod saddle;

pub use analysis::{ConvergenceTable, ErrorReport, StudySpec};
pub use assembly::{BoundarySpec, ConstraintMatrix, ConstraintMode, End, SymBandMatrix};
pub use flow::{FlowConfig, RunOutput, StepReport, Stepper};
pub use forcing::{AnalyticFlow, CircleFlow, ForcedHelixFlow, HelixFlow};
pub use hermite::CurveState;
pub use mesh::Dissection;
