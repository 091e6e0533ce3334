//! Symbolic-numeric exterior calculus on explicit coordinate charts.
//!
//! The crate builds differential forms and vector fields with exact symbolic
//! coefficients, runs the four calculus operators (wedge, exterior derivative,
//! contraction, Lie derivative) plus pullback, and verifies the defining
//! conditions of contact, presymplectic, confoliation and connection
//! structures on grid samples of chart-based manifold models. Built-in models
//! cover the hyperbolic mapping torus, the trivial open book of the 3-sphere,
//! the standard contact 3-torus and plain coordinate boxes; constructive
//! routines produce contact forms from presymplectic data, glue geodesible
//! fields over open books, and certify basic-cohomology witnesses through
//! closed-orbit line integrals.
//!
//! Layering, bottom up:
//!
//! * [`expr`] — immutable scalar expression trees: exact differentiation,
//!   simplification, fast compiled evaluation, text parsing.
//! * [`chart`] / [`exterior`] — coordinate charts, `KForm`, `VecField`,
//!   `SmoothMap` and the calculus operators.
//! * [`manifold`] — chart complexes with identifications, verification grids,
//!   quotient well-definedness checks, built-in models.
//! * [`pointwise`] — per-point linear algebra: rank and kernel of evaluated
//!   2-forms, Reeb vector of a contact form.
//! * [`verify`] — grid checkers producing structured reports, orbit
//!   integration and the nontriviality witness.
//! * [`construct`] — contactization, open-book gluing, confoliation
//!   deformation and the mapping-torus contact perturbation.
//! * [`scenario`] — scenario files, built-in task suites and the runner the
//!   CLI wraps.

pub mod chart;
pub mod construct;
pub mod expr;
pub mod exterior;
pub mod manifold;
pub mod pointwise;
pub mod scenario;
pub mod verify;

pub use chart::{Chart, ChartRef, CoordSpec};
pub use expr::{BumpClass, BumpSpec, Expr, ExprError};
pub use exterior::{GeomObject, KForm, SmoothMap, VecField};
pub use manifold::{ChartComplex, Grid};
pub use verify::{Tolerances, Verdict, VerificationReport};
