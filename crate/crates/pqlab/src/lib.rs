//! Numerical laboratory for quasilinear elliptic problems driven by a
//! (p,q)-Laplacian with critical Sobolev growth on a ball.
//!
//! The crate has three layers:
//!
//! * exact exponent algebra: admissibility classifiers, concentration-rate
//!   exponents, and scaling windows ([`problem`], [`classify`]);
//! * high-accuracy 1-D quadrature of Aubin-Talenti-type bubbles and the
//!   energy quantities built from them ([`bubble`], [`mountain_pass`]);
//! * a radial finite-element solver used for eigenvalue estimates,
//!   Sobolev-constant cross-checks, descent experiments, and Pohozaev
//!   identity verification ([`mesh`], [`solver`], [`pohozaev`]).
//!
//! Everything is deterministic: randomized scans take an explicit seed and
//! repeated runs produce identical bytes.

// Validation guards are written `!(x > 0.0)` on purpose: the negated form
// rejects NaN, which the "simpler" `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubble;
pub mod classify;
pub mod error;
pub mod mesh;
pub mod mountain_pass;
pub mod pohozaev;
pub mod problem;
pub mod quad;
pub mod ratefit;
pub mod solver;

pub use error::{Error, Result};
pub use problem::ProblemSpec;
