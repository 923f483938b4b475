//! Verification toolkit for the characterization of the exponential law by
//! the two-sided random-shift equation
//!
//! ```text
//! X_{n-k:n-1} + X_n / n  =d  X_{n-k:n} + X_{n+1} / k,   1 <= k <= n-1.
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`combinatorics`]: exact H-numbers and the finite-difference identities
//!   the argument rests on, checked by brute force over rationals.
//! * [`taylor_jet`]: truncated derivative sequences at 0 with exact
//!   arithmetic, used to evaluate `G_j = F^j f` and the Maclaurin recursion.
//! * [`engine`]: the differentiated integral equation, the coefficient
//!   solver that forces `f^(m)(0) = (-1)^m f(0)^(m+1)`, and batch residual
//!   suites.
//! * [`densities`]: quadrature-based densities of both sides for arbitrary
//!   parent models.
//! * [`montecarlo`]: seeded simulation, two-sample Kolmogorov–Smirnov tests
//!   and a block-permutation exponentiality test.
//! * [`cli`]: the `oschar` command-line front end.

pub mod cli;
pub mod combinatorics;
pub mod densities;
pub mod engine;
pub mod equation;
mod error;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod suite;
pub mod taylor_jet;

pub use combinatorics::{h_number, ExactScalar, HArgs};
pub use equation::{ShiftEquationSpec, Variant};
pub use error::{Error, Result};
pub use model::ParentModel;
pub use taylor_jet::Jet;
