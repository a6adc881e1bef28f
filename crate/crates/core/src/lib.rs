//! Closed-form and Monte-Carlo tradeoff curves between standard risk and
//! distributionally adversarial risk, for three model families:
//!
//! - [`linreg`] — linear regression with quadratic loss and a quadratic
//!   feature-transport adversary: exact risks and the weighted-sum
//!   Pareto-optimal estimator via a scalar fixed point.
//! - [`binclass`] — Gaussian-mixture binary classification with 0-1 loss and
//!   an `l_r` transport geometry: exact risks through the `(a, b)` classifier
//!   statistics and a sphere-constrained tradeoff solver.
//! - [`random_features`] — regression on the sphere with a random-features
//!   (two-layer, frozen first layer) model: Monte-Carlo standard risk and a
//!   first-order adversarial risk with a convex weighted-sum solver.
//!
//! Every closed form has an independent brute-force verifier in [`oracle`]:
//! primal transport maximization, dual scalar minimization, Monte-Carlo
//! surrogates, and finite-difference gradient checks.
//!
//! All sweep-style entry points fan out over rayon when the `parallel`
//! feature (on by default) is enabled, and degrade to sequential loops
//! without it. Results are deterministic either way: every random stream is
//! derived from a caller-supplied seed by counter, never from thread
//! scheduling.

pub mod binclass;
pub mod error;
pub mod exec;
pub mod gauss;
pub mod linalg;
pub mod linreg;
pub mod optim;
pub mod oracle;
pub mod random_features;
pub mod rng;

pub use error::{Error, Result};
