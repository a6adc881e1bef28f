//! Scalar and derivative-free/first-order minimizers used by the solvers.

mod golden;
mod lbfgs;
mod nelder_mead;

pub use golden::golden_section_min;
pub use lbfgs::{lbfgs_minimize, LbfgsOptions, LbfgsResult};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
