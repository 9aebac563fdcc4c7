//! P1 finite elements for `λ_p`, the `p > 1` Rayleigh quotient
//! `(∫|∇u|^p + |u|^p) / ∫_∂Ω |u|^p`, and its continuation toward `p = 1`.

mod continuation;
mod field;
mod solver;

pub use continuation::{continuation_to_one, ContinuationResult};
pub use field::FEField;
pub use solver::{
    rayleigh_quotient, sigma_diagnostics, solve_from, solve_lambda_p, Diagnostics, EigenResult,
    Method, SolverParams, TRACE_FLOOR,
};
