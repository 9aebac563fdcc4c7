//! Shape calculus for `λ₁` under transports `T_δ = id + δR`.

mod ball;
mod derivative;
mod field;

pub use ball::{
    ball_specialization, sphere_integral, sphere_measure, tangential_divergence,
    tangential_identity_gap,
};
pub use derivative::{
    finite_difference_check, finite_difference_resolve, shape_derivative, transported_quotient,
    FdCheck, ShapeDerivativeResult, CONVENTION, QUAD_TOL,
};
pub use field::{f_quadratic, PerturbationField};
