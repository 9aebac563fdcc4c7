use thiserror::Error;

use crate::plaplace::EigenResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("curvature undefined at polygon corner {0}")]
    CornerCurvature(usize),

    #[error("no closed form for {0}; use solver")]
    NoClosedForm(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mesh size h = {h} exceeds domain feature size {feature}")]
    MeshTooCoarse { h: f64, feature: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("quadrature tolerance not reached (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("no boundary trace")]
    NoBoundaryTrace,

    #[error("trace collapse: boundary integral {0:e} below threshold")]
    TraceCollapse(f64),

    #[error("solver did not converge in {iterations} iterations (best λ = {})", best.lambda)]
    NotConverged {
        iterations: usize,
        best: Box<EigenResult>,
    },

    #[error("continuation failed at p = {p}: {source}")]
    Continuation {
        p: f64,
        /// λ_p values of the stages that did finish.
        partial: Vec<(f64, f64)>,
        #[source]
        source: Box<Error>,
    },

    #[error("not a good point: {0}")]
    NotGoodPoint(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("transport map not injective: {0}")]
    NonInjective(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
