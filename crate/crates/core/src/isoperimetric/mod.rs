//! The set formulation `λ₁ = inf (|∂A ∩ Ω| + |A|) / |A ∩ ∂Ω|`.

mod holes;
mod region;
mod search;

pub use holes::hole_placement_bound;
pub use region::{geometric_quotient, Part, Piece, Representation, SubsetRegion, ON_BOUNDARY_TOL};
pub use search::{
    boundary_caps, eigenset_search, search_mesh_size, EigensetResult, SearchFamily, SearchParams,
    TraceRow,
};
