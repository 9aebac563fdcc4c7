//! Closed forms on balls and annuli, and asymptotic upper bounds at conical
//! boundary points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;

/// Normalized extremal of the closed-form cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Extremal {
    /// `u = |∂Ω|⁻¹ χ_Ω`.
    WholeDomain { normalization: f64, unique: bool },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResult {
    pub lambda1: f64,
    /// `|Ω| / |∂Ω|`.
    pub ratio: f64,
    pub has_extremal: bool,
    pub extremal: Extremal,
}

/// `λ₁ = min(|Ω|/|∂Ω|, 1)` for balls and annuli in any dimension.
///
/// The whole-domain indicator is a minimizer when the ratio is at most 1 and
/// the only normalized one at ratio exactly 1; above 1 the infimum is not
/// attained.
pub fn lambda1_closed_form(domain: &Domain) -> Result<ClosedFormResult> {
    domain.validate()?;
    let ratio = match *domain {
        Domain::Ball { dim, radius } => radius / dim as f64,
        Domain::Annulus { dim, inner, outer } => {
            let n = dim as i32;
            (outer.powi(n) - inner.powi(n))
                / (dim as f64 * (outer.powi(n - 1) + inner.powi(n - 1)))
        }
        _ => return Err(Error::NoClosedForm(domain.kind_name().to_string())),
    };
    let (_, boundary) = domain.measures()?;
    let has_extremal = ratio <= 1.0;
    Ok(ClosedFormResult {
        lambda1: ratio.min(1.0),
        ratio,
        has_extremal,
        extremal: if has_extremal {
            Extremal::WholeDomain {
                normalization: 1.0 / boundary,
                unique: ratio == 1.0,
            }
        } else {
            Extremal::None
        },
    })
}

/// `(N−1)|ω| / |∂ω|` for a cone with spherical cross-section ω.
///
/// In N = 2, `|∂ω|` is a point count (2 for an arc).
pub fn cone_bound(omega_measure: f64, omega_boundary_measure: f64, dim: usize) -> Result<f64> {
    if !(omega_measure > 0.0 && omega_boundary_measure > 0.0) {
        return Err(Error::InvalidInput("cone measures must be positive".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidInput("dimension must be at least 2".into()));
    }
    Ok((dim - 1) as f64 * omega_measure / omega_boundary_measure)
}

/// Leading-order bound `sin α` at a convex cone whose cross-section is a
/// spherical cap of angle α. Approximate: no error term is attached.
pub fn spherical_cap_bound(alpha: f64, dim: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidInput(format!("cap angle {alpha} outside (0, π/2]")));
    }
    if dim < 2 {
        return Err(Error::InvalidInput("dimension must be at least 2".into()));
    }
    Ok(alpha.sin())
}

/// Extremals exist as soon as an upper bound strictly below 1 is known.
pub fn existence_criterion(lambda1_upper_bound: f64) -> bool {
    lambda1_upper_bound < 1.0
}
