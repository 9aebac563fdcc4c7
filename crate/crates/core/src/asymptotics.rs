//! Boundary-layer test functions at a strongly curved boundary point.
//!
//! At a point where ∂Ω is the graph `t = ρ(y) ≈ ½ Σ κᵢ yᵢ²`, the layer
//! `u_ε = χ_{Ω ∩ {0 ≤ t ≤ ε²/2}}` has
//!
//! ```text
//! ∫|∇u_ε|     = b^κ ε^{N−1}                                + o(ε^{N+1})
//! ∫|u_ε|      = ω ε^{N+1} / ((N−1)(N+1)√Πκ)                + o(ε^{N+1})
//! ∫_∂Ω |u_ε|  = b^κ ε^{N−1} + ω Σκ ε^{N+1} / (2(N−1)(N+1)√Πκ) + o(ε^{N+1})
//! ```
//!
//! with `b^κ` the volume of `{|y|_κ ≤ 1}` and `ω` the measure of the unit
//! sphere of ℝ^{N−1}. The three integrals are also computed directly by
//! adaptive quadrature on the exact paraboloid, which is the ground truth the
//! expansions are measured against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, BoundaryPatch};
use crate::quadrature;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionInput {
    pub kappa: Vec<f64>,
    pub eps: f64,
}

impl ExpansionInput {
    pub fn new(kappa: Vec<f64>, eps: f64) -> Result<Self> {
        let e = Self { kappa, eps };
        e.validate()?;
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.kappa.len() + 1
    }

    fn validate(&self) -> Result<()> {
        if self.kappa.is_empty() {
            return Err(Error::InvalidInput("need at least one curvature".into()));
        }
        if self.kappa.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidInput("curvatures must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput("ε must be positive".into()));
        }
        let kmax = self.kappa.iter().cloned().fold(0.0, f64::max);
        if self.eps * self.eps * kmax >= 1.0 {
            return Err(Error::InvalidInput("layer too thick: ε² max κ ≥ 1".into()));
        }
        Ok(())
    }
}

/// `b^κ_{N−1}`, `b^ξ_{N−1}` and `ω^ξ_{N−2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricConstants {
    pub b_lambda: f64,
    pub b_xi: f64,
    pub omega_xi: f64,
}

impl GeometricConstants {
    pub fn new(kappa: &[f64]) -> Self {
        let m = kappa.len();
        let b_xi = unit_ball_volume(m);
        let omega_xi = m as f64 * b_xi;
        let sqrt_prod = kappa.iter().product::<f64>().sqrt();
        Self {
            b_lambda: b_xi / sqrt_prod,
            b_xi,
            omega_xi,
        }
    }
}

/// The three layer integrals `(∫|∇u|, ∫|u|, ∫_∂Ω|u|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerIntegrals {
    pub grad: f64,
    pub vol: f64,
    pub bdry: f64,
}

impl LayerIntegrals {
    pub fn quotient(&self) -> f64 {
        (self.grad + self.vol) / self.bdry
    }
}

/// Leading terms of the layer integrals, remainders dropped.
pub fn expansion_terms(input: &ExpansionInput) -> Result<LayerIntegrals> {
    input.validate()?;
    let n = input.dim() as f64;
    let c = GeometricConstants::new(&input.kappa);
    let sqrt_prod = input.kappa.iter().product::<f64>().sqrt();
    let sum: f64 = input.kappa.iter().sum();
    let lo = input.eps.powf(n - 1.0);
    let hi = input.eps.powf(n + 1.0);
    let den = (n - 1.0) * (n + 1.0) * sqrt_prod;
    Ok(LayerIntegrals {
        grad: c.b_lambda * lo,
        vol: c.omega_xi * hi / den,
        bdry: c.b_lambda * lo + c.omega_xi * sum * hi / (2.0 * den),
    })
}

/// `1 + C (1 − Σκ) ε²` with `C = ω / (2(N−1)(N+1) b^κ √Πκ)`, the leading
/// form of the good-point criterion: below 1 exactly when Σκ > 1.
pub fn quotient_expansion(input: &ExpansionInput) -> Result<f64> {
    input.validate()?;
    let c = quotient_constant(&input.kappa);
    let sum: f64 = input.kappa.iter().sum();
    Ok(1.0 + c * (1.0 - sum) * input.eps * input.eps)
}

/// The constant `C` of [`quotient_expansion`]; equals 1/6 for every κ in
/// N = 2.
pub fn quotient_constant(kappa: &[f64]) -> f64 {
    let n = (kappa.len() + 1) as f64;
    let g = GeometricConstants::new(kappa);
    let sqrt_prod = kappa.iter().product::<f64>().sqrt();
    g.omega_xi / (2.0 * (n - 1.0) * (n + 1.0) * g.b_lambda * sqrt_prod)
}

/// Ratio of the expanded layer integrals, `(grad + vol) / bdry`.
///
/// To second order this is `1 + 2C (1 − Σκ/2) ε²`, so the layer itself
/// only beats 1 once Σκ > 2; compare [`quotient_expansion`].
pub fn layer_quotient(input: &ExpansionInput) -> Result<f64> {
    Ok(expansion_terms(input)?.quotient())
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub rel_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12 }
    }
}

/// Direct quadrature of the layer integrals on an exact paraboloid patch,
/// N ∈ {2, 3}.
pub fn quadrature_oracle(patch: &BoundaryPatch, eps: f64) -> Result<LayerIntegrals> {
    quadrature_oracle_with(patch, eps, OracleOptions::default())
}

pub fn quadrature_oracle_with(
    patch: &BoundaryPatch,
    eps: f64,
    opts: OracleOptions,
) -> Result<LayerIntegrals> {
    if patch.exponent.is_finite() {
        return Err(Error::InvalidInput(
            "oracle needs an exact paraboloid (zero remainder)".into(),
        ));
    }
    if patch.kappa.iter().any(|&k| !(k > 0.0)) || !(eps > 0.0) {
        return Err(Error::InvalidInput("need positive curvatures and ε".into()));
    }
    let level = 0.5 * eps * eps;
    let reach = patch.radius;
    let tol = opts.rel_tol;
    match patch.kappa.len() {
        1 => {
            let rho = |y: f64| patch.rho(&[y]);
            let a_plus = sublevel_extent(rho, level, reach)?;
            let a_minus = sublevel_extent(|r| rho(-r), level, reach)?;
            let vol = quadrature::adaptive(-a_minus, a_plus, tol, 0.0, |y| level - rho(y))?;
            let bdry = quadrature::adaptive(-a_minus, a_plus, tol, 0.0, |y| {
                (1.0 + patch.grad_rho_sq(&[y])).sqrt()
            })?;
            Ok(LayerIntegrals {
                grad: a_plus + a_minus,
                vol: vol.value,
                bdry: bdry.value,
            })
        }
        2 => {
            let extent = |phi: f64| {
                let (c, s) = (phi.cos(), phi.sin());
                sublevel_extent(|r| patch.rho(&[r * c, r * s]), level, reach)
            };
            // Fail early if the sublevel set leaves the patch.
            for k in 0..64 {
                extent(std::f64::consts::TAU * k as f64 / 64.0)?;
            }
            let rule = quadrature::GaussLegendre::new(16);
            let radial = |phi: f64, g: &dyn Fn(f64, f64) -> f64| -> f64 {
                let r_max = extent(phi).unwrap_or(0.0);
                let (c, s) = (phi.cos(), phi.sin());
                rule.integrate(0.0, r_max, 4, |r| g(r * c, r * s) * r)
            };
            let tau = std::f64::consts::TAU;
            let grad = quadrature::adaptive(0.0, tau, tol, 0.0, |phi| {
                let r = extent(phi).unwrap_or(0.0);
                0.5 * r * r
            })?;
            let vol = quadrature::adaptive(0.0, tau, tol, 0.0, |phi| {
                radial(phi, &|y0, y1| level - patch.rho(&[y0, y1]))
            })?;
            let bdry = quadrature::adaptive(0.0, tau, tol, 0.0, |phi| {
                radial(phi, &|y0, y1| (1.0 + patch.grad_rho_sq(&[y0, y1])).sqrt())
            })?;
            Ok(LayerIntegrals {
                grad: grad.value,
                vol: vol.value,
                bdry: bdry.value,
            })
        }
        m => Err(Error::Unsupported(format!("oracle in dimension {}", m + 1))),
    }
}

/// Largest `r ≤ reach` with `f(r) ≤ level`, for `f` increasing from 0.
fn sublevel_extent<F: Fn(f64) -> f64>(f: F, level: f64, reach: f64) -> Result<f64> {
    if f(reach) <= level {
        return Err(Error::InvalidInput("layer extends beyond the patch".into()));
    }
    let (mut lo, mut hi) = (0.0, reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Observed behaviour of `|oracle − expansion|` as ε shrinks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrderEstimate {
    /// Errors at quadrature round-off for every ε.
    Exact { errors: Vec<f64> },
    Fitted {
        order: f64,
        errors: Vec<f64>,
        /// Errors failed to decrease monotonically with ε.
        non_monotone: bool,
    },
}

impl OrderEstimate {
    /// True when exact or when the fitted order reaches `min_order`.
    pub fn at_least(&self, min_order: f64) -> bool {
        match self {
            OrderEstimate::Exact { .. } => true,
            OrderEstimate::Fitted { order, .. } => *order >= min_order,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub eps: Vec<f64>,
    pub grad: OrderEstimate,
    pub vol: OrderEstimate,
    pub bdry: OrderEstimate,
    pub warning: bool,
}

/// Errors below this multiple of the quantity count as exact.
const EXACT_FLOOR: f64 = 1e-10;

/// Fits `|oracle − expansion| ∝ ε^q` over `eps_list` for each integral.
pub fn convergence_order_check(patch: &BoundaryPatch, eps_list: &[f64]) -> Result<OrderReport> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidInput("need at least two ε values".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("ε list must be strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let exp = expansion_terms(&ExpansionInput::new(patch.kappa.clone(), eps)?)?;
        let orc = quadrature_oracle(patch, eps)?;
        rows.push((exp, orc));
    }
    let estimate = |pick: fn(&LayerIntegrals) -> f64| -> OrderEstimate {
        let errors: Vec<f64> = rows.iter().map(|(e, o)| (pick(o) - pick(e)).abs()).collect();
        let exact = rows
            .iter()
            .zip(&errors)
            .all(|((_, o), err)| *err <= EXACT_FLOOR * pick(o).abs());
        if exact {
            return OrderEstimate::Exact { errors };
        }
        let xs: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
        let order = slope(&xs, &ys);
        let non_monotone = errors.windows(2).any(|w| !(w[1] < w[0]));
        OrderEstimate::Fitted {
            order,
            errors,
            non_monotone,
        }
    };
    let grad = estimate(|l| l.grad);
    let vol = estimate(|l| l.vol);
    let bdry = estimate(|l| l.bdry);
    let warning = [&grad, &vol, &bdry]
        .iter()
        .any(|e| matches!(e, OrderEstimate::Fitted { non_monotone: true, .. }));
    Ok(OrderReport {
        eps: eps_list.to_vec(),
        grad,
        vol,
        bdry,
        warning,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// One row of the `asymptotics` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub eps: f64,
    pub expansion: LayerIntegrals,
    pub oracle: LayerIntegrals,
    pub quotient: f64,
}

pub fn table(patch: &BoundaryPatch, eps_list: &[f64]) -> Result<Vec<TableRow>> {
    eps_list
        .iter()
        .map(|&eps| {
            let input = ExpansionInput::new(patch.kappa.clone(), eps)?;
            Ok(TableRow {
                eps,
                expansion: expansion_terms(&input)?,
                oracle: quadrature_oracle(patch, eps)?,
                quotient: quotient_expansion(&input)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn input(k: &[f64], eps: f64) -> ExpansionInput {
        ExpansionInput::new(k.to_vec(), eps).unwrap()
    }

    #[test]
    fn planar_unit_curvature_terms() {
        let t = expansion_terms(&input(&[1.0], 0.1)).unwrap();
        assert_relative_eq!(t.grad, 0.2, epsilon = 1e-15);
        // 2ε³/3: the closed-form integral of ε²/2 − y²/2 over [−ε, ε].
        assert_relative_eq!(t.vol, 2.0e-3 / 3.0, epsilon = 1e-16);
        assert_relative_eq!(t.bdry, 0.2 + 2.0e-3 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn b_lambda_scales_with_curvature() {
        let t = expansion_terms(&input(&[4.0], 0.1)).unwrap();
        assert_relative_eq!(t.grad, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn three_dim_volume_term() {
        let t = expansion_terms(&input(&[1.0, 1.0], 0.1)).unwrap();
        assert_relative_eq!(t.vol, PI * 1e-4 / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn geometric_constant_identities() {
        assert_relative_eq!(GeometricConstants::new(&[3.0]).b_xi, 2.0);
        let g = GeometricConstants::new(&[1.0, 2.0]);
        assert_relative_eq!(g.b_xi, PI, epsilon = 1e-12);
        assert_relative_eq!(g.omega_xi, 2.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(g.b_lambda, g.b_xi / 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(g.b_xi, g.omega_xi / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn quotient_examples() {
        for k in [0.3, 1.0, 2.0, 7.5] {
            assert_relative_eq!(quotient_constant(&[k]), 1.0 / 6.0, epsilon = 1e-14);
        }
        assert_relative_eq!(quotient_expansion(&input(&[2.0], 0.1)).unwrap(), 1.0 - 0.01 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(quotient_constant(&[1.0, 1.0]), 0.125, epsilon = 1e-14);
        assert_relative_eq!(quotient_expansion(&input(&[1.0, 1.0], 0.2)).unwrap(), 0.995, epsilon = 1e-14);
        assert_eq!(quotient_expansion(&input(&[0.25, 0.75], 0.3)).unwrap(), 1.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(ExpansionInput::new(vec![1.0, -1.0], 0.1).is_err());
        assert!(ExpansionInput::new(vec![1.0], 0.0).is_err());
        assert!(ExpansionInput::new(vec![200.0], 0.1).is_err());
    }

    #[test]
    fn oracle_planar_values() {
        let p = BoundaryPatch::paraboloid(vec![1.0], 1.0);
        let o = quadrature_oracle(&p, 0.1).unwrap();
        assert_relative_eq!(o.grad, 0.2, epsilon = 1e-14);
        assert_relative_eq!(o.vol, 2.0e-3 / 3.0, max_relative = 1e-12);
        // ∫ √(1+y²) over [−ε, ε] in closed form.
        let e: f64 = 0.1;
        let exact = e * (1.0 + e * e).sqrt() + e.asinh();
        assert_relative_eq!(o.bdry, exact, max_relative = 1e-12);
    }

    #[test]
    fn oracle_requires_paraboloid_and_fits_patch() {
        let mut p = BoundaryPatch::paraboloid(vec![1.0], 1.0);
        assert!(quadrature_oracle(&p, 2.0).is_err());
        p.exponent = 3.0;
        assert!(quadrature_oracle(&p, 0.1).is_err());
    }

    #[test]
    fn planar_grad_error_is_exact() {
        let p = BoundaryPatch::paraboloid(vec![1.0], 1.0);
        let r = convergence_order_check(&p, &[0.2, 0.1, 0.05]).unwrap();
        assert!(matches!(r.grad, OrderEstimate::Exact { .. }));
    }

    #[test]
    fn boundary_error_order_in_three_dims() {
        let p = BoundaryPatch::paraboloid(vec![1.0, 1.0], 1.0);
        let r = convergence_order_check(&p, &[0.2, 0.1, 0.05]).unwrap();
        match r.bdry {
            OrderEstimate::Fitted { order, .. } => assert!(order >= 4.7, "{order}"),
            OrderEstimate::Exact { .. } => panic!("boundary expansion is not exact"),
        }
    }

    #[test]
    fn oracle_symmetric_under_curvature_permutation() {
        let a = quadrature_oracle(&BoundaryPatch::paraboloid(vec![1.0, 3.0], 1.0), 0.2).unwrap();
        let b = quadrature_oracle(&BoundaryPatch::paraboloid(vec![3.0, 1.0], 1.0), 0.2).unwrap();
        assert_relative_eq!(a.grad, b.grad, max_relative = 1e-11);
        assert_relative_eq!(a.vol, b.vol, max_relative = 1e-11);
        assert_relative_eq!(a.bdry, b.bdry, max_relative = 1e-11);
    }
}
