use serde::{Deserialize, Serialize};

use super::field::{f_unchecked, PerturbationField};
use crate::error::{Error, Result};
use crate::geometry::{perp, Curve, Domain, P2};
use crate::isoperimetric::{
    eigenset_search, geometric_quotient, Part, SearchParams, SubsetRegion,
};
use crate::quadrature;

/// Relative tolerance of the boundary quadratures.
pub const QUAD_TOL: f64 = 1e-10;

pub const CONVENTION: &str =
    "nu is the unit inner normal of A; on the trace part nu = -n (n outward normal of the domain)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeDerivativeResult {
    pub value: f64,
    /// `|A∩∂Ω|⁻¹ ∫_{∂*A∩Ω} f(ν)`.
    pub interior: f64,
    /// `−λ₁ |A∩∂Ω|⁻¹ ∫_{A∩∂Ω} f(n̄)`.
    pub trace: f64,
    /// `−|A∩∂Ω|⁻¹ ∫_{∂*A} (R, ν)`.
    pub transport: f64,
    pub convention: String,
}

fn unit(v: P2) -> P2 {
    let l = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / l, v[1] / l]
}

/// Pieces short enough for the 10-point panels to resolve.
fn panels(curve: &Curve) -> Vec<Curve> {
    curve.split_arc(std::f64::consts::FRAC_PI_8)
}

fn integrate_curve<F>(curve: &Curve, g: F) -> Result<f64>
where
    F: Fn(P2, P2) -> f64 + Sync + Send,
{
    // g(point, velocity) is integrated in the curve parameter.
    let mut total = 0.0;
    for c in panels(curve) {
        let floor = 1e-15 * c.length().max(1e-300);
        let est = quadrature::adaptive(0.0, 1.0, QUAD_TOL, floor, |t| g(c.point(t), c.velocity(t)))?;
        total += est.value;
    }
    Ok(total)
}

/// The shape derivative of `λ₁` along `T_δ = id + δR`, evaluated on a
/// candidate eigenset `A` with eigenvalue `lambda1`.
pub fn shape_derivative(
    a: &SubsetRegion,
    lambda1: f64,
    field: &PerturbationField,
) -> Result<ShapeDerivativeResult> {
    if field.dim() != 2 {
        return Err(Error::Unsupported("shape derivative of planar sets only".into()));
    }
    let len = a.trace_length();
    if !(len > 0.0) {
        return Err(Error::NoBoundaryTrace);
    }
    let mut interior = 0.0;
    let mut trace = 0.0;
    let mut transport = 0.0;
    for piece in a.pieces() {
        let c = &piece.curve;
        let f_part = integrate_curve(c, |x, v| {
            let nu = unit(perp(v));
            f_unchecked(&nu, &x, field) * (v[0] * v[0] + v[1] * v[1]).sqrt()
        })?;
        match piece.part {
            Part::Interior => interior += f_part,
            Part::Trace => trace += f_part,
        }
        // (R, ν) ds = R · perp(γ') dt.
        transport += integrate_curve(c, |x, v| {
            let r = field.value(&x);
            let n = perp(v);
            r[0] * n[0] + r[1] * n[1]
        })?;
    }
    let interior = interior / len;
    let trace = -lambda1 * trace / len;
    let transport = -transport / len;
    Ok(ShapeDerivativeResult {
        value: interior + trace + transport,
        interior,
        trace,
        transport,
        convention: CONVENTION.into(),
    })
}

/// Quotient of `T_δ(A)` inside `T_δ(Ω)`, transporting every boundary piece
/// parametrically.
pub fn transported_quotient(
    domain: &Domain,
    a: &SubsetRegion,
    field: &PerturbationField,
    delta: f64,
) -> Result<f64> {
    if field.dim() != 2 {
        return Err(Error::Unsupported("transport of planar sets only".into()));
    }
    if delta == 0.0 {
        return geometric_quotient(a, domain);
    }
    let mut sup_dr: f64 = 0.0;
    let mut length = [0.0, 0.0];
    let mut area = 0.0;
    for piece in a.pieces() {
        for c in panels(&piece.curve) {
            for k in 0..=16 {
                let x = c.point(k as f64 / 16.0);
                let j = field.jacobian(&x);
                sup_dr = sup_dr.max(j.norm());
                let det = (1.0 + delta * j[(0, 0)]) * (1.0 + delta * j[(1, 1)])
                    - delta * delta * j[(0, 1)] * j[(1, 0)];
                if !(det > 0.0) {
                    return Err(Error::NonInjective(format!(
                        "det(I + δDR) = {det} at {x:?}"
                    )));
                }
            }
        }
        let image = |x: P2, v: P2| -> (P2, P2) {
            let r = field.value(&x);
            let j = field.jacobian(&x);
            (
                [x[0] + delta * r[0], x[1] + delta * r[1]],
                [
                    v[0] + delta * (j[(0, 0)] * v[0] + j[(0, 1)] * v[1]),
                    v[1] + delta * (j[(1, 0)] * v[0] + j[(1, 1)] * v[1]),
                ],
            )
        };
        let l = integrate_curve(&piece.curve, |x, v| {
            let (_, w) = image(x, v);
            (w[0] * w[0] + w[1] * w[1]).sqrt()
        })?;
        match piece.part {
            Part::Interior => length[0] += l,
            Part::Trace => length[1] += l,
        }
        area += integrate_curve(&piece.curve, |x, v| {
            let (y, w) = image(x, v);
            0.5 * (y[0] * w[1] - y[1] * w[0])
        })?;
    }
    if delta.abs() * sup_dr >= 0.5 {
        return Err(Error::NonInjective(format!(
            "|δ| sup|DR| = {} is not below 1/2",
            delta.abs() * sup_dr
        )));
    }
    if !(area > 0.0) {
        return Err(Error::NonInjective("transported set has non-positive area".into()));
    }
    if !(length[1] > 0.0) {
        return Err(Error::NoBoundaryTrace);
    }
    Ok((length[0] + area) / length[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub delta: f64,
    pub formula: f64,
    pub central_diff: f64,
    pub left_diff: f64,
    pub right_diff: f64,
    pub gap: f64,
}

/// Compares [`shape_derivative`] with differences of the transported
/// quotient of the fixed set `A` at `±δ`.
pub fn finite_difference_check(
    domain: &Domain,
    a: &SubsetRegion,
    lambda1: f64,
    field: &PerturbationField,
    delta: f64,
) -> Result<FdCheck> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("δ must be positive".into()));
    }
    let formula = shape_derivative(a, lambda1, field)?.value;
    let q0 = transported_quotient(domain, a, field, 0.0)?;
    let qp = transported_quotient(domain, a, field, delta)?;
    let qm = transported_quotient(domain, a, field, -delta)?;
    let central_diff = (qp - qm) / (2.0 * delta);
    Ok(FdCheck {
        delta,
        formula,
        central_diff,
        left_diff: (q0 - qm) / delta,
        right_diff: (qp - q0) / delta,
        gap: (formula - central_diff).abs(),
    })
}

/// End-to-end variant for polygons: re-runs the eigenset search on
/// `T_{±δ}(Ω)` and differences the two minima.
pub fn finite_difference_resolve(
    domain: &Domain,
    field: &PerturbationField,
    delta: f64,
    params: &SearchParams,
) -> Result<f64> {
    let map = |s: f64| {
        domain.map_polygon(|p| {
            let r = field.value(&p);
            [p[0] + s * r[0], p[1] + s * r[1]]
        })
    };
    let qp = eigenset_search(&map(delta)?, params, None, None)?.quotient;
    let qm = eigenset_search(&map(-delta)?, params, None, None)?.quotient;
    Ok((qp - qm) / (2.0 * delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn disk() -> (Domain, SubsetRegion) {
        let d = Domain::disk(1.0).unwrap();
        let a = SubsetRegion::whole(&d).unwrap();
        (d, a)
    }

    #[test]
    fn dilation_of_unit_disk() {
        let (d, a) = disk();
        let r = shape_derivative(&a, 0.5, &PerturbationField::dilation(2)).unwrap();
        assert_relative_eq!(r.value, 0.5, epsilon = 1e-10);
        assert_relative_eq!(r.trace, -0.5, epsilon = 1e-10);
        assert_relative_eq!(r.transport, 1.0, epsilon = 1e-10);
        assert_eq!(r.interior, 0.0);
        assert_eq!(r.value, r.interior + r.trace + r.transport);
        let q = transported_quotient(&d, &a, &PerturbationField::dilation(2), 0.01).unwrap();
        assert_relative_eq!(q, 0.505, epsilon = 1e-12);
    }

    #[test]
    fn translation_is_invisible() {
        let (d, a) = disk();
        let t = PerturbationField::translation(vec![0.3, -1.0]).unwrap();
        assert!(shape_derivative(&a, 0.5, &t).unwrap().value.abs() < 1e-12);
        let q = transported_quotient(&d, &a, &t, 0.2).unwrap();
        assert_relative_eq!(q, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_delta_is_identity() {
        let d = Domain::unit_square();
        let a = SubsetRegion::cap(&d, [1.0, 1.0], 1.2).unwrap();
        let q = transported_quotient(&d, &a, &PerturbationField::shear(), 0.0).unwrap();
        assert_eq!(q, geometric_quotient(&a, &d).unwrap());
    }

    #[test]
    fn shear_gap_is_second_order() {
        let (d, a) = disk();
        let c = finite_difference_check(&d, &a, 0.5, &PerturbationField::shear(), 1e-3).unwrap();
        assert!(c.gap <= 10.0 * 1e-6, "{c:?}");
    }

    #[test]
    fn formula_matches_transport_on_partial_sets() {
        // With λ equal to the quotient of A, the formula is the exact
        // derivative of the transported quotient for any A.
        let d = Domain::disk(1.0).unwrap();
        let a = SubsetRegion::cap(&d, [0.6, 0.8], 0.3).unwrap();
        let lam = geometric_quotient(&a, &d).unwrap();
        let f = PerturbationField::polynomial(
            [vec![(2, 0, 0.5), (0, 1, 1.0)], vec![(1, 1, -0.3), (0, 0, 0.2)]],
            "poly",
        )
        .unwrap();
        let c = finite_difference_check(&d, &a, lam, &f, 1e-4).unwrap();
        assert!(c.gap < 1e-7, "{c:?}");
    }

    #[test]
    fn linear_in_the_field() {
        let d = Domain::unit_square();
        let a = SubsetRegion::cap(&d, [1.0, 0.2], 0.7).unwrap();
        let r1 = PerturbationField::shear();
        let r2 = PerturbationField::dilation(2);
        let sum = PerturbationField::combine(1.0, &r1, 1.0, &r2).unwrap();
        let v = |f| shape_derivative(&a, 0.4, f).unwrap().value;
        assert!((v(&sum) - v(&r1) - v(&r2)).abs() < 1e-10);
    }

    #[test]
    fn folding_transport_rejected() {
        let (d, a) = disk();
        let e = transported_quotient(&d, &a, &PerturbationField::dilation(2), -1.5).unwrap_err();
        assert!(matches!(e, Error::NonInjective(_)));
    }

    #[test]
    fn no_trace_is_an_error() {
        let d = Domain::unit_square();
        let a = SubsetRegion::polygon(vec![[0.2, 0.2], [0.6, 0.2], [0.4, 0.6]], &d).unwrap();
        assert!(matches!(
            shape_derivative(&a, 0.5, &PerturbationField::dilation(2)),
            Err(Error::NoBoundaryTrace)
        ));
    }
}
