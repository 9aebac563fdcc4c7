use std::f64::consts::TAU;

use nalgebra::DVector;

use super::field::{f_unchecked, PerturbationField};
use crate::error::{Error, Result};
use crate::geometry::unit_sphere_measure;
use crate::quadrature::GaussLegendre;

/// `∫_{∂B_ρ} g dH^{N−1}` for `N ∈ {2, 3}`, refined until two levels agree
/// to `1e-13` relative (absolute floor `1e-15`).
pub fn sphere_integral<G: Fn(&[f64]) -> f64>(dim: usize, radius: f64, g: G) -> Result<f64> {
    let level = |n: usize| -> f64 {
        match dim {
            2 => {
                // Trapezoid on a periodic integrand.
                let h = TAU / n as f64;
                (0..n)
                    .map(|k| {
                        let t = h * k as f64;
                        g(&[radius * t.cos(), radius * t.sin()])
                    })
                    .sum::<f64>()
                    * h
                    * radius
            }
            _ => {
                // Gauss in z = cos θ, trapezoid in φ.
                let rule = GaussLegendre::new(n / 2);
                let h = TAU / n as f64;
                let mut acc = 0.0;
                for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                    let s = (1.0 - z * z).sqrt();
                    for k in 0..n {
                        let p = h * k as f64;
                        acc += w * h * g(&[radius * s * p.cos(), radius * s * p.sin(), radius * z]);
                    }
                }
                acc * radius * radius
            }
        }
    };
    if !(2..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("sphere quadrature in dimension {dim}")));
    }
    let mut n = 16;
    let mut prev = level(n);
    while n < 1 << 12 {
        n *= 2;
        let cur = level(n);
        if (cur - prev).abs() <= 1e-13 * cur.abs().max(1.0) * radius.powi(dim as i32 - 1) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature { estimate: prev, error: f64::NAN })
}

/// `−((N−1)/N) |∂B|⁻¹ ∫_{∂B} (R, n̄)` on the ball of radius `N`, where
/// `λ₁ = 1` and `B` is its own eigenset.
pub fn ball_specialization(dim: usize, field: &PerturbationField) -> Result<f64> {
    if field.dim() != dim {
        return Err(Error::InvalidInput("field dimension differs from N".into()));
    }
    let rho = dim as f64;
    let flux = sphere_integral(dim, rho, |x| {
        let r = field.value(x);
        x.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() / rho
    })?;
    let measure = unit_sphere_measure(dim) * rho.powi(dim as i32 - 1);
    Ok(-((rho - 1.0) / rho) * flux / measure)
}

/// Orthonormal tangent frame at a sphere point.
fn tangent_frame(x: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = x.normalize();
    if x.len() == 2 {
        return vec![DVector::from_vec(vec![-n[1], n[0]])];
    }
    let pick = if n[0].abs() < 0.9 {
        DVector::from_vec(vec![1.0, 0.0, 0.0])
    } else {
        DVector::from_vec(vec![0.0, 1.0, 0.0])
    };
    let e1 = (&pick - n.dot(&pick) * &n).normalize();
    let e2 = DVector::from_vec(vec![
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ]);
    vec![e1, e2]
}

/// Surface divergence of the tangential part of `R` on the sphere of
/// radius `ρ`, by central differences along great circles.
pub fn tangential_divergence(field: &PerturbationField, radius: f64, x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    let nrm = |y: &DVector<f64>| y.normalize();
    let tangential = |y: &DVector<f64>| {
        let r = field.value(y.as_slice());
        let n = nrm(y);
        &r - r.dot(&n) * n
    };
    let h = 1e-4 * radius;
    let mut div = 0.0;
    for e in tangent_frame(&xv) {
        let along = |t: f64| (t / radius).cos() * &xv + radius * (t / radius).sin() * &e;
        let d = (tangential(&along(h)) - tangential(&along(-h))) / (2.0 * h);
        div += e.dot(&d);
    }
    div
}

/// `div R − (n̄, DR n̄) − (div_g R_T + H (R, n̄))` with `H = (N−1)/ρ`, the
/// sum of the principal curvatures.
pub fn tangential_identity_gap(field: &PerturbationField, radius: f64, x: &[f64]) -> f64 {
    let n: Vec<f64> = x.iter().map(|c| c / radius).collect();
    let lhs = f_unchecked(&n, x, field);
    let r = field.value(x);
    let rn: f64 = r.iter().zip(&n).map(|(a, b)| a * b).sum();
    let h = (x.len() as f64 - 1.0) / radius;
    lhs - (tangential_divergence(field, radius, x) + h * rn)
}

/// Measure of the sphere of radius `ρ` in ℝ^N, for reference.
pub fn sphere_measure(dim: usize, radius: f64) -> f64 {
    unit_sphere_measure(dim) * radius.powi(dim as i32 - 1)
}
