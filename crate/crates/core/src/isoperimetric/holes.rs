use std::f64::consts::PI;

use super::region::{geometric_quotient, SubsetRegion};
use crate::error::{Error, Result};
use crate::geometry::{cross, dist, dot, norm, perp, sub, Domain, P2};

/// Upper bound for `λ₁(α)` from a curvature layer at a good point.
///
/// The layer `{x ∈ Ω : (x₀ − x)·n ≤ ε²/2}` with `ε = r/2` lies in
/// `B(x₀, r)`, so any hole of volume α placed in `Ω ∖ B(x₀, r)` leaves it
/// admissible. Returns its exact quotient, which must be below 1.
pub fn hole_placement_bound(domain: &Domain, good_point: P2, r: f64, alpha: f64) -> Result<f64> {
    if domain.dim() != 2 {
        return Err(Error::Unsupported("hole placement is planar".into()));
    }
    if !(r > 0.0) || !(alpha >= 0.0) {
        return Err(Error::InvalidInput("need r > 0 and α ≥ 0".into()));
    }
    let kappa = match domain.curvature(&good_point) {
        Ok(k) => k[0],
        Err(Error::CornerCurvature(i)) => vertex_curvature(domain, i),
        Err(e) => return Err(e),
    };
    if !(kappa > 1.0) {
        return Err(Error::NotGoodPoint(format!("curvature sum {kappa} does not exceed 1")));
    }
    let (vol, _) = domain.measures()?;
    if vol - PI * r * r < alpha {
        return Err(Error::Infeasible(format!(
            "|Ω| − |B(x, r)| = {} leaves no room for a hole of volume {alpha}",
            vol - PI * r * r
        )));
    }
    let n = outward_normal(domain, good_point)?;
    let eps = 0.5 * r;
    let layer = SubsetRegion::cap(domain, n, dot(good_point, n) - 0.5 * eps * eps)?;
    let reach = layer
        .outline(1e-3)
        .iter()
        .flatten()
        .map(|&p| dist(p, good_point))
        .fold(0.0, f64::max);
    if reach > r * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "layer reaches {reach} from the good point, beyond r = {r}"
        )));
    }
    let q = geometric_quotient(&layer, domain)?;
    if !(q < 1.0) {
        return Err(Error::Infeasible(format!("layer quotient {q} is not below 1")));
    }
    Ok(q)
}

/// Curvature of the circle through a polygon vertex and its neighbours,
/// positive at convex corners.
fn vertex_curvature(domain: &Domain, i: usize) -> f64 {
    let v = domain.polygon_vertices().unwrap();
    let n = v.len();
    let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    2.0 * cross(sub(b, a), sub(c, b)) / (dist(a, b) * dist(b, c) * dist(a, c))
}

fn outward_normal(domain: &Domain, x: P2) -> Result<P2> {
    let unit = |p: P2| {
        let l = norm(p);
        [p[0] / l, p[1] / l]
    };
    match *domain {
        Domain::Ball { .. } => Ok(unit(x)),
        Domain::Annulus { inner, outer, .. } => {
            let r = norm(x);
            Ok(if (r - outer).abs() <= (r - inner).abs() {
                unit(x)
            } else {
                unit([-x[0], -x[1]])
            })
        }
        _ => {
            let v = domain.polygon_vertices().unwrap();
            let n = v.len();
            let tol = 1e-9 * domain.diameter();
            let edge_normal = |i: usize| {
                let e = sub(v[(i + 1) % n], v[i]);
                let p = perp(e);
                unit([-p[0], -p[1]])
            };
            if let Some(i) = v.iter().position(|q| dist(*q, x) <= tol) {
                let (a, b) = (edge_normal((i + n - 1) % n), edge_normal(i));
                return Ok(unit([a[0] + b[0], a[1] + b[1]]));
            }
            Err(Error::NotGoodPoint("flat boundary point".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_is_not_a_good_point() {
        let d = Domain::disk(1.0).unwrap();
        assert!(matches!(
            hole_placement_bound(&d, [1.0, 0.0], 0.2, 0.1),
            Err(Error::NotGoodPoint(_))
        ));
    }

    #[test]
    fn small_disk_bound_below_one() {
        let d = Domain::disk(0.5).unwrap();
        let alpha = 0.1 * PI * 0.25;
        let q = hole_placement_bound(&d, [0.5, 0.0], 0.2, alpha).unwrap();
        // Circular segment of half-angle θ: (2R sin θ + R²(θ − sin θ cos θ)) / 2Rθ.
        let th = (1.0f64 - 0.005 / 0.5).acos();
        let exact = (th.sin() + 0.25 * (th - th.sin() * th.cos())) / th;
        assert!((q - exact).abs() < 1e-12, "{q} vs {exact}");
        assert!(q < 1.0);
    }

    #[test]
    fn polygon_vertex_with_curvature_three() {
        let n = 96;
        let verts: Vec<P2> = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                [t.cos() / 3.0, t.sin() / 3.0]
            })
            .collect();
        let d = Domain::polygon(verts.clone()).unwrap();
        assert!((vertex_curvature(&d, 0) - 3.0).abs() < 1e-3);
        let q = hole_placement_bound(&d, verts[0], 0.1, 0.01).unwrap();
        assert!(q < 1.0);
    }

    #[test]
    fn oversized_hole_is_infeasible() {
        let d = Domain::disk(0.5).unwrap();
        assert!(matches!(
            hole_placement_bound(&d, [0.5, 0.0], 0.2, 0.7),
            Err(Error::Infeasible(_))
        ));
    }
}
