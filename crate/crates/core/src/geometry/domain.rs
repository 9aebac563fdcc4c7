use serde::{Deserialize, Serialize};

use super::{cross, dist, shoelace2, sub, unit_ball_volume, unit_sphere_measure, Curve, P2};
use crate::error::{Error, Result};

/// Local boundary graph `t = ρ(y)`, `ρ(y) = ½ Σ κᵢ yᵢ² (1 + O(|y|^a))`, in a
/// frame where the boundary point is the origin and the outward normal is
/// `(0, …, 0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPatch {
    /// Principal curvatures κ₁, …, κ_{N−1}.
    pub kappa: Vec<f64>,
    /// Remainder exponent `a`.
    pub exponent: f64,
    /// Patch radius.
    pub radius: f64,
}

impl BoundaryPatch {
    /// Exact paraboloid (zero remainder) with the given curvatures.
    pub fn paraboloid(kappa: Vec<f64>, radius: f64) -> Self {
        Self {
            kappa,
            exponent: f64::INFINITY,
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.kappa.len() + 1
    }

    /// Graph function of the pure paraboloid.
    pub fn rho(&self, y: &[f64]) -> f64 {
        0.5 * self.kappa.iter().zip(y).map(|(k, y)| k * y * y).sum::<f64>()
    }

    /// `|∇ρ(y)|²`.
    pub fn grad_rho_sq(&self, y: &[f64]) -> f64 {
        self.kappa.iter().zip(y).map(|(k, y)| (k * y).powi(2)).sum()
    }
}

/// True iff all curvatures are positive, their sum exceeds 1 and the
/// remainder exponent exceeds 2.
pub fn good_point_test(kappa: &[f64], exponent: f64) -> bool {
    !kappa.is_empty()
        && kappa.iter().all(|&k| k > 0.0)
        && kappa.iter().sum::<f64>() > 1.0
        && exponent > 2.0
}

/// A bounded region of ℝᴺ. Balls and annuli are centered at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { dim: usize, radius: f64 },
    Annulus { dim: usize, inner: f64, outer: f64 },
    /// Simple, counterclockwise polygon in ℝ².
    Polygon { vertices: Vec<P2> },
    /// `[0,1]² ∪ [1, 1+η] × [0, δ]`.
    SquareWithAppendage { delta: f64, eta: f64 },
    BoundaryPatch(BoundaryPatch),
}

impl Domain {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        let d = Domain::Ball { dim, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::ball(2, radius)
    }

    pub fn annulus(dim: usize, inner: f64, outer: f64) -> Result<Self> {
        let d = Domain::Annulus { dim, inner, outer };
        d.validate()?;
        Ok(d)
    }

    pub fn polygon(vertices: Vec<P2>) -> Result<Self> {
        let d = Domain::Polygon { vertices };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_square() -> Self {
        Domain::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        }
    }

    pub fn square_with_appendage(delta: f64, eta: f64) -> Result<Self> {
        let d = Domain::SquareWithAppendage { delta, eta };
        d.validate()?;
        Ok(d)
    }

    pub fn boundary_patch(patch: BoundaryPatch) -> Result<Self> {
        let d = Domain::BoundaryPatch(patch);
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDomain(m.to_string()));
        match self {
            Domain::Ball { dim, radius } => {
                if *dim < 2 {
                    return bad("dimension must be at least 2");
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("ball radius must be positive");
                }
            }
            Domain::Annulus { dim, inner, outer } => {
                if *dim < 2 {
                    return bad("dimension must be at least 2");
                }
                if !(inner.is_finite() && outer.is_finite() && 0.0 < *inner && inner < outer) {
                    return bad("annulus requires 0 < r < R");
                }
            }
            Domain::Polygon { .. } | Domain::SquareWithAppendage { .. } => {
                if let Domain::SquareWithAppendage { delta, eta } = self {
                    if !(*delta > 0.0 && *delta < 1.0 && *eta > 0.0 && eta.is_finite()) {
                        return bad("appendage requires 0 < δ < 1 and η > 0");
                    }
                }
                let v = self.polygon_vertices().expect("polygonal kind");
                if v.len() < 3 || v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return bad("polygon needs at least three finite vertices");
                }
                if shoelace2(&v) <= 0.0 {
                    return bad("polygon must be positively oriented");
                }
                if !is_simple(&v) {
                    return bad("polygon must be simple");
                }
            }
            Domain::BoundaryPatch(p) => {
                if p.kappa.is_empty() {
                    return bad("patch needs at least one curvature");
                }
                if p.kappa.iter().any(|k| !k.is_finite()) || !(p.radius > 0.0) {
                    return bad("patch curvatures must be finite and radius positive");
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { dim, .. } | Domain::Annulus { dim, .. } => *dim,
            Domain::Polygon { .. } | Domain::SquareWithAppendage { .. } => 2,
            Domain::BoundaryPatch(p) => p.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::Ball { .. } => "ball",
            Domain::Annulus { .. } => "annulus",
            Domain::Polygon { .. } => "polygon",
            Domain::SquareWithAppendage { .. } => "square_with_appendage",
            Domain::BoundaryPatch(_) => "boundary_patch",
        }
    }

    /// Vertex list for polygonal kinds.
    pub fn polygon_vertices(&self) -> Option<Vec<P2>> {
        match self {
            Domain::Polygon { vertices } => Some(vertices.clone()),
            &Domain::SquareWithAppendage { delta, eta } => Some(vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0 + eta, 0.0],
                [1.0 + eta, delta],
                [1.0, delta],
                [1.0, 1.0],
                [0.0, 1.0],
            ]),
            _ => None,
        }
    }

    /// Interior segments the mesher must keep as edges.
    pub(crate) fn mesh_constraints(&self) -> Vec<(P2, P2)> {
        match *self {
            Domain::SquareWithAppendage { delta, .. } => vec![([1.0, 0.0], [1.0, delta])],
            _ => vec![],
        }
    }

    /// `(|Ω|, H^{N−1}(∂Ω))`.
    pub fn measures(&self) -> Result<(f64, f64)> {
        self.validate()?;
        match *self {
            Domain::Ball { dim, radius } => Ok((
                unit_ball_volume(dim) * radius.powi(dim as i32),
                unit_sphere_measure(dim) * radius.powi(dim as i32 - 1),
            )),
            Domain::Annulus { dim, inner, outer } => {
                let n = dim as i32;
                Ok((
                    unit_ball_volume(dim) * (outer.powi(n) - inner.powi(n)),
                    unit_sphere_measure(dim) * (outer.powi(n - 1) + inner.powi(n - 1)),
                ))
            }
            Domain::SquareWithAppendage { delta, eta } => Ok((1.0 + eta * delta, 4.0 + 2.0 * eta)),
            Domain::Polygon { .. } => {
                let v = self.polygon_vertices().unwrap();
                let n = v.len();
                let per = (0..n).map(|i| dist(v[i], v[(i + 1) % n])).sum();
                Ok((0.5 * shoelace2(&v), per))
            }
            Domain::BoundaryPatch(_) => Err(Error::Unsupported(
                "measures of a boundary patch".to_string(),
            )),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Annulus { outer, .. } => 2.0 * outer,
            Domain::BoundaryPatch(p) => 2.0 * p.radius,
            _ => {
                let v = self.polygon_vertices().unwrap();
                let mut d: f64 = 0.0;
                for a in &v {
                    for b in &v {
                        d = d.max(dist(*a, *b));
                    }
                }
                d
            }
        }
    }

    /// Smallest length scale the mesher must resolve.
    pub(crate) fn feature_size(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Annulus { inner, outer, .. } => outer - inner,
            Domain::BoundaryPatch(p) => p.radius,
            _ => {
                let v = self.polygon_vertices().unwrap();
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for p in &v {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                0.5 * (hi[0] - lo[0]).min(hi[1] - lo[1])
            }
        }
    }

    /// Principal curvatures at a boundary point, positive where the boundary
    /// bulges outward.
    pub fn curvature(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, domain dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        let tol = 1e-9 * self.diameter();
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let n1 = self.dim() - 1;
        match *self {
            Domain::Ball { radius, .. } => {
                if (r - radius).abs() > tol {
                    return Err(off_boundary(x));
                }
                Ok(vec![1.0 / radius; n1])
            }
            Domain::Annulus { inner, outer, .. } => {
                if (r - outer).abs() <= tol {
                    Ok(vec![1.0 / outer; n1])
                } else if (r - inner).abs() <= tol {
                    Ok(vec![-1.0 / inner; n1])
                } else {
                    Err(off_boundary(x))
                }
            }
            Domain::BoundaryPatch(ref p) => {
                if r > tol {
                    return Err(Error::InvalidInput(
                        "patch curvature is only known at the origin".to_string(),
                    ));
                }
                Ok(p.kappa.clone())
            }
            _ => {
                let v = self.polygon_vertices().unwrap();
                let p = [x[0], x[1]];
                if let Some(i) = v.iter().position(|q| dist(*q, p) <= tol) {
                    return Err(Error::CornerCurvature(i));
                }
                let n = v.len();
                let on_edge = (0..n).any(|i| {
                    Curve::Segment { a: v[i], b: v[(i + 1) % n] }.distance(p) <= tol
                });
                if on_edge {
                    Ok(vec![0.0])
                } else {
                    Err(off_boundary(x))
                }
            }
        }
    }

    /// Boundary of a planar domain as oriented curves with Ω on the left.
    pub fn boundary_curves(&self) -> Result<Vec<Curve>> {
        match *self {
            Domain::Ball { dim: 2, radius } => Ok(vec![Curve::circle([0.0, 0.0], radius, true)]),
            Domain::Annulus { dim: 2, inner, outer } => Ok(vec![
                Curve::circle([0.0, 0.0], outer, true),
                Curve::circle([0.0, 0.0], inner, false),
            ]),
            Domain::Polygon { .. } | Domain::SquareWithAppendage { .. } => {
                let v = self.polygon_vertices().unwrap();
                let n = v.len();
                Ok((0..n)
                    .map(|i| Curve::Segment { a: v[i], b: v[(i + 1) % n] })
                    .collect())
            }
            _ => Err(Error::Unsupported(format!(
                "planar boundary of {} in dimension {}",
                self.kind_name(),
                self.dim()
            ))),
        }
    }

    /// Distance from a planar point to ∂Ω.
    pub fn boundary_distance(&self, p: P2) -> f64 {
        match *self {
            Domain::Ball { radius, .. } => (super::norm(p) - radius).abs(),
            Domain::Annulus { inner, outer, .. } => {
                let r = super::norm(p);
                (r - outer).abs().min((r - inner).abs())
            }
            _ => self
                .boundary_curves()
                .map(|cs| cs.iter().map(|c| c.distance(p)).fold(f64::INFINITY, f64::min))
                .unwrap_or(f64::INFINITY),
        }
    }

    /// Closed-set membership for planar domains.
    pub fn contains(&self, p: P2) -> bool {
        let tol = 1e-12 * self.diameter();
        match *self {
            Domain::Ball { radius, .. } => super::norm(p) <= radius + tol,
            Domain::Annulus { inner, outer, .. } => {
                let r = super::norm(p);
                r >= inner - tol && r <= outer + tol
            }
            Domain::BoundaryPatch(_) => false,
            _ => {
                let v = self.polygon_vertices().unwrap();
                self.boundary_distance(p) <= tol || point_in_polygon(&v, p)
            }
        }
    }

    /// Open-set membership: inside and farther than `tol` from ∂Ω.
    pub fn contains_interior(&self, p: P2, tol: f64) -> bool {
        self.contains(p) && self.boundary_distance(p) > tol
    }

    /// Dilation `tΩ`.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput("dilation factor must be positive".into()));
        }
        let d = match self {
            &Domain::Ball { dim, radius } => Domain::Ball { dim, radius: t * radius },
            &Domain::Annulus { dim, inner, outer } => Domain::Annulus {
                dim,
                inner: t * inner,
                outer: t * outer,
            },
            Domain::BoundaryPatch(p) => Domain::BoundaryPatch(BoundaryPatch {
                kappa: p.kappa.iter().map(|k| k / t).collect(),
                exponent: p.exponent,
                radius: p.radius * t,
            }),
            _ => Domain::Polygon {
                vertices: self
                    .polygon_vertices()
                    .unwrap()
                    .into_iter()
                    .map(|p| [t * p[0], t * p[1]])
                    .collect(),
            },
        };
        Ok(d)
    }

    /// Image of a polygonal domain under a vertex map.
    pub fn map_polygon<F: Fn(P2) -> P2>(&self, f: F) -> Result<Self> {
        let v = self.polygon_vertices().ok_or_else(|| {
            Error::Unsupported(format!("vertex map on {}", self.kind_name()))
        })?;
        Domain::polygon(v.into_iter().map(f).collect())
    }
}

fn off_boundary(x: &[f64]) -> Error {
    Error::InvalidInput(format!("point {x:?} is not on the boundary"))
}

pub(crate) fn point_in_polygon(v: &[P2], p: P2) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x > p[0] {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_touch(a: P2, b: P2, c: P2, d: P2) -> bool {
    let o = |p: P2, q: P2, r: P2| cross(sub(q, p), sub(r, p));
    let on = |p: P2, q: P2, r: P2| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on(c, d, a)) || (d2 == 0.0 && on(c, d, b)) || (d3 == 0.0 && on(a, b, c)) || (d4 == 0.0 && on(a, b, d))
}

fn is_simple(v: &[P2]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if dist(a, b) == 0.0 {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (v[j], v[(j + 1) % n]);
            if adjacent {
                // Adjacent edges may only share their common vertex.
                let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let u = sub(other_a, shared);
                let w = sub(other_b, shared);
                if cross(u, w) == 0.0 && super::dot(u, w) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn unit_disk_measures() {
        let (v, b) = Domain::disk(1.0).unwrap().measures().unwrap();
        assert_relative_eq!(v, PI, epsilon = 1e-15);
        assert_relative_eq!(b, 2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn unit_square_measures() {
        assert_eq!(Domain::unit_square().measures().unwrap(), (1.0, 4.0));
    }

    #[test]
    fn appendage_measures_match_explicit_polygon() {
        let d = Domain::square_with_appendage(0.01, 0.5).unwrap();
        let (v, b) = d.measures().unwrap();
        assert_relative_eq!(v, 1.005, epsilon = 1e-15);
        assert_relative_eq!(b, 5.0, epsilon = 1e-15);
        // Oracle: generic polygon route on the explicit vertex list.
        let p = Domain::polygon(d.polygon_vertices().unwrap()).unwrap();
        let (pv, pb) = p.measures().unwrap();
        assert_relative_eq!(pv, v, epsilon = 1e-14);
        assert_relative_eq!(pb, b, epsilon = 1e-14);
    }

    #[test]
    fn annulus_measures_any_dimension() {
        let (v, b) = Domain::annulus(3, 1.0, 2.0).unwrap().measures().unwrap();
        assert_relative_eq!(v, 4.0 * PI / 3.0 * 7.0, epsilon = 1e-12);
        assert_relative_eq!(b, 4.0 * PI * 5.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(Domain::ball(1, 1.0).is_err());
        assert!(Domain::annulus(2, 2.0, 1.0).is_err());
        assert!(Domain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Domain::polygon(bowtie).is_err());
        let patch = BoundaryPatch::paraboloid(vec![1.0], 0.5);
        assert!(matches!(
            Domain::BoundaryPatch(patch).measures(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn curvature_examples() {
        let d = Domain::disk(2.0).unwrap();
        assert_eq!(d.curvature(&[0.0, 2.0]).unwrap(), vec![0.5]);
        let b = Domain::ball(3, 2.0).unwrap();
        assert_eq!(b.curvature(&[0.0, 0.0, -2.0]).unwrap(), vec![0.5, 0.5]);
        let s = Domain::unit_square();
        assert_eq!(s.curvature(&[0.5, 0.0]).unwrap(), vec![0.0]);
        assert!(matches!(s.curvature(&[1.0, 1.0]), Err(Error::CornerCurvature(2))));
        assert!(s.curvature(&[0.5, 0.5]).is_err());
        let a = Domain::annulus(2, 0.5, 1.0).unwrap();
        assert_eq!(a.curvature(&[0.5, 0.0]).unwrap(), vec![-2.0]);
    }

    #[test]
    fn good_point_examples() {
        assert!(good_point_test(&[2.0], 3.0));
        assert!(!good_point_test(&[0.4, 0.4], 3.0));
        assert!(!good_point_test(&[2.0, -0.1], 3.0));
        assert!(!good_point_test(&[2.0], 2.0));
        assert!(!good_point_test(&[1.0], 3.0));
    }

    #[test]
    fn dilation_scaling() {
        for d in [Domain::disk(1.3).unwrap(), Domain::unit_square(), Domain::ball(3, 0.7).unwrap()] {
            let (v, b) = d.measures().unwrap();
            let n = d.dim() as i32;
            for t in [0.5, 2.0] {
                let (vt, bt) = d.dilate(t).unwrap().measures().unwrap();
                assert_relative_eq!(vt, v * t.powi(n), max_relative = 1e-14);
                assert_relative_eq!(bt, b * t.powi(n - 1), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn contains_and_distance() {
        let s = Domain::square_with_appendage(0.1, 0.5).unwrap();
        assert!(s.contains([1.2, 0.05]));
        assert!(!s.contains([1.2, 0.5]));
        assert_relative_eq!(s.boundary_distance([0.5, 0.5]), 0.5);
        assert!(!s.contains_interior([0.5, 0.0], 1e-9));
    }
}
