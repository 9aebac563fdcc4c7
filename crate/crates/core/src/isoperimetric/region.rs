use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, Curve, Domain, TriMesh, P2};

/// Where a boundary piece of `A` lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    /// `∂A ∩ Ω`.
    Interior,
    /// `A ∩ ∂Ω`.
    Trace,
}

/// An oriented boundary piece of a region, with the region on its left.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub curve: Curve,
    pub part: Part,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    Polygon { vertices: Vec<P2> },
    Cells { cells: Vec<usize> },
    /// Bounded by arcs and segments, e.g. caps of a disk.
    Curves,
}

/// A subset `A ⊆ Ω̄` with classified boundary and cached measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetRegion {
    representation: Representation,
    pieces: Vec<Piece>,
    area: f64,
    interior_length: f64,
    trace_length: f64,
}

/// Relative tolerance (times diam Ω) for "lies on ∂Ω".
pub const ON_BOUNDARY_TOL: f64 = 1e-9;

impl SubsetRegion {
    /// Builds a region from its oriented boundary pieces.
    pub fn from_pieces(representation: Representation, pieces: Vec<Piece>) -> Result<Self> {
        let area: f64 = pieces.iter().map(|p| p.curve.green_area()).sum();
        if !(area > 0.0) {
            return Err(Error::InvalidInput(format!(
                "region has non-positive area {area:e}; boundary must be counterclockwise"
            )));
        }
        let length = |part| -> f64 {
            pieces
                .iter()
                .filter(|p| p.part == part)
                .map(|p| p.curve.length())
                .sum()
        };
        Ok(Self {
            representation,
            interior_length: length(Part::Interior),
            trace_length: length(Part::Trace),
            pieces,
            area,
        })
    }

    /// `A = Ω̄`.
    pub fn whole(domain: &Domain) -> Result<Self> {
        let pieces = domain
            .boundary_curves()?
            .into_iter()
            .map(|curve| Piece { curve, part: Part::Trace })
            .collect();
        let repr = match domain.polygon_vertices() {
            Some(vertices) => Representation::Polygon { vertices },
            None => Representation::Curves,
        };
        Self::from_pieces(repr, pieces)
    }

    /// A counterclockwise polygon inside `Ω̄`; each edge is a trace edge when
    /// its endpoints and midpoint lie on ∂Ω.
    pub fn polygon(vertices: Vec<P2>, domain: &Domain) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidInput("polygon needs three vertices".into()));
        }
        let tol = ON_BOUNDARY_TOL * domain.diameter();
        for &v in &vertices {
            if !domain.contains(v) && domain.boundary_distance(v) > tol {
                return Err(Error::InvalidInput(format!("vertex {v:?} outside the domain")));
            }
        }
        let on = |p: P2| domain.boundary_distance(p) <= tol;
        let pieces = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let mid = crate::geometry::lerp(a, b, 0.5);
                let part = if on(a) && on(b) && on(mid) {
                    Part::Trace
                } else {
                    Part::Interior
                };
                Piece { curve: Curve::Segment { a, b }, part }
            })
            .collect();
        Self::from_pieces(Representation::Polygon { vertices }, pieces)
    }

    /// Union of mesh triangles. Edges on the mesh boundary are trace edges.
    pub fn from_cells(mesh: &TriMesh, cells: &[usize]) -> Result<Self> {
        let mut inside = vec![false; mesh.num_triangles()];
        for &c in cells {
            if c >= inside.len() {
                return Err(Error::InvalidInput(format!("cell {c} out of range")));
            }
            inside[c] = true;
        }
        let mut sorted: Vec<usize> = (0..inside.len()).filter(|&t| inside[t]).collect();
        sorted.dedup();
        let mut pieces = Vec::new();
        for &t in &sorted {
            let tri = mesh.triangles()[t];
            let nb = mesh.neighbors(t);
            for k in 0..3 {
                let part = match nb[k] {
                    None => Part::Trace,
                    Some(o) if !inside[o] => Part::Interior,
                    Some(_) => continue,
                };
                let a = mesh.vertices()[tri[k]];
                let b = mesh.vertices()[tri[(k + 1) % 3]];
                pieces.push(Piece { curve: Curve::Segment { a, b }, part });
            }
        }
        let mut r = Self::from_pieces(Representation::Cells { cells: sorted.clone() }, pieces)?;
        // Triangle sums are more accurate than Green's formula for many cells.
        r.area = sorted.iter().map(|&t| mesh.area(t)).sum();
        Ok(r)
    }

    /// As [`from_cells`](Self::from_cells), but on disks and annuli each mesh
    /// boundary edge is replaced by the arc it cuts off, so the region is an
    /// exact subset of Ω rather than of the inscribed polygon.
    pub fn from_cells_in(domain: &Domain, mesh: &TriMesh, cells: &[usize]) -> Result<Self> {
        let mut r = Self::from_cells(mesh, cells)?;
        let mut extra = 0.0;
        for piece in r.pieces.iter_mut() {
            if piece.part != Part::Trace {
                continue;
            }
            if let Curve::Segment { a, b } = piece.curve {
                if let Some(arc) = boundary_arc(domain, a, b) {
                    extra += arc.green_area() - piece.curve.green_area();
                    piece.curve = arc;
                }
            }
        }
        r.area += extra;
        r.trace_length = r
            .pieces
            .iter()
            .filter(|p| p.part == Part::Trace)
            .map(|p| p.curve.length())
            .sum();
        Ok(r)
    }

    /// The cap `{x ∈ Ω̄ : x·d ≥ s}` of a planar domain, `d` a unit vector.
    pub fn cap(domain: &Domain, d: P2, s: f64) -> Result<Self> {
        let dn = norm(d);
        if !(dn > 0.0) {
            return Err(Error::InvalidInput("cap direction is zero".into()));
        }
        let d = [d[0] / dn, d[1] / dn];
        let tol = ON_BOUNDARY_TOL * domain.diameter();
        let on_line = |q: P2| (dot(q, d) - s).abs() <= tol;
        let mut pieces: Vec<Piece> = Vec::new();
        for c in domain.boundary_curves()? {
            if let Curve::Segment { a, b } = c {
                if on_line(a) && on_line(b) {
                    // Keep a boundary edge along the cut only when Ω lies on
                    // the cap side of it.
                    if dot(crate::geometry::perp(sub(b, a)), d) > 0.0 {
                        pieces.push(Piece { curve: c, part: Part::Trace });
                    }
                    continue;
                }
            }
            for curve in c.clip_halfplane(d, s) {
                if curve.length() > tol {
                    pieces.push(Piece { curve, part: Part::Trace });
                }
            }
        }
        if pieces.is_empty() {
            return Err(Error::NoBoundaryTrace);
        }
        // Chords along the cut line, walked with the cap on the left.
        let t = [d[1], -d[0]];
        let base = [d[0] * s, d[1] * s];
        let mut us: Vec<f64> = pieces
            .iter()
            .flat_map(|p| [p.curve.start_point(), p.curve.end_point()])
            .filter(|q| on_line(*q))
            .map(|q| dot(sub(q, base), t))
            .collect();
        us.sort_by(|a, b| a.partial_cmp(b).unwrap());
        us.dedup_by(|a, b| (*a - *b).abs() <= tol);
        let at = |u: f64| [base[0] + u * t[0], base[1] + u * t[1]];
        for w in us.windows(2) {
            let mid = at(0.5 * (w[0] + w[1]));
            if domain.contains_interior(mid, tol) {
                pieces.push(Piece {
                    curve: Curve::Segment { a: at(w[0]), b: at(w[1]) },
                    part: Part::Interior,
                });
            }
        }
        Self::from_pieces(Representation::Curves, pieces)
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `|A|`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// `|∂A ∩ Ω|`.
    pub fn interior_length(&self) -> f64 {
        self.interior_length
    }

    /// `|A ∩ ∂Ω|`.
    pub fn trace_length(&self) -> f64 {
        self.trace_length
    }

    pub fn cells(&self) -> Option<&[usize]> {
        match &self.representation {
            Representation::Cells { cells } => Some(cells),
            _ => None,
        }
    }

    /// Boundary of `A` as closed polylines, arcs sampled every `max_angle`.
    pub fn outline(&self, max_angle: f64) -> Vec<Vec<P2>> {
        let mut segs: Vec<Vec<P2>> = Vec::new();
        for p in &self.pieces {
            let n = match p.curve {
                Curve::Segment { .. } => 1,
                Curve::Arc { sweep, .. } => ((sweep.abs() / max_angle).ceil() as usize).max(1),
            };
            segs.push((0..=n).map(|k| p.curve.point(k as f64 / n as f64)).collect());
        }
        chain(segs)
    }

    /// Point membership by the crossing rule on the sampled outline.
    pub fn contains(&self, p: P2) -> bool {
        let mut inside = false;
        for poly in self.outline(0.01) {
            for w in poly.windows(2) {
                let (a, b) = (w[0], w[1]);
                if (a[1] > p[1]) != (b[1] > p[1]) {
                    let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    if x > p[0] {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    /// Image under `x ↦ Q(θ)x + shift`.
    pub fn rigid(&self, angle: f64, shift: P2) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        let f = |p: P2| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]];
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                curve: match p.curve {
                    Curve::Segment { a, b } => Curve::Segment { a: f(a), b: f(b) },
                    Curve::Arc { center, radius, start, sweep } => Curve::Arc {
                        center: f(center),
                        radius,
                        start: start + angle,
                        sweep,
                    },
                },
                part: p.part,
            })
            .collect();
        let representation = match &self.representation {
            Representation::Polygon { vertices } => Representation::Polygon {
                vertices: vertices.iter().map(|&v| f(v)).collect(),
            },
            _ => Representation::Curves,
        };
        Self {
            representation,
            pieces,
            ..self.clone()
        }
    }

    /// Image under `x ↦ t x`.
    pub fn scaled(&self, t: f64) -> Self {
        let f = |p: P2| [t * p[0], t * p[1]];
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                curve: match p.curve {
                    Curve::Segment { a, b } => Curve::Segment { a: f(a), b: f(b) },
                    Curve::Arc { center, radius, start, sweep } => Curve::Arc {
                        center: f(center),
                        radius: t * radius,
                        start,
                        sweep,
                    },
                },
                part: p.part,
            })
            .collect();
        let representation = match &self.representation {
            Representation::Polygon { vertices } => Representation::Polygon {
                vertices: vertices.iter().map(|&v| f(v)).collect(),
            },
            _ => Representation::Curves,
        };
        Self {
            representation,
            pieces,
            area: t * t * self.area,
            interior_length: t * self.interior_length,
            trace_length: t * self.trace_length,
        }
    }
}

/// The boundary arc of a disk or annulus between consecutive boundary
/// points `a → b`, if ∂Ω is circular there.
pub(crate) fn boundary_arc(domain: &Domain, a: P2, b: P2) -> Option<Curve> {
    let radii: Vec<f64> = match *domain {
        Domain::Ball { dim: 2, radius } => vec![radius],
        Domain::Annulus { dim: 2, inner, outer } => vec![outer, inner],
        _ => return None,
    };
    let (ra, rb) = (norm(a), norm(b));
    let radius = radii
        .into_iter()
        .find(|&r| (ra - r).abs() <= 1e-9 * r && (rb - r).abs() <= 1e-9 * r)?;
    let ta = a[1].atan2(a[0]);
    let tb = b[1].atan2(b[0]);
    let mut sweep = tb - ta;
    let pi = std::f64::consts::PI;
    if sweep > pi {
        sweep -= 2.0 * pi;
    } else if sweep <= -pi {
        sweep += 2.0 * pi;
    }
    Some(Curve::Arc {
        center: [0.0, 0.0],
        radius,
        start: ta,
        sweep,
    })
}

/// Joins polyline pieces end to start into closed loops.
fn chain(mut segs: Vec<Vec<P2>>) -> Vec<Vec<P2>> {
    let close = |a: P2, b: P2| norm(sub(a, b)) <= 1e-9 * (1.0 + norm(a));
    let mut loops = Vec::new();
    while let Some(mut cur) = segs.pop() {
        loop {
            let end = *cur.last().unwrap();
            if cur.len() > 2 && close(end, cur[0]) {
                break;
            }
            match segs.iter().position(|s| close(s[0], end)) {
                Some(i) => {
                    let s = segs.swap_remove(i);
                    cur.extend_from_slice(&s[1..]);
                }
                None => break,
            }
        }
        loops.push(cur);
    }
    loops
}

/// `(|∂A ∩ Ω| + |A|) / |A ∩ ∂Ω|`.
pub fn geometric_quotient(a: &SubsetRegion, domain: &Domain) -> Result<f64> {
    let tol = 1e-6 * domain.diameter();
    for p in a.pieces() {
        for q in [p.curve.start_point(), p.curve.end_point()] {
            if !domain.contains(q) && domain.boundary_distance(q) > tol {
                return Err(Error::InvalidInput(format!("region leaves the domain at {q:?}")));
            }
        }
    }
    quotient_of(a.interior_length(), a.area(), a.trace_length())
}

pub(crate) fn quotient_of(interior: f64, area: f64, trace: f64) -> Result<f64> {
    if !(trace > 0.0) {
        return Err(Error::NoBoundaryTrace);
    }
    Ok((interior + area) / trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::triangulate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn whole_disk_quotient() {
        let d = Domain::disk(1.0).unwrap();
        let a = SubsetRegion::whole(&d).unwrap();
        assert_relative_eq!(geometric_quotient(&a, &d).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn whole_square_quotient() {
        let d = Domain::unit_square();
        let a = SubsetRegion::whole(&d).unwrap();
        assert_relative_eq!(geometric_quotient(&a, &d).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn appendage_rectangle_quotient() {
        let d = Domain::square_with_appendage(0.01, 0.5).unwrap();
        let a = SubsetRegion::polygon(
            vec![[1.0, 0.0], [1.5, 0.0], [1.5, 0.01], [1.0, 0.01]],
            &d,
        )
        .unwrap();
        assert_relative_eq!(a.interior_length(), 0.01, epsilon = 1e-15);
        assert_relative_eq!(a.trace_length(), 1.01, epsilon = 1e-14);
        assert_relative_eq!(geometric_quotient(&a, &d).unwrap(), 0.015 / 1.01, epsilon = 1e-15);
    }

    #[test]
    fn interior_polygon_has_no_trace() {
        let d = Domain::unit_square();
        let a = SubsetRegion::polygon(vec![[0.2, 0.2], [0.8, 0.2], [0.5, 0.7]], &d).unwrap();
        assert!(matches!(geometric_quotient(&a, &d), Err(Error::NoBoundaryTrace)));
    }

    #[test]
    fn half_disk_cap() {
        let d = Domain::disk(1.0).unwrap();
        let a = SubsetRegion::cap(&d, [1.0, 0.0], 0.0).unwrap();
        assert_relative_eq!(a.area(), PI / 2.0, epsilon = 1e-13);
        assert_relative_eq!(a.interior_length(), 2.0, epsilon = 1e-13);
        assert_relative_eq!(a.trace_length(), PI, epsilon = 1e-13);
    }

    #[test]
    fn annulus_cap_has_two_chords() {
        let d = Domain::annulus(2, 1.0, 2.0).unwrap();
        let a = SubsetRegion::cap(&d, [0.0, 1.0], 0.0).unwrap();
        assert_relative_eq!(a.area(), 1.5 * PI, epsilon = 1e-12);
        assert_relative_eq!(a.interior_length(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(a.trace_length(), 3.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn square_cap_is_polygonal() {
        let d = Domain::unit_square();
        let a = SubsetRegion::cap(&d, [1.0, 0.0], 0.75).unwrap();
        assert_relative_eq!(a.area(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(a.interior_length(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(a.trace_length(), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn cells_match_mesh_measures() {
        let d = Domain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let all: Vec<usize> = (0..m.num_triangles()).collect();
        let a = SubsetRegion::from_cells(&m, &all).unwrap();
        assert_eq!(a.interior_length(), 0.0);
        assert_relative_eq!(a.trace_length(), m.boundary_length(), epsilon = 1e-12);
        assert_relative_eq!(a.area(), m.total_area(), epsilon = 1e-12);
        assert!(a.contains([0.1, 0.2]));
        assert!(!a.contains([1.1, 0.0]));
    }

    #[test]
    fn exact_cells_recover_disk_and_annulus() {
        let d = Domain::disk(1.0).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let all: Vec<usize> = (0..m.num_triangles()).collect();
        let a = SubsetRegion::from_cells_in(&d, &m, &all).unwrap();
        assert_relative_eq!(a.area(), PI, epsilon = 1e-12);
        assert_relative_eq!(a.trace_length(), 2.0 * PI, epsilon = 1e-12);
        let d = Domain::annulus(2, 1.0, 2.0).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let all: Vec<usize> = (0..m.num_triangles()).collect();
        let a = SubsetRegion::from_cells_in(&d, &m, &all).unwrap();
        assert_relative_eq!(a.area(), 3.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(a.trace_length(), 6.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn cap_through_collinear_boundary_edge() {
        let d = Domain::square_with_appendage(0.01, 0.5).unwrap();
        let a = SubsetRegion::cap(&d, [1.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(a.area(), 0.005, epsilon = 1e-15);
        assert_relative_eq!(a.interior_length(), 0.01, epsilon = 1e-15);
        assert_relative_eq!(a.trace_length(), 1.01, epsilon = 1e-14);
    }

    #[test]
    fn cap_along_boundary_edge_is_whole_square() {
        let d = Domain::unit_square();
        let th = -std::f64::consts::FRAC_PI_2;
        let dir = [th.cos(), th.sin()];
        let a = SubsetRegion::cap(&d, dir, -1.0).unwrap();
        assert_relative_eq!(a.trace_length(), 4.0, epsilon = 1e-12);
        assert!(a.interior_length() < 1e-12);
    }

    #[test]
    fn rigid_motion_invariance() {
        let d = Domain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.5, 1.0], [0.0, 1.5]]).unwrap();
        let a = SubsetRegion::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]], &d).unwrap();
        let q0 = geometric_quotient(&a, &d).unwrap();
        let (th, sh) = (0.7f64, [3.0, -1.0]);
        let (c, s) = (th.cos(), th.sin());
        let d2 = d.map_polygon(|p| [c * p[0] - s * p[1] + sh[0], s * p[0] + c * p[1] + sh[1]]).unwrap();
        let q1 = geometric_quotient(&a.rigid(th, sh), &d2).unwrap();
        assert_relative_eq!(q0, q1, epsilon = 1e-12);
    }
}
