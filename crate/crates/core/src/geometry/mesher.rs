//! Mesh generation.
//!
//! Disks and annuli get a structured mesh of concentric rings whose boundary
//! vertices lie exactly on the circles. Polygons go through a constrained
//! Delaunay refinement with a maximum triangle area of `√3/4 · h²`.

use std::f64::consts::{PI, TAU};

use spade::{
    handles::FixedVertexHandle, AngleLimit, ConstrainedDelaunayTriangulation, Point2,
    RefinementParameters, Triangulation,
};

use super::{dist, lerp, Domain, TriMesh, P2};
use crate::error::{Error, Result};

/// Triangulates a planar domain with target edge length `h`.
pub fn triangulate(domain: &Domain, h: f64) -> Result<TriMesh> {
    domain.validate()?;
    if domain.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "meshing in dimension {}",
            domain.dim()
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput("mesh size must be positive".into()));
    }
    let feature = domain.feature_size();
    if h > feature {
        return Err(Error::MeshTooCoarse { h, feature });
    }
    match *domain {
        Domain::Ball { radius, .. } => ring_mesh(0.0, radius, h),
        Domain::Annulus { inner, outer, .. } => ring_mesh(inner, outer, h),
        Domain::Polygon { .. } | Domain::SquareWithAppendage { .. } => {
            polygon_mesh(&domain.polygon_vertices().unwrap(), &domain.mesh_constraints(), h)
        }
        Domain::BoundaryPatch(_) => Err(Error::Unsupported("meshing a boundary patch".into())),
    }
}

/// Node count on a circle of radius `rho`: spacing at most `h` and chord
/// sagitta at most `h²/8`.
fn ring_nodes(rho: f64, h: f64) -> usize {
    let by_spacing = (TAU * rho / h).ceil();
    let cos_half = 1.0 - h * h / (8.0 * rho);
    let by_sagitta = if cos_half > -1.0 {
        (PI / cos_half.acos()).ceil()
    } else {
        3.0
    };
    (by_spacing.max(by_sagitta) as usize).max(6)
}

fn ring_mesh(inner: f64, outer: f64, h: f64) -> Result<TriMesh> {
    let layers = ((outer - inner) / (h * 3f64.sqrt() / 2.0)).ceil().max(1.0) as usize;
    let mut vertices: Vec<P2> = Vec::new();
    // (first vertex index, node count, angular offset) per ring
    let mut rings: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..=layers {
        let rho = if k == layers {
            outer
        } else {
            inner + (outer - inner) * k as f64 / layers as f64
        };
        if rho == 0.0 {
            rings.push((vertices.len(), 1, 0.0));
            vertices.push([0.0, 0.0]);
            continue;
        }
        let n = ring_nodes(rho, h);
        let offset = if k % 2 == 1 { PI / n as f64 } else { 0.0 };
        rings.push((vertices.len(), n, offset));
        for j in 0..n {
            let th = offset + TAU * j as f64 / n as f64;
            vertices.push([rho * th.cos(), rho * th.sin()]);
        }
    }

    let mut triangles = Vec::new();
    for w in rings.windows(2) {
        let (ia, na, oa) = w[0];
        let (ib, nb, ob) = w[1];
        if na == 1 {
            for j in 0..nb {
                triangles.push([ia, ib + j, ib + (j + 1) % nb]);
            }
            continue;
        }
        let angle_a = |i: usize| oa + TAU * i as f64 / na as f64;
        let angle_b = |j: usize| ob + TAU * j as f64 / nb as f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let advance_inner = if i == na {
                false
            } else if j == nb {
                true
            } else {
                angle_a(i + 1) < angle_b(j + 1)
            };
            if advance_inner {
                triangles.push([ia + i % na, ib + j % nb, ia + (i + 1) % na]);
                i += 1;
            } else {
                triangles.push([ia + i % na, ib + j % nb, ib + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    TriMesh::new(vertices, triangles, h)
}

fn polygon_mesh(poly: &[P2], extra: &[(P2, P2)], h: f64) -> Result<TriMesh> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let ins = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: P2| -> Result<FixedVertexHandle> {
        cdt.insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::InvalidMesh(format!("insertion failed: {e:?}")))
    };
    let chain = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, a: P2, b: P2| -> Result<()> {
        let n = (dist(a, b) / h).ceil().max(1.0) as usize;
        let mut prev = ins(cdt, a)?;
        for k in 1..=n {
            let p = if k == n { b } else { lerp(a, b, k as f64 / n as f64) };
            let cur = ins(cdt, p)?;
            if cdt.can_add_constraint(prev, cur) {
                cdt.add_constraint(prev, cur);
            } else {
                return Err(Error::InvalidMesh("constraint edges intersect".into()));
            }
            prev = cur;
        }
        Ok(())
    };
    let n = poly.len();
    for i in 0..n {
        chain(&mut cdt, poly[i], poly[(i + 1) % n])?;
    }
    for &(a, b) in extra {
        chain(&mut cdt, a, b)?;
    }

    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(extra.is_empty())
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(3f64.sqrt() / 4.0 * h * h)
        .with_max_additional_vertices(4_000_000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::InvalidMesh("Delaunay refinement did not complete".into()));
    }
    let excluded: std::collections::HashSet<_> = result.excluded_faces.into_iter().collect();

    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices();
        // Interior constraints break the parity flood fill, so faces are
        // also classified by centroid.
        let c = vs.iter().fold([0.0, 0.0], |acc, v| {
            let p = v.position();
            [acc[0] + p.x / 3.0, acc[1] + p.y / 3.0]
        });
        if !super::domain::point_in_polygon(poly, c) {
            continue;
        }
        let mut tri = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            let id = v.fix().index();
            if index[id] == usize::MAX {
                index[id] = vertices.len();
                let p = v.position();
                vertices.push([p.x, p.y]);
            }
            tri[k] = index[id];
        }
        let a = super::cross(
            super::sub(vertices[tri[1]], vertices[tri[0]]),
            super::sub(vertices[tri[2]], vertices[tri[0]]),
        );
        if a < 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    }
    TriMesh::new(vertices, triangles, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_square_boundary_is_exact() {
        let m = triangulate(&Domain::unit_square(), 0.1).unwrap();
        assert_relative_eq!(m.boundary_length(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(m.total_area(), 1.0, epsilon = 1e-12);
        assert_eq!(m.boundary_loops(), 1);
        let d = Domain::unit_square();
        for &[a, _] in m.boundary_edges() {
            assert!(d.boundary_distance(m.vertices()[a]) <= 1e-12);
        }
    }

    #[test]
    fn unit_disk_boundary_length_within_one_percent() {
        let m = triangulate(&Domain::disk(1.0).unwrap(), 0.05).unwrap();
        let l = m.boundary_length();
        assert!(l < TAU && l > 0.99 * TAU, "{l}");
        for &[a, _] in m.boundary_edges() {
            assert_relative_eq!(super::super::norm(m.vertices()[a]), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = triangulate(&Domain::annulus(2, 0.5, 1.0).unwrap(), 0.05).unwrap();
        assert_eq!(m.boundary_loops(), 2);
    }

    #[test]
    fn coarse_mesh_rejected() {
        assert!(matches!(
            triangulate(&Domain::disk(0.1).unwrap(), 0.5),
            Err(Error::MeshTooCoarse { .. })
        ));
        assert!(triangulate(&Domain::ball(3, 1.0).unwrap(), 0.1).is_err());
    }

    #[test]
    fn appendage_mesh_resolves_junction() {
        let d = Domain::square_with_appendage(0.01, 0.5).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        assert_relative_eq!(m.total_area(), 1.005, epsilon = 1e-12);
        assert_relative_eq!(m.boundary_length(), 5.0, epsilon = 1e-12);
        // Every triangle lies on one side of the junction x = 1, y ≤ δ.
        for t in 0..m.num_triangles() {
            let c = m.centroid(t);
            if c[0] > 1.0 {
                for &v in &m.triangles()[t] {
                    assert!(m.vertices()[v][0] >= 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn area_error_shrinks_quadratically_on_disk() {
        let d = Domain::disk(1.0).unwrap();
        let e1 = (PI - triangulate(&d, 0.1).unwrap().total_area()).abs();
        let e2 = (PI - triangulate(&d, 0.05).unwrap().total_area()).abs();
        assert!(e2 < 0.3 * e1, "{e1} {e2}");
    }
}
