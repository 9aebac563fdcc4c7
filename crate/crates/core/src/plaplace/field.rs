use std::sync::Arc;

use crate::geometry::{TriMesh, P2};
use crate::par;

/// Piecewise-linear field on a triangulation.
#[derive(Clone, Debug)]
pub struct FEField {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
    gradients: Vec<P2>,
}

impl FEField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> crate::Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(crate::Error::InvalidInput(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        let gradients = gradients(&mesh, &values);
        Ok(Self { mesh, values, gradients })
    }

    pub fn constant(mesh: Arc<TriMesh>, c: f64) -> Self {
        let values = vec![c; mesh.num_vertices()];
        Self::new(mesh, values).unwrap()
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Per-triangle constant gradient.
    pub fn gradients(&self) -> &[P2] {
        &self.gradients
    }

    /// Values at the endpoints of each boundary edge.
    pub fn trace(&self) -> Vec<[f64; 2]> {
        self.mesh
            .boundary_edges()
            .iter()
            .map(|e| [self.values[e[0]], self.values[e[1]]])
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            gradients: self.gradients.iter().map(|g| [c * g[0], c * g[1]]).collect(),
        }
    }
}

/// Gradients of the P1 hat functions on triangle `t`: `∇φ_k` for its three
/// vertices.
pub(crate) fn hat_gradients(mesh: &TriMesh, t: usize) -> [P2; 3] {
    let tri = mesh.triangles()[t];
    let v = mesh.vertices();
    let (a, b, c) = (v[tri[0]], v[tri[1]], v[tri[2]]);
    let two_area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let g = |p: P2, q: P2| [(p[1] - q[1]) / two_area, (q[0] - p[0]) / two_area];
    [g(b, c), g(c, a), g(a, b)]
}

pub(crate) fn gradients(mesh: &TriMesh, values: &[f64]) -> Vec<P2> {
    par::map(mesh.num_triangles(), |t| {
        let tri = mesh.triangles()[t];
        let h = hat_gradients(mesh, t);
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += values[tri[k]] * h[k][0];
            g[1] += values[tri[k]] * h[k][1];
        }
        g
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};
    use approx::assert_relative_eq;

    #[test]
    fn linear_fields_have_exact_gradients() {
        let m = Arc::new(triangulate(&Domain::unit_square(), 0.2).unwrap());
        let vals = m.vertices().iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0).collect();
        let f = FEField::new(m, vals).unwrap();
        for g in f.gradients() {
            assert_relative_eq!(g[0], 2.0, epsilon = 1e-10);
            assert_relative_eq!(g[1], -3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let m = Arc::new(triangulate(&Domain::unit_square(), 0.2).unwrap());
        assert!(FEField::new(m, vec![0.0; 3]).is_err());
    }
}
