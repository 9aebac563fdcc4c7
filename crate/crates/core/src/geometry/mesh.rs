use std::collections::HashMap;
use std::fmt::Write as _;

use super::{cross, dist, sub, P2};
use crate::error::{Error, Result};

/// Triangulation of a planar domain.
///
/// Triangles are counterclockwise. Boundary edges are oriented with the
/// domain on their left, so the outward normal is the right-hand normal.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<P2>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_normals: Vec<P2>,
    h: f64,
    /// Neighbor across local edge `k = (t[k], t[k+1])`.
    neighbors: Vec<[Option<usize>; 3]>,
    /// Boundary edge index for local edge `k`, if on ∂Ω.
    edge_boundary: Vec<[Option<usize>; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
    boundary_loops: usize,
}

impl TriMesh {
    pub fn new(vertices: Vec<P2>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self> {
        let nv = vertices.len();
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {i} references a missing vertex")));
            }
            let a = signed_area(&vertices, t);
            if !(a > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {i} has signed area {a:e}")));
            }
        }

        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if edges.insert((a, b), (ti, k)).is_some() {
                    return Err(Error::InvalidMesh(format!("directed edge ({a},{b}) repeated")));
                }
            }
        }
        let mut neighbors = vec![[None; 3]; triangles.len()];
        let mut edge_boundary = vec![[None; 3]; triangles.len()];
        let mut boundary_edges = Vec::new();
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                match edges.get(&(b, a)) {
                    Some(&(tj, _)) => neighbors[ti][k] = Some(tj),
                    None => {
                        edge_boundary[ti][k] = Some(boundary_edges.len());
                        boundary_edges.push([a, b]);
                    }
                }
            }
        }
        let boundary_normals = boundary_edges
            .iter()
            .map(|&[a, b]| {
                let e = sub(vertices[b], vertices[a]);
                let l = super::norm(e);
                [e[1] / l, -e[0] / l]
            })
            .collect();

        let mut vertex_triangles = vec![Vec::new(); nv];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_triangles[v].push(ti);
            }
        }

        let boundary_loops = count_loops(nv, &boundary_edges)?;
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            boundary_normals,
            h,
            neighbors,
            edge_boundary,
            vertex_triangles,
            boundary_loops,
        })
    }

    pub fn vertices(&self) -> &[P2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Outward unit normal of each boundary edge.
    pub fn boundary_normals(&self) -> &[P2] {
        &self.boundary_normals
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn neighbors(&self, t: usize) -> [Option<usize>; 3] {
        self.neighbors[t]
    }

    pub fn edge_boundary(&self, t: usize) -> [Option<usize>; 3] {
        self.edge_boundary[t]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn boundary_loops(&self) -> usize {
        self.boundary_loops
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        crate::par::sum(self.triangles.len(), |t| self.area(t))
    }

    pub fn centroid(&self, t: usize) -> P2 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_length(&self, t: usize, k: usize) -> f64 {
        let tri = self.triangles[t];
        dist(self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]])
    }

    pub fn boundary_edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary_edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn boundary_length(&self) -> f64 {
        (0..self.boundary_edges.len()).map(|e| self.boundary_edge_length(e)).sum()
    }

    pub fn max_triangle_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).fold(0.0, f64::max)
    }

    /// Marks vertices lying on ∂Ω.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.vertices.len()];
        for &[a, b] in &self.boundary_edges {
            m[a] = true;
            m[b] = true;
        }
        m
    }

    /// Plain-text export: counts followed by `x y`, `i j k` and `i j` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", self.vertices.len()).unwrap();
        for p in &self.vertices {
            writeln!(s, "{:e} {:e}", p[0], p[1]).unwrap();
        }
        writeln!(s, "{}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "{}", self.boundary_edges.len()).unwrap();
        for e in &self.boundary_edges {
            writeln!(s, "{} {}", e[0], e[1]).unwrap();
        }
        s
    }

    /// Parses [`to_text`](Self::to_text) output. Boundary edges are
    /// recomputed and must agree with the listed ones.
    pub fn from_text(text: &str, h: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |m: &str| Error::InvalidMesh(m.to_string());
        let count = |lines: &mut dyn Iterator<Item = &str>| -> Result<usize> {
            lines
                .next()
                .ok_or_else(|| bad("truncated file"))?
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("expected a count line"))
        };
        let nv = count(&mut lines)?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let f = parse_fields::<f64>(lines.next(), 2)?;
            vertices.push([f[0], f[1]]);
        }
        let nt = count(&mut lines)?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f = parse_fields::<usize>(lines.next(), 3)?;
            triangles.push([f[0], f[1], f[2]]);
        }
        let nb = count(&mut lines)?;
        let mut listed = Vec::with_capacity(nb);
        for _ in 0..nb {
            let f = parse_fields::<usize>(lines.next(), 2)?;
            listed.push([f[0], f[1]]);
        }
        let mesh = TriMesh::new(vertices, triangles, h)?;
        let mut a = listed.clone();
        let mut b = mesh.boundary_edges.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(bad("listed boundary edges disagree with the triangulation"));
        }
        Ok(mesh)
    }
}

fn parse_fields<T: std::str::FromStr>(line: Option<&str>, n: usize) -> Result<Vec<T>> {
    let line = line.ok_or_else(|| Error::InvalidMesh("truncated file".into()))?;
    let f: Vec<T> = line
        .split_whitespace()
        .map(|w| w.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidMesh(format!("malformed line `{line}`")))?;
    if f.len() != n {
        return Err(Error::InvalidMesh(format!("expected {n} fields in `{line}`")));
    }
    Ok(f)
}

fn signed_area(v: &[P2], t: &[usize; 3]) -> f64 {
    0.5 * cross(sub(v[t[1]], v[t[0]]), sub(v[t[2]], v[t[0]]))
}

fn count_loops(nv: usize, edges: &[[usize; 2]]) -> Result<usize> {
    let mut next = vec![usize::MAX; nv];
    let mut indeg = vec![0usize; nv];
    for &[a, b] in edges {
        if next[a] != usize::MAX {
            return Err(Error::InvalidMesh(format!("boundary vertex {a} is pinched")));
        }
        next[a] = b;
        indeg[b] += 1;
    }
    if edges.iter().any(|&[_, b]| indeg[b] != 1 || next[b] == usize::MAX) {
        return Err(Error::InvalidMesh("boundary edges do not form closed loops".into()));
    }
    let mut seen = vec![false; nv];
    let mut loops = 0;
    for &[a, _] in edges {
        if seen[a] {
            continue;
        }
        loops += 1;
        let mut v = a;
        while !seen[v] {
            seen[v] = true;
            v = next[v];
        }
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> TriMesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], 1.0).unwrap()
    }

    #[test]
    fn square_topology() {
        let m = two_triangles();
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.boundary_loops(), 1);
        assert_eq!(m.boundary_length(), 4.0);
        assert_eq!(m.total_area(), 1.0);
        assert_eq!(m.neighbors(0)[2], Some(1));
        // Outward normal of the bottom edge.
        let e = m.boundary_edges().iter().position(|&e| e == [0, 1]).unwrap();
        assert_eq!(m.boundary_normals()[e], [0.0, -1.0]);
    }

    #[test]
    fn rejects_clockwise_triangles() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(TriMesh::new(v, vec![[0, 2, 1]], 1.0).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let m = two_triangles();
        let back = TriMesh::from_text(&m.to_text(), 1.0).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert!(TriMesh::from_text("3\n0 0\n", 1.0).is_err());
    }
}
