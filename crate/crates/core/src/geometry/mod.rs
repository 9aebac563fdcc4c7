//! Computational domains, boundary curves and 2-D triangulations.

mod curve;
mod domain;
mod mesh;
mod mesher;

pub use curve::Curve;
pub use domain::{good_point_test, BoundaryPatch, Domain};
pub use mesh::TriMesh;
pub use mesher::triangulate;

/// A point or vector of the plane.
pub type P2 = [f64; 2];

#[inline]
pub fn add(a: P2, b: P2) -> P2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: P2, s: f64) -> P2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of `a × b`.
#[inline]
pub fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: P2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: P2, b: P2) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn lerp(a: P2, b: P2, t: f64) -> P2 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Left normal (rotation by +90°).
#[inline]
pub fn perp(a: P2) -> P2 {
    [-a[1], a[0]]
}

/// Twice the signed area of a closed polygon (positive when counterclockwise).
pub fn shoelace2(poly: &[P2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum()
}

/// Volume of the Euclidean unit ball of ℝⁿ (`n = 0` gives 1).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `H^{n-1}` measure of the unit sphere of ℝⁿ. For `n = 1` this is the
/// counting measure of `{-1, 1}`, i.e. 2.
pub fn unit_sphere_measure(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_constants() {
        assert_relative_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), PI, epsilon = 1e-15);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-15);
        assert_relative_eq!(unit_sphere_measure(1), 2.0);
        assert_relative_eq!(unit_sphere_measure(2), 2.0 * PI, epsilon = 1e-15);
        assert_relative_eq!(unit_sphere_measure(3), 4.0 * PI, epsilon = 1e-14);
    }
}
