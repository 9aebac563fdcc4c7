use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{add, cross, dot, norm, scale, sub, P2};

/// An oriented boundary piece: a straight segment or a circular arc.
///
/// Arcs run from angle `start` through `start + sweep`; a negative sweep is
/// clockwise. Curves are parametrized over `t ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Curve {
    Segment { a: P2, b: P2 },
    Arc { center: P2, radius: f64, start: f64, sweep: f64 },
}

impl Curve {
    pub fn circle(center: P2, radius: f64, ccw: bool) -> Self {
        Curve::Arc {
            center,
            radius,
            start: 0.0,
            sweep: if ccw { TAU } else { -TAU },
        }
    }

    pub fn point(&self, t: f64) -> P2 {
        match *self {
            Curve::Segment { a, b } => super::lerp(a, b, t),
            Curve::Arc { center, radius, start, sweep } => {
                let th = start + sweep * t;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }

    /// d/dt of [`point`](Self::point).
    pub fn velocity(&self, t: f64) -> P2 {
        match *self {
            Curve::Segment { a, b } => sub(b, a),
            Curve::Arc { radius, start, sweep, .. } => {
                let th = start + sweep * t;
                [-radius * sweep * th.sin(), radius * sweep * th.cos()]
            }
        }
    }

    pub fn start_point(&self) -> P2 {
        self.point(0.0)
    }

    pub fn end_point(&self) -> P2 {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            Curve::Segment { a, b } => norm(sub(b, a)),
            Curve::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// `½ ∫ (x dy − y dx)` along the curve; summing over a closed boundary
    /// gives the enclosed signed area.
    pub fn green_area(&self) -> f64 {
        match *self {
            Curve::Segment { a, b } => 0.5 * cross(a, b),
            Curve::Arc { center, radius, start, sweep } => {
                let (c0, s0) = (start.cos(), start.sin());
                let (c1, s1) = ((start + sweep).cos(), (start + sweep).sin());
                0.5 * (radius * radius * sweep
                    + radius * (center[0] * (s1 - s0) - center[1] * (c1 - c0)))
            }
        }
    }

    pub fn reversed(&self) -> Self {
        match *self {
            Curve::Segment { a, b } => Curve::Segment { a: b, b: a },
            Curve::Arc { center, radius, start, sweep } => Curve::Arc {
                center,
                radius,
                start: start + sweep,
                sweep: -sweep,
            },
        }
    }

    /// Euclidean distance from `p` to the curve.
    pub fn distance(&self, p: P2) -> f64 {
        match *self {
            Curve::Segment { a, b } => {
                let ab = sub(b, a);
                let l2 = dot(ab, ab);
                let t = if l2 > 0.0 {
                    (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                norm(sub(p, super::lerp(a, b, t)))
            }
            Curve::Arc { center, radius, .. } => {
                let v = sub(p, center);
                let th = v[1].atan2(v[0]);
                if self.contains_angle(th) {
                    (norm(v) - radius).abs()
                } else {
                    super::dist(p, self.start_point()).min(super::dist(p, self.end_point()))
                }
            }
        }
    }

    /// Pieces of the curve lying in the closed half-plane `{x : x·d ≥ s}`.
    pub fn clip_halfplane(&self, d: P2, s: f64) -> Vec<Curve> {
        match *self {
            Curve::Segment { a, b } => {
                let fa = dot(a, d) - s;
                let fb = dot(b, d) - s;
                match (fa >= 0.0, fb >= 0.0) {
                    (true, true) => vec![*self],
                    (false, false) => vec![],
                    _ => {
                        let t = fa / (fa - fb);
                        let m = super::lerp(a, b, t);
                        if fa >= 0.0 {
                            nondegenerate(Curve::Segment { a, b: m })
                        } else {
                            nondegenerate(Curve::Segment { a: m, b })
                        }
                    }
                }
            }
            Curve::Arc { center, radius, start, sweep } => {
                // Angles θ with cos(θ − φ) ≥ k lie inside the half-plane.
                let dn = norm(d);
                let phi = d[1].atan2(d[0]);
                let k = (s - dot(center, d)) / (radius * dn);
                if k <= -1.0 {
                    return vec![*self];
                }
                if k >= 1.0 {
                    return vec![];
                }
                let beta = k.acos();
                let (lo, hi) = if sweep >= 0.0 {
                    (start, start + sweep)
                } else {
                    (start + sweep, start)
                };
                let mut out = Vec::new();
                let m0 = ((lo - (phi + beta)) / TAU).floor() as i64;
                let m1 = ((hi - (phi - beta)) / TAU).ceil() as i64;
                for m in m0..=m1 {
                    let c = phi + TAU * m as f64;
                    let a = (c - beta).max(lo);
                    let b = (c + beta).min(hi);
                    if b > a + 1e-15 {
                        out.push((a, b));
                    }
                }
                let mut arcs: Vec<Curve> = out
                    .into_iter()
                    .map(|(a, b)| Curve::Arc {
                        center,
                        radius,
                        start: a,
                        sweep: b - a,
                    })
                    .collect();
                if sweep < 0.0 {
                    arcs.reverse();
                    arcs.iter_mut().for_each(|c| *c = c.reversed());
                }
                arcs
            }
        }
    }

    /// Parameters `u` with `p0 + u·dir` on the curve. Collinear overlaps
    /// report both overlap endpoints.
    pub fn line_params(&self, p0: P2, dir: P2) -> Vec<f64> {
        match *self {
            Curve::Segment { a, b } => {
                let e = sub(b, a);
                let den = cross(dir, e);
                let w = sub(a, p0);
                let dd = dot(dir, dir);
                if den.abs() <= 1e-14 * norm(dir) * norm(e) {
                    if cross(w, dir).abs() <= 1e-12 * norm(dir) * (1.0 + norm(w)) {
                        return vec![dot(sub(a, p0), dir) / dd, dot(sub(b, p0), dir) / dd];
                    }
                    return vec![];
                }
                let u = cross(w, e) / den;
                let t = cross(w, dir) / den;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    vec![u]
                } else {
                    vec![]
                }
            }
            Curve::Arc { center, radius, .. } => {
                let w = sub(p0, center);
                let qa = dot(dir, dir);
                let qb = 2.0 * dot(w, dir);
                let qc = dot(w, w) - radius * radius;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    return vec![];
                }
                let sq = disc.sqrt();
                let mut out = Vec::new();
                for u in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
                    let q = sub(add(p0, scale(dir, u)), center);
                    if self.contains_angle(q[1].atan2(q[0])) {
                        out.push(u);
                    }
                }
                out
            }
        }
    }

    fn contains_angle(&self, th: f64) -> bool {
        match *self {
            Curve::Segment { .. } => false,
            Curve::Arc { start, sweep, .. } => {
                if sweep.abs() >= TAU - 1e-15 {
                    return true;
                }
                let (lo, width) = if sweep >= 0.0 {
                    (start, sweep)
                } else {
                    (start + sweep, -sweep)
                };
                let rel = (th - lo).rem_euclid(TAU);
                rel <= width + 1e-12 || rel >= TAU - 1e-12
            }
        }
    }

    /// Splits a full circle or long arc into pieces of sweep at most `max_sweep`.
    pub fn split_arc(&self, max_sweep: f64) -> Vec<Curve> {
        match *self {
            Curve::Segment { .. } => vec![*self],
            Curve::Arc { center, radius, start, sweep } => {
                let n = ((sweep.abs() / max_sweep).ceil() as usize).max(1);
                (0..n)
                    .map(|k| Curve::Arc {
                        center,
                        radius,
                        start: start + sweep * k as f64 / n as f64,
                        sweep: sweep / n as f64,
                    })
                    .collect()
            }
        }
    }
}

fn nondegenerate(c: Curve) -> Vec<Curve> {
    if c.length() > 0.0 {
        vec![c]
    } else {
        vec![]
    }
}
