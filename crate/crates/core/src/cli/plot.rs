//! Deterministic SVG output on a fixed 800×800 canvas.

use std::fmt::Write;

use crate::geometry::{Curve, Domain, P2};
use crate::isoperimetric::SubsetRegion;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;
const ARC_STEP: f64 = std::f64::consts::PI / 90.0;

struct Frame {
    lo: P2,
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = P2>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        // Center the shorter side.
        let pad = [
            0.5 * (span - (hi[0] - lo[0])),
            0.5 * (span - (hi[1] - lo[1])),
        ];
        Frame { lo: [lo[0] - pad[0], lo[1] - pad[1]], scale }
    }

    fn map(&self, p: P2) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.lo[0]) * self.scale,
            SIZE - MARGIN - (p[1] - self.lo[1]) * self.scale,
        )
    }

    fn path(&self, loops: &[Vec<P2>]) -> String {
        let mut d = String::new();
        for l in loops {
            for (i, &p) in l.iter().enumerate() {
                let (x, y) = self.map(p);
                let _ = write!(d, "{}{x:.2} {y:.2} ", if i == 0 { "M" } else { "L" });
            }
            d.push_str("Z ");
        }
        d.trim_end().to_string()
    }
}

fn sample(curves: &[Curve]) -> Vec<Vec<P2>> {
    curves
        .iter()
        .map(|c| {
            let n = match *c {
                Curve::Segment { .. } => 1,
                Curve::Arc { sweep, .. } => ((sweep.abs() / ARC_STEP).ceil() as usize).max(1),
            };
            (0..=n).map(|k| c.point(k as f64 / n as f64)).collect()
        })
        .collect()
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n\
         <defs><pattern id=\"hatch\" width=\"8\" height=\"8\" patternUnits=\"userSpaceOnUse\" \
         patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"8\" stroke=\"#444\" \
         stroke-width=\"2\"/></pattern></defs>\n\
         <rect width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n",
        SIZE as u32
    )
}

/// Domain outline with an optional shaded region and a hatched hole.
/// `None` when the domain has no planar boundary.
pub fn domain_svg(
    domain: &Domain,
    region: Option<&SubsetRegion>,
    hole: Option<&SubsetRegion>,
) -> Option<String> {
    let boundary = sample(&domain.boundary_curves().ok()?);
    let frame = Frame::fit(boundary.iter().flatten().copied());
    let mut s = header();
    if let Some(r) = region {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"#7fa7d9\" fill-opacity=\"0.6\" fill-rule=\"evenodd\" stroke=\"#1f4e8c\" stroke-width=\"1.5\"/>",
            frame.path(&r.outline(ARC_STEP))
        );
    }
    if let Some(h) = hole {
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"url(#hatch)\" fill-rule=\"evenodd\" stroke=\"#444\" stroke-width=\"1\"/>",
            frame.path(&h.outline(ARC_STEP))
        );
    }
    for l in &boundary {
        let pts: Vec<String> = l
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>",
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// `λ_p` against `p` with the extrapolated value marked at `p = 1`.
pub fn sweep_svg(lambdas: &[(f64, f64)], extrapolated: f64) -> Option<String> {
    if lambdas.is_empty() {
        return None;
    }
    let mut pts: Vec<P2> = lambdas.iter().map(|&(p, l)| [p, l]).collect();
    pts.push([1.0, extrapolated]);
    // Independent axis scaling: fit p and λ separately.
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = [(hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12)];
    let inner = SIZE - 2.0 * MARGIN;
    let map = |p: P2| {
        (
            MARGIN + (p[0] - lo[0]) / span[0] * inner,
            SIZE - MARGIN - (p[1] - lo[1]) / span[1] * inner,
        )
    };
    let mut s = header();
    let (x0, y0) = map([lo[0], lo[1]]);
    let (x1, y1) = map([hi[0], hi[1]]);
    let _ = writeln!(
        s,
        "<path d=\"M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    let line: Vec<String> = lambdas
        .iter()
        .map(|&(p, l)| {
            let (x, y) = map([p, l]);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"2\"/>",
        line.join(" ")
    );
    for &(p, l) in lambdas {
        let (x, y) = map([p, l]);
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"#1f4e8c\"/>");
    }
    let (x, y) = map([1.0, extrapolated]);
    let _ = writeln!(
        s,
        "<path d=\"M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}\" stroke=\"#c0392b\" stroke-width=\"2\"/>",
        x - 6.0, y - 6.0, x + 6.0, y + 6.0, x - 6.0, y + 6.0, x + 6.0, y - 6.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\">λ₁ ≈ {extrapolated:.6}</text>",
        x + 10.0,
        y - 10.0
    );
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_with_region_is_repeatable() {
        let d = Domain::disk(1.0).unwrap();
        let a = SubsetRegion::cap(&d, [1.0, 0.0], 0.3).unwrap();
        let s1 = domain_svg(&d, Some(&a), None).unwrap();
        let s2 = domain_svg(&d, Some(&a), None).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.contains("width=\"800\""));
        assert!(s1.contains("<polyline") && s1.contains("fill-opacity"));
    }

    #[test]
    fn sweep_has_marker() {
        let s = sweep_svg(&[(2.0, 0.6), (1.5, 0.55), (1.1, 0.51)], 0.5).unwrap();
        assert!(s.contains("#c0392b"));
        assert!(sweep_svg(&[], 0.5).is_none());
    }
}
