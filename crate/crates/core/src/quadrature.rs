//! Gauss–Legendre rules and a dyadic adaptive driver.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::par;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Composite rule on `[a, b]` split into `panels` equal pieces.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let c = lo + 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(c + 0.5 * h * x);
            }
            acc += 0.5 * h * s;
        }
        acc
    }

    /// Panel-parallel variant of [`integrate`](Self::integrate).
    pub fn integrate_par<F>(&self, a: f64, b: f64, panels: usize, f: F) -> f64
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let h = (b - a) / panels as f64;
        par::sum(panels, |k| {
            let c = a + h * (k as f64 + 0.5);
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(c + 0.5 * h * x);
            }
            0.5 * h * s
        })
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// |difference| between the last two refinement levels.
    pub error: f64,
    pub panels: usize,
}

/// Composite 10-point rule with dyadic panel doubling until two successive
/// levels agree to `rel_tol` (relative, with `abs_floor` as absolute floor).
pub fn adaptive<F>(a: f64, b: f64, rel_tol: f64, abs_floor: f64, f: F) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let rule = GaussLegendre::new(10);
    let mut panels = 1usize;
    let mut prev = rule.integrate_par(a, b, panels, &f);
    for _ in 0..16 {
        panels *= 2;
        let cur = rule.integrate_par(a, b, panels, &f);
        let err = (cur - prev).abs();
        if err <= rel_tol * cur.abs() || err <= abs_floor {
            return Ok(Estimate {
                value: cur,
                error: err,
                panels,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        estimate: prev,
        error: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nodes_are_symmetric_and_weights_sum_to_two() {
        for n in [1, 2, 5, 10, 16] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-14);
            for i in 0..n {
                assert_relative_eq!(r.nodes[i], -r.nodes[n - 1 - i], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_polynomials_of_degree_2n_minus_1() {
        let r = GaussLegendre::new(5);
        let v = r.integrate(0.0, 2.0, 1, |x| x.powi(9));
        assert_relative_eq!(v, 2f64.powi(10) / 10.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_smooth_integrand() {
        let e = adaptive(0.0, PI, 1e-12, 0.0, f64::sin).unwrap();
        assert_relative_eq!(e.value, 2.0, max_relative = 1e-12);
    }
}
