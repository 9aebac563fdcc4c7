use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{gradients, hat_gradients, FEField};
use crate::error::{Error, Result};
use crate::geometry::{norm, TriMesh};
use crate::isoperimetric::SubsetRegion;
use crate::par;

/// Boundary integrals below this abort the solve.
pub const TRACE_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub p: f64,
    /// Gradient regularization; `None` uses `1e-6 · diam`.
    pub tau: Option<f64>,
    pub max_iterations: usize,
    /// Relative change of λ over `window` iterations that counts as converged.
    pub tolerance: f64,
    pub window: usize,
    /// L-BFGS memory.
    pub memory: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub seed: u64,
}

impl SolverParams {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            tau: None,
            max_iterations: 20_000,
            tolerance: 1e-12,
            window: 20,
            memory: 12,
            armijo: 1e-4,
            backtrack: 0.5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        if matches!(self.tau, Some(t) if !(t >= 0.0)) {
            return Err(Error::InvalidInput("τ must be non-negative".into()));
        }
        if self.max_iterations == 0 || self.window == 0 || self.memory == 0 {
            return Err(Error::InvalidInput("iteration counts must be positive".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0 && self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidInput("line search parameters must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plaplace,
    Isoperimetric,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_sigma: f64,
    pub euler_residual: f64,
    pub flux_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenResult {
    pub method: Method,
    pub p: f64,
    pub lambda: f64,
    #[serde(skip)]
    pub field: Option<FEField>,
    pub iterations: usize,
    /// λ after each accepted step.
    pub residuals: Vec<f64>,
    pub normalization_error: f64,
    pub diagnostics: Diagnostics,
}

/// Discrete `R_p` with lumped masses and a vertex mask of fixed zeros.
pub(crate) struct Quotient<'a> {
    mesh: &'a TriMesh,
    p: f64,
    tau: f64,
    mass: Vec<f64>,
    bmass: Vec<f64>,
    free: Vec<bool>,
}

impl<'a> Quotient<'a> {
    pub(crate) fn new(mesh: &'a TriMesh, p: f64, tau: f64, free: Vec<bool>) -> Self {
        let (mass, bmass) = lumped_masses(mesh);
        Self { mesh, p, tau, mass, bmass, free }
    }

    fn energy_density(&self, g: [f64; 2], tau: f64) -> f64 {
        (g[0] * g[0] + g[1] * g[1] + tau * tau).powf(0.5 * self.p)
    }

    /// `(∫|∇u|^p + |u|^p, ∫_∂|u|^p)` with regularization `tau`.
    pub(crate) fn parts(&self, u: &[f64], tau: f64) -> (f64, f64) {
        let m = self.mesh;
        let grads = gradients(m, u);
        let p = self.p;
        let grad = par::sum(m.num_triangles(), |t| m.area(t) * self.energy_density(grads[t], tau));
        let vol = par::sum(u.len(), |v| self.mass[v] * u[v].abs().powf(p));
        let bdry = par::sum(u.len(), |v| self.bmass[v] * u[v].abs().powf(p));
        (grad + vol, bdry)
    }

    /// `R_p(u)` and its gradient in the free variables.
    fn value_and_gradient(&self, u: &[f64]) -> (f64, f64, Vec<f64>) {
        let m = self.mesh;
        let p = self.p;
        let grads = gradients(m, u);
        let tau = self.tau;
        let per_tri: Vec<[f64; 3]> = par::map(m.num_triangles(), |t| {
            let g = grads[t];
            let s = (g[0] * g[0] + g[1] * g[1] + tau * tau).powf(0.5 * p - 1.0);
            let h = hat_gradients(m, t);
            let w = p * m.area(t) * s;
            [
                w * (g[0] * h[0][0] + g[1] * h[0][1]),
                w * (g[0] * h[1][0] + g[1] * h[1][1]),
                w * (g[0] * h[2][0] + g[1] * h[2][1]),
            ]
        });
        let (num, den) = self.parts(u, tau);
        let r = num / den;
        let grad = par::map(u.len(), |v| {
            if !self.free[v] {
                return 0.0;
            }
            let mut gn = 0.0;
            for &t in m.vertex_triangles(v) {
                let k = m.triangles()[t].iter().position(|&w| w == v).unwrap();
                gn += per_tri[t][k];
            }
            let a = u[v].abs().powf(p - 1.0) * u[v].signum() * p;
            gn += self.mass[v] * a;
            (gn - r * self.bmass[v] * a) / den
        });
        (r, den, grad)
    }
}

/// Lumped P1 masses: `m_v = Σ |T|/3` and `b_v = Σ |e|/2`.
pub(crate) fn lumped_masses(mesh: &TriMesh) -> (Vec<f64>, Vec<f64>) {
    let mut mass = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t) / 3.0;
        for &v in tri {
            mass[v] += a;
        }
    }
    let mut bmass = vec![0.0; mesh.num_vertices()];
    for (e, edge) in mesh.boundary_edges().iter().enumerate() {
        let l = 0.5 * mesh.boundary_edge_length(e);
        bmass[edge[0]] += l;
        bmass[edge[1]] += l;
    }
    (mass, bmass)
}

/// Unregularized discrete `R_p(u)`.
pub fn rayleigh_quotient(mesh: &TriMesh, u: &[f64], p: f64) -> Result<f64> {
    if u.len() != mesh.num_vertices() {
        return Err(Error::InvalidInput("field length does not match mesh".into()));
    }
    let q = Quotient::new(mesh, p, 0.0, vec![true; u.len()]);
    let (n, d) = q.parts(u, 0.0);
    if d < TRACE_FLOOR {
        return Err(Error::TraceCollapse(d));
    }
    Ok(n / d)
}

fn default_tau(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in v {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    1e-6 * norm([hi[0] - lo[0], hi[1] - lo[1]])
}

/// Vertices forced to zero by a hole: all vertices of the hole's triangles.
pub(crate) fn hole_mask(mesh: &TriMesh, hole: Option<&SubsetRegion>) -> Vec<bool> {
    let mut free = vec![true; mesh.num_vertices()];
    if let Some(h) = hole {
        let cells: Vec<usize> = match h.cells() {
            Some(c) => c.to_vec(),
            None => (0..mesh.num_triangles())
                .filter(|&t| h.contains(mesh.centroid(t)))
                .collect(),
        };
        for t in cells {
            for &v in &mesh.triangles()[t] {
                free[v] = false;
            }
        }
    }
    free
}

/// Minimizes `R_p` over nonnegative P1 fields vanishing on `hole`.
pub fn solve_lambda_p(
    mesh: &Arc<TriMesh>,
    params: &SolverParams,
    hole: Option<&SubsetRegion>,
) -> Result<EigenResult> {
    solve_from(mesh, params, hole, None)
}

/// As [`solve_lambda_p`], starting from `init` instead of a seeded random
/// positive field.
pub fn solve_from(
    mesh: &Arc<TriMesh>,
    params: &SolverParams,
    hole: Option<&SubsetRegion>,
    init: Option<&[f64]>,
) -> Result<EigenResult> {
    params.validate()?;
    let n = mesh.num_vertices();
    let free = hole_mask(mesh, hole);
    if let Some(h) = hole {
        if let Some(c) = h.cells() {
            if c.iter().any(|&t| t >= mesh.num_triangles()) {
                return Err(Error::InvalidInput("hole cell out of range".into()));
            }
        }
    }
    let tau = params.tau.unwrap_or_else(|| default_tau(mesh));
    let q = Quotient::new(mesh, params.p, tau, free.clone());

    let mut u: Vec<f64> = match init {
        Some(x) if x.len() == n => x.iter().map(|v| v.abs()).collect(),
        Some(_) => return Err(Error::InvalidInput("initial field length mismatch".into())),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            (0..n).map(|_| 1.0 + 0.1 * rng.gen::<f64>()).collect()
        }
    };
    for v in 0..n {
        if !free[v] {
            u[v] = 0.0;
        }
    }

    let (_, den0) = q.parts(&u, tau);
    if den0 < TRACE_FLOOR {
        return Err(Error::TraceCollapse(den0));
    }
    let c0 = den0.powf(-1.0 / params.p);
    u.iter_mut().for_each(|v| *v *= c0);
    let (mut r, _, mut g) = q.value_and_gradient(&u);

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut residuals = vec![r];
    let mut converged = false;
    let mut iterations = 0;
    let mut restarts = 0usize;
    while iterations < params.max_iterations {
        iterations += 1;
        let mut d = two_loop(&g, &history);
        let mut slope = dotv(&d, &g);
        if !(slope < 0.0) {
            history.clear();
            d = g.iter().map(|x| -x).collect();
            slope = dotv(&d, &g);
        }
        if slope == 0.0 {
            converged = true;
            break;
        }
        let mut alpha = if history.is_empty() {
            // First step moves u by about 1% of its size.
            0.01 * norm_v(&u) / norm_v(&d).max(f64::MIN_POSITIVE)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| (a + alpha * b).abs()).collect();
            let (num, dd) = q.parts(&trial, tau);
            if dd < TRACE_FLOOR {
                return Err(Error::TraceCollapse(dd));
            }
            let rt = num / dd;
            if rt <= r + params.armijo * alpha * slope {
                accepted = Some(trial);
                break;
            }
            alpha *= params.backtrack;
        }
        let Some(un) = accepted else {
            if history.is_empty() || restarts > 3 {
                converged = true;
                break;
            }
            restarts += 1;
            history.clear();
            continue;
        };
        let (rn, dn, mut gn) = q.value_and_gradient(&un);
        let s: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dotv(&s, &y);
        let mut un = un;
        if sy > 1e-300 {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        if !(0.25..=4.0).contains(&dn) {
            rescale(&mut un, &mut gn, dn, params.p, &mut history);
        }
        u = un;
        g = gn;
        r = rn;
        residuals.push(r);
        let w = params.window;
        if residuals.len() > w {
            let old = residuals[residuals.len() - 1 - w];
            if (old - r).abs() <= params.tolerance * r.abs() {
                converged = true;
                break;
            }
        }
    }

    let (_, den) = q.parts(&u, 0.0);
    let c = den.powf(-1.0 / params.p);
    u.iter_mut().for_each(|v| *v *= c);
    let (num, den) = q.parts(&u, 0.0);
    let field = FEField::new(mesh.clone(), u)?;
    let mut result = EigenResult {
        method: Method::Plaplace,
        p: params.p,
        lambda: num / den,
        field: None,
        iterations,
        residuals,
        normalization_error: (den - 1.0).abs(),
        diagnostics: Diagnostics::default(),
    };
    result.diagnostics = diagnostics_with_mask(&field, params.p, result.lambda, &free);
    result.field = Some(field);
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Normalizes `∫_∂ |u|^p = 1`; keeps the L-BFGS pairs consistent with the
/// 0-homogeneity of the quotient.
fn rescale(
    u: &mut [f64],
    g: &mut [f64],
    den: f64,
    p: f64,
    history: &mut VecDeque<(Vec<f64>, Vec<f64>, f64)>,
) {
    let c = den.powf(-1.0 / p);
    u.iter_mut().for_each(|v| *v *= c);
    g.iter_mut().for_each(|v| *v /= c);
    for (s, y, _) in history.iter_mut() {
        s.iter_mut().for_each(|v| *v *= c);
        y.iter_mut().for_each(|v| *v /= c);
    }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dotv(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dotv(s, y) / dotv(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dotv(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    par::sum(a.len(), |i| a[i] * b[i])
}

fn norm_v(a: &[f64]) -> f64 {
    dotv(a, a).sqrt()
}

/// Flux diagnostics of a normalized solution at parameter `p`:
/// `σ = |∇u|^{p−2}∇u` per triangle, its maximum modulus, the relative
/// Euler residual at interior vertices and the gap between the boundary
/// flux `∫_∂ u σ·n` and λ.
pub fn sigma_diagnostics(result: &EigenResult, p: f64) -> Diagnostics {
    match &result.field {
        Some(f) => {
            let free = vec![true; f.values().len()];
            diagnostics_with_mask(f, p, result.lambda, &free)
        }
        None => Diagnostics::default(),
    }
}

pub(crate) fn diagnostics_with_mask(field: &FEField, p: f64, lambda: f64, free: &[bool]) -> Diagnostics {
    let mesh = field.mesh();
    let u = field.values();
    let grads = field.gradients();
    // Gradients at round-off level would otherwise give |g|^{p−1} = O(1)
    // for p near 1.
    let umax = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let floor = 1e3 * f64::EPSILON * umax / mesh.h();
    let sigma: Vec<[f64; 2]> = grads
        .iter()
        .map(|g| {
            let m = norm(*g);
            if m <= floor {
                [0.0, 0.0]
            } else {
                let s = m.powf(p - 2.0);
                [s * g[0], s * g[1]]
            }
        })
        .collect();
    let max_sigma = par::max(sigma.len(), |t| norm(sigma[t])).max(0.0);
    let (mass, bmass) = lumped_masses(mesh);
    // Weak residual Σ_T |T| σ·∇φ_v + m_v u_v^{p−1}.
    let weak = par::map(u.len(), |v| {
        let mut acc = 0.0;
        for &t in mesh.vertex_triangles(v) {
            let k = mesh.triangles()[t].iter().position(|&w| w == v).unwrap();
            let h = hat_gradients(mesh, t)[k];
            acc += mesh.area(t) * (sigma[t][0] * h[0] + sigma[t][1] * h[1]);
        }
        let src = mass[v] * u[v].abs().powf(p - 1.0);
        (acc + src, src)
    });
    let euler_residual = par::max(u.len(), |v| {
        if bmass[v] > 0.0 || !free[v] || weak[v].1 <= 0.0 {
            f64::NEG_INFINITY
        } else {
            weak[v].0.abs() / weak[v].1
        }
    })
    .max(0.0);
    let flux = par::sum(u.len(), |v| if bmass[v] > 0.0 { u[v] * weak[v].0 } else { 0.0 });
    let flux_gap = if lambda > 0.0 { (flux - lambda).abs() / lambda } else { 0.0 };
    Diagnostics {
        max_sigma,
        euler_residual,
        flux_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};

    fn disk_mesh(r: f64, h: f64) -> Arc<TriMesh> {
        Arc::new(triangulate(&Domain::disk(r).unwrap(), h).unwrap())
    }

    /// `I₁(x)/I₀(x)` from the power series.
    fn bessel_ratio(x: f64) -> f64 {
        let (mut i0, mut i1) = (0.0, 0.0);
        let mut term = 1.0;
        for k in 0..60 {
            let k = k as f64;
            if k > 0.0 {
                term *= (x / 2.0).powi(2) / (k * k);
            }
            i0 += term;
            i1 += term * (x / 2.0) / (k + 1.0);
        }
        i1 / i0
    }

    fn centered_hole(m: &TriMesh, radius: f64) -> SubsetRegion {
        let cells: Vec<usize> = (0..m.num_triangles())
            .filter(|&t| norm(m.centroid(t)) < radius)
            .collect();
        SubsetRegion::from_cells(m, &cells).unwrap()
    }

    #[test]
    fn p2_disk_matches_bessel_ratio() {
        let m = disk_mesh(1.0, 0.05);
        let r = solve_lambda_p(&m, &SolverParams::new(2.0), None).unwrap();
        let exact = bessel_ratio(1.0);
        assert!((r.lambda - exact).abs() < 0.01 * exact, "{} vs {exact}", r.lambda);
        assert!(r.normalization_error < 1e-12);
        assert!(r.field.as_ref().unwrap().values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn descent_is_monotone() {
        let m = disk_mesh(1.0, 0.1);
        let r = solve_lambda_p(&m, &SolverParams::new(1.5), None).unwrap();
        for w in r.residuals.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14), "{} > {}", w[1], w[0]);
        }
    }

    #[test]
    fn holes_raise_lambda_monotonically() {
        let m = disk_mesh(1.0, 0.08);
        let params = SolverParams::new(2.0);
        let free = solve_lambda_p(&m, &params, None).unwrap().lambda;
        let mut last = free;
        for rad in [0.1, 0.2, 0.35] {
            let hole = centered_hole(&m, rad);
            let l = solve_lambda_p(&m, &params, Some(&hole)).unwrap().lambda;
            assert!(l >= last - 1e-6, "hole {rad}: {l} < {last}");
            last = l;
        }
        assert!(last > free);
    }

    #[test]
    fn hole_over_whole_boundary_collapses_trace() {
        let m = disk_mesh(1.0, 0.2);
        let all: Vec<usize> = (0..m.num_triangles()).collect();
        let hole = SubsetRegion::from_cells(&m, &all).unwrap();
        let e = solve_lambda_p(&m, &SolverParams::new(2.0), Some(&hole)).unwrap_err();
        assert!(matches!(e, Error::TraceCollapse(_)));
    }

    #[test]
    fn budget_exhaustion_reports_best_iterate() {
        let m = disk_mesh(1.0, 0.1);
        let params = SolverParams { max_iterations: 3, ..SolverParams::new(2.0) };
        match solve_lambda_p(&m, &params, None) {
            Err(Error::NotConverged { iterations, best }) => {
                assert_eq!(iterations, 3);
                assert!(best.lambda > 0.0 && best.field.is_some());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn constant_field_has_zero_flux() {
        let m = disk_mesh(1.0, 0.2);
        let f = FEField::constant(m.clone(), 0.3);
        let r = EigenResult {
            method: Method::Plaplace,
            p: 1.1,
            lambda: rayleigh_quotient(&m, f.values(), 1.1).unwrap(),
            field: Some(f),
            iterations: 0,
            residuals: vec![],
            normalization_error: 0.0,
            diagnostics: Diagnostics::default(),
        };
        assert_eq!(sigma_diagnostics(&r, 1.1).max_sigma, 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let m = disk_mesh(1.0, 0.2);
        assert!(solve_lambda_p(&m, &SolverParams::new(1.0), None).is_err());
        let bad = SolverParams { tolerance: 0.0, ..SolverParams::new(2.0) };
        assert!(solve_lambda_p(&m, &bad, None).is_err());
    }

    #[test]
    fn json_record_fields() {
        let m = disk_mesh(1.0, 0.2);
        let r = solve_lambda_p(&m, &SolverParams::new(2.0), None).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["method", "p", "lambda", "iterations", "residuals", "normalization_error", "diagnostics"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        assert_eq!(v["method"], "plaplace");
        assert!(v["diagnostics"].get("max_sigma").is_some());
    }
}
