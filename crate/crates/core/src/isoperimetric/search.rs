use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::region::{boundary_arc, geometric_quotient, quotient_of, SubsetRegion};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, sub, triangulate, Curve, Domain, TriMesh, P2};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchFamily {
    /// Exact half-plane caps `{x·d ≥ s}` plus the whole domain.
    BoundaryCaps,
    /// Metropolis annealing over unions of mesh triangles.
    CellAnnealing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub family: SearchFamily,
    /// Relative temperatures at the first and last step (geometric decay).
    pub t_start: f64,
    pub t_end: f64,
    /// Proposals per chain.
    pub iterations: usize,
    /// Number of chains; `None` runs one chain per seed set.
    pub chains: Option<usize>,
    pub seed: u64,
    /// Mesh size; `None` uses diam/200, capped by the domain's feature size.
    pub mesh_h: Option<f64>,
    pub cap_directions: usize,
    pub cap_levels: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            family: SearchFamily::CellAnnealing,
            t_start: 1e-2,
            t_end: 1e-5,
            iterations: 20_000,
            chains: None,
            seed: 0,
            mesh_h: None,
            cap_directions: 64,
            cap_levels: 40,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("search budget must be positive".into()));
        }
        if !(self.t_start > 0.0 && self.t_end > 0.0 && self.t_end <= self.t_start) {
            return Err(Error::InvalidInput("temperatures must be positive and decreasing".into()));
        }
        if self.cap_directions == 0 || self.cap_levels == 0 {
            return Err(Error::InvalidInput("cap grid must be non-empty".into()));
        }
        if matches!(self.chains, Some(0)) {
            return Err(Error::InvalidInput("need at least one chain".into()));
        }
        if matches!(self.mesh_h, Some(h) if !(h > 0.0)) {
            return Err(Error::InvalidInput("mesh size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub quotient: f64,
    pub accepted: bool,
}

/// Best set found by [`eigenset_search`]. The quotient is always an upper
/// bound for the constrained `λ₁`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigensetResult {
    pub quotient: f64,
    pub region: SubsetRegion,
    /// Which candidate class produced the minimum.
    pub origin: String,
    pub trace: Vec<TraceRow>,
    /// `|Ω ∖ C|` of the returned set.
    pub complement_area: f64,
    pub upper_bound: bool,
}

/// Per-cell data with circular boundary edges replaced by their arcs.
pub(crate) struct CellGeometry {
    pub area: Vec<f64>,
    pub trace: Vec<f64>,
    pub nbr: Vec<[Option<usize>; 3]>,
    pub len: Vec<[f64; 3]>,
    pub centroid: Vec<P2>,
    pub total_area: f64,
    pub max_area: f64,
}

impl CellGeometry {
    pub fn new(domain: &Domain, mesh: &TriMesh) -> Self {
        let n = mesh.num_triangles();
        let per: Vec<(f64, f64, [f64; 3])> = par::map(n, |t| {
            let tri = mesh.triangles()[t];
            let mut area = mesh.area(t);
            let mut trace = 0.0;
            let mut len = [0.0; 3];
            for k in 0..3 {
                len[k] = mesh.edge_length(t, k);
                if mesh.neighbors(t)[k].is_none() {
                    let a = mesh.vertices()[tri[k]];
                    let b = mesh.vertices()[tri[(k + 1) % 3]];
                    match boundary_arc(domain, a, b) {
                        Some(arc) => {
                            area += arc.green_area() - Curve::Segment { a, b }.green_area();
                            trace += arc.length();
                        }
                        None => trace += len[k],
                    }
                }
            }
            (area, trace, len)
        });
        let area: Vec<f64> = per.iter().map(|x| x.0).collect();
        let total_area = area.iter().sum();
        let max_area = area.iter().cloned().fold(0.0, f64::max);
        Self {
            trace: per.iter().map(|x| x.1).collect(),
            len: per.iter().map(|x| x.2).collect(),
            nbr: (0..n).map(|t| mesh.neighbors(t)).collect(),
            centroid: (0..n).map(|t| mesh.centroid(t)).collect(),
            area,
            total_area,
            max_area,
        }
    }

    fn measures(&self, inside: &[bool]) -> (f64, f64, f64) {
        let mut a = 0.0;
        let mut tr = 0.0;
        let mut int = 0.0;
        for t in 0..inside.len() {
            if !inside[t] {
                continue;
            }
            a += self.area[t];
            tr += self.trace[t];
            for k in 0..3 {
                if let Some(j) = self.nbr[t][k] {
                    if !inside[j] {
                        int += self.len[t][k];
                    }
                }
            }
        }
        (int, a, tr)
    }
}

/// Set with O(1) insert, remove and uniform sampling.
struct IndexSet {
    items: Vec<usize>,
    pos: Vec<usize>,
}

impl IndexSet {
    fn new(n: usize) -> Self {
        Self { items: Vec::new(), pos: vec![usize::MAX; n] }
    }

    fn set(&mut self, i: usize, on: bool) {
        let present = self.pos[i] != usize::MAX;
        if on && !present {
            self.pos[i] = self.items.len();
            self.items.push(i);
        } else if !on && present {
            let p = self.pos[i];
            let last = *self.items.last().unwrap();
            self.items.swap_remove(p);
            if last != i {
                self.pos[last] = p;
            }
            self.pos[i] = usize::MAX;
        }
    }
}

struct Chain<'a> {
    g: &'a CellGeometry,
    forbidden: &'a [bool],
    inside: Vec<bool>,
    interior: f64,
    area: f64,
    trace: f64,
    frontier: IndexSet,
}

impl<'a> Chain<'a> {
    fn new(g: &'a CellGeometry, forbidden: &'a [bool], inside: Vec<bool>) -> Self {
        let (interior, area, trace) = g.measures(&inside);
        let mut c = Self {
            g,
            forbidden,
            frontier: IndexSet::new(inside.len()),
            inside,
            interior,
            area,
            trace,
        };
        for t in 0..c.inside.len() {
            c.refresh(t);
        }
        c
    }

    fn quotient(&self) -> f64 {
        (self.interior + self.area) / self.trace
    }

    fn active(&self, t: usize) -> bool {
        if self.forbidden[t] {
            return false;
        }
        self.g.nbr[t].iter().any(|n| match n {
            None => true,
            Some(j) => self.inside[*j] != self.inside[t],
        })
    }

    fn refresh(&mut self, t: usize) {
        let on = self.active(t);
        self.frontier.set(t, on);
    }

    fn delta(&self, t: usize) -> (f64, f64, f64) {
        let s = if self.inside[t] { -1.0 } else { 1.0 };
        let mut di = 0.0;
        for k in 0..3 {
            if let Some(j) = self.g.nbr[t][k] {
                let l = self.g.len[t][k];
                di += if self.inside[j] { -s * l } else { s * l };
            }
        }
        (di, s * self.g.area[t], s * self.g.trace[t])
    }

    fn flip(&mut self, t: usize, d: (f64, f64, f64)) {
        self.inside[t] = !self.inside[t];
        self.interior += d.0;
        self.area += d.1;
        self.trace += d.2;
        self.refresh(t);
        for k in 0..3 {
            if let Some(j) = self.g.nbr[t][k] {
                self.refresh(j);
            }
        }
    }
}

struct ChainOutcome {
    quotient: f64,
    inside: Vec<bool>,
    trace: Vec<TraceRow>,
}

fn run_chain(
    g: &CellGeometry,
    forbidden: &[bool],
    start: Vec<bool>,
    params: &SearchParams,
    band: Option<(f64, f64)>,
    stream: u64,
) -> ChainOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);
    let mut chain = Chain::new(g, forbidden, start);
    let floor = 1e-12 * g.trace.iter().sum::<f64>();
    let mut best_q = chain.quotient();
    let mut best = chain.inside.clone();
    let n = params.iterations;
    let stride = (n / 2000).max(1);
    let mut trace = Vec::with_capacity(n / stride + 1);
    let ratio = (params.t_end / params.t_start).ln();
    for it in 0..n {
        let temp = params.t_start * (ratio * it as f64 / (n.max(2) - 1) as f64).exp();
        let mut accepted = false;
        if !chain.frontier.items.is_empty() {
            let t = chain.frontier.items[rng.gen_range(0..chain.frontier.items.len())];
            let d = chain.delta(t);
            let trace_new = chain.trace + d.2;
            let area_new = chain.area + d.1;
            let ok_band = match band {
                Some((lo, hi)) => {
                    let c = g.total_area - area_new;
                    c >= lo && c <= hi
                }
                None => true,
            };
            if trace_new > floor && area_new > 0.0 && ok_band {
                let q0 = chain.quotient();
                let q1 = (chain.interior + d.0 + area_new) / trace_new;
                let u: f64 = rng.gen();
                if q1 <= q0 || u < (-(q1 - q0) / (temp * q0)).exp() {
                    chain.flip(t, d);
                    accepted = true;
                    if q1 < best_q {
                        best_q = q1;
                        best.clone_from(&chain.inside);
                    }
                }
            }
        }
        if it % stride == 0 || it + 1 == n {
            trace.push(TraceRow {
                iteration: it,
                quotient: chain.quotient(),
                accepted,
            });
        }
    }
    // Recompute from scratch to shed accumulated rounding.
    let (i, a, t) = g.measures(&best);
    ChainOutcome {
        quotient: (i + a) / t,
        inside: best,
        trace,
    }
}

/// Enumerates exact caps `{x·d ≥ s}` and returns them sorted by quotient.
pub fn boundary_caps(
    domain: &Domain,
    directions: usize,
    levels: usize,
) -> Result<Vec<(f64, P2, f64, SubsetRegion)>> {
    let curves = domain.boundary_curves()?;
    let verts = domain.polygon_vertices().unwrap_or_default();
    let per_dir = par::map(directions, |k| {
        let th = std::f64::consts::TAU * k as f64 / directions as f64;
        let d = [th.cos(), th.sin()];
        let (lo, hi) = projection_range(&curves, d);
        let mut ss: Vec<f64> = (0..levels)
            .map(|j| {
                let f = (j + 1) as f64 / (levels + 1) as f64;
                hi - (hi - lo) * f * f
            })
            .collect();
        ss.extend(verts.iter().map(|v| dot(*v, d)).filter(|&s| s > lo && s < hi));
        let mut out = Vec::new();
        for s in ss {
            if let Ok(r) = SubsetRegion::cap(domain, d, s) {
                if let Ok(q) = geometric_quotient(&r, domain) {
                    out.push((q, d, s, r));
                }
            }
        }
        out
    });
    let mut all: Vec<_> = per_dir.into_iter().flatten().collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(all)
}

fn projection_range(curves: &[Curve], d: P2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in curves {
        match *c {
            Curve::Segment { a, b } => {
                for p in [a, b] {
                    lo = lo.min(dot(p, d));
                    hi = hi.max(dot(p, d));
                }
            }
            Curve::Arc { center, radius, .. } => {
                lo = lo.min(dot(center, d) - radius * norm(d));
                hi = hi.max(dot(center, d) + radius * norm(d));
            }
        }
    }
    (lo, hi)
}

/// Mesh size used by the search for `domain`.
pub fn search_mesh_size(domain: &Domain, params: &SearchParams) -> Result<f64> {
    let fs = match domain {
        Domain::Ball { radius, .. } => *radius,
        Domain::Annulus { inner, outer, .. } => outer - inner,
        _ => domain.diameter(),
    };
    Ok(params.mesh_h.unwrap_or_else(|| (domain.diameter() / 200.0).min(0.5 * fs)))
}

/// Searches for a set minimizing `(|∂A ∩ Ω| + |A|) / |A ∩ ∂Ω|`, optionally
/// avoiding `hole` and with `|Ω ∖ C| = trapped_volume` up to one cell.
pub fn eigenset_search(
    domain: &Domain,
    params: &SearchParams,
    hole: Option<&SubsetRegion>,
    trapped_volume: Option<f64>,
) -> Result<EigensetResult> {
    params.validate()?;
    domain.validate()?;
    if domain.dim() != 2 {
        return Err(Error::Unsupported("eigenset search is planar".into()));
    }
    if let Some(a) = trapped_volume {
        let (vol, _) = domain.measures()?;
        if !(a >= 0.0 && a < vol) {
            return Err(Error::InvalidInput(format!("trapped volume {a} not in [0, |Ω|)")));
        }
    }

    let unconstrained = hole.is_none() && trapped_volume.is_none();
    let mut best: Option<EigensetResult> = None;
    let mut consider = |cand: EigensetResult| {
        if best.as_ref().is_none_or(|b| cand.quotient < b.quotient) {
            best = Some(cand);
        }
    };

    let caps = boundary_caps(domain, params.cap_directions, params.cap_levels)?;
    if unconstrained {
        let whole = SubsetRegion::whole(domain)?;
        consider(EigensetResult {
            quotient: geometric_quotient(&whole, domain)?,
            region: whole,
            origin: "whole_domain".into(),
            trace: vec![],
            complement_area: 0.0,
            upper_bound: true,
        });
        if let Some((q, _, _, r)) = caps.first() {
            consider(EigensetResult {
                quotient: *q,
                region: r.clone(),
                origin: "boundary_cap".into(),
                trace: vec![],
                complement_area: domain.measures()?.0 - r.area(),
                upper_bound: true,
            });
        }
        if params.family == SearchFamily::BoundaryCaps {
            return Ok(best.unwrap());
        }
    } else if params.family == SearchFamily::BoundaryCaps && trapped_volume.is_some() {
        return Err(Error::Unsupported(
            "trapped-volume constraint needs cell annealing".into(),
        ));
    }

    let h = search_mesh_size(domain, params)?;
    let mesh = triangulate(domain, h)?;
    let g = CellGeometry::new(domain, &mesh);
    let nt = mesh.num_triangles();
    let mut forbidden = vec![false; nt];
    if let Some(hr) = hole {
        match hr.cells() {
            Some(cells) => {
                for &c in cells {
                    if c >= nt {
                        return Err(Error::InvalidInput("hole cell out of range".into()));
                    }
                    forbidden[c] = true;
                }
            }
            None => {
                for (f, &c) in forbidden.iter_mut().zip(&g.centroid) {
                    *f = hr.contains(c);
                }
            }
        }
    }

    let dist: Vec<f64> = par::map_slice(&g.centroid, |c| domain.boundary_distance(*c));
    let mut seeds: Vec<(String, Vec<bool>)> = Vec::new();
    seeds.push(("whole_domain".into(), vec![true; nt]));
    for k in 1..=3 {
        let t = k as f64 * mesh.h();
        seeds.push((format!("collar_{k}"), dist.iter().map(|&x| x < t).collect()));
    }
    let n_caps = if params.family == SearchFamily::BoundaryCaps {
        caps.len()
    } else {
        4
    };
    for (_, d, s, _) in caps.iter().take(n_caps) {
        seeds.push((
            "boundary_cap".into(),
            g.centroid.iter().map(|c| dot(*c, *d) >= *s).collect(),
        ));
    }
    for (_, inside) in seeds.iter_mut() {
        for t in 0..nt {
            inside[t] &= !forbidden[t];
        }
    }
    let band = trapped_volume.map(|a| (a - g.max_area, a + g.max_area));
    if let Some(alpha) = trapped_volume {
        for (_, inside) in seeds.iter_mut() {
            trap(&g, &dist, &forbidden, inside, alpha);
        }
    }
    seeds.retain(|(_, inside)| {
        let (i, a, t) = g.measures(inside);
        let ok_band = band.is_none_or(|(lo, hi)| {
            let c = g.total_area - a;
            c >= lo && c <= hi
        });
        t > 0.0 && a > 0.0 && ok_band && quotient_of(i, a, t).is_ok()
    });
    if seeds.is_empty() {
        return Err(Error::Infeasible(
            "no admissible set keeps a boundary trace outside the hole".into(),
        ));
    }

    let outcomes: Vec<(String, ChainOutcome)> = if params.family == SearchFamily::BoundaryCaps {
        seeds
            .into_iter()
            .map(|(label, inside)| {
                let (i, a, t) = g.measures(&inside);
                (label, ChainOutcome { quotient: (i + a) / t, inside, trace: vec![] })
            })
            .collect()
    } else {
        let chains = params.chains.unwrap_or(seeds.len());
        par::map(chains, |c| {
            let (label, start) = &seeds[c % seeds.len()];
            let out = run_chain(&g, &forbidden, start.clone(), params, band, c as u64);
            (label.clone(), out)
        })
    };
    let (label, win) = outcomes
        .into_iter()
        .min_by(|a, b| a.1.quotient.total_cmp(&b.1.quotient))
        .unwrap();
    let cells: Vec<usize> = (0..nt).filter(|&t| win.inside[t]).collect();
    let region = SubsetRegion::from_cells_in(domain, &mesh, &cells)?;
    let area_in: f64 = cells.iter().map(|&t| g.area[t]).sum();
    consider(EigensetResult {
        quotient: quotient_of(region.interior_length(), region.area(), region.trace_length())?,
        region,
        origin: label,
        trace: win.trace,
        complement_area: g.total_area - area_in,
        upper_bound: true,
    });
    Ok(best.unwrap())
}

/// Adjusts `inside` so that `|Ω ∖ C|` lands within one cell of `alpha`:
/// removes a round cluster around the deepest cell, or grows from ∂Ω.
fn trap(g: &CellGeometry, dist: &[f64], forbidden: &[bool], inside: &mut [bool], alpha: f64) {
    let area_in = |inside: &[bool]| -> f64 {
        (0..inside.len()).filter(|&t| inside[t]).map(|t| g.area[t]).sum()
    };
    let mut comp = g.total_area - area_in(inside);
    if comp < alpha {
        let center = (0..inside.len())
            .filter(|&t| inside[t])
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        let Some(center) = center else { return };
        let c = g.centroid[center];
        let mut order: Vec<usize> = (0..inside.len()).filter(|&t| inside[t]).collect();
        order.sort_by(|&a, &b| {
            norm(sub(g.centroid[a], c))
                .total_cmp(&norm(sub(g.centroid[b], c)))
                .then(a.cmp(&b))
        });
        for t in order {
            if comp >= alpha {
                break;
            }
            inside[t] = false;
            comp += g.area[t];
        }
    } else if comp > alpha + g.max_area {
        let mut order: Vec<usize> = (0..inside.len())
            .filter(|&t| !inside[t] && !forbidden[t])
            .collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        for t in order {
            if comp <= alpha + 0.5 * g.max_area {
                break;
            }
            inside[t] = true;
            comp -= g.area[t];
        }
    }
}
