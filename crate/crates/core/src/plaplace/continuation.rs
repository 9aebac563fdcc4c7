use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::solver::{solve_from, EigenResult, SolverParams};
use crate::error::{Error, Result};
use crate::geometry::TriMesh;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationResult {
    /// `(p, λ_p)` per stage.
    pub lambdas: Vec<(f64, f64)>,
    pub extrapolated_lambda1: f64,
    pub slope: f64,
    /// Extrapolation model, recorded for reproducibility.
    pub model: String,
    #[serde(skip)]
    pub stages: Vec<EigenResult>,
}

/// Solves along a decreasing `p` schedule with warm starts and fits
/// `λ_p ≈ λ₁ + c (p − 1)` on the last three stages.
pub fn continuation_to_one(
    mesh: &Arc<TriMesh>,
    schedule: &[f64],
    params: &SolverParams,
) -> Result<ContinuationResult> {
    if schedule.len() < 3 {
        return Err(Error::InvalidInput("schedule needs at least three values of p".into()));
    }
    if schedule.iter().any(|&p| !(p > 1.0)) || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput(
            "schedule must decrease strictly and stay above 1".into(),
        ));
    }
    let mut stages: Vec<EigenResult> = Vec::with_capacity(schedule.len());
    let mut lambdas = Vec::with_capacity(schedule.len());
    for &p in schedule {
        let stage_params = SolverParams { p, ..params.clone() };
        let init = stages
            .last()
            .and_then(|r| r.field.as_ref())
            .map(|f| f.values().to_vec());
        match solve_from(mesh, &stage_params, None, init.as_deref()) {
            Ok(r) => {
                lambdas.push((p, r.lambda));
                stages.push(r);
            }
            Err(e) => {
                return Err(Error::Continuation {
                    p,
                    partial: lambdas,
                    source: Box::new(e),
                })
            }
        }
    }
    let tail = &lambdas[lambdas.len() - 3..];
    let (intercept, slope) = linear_fit(tail);
    Ok(ContinuationResult {
        lambdas,
        extrapolated_lambda1: intercept,
        slope,
        model: "linear in p-1, least squares on the last three stages".into(),
        stages,
    })
}

/// Least-squares line `λ = a + b (p − 1)`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|(p, _)| p - 1.0).sum::<f64>() / n;
    let my = points.iter().map(|(_, l)| l).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(p, l)| (p - 1.0 - mx) * (l - my)).sum();
    let sxx: f64 = points.iter().map(|(p, _)| (p - 1.0 - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}
