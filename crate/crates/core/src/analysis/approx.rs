use serde::Serialize;

use super::regression::{log_log, span_ratio, LinearFit};
use super::smoothing::NOISE_FLOOR_SES;
use crate::ensemble::{mean_and_se, run_ensemble};
use crate::error::{Error, Result};
use crate::noise::SeedSpec;
use crate::solver::{simulate_frozen_family, ModelSpec, SolverOptions, SpaceTimeGrid};

/// `E|u(t, x) - u_ε(t, x)|` at one window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxPoint {
    pub eps: f64,
    pub mean_abs_error: f64,
    pub standard_error: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxErrorCurve {
    pub t: f64,
    pub x: f64,
    pub points: Vec<ApproxPoint>,
    /// Log-log fit over the points above the noise floor; `None` when fewer
    /// than two remain (for instance when every error is exactly zero).
    pub fit: Option<LinearFit>,
    pub replicas_used: usize,
    pub replicas_failed: usize,
}

impl ApproxErrorCurve {
    pub fn is_identically_zero(&self) -> bool {
        self.points.iter().all(|p| p.mean_abs_error == 0.0)
    }
}

/// Estimate `E|u(t, x) - u_ε(t, x)|` for every `ε` over `replicas` coupled
/// runs and fit the decay exponent.
#[allow(clippy::too_many_arguments)]
pub fn approx_error_curve(
    model: &ModelSpec,
    grid: &SpaceTimeGrid,
    options: SolverOptions,
    master_seed: u64,
    replicas: usize,
    workers: usize,
    t: f64,
    x: f64,
    eps_set: &[f64],
) -> Result<ApproxErrorCurve> {
    if eps_set.len() < 3 || eps_set.iter().any(|e| !(*e > 0.0)) || span_ratio(eps_set) < 4.0 * (1.0 - 1e-12) {
        return Err(Error::Config("window set needs ≥ 3 positive values spanning ≥ 3 dyadic levels".into()));
    }
    if replicas < 2 {
        return Err(Error::Config("approximation error needs at least 2 replicas".into()));
    }
    let node = grid
        .node_of(x)
        .ok_or_else(|| Error::Config(format!("probe x = {x} is not a grid node")))?;
    let outcome = run_ensemble(replicas, workers, |id| {
        let fam = simulate_frozen_family(model, grid, options, SeedSpec::solution(master_seed, id), t, eps_set)?;
        Ok(fam.frozen.iter().map(|f| (fam.exact[node] - f[node]).abs()).collect::<Vec<f64>>())
    })?;
    let rows: Vec<&Vec<f64>> = outcome.values().collect();
    let mut points = Vec::with_capacity(eps_set.len());
    for (j, &eps) in eps_set.iter().enumerate() {
        let errs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let (mean, se) = mean_and_se(&errs);
        points.push(ApproxPoint {
            eps,
            mean_abs_error: mean,
            standard_error: se,
            excluded: mean <= NOISE_FLOOR_SES * se,
        });
    }
    let kept: Vec<&ApproxPoint> = points.iter().filter(|p| !p.excluded).collect();
    let fit = if kept.len() >= 2 {
        let es: Vec<f64> = kept.iter().map(|p| p.eps).collect();
        let ms: Vec<f64> = kept.iter().map(|p| p.mean_abs_error).collect();
        Some(log_log(&es, &ms)?)
    } else {
        None
    };
    Ok(ApproxErrorCurve {
        t,
        x,
        points,
        fit,
        replicas_used: outcome.ok.len(),
        replicas_failed: outcome.failed.len(),
    })
}
