use serde::Serialize;

use super::increments::{nth_increment, SampledFunction};
use crate::error::{Error, Result};

/// Discrete `B^s_{1,∞}` functional over a finite lag set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovValue {
    pub l1_norm: f64,
    pub sup_term: f64,
    pub total: f64,
    pub s: f64,
    pub order: usize,
    /// `(h, |h|^{-s} ‖Δ_h^n f‖_{L¹})` for each lag, in the order given.
    pub per_lag: Vec<(f64, f64)>,
}

/// Default increment order `⌈s⌉ + 1`.
pub fn default_order(s: f64) -> usize {
    s.ceil() as usize + 1
}

/// Dyadic lags `2^{-k}` for `k = k_min..=k_max`.
pub fn dyadic_lags(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 0.5f64.powi(k as i32)).collect()
}

/// `‖f‖_{L¹} + max_h |h|^{-s} ‖Δ_h^n f‖_{L¹}` with `f` extended by zero
/// outside its sampled range.
pub fn besov_functional(f: &SampledFunction, s: f64, order: Option<usize>, lags: &[f64]) -> Result<BesovValue> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Config(format!("smoothness s = {s} must be positive")));
    }
    let n = order.unwrap_or_else(|| default_order(s));
    if !(s < n as f64) {
        return Err(Error::Config(format!("increment order n = {n} must exceed s = {s}")));
    }
    if lags.is_empty() {
        return Err(Error::Config("lag set is empty".into()));
    }
    let mut per_lag = Vec::with_capacity(lags.len());
    let mut sup_term = 0.0f64;
    for &h in lags {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::Config(format!("lag h = {h} must lie in (0, 1]")));
        }
        let reach = n * f.lag_in_steps(h)?;
        let mut padded = Vec::with_capacity(f.values.len() + 2 * reach);
        padded.resize(reach, 0.0);
        padded.extend_from_slice(&f.values);
        padded.resize(f.values.len() + 2 * reach, 0.0);
        let ext = SampledFunction::new(f.origin - reach as f64 * f.step, f.step, padded)?;
        let term = h.powf(-s) * nth_increment(&ext, h, n)?.l1_norm();
        sup_term = sup_term.max(term);
        per_lag.push((h, term));
    }
    let l1_norm = f.l1_norm();
    Ok(BesovValue { l1_norm, sup_term, total: l1_norm + sup_term, s, order: n, per_lag })
}
