use serde::Serialize;

use super::kde::EnsembleSamples;
use crate::ensemble::pairwise_sum;
use crate::error::{Error, Result};
use crate::solver::Probe;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSup {
    pub sup: f64,
    pub p: f64,
    /// `(probe, E|u|^p)` in the order the ensembles were given.
    pub per_probe: Vec<(Probe, f64)>,
}

pub fn absolute_moment(values: &[f64], p: f64) -> f64 {
    let terms: Vec<f64> = values.iter().map(|v| v.abs().powf(p)).collect();
    pairwise_sum(&terms) / terms.len() as f64
}

/// `max_probe E|u(t, x)|^p` over the given ensembles.
pub fn moment_sup(ensembles: &[EnsembleSamples], p: f64) -> Result<MomentSup> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Config(format!("moment order p = {p} must be at least 2")));
    }
    if ensembles.is_empty() {
        return Err(Error::InsufficientData("no ensembles given".into()));
    }
    let mut per_probe = Vec::with_capacity(ensembles.len());
    for e in ensembles {
        if e.values.is_empty() {
            return Err(Error::Data(format!("ensemble at (t = {}, x = {}) is empty", e.probe.t, e.probe.x)));
        }
        per_probe.push((e.probe, absolute_moment(&e.values, p)));
    }
    let sup = per_probe.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    Ok(MomentSup { sup, p, per_probe })
}
