use serde::{Deserialize, Serialize};

use super::increments::SampledFunction;
use crate::error::{Error, Result};
use crate::solver::Probe;

pub const MIN_SAMPLES: usize = 100;
/// Support window beyond the sample range, in bandwidths.
pub const SUPPORT_BANDWIDTHS: f64 = 4.0;
/// Kernel contributions beyond this many bandwidths are dropped.
const CUTOFF_BANDWIDTHS: f64 = 8.0;

/// Monte Carlo realizations of `u(t, x)` at one probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSamples {
    pub values: Vec<f64>,
    pub probe: Probe,
    pub model_tag: String,
    pub replica_count: usize,
}

impl EnsembleSamples {
    pub fn new(values: Vec<f64>, probe: Probe, model_tag: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("ensemble has no samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("sample {i} is not finite")));
        }
        let replica_count = values.len();
        Ok(EnsembleSamples { values, probe, model_tag: model_tag.into(), replica_count })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance; zero for a single sample.
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// `0.9 · min(sd, IQR/1.34) · n^{-1/5}`.
    #[default]
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KdeOptions {
    #[serde(default)]
    pub bandwidth: Bandwidth,
    /// Upper bound on the output grid step; the step is always a power of two.
    #[serde(default)]
    pub max_step: Option<f64>,
}

/// Gaussian-kernel density on the dyadic grid `origin + i·step`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub origin: f64,
    pub step: f64,
    pub density_values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.density_values.len()).map(|i| self.origin + i as f64 * self.step).collect()
    }

    pub fn integral(&self) -> f64 {
        self.as_sampled().trapezoid()
    }

    pub fn as_sampled(&self) -> SampledFunction {
        SampledFunction {
            origin: self.origin,
            step: self.step,
            values: self.density_values.clone(),
        }
    }

    /// Linear interpolation, zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.origin) / self.step;
        let last = self.density_values.len() - 1;
        if !(s >= 0.0) || s > last as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(last.saturating_sub(1));
        let w = s - i as f64;
        (1.0 - w) * self.density_values[i] + w * self.density_values[(i + 1).min(last)]
    }
}

/// Quantile by linear interpolation on sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let w = pos - i as f64;
    if i + 1 < sorted.len() {
        (1.0 - w) * sorted[i] + w * sorted[i + 1]
    } else {
        sorted[i]
    }
}

/// Silverman's rule, computed from the sorted sample so the result does not
/// depend on sample order.
pub fn silverman_bandwidth(samples: &EnsembleSamples) -> Result<f64> {
    let mut sorted = samples.values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate(format!(
            "ensemble at (t = {}, x = {}) has zero variance",
            samples.probe.t, samples.probe.x
        )));
    }
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (samples.values.len() as f64).powf(-0.2))
}

fn dyadic_floor(x: f64) -> f64 {
    2f64.powi(x.log2().floor() as i32)
}

pub fn kde(samples: &EnsembleSamples, options: KdeOptions) -> Result<DensityEstimate> {
    let n = samples.values.len();
    if n != samples.replica_count {
        return Err(Error::Data(format!("replica_count {} differs from {n} samples", samples.replica_count)));
    }
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!("density estimation needs {MIN_SAMPLES} samples, got {n}")));
    }
    let silverman = silverman_bandwidth(samples)?;
    let bw = match options.bandwidth {
        Bandwidth::Silverman => silverman,
        Bandwidth::Fixed(b) if b > 0.0 && b.is_finite() => b,
        Bandwidth::Fixed(b) => return Err(Error::Config(format!("bandwidth {b} must be positive"))),
    };
    let mut step = dyadic_floor(bw / 8.0);
    if let Some(m) = options.max_step {
        if !(m > 0.0) {
            return Err(Error::Config(format!("max_step {m} must be positive")));
        }
        step = step.min(dyadic_floor(m));
    }

    let mut sorted = samples.values.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[0] - SUPPORT_BANDWIDTHS * bw;
    let hi = sorted[n - 1] + SUPPORT_BANDWIDTHS * bw;
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    let origin = first as f64 * step;
    let len = (last - first + 1) as usize;

    let norm = 1.0 / (n as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let cutoff = CUTOFF_BANDWIDTHS * bw;
    let mut density_values = Vec::with_capacity(len);
    let mut start = 0usize;
    for i in 0..len {
        let x = origin + i as f64 * step;
        while start < n && sorted[start] < x - cutoff {
            start += 1;
        }
        let mut sum = 0.0;
        for &v in sorted[start..].iter().take_while(|&&v| v <= x + cutoff) {
            let z = (x - v) / bw;
            sum += (-0.5 * z * z).exp();
        }
        density_values.push(sum * norm);
    }
    Ok(DensityEstimate { origin, step, density_values, bandwidth: bw })
}
