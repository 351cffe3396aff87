use serde::Serialize;

use crate::error::{Error, Result};

/// Function sampled at `origin + i·step`, `i = 0..values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub origin: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(origin: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !origin.is_finite() {
            return Err(Error::Config(format!("sampling step {step} must be positive and finite")));
        }
        Ok(SampledFunction { origin, step, values })
    }

    pub fn from_fn(origin: f64, step: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..len).map(|i| f(origin + i as f64 * step)).collect();
        Self::new(origin, step, values)
    }

    pub fn abscissa(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// Riemann sum of `|f|`.
    pub fn l1_norm(&self) -> f64 {
        self.step * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Trapezoid rule over the sampled range.
    pub fn trapezoid(&self) -> f64 {
        match self.values.len() {
            0 | 1 => 0.0,
            n => self.step * (self.values.iter().sum::<f64>() - 0.5 * (self.values[0] + self.values[n - 1])),
        }
    }

    /// Number of samples spanned by the lag `h`, or a configuration error if
    /// `h` is not a positive multiple of the step.
    pub fn lag_in_steps(&self, h: f64) -> Result<usize> {
        let s = h / self.step;
        let k = s.round();
        if !(h > 0.0) || k < 1.0 || (s - k).abs() > 1e-9 * s.max(1.0) {
            return Err(Error::Config(format!(
                "lag h = {h} is not a positive multiple of the sampling step {}",
                self.step
            )));
        }
        Ok(k as usize)
    }
}

/// `C(n, j)` as a float; exact for the orders used here.
pub(crate) fn binomial(n: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Signed weights `(-1)^{n-j} C(n, j)`, `j = 0..=n`.
pub(crate) fn increment_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, j)
        })
        .collect()
}

/// `Δ_h^n f(x) = Σ_j (-1)^{n-j} C(n,j) f(x + jh)` on the points where every
/// term is sampled, i.e. the first `len - n·h/step` abscissae.
pub fn nth_increment(f: &SampledFunction, h: f64, n: usize) -> Result<SampledFunction> {
    if n == 0 {
        return Err(Error::Config("increment order must be at least 1".into()));
    }
    let k = f.lag_in_steps(h)?;
    let w = increment_weights(n);
    let reach = n * k;
    let len = f.values.len().saturating_sub(reach);
    let values = (0..len)
        .map(|i| w.iter().enumerate().map(|(j, wj)| wj * f.values[i + j * k]).sum())
        .collect();
    SampledFunction::new(f.origin, f.step, values)
}
