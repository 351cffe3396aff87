use serde::{Deserialize, Serialize};

use super::increments::increment_weights;
use super::kde::EnsembleSamples;
use super::regression::{log_log, span_ratio, LinearFit};
use crate::ensemble::mean_and_se;
use crate::error::{Error, Result};

/// A lag is dropped when its estimate is within this many standard errors of 0.
pub const NOISE_FLOOR_SES: f64 = 3.0;
pub const DEFAULT_SMOOTHING_ORDER: usize = 4;

/// Bounded test functions with a Hölder exponent tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Sin,
    Cos,
    /// `clamp(p(x), -bound, bound)` with `p(x) = Σ coeffs[k] x^k`.
    ClippedPolynomial { coeffs: Vec<f64>, bound: f64 },
    /// `clamp(x, -bound, bound)`.
    ClippedIdentity { bound: f64 },
    /// `Σ_{k<terms} 2^{-kγ} cos(2^k x)`, Hölder of order `γ ∈ (0, 1)`.
    Weierstrass { gamma: f64, terms: u32 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Sin => x.sin(),
            TestFunction::Cos => x.cos(),
            TestFunction::ClippedPolynomial { coeffs, bound } => {
                let p = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
                p.clamp(-bound, *bound)
            }
            TestFunction::ClippedIdentity { bound } => x.clamp(-bound, *bound),
            TestFunction::Weierstrass { gamma, terms } => (0..*terms)
                .map(|k| {
                    let f = 2f64.powi(k as i32);
                    f.powf(-gamma) * (f * x).cos()
                })
                .sum(),
        }
    }

    /// Exponent `γ` with `φ ∈ C_b^γ`.
    pub fn hoelder_exponent(&self) -> f64 {
        match self {
            TestFunction::Weierstrass { gamma, .. } => *gamma,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::ClippedPolynomial { coeffs, bound } => {
                if coeffs.is_empty() || !(*bound > 0.0) {
                    return Err(Error::Config("clipped polynomial needs coefficients and a positive bound".into()));
                }
            }
            TestFunction::ClippedIdentity { bound } if !(*bound > 0.0) => {
                return Err(Error::Config("clipped identity needs a positive bound".into()));
            }
            TestFunction::Weierstrass { gamma, terms } if !(*gamma > 0.0 && *gamma < 1.0) || *terms == 0 => {
                return Err(Error::Config(format!("Weierstrass function needs γ ∈ (0, 1), got {gamma}")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Ensemble estimate of `E[Δ_h^m φ(X)]` at one lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagEstimate {
    pub h: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingFit {
    pub slope: f64,
    pub standard_error: f64,
    pub gamma: f64,
    pub order: usize,
    /// Whether the fitted slope exceeds `γ`.
    pub certifies: bool,
    pub lags: Vec<LagEstimate>,
    pub fit: LinearFit,
}

impl SmoothingFit {
    pub fn excluded_lags(&self) -> Vec<f64> {
        self.lags.iter().filter(|l| l.excluded).map(|l| l.h).collect()
    }
}

/// `E[Δ_h^m φ(X)]` with its Monte Carlo standard error.
pub fn increment_expectation(samples: &EnsembleSamples, phi: &TestFunction, m: usize, h: f64) -> (f64, f64) {
    let w = increment_weights(m);
    let terms: Vec<f64> = samples
        .values
        .iter()
        .map(|&x| w.iter().enumerate().map(|(j, wj)| wj * phi.eval(x + j as f64 * h)).sum())
        .collect();
    mean_and_se(&terms)
}

/// Fit `log |E[Δ_h^m φ(X)]|` against `log h`. Lags whose estimate is within
/// [`NOISE_FLOOR_SES`] standard errors of zero are excluded from the fit.
pub fn smoothing_probe(samples: &EnsembleSamples, phi: &TestFunction, m: usize, lags: &[f64]) -> Result<SmoothingFit> {
    if m == 0 {
        return Err(Error::Config("increment order m must be at least 1".into()));
    }
    phi.validate()?;
    if lags.len() < 3 || lags.iter().any(|h| !(*h > 0.0)) || span_ratio(lags) < 4.0 * (1.0 - 1e-12) {
        return Err(Error::Config("smoothing probe needs ≥ 3 positive lags spanning ≥ 3 dyadic levels".into()));
    }
    let mut estimates = Vec::with_capacity(lags.len());
    for &h in lags {
        let (mean, se) = increment_expectation(samples, phi, m, h);
        let excluded = mean.abs() <= NOISE_FLOOR_SES * se;
        if excluded {
            log::warn!("lag h = {h} excluded: |E| = {:.3e} is within {NOISE_FLOOR_SES} SE = {se:.3e} of zero", mean.abs());
        }
        estimates.push(LagEstimate { h, mean, standard_error: se, excluded });
    }
    let kept: Vec<&LagEstimate> = estimates.iter().filter(|l| !l.excluded).collect();
    if kept.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} of {} lags lie above the noise floor",
            kept.len(),
            lags.len()
        )));
    }
    let hs: Vec<f64> = kept.iter().map(|l| l.h).collect();
    let ms: Vec<f64> = kept.iter().map(|l| l.mean.abs()).collect();
    let fit = log_log(&hs, &ms)?;
    let gamma = phi.hoelder_exponent();
    Ok(SmoothingFit {
        slope: fit.slope,
        standard_error: fit.slope_se,
        gamma,
        order: m,
        certifies: fit.slope > gamma,
        lags: estimates,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::besov::dyadic_lags;
    use crate::solver::Probe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_samples(n: usize, seed: u64) -> EnsembleSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        EnsembleSamples::new(v, Probe::new(0.0, 0.0), "normal").unwrap()
    }

    /// `E[cos(X + a)] = e^{-1/2} cos a` and `E[sin(X + a)] = e^{-1/2} sin a`
    /// for `X ~ N(0, 1)`.
    fn gaussian_oracle(phi: &TestFunction, m: usize, h: f64) -> f64 {
        let w = increment_weights(m);
        let damp = (-0.5f64).exp();
        w.iter()
            .enumerate()
            .map(|(j, wj)| {
                let a = j as f64 * h;
                wj * damp * if *phi == TestFunction::Sin { a.sin() } else { a.cos() }
            })
            .sum()
    }

    #[test]
    fn estimates_match_characteristic_function() {
        let s = normal_samples(100_000, 5);
        for phi in [TestFunction::Sin, TestFunction::Cos] {
            for h in dyadic_lags(0, 4) {
                let (mean, se) = increment_expectation(&s, &phi, 2, h);
                let exact = gaussian_oracle(&phi, 2, h);
                assert!((mean - exact).abs() < 4.0 * se, "{phi:?} h = {h}: {mean} vs {exact} (se {se})");
            }
        }
    }

    #[test]
    fn oracle_slopes_for_sin_and_cos() {
        // 2 sin h (cos h - 1) e^{-1/2} ~ -h³ and (cos 2h - 2 cos h + 1) e^{-1/2} ~ -h².
        let hs = dyadic_lags(4, 10);
        for (phi, expect) in [(TestFunction::Sin, 3.0), (TestFunction::Cos, 2.0)] {
            let ys: Vec<f64> = hs.iter().map(|&h| gaussian_oracle(&phi, 2, h).abs()).collect();
            let fit = log_log(&hs, &ys).unwrap();
            assert!((fit.slope - expect).abs() < 1e-3, "{phi:?}: {}", fit.slope);
        }
    }

    #[test]
    fn cosine_probe_saturates_at_order() {
        let s = normal_samples(100_000, 9);
        let fit = smoothing_probe(&s, &TestFunction::Cos, 2, &dyadic_lags(2, 6)).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.15, "slope {}", fit.slope);
        assert!(fit.certifies);
    }

    #[test]
    fn constant_sample_does_not_certify() {
        let s = EnsembleSamples::new(vec![0.1; 200], Probe::new(0.0, 0.0), "point mass").unwrap();
        let phi = TestFunction::ClippedIdentity { bound: 10.0 };
        let fit = smoothing_probe(&s, &phi, 1, &dyadic_lags(0, 4)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-9);
        assert!(!fit.certifies);
        // Second increments of a linear map vanish at every lag.
        assert!(matches!(smoothing_probe(&s, &phi, 2, &dyadic_lags(0, 4)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn test_functions() {
        let w = TestFunction::Weierstrass { gamma: 0.5, terms: 12 };
        assert_eq!(w.hoelder_exponent(), 0.5);
        assert!((w.eval(0.0) - (0..12).map(|k| 2f64.powf(-0.5 * k as f64)).sum::<f64>()).abs() < 1e-12);
        let p = TestFunction::ClippedPolynomial { coeffs: vec![0.0, 0.0, 1.0], bound: 4.0 };
        assert_eq!(p.eval(1.5), 2.25);
        assert_eq!(p.eval(3.0), 4.0);
        assert!(TestFunction::Weierstrass { gamma: 1.5, terms: 3 }.validate().is_err());
        let s = normal_samples(200, 1);
        assert!(smoothing_probe(&s, &TestFunction::Sin, 2, &[0.5, 0.25]).is_err());
        assert!(smoothing_probe(&s, &TestFunction::Sin, 0, &dyadic_lags(0, 3)).is_err());
    }
}
