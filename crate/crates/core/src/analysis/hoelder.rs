use serde::Serialize;

use super::regression::{log_log, span_ratio};
use crate::ensemble::pairwise_sum;
use crate::error::{Error, Result};

pub const MIN_LAGS: usize = 4;
/// Smallest `max/min` lag ratio accepted (three dyadic levels).
pub const MIN_SPAN: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoelderFit {
    pub exponent_estimate: f64,
    pub standard_error: f64,
    pub lag_range: (f64, f64),
    pub moment_order_p: f64,
}

/// Empirical `E|a - b|^p` over paired samples.
pub fn increment_moment(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Data("paired samples must be nonempty and of equal length".into()));
    }
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).collect();
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

/// Slope of `log E|u(t) - u(s)|^p` against `log |t - s|`, divided by `p`.
pub fn hoelder_fit(moment_pairs: &[(f64, f64)], p: f64) -> Result<HoelderFit> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Config(format!("moment order p = {p} must be at least 2")));
    }
    if moment_pairs.len() < MIN_LAGS {
        return Err(Error::InsufficientData(format!(
            "Hölder fit needs {MIN_LAGS} lags, got {}",
            moment_pairs.len()
        )));
    }
    if let Some((h, m)) = moment_pairs.iter().find(|(h, m)| !(*m > 0.0) || !(*h > 0.0)) {
        return Err(Error::Data(format!("lag {h} has nonpositive moment {m}")));
    }
    let lags: Vec<f64> = moment_pairs.iter().map(|(h, _)| *h).collect();
    let moments: Vec<f64> = moment_pairs.iter().map(|(_, m)| *m).collect();
    if span_ratio(&lags) < MIN_SPAN * (1.0 - 1e-12) {
        return Err(Error::InsufficientData("lags must span at least three dyadic levels".into()));
    }
    let fit = log_log(&lags, &moments)?;
    let lo = lags.iter().cloned().fold(f64::MAX, f64::min);
    let hi = lags.iter().cloned().fold(f64::MIN, f64::max);
    Ok(HoelderFit {
        exponent_estimate: fit.slope / p,
        standard_error: fit.slope_se / p,
        lag_range: (lo, hi),
        moment_order_p: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::besov::dyadic_lags;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn synthetic_process_recovers_exponent() {
        // Increments h^β Z with Z ~ N(0, 1), drawn independently per lag.
        let beta = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<(f64, f64)> = dyadic_lags(2, 7)
            .into_iter()
            .map(|h| {
                let a: Vec<f64> = (0..10_000)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        h.powf(beta) * z
                    })
                    .collect();
                (h, increment_moment(&a, &vec![0.0; a.len()], 2.0).unwrap())
            })
            .collect();
        let fit = hoelder_fit(&pairs, 2.0).unwrap();
        assert!((fit.exponent_estimate - beta).abs() < 0.03, "{fit:?}");
        assert_eq!(fit.lag_range, (0.5f64.powi(7), 0.25));
    }

    #[test]
    fn input_checks() {
        let ok: Vec<(f64, f64)> = dyadic_lags(0, 3).into_iter().map(|h| (h, h)).collect();
        assert!(hoelder_fit(&ok, 2.0).is_ok());
        assert!(hoelder_fit(&ok, 1.5).is_err());
        assert!(hoelder_fit(&ok[..3], 2.0).is_err());
        let mut bad = ok.clone();
        bad[1].1 = 0.0;
        assert!(matches!(hoelder_fit(&bad, 2.0), Err(Error::Data(_))));
        let narrow: Vec<(f64, f64)> = [1.0, 0.8, 0.6, 0.5].iter().map(|&h| (h, h)).collect();
        assert!(hoelder_fit(&narrow, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn exact_scaling_is_recovered(
            beta in 0.01f64..1.0,
            p in 2.0f64..6.0,
            c in 0.001f64..1000.0,
            k0 in 0u32..5,
            n in 4u32..8,
        ) {
            let pairs: Vec<(f64, f64)> = dyadic_lags(k0, k0 + n - 1)
                .into_iter()
                .map(|h| (h, c * h.powf(beta * p)))
                .collect();
            let fit = hoelder_fit(&pairs, p).unwrap();
            prop_assert!((fit.exponent_estimate - beta).abs() <= 3.0 * fit.standard_error + 1e-10);
        }
    }
}
