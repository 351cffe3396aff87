use serde::Serialize;

use crate::error::{Error, Result};

/// Ordinary least squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when only two points are fitted.
    pub slope_se: f64,
    pub n: usize,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Data("regression inputs differ in length".into()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("a line needs two points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Data("regression inputs must be finite".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit { slope, intercept, slope_se, n })
}

/// OLS of `ln y` against `ln x`.
pub fn log_log(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Data("log-log regression needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

/// `max/min` of a set of positive lags.
pub(crate) fn span_ratio(lags: &[f64]) -> f64 {
    let max = lags.iter().cloned().fold(f64::MIN, f64::max);
    let min = lags.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_zero_error() {
        let fit = ols(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-15);
        assert!((fit.intercept - 1.0).abs() < 1e-15);
        assert!(fit.slope_se < 1e-15);
    }

    #[test]
    fn slope_error_matches_textbook_formula() {
        // Fitted line 0.6 + 0.6x; Sxx = 5.
        let fit = ols(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.0, 3.0, 2.0]).unwrap();
        assert!((fit.slope - 0.6).abs() < 1e-12);
        assert!((fit.intercept - 0.6).abs() < 1e-12);
        let resid = [0.4f64, -1.2, 1.2, -0.4];
        let expected = (resid.iter().map(|r| r * r).sum::<f64>() / 2.0 / 5.0).sqrt();
        assert!((fit.slope_se - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(ols(&[1.0], &[1.0]).is_err());
        assert!(ols(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(log_log(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
