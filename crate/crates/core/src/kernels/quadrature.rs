use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Midpoint,
    #[default]
    Simpson,
}

/// A quadrature value with an a-posteriori error estimate from step halving.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

/// Composite rule on `[a, b]` with `n` subintervals.
///
/// Simpson rounds `n` up to a multiple of four so the half-resolution
/// estimate can reuse the even nodes.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: QuadratureRule,
    a: f64,
    b: f64,
    n: usize,
    mut f: F,
) -> Estimate {
    if b <= a {
        return Estimate::default();
    }
    match rule {
        QuadratureRule::Simpson => {
            let n = n.max(4).next_multiple_of(4);
            let h = (b - a) / n as f64;
            let values: Vec<f64> = (0..=n).map(|i| f(a + i as f64 * h)).collect();
            let fine = simpson_sum(&values, 1) * h / 3.0;
            let coarse = simpson_sum(&values, 2) * 2.0 * h / 3.0;
            Estimate {
                value: fine,
                error: (fine - coarse).abs() / 15.0,
            }
        }
        QuadratureRule::Midpoint => {
            let n = n.max(2);
            let fine = midpoint(a, b, n, &mut f);
            let coarse = midpoint(a, b, n / 2, &mut f);
            Estimate {
                value: fine,
                error: (fine - coarse).abs() / 3.0,
            }
        }
    }
}

fn simpson_sum(values: &[f64], stride: usize) -> f64 {
    let m = (values.len() - 1) / stride;
    let mut acc = values[0] + values[m * stride];
    for j in 1..m {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * values[j * stride];
    }
    acc
}

fn midpoint<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, f: &mut F) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let est = composite(QuadratureRule::Simpson, -1.0, 2.0, 8, |x| x * x * x - x + 1.0);
        // ∫_{-1}^{2} x³ - x + 1 dx = 15/4 - 3/2 + 3
        assert!((est.value - 5.25).abs() < 1e-13);
        assert!(est.error < 1e-13);
    }

    #[test]
    fn midpoint_error_estimate_tracks_true_error() {
        let est = composite(QuadratureRule::Midpoint, 0.0, 1.0, 64, f64::exp);
        let truth = std::f64::consts::E - 1.0;
        let err = (est.value - truth).abs();
        assert!(err < 1e-4);
        assert!(est.error > 0.5 * err && est.error < 2.0 * err);
    }

    #[test]
    fn point_counts_are_rounded_up() {
        let est = composite(QuadratureRule::Simpson, 0.0, 1.0, 7, |x| x * x);
        assert!((est.value - 1.0 / 3.0).abs() < 1e-14);
    }
}
