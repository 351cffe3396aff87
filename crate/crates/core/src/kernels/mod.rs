//! Heat Green kernels on the whole line and on `[0, 1]` with Dirichlet
//! boundary conditions, together with the quadratures behind their norm
//! estimates.
//!
//! The whole-line kernel is `G₁(t, z) = (4πt)^{-1/2} exp(-z²/4t)`. The
//! Dirichlet kernel on the unit interval is the method-of-images sum
//!
//! ```text
//! G₂(t, x, y) = (4πt)^{-1/2} Σₙ [exp(-(y-x-2n)²/4t) - exp(-(y+x-2n)²/4t)]
//! ```
//!
//! truncated to the symmetric range `|n| ≤ N`. Every function here is pure.

mod quadrature;

pub use quadrature::{composite, Estimate, QuadratureRule};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_QUADRATURE_POINTS: usize = 1024;
pub const DEFAULT_WINDOW_SDS: f64 = 10.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Target for the automatic image truncation.
const AUTO_TAIL_TARGET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelDomain {
    WholeLine,
    UnitIntervalDirichlet,
}

/// Which power of the kernel a time-integrated quantity uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelPower {
    /// `∫∫ G² dy ds`, the quantity the conditional-variance floor needs.
    Squared,
    /// `∫∫ G dy ds`.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub domain: KernelDomain,
    /// Image pairs kept in the Dirichlet sum. `None` selects, per time, the
    /// smallest `N ≥ 1` whose tail bound is below `1e-12`.
    #[serde(default)]
    pub image_truncation: Option<usize>,
    pub quadrature_points: usize,
    pub quadrature_rule: QuadratureRule,
    /// Half-width of the spatial integration window, in units of `√t`.
    #[serde(default = "default_window_sds")]
    pub window_sds: f64,
    /// Relative tolerance for window tails and quadrature error estimates.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_window_sds() -> f64 {
    DEFAULT_WINDOW_SDS
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl KernelSpec {
    pub fn new(domain: KernelDomain) -> Self {
        KernelSpec {
            domain,
            image_truncation: None,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            quadrature_rule: QuadratureRule::Simpson,
            window_sds: DEFAULT_WINDOW_SDS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn whole_line() -> Self {
        Self::new(KernelDomain::WholeLine)
    }

    pub fn dirichlet() -> Self {
        Self::new(KernelDomain::UnitIntervalDirichlet)
    }

    pub fn with_images(mut self, n: usize) -> Self {
        self.image_truncation = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(0) = self.image_truncation {
            return Err(Error::Config("image_truncation must be at least 1".into()));
        }
        if self.quadrature_points < 16 {
            return Err(Error::Config(format!(
                "quadrature_points = {} is below the minimum of 16",
                self.quadrature_points
            )));
        }
        if self.quadrature_rule == QuadratureRule::Simpson && self.quadrature_points % 2 != 0 {
            return Err(Error::Config("Simpson quadrature needs an even point count".into()));
        }
        if !(self.window_sds > 0.0) || !(self.tolerance > 0.0) {
            return Err(Error::Config("window_sds and tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Number of image pairs used at time `t`.
    pub fn images(&self, t: f64) -> usize {
        self.image_truncation.unwrap_or_else(|| auto_image_count(t))
    }

    fn check_point(&self, name: &str, x: f64) -> Result<()> {
        let ok = match self.domain {
            KernelDomain::WholeLine => x.is_finite(),
            KernelDomain::UnitIntervalDirichlet => (0.0..=1.0).contains(&x),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{name} = {x} is outside the spatial domain")))
        }
    }

    fn window(&self, t: f64, x: f64) -> (f64, f64) {
        let r = self.window_sds * t.sqrt();
        match self.domain {
            KernelDomain::WholeLine => (x - r, x + r),
            KernelDomain::UnitIntervalDirichlet => ((x - r).max(0.0), (x + r).min(1.0)),
        }
    }

    /// Relative mass outside the window for an integrand decaying like
    /// `exp(-decay · (y-x)²/t)`. Edges clipped by the Dirichlet walls
    /// carry no tail.
    fn window_tail(&self, t: f64, x: f64, decay: f64) -> f64 {
        let (a, b) = self.window(t, x);
        let r = self.window_sds * t.sqrt();
        let clipped = (a > x - r) as u8 + (b < x + r) as u8;
        if self.domain == KernelDomain::UnitIntervalDirichlet && clipped == 2 {
            return 0.0;
        }
        (-decay * self.window_sds * self.window_sds).exp()
    }

    fn eval_raw(&self, t: f64, x: f64, y: f64, images: usize) -> f64 {
        match self.domain {
            KernelDomain::WholeLine => g1_raw(t, x - y),
            KernelDomain::UnitIntervalDirichlet => g2_raw(t, x, y, images),
        }
    }

    fn dy_raw(&self, t: f64, x: f64, y: f64, images: usize) -> f64 {
        match self.domain {
            KernelDomain::WholeLine => g1_dy_raw(t, x, y),
            KernelDomain::UnitIntervalDirichlet => g2_dy_raw(t, x, y, images),
        }
    }

    fn accept(&self, what: &str, est: Estimate) -> Result<f64> {
        let scale = est.value.abs().max(f64::MIN_POSITIVE);
        if est.error > self.tolerance * scale {
            return Err(Error::Accuracy {
                what: what.to_string(),
                estimate: est.error / scale,
                tolerance: self.tolerance,
            });
        }
        Ok(est.value)
    }

    fn check_tail(&self, what: &str, tail: f64) -> Result<()> {
        if tail > self.tolerance {
            return Err(Error::Accuracy {
                what: format!("{what}: integration window of {} sds", self.window_sds),
                estimate: tail,
                tolerance: self.tolerance,
            });
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time t = {t} must be strictly positive")))
    }
}

/// Upper bound on the contribution of all image pairs with `|n| > images`.
///
/// For `x, y ∈ [0, 1]` each of the four exponentials carried by the pair
/// `±k` has an argument of magnitude at least `2k - 2`.
pub fn image_tail_bound(t: f64, images: usize) -> f64 {
    let c = 1.0 / (4.0 * PI * t).sqrt();
    let mut total = 0.0;
    let mut k = images + 1;
    loop {
        let d = 2.0 * k as f64 - 2.0;
        let term = 4.0 * c * (-d * d / (4.0 * t)).exp();
        total += term;
        if term <= total * 1e-17 || term == 0.0 {
            return total;
        }
        k += 1;
    }
}

fn auto_image_count(t: f64) -> usize {
    (1..)
        .find(|&n| image_tail_bound(t, n) < AUTO_TAIL_TARGET)
        .expect("tail bound decreases to zero")
}

#[inline]
fn g1_raw(t: f64, z: f64) -> f64 {
    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

#[inline]
fn g1_dy_raw(t: f64, x: f64, y: f64) -> f64 {
    -(y - x) / (2.0 * t) * g1_raw(t, x - y)
}

fn g2_raw(t: f64, x: f64, y: f64, images: usize) -> f64 {
    let inv = 1.0 / (4.0 * t);
    let n = images as i64;
    let mut acc = 0.0;
    for k in -n..=n {
        let s = 2.0 * k as f64;
        let a = y - x - s;
        let b = y + x - s;
        acc += (-a * a * inv).exp() - (-b * b * inv).exp();
    }
    acc / (4.0 * PI * t).sqrt()
}

fn g2_dy_raw(t: f64, x: f64, y: f64, images: usize) -> f64 {
    let inv = 1.0 / (4.0 * t);
    let n = images as i64;
    let mut acc = 0.0;
    for k in -n..=n {
        let s = 2.0 * k as f64;
        let a = y - x - s;
        let b = y + x - s;
        acc += b * (-b * b * inv).exp() - a * (-a * a * inv).exp();
    }
    acc / (2.0 * t) / (4.0 * PI * t).sqrt()
}

/// Whole-line heat kernel `G₁(t, z)`.
pub fn g1_eval(t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if !z.is_finite() {
        return Err(Error::Domain(format!("offset z = {z} is not finite")));
    }
    Ok(g1_raw(t, z))
}

/// Truncated Dirichlet image sum `G₂(t, x, y)`; `spec.domain` is ignored.
pub fn g2_eval(t: f64, x: f64, y: f64, spec: &KernelSpec) -> Result<f64> {
    check_time(t)?;
    let unit = KernelSpec {
        domain: KernelDomain::UnitIntervalDirichlet,
        ..spec.clone()
    };
    unit.check_point("x", x)?;
    unit.check_point("y", y)?;
    Ok(g2_raw(t, x, y, spec.images(t)))
}

/// Kernel of `spec.domain` between `x` and `y`.
pub fn kernel_eval(spec: &KernelSpec, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    spec.check_point("x", x)?;
    spec.check_point("y", y)?;
    Ok(spec.eval_raw(t, x, y, spec.images(t)))
}

/// Exact `∂/∂y` of the (truncated) closed form.
pub fn kernel_dy_eval(spec: &KernelSpec, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    spec.check_point("x", x)?;
    spec.check_point("y", y)?;
    Ok(spec.dy_raw(t, x, y, spec.images(t)))
}

/// `∫ G(t, x, y)² dy`. Equals `(8πt)^{-1/2}` on the whole line.
pub fn kernel_space_l2(spec: &KernelSpec, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    spec.validate()?;
    spec.check_point("x", x)?;
    spec.check_tail("kernel_space_l2", spec.window_tail(t, x, 0.5))?;
    let est = space_integral(spec, t, x, |g| g * g, |_| 1.0, &[]);
    spec.accept("kernel_space_l2", est)
}

/// `∫ |∂G(t, x, y)/∂y| dy`. Equals `(πt)^{-1/2}` on the whole line.
pub fn kernel_deriv_l1(spec: &KernelSpec, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    spec.validate()?;
    spec.check_point("x", x)?;
    spec.check_tail("kernel_deriv_l1", spec.window_tail(t, x, 0.25))?;

    let images = spec.images(t);
    let (a, b) = spec.window(t, x);
    let f = |y: f64| spec.dy_raw(t, x, y, images);

    // Integrate |∂G| piecewise between its sign changes so each piece is smooth.
    let mut cuts = vec![a];
    match spec.domain {
        KernelDomain::WholeLine => cuts.push(x),
        KernelDomain::UnitIntervalDirichlet => {
            let n = spec.quadrature_points;
            let h = (b - a) / n as f64;
            let mut prev = f(a);
            for i in 1..=n {
                let y = a + i as f64 * h;
                let cur = f(y);
                if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                    cuts.push(bisect_root(&f, y - h, y));
                }
                prev = cur;
            }
        }
    }
    cuts.push(b);

    let mut est = Estimate::default();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let share = ((spec.quadrature_points as f64 * len / (b - a)).ceil() as usize).max(16);
        let n = share + share % 2;
        est = est + composite(spec.quadrature_rule, w[0], w[1], n, |y| f(y).abs());
    }
    spec.accept("kernel_deriv_l1", est)
}

fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `∫ power(G(t, x, y)) · weight(y) dy` over the integration window, split
/// at any `breaks` falling inside it. Piecewise error estimates add up in
/// absolute value, so the split rule gets four times the points.
fn space_integral<P, W>(spec: &KernelSpec, t: f64, x: f64, power: P, weight: W, breaks: &[f64]) -> Estimate
where
    P: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    let images = spec.images(t);
    let (a, b) = spec.window(t, x);
    let f = |y: f64| power(spec.eval_raw(t, x, y, images)) * weight(y);
    if breaks.is_empty() {
        return composite(spec.quadrature_rule, a, b, spec.quadrature_points, f);
    }
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    let mut est = Estimate::default();
    for w in cuts.windows(2) {
        let share = (4.0 * spec.quadrature_points as f64 * (w[1] - w[0]) / (b - a)).ceil() as usize;
        est = est + composite(spec.quadrature_rule, w[0], w[1], share.max(16), &f);
    }
    est
}

/// `∫_{t-ε}^{t} ∫ G²(t-s, x, y) dy ds`. Equals `√(ε/2π)` on the whole line.
pub fn time_integrated_l2(spec: &KernelSpec, t: f64, eps: f64, x: f64) -> Result<f64> {
    time_integrated(spec, t, eps, x, KernelPower::Squared)
}

/// `∫_{t-ε}^{t} ∫ Gᵖ(t-s, x, y) dy ds` for `p` given by `power`.
///
/// The kernel is time-homogeneous, so only `ε` matters once `0 < ε ≤ t` is
/// checked. The outer integral uses the substitution `t - s = w²`, which
/// turns the `(t-s)^{-1/2}` singularity of the squared kernel into a
/// bounded integrand; on the whole line the inner integral is the exact
/// closed form.
pub fn time_integrated(
    spec: &KernelSpec,
    t: f64,
    eps: f64,
    x: f64,
    power: KernelPower,
) -> Result<f64> {
    check_time(t)?;
    check_window(t, eps)?;
    spec.validate()?;
    spec.check_point("x", x)?;

    match (spec.domain, power) {
        (KernelDomain::WholeLine, KernelPower::Squared) => {
            let est = outer_integral(spec, eps, x, |tau| Estimate {
                value: 1.0 / (8.0 * PI * tau).sqrt(),
                error: 0.0,
            });
            spec.accept("time_integrated_l2", est)
        }
        (KernelDomain::WholeLine, KernelPower::Plain) => Ok(eps),
        (KernelDomain::UnitIntervalDirichlet, KernelPower::Squared) => {
            spec.check_tail("time_integrated_l2", spec.window_tail(eps, x, 0.5))?;
            let est = outer_integral(spec, eps, x, |tau| {
                space_integral(spec, tau, x, |g| g * g, |_| 1.0, &[])
            });
            spec.accept("time_integrated_l2", est)
        }
        (KernelDomain::UnitIntervalDirichlet, KernelPower::Plain) => {
            spec.check_tail("time_integrated", spec.window_tail(eps, x, 0.25))?;
            let est = outer_integral_scaled(spec, eps, 0.0, |tau| {
                space_integral(spec, tau, x, |g| g, |_| 1.0, &[])
            });
            spec.accept("time_integrated", est)
        }
    }
}

/// `∫_0^ε ∫ G²(τ, x, y) · weight(y) dy dτ` for a nonnegative weight.
///
/// The inner integrals are split at `breaks`, where the weight may have
/// kinks. Without breaks the nodes are those of [`time_integrated_l2`], so a
/// pointwise bound `weight ≥ K` carries over to the discrete values exactly.
pub fn time_integrated_weighted<W: Fn(f64) -> f64>(
    spec: &KernelSpec,
    eps: f64,
    x: f64,
    weight: W,
    breaks: &[f64],
) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("window eps = {eps} must be positive")));
    }
    spec.validate()?;
    spec.check_point("x", x)?;
    spec.check_tail("time_integrated_weighted", spec.window_tail(eps, x, 0.5))?;
    let wx = weight(x);
    let limit_scale = if on_wall(spec, x) { 0.0 } else { wx };
    let est = outer_integral_scaled(spec, eps, limit_scale, |tau| {
        space_integral(spec, tau, x, |g| g * g, &weight, breaks)
    });
    spec.accept("time_integrated_weighted", est)
}

/// The kernel is time-homogeneous, so `ε = t` (the whole history) is allowed.
fn check_window(t: f64, eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= t {
        Ok(())
    } else {
        Err(Error::Domain(format!("window eps = {eps} must lie in (0, t = {t}]")))
    }
}

fn on_wall(spec: &KernelSpec, x: f64) -> bool {
    spec.domain == KernelDomain::UnitIntervalDirichlet && (x == 0.0 || x == 1.0)
}

fn outer_integral<F: Fn(f64) -> Estimate>(spec: &KernelSpec, eps: f64, x: f64, inner: F) -> Estimate {
    let scale = if on_wall(spec, x) { 0.0 } else { 1.0 };
    outer_integral_scaled(spec, eps, scale, inner)
}

/// `∫_0^ε inner(τ) dτ = ∫_0^{√ε} 2w · inner(w²) dw`; at `w = 0` the integrand
/// takes its limit `2 · limit_scale / √(8π)` (zero for the plain kernel,
/// whose inner integral stays bounded).
fn outer_integral_scaled<F: Fn(f64) -> Estimate>(
    spec: &KernelSpec,
    eps: f64,
    limit_scale: f64,
    inner: F,
) -> Estimate {
    let limit = 2.0 * limit_scale / (8.0 * PI).sqrt();
    let mut worst_rel = 0.0f64;
    let mut outer = composite(spec.quadrature_rule, 0.0, eps.sqrt(), spec.quadrature_points, |w| {
        if w == 0.0 {
            return limit;
        }
        let e = inner(w * w);
        if e.value != 0.0 {
            worst_rel = worst_rel.max(e.error / e.value.abs());
        }
        2.0 * w * e.value
    });
    outer.error += worst_rel * outer.value.abs();
    outer
}
