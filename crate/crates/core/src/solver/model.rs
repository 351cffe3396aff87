use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Scheme, SpaceTimeGrid};
use crate::error::{Error, Result};

/// Whole-line windows must clear the initial support by this many `√T`.
pub const WINDOW_MARGIN_SDS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Domain {
    /// `ℝ`, truncated to `[-half_width, half_width]` with zero boundary values.
    WholeLine { half_width: f64 },
    /// `[0, 1]` with homogeneous Dirichlet conditions.
    UnitInterval,
}

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::WholeLine { half_width } => (-half_width, half_width),
            Domain::UnitInterval => (0.0, 1.0),
        }
    }

    pub fn kernel_domain(&self) -> crate::kernels::KernelDomain {
        match self {
            Domain::WholeLine { .. } => crate::kernels::KernelDomain::WholeLine,
            Domain::UnitInterval => crate::kernels::KernelDomain::UnitIntervalDirichlet,
        }
    }
}

/// Flux `g` in the drift `-∂ₓ g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Drift {
    Zero,
    /// `g(u) = u²/2`.
    BurgersHalfSquare,
    /// `u²/2` on `|u| ≤ cap`, continued linearly beyond; Lipschitz with
    /// constant `cap`.
    CappedBurgers { cap: f64 },
}

impl Drift {
    pub fn g(&self, u: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::BurgersHalfSquare => 0.5 * u * u,
            Drift::CappedBurgers { cap } => {
                if u.abs() <= cap {
                    0.5 * u * u
                } else {
                    cap * u.abs() - 0.5 * cap * cap
                }
            }
        }
    }

    pub fn dg(&self, u: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::BurgersHalfSquare => u,
            Drift::CappedBurgers { cap } => u.clamp(-cap, cap),
        }
    }

    /// Global Lipschitz constant, if there is one.
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            Drift::Zero => Some(0.0),
            Drift::BurgersHalfSquare => None,
            Drift::CappedBurgers { cap } => Some(cap),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }
}

/// Spatial profile multiplying a diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Envelope {
    Flat,
    /// `exp(-x²/(2 width²))`, square-integrable on `ℝ`.
    Gaussian { width: f64 },
}

impl Envelope {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Envelope::Flat => 1.0,
            Envelope::Gaussian { width } => (-x * x / (2.0 * width * width)).exp(),
        }
    }
}

/// Diffusion coefficient `σ(x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Diffusion {
    Additive { value: f64 },
    /// `envelope(x) · (base + amplitude · sin u)`.
    SineModulated { base: f64, amplitude: f64, envelope: Envelope },
}

impl Diffusion {
    pub fn sigma(&self, x: f64, u: f64) -> f64 {
        match *self {
            Diffusion::Additive { value } => value,
            Diffusion::SineModulated { base, amplitude, envelope } => envelope.at(x) * (base + amplitude * u.sin()),
        }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Diffusion::Additive { .. })
    }

    /// Lower bound `K` on `σ²` over `domain`.
    pub fn lower_bound(&self, domain: &Domain) -> f64 {
        match *self {
            Diffusion::Additive { value } => value * value,
            Diffusion::SineModulated { base, amplitude, envelope } => {
                let core = (base.abs() - amplitude.abs()).max(0.0);
                let (a, b) = domain.bounds();
                let env = envelope.at(a.abs().max(b.abs()));
                (core * env).powi(2)
            }
        }
    }

    /// Lipschitz constant `L₁` in `u`, uniformly in `x`.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Diffusion::Additive { .. } => 0.0,
            Diffusion::SineModulated { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Uniform bound on `|σ|`.
    pub fn sup(&self) -> f64 {
        match *self {
            Diffusion::Additive { value } => value.abs(),
            Diffusion::SineModulated { base, amplitude, .. } => base.abs() + amplitude.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Profile {
    Zero,
    /// `amplitude · sin(πx)`.
    SinePi { amplitude: f64 },
    /// `amplitude · exp(-x²/(2 width²))`.
    Gaussian { amplitude: f64, width: f64 },
}

impl Profile {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::SinePi { amplitude } => amplitude * (std::f64::consts::PI * x).sin(),
            Profile::Gaussian { amplitude, width } => amplitude * (-x * x / (2.0 * width * width)).exp(),
        }
    }

    /// Radius outside which the profile is negligible (below `e^{-12.5}`
    /// relative), or `None` when it is not integrable on `ℝ`.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            Profile::Zero => Some(0.0),
            Profile::SinePi { .. } => None,
            Profile::Gaussian { width, .. } => Some(5.0 * width),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub profile: Profile,
    /// Declared Hölder exponent of the profile.
    pub hoelder_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub domain: Domain,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub initial: InitialCondition,
    pub horizon: f64,
}

impl ModelSpec {
    /// All violations, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            v.push(format!("horizon = {} must be positive", self.horizon));
        }
        let alpha = self.initial.hoelder_alpha;
        if !(alpha > 0.0 && alpha <= 1.0) {
            v.push(format!("initial hoelder_alpha = {alpha} must lie in (0, 1]"));
        }
        match self.domain {
            Domain::UnitInterval => {
                let ends = [self.initial.profile.at(0.0), self.initial.profile.at(1.0)];
                let scale = self.initial.profile.at(0.5).abs().max(1.0);
                if ends.iter().any(|e| e.abs() > 1e-12 * scale) {
                    v.push(format!("initial condition must vanish at 0 and 1 (got {:?})", ends));
                }
            }
            Domain::WholeLine { half_width } => match self.initial.profile.support_radius() {
                None => v.push("initial profile is not integrable on the whole line".into()),
                Some(r) => {
                    let need = r + WINDOW_MARGIN_SDS * self.horizon.max(0.0).sqrt();
                    if !(half_width >= need) {
                        v.push(format!(
                            "whole-line half_width = {half_width} is below support radius + 6√T = {need:.4}"
                        ));
                    }
                }
            },
        }
        match self.drift {
            Drift::CappedBurgers { cap } if !(cap > 0.0) => v.push(format!("drift cap = {cap} must be positive")),
            _ => {}
        }
        match self.diffusion {
            Diffusion::Additive { value } if !value.is_finite() => v.push("diffusion value must be finite".into()),
            Diffusion::SineModulated { base, amplitude, envelope } => {
                if !base.is_finite() || !amplitude.is_finite() {
                    v.push("diffusion base and amplitude must be finite".into());
                }
                if let Envelope::Gaussian { width } = envelope {
                    if !(width > 0.0) {
                        v.push(format!("envelope width = {width} must be positive"));
                    }
                }
            }
            _ => {}
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Grid with `n_space` cells over the (truncated) domain.
    pub fn grid(&self, n_space: usize, dt: f64, scheme: Scheme) -> Result<SpaceTimeGrid> {
        let (a, b) = self.domain.bounds();
        let grid = SpaceTimeGrid::covering(a, b - a, n_space, dt, self.horizon)?;
        grid.check_stability(scheme)?;
        Ok(grid)
    }

    /// Initial field on the grid nodes; boundary nodes are exactly zero.
    pub fn initial_field(&self, grid: &SpaceTimeGrid) -> Vec<f64> {
        let n = grid.n_space;
        (0..=n)
            .map(|i| if i == 0 || i == n { 0.0 } else { self.initial.profile.at(grid.x(i)) })
            .collect()
    }

    /// Check `σ² ≥ K` and `|σ(x,r) - σ(x,v)| ≤ L₁|r - v|` at random points.
    pub fn spot_check_diffusion(&self, samples: usize, seed: u64) -> Result<()> {
        let k = self.diffusion.lower_bound(&self.domain);
        let l1 = self.diffusion.lipschitz();
        let (a, b) = self.domain.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x = rng.random_range(a..=b);
            let r: f64 = rng.random_range(-20.0..20.0);
            let w: f64 = rng.random_range(-20.0..20.0);
            let (sr, sv) = (self.diffusion.sigma(x, r), self.diffusion.sigma(x, w));
            if sr * sr < k * (1.0 - 1e-12) {
                return Err(Error::Config(format!("σ²({x}, {r}) = {} is below K = {k}", sr * sr)));
            }
            if (sr - sv).abs() > l1 * (r - w).abs() * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::Config(format!("σ is not {l1}-Lipschitz at x = {x}")));
            }
        }
        Ok(())
    }
}
