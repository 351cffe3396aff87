use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{KdeOptions, TestFunction};
use crate::error::{Error, Result};
use crate::kernels::KernelDomain;
use crate::solver::{resolve_probes, Flux, ModelSpec, Probe, Scheme, SolverOptions, SpaceTimeGrid};

pub const SCHEMA_VERSION: u32 = 1;

/// Acceptance band `[min, max]`; either side may be open.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Band {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Band {
    pub fn around(target: f64, tol: f64) -> Self {
        Band { min: Some(target - tol), max: Some(target + tol) }
    }

    pub fn at_least(min: f64) -> Self {
        Band { min: Some(min), max: None }
    }

    pub fn below(max: f64) -> Self {
        Band { min: None, max: Some(max) }
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n_space: usize,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub flux: Flux,
}

impl GridParams {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { scheme: self.scheme, flux: self.flux }
    }
}

/// Target exponent for a Hölder fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoelderTarget {
    /// Fixed target.
    Value { value: f64 },
    /// `α/2 ∧ (1/4 - 1/(2q))` from the initial datum's `α` and the
    /// integrability exponent `q` of the envelope bounding `σ`; `None` means
    /// the envelope lies in every `Lᵠ`.
    Theorem { q: Option<f64> },
}

impl HoelderTarget {
    pub fn resolve(&self, alpha: f64) -> f64 {
        match *self {
            HoelderTarget::Value { value } => value,
            HoelderTarget::Theorem { q } => {
                let spatial = 0.25 - q.map_or(0.0, |q| 0.5 / q);
                (alpha / 2.0).min(spatial)
            }
        }
    }
}

/// One requested analysis with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisRequest {
    /// Fit `E|u(t,x) - u(t-h,x)|^p ~ h^{βp}` over the lags.
    Hoelder {
        t: f64,
        x: f64,
        lags: Vec<f64>,
        p: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<HoelderTarget>,
        #[serde(default)]
        tolerance: f64,
    },
    /// Discrete Besov functional of the density estimate at a probe,
    /// evaluated on the nested lag sets `{2^0, ..., 2^{-j}}`.
    Besov {
        probe: Probe,
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
        j_min: u32,
        j_max: u32,
        #[serde(default)]
        kde: KdeOptions,
        /// Band on the largest relative change between consecutive lag sets.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift_band: Option<Band>,
    },
    Smoothing {
        probe: Probe,
        phi: TestFunction,
        m: usize,
        lags: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        band: Option<Band>,
    },
    /// Frozen-coefficient error curve; runs its own coupled ensemble.
    AuxError {
        t: f64,
        x: f64,
        eps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        band: Option<Band>,
    },
    /// Exponent fits of the kernel norms; needs no simulation.
    KernelCheck {
        domain: KernelDomain,
        x: f64,
        t: Vec<f64>,
        /// Horizon for the time-integrated norm; windows are `eps`.
        t_integral: f64,
        eps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        band: Option<Band>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        integral_band: Option<Band>,
    },
    /// Empirical `E|u|^p` at every configured probe; for additive noise and
    /// zero drift the variance is also compared with the isometry value.
    Moments {
        p: Vec<f64>,
        /// Band on `|Var - reference| / SE` when a reference exists.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        isometry_band: Option<Band>,
    },
}

impl AnalysisRequest {
    pub fn kind(&self) -> &'static str {
        match self {
            AnalysisRequest::Hoelder { .. } => "hoelder",
            AnalysisRequest::Besov { .. } => "besov",
            AnalysisRequest::Smoothing { .. } => "smoothing",
            AnalysisRequest::AuxError { .. } => "aux_error",
            AnalysisRequest::KernelCheck { .. } => "kernel_check",
            AnalysisRequest::Moments { .. } => "moments",
        }
    }

    /// Probes this analysis reads from the main ensemble.
    pub fn probes(&self) -> Vec<Probe> {
        match self {
            AnalysisRequest::Hoelder { t, x, lags, .. } => std::iter::once(Probe::new(*t, *x))
                .chain(lags.iter().map(|h| Probe::new(t - h, *x)))
                .collect(),
            AnalysisRequest::Besov { probe, .. } | AnalysisRequest::Smoothing { probe, .. } => vec![*probe],
            _ => Vec::new(),
        }
    }

    fn violations(&self, index: usize, model: &ModelSpec) -> Vec<String> {
        let tag = format!("analysis {index} ({})", self.kind());
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(format!("{tag}: {msg}"));
            }
        };
        match self {
            AnalysisRequest::Hoelder { t, lags, p, .. } => {
                need(lags.len() >= 4, format!("needs at least 4 lags, got {}", lags.len()));
                need(lags.iter().all(|h| *h > 0.0 && h < t), "lags must lie in (0, t)".into());
                need(!p.is_empty() && p.iter().all(|p| *p >= 2.0), "moment orders p must be ≥ 2".into());
            }
            AnalysisRequest::Besov { s, order, j_min, j_max, .. } => {
                need(*s > 0.0, format!("s = {s} must be positive"));
                let n = order.unwrap_or_else(|| crate::analysis::default_order(*s));
                need((n as f64) > *s, format!("order n = {n} must exceed s = {s}"));
                need(j_max > j_min, "j_max must exceed j_min".into());
            }
            AnalysisRequest::Smoothing { phi, m, lags, .. } => {
                need(*m >= 1, "m must be at least 1".into());
                need(lags.len() >= 3 && lags.iter().all(|h| *h > 0.0), "needs ≥ 3 positive lags".into());
                if let Err(e) = phi.validate() {
                    need(false, e.to_string());
                }
            }
            AnalysisRequest::AuxError { t, eps, replicas, .. } => {
                need(eps.len() >= 3, "needs at least 3 windows".into());
                need(eps.iter().all(|e| *e > 0.0 && *e < t / 2.0), format!("windows must lie in (0, t/2 = {})", t / 2.0));
                need(*t <= model.horizon, format!("t = {t} exceeds the horizon"));
                need(replicas.is_none_or(|r| r >= 2), "needs at least 2 replicas".into());
            }
            AnalysisRequest::KernelCheck { t, t_integral, eps, .. } => {
                need(t.len() >= 2 && t.iter().all(|t| *t > 0.0), "needs ≥ 2 positive times".into());
                need(eps.len() >= 2 && eps.iter().all(|e| *e > 0.0 && e <= t_integral), "windows must lie in (0, t_integral]".into());
            }
            AnalysisRequest::Moments { p, .. } => {
                need(!p.is_empty() && p.iter().all(|p| *p >= 2.0), "moment orders p must be ≥ 2".into());
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub model: ModelSpec,
    pub grid: GridParams,
    pub seed: u64,
    pub replicas: usize,
    /// Worker threads; does not affect any output.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub analyses: Vec<AnalysisRequest>,
    /// Record every field snapshot of replica 0 this many steps apart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_snapshots: Option<usize>,
    #[serde(default)]
    pub output_dir: PathBuf,
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn build_grid(&self) -> Result<SpaceTimeGrid> {
        self.model.grid(self.grid.n_space, self.grid.dt, self.grid.scheme)
    }

    /// Configured probes followed by those the analyses need, deduplicated
    /// in order of first appearance.
    pub fn all_probes(&self) -> Vec<Probe> {
        let mut out: Vec<Probe> = Vec::new();
        let extra = self.analyses.iter().flat_map(|a| a.probes());
        for p in self.probes.iter().copied().chain(extra) {
            if !out.iter().any(|q| same_point(q, &p)) {
                out.push(p);
            }
        }
        out
    }

    pub fn needs_simulation(&self) -> bool {
        !self.all_probes().is_empty()
    }

    /// Every violation found, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.replicas == 0 {
            v.push("replicas must be positive".into());
        }
        if self.workers == 0 {
            v.push("workers must be positive".into());
        }
        v.extend(self.model.violations());
        match self.build_grid() {
            Err(e) => v.push(e.to_string()),
            Ok(grid) => {
                if let Err(Error::InvalidConfig(bad)) = resolve_probes(&grid, &self.all_probes()) {
                    v.extend(bad);
                }
                for a in &self.analyses {
                    if let AnalysisRequest::AuxError { t, x, eps, .. } = a {
                        if grid.step_of(*t).is_none() || grid.node_of(*x).is_none() {
                            v.push(format!("aux_error probe (t = {t}, x = {x}) is not a grid point"));
                        }
                        for e in eps {
                            if grid.step_of(*e).is_none() {
                                v.push(format!("aux_error window {e} is not a multiple of dt = {}", grid.dt));
                            }
                        }
                    }
                }
            }
        }
        if self.dump_snapshots == Some(0) {
            v.push("dump_snapshots must be positive".into());
        }
        for (i, a) in self.analyses.iter().enumerate() {
            v.extend(a.violations(i, &self.model));
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

    /// SHA-256 of the canonical JSON form with `workers` and `output_dir`
    /// cleared, so neither affects the hash.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical()).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Copy with the settings that do not affect results reset.
    pub fn canonical(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.workers = 1;
        c.output_dir = PathBuf::new();
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn same_point(a: &Probe, b: &Probe) -> bool {
    (a.t - b.t).abs() <= 1e-12 * a.t.abs().max(1.0) && (a.x - b.x).abs() <= 1e-12 * a.x.abs().max(1.0)
}

/// Parse and validate a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(vec![format!("malformed document: {e}")]))?;
    config.validate()?;
    Ok(config)
}
