//! Shipped desk-scale experiments.

use std::path::PathBuf;

use super::config::{AnalysisRequest, Band, ExperimentConfig, GridParams, HoelderTarget, SCHEMA_VERSION};
use crate::analysis::{dyadic_lags, KdeOptions, TestFunction};
use crate::error::{Error, Result};
use crate::kernels::KernelDomain;
use crate::noise::DEFAULT_MASTER_SEED;
use crate::solver::{
    Diffusion, Domain, Drift, Envelope, Flux, InitialCondition, ModelSpec, Probe, Profile, Scheme,
};

pub const PRESET_NAMES: [&str; 6] = [
    "heat-dirichlet-hoelder",
    "heat-whole-line",
    "burgers-whole-line",
    "burgers-lipschitz-interval",
    "kernel-norms",
    "smoothing-gaussian",
];

/// Probe time shared by the simulation presets.
const T_PROBE: f64 = 0.125;
/// `dt = 1/8192` keeps `dt/dx² = 1/2` at `dx = 1/64`.
const DT: f64 = 1.0 / 8192.0;
const WHOLE_LINE_HALF_WIDTH: f64 = 3.5;

fn grid(n_space: usize) -> GridParams {
    GridParams { n_space, dt: DT, scheme: Scheme::CrankNicolson, flux: Flux::Central }
}

fn base(name: &str, model: ModelSpec, grid: GridParams, replicas: usize) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        model,
        grid,
        seed: DEFAULT_MASTER_SEED,
        replicas,
        workers: 1,
        probes: Vec::new(),
        analyses: Vec::new(),
        dump_snapshots: None,
        output_dir: PathBuf::new(),
    }
}

fn heat_interval_additive() -> ModelSpec {
    ModelSpec {
        domain: Domain::UnitInterval,
        drift: Drift::Zero,
        diffusion: Diffusion::Additive { value: 1.0 },
        initial: InitialCondition { profile: Profile::SinePi { amplitude: 1.0 }, hoelder_alpha: 1.0 },
        horizon: T_PROBE,
    }
}

fn whole_line(drift: Drift) -> ModelSpec {
    ModelSpec {
        domain: Domain::WholeLine { half_width: WHOLE_LINE_HALF_WIDTH },
        drift,
        diffusion: Diffusion::SineModulated {
            base: 1.0,
            amplitude: 0.5,
            envelope: Envelope::Gaussian { width: 1.0 },
        },
        initial: InitialCondition {
            profile: Profile::Gaussian { amplitude: 1.0, width: 0.25 },
            hoelder_alpha: 1.0,
        },
        horizon: T_PROBE,
    }
}

fn hoelder(x: f64) -> AnalysisRequest {
    AnalysisRequest::Hoelder {
        t: T_PROBE,
        x,
        lags: dyadic_lags(5, 8),
        p: vec![2.0, 4.0],
        // The Gaussian envelope lies in every Lᵠ.
        target: Some(HoelderTarget::Theorem { q: None }),
        tolerance: 0.05,
    }
}

fn moments(isometry: bool) -> AnalysisRequest {
    AnalysisRequest::Moments {
        p: vec![2.0, 4.0],
        isometry_band: isometry.then(|| Band::below(3.0)),
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let config = match name {
        "heat-dirichlet-hoelder" => {
            let mut c = base(name, heat_interval_additive(), grid(64), 10_000);
            c.probes = vec![Probe::new(T_PROBE, 0.5), Probe::new(T_PROBE, 0.25)];
            c.analyses = vec![hoelder(0.5), moments(true)];
            c
        }
        "heat-whole-line" => {
            let mut c = base(name, whole_line(Drift::Zero), grid(448), 2_000);
            c.probes = vec![Probe::new(T_PROBE, 0.0)];
            c.analyses = vec![hoelder(0.0), moments(false)];
            c
        }
        "burgers-whole-line" => {
            let mut c = base(name, whole_line(Drift::BurgersHalfSquare), grid(448), 10_000);
            c.probes = vec![Probe::new(T_PROBE, 0.0)];
            c.analyses = vec![hoelder(0.0), moments(false)];
            c
        }
        "burgers-lipschitz-interval" => {
            let model = ModelSpec {
                domain: Domain::UnitInterval,
                drift: Drift::CappedBurgers { cap: 2.0 },
                diffusion: Diffusion::SineModulated { base: 1.0, amplitude: 0.5, envelope: Envelope::Flat },
                initial: InitialCondition { profile: Profile::SinePi { amplitude: 1.0 }, hoelder_alpha: 1.0 },
                horizon: T_PROBE,
            };
            let mut c = base(name, model, grid(64), 2_000);
            c.probes = vec![Probe::new(T_PROBE, 0.5)];
            c.analyses = vec![
                hoelder(0.5),
                AnalysisRequest::AuxError {
                    t: T_PROBE,
                    x: 0.5,
                    eps: dyadic_lags(5, 8),
                    replicas: Some(1_000),
                    band: Some(Band::at_least(0.6)),
                },
            ];
            c
        }
        "kernel-norms" => {
            let mut c = base(name, heat_interval_additive(), grid(64), 1);
            c.analyses = vec![
                AnalysisRequest::KernelCheck {
                    domain: KernelDomain::UnitIntervalDirichlet,
                    x: 0.5,
                    t: dyadic_lags(6, 12),
                    t_integral: 0.25,
                    eps: dyadic_lags(6, 12),
                    band: Some(Band::around(-0.5, 0.02)),
                    integral_band: Some(Band::around(0.5, 0.02)),
                },
                AnalysisRequest::KernelCheck {
                    domain: KernelDomain::WholeLine,
                    x: 0.0,
                    t: vec![0.01, 0.1, 1.0],
                    t_integral: 1.0,
                    eps: vec![0.25, 0.0625, 0.015625],
                    band: Some(Band::around(-0.5, 0.02)),
                    integral_band: Some(Band::around(0.5, 0.02)),
                },
            ];
            c
        }
        "smoothing-gaussian" => {
            let mut c = base(name, heat_interval_additive(), grid(64), 10_000);
            let probe = Probe::new(T_PROBE, 0.5);
            c.probes = vec![probe];
            c.analyses = vec![
                AnalysisRequest::Smoothing {
                    probe,
                    phi: TestFunction::Sin,
                    m: 4,
                    lags: dyadic_lags(1, 4),
                    band: Some(Band::at_least(1.2)),
                },
                AnalysisRequest::Besov {
                    probe,
                    s: 0.4,
                    order: None,
                    j_min: 3,
                    j_max: 6,
                    kde: KdeOptions::default(),
                    drift_band: Some(Band::below(0.1)),
                },
                moments(true),
            ];
            c
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset '{name}'; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(config)
}
