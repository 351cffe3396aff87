use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::{AnalysisRequest, Band, ExperimentConfig};
use crate::analysis::{
    approx_error_curve, besov_functional, dyadic_lags, hoelder_fit, kde, log_log, moment_sup,
    smoothing_probe, EnsembleSamples, KdeOptions,
};
use crate::ensemble::{mean_and_se, run_ensemble};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelDomain, KernelSpec};
use crate::noise::SeedSpec;
use crate::solver::{simulate, Diffusion, Probe, SpaceTimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// No band was declared; the value is reported only.
    Reported,
    /// The analysis could not produce a value.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    pub status: Status,
}

impl Metric {
    fn new(name: impl Into<String>, value: f64, standard_error: Option<f64>, band: Option<Band>) -> Self {
        let status = match band {
            None => Status::Reported,
            Some(b) if b.contains(value) => Status::Pass,
            Some(_) => Status::Fail,
        };
        Metric { name: name.into(), value, standard_error, band, status }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisOutcome {
    pub index: usize,
    pub kind: String,
    pub status: Status,
    pub metrics: Vec<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub schema_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub provenance: Provenance,
    pub replicas: usize,
    pub replicas_failed: usize,
    pub failed_replica_ids: Vec<u64>,
    pub status: Status,
    pub analyses: Vec<AnalysisOutcome>,
}

/// Output files keyed by name, plus the parsed summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Summary,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Report {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.summary.status != Status::Fail && self.summary.status != Status::Error
    }
}

/// One row of an analysis CSV.
#[derive(Debug, Clone, Serialize)]
struct Row<'a> {
    config_hash: &'a str,
    analysis: String,
    quantity: &'a str,
    parameters: String,
    estimate: f64,
    standard_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct KernelRow<'a> {
    config_hash: &'a str,
    domain: &'a str,
    t: f64,
    x: f64,
    quantity: &'a str,
    value: f64,
    exponent_fit: f64,
}

/// Field value of one replica at one space-time point.
#[derive(Debug, Clone, Serialize)]
struct SampleRow<'a> {
    config_hash: &'a str,
    replica: u64,
    t: f64,
    x: f64,
    value: f64,
}

struct Csvs {
    hash: String,
    tables: BTreeMap<String, csv::Writer<Vec<u8>>>,
}

impl Csvs {
    fn table(&mut self, name: &str) -> &mut csv::Writer<Vec<u8>> {
        self.tables
            .entry(format!("{name}.csv"))
            .or_insert_with(|| csv::Writer::from_writer(Vec::new()))
    }

    fn row(&mut self, file: &str, analysis: &str, quantity: &str, parameters: String, estimate: f64, se: Option<f64>) -> Result<()> {
        let hash = self.hash.clone();
        self.table(file).serialize(Row {
            config_hash: &hash,
            analysis: analysis.into(),
            quantity,
            parameters,
            estimate,
            standard_error: se,
        })?;
        Ok(())
    }

    fn finish(self) -> Result<BTreeMap<String, Vec<u8>>> {
        let mut out = BTreeMap::new();
        for (name, w) in self.tables {
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            out.insert(name, bytes);
        }
        Ok(out)
    }
}

/// Samples per probe, in the order of `ExperimentConfig::all_probes`.
struct Ensemble {
    probes: Vec<Probe>,
    columns: Vec<Vec<f64>>,
}

impl Ensemble {
    fn samples(&self, probe: &Probe, tag: &str) -> Result<EnsembleSamples> {
        let i = self
            .probes
            .iter()
            .position(|p| (p.t - probe.t).abs() <= 1e-12 && (p.x - probe.x).abs() <= 1e-12)
            .ok_or_else(|| Error::Config(format!("probe ({}, {}) was not simulated", probe.t, probe.x)))?;
        EnsembleSamples::new(self.columns[i].clone(), *probe, tag)
    }
}

/// Validate, simulate the ensemble, run every requested analysis and
/// assemble the report in memory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let hash = config.hash();
    let grid = config.build_grid()?;
    let options = config.grid.options();
    let probes = config.all_probes();
    let mut csvs = Csvs { hash: hash.clone(), tables: BTreeMap::new() };
    let mut failed_ids = Vec::new();

    let ensemble = if probes.is_empty() {
        None
    } else {
        let outcome = run_ensemble(config.replicas, config.workers, |id| {
            simulate(&config.model, &grid, options, SeedSpec::solution(config.seed, id), &probes, None)
                .map(|tr| tr.probe_values)
        })?;
        failed_ids = outcome.failed.iter().map(|(id, _)| *id).collect();
        let mut columns = vec![Vec::with_capacity(outcome.ok.len()); probes.len()];
        for (id, values) in &outcome.ok {
            for (j, v) in values.iter().enumerate() {
                columns[j].push(*v);
                csvs.table("samples").serialize(SampleRow {
                    config_hash: &hash,
                    replica: *id,
                    t: probes[j].t,
                    x: probes[j].x,
                    value: *v,
                })?;
            }
        }
        Some(Ensemble { probes: probes.clone(), columns })
    };
    if let Some(every) = config.dump_snapshots {
        let tr = simulate(&config.model, &grid, options, SeedSpec::solution(config.seed, 0), &[], Some(every))?;
        for s in &tr.snapshots {
            for (i, v) in s.values.iter().enumerate() {
                csvs.table("snapshots").serialize(SampleRow {
                    config_hash: &hash,
                    replica: 0,
                    t: s.time,
                    x: grid.x(i),
                    value: *v,
                })?;
            }
        }
    }

    let mut analyses = Vec::with_capacity(config.analyses.len());
    for (index, request) in config.analyses.iter().enumerate() {
        let label = format!("{}#{index}", request.kind());
        let result = run_analysis(config, &grid, ensemble.as_ref(), request, &label, &mut csvs);
        let outcome = match result {
            Ok(metrics) => {
                let status = overall(metrics.iter().map(|m| m.status));
                AnalysisOutcome { index, kind: request.kind().into(), status, metrics, message: None }
            }
            Err(e @ (Error::TooManyFailures { .. } | Error::Io(_))) => return Err(e),
            Err(e) => AnalysisOutcome {
                index,
                kind: request.kind().into(),
                status: Status::Error,
                metrics: Vec::new(),
                message: Some(e.to_string()),
            },
        };
        analyses.push(outcome);
    }

    let summary = Summary {
        name: config.name.clone(),
        provenance: Provenance {
            config_hash: hash,
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: config.schema_version,
        },
        replicas: config.replicas,
        replicas_failed: failed_ids.len(),
        failed_replica_ids: failed_ids,
        status: overall(analyses.iter().map(|a| a.status)),
        analyses,
    };
    let mut files = csvs.finish()?;
    files.insert("config.json".into(), config.canonical().to_json().into_bytes());
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    files.insert("summary.json".into(), text.into_bytes());
    Ok(Report { summary, files })
}

/// Run and write into `config.output_dir`.
pub fn run_and_write(config: &ExperimentConfig) -> Result<Report> {
    let report = run_experiment(config)?;
    report.write(&config.output_dir)?;
    Ok(report)
}

fn overall(statuses: impl Iterator<Item = Status>) -> Status {
    let mut out = Status::Reported;
    for s in statuses {
        out = match (out, s) {
            (Status::Error, _) | (_, Status::Error) => Status::Error,
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Pass, _) | (_, Status::Pass) => Status::Pass,
            _ => Status::Reported,
        };
    }
    out
}

fn need_ensemble(e: Option<&Ensemble>) -> Result<&Ensemble> {
    e.ok_or_else(|| Error::Config("analysis needs a simulated ensemble".into()))
}

fn kernel_spec(domain: KernelDomain) -> KernelSpec {
    match domain {
        KernelDomain::WholeLine => KernelSpec::whole_line(),
        KernelDomain::UnitIntervalDirichlet => KernelSpec::dirichlet(),
    }
}

fn run_analysis(
    config: &ExperimentConfig,
    grid: &SpaceTimeGrid,
    ensemble: Option<&Ensemble>,
    request: &AnalysisRequest,
    label: &str,
    csvs: &mut Csvs,
) -> Result<Vec<Metric>> {
    let tag = config.name.as_str();
    match request {
        AnalysisRequest::Hoelder { t, x, lags, p, target, tolerance } => {
            let ens = need_ensemble(ensemble)?;
            let now = ens.samples(&Probe::new(*t, *x), tag)?;
            let band = target.map(|tg| Band::around(tg.resolve(config.model.initial.hoelder_alpha), *tolerance));
            let mut metrics = Vec::new();
            for &p in p {
                let mut pairs = Vec::with_capacity(lags.len());
                for &h in lags {
                    let before = ens.samples(&Probe::new(t - h, *x), tag)?;
                    let terms: Vec<f64> =
                        now.values.iter().zip(&before.values).map(|(a, b)| (a - b).abs().powf(p)).collect();
                    let (m, se) = mean_and_se(&terms);
                    csvs.row("hoelder", label, "increment_moment", format!("p={p} h={h}"), m, Some(se))?;
                    pairs.push((h, m));
                }
                let fit = hoelder_fit(&pairs, p)?;
                csvs.row("hoelder", label, "exponent", format!("p={p}"), fit.exponent_estimate, Some(fit.standard_error))?;
                metrics.push(Metric::new(format!("beta_p{p}"), fit.exponent_estimate, Some(fit.standard_error), band));
            }
            Ok(metrics)
        }
        AnalysisRequest::Besov { probe, s, order, j_min, j_max, kde: opts, drift_band } => {
            let samples = need_ensemble(ensemble)?.samples(probe, tag)?;
            let finest = 0.5f64.powi(*j_max as i32);
            let opts = KdeOptions {
                bandwidth: opts.bandwidth,
                max_step: Some(opts.max_step.map_or(finest, |m| m.min(finest))),
            };
            let density = kde(&samples, opts)?;
            for (x, f) in density.grid().iter().zip(&density.density_values) {
                csvs.row("density", label, "density", format!("x={x}"), *f, None)?;
            }
            let f = density.as_sampled();
            let mut totals = Vec::new();
            for j in *j_min..=*j_max {
                let b = besov_functional(&f, *s, *order, &dyadic_lags(0, j))?;
                for (h, term) in &b.per_lag {
                    csvs.row("besov", label, "lag_term", format!("s={s} n={} j={j} h={h}", b.order), *term, None)?;
                }
                csvs.row("besov", label, "total", format!("s={s} n={} j={j}", b.order), b.total, None)?;
                totals.push(b.total);
            }
            let drift = totals.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).fold(0.0, f64::max);
            Ok(vec![
                Metric::new("l1_norm", f.l1_norm(), None, None),
                Metric::new("total_finest", *totals.last().expect("j_max > j_min"), None, None),
                Metric::new("max_relative_drift", drift, None, *drift_band),
                Metric::new("bandwidth", density.bandwidth, None, None),
            ])
        }
        AnalysisRequest::Smoothing { probe, phi, m, lags, band } => {
            let samples = need_ensemble(ensemble)?.samples(probe, tag)?;
            let fit = smoothing_probe(&samples, phi, *m, lags)?;
            for l in &fit.lags {
                let q = if l.excluded { "increment_mean_excluded" } else { "increment_mean" };
                csvs.row("smoothing", label, q, format!("m={m} h={}", l.h), l.mean, Some(l.standard_error))?;
            }
            csvs.row("smoothing", label, "slope", format!("m={m} gamma={}", fit.gamma), fit.slope, Some(fit.standard_error))?;
            Ok(vec![
                Metric::new("slope", fit.slope, Some(fit.standard_error), *band),
                Metric::new("certifies", f64::from(u8::from(fit.certifies)), None, None),
            ])
        }
        AnalysisRequest::AuxError { t, x, eps, replicas, band } => {
            let curve = approx_error_curve(
                &config.model,
                grid,
                config.grid.options(),
                config.seed,
                replicas.unwrap_or(config.replicas),
                config.workers,
                *t,
                *x,
                eps,
            )?;
            for p in &curve.points {
                let q = if p.excluded { "mean_abs_error_excluded" } else { "mean_abs_error" };
                csvs.row("aux_error", label, q, format!("eps={}", p.eps), p.mean_abs_error, Some(p.standard_error))?;
            }
            let max_err = curve.points.iter().map(|p| p.mean_abs_error).fold(0.0, f64::max);
            let mut metrics = vec![Metric::new("max_mean_abs_error", max_err, None, None)];
            match curve.fit {
                Some(fit) => {
                    csvs.row("aux_error", label, "slope", String::new(), fit.slope, Some(fit.slope_se))?;
                    metrics.push(Metric::new("slope", fit.slope, Some(fit.slope_se), *band));
                }
                None => metrics.push(Metric::new("slope", f64::NAN, None, *band)),
            }
            Ok(metrics)
        }
        AnalysisRequest::KernelCheck { domain, x, t, t_integral, eps, band, integral_band } => {
            let spec = kernel_spec(*domain);
            let name = match domain {
                KernelDomain::WholeLine => "whole_line",
                KernelDomain::UnitIntervalDirichlet => "dirichlet",
            };
            let l2: Vec<f64> = t.iter().map(|&t| kernels::kernel_space_l2(&spec, t, *x)).collect::<Result<_>>()?;
            let d1: Vec<f64> = t.iter().map(|&t| kernels::kernel_deriv_l1(&spec, t, *x)).collect::<Result<_>>()?;
            let ti: Vec<f64> =
                eps.iter().map(|&e| kernels::time_integrated_l2(&spec, *t_integral, e, *x)).collect::<Result<_>>()?;
            let (f_l2, f_d1, f_ti) = (log_log(t, &l2)?, log_log(t, &d1)?, log_log(eps, &ti)?);
            let hash = csvs.hash.clone();
            let w = csvs.table("kernel_check");
            for (quantity, abscissae, values, fit) in [
                ("space_l2", t, &l2, &f_l2),
                ("deriv_l1", t, &d1, &f_d1),
                ("time_integrated_l2_window", eps, &ti, &f_ti),
            ] {
                for (a, v) in abscissae.iter().zip(values.iter()) {
                    w.serialize(KernelRow {
                        config_hash: &hash,
                        domain: name,
                        t: *a,
                        x: *x,
                        quantity,
                        value: *v,
                        exponent_fit: fit.slope,
                    })?;
                }
            }
            Ok(vec![
                Metric::new("space_l2_exponent", f_l2.slope, Some(f_l2.slope_se), *band),
                Metric::new("deriv_l1_exponent", f_d1.slope, Some(f_d1.slope_se), *band),
                Metric::new("time_integrated_l2_exponent", f_ti.slope, Some(f_ti.slope_se), *integral_band),
            ])
        }
        AnalysisRequest::Moments { p, isometry_band } => {
            let ens = need_ensemble(ensemble)?;
            let all: Vec<EnsembleSamples> =
                ens.probes.iter().map(|pr| ens.samples(pr, tag)).collect::<Result<_>>()?;
            let mut metrics = Vec::new();
            for &p in p {
                let m = moment_sup(&all, p)?;
                for (probe, v) in &m.per_probe {
                    csvs.row("moments", label, "abs_moment", format!("p={p} t={} x={}", probe.t, probe.x), *v, None)?;
                }
                metrics.push(Metric::new(format!("sup_p{p}"), m.sup, None, None));
            }
            if let Some(z) = isometry_z(config, &all, label, csvs)? {
                metrics.push(Metric::new("isometry_max_z", z, None, *isometry_band));
            } else if isometry_band.is_some() {
                return Err(Error::Config("isometry check needs additive noise and zero drift".into()));
            }
            Ok(metrics)
        }
    }
}

/// Largest `|Var u(t,x) - σ²∫∫G²| / SE` over probes with `t > 0`, for
/// additive noise and zero drift; `None` otherwise.
fn isometry_z(config: &ExperimentConfig, all: &[EnsembleSamples], label: &str, csvs: &mut Csvs) -> Result<Option<f64>> {
    let sigma = match config.model.diffusion {
        Diffusion::Additive { value } if config.model.drift.is_zero() => value,
        _ => return Ok(None),
    };
    let spec = kernel_spec(config.model.domain.kernel_domain());
    let mut worst: Option<f64> = None;
    for e in all.iter().filter(|e| e.probe.t > 0.0) {
        let n = e.values.len() as f64;
        let (mean, _) = mean_and_se(&e.values);
        let d2: Vec<f64> = e.values.iter().map(|v| (v - mean).powi(2)).collect();
        let d4: Vec<f64> = d2.iter().map(|v| v * v).collect();
        let (m2, _) = mean_and_se(&d2);
        let (m4, _) = mean_and_se(&d4);
        let var = m2 * n / (n - 1.0);
        let se = ((m4 - m2 * m2) / n).sqrt();
        let reference = sigma * sigma * kernels::time_integrated_l2(&spec, e.probe.t, e.probe.t, e.probe.x)?;
        let params = format!("t={} x={}", e.probe.t, e.probe.x);
        csvs.row("moments", label, "variance", params.clone(), var, Some(se))?;
        csvs.row("moments", label, "isometry_reference", params, reference, None)?;
        let z = (var - reference).abs() / se;
        worst = Some(worst.map_or(z, |w| w.max(z)));
    }
    Ok(worst)
}
