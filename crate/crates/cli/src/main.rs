use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use spde_density::analysis::dyadic_lags;
use spde_density::harness::{
    parse_config, preset, run_and_write, AnalysisRequest, Band, ExperimentConfig, Report, Status, PRESET_NAMES,
};
use spde_density::kernels::KernelDomain;

#[derive(Parser)]
#[command(name = "spde-density", version, about = "Simulate SPDE ensembles and check their regularity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Master seed for every replica stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo replicas.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; defaults to `out/<experiment name>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the field of replica 0 every N steps to snapshots.csv.
    #[arg(long, global = true, value_name = "N")]
    dump_snapshots: Option<usize>,
}

#[derive(Args, Clone)]
struct Source {
    /// Shipped preset to start from.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Dirichlet,
    WholeLine,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the time exponents of the kernel norms.
    KernelCheck {
        #[arg(long, value_enum, default_value = "dirichlet")]
        domain: DomainArg,
        #[arg(long, default_value_t = 0.5)]
        x: f64,
        /// Times 2^-k for k in [kmin, kmax].
        #[arg(long, default_value_t = 6)]
        kmin: u32,
        #[arg(long, default_value_t = 12)]
        kmax: u32,
    },
    /// Run the ensemble only and write the probe samples.
    Simulate(Source),
    /// Hölder-in-time exponent fit (default preset heat-dirichlet-hoelder).
    Hoelder(Source),
    /// Besov functional of the density estimate (default preset smoothing-gaussian).
    Besov(Source),
    /// Smoothing-criterion probe (default preset smoothing-gaussian).
    Smoothing(Source),
    /// Frozen-coefficient error curve (default preset burgers-lipschitz-interval).
    AuxError(Source),
    /// List or print shipped presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Run every analysis in a configuration file.
    Run { config: PathBuf },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn load(source: &Source, default_preset: &str) -> Result<ExperimentConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => read_config(path),
        (None, Some(name)) => Ok(preset(name)?),
        (None, None) => Ok(preset(default_preset)?),
    }
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn apply(mut config: ExperimentConfig, o: &Overrides) -> ExperimentConfig {
    if let Some(s) = o.seed {
        config.seed = s;
    }
    if let Some(r) = o.replicas {
        config.replicas = r;
    }
    if let Some(w) = o.workers {
        config.workers = w;
    }
    if o.dump_snapshots.is_some() {
        config.dump_snapshots = o.dump_snapshots;
    }
    config.output_dir = o.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&config.name));
    config
}

fn keep_only(mut config: ExperimentConfig, kind: &str) -> Result<ExperimentConfig> {
    config.analyses.retain(|a| a.kind() == kind);
    if config.analyses.is_empty() {
        bail!("experiment '{}' has no {kind} analysis", config.name);
    }
    Ok(config)
}

fn print_report(report: &Report, dir: &std::path::Path) {
    let s = &report.summary;
    println!("{} ({} replicas, {} failed)", s.name, s.replicas, s.replicas_failed);
    println!("config hash {}", s.provenance.config_hash);
    for a in &s.analyses {
        println!("[{:?}] {}#{}", a.status, a.kind, a.index);
        if let Some(m) = &a.message {
            println!("    {m}");
        }
        for m in &a.metrics {
            let se = m.standard_error.map(|e| format!(" ± {e:.4}")).unwrap_or_default();
            let band = m.band.map(fmt_band).unwrap_or_default();
            println!("    {:<28} {:>12.6}{se}{band}  {:?}", m.name, m.value, m.status);
        }
    }
    println!("wrote {}", dir.display());
}

fn fmt_band(b: Band) -> String {
    match (b.min, b.max) {
        (Some(lo), Some(hi)) => format!("  in [{lo}, {hi}]"),
        (Some(lo), None) => format!("  ≥ {lo}"),
        (None, Some(hi)) => format!("  ≤ {hi}"),
        (None, None) => String::new(),
    }
}

fn execute(config: ExperimentConfig) -> Result<ExitCode> {
    let report = run_and_write(&config)?;
    print_report(&report, &config.output_dir);
    Ok(match report.summary.status {
        Status::Fail | Status::Error => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let o = &cli.overrides;
    match &cli.command {
        Command::KernelCheck { domain, x, kmin, kmax } => {
            if kmax <= kmin {
                bail!("kmax must exceed kmin");
            }
            let mut config = preset("kernel-norms")?;
            let lags = dyadic_lags(*kmin, *kmax);
            config.analyses = vec![AnalysisRequest::KernelCheck {
                domain: match domain {
                    DomainArg::Dirichlet => KernelDomain::UnitIntervalDirichlet,
                    DomainArg::WholeLine => KernelDomain::WholeLine,
                },
                x: *x,
                t: lags.clone(),
                t_integral: 0.25,
                eps: lags.into_iter().filter(|e| *e <= 0.25).collect(),
                band: Some(Band::around(-0.5, 0.02)),
                integral_band: Some(Band::around(0.5, 0.02)),
            }];
            execute(apply(config, o))
        }
        Command::Simulate(src) => {
            let mut config = load(src, "heat-dirichlet-hoelder")?;
            config.probes = config.all_probes();
            config.analyses.clear();
            if config.probes.is_empty() {
                bail!("experiment '{}' has no probes to simulate", config.name);
            }
            execute(apply(config, o))
        }
        Command::Hoelder(src) => execute(apply(keep_only(load(src, "heat-dirichlet-hoelder")?, "hoelder")?, o)),
        Command::Besov(src) => execute(apply(keep_only(load(src, "smoothing-gaussian")?, "besov")?, o)),
        Command::Smoothing(src) => execute(apply(keep_only(load(src, "smoothing-gaussian")?, "smoothing")?, o)),
        Command::AuxError(src) => {
            execute(apply(keep_only(load(src, "burgers-lipschitz-interval")?, "aux_error")?, o))
        }
        Command::Preset { action: PresetAction::List } => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { action: PresetAction::Show { name } } => {
            println!("{}", preset(name)?.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config } => execute(apply(read_config(config)?, o)),
    }
}
