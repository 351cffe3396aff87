//! Finite-difference integrator for
//!
//! ```text
//! ∂ₜu = ∂ₓₓu - ∂ₓ g(u) + σ(x, u) Ẇ
//! ```
//!
//! on the whole line (truncated to a window) or on `[0, 1]` with Dirichlet
//! conditions, plus the frozen-coefficient copy used by the approximation
//! argument and the conditional Gaussian variance it produces.

mod grid;
mod model;
mod stepper;

pub use grid::{Scheme, SpaceTimeGrid, SEMI_IMPLICIT_MARGIN};
pub use model::{
    Diffusion, Domain, Drift, Envelope, InitialCondition, ModelSpec, Profile, WINDOW_MARGIN_SDS,
};
pub use stepper::{step, FieldState, Flux, SolverOptions, Stepper};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};
use crate::noise::{derive_stream, SeedSpec};

/// A space-time point at which the field is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub t: f64,
    pub x: f64,
}

impl Probe {
    pub fn new(t: f64, x: f64) -> Self {
        Probe { t, x }
    }
}

/// A probe resolved to `(step, node)` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridProbe {
    pub step: usize,
    pub node: usize,
}

pub fn resolve_probes(grid: &SpaceTimeGrid, probes: &[Probe]) -> Result<Vec<GridProbe>> {
    let mut bad = Vec::new();
    let mut out = Vec::with_capacity(probes.len());
    for (i, p) in probes.iter().enumerate() {
        match (grid.step_of(p.t), grid.node_of(p.x)) {
            (Some(step), Some(node)) => out.push(GridProbe { step, node }),
            _ => bad.push(format!("probe {i} at (t = {}, x = {}) is not a grid point", p.t, p.x)),
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::InvalidConfig(bad))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    /// Field values at the probes, in the order they were requested.
    pub probe_values: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

/// Run one replica up to the last probe time (or the horizon when
/// snapshots are requested) and record the field at the probes.
pub fn simulate(
    model: &ModelSpec,
    grid: &SpaceTimeGrid,
    options: SolverOptions,
    seed: SeedSpec,
    probes: &[Probe],
    snapshot_every: Option<usize>,
) -> Result<Trajectory> {
    let resolved = resolve_probes(grid, probes)?;
    let last = match snapshot_every {
        Some(_) => grid.n_time,
        None => resolved.iter().map(|p| p.step).max().unwrap_or(0),
    };
    let mut order: Vec<usize> = (0..resolved.len()).collect();
    order.sort_by_key(|&i| resolved[i].step);

    let mut out = Trajectory {
        probe_values: vec![0.0; probes.len()],
        snapshots: Vec::new(),
    };
    let mut next = 0;
    let mut record = |state: &FieldState, out: &mut Trajectory| {
        while next < order.len() && resolved[order[next]].step == state.step {
            let p = resolved[order[next]];
            out.probe_values[order[next]] = state.values[p.node];
            next += 1;
        }
        if let Some(every) = snapshot_every {
            if every > 0 && state.step % every == 0 {
                out.snapshots.push(Snapshot { time: state.time, values: state.values.clone() });
            }
        }
    };

    let mut stepper = Stepper::new(model, grid, options)?;
    let mut stream = derive_stream(seed);
    let mut noise = vec![0.0; grid.n_space];
    let mut state = FieldState::initial(model, grid);
    record(&state, &mut out);
    for k in 0..last {
        stream.fill_slice(grid, k, &mut noise)?;
        stepper.step(&mut state, &noise)?;
        record(&state, &mut out);
    }
    Ok(out)
}

/// True field at time `t` and its frozen-coefficient copies, one per window.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenFamily {
    pub t: f64,
    pub eps: Vec<f64>,
    /// `u(t, ·)` on the grid nodes.
    pub exact: Vec<f64>,
    /// `u_ε(t, ·)` for each window, in the order given.
    pub frozen: Vec<Vec<f64>>,
    /// `u(t - ε, ·)` for each window.
    pub start: Vec<Vec<f64>>,
}

/// Run the true path to `t`, storing `u(t - ε)` for every window, then rerun
/// each window from its stored field with `g` and `σ` evaluated at that
/// field and the same noise slices.
pub fn simulate_frozen_family(
    model: &ModelSpec,
    grid: &SpaceTimeGrid,
    options: SolverOptions,
    seed: SeedSpec,
    t: f64,
    eps: &[f64],
) -> Result<FrozenFamily> {
    let kt = grid
        .step_of(t)
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::Config(format!("frozen probe time {t} is not a positive grid time")))?;
    let mut starts = Vec::with_capacity(eps.len());
    for &e in eps {
        if !(e > 0.0 && e < t / 2.0) {
            return Err(Error::Config(format!("window eps = {e} must lie in (0, t/2 = {})", t / 2.0)));
        }
        let m = grid
            .step_of(e)
            .filter(|&m| m > 0)
            .ok_or_else(|| Error::Config(format!("window eps = {e} is not a multiple of dt = {}", grid.dt)))?;
        starts.push(kt - m);
    }

    let mut stepper = Stepper::new(model, grid, options)?;
    let mut stream = derive_stream(seed);
    let mut noise = vec![0.0; grid.n_space];
    let mut state = FieldState::initial(model, grid);
    let mut stored: Vec<Option<Vec<f64>>> = vec![None; eps.len()];
    let store = |state: &FieldState, stored: &mut Vec<Option<Vec<f64>>>| {
        for (j, &s) in starts.iter().enumerate() {
            if s == state.step {
                stored[j] = Some(state.values.clone());
            }
        }
    };
    store(&state, &mut stored);
    for k in 0..kt {
        stream.fill_slice(grid, k, &mut noise)?;
        stepper.step(&mut state, &noise)?;
        store(&state, &mut stored);
    }
    let start: Vec<Vec<f64>> = stored.into_iter().map(|s| s.expect("every window start is reached")).collect();

    let mut frozen = Vec::with_capacity(eps.len());
    for (j, field) in start.iter().enumerate() {
        let mut copy = FieldState {
            values: field.clone(),
            step: starts[j],
            time: grid.time(starts[j]),
        };
        for k in starts[j]..kt {
            stream.fill_slice(grid, k, &mut noise)?;
            stepper.step_frozen(&mut copy, field, &noise)?;
        }
        frozen.push(copy.values);
    }
    Ok(FrozenFamily {
        t,
        eps: eps.to_vec(),
        exact: state.values,
        frozen,
        start,
    })
}

/// `(u(t, ·), u_ε(t, ·))` under a common noise path.
pub fn simulate_frozen(
    model: &ModelSpec,
    grid: &SpaceTimeGrid,
    options: SolverOptions,
    seed: SeedSpec,
    t: f64,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut fam = simulate_frozen_family(model, grid, options, seed, t, &[eps])?;
    Ok((fam.exact, fam.frozen.pop().expect("one window")))
}

/// `V = ∫_{t-ε}^{t} ∫ G²(t-s, x, y) σ²(y, u(t-ε, y)) dy ds`, with the frozen
/// field interpolated linearly between nodes and taken as zero off the grid.
pub fn conditional_variance(
    model: &ModelSpec,
    grid: &SpaceTimeGrid,
    frozen_field: &FieldState,
    t: f64,
    eps: f64,
    x: f64,
    spec: &KernelSpec,
) -> Result<f64> {
    if !(eps > 0.0 && eps < t) {
        return Err(Error::Domain(format!("window eps = {eps} must lie in (0, t = {t})")));
    }
    if (frozen_field.time - (t - eps)).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Config(format!(
            "frozen field is at time {}, expected t - eps = {}",
            frozen_field.time,
            t - eps
        )));
    }
    if frozen_field.values.len() != grid.n_nodes() {
        return Err(Error::Data("frozen field does not match the grid".into()));
    }
    if spec.domain != model.domain.kernel_domain() {
        return Err(Error::Config("kernel spec domain differs from the model domain".into()));
    }
    let values = &frozen_field.values;
    let weight = |y: f64| {
        let s = (y - grid.spatial_origin) / grid.dx;
        let u = if s <= 0.0 || s >= grid.n_space as f64 {
            0.0
        } else {
            let i = s.floor() as usize;
            let w = s - i as f64;
            (1.0 - w) * values[i] + w * values[(i + 1).min(grid.n_space)]
        };
        model.diffusion.sigma(y, u).powi(2)
    };
    let nodes: Vec<f64> = (0..=grid.n_space).map(|i| grid.x(i)).collect();
    kernels::time_integrated_weighted(spec, eps, x, weight, &nodes)
}

#[cfg(test)]
mod tests;
