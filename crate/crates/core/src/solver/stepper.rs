use serde::{Deserialize, Serialize};

use super::grid::{Scheme, SpaceTimeGrid};
use super::model::{Drift, ModelSpec};
use crate::error::{Error, Result};
use crate::noise::NoiseSlice;

/// Spatial discretization of `-∂ₓ g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flux {
    /// `(g(u_{i+1}) - g(u_{i-1})) / 2dx`.
    #[default]
    Central,
    /// Murman-Roe upwinding of the interface fluxes.
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolverOptions {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub flux: Flux,
}

/// Field on the grid nodes, boundary nodes included.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub step: usize,
    pub time: f64,
}

impl FieldState {
    pub fn initial(model: &ModelSpec, grid: &SpaceTimeGrid) -> Self {
        FieldState {
            values: model.initial_field(grid),
            step: 0,
            time: 0.0,
        }
    }
}

/// One-step integrator with the tridiagonal factorization done once.
///
/// The interior update is
///
/// ```text
/// (1 + 2θa) vᵢ - θa (vᵢ₋₁ + vᵢ₊₁) = uᵢ + (1-θ)a (uᵢ₋₁ - 2uᵢ + uᵢ₊₁)
///                                   - dt·Dᵢ(c) + σ(xᵢ, cᵢ) ΔWᵢ / dx
/// ```
///
/// with `a = dt/dx²`, `θ` given by the scheme and the coefficients `c`
/// taken from the beginning-of-step field (or a frozen field).
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: SpaceTimeGrid,
    drift: Drift,
    model: ModelSpec,
    flux: Flux,
    theta: f64,
    a: f64,
    /// Modified super-diagonal of the Thomas sweep.
    c_prime: Vec<f64>,
    /// Reciprocal pivots of the Thomas sweep.
    inv_pivot: Vec<f64>,
    rhs: Vec<f64>,
    faces: Vec<f64>,
}

impl Stepper {
    pub fn new(model: &ModelSpec, grid: &SpaceTimeGrid, options: SolverOptions) -> Result<Self> {
        grid.check_stability(options.scheme)?;
        let theta = match options.scheme {
            Scheme::CrankNicolson => 0.5,
            Scheme::BackwardEuler => 1.0,
            Scheme::Explicit => 0.0,
        };
        let a = grid.courant();
        let m = grid.n_space - 1;
        let (diag, off) = (1.0 + 2.0 * theta * a, -theta * a);
        let mut c_prime = vec![0.0; m];
        let mut inv_pivot = vec![0.0; m];
        let mut prev = 0.0;
        for i in 0..m {
            let pivot = diag - off * prev;
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = off / pivot;
            prev = c_prime[i];
        }
        Ok(Stepper {
            grid: *grid,
            drift: model.drift,
            model: model.clone(),
            flux: options.flux,
            theta,
            a,
            c_prime,
            inv_pivot,
            rhs: vec![0.0; m],
            faces: vec![0.0; grid.n_space],
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    /// Advance `state` by one step with coefficients read from `state`.
    pub fn step(&mut self, state: &mut FieldState, noise: &[f64]) -> Result<()> {
        let coeffs = std::mem::take(&mut state.values);
        let result = self.advance(&coeffs, &coeffs, noise);
        state.values = coeffs;
        self.finish(state, result)
    }

    /// Advance `state` by one step with drift and diffusion evaluated at
    /// the fixed field `frozen`.
    pub fn step_frozen(&mut self, state: &mut FieldState, frozen: &[f64], noise: &[f64]) -> Result<()> {
        let current = std::mem::take(&mut state.values);
        let result = self.advance(&current, frozen, noise);
        state.values = current;
        self.finish(state, result)
    }

    fn finish(&mut self, state: &mut FieldState, result: Result<()>) -> Result<()> {
        result?;
        let n = self.grid.n_space;
        state.values[1..n].copy_from_slice(&self.rhs);
        state.values[0] = 0.0;
        state.values[n] = 0.0;
        state.step += 1;
        state.time = self.grid.time(state.step);
        if let Some(cell) = state.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: state.time, cell });
        }
        Ok(())
    }

    /// Solve into `self.rhs` from field `u` with coefficients from `c`.
    fn advance(&mut self, u: &[f64], c: &[f64], noise: &[f64]) -> Result<()> {
        let g = self.grid;
        let n = g.n_space;
        if u.len() != n + 1 || c.len() != n + 1 {
            return Err(Error::Data(format!("field has {} nodes, grid has {}", u.len(), n + 1)));
        }
        if noise.len() != n {
            return Err(Error::Data(format!("noise slice has {} cells, grid has {n}", noise.len())));
        }
        let (dt, dx) = (g.dt, g.dx);
        let explicit_weight = (1.0 - self.theta) * self.a;

        if !self.drift.is_zero() {
            self.fill_faces(c);
        }
        for i in 1..n {
            let mut r = u[i] + explicit_weight * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
            if !self.drift.is_zero() {
                r -= dt * self.drift_term(c, i);
            }
            let sigma = self.model.diffusion.sigma(g.x(i), c[i]);
            r += sigma * noise[i] / dx;
            self.rhs[i - 1] = r;
        }
        if self.theta > 0.0 {
            self.solve();
        }
        Ok(())
    }

    fn drift_term(&self, c: &[f64], i: usize) -> f64 {
        let dx = self.grid.dx;
        match self.flux {
            Flux::Central => (self.drift.g(c[i + 1]) - self.drift.g(c[i - 1])) / (2.0 * dx),
            Flux::Upwind => (self.faces[i] - self.faces[i - 1]) / dx,
        }
    }

    /// Murman-Roe interface fluxes; `faces[i]` sits between nodes `i`, `i+1`.
    fn fill_faces(&mut self, c: &[f64]) {
        if self.flux != Flux::Upwind {
            return;
        }
        for i in 0..self.grid.n_space {
            let (l, r) = (c[i], c[i + 1]);
            let (gl, gr) = (self.drift.g(l), self.drift.g(r));
            let speed = if r != l { (gr - gl) / (r - l) } else { self.drift.dg(l) };
            self.faces[i] = 0.5 * (gl + gr) - 0.5 * speed.abs() * (r - l);
        }
    }

    /// Thomas sweep on `self.rhs` with the precomputed factorization.
    fn solve(&mut self) {
        let off = -self.theta * self.a;
        let m = self.rhs.len();
        let mut prev = 0.0;
        for i in 0..m {
            let d = (self.rhs[i] - off * prev) * self.inv_pivot[i];
            self.rhs[i] = d;
            prev = d;
        }
        for i in (0..m.saturating_sub(1)).rev() {
            self.rhs[i] -= self.c_prime[i] * self.rhs[i + 1];
        }
    }
}

/// Single step without a reusable [`Stepper`].
pub fn step(
    state: &FieldState,
    model: &ModelSpec,
    grid: &SpaceTimeGrid,
    options: SolverOptions,
    noise: &NoiseSlice,
) -> Result<FieldState> {
    if !noise.matches(grid) {
        return Err(Error::Data("noise slice does not match the grid".into()));
    }
    if state.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("input field is not finite".into()));
    }
    let mut next = state.clone();
    Stepper::new(model, grid, options)?.step(&mut next, &noise.values)?;
    Ok(next)
}
