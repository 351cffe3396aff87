use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Semi-implicit schemes are accepted up to `dt < SEMI_IMPLICIT_MARGIN · dx²`.
pub const SEMI_IMPLICIT_MARGIN: f64 = 10.0;

/// Time discretization of the Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Trapezoidal in the Laplacian, explicit drift and noise.
    #[default]
    CrankNicolson,
    /// Implicit Laplacian, explicit drift and noise.
    BackwardEuler,
    /// Fully explicit; needs `dt ≤ dx²/2`.
    Explicit,
}

impl Scheme {
    pub fn is_explicit(self) -> bool {
        self == Scheme::Explicit
    }
}

/// Uniform space-time grid.
///
/// Nodes sit at `spatial_origin + i·dx` for `i = 0..=n_space`; the two end
/// nodes carry the zero boundary condition. Noise lives on the `n_space`
/// cells `[xᵢ, xᵢ₊₁)` and the time steps `[k·dt, (k+1)·dt)`, `k < n_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub dx: f64,
    pub dt: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub spatial_origin: f64,
}

impl SpaceTimeGrid {
    pub fn new(dx: f64, dt: f64, n_space: usize, n_time: usize, spatial_origin: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("grid steps must be positive (dx = {dx}, dt = {dt})")));
        }
        if n_space < 2 || n_time < 1 {
            return Err(Error::Config(format!(
                "grid needs at least 2 cells and 1 step (n_space = {n_space}, n_time = {n_time})"
            )));
        }
        if !spatial_origin.is_finite() {
            return Err(Error::Config("spatial origin must be finite".into()));
        }
        Ok(SpaceTimeGrid { dx, dt, n_space, n_time, spatial_origin })
    }

    /// Grid covering `[a, a + length]` with `n_space` cells up to `horizon`.
    pub fn covering(origin: f64, length: f64, n_space: usize, dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !(length > 0.0) || !(dt > 0.0) {
            return Err(Error::Config(format!(
                "length = {length}, horizon = {horizon} and dt = {dt} must be positive"
            )));
        }
        let steps = horizon / dt;
        let n_time = steps.round();
        if (n_time - steps).abs() > 1e-9 * steps.max(1.0) || n_time < 1.0 {
            return Err(Error::Config(format!(
                "horizon {horizon} is not a whole number of steps dt = {dt}"
            )));
        }
        Self::new(length / n_space as f64, dt, n_space, n_time as usize, origin)
    }

    pub fn horizon(&self) -> f64 {
        self.n_time as f64 * self.dt
    }

    pub fn n_nodes(&self) -> usize {
        self.n_space + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.spatial_origin + i as f64 * self.dx
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Diffusion number `dt/dx²`.
    pub fn courant(&self) -> f64 {
        self.dt / (self.dx * self.dx)
    }

    pub fn check_stability(&self, scheme: Scheme) -> Result<()> {
        let r = self.courant();
        let limit = if scheme.is_explicit() { 0.5 } else { SEMI_IMPLICIT_MARGIN };
        let ok = if scheme.is_explicit() { r <= limit } else { r < limit };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "dt/dx² = {r:.4} violates the {scheme:?} stability limit {limit}"
            )))
        }
    }

    /// Node index of `x` if it lies on the grid (to within `1e-9·dx`).
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let s = (x - self.spatial_origin) / self.dx;
        let i = s.round();
        if (s - i).abs() <= 1e-9 && i >= 0.0 && i <= self.n_space as f64 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Step index of `t` if it lies on the time grid.
    pub fn step_of(&self, t: f64) -> Option<usize> {
        let s = t / self.dt;
        let k = s.round();
        if (s - k).abs() <= 1e-9 * s.max(1.0) && k >= 0.0 && k <= self.n_time as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Largest step index whose time does not exceed `t`.
    pub fn step_floor(&self, t: f64) -> usize {
        let s = t / self.dt;
        let k = s.round();
        let k = if (s - k).abs() <= 1e-9 * s.max(1.0) { k } else { s.floor() };
        (k.max(0.0) as usize).min(self.n_time)
    }

    /// Same spatial layout with `factor` times as many cells and
    /// `factor²` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let f = factor as f64;
        Self::new(self.dx / f, self.dt / (f * f), self.n_space * factor, self.n_time * factor * factor, self.spatial_origin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_grid_matches_horizon() {
        let g = SpaceTimeGrid::covering(0.0, 1.0, 64, 1.0 / 4096.0, 0.25).unwrap();
        assert_eq!(g.n_time, 1024);
        assert_eq!(g.dx, 1.0 / 64.0);
        assert!((g.horizon() - 0.25).abs() < 1e-15);
        assert!(SpaceTimeGrid::covering(0.0, 1.0, 64, 0.3, 1.0).is_err());
    }

    #[test]
    fn stability_limits() {
        let g = SpaceTimeGrid::new(0.1, 0.004, 10, 10, 0.0).unwrap();
        assert!(g.check_stability(Scheme::Explicit).is_ok());
        let g = SpaceTimeGrid::new(0.1, 0.006, 10, 10, 0.0).unwrap();
        assert!(g.check_stability(Scheme::Explicit).is_err());
        assert!(g.check_stability(Scheme::CrankNicolson).is_ok());
        let g = SpaceTimeGrid::new(0.1, 0.2, 10, 10, 0.0).unwrap();
        assert!(g.check_stability(Scheme::BackwardEuler).is_err());
    }

    #[test]
    fn grid_lookup() {
        let g = SpaceTimeGrid::covering(-2.0, 4.0, 64, 1.0 / 256.0, 0.5).unwrap();
        assert_eq!(g.node_of(0.0), Some(32));
        assert_eq!(g.node_of(0.01), None);
        assert_eq!(g.node_of(2.5), None);
        assert_eq!(g.step_of(0.25), Some(64));
        assert_eq!(g.step_of(0.2501), None);
        assert_eq!(g.step_floor(0.2501), 64);
        assert_eq!(g.step_floor(0.25), 64);
    }
}
