//! Staggered mesh, discrete states and residuals of the implicit scheme.
//!
//! Temperatures live on nodes `j = 0..=J` and fluxes on `j = 0..=J+1`, with
//! `x_j = j dx` and `(J+1) dx = l`. The flux vanishes at `j = 0` and `j = J+1`
//! (insulated ends). At level `n` the scheme reads
//!
//! ```text
//! rho c (T_j^n - T_j^{n-1})/dt + (q_{j+1}^n - q_j^n)/dx = 0                      j = 0..=J
//! tau_q (q_j^n - q_j^{n-1})/dt + q_j^n - mu2 (q_{j+1}^n - 2 q_j^n + q_{j-1}^n)/dx^2
//!     + k (T_j^n - T_{j-1}^n)/dx = 0                                              j = 1..=J
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{integer_ratio, MaterialParams, SimulationConfig};

/// Space-time mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Largest temperature index; there are `J + 1` temperature and `J + 2` flux nodes.
    pub j_max: usize,
    /// Time levels run over `n = 0..=N+1`.
    pub n_max: usize,
    pub dx: f64,
    pub dt: f64,
    pub l: f64,
    /// Node coordinates `x_0 .. x_{J+1}`.
    pub x: Vec<f64>,
    /// Time levels `t_0 .. t_{N+1}`.
    pub t: Vec<f64>,
}

impl Grid {
    pub fn temperature_nodes(&self) -> usize {
        self.j_max + 1
    }

    pub fn flux_nodes(&self) -> usize {
        self.j_max + 2
    }

    /// Number of time steps, `N + 1`.
    pub fn steps(&self) -> usize {
        self.n_max + 1
    }

    pub fn t_final(&self) -> f64 {
        self.t[self.n_max + 1]
    }

    /// Same spatial mesh with a different time step and horizon.
    pub fn with_time(&self, dt: f64, t_final: f64) -> Result<Grid> {
        let steps = integer_ratio("t_final/dt", t_final, dt)?;
        Ok(Self::from_counts(self.l, self.j_max, t_final, steps - 1))
    }

    fn from_counts(l: f64, j_max: usize, t_final: f64, n_max: usize) -> Grid {
        let dx = l / (j_max + 1) as f64;
        let dt = t_final / (n_max + 1) as f64;
        let mut x: Vec<f64> = (0..=j_max + 1).map(|j| j as f64 * dx).collect();
        x[j_max + 1] = l;
        let mut t: Vec<f64> = (0..=n_max + 1).map(|n| n as f64 * dt).collect();
        t[n_max + 1] = t_final;
        Grid {
            j_max,
            n_max,
            dx,
            dt,
            l,
            x,
            t,
        }
    }

    /// Mesh with `J + 1` temperature nodes on `[0, l)` and `steps` time steps of size `dt`.
    pub fn uniform(l: f64, j_max: usize, dt: f64, steps: usize) -> Result<Grid> {
        if j_max == 0 || steps == 0 {
            return Err(Error::InvalidSetting {
                name: "grid",
                reason: "need at least one interior flux node and one time step".into(),
            });
        }
        Ok(Self::from_counts(l, j_max, dt * steps as f64, steps - 1))
    }
}

/// `J = l/dx - 1`, `N = t_final/dt - 1`.
pub fn build_grid(params: &MaterialParams, config: &SimulationConfig) -> Result<Grid> {
    let config = config.validated()?;
    let cells = integer_ratio("l/dx", params.l, config.dx)?;
    let steps = integer_ratio("t_final/dt", config.t_final, config.dt)?;
    if cells < 2 {
        return Err(Error::InvalidSetting {
            name: "dx",
            reason: format!("l/dx = {cells} leaves no interior flux node"),
        });
    }
    Ok(Grid::from_counts(
        params.l,
        cells - 1,
        config.t_final,
        steps - 1,
    ))
}

/// One time level of the discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    temperature: Vec<f64>,
    flux: Vec<f64>,
}

impl State {
    /// `temperature` has `J + 1` entries, `flux` has `J + 2` with zero end values.
    pub fn new(temperature: Vec<f64>, flux: Vec<f64>) -> Result<Self> {
        if flux.len() != temperature.len() + 1 || temperature.len() < 2 {
            return Err(Error::GridMismatch(format!(
                "{} temperature values need {} flux values, got {}",
                temperature.len(),
                temperature.len() + 1,
                flux.len()
            )));
        }
        if flux[0] != 0.0 || flux[flux.len() - 1] != 0.0 {
            return Err(Error::GridMismatch("boundary flux must vanish".into()));
        }
        if !temperature.iter().chain(&flux).all(|v| v.is_finite()) {
            return Err(Error::GridMismatch("non-finite entry".into()));
        }
        Ok(Self { temperature, flux })
    }

    /// Interior fluxes `q_1..q_J`; the ends are filled with zeros.
    pub fn from_interior(temperature: Vec<f64>, interior_flux: &[f64]) -> Result<Self> {
        let mut flux = Vec::with_capacity(interior_flux.len() + 2);
        flux.push(0.0);
        flux.extend_from_slice(interior_flux);
        flux.push(0.0);
        Self::new(temperature, flux)
    }

    pub fn zeros(j_max: usize) -> Self {
        Self {
            temperature: vec![0.0; j_max + 1],
            flux: vec![0.0; j_max + 2],
        }
    }

    pub fn uniform(j_max: usize, value: f64) -> Self {
        Self {
            temperature: vec![value; j_max + 1],
            flux: vec![0.0; j_max + 2],
        }
    }

    pub fn j_max(&self) -> usize {
        self.temperature.len() - 1
    }

    pub fn temperature(&self) -> &[f64] {
        &self.temperature
    }

    /// All `J + 2` flux values including the zero end values.
    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    /// `q_1..q_J`.
    pub fn interior_flux(&self) -> &[f64] {
        &self.flux[1..self.flux.len() - 1]
    }

    pub(crate) fn temperature_mut(&mut self) -> &mut [f64] {
        &mut self.temperature
    }

    pub(crate) fn interior_flux_mut(&mut self) -> &mut [f64] {
        let n = self.flux.len();
        &mut self.flux[1..n - 1]
    }

    pub fn matches(&self, grid: &Grid) -> Result<()> {
        if self.j_max() != grid.j_max {
            return Err(Error::GridMismatch(format!(
                "state has J = {}, grid has J = {}",
                self.j_max(),
                grid.j_max
            )));
        }
        Ok(())
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &State, beta: f64) -> Result<State> {
        if self.j_max() != other.j_max() {
            return Err(Error::GridMismatch("states of different size".into()));
        }
        let comb =
            |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect();
        Ok(State {
            temperature: comb(&self.temperature, &other.temperature),
            flux: comb(&self.flux, &other.flux),
        })
    }

    /// Largest absolute difference over both fields.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.temperature
            .iter()
            .zip(&other.temperature)
            .chain(self.flux.iter().zip(&other.flux))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.temperature
            .iter()
            .chain(&self.flux)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `T_j = T_b + (T_f / 2) cos(pi x_j / l)`, zero flux.
pub fn cosine_initial(grid: &Grid, t_base: f64, t_fluct: f64) -> State {
    let temperature = grid.x[..=grid.j_max]
        .iter()
        .map(|&x| t_base + 0.5 * t_fluct * (PI * x / grid.l).cos())
        .collect();
    State {
        temperature,
        flux: vec![0.0; grid.flux_nodes()],
    }
}

/// Cosine profile without the base temperature; its continuous mean over `(0, l)` is zero.
pub fn zero_mean_initial(grid: &Grid, t_fluct: f64) -> State {
    cosine_initial(grid, 0.0, t_fluct)
}

/// Pointwise residuals of both discrete equations between two consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// Energy balance, `j = 0..=J`.
    pub energy: Vec<f64>,
    /// Constitutive law, `j = 1..=J` (entry `i` belongs to node `i + 1`).
    pub flux: Vec<f64>,
}

impl Residual {
    pub fn max_energy(&self) -> f64 {
        crate::linalg::inf_norm(&self.energy)
    }

    pub fn max_flux(&self) -> f64 {
        crate::linalg::inf_norm(&self.flux)
    }
}

pub fn pointwise_residual(
    params: &MaterialParams,
    grid: &Grid,
    prev: &State,
    next: &State,
) -> Result<Residual> {
    prev.matches(grid)?;
    next.matches(grid)?;
    let (dx, dt) = (grid.dx, grid.dt);
    let rc = params.heat_capacity();
    let (t0, t1) = (&prev.temperature, &next.temperature);
    let (q0, q1) = (&prev.flux, &next.flux);
    let energy = (0..=grid.j_max)
        .map(|j| rc * (t1[j] - t0[j]) / dt + (q1[j + 1] - q1[j]) / dx)
        .collect();
    let flux = (1..=grid.j_max)
        .map(|j| {
            params.tau_q * (q1[j] - q0[j]) / dt + q1[j]
                - params.mu2 * (q1[j + 1] - 2.0 * q1[j] + q1[j - 1]) / (dx * dx)
                + params.k * (t1[j] - t1[j - 1]) / dx
        })
        .collect();
    Ok(Residual { energy, flux })
}

/// Magnitudes the two residuals are measured against:
/// `rho c max|T| / dt` and `tau_q max|q| / dt + max|q|`.
pub fn residual_scales(params: &MaterialParams, grid: &Grid, next: &State) -> (f64, f64) {
    let t_max = crate::linalg::inf_norm(&next.temperature);
    let q_max = crate::linalg::inf_norm(&next.flux);
    (
        params.heat_capacity() * t_max / grid.dt,
        params.tau_q * q_max / grid.dt + q_max,
    )
}
