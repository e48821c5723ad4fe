//! Matrix assembly and time stepping.
//!
//! Three steppers share the mesh and operators:
//!
//! * [`StepperKind::CoupledImplicit`] solves both discrete balance equations at
//!   the new level as one banded system with interleaved unknowns
//!   `(T_0, q_1, T_1, q_2, ..., q_J, T_J)`. This is the reference stepper.
//! * [`StepperKind::VectorialAsPrinted`] evaluates the closed matrix recursion
//!
//!   ```text
//!   T^n = C T^{n-1} - c_q D Q^{n-1}
//!   Q^n = c_r B^-1 Q^{n-1} - c_Q B^-1 A_T T^{n-1}
//!   C = I + c_T A_q B^-1 A_T,   D = A_q B^-1,   B = I - c_B L
//!   ```
//!
//!   literally. Eliminating `Q^n` from the coupled equations instead gives
//!   `[I - c_T dt A_q B^-1 A_T] T^n = T^{n-1} - c_q D Q^{n-1}`, so the two
//!   differ by more than round-off; [`step_gap`] measures by how much.
//! * [`StepperKind::FourierLimit`] is implicit Euler for `rho c T_t = k T_xx`
//!   with the flux recovered from the new temperatures.
//!
//! `B^-1` is never formed; each application is a tridiagonal solve. No factor
//! divides by `tau_q`, so `tau_q = 0` needs no special casing.

use crate::discretization::{build_grid, Grid, State};
use crate::error::{Error, Result};
use crate::linalg::{
    thomas_solve, BandedLu, BandedMatrix, DenseMatrix, LinearOperator, TridiagonalMatrix,
};
use crate::model::{MaterialParams, SimulationConfig, StepperKind};

/// `A_q`: the `(J+1) x J` forward difference taking interior fluxes to
/// `q_{j+1} - q_j` with zero end fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FluxDifference {
    pub j_max: usize,
}

impl LinearOperator for FluxDifference {
    fn nrows(&self) -> usize {
        self.j_max + 1
    }

    fn ncols(&self) -> usize {
        self.j_max
    }

    fn apply_into(&self, q: &[f64], y: &mut [f64]) {
        let j_max = self.j_max;
        y[0] = q[0];
        for j in 1..j_max {
            y[j] = q[j] - q[j - 1];
        }
        y[j_max] = -q[j_max - 1];
    }
}

impl FluxDifference {
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.j_max + 1, self.j_max);
        for i in 0..self.j_max {
            m[(i, i)] = 1.0;
            m[(i + 1, i)] = -1.0;
        }
        m
    }
}

/// `A_T`: the `J x (J+1)` difference taking temperatures to `T_j - T_{j-1}`, `j = 1..J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemperatureDifference {
    pub j_max: usize,
}

impl LinearOperator for TemperatureDifference {
    fn nrows(&self) -> usize {
        self.j_max
    }

    fn ncols(&self) -> usize {
        self.j_max + 1
    }

    fn apply_into(&self, t: &[f64], y: &mut [f64]) {
        for i in 0..self.j_max {
            y[i] = t[i + 1] - t[i];
        }
    }
}

impl TemperatureDifference {
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.j_max, self.j_max + 1);
        for i in 0..self.j_max {
            m[(i, i)] = -1.0;
            m[(i, i + 1)] = 1.0;
        }
        m
    }
}

/// The operators and scalar factors of the vectorial recursion.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    /// Dirichlet Laplacian stencil `tridiag(1, -2, 1)`, `J x J`.
    pub laplacian: TridiagonalMatrix,
    pub a_q: FluxDifference,
    pub a_t: TemperatureDifference,
    /// `B = I - c_B L`.
    pub b: TridiagonalMatrix,
    /// `mu2 dt / ((tau_q + dt) dx^2)`
    pub c_b: f64,
    /// `k dt / (rho c (tau_q + dt) dx^2)`, the factor multiplying `A_q B^-1 A_T` in `C`.
    pub c_t: f64,
    /// `tau_q dt / (rho c (tau_q + dt) dx)`
    pub c_q: f64,
    /// `k dt / ((tau_q + dt) dx)`
    pub c_flux: f64,
    /// `tau_q / (tau_q + dt)`
    pub c_r: f64,
}

pub fn assemble(params: &MaterialParams, grid: &Grid) -> AssembledOperators {
    let j_max = grid.j_max;
    let (dx, dt) = (grid.dx, grid.dt);
    let rc = params.heat_capacity();
    let relax = params.tau_q + dt;
    let c_b = params.mu2 * dt / (relax * dx * dx);
    let laplacian = TridiagonalMatrix::constant(j_max, 1.0, -2.0, 1.0);
    let b = laplacian.shifted_scaled(1.0, -c_b);
    AssembledOperators {
        laplacian,
        a_q: FluxDifference { j_max },
        a_t: TemperatureDifference { j_max },
        b,
        c_b,
        c_t: params.k * dt / (rc * relax * dx * dx),
        c_q: params.tau_q * dt / (rc * relax * dx),
        c_flux: params.k * dt / (relax * dx),
        c_r: params.tau_q / relax,
    }
}

/// The implicit level-`n` system in interleaved ordering, with each energy
/// row multiplied by `dt dx` and each flux row by `dt dx / k`. With this
/// scaling the coupling blocks are exactly skew-symmetric, so the symmetric
/// part is positive definite and elimination without pivoting is safe.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    matrix: BandedMatrix,
    lu: BandedLu,
    j_max: usize,
    dt: f64,
    /// `dx / k`
    dx_over_k: f64,
    /// `mu2 / (k dx)`
    nonlocal_over_dt: f64,
}

impl CoupledSystem {
    pub fn assemble(params: &MaterialParams, grid: &Grid) -> Result<Self> {
        let j_max = grid.j_max;
        let (dx, dt) = (grid.dx, grid.dt);
        let energy_weight = params.heat_capacity() * dx;
        let flux_weight = params.tau_q * dx / params.k;
        let nonlocal = params.mu2 * dt / (params.k * dx);
        let t_idx = |j: usize| 2 * j;
        let q_idx = |j: usize| 2 * j - 1;

        let mut a = BandedMatrix::zeros(2 * j_max + 1, 2);
        for j in 0..=j_max {
            let row = t_idx(j);
            a.set(row, row, energy_weight);
            if j < j_max {
                a.set(row, q_idx(j + 1), dt);
            }
            if j > 0 {
                a.set(row, q_idx(j), -dt);
            }
        }
        for j in 1..=j_max {
            let row = q_idx(j);
            a.set(row, row, flux_weight + dt * dx / params.k + 2.0 * nonlocal);
            if j > 1 {
                a.set(row, q_idx(j - 1), -nonlocal);
            }
            if j < j_max {
                a.set(row, q_idx(j + 1), -nonlocal);
            }
            a.set(row, t_idx(j), dt);
            a.set(row, t_idx(j - 1), -dt);
        }
        let lu = a.factor()?;
        Ok(Self {
            matrix: a,
            lu,
            j_max,
            dt,
            dx_over_k: dx / params.k,
            nonlocal_over_dt: params.mu2 / (params.k * dx),
        })
    }

    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    /// Solves for the increment `x^n - x^{n-1}`; the right-hand side is built
    /// from differences of the previous level, so constant states are exact
    /// fixed points.
    pub fn step(&self, prev: &State) -> Result<State> {
        if prev.j_max() != self.j_max {
            return Err(Error::GridMismatch(format!(
                "state has J = {}, system has J = {}",
                prev.j_max(),
                self.j_max
            )));
        }
        let (t, q) = (prev.temperature(), prev.flux());
        let dt = self.dt;
        let mut x = vec![0.0; 2 * self.j_max + 1];
        for j in 0..=self.j_max {
            x[2 * j] = -dt * (q[j + 1] - q[j]);
        }
        for j in 1..=self.j_max {
            x[2 * j - 1] = -dt
                * (self.dx_over_k * q[j]
                    - self.nonlocal_over_dt * (q[j + 1] - 2.0 * q[j] + q[j - 1])
                    + (t[j] - t[j - 1]));
        }
        self.lu.solve_in_place(&mut x)?;
        let mut next = prev.clone();
        for (j, v) in next.temperature_mut().iter_mut().enumerate() {
            *v += x[2 * j];
        }
        restore_heat(t, next.temperature_mut());
        for (i, v) in next.interior_flux_mut().iter_mut().enumerate() {
            *v += x[2 * i + 1];
        }
        Ok(next)
    }
}

/// The coupled step conserves `sum T_j` exactly, but storing `T^{n-1} + dT` rounds
/// every entry. Move the accumulated rounding onto the largest entry. The
/// differences `T^n_j - T^{n-1}_j` are exact for nearby values, and when all
/// entries share a binade the sum and the correction are exact too.
fn restore_heat(prev: &[f64], next: &mut [f64]) {
    let drift: f64 = next.iter().zip(prev).map(|(a, b)| a - b).sum();
    if drift == 0.0 {
        return;
    }
    let m = (0..next.len())
        .max_by(|&a, &b| next[a].abs().total_cmp(&next[b].abs()))
        .unwrap_or(0);
    next[m] -= drift;
}

/// One coupled implicit step. Assembles and factors the system on every call;
/// use [`Stepper`] to advance many steps.
pub fn step_coupled(params: &MaterialParams, grid: &Grid, prev: &State) -> Result<State> {
    prev.matches(grid)?;
    CoupledSystem::assemble(params, grid)?.step(prev)
}

/// One step of the matrix recursion exactly as written with `C`, `D` and `B^-1`.
pub fn step_vectorial_as_printed(ops: &AssembledOperators, prev: &State) -> Result<State> {
    let j_max = ops.a_t.j_max;
    if prev.j_max() != j_max {
        return Err(Error::GridMismatch(format!(
            "state has J = {}, operators have J = {}",
            prev.j_max(),
            j_max
        )));
    }
    let t_prev = prev.temperature();
    let q_prev = prev.interior_flux();

    let grad = ops.a_t.matvec(t_prev)?;
    let b_grad = thomas_solve(&ops.b, &grad)?;
    let b_flux = thomas_solve(&ops.b, q_prev)?;
    let div_b_grad = ops.a_q.matvec(&b_grad)?;
    let div_b_flux = ops.a_q.matvec(&b_flux)?;

    let temperature = (0..=j_max)
        .map(|j| t_prev[j] + ops.c_t * div_b_grad[j] - ops.c_q * div_b_flux[j])
        .collect();
    let flux: Vec<f64> = (0..j_max)
        .map(|i| ops.c_r * b_flux[i] - ops.c_flux * b_grad[i])
        .collect();
    State::from_interior(temperature, &flux)
}

/// Implicit Euler for Fourier conduction. Rejects parameters with relaxation terms.
pub fn step_fourier(params: &MaterialParams, grid: &Grid, prev: &State) -> Result<State> {
    prev.matches(grid)?;
    FourierSystem::new(params, grid)?.step(prev)
}

/// `(I - r N) T^n = T^{n-1}` with `N` the insulated-end Laplacian and
/// `r = k dt / (rho c dx^2)`, followed by `q_j = -k (T_j - T_{j-1}) / dx`.
#[derive(Debug, Clone)]
pub struct FourierSystem {
    matrix: TridiagonalMatrix,
    r: f64,
    k_over_dx: f64,
}

impl FourierSystem {
    pub fn new(params: &MaterialParams, grid: &Grid) -> Result<Self> {
        if !params.is_fourier() {
            return Err(Error::InvalidLimit {
                tau_q: params.tau_q,
                mu2: params.mu2,
            });
        }
        let n = grid.j_max + 1;
        let r = params.k * grid.dt / (params.heat_capacity() * grid.dx * grid.dx);
        let mut diag = vec![1.0 + 2.0 * r; n];
        diag[0] = 1.0 + r;
        diag[n - 1] = 1.0 + r;
        let matrix = TridiagonalMatrix::new(vec![-r; n - 1], diag, vec![-r; n - 1])?;
        Ok(Self {
            matrix,
            r,
            k_over_dx: params.k / grid.dx,
        })
    }

    pub fn step(&self, prev: &State) -> Result<State> {
        // (I - r N) dT = r N T^{n-1}
        let t = prev.temperature();
        let n = t.len();
        let rhs: Vec<f64> = (0..n)
            .map(|j| {
                let right = if j + 1 < n { t[j + 1] - t[j] } else { 0.0 };
                let left = if j > 0 { t[j] - t[j - 1] } else { 0.0 };
                self.r * (right - left)
            })
            .collect();
        let delta = thomas_solve(&self.matrix, &rhs)?;
        let temperature: Vec<f64> = t.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let flux: Vec<f64> = temperature
            .windows(2)
            .map(|w| -self.k_over_dx * (w[1] - w[0]))
            .collect();
        State::from_interior(temperature, &flux)
    }
}

/// A prepared stepper that owns whatever factorization its kind needs.
#[derive(Debug, Clone)]
pub struct Stepper {
    kind: StepperKind,
    j_max: usize,
    engine: Engine,
}

#[derive(Debug, Clone)]
enum Engine {
    Coupled(CoupledSystem),
    Printed(AssembledOperators),
    Fourier(FourierSystem),
}

impl Stepper {
    pub fn new(kind: StepperKind, params: &MaterialParams, grid: &Grid) -> Result<Self> {
        let engine = match kind {
            StepperKind::CoupledImplicit => Engine::Coupled(CoupledSystem::assemble(params, grid)?),
            StepperKind::VectorialAsPrinted => Engine::Printed(assemble(params, grid)),
            StepperKind::FourierLimit => Engine::Fourier(FourierSystem::new(params, grid)?),
        };
        Ok(Self {
            kind,
            j_max: grid.j_max,
            engine,
        })
    }

    pub fn kind(&self) -> StepperKind {
        self.kind
    }

    pub fn step(&self, prev: &State) -> Result<State> {
        if prev.j_max() != self.j_max {
            return Err(Error::GridMismatch(format!(
                "state has J = {}, stepper has J = {}",
                prev.j_max(),
                self.j_max
            )));
        }
        match &self.engine {
            Engine::Coupled(sys) => sys.step(prev),
            Engine::Printed(ops) => step_vectorial_as_printed(ops, prev),
            Engine::Fourier(sys) => sys.step(prev),
        }
    }
}

/// Stored states of a run. With a stride `s`, levels `0, s, 2s, ...` and the
/// final level are kept.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub params: MaterialParams,
    pub stepper: StepperKind,
    pub stride: usize,
    pub levels: Vec<usize>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// `(t_n, state)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &State)> {
        self.levels
            .iter()
            .map(|&n| self.grid.t[n])
            .zip(&self.states)
    }
}

/// Advance `init` over every level of the mesh described by `config`, storing every state.
pub fn run(params: &MaterialParams, config: &SimulationConfig, init: State) -> Result<Trajectory> {
    let grid = build_grid(params, config)?;
    run_on_grid(params, &grid, config.stepper, init, 1, |_, _, _| {})
}

/// Advance `init` through all `N + 1` steps of `grid`.
///
/// `observe(n, prev, next)` sees every step regardless of `stride`.
pub fn run_on_grid<F>(
    params: &MaterialParams,
    grid: &Grid,
    kind: StepperKind,
    init: State,
    stride: usize,
    mut observe: F,
) -> Result<Trajectory>
where
    F: FnMut(usize, &State, &State),
{
    init.matches(grid)?;
    let stride = stride.max(1);
    let stepper = Stepper::new(kind, params, grid)?;
    let last = grid.n_max + 1;
    let mut levels = vec![0];
    let mut states = vec![init.clone()];
    let mut current = init;
    for n in 1..=last {
        let next = stepper.step(&current)?;
        observe(n, &current, &next);
        if n % stride == 0 || n == last {
            levels.push(n);
            states.push(next.clone());
        }
        current = next;
    }
    Ok(Trajectory {
        grid: grid.clone(),
        params: *params,
        stepper: kind,
        stride,
        levels,
        states,
    })
}

/// Relative difference between the literal vectorial step and the coupled
/// step from the same state, per field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGap {
    /// `max |T_printed - T_coupled| / max |T_coupled|`
    pub temperature: f64,
    /// `max |q_printed - q_coupled| / max |q_coupled|` (absolute when the coupled flux vanishes)
    pub flux: f64,
}

pub fn step_gap(params: &MaterialParams, grid: &Grid, prev: &State) -> Result<StepGap> {
    let coupled = step_coupled(params, grid, prev)?;
    let printed = step_vectorial_as_printed(&assemble(params, grid), prev)?;
    Ok(gap_between(&printed, &coupled))
}

pub fn gap_between(printed: &State, coupled: &State) -> StepGap {
    let rel = |a: &[f64], b: &[f64]| {
        let diff = a
            .iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        let scale = crate::linalg::inf_norm(b);
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    };
    StepGap {
        temperature: rel(printed.temperature(), coupled.temperature()),
        flux: rel(printed.flux(), coupled.flux()),
    }
}

/// Largest pointwise difference between two trajectories stored at the same
/// levels, per field, relative to that field's largest magnitude over `b`.
/// Scaling by the per-level maximum would blow up as the flux decays to zero.
pub fn trajectory_difference(a: &Trajectory, b: &Trajectory) -> Result<StepGap> {
    if a.levels != b.levels {
        return Err(Error::GridMismatch(
            "trajectories are stored at different levels".into(),
        ));
    }
    let field_max = |f: fn(&State) -> &[f64]| {
        b.states
            .iter()
            .fold(0.0_f64, |m, s| m.max(crate::linalg::inf_norm(f(s))))
    };
    let field_diff = |f: fn(&State) -> &[f64]| {
        a.states.iter().zip(&b.states).fold(0.0_f64, |m, (x, y)| {
            f(x).iter()
                .zip(f(y))
                .fold(m, |m, (u, v)| m.max((u - v).abs()))
        })
    };
    let rel = |f: fn(&State) -> &[f64]| {
        let scale = field_max(f);
        let diff = field_diff(f);
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    };
    Ok(StepGap {
        temperature: rel(State::temperature),
        flux: rel(State::flux),
    })
}

/// One step by assembling both discrete balance equations unscaled in a dense
/// `(2J+1)`-square system (temperatures first, then interior fluxes) and
/// solving with partial pivoting. Quadratic storage; meant for small `J`.
pub fn step_dense_reference(params: &MaterialParams, grid: &Grid, prev: &State) -> Result<State> {
    prev.matches(grid)?;
    let j_max = grid.j_max;
    let (dx, dt) = (grid.dx, grid.dt);
    let n = 2 * j_max + 1;
    let t_col = |j: usize| j;
    // interior flux j (1..=J) is unknown j_max + j
    let q_col = |j: usize| j_max + j;
    let mut rows = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    let rc = params.heat_capacity();
    let (t_prev, q_prev) = (prev.temperature(), prev.flux());
    for j in 0..=j_max {
        let row = &mut rows[j];
        row[t_col(j)] = rc / dt;
        if j < j_max {
            row[q_col(j + 1)] += 1.0 / dx;
        }
        if j > 0 {
            row[q_col(j)] -= 1.0 / dx;
        }
        rhs[j] = rc / dt * t_prev[j];
    }
    let nl = params.mu2 / (dx * dx);
    for j in 1..=j_max {
        let r = j_max + j;
        let row = &mut rows[r];
        row[q_col(j)] = params.tau_q / dt + 1.0 + 2.0 * nl;
        if j > 1 {
            row[q_col(j - 1)] = -nl;
        }
        if j < j_max {
            row[q_col(j + 1)] = -nl;
        }
        row[t_col(j)] += params.k / dx;
        row[t_col(j - 1)] -= params.k / dx;
        rhs[r] = params.tau_q / dt * q_prev[j];
    }
    let x = crate::linalg::dense_solve(&DenseMatrix::from_rows(&rows)?, &rhs)?;
    State::from_interior(x[..=j_max].to_vec(), &x[j_max + 1..])
}
