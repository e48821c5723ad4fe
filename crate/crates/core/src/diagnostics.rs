//! Energy bookkeeping and the decay estimates it is checked against.
//!
//! The discrete energy of a state is
//!
//! ```text
//! E = (rho c dx / 2) sum_{j=0..J} T_j^2 + (tau_q / k)(dx / 2) sum_{j=0..J} q_j^2
//! ```
//!
//! and along coupled implicit steps it obeys
//!
//! ```text
//! (E^n - E^{n-1}) / dt <= -(1/k) dx sum |q_j^n|^2 - (mu2/k) dx sum |(q_{j+1}^n - q_j^n)/dx|^2 .
//! ```
//!
//! Continuous functionals (`F`, the Lyapunov functional, `C_T`) are evaluated
//! with right-endpoint sums on the temperature nodes, so comparisons against
//! their continuum bounds carry an `O(dx)` quadrature error.

use num_complex::Complex64;

use crate::discretization::{Grid, State};
use crate::error::{Error, Result};
use crate::model::{MaterialParams, StepperKind};
use crate::scheme::{run_on_grid, Trajectory};

/// Absolute slack (scaled by `max(1, |lhs|)`) allowed in the dissipation inequality.
pub const DISSIPATION_SLACK: f64 = 1e-12;
/// Relative slack for checks comparing quadratures to continuum inequalities.
pub const QUADRATURE_SLACK: f64 = 0.01;
/// Relative drift of the total heat tolerated along coupled runs.
pub const HEAT_DRIFT_TOL: f64 = 1e-12;

/// Equilibrium value quoted alongside the reference-case figures. The closed
/// form `(rho c / 2) l T_b^2` gives 1.125e7 for the same inputs; both are reported.
pub const QUOTED_EQUILIBRIUM_ENERGY: f64 = 1.24e7;

/// `sum x_i^2` with error-free products and compensated accumulation, as
/// accurate as a twice-working-precision sum rounded once.
fn sum_of_squares(xs: &[f64]) -> f64 {
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for &x in xs {
        let p = x * x;
        let p_err = x.mul_add(x, -p);
        let s = hi + p;
        let z = s - hi;
        let s_err = (hi - (s - z)) + (p - z);
        hi = s;
        lo += s_err + p_err;
    }
    hi + lo
}

/// Evaluated with compensated sums so that successive values of a decaying
/// run stay ordered down to the last few bits.
pub fn discrete_energy(state: &State, params: &MaterialParams, dx: f64) -> f64 {
    let t2 = sum_of_squares(state.temperature());
    let q2 = sum_of_squares(&state.flux()[..state.temperature().len()]);
    0.5 * dx * (params.heat_capacity() * t2 + params.tau_q / params.k * q2)
}

/// `E(next) - E(prev)` evaluated as `sum (a - b)(a + b)`, which avoids the
/// cancellation of subtracting two nearly equal energies.
pub fn energy_change(prev: &State, next: &State, params: &MaterialParams, dx: f64) -> f64 {
    let dsq =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x + y)).sum() };
    let n = next.temperature().len();
    let dt2 = dsq(next.temperature(), prev.temperature());
    let dq2 = dsq(&next.flux()[..n], &prev.flux()[..n]);
    0.5 * dx * (params.heat_capacity() * dt2 + params.tau_q / params.k * dq2)
}

/// Energy of the deviation from the mean temperature. The mean part of `E` is
/// fixed by the conserved heat, so this is the part that decays.
pub fn fluctuation_energy(state: &State, params: &MaterialParams, dx: f64) -> f64 {
    let t = state.temperature();
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let t2: f64 = t.iter().map(|v| (v - mean) * (v - mean)).sum();
    let q2: f64 = state.flux()[..t.len()].iter().map(|q| q * q).sum();
    0.5 * dx * (params.heat_capacity() * t2 + params.tau_q / params.k * q2)
}

/// Energy of the uniform state carrying heat `heat`, `(rho c / 2) H^2 / l`
/// in the continuum; on the mesh it is `(rho c dx / 2)(J+1) (H / l)^2`.
pub fn equilibrium_energy(heat: f64, params: &MaterialParams) -> f64 {
    0.5 * params.heat_capacity() * heat * heat / params.l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationReport {
    /// `(E^n - E^{n-1}) / dt`
    pub lhs: f64,
    /// Right-hand side of the discrete dissipation inequality.
    pub rhs: f64,
    pub ok: bool,
}

/// Dissipation rate bound at the new level, always `<= 0`.
pub fn dissipation_bound(next: &State, params: &MaterialParams, dx: f64) -> f64 {
    let q = next.flux();
    let n = next.temperature().len();
    let q2: f64 = q[..n].iter().map(|v| v * v).sum();
    let dq2: f64 = q.windows(2).map(|w| ((w[1] - w[0]) / dx).powi(2)).sum();
    -(dx / params.k) * q2 - params.mu2 / params.k * dx * dq2
}

pub fn dissipation_check(
    prev: &State,
    next: &State,
    params: &MaterialParams,
    dx: f64,
    dt: f64,
) -> DissipationReport {
    let lhs = energy_change(prev, next, params, dx) / dt;
    let rhs = dissipation_bound(next, params, dx);
    let ok = lhs <= rhs + DISSIPATION_SLACK * lhs.abs().max(1.0);
    DissipationReport { lhs, rhs, ok }
}

/// `H = dx sum_{j=0..J} T_j`.
pub fn total_heat(state: &State, dx: f64) -> f64 {
    dx * state.temperature().iter().sum::<f64>()
}

/// Constants of the exponential decay estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConstants {
    /// `min{2k/(rho c), 4(l^2 + mu2)/tau_q}`; the second entry is dropped when `tau_q = 0`.
    pub beta: f64,
    /// `beta / (3l^2 + 3mu2 + 2 tau_q k/(rho c))`
    pub omega: f64,
    /// `(3l^2 + 3mu2 + 2 tau_q k/(rho c)) / (l^2 + mu2)`, the prefactor `M_0`.
    pub m: f64,
    /// `1 / (l^2 + mu2)`
    pub gamma0: f64,
    /// `2 gamma0 / omega`, the prefactor `M_1` of `sup |C_T|`.
    pub m1: f64,
    /// Largest `|C_T|` seen along the trajectory; zero until set.
    pub sup_ct: f64,
}

pub fn decay_constants(params: &MaterialParams) -> DecayConstants {
    let p = params;
    let spread = p.l * p.l + p.mu2;
    let relax_term = if p.tau_q > 0.0 {
        4.0 * spread / p.tau_q
    } else {
        f64::INFINITY
    };
    let beta = (2.0 * p.diffusivity()).min(relax_term);
    let upper = 3.0 * spread + 2.0 * p.tau_q * p.diffusivity();
    let omega = beta / upper;
    let gamma0 = 1.0 / spread;
    DecayConstants {
        beta,
        omega,
        m: upper / spread,
        gamma0,
        m1: 2.0 * gamma0 / omega,
        sup_ct: 0.0,
    }
}

impl DecayConstants {
    pub fn with_sup_ct(self, trace: &EnergyTrace) -> Self {
        Self {
            sup_ct: trace.sup_ct(),
            ..self
        }
    }

    /// `M E0 e^{-omega t}`, plus `M_1 sup|C_T|` unless the data has zero mean.
    pub fn envelope(&self, e0: f64, t: f64, mode: EnvelopeMode) -> f64 {
        let decay = self.m * e0 * (-self.omega * t).exp();
        match mode {
            EnvelopeMode::General => decay + self.m1 * self.sup_ct,
            EnvelopeMode::ZeroMean => decay,
        }
    }
}

/// `C_T = (mu2 q_x(0) - k T(0)) int_0^l T dx`, with `q_x(0) ~ (q_1 - q_0) / dx`.
pub fn boundary_term(state: &State, params: &MaterialParams, dx: f64) -> f64 {
    let q = state.flux();
    let qx0 = (q[1] - q[0]) / dx;
    (params.mu2 * qx0 - params.k * state.temperature()[0]) * total_heat(state, dx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValue {
    /// `(rho c/2)||I||^2 + (rho c/2) mu2 ||T||^2 + tau_q <q, I>` with `I(x) = int_x^l T`.
    pub f: f64,
    /// `(2l^2 + 2mu2 + tau_q k/(rho c)) E + F`
    pub lcal: f64,
}

pub fn lyapunov(state: &State, params: &MaterialParams, dx: f64) -> LyapunovValue {
    let t = state.temperature();
    let q = state.flux();
    let rc = params.heat_capacity();
    let mut tail = 0.0;
    let mut tail_sq = 0.0;
    let mut flux_tail = 0.0;
    for j in (0..t.len()).rev() {
        tail += dx * t[j];
        tail_sq += tail * tail;
        flux_tail += q[j] * tail;
    }
    let t_sq: f64 = t.iter().map(|v| v * v).sum();
    let f =
        0.5 * rc * dx * tail_sq + 0.5 * rc * params.mu2 * dx * t_sq + params.tau_q * dx * flux_tail;
    let weight = 2.0 * params.l * params.l + 2.0 * params.mu2 + params.tau_q * params.diffusivity();
    LyapunovValue {
        f,
        lcal: weight * discrete_energy(state, params, dx) + f,
    }
}

/// Coefficients `(a, b)` of the sandwich `a E <= L <= b E`.
pub fn lyapunov_bounds(params: &MaterialParams) -> (f64, f64) {
    let spread = params.l * params.l + params.mu2;
    (
        spread,
        3.0 * spread + 2.0 * params.tau_q * params.diffusivity(),
    )
}

/// `true` when `a E (1 - slack) <= L <= b E (1 + slack)`.
pub fn sandwich_holds(lcal: f64, energy: f64, params: &MaterialParams) -> bool {
    let (a, b) = lyapunov_bounds(params);
    let slack = QUADRATURE_SLACK * energy.abs().max(f64::MIN_POSITIVE);
    a * (energy - slack) <= lcal && lcal <= b * (energy + slack)
}

/// Per-level diagnostics of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    /// Zero at `n = 0`.
    pub diss_lhs: f64,
    /// Zero at `n = 0`.
    pub diss_rhs: f64,
    pub heat: f64,
    pub c_t: f64,
    pub f: f64,
    pub lyapunov: f64,
    pub fluctuation: f64,
}

impl TraceRecord {
    pub fn dissipation_ok(&self) -> bool {
        self.n == 0
            || self.diss_lhs <= self.diss_rhs + DISSIPATION_SLACK * self.diss_lhs.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub records: Vec<TraceRecord>,
}

impl EnergyTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn initial_energy(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.energy)
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.energy)
    }

    /// Running maximum of `|C_T|` over the whole trace.
    pub fn sup_ct(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.c_t.abs()))
    }

    fn record(
        &mut self,
        n: usize,
        t: f64,
        state: &State,
        params: &MaterialParams,
        dx: f64,
        diss: (f64, f64),
    ) {
        let ly = lyapunov(state, params, dx);
        self.records.push(TraceRecord {
            n,
            t,
            energy: discrete_energy(state, params, dx),
            diss_lhs: diss.0,
            diss_rhs: diss.1,
            heat: total_heat(state, dx),
            c_t: boundary_term(state, params, dx),
            f: ly.f,
            lyapunov: ly.lcal,
            fluctuation: fluctuation_energy(state, params, dx),
        });
    }

    pub fn push_initial(&mut self, state: &State, params: &MaterialParams, grid: &Grid) {
        self.record(0, grid.t[0], state, params, grid.dx, (0.0, 0.0));
    }

    pub fn push_step(
        &mut self,
        n: usize,
        prev: &State,
        next: &State,
        params: &MaterialParams,
        grid: &Grid,
    ) {
        let d = dissipation_check(prev, next, params, grid.dx, grid.dt);
        self.record(n, grid.t[n], next, params, grid.dx, (d.lhs, d.rhs));
    }

    pub fn energy_non_increasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].energy <= w[0].energy)
    }

    /// Largest `|H^n - H^0| / |H^0|` (absolute when `H^0 = 0`).
    pub fn max_heat_drift(&self) -> f64 {
        let h0 = self.records.first().map_or(0.0, |r| r.heat);
        let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
        self.records
            .iter()
            .fold(0.0, |m, r| m.max((r.heat - h0).abs() / scale))
    }

    /// Levels at which the dissipation inequality fails.
    pub fn dissipation_violations(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| !r.dissipation_ok())
            .map(|r| r.n)
            .collect()
    }

    pub fn sandwich_violations(&self, params: &MaterialParams) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| !sandwich_holds(r.lyapunov, r.energy, params))
            .map(|r| r.n)
            .collect()
    }

    /// Exponential rate of the decaying part of the energy, fitted by least
    /// squares on `ln E_fluct` where it lies between `1e-8` and `1e-1` of its
    /// initial value. `None` when fewer than ten samples qualify.
    pub fn fitted_decay_rate(&self) -> Option<f64> {
        let e0 = self.records.first()?.fluctuation;
        if e0 <= 0.0 {
            return None;
        }
        let (times, values): (Vec<f64>, Vec<f64>) = self
            .records
            .iter()
            .filter(|r| {
                let ratio = r.fluctuation / e0;
                (1e-8..=1e-1).contains(&ratio)
            })
            .map(|r| (r.t, r.fluctuation))
            .unzip();
        fit_decay_rate(&times, &values)
    }
}

/// Least-squares rate `lambda` in `v ~ A e^{-lambda t}`. Needs at least ten positive samples.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 10 {
        return None;
    }
    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - t_mean) * (y - y_mean)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

/// Run a stepper and record diagnostics at every level.
pub fn trace_run(
    params: &MaterialParams,
    grid: &Grid,
    kind: StepperKind,
    init: State,
    stride: usize,
) -> Result<(Trajectory, EnergyTrace)> {
    let mut trace = EnergyTrace::new();
    trace.records.reserve(grid.steps() + 1);
    trace.push_initial(&init, params, grid);
    let traj = run_on_grid(params, grid, kind, init, stride, |n, prev, next| {
        trace.push_step(n, prev, next, params, grid)
    })?;
    Ok((traj, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeMode {
    /// `E <= M E0 e^{-omega t} + M_1 sup|C_T|`
    General,
    /// `E <= M E0 e^{-omega t}`, for initial data with zero mean.
    ZeroMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub mode: EnvelopeMode,
    pub sup_ct: f64,
    /// `(n, E_n, bound_n)` of the first violation.
    pub first_violation: Option<(usize, f64, f64)>,
    /// Largest `E_n / bound_n`.
    pub max_ratio: f64,
}

impl EnvelopeReport {
    pub fn ok(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn envelope_check(
    trace: &EnergyTrace,
    dc: &DecayConstants,
    mode: EnvelopeMode,
) -> EnvelopeReport {
    let e0 = trace.initial_energy();
    let mut first_violation = None;
    let mut max_ratio: f64 = 0.0;
    for r in &trace.records {
        let bound = dc.envelope(e0, r.t, mode);
        if bound > 0.0 {
            max_ratio = max_ratio.max(r.energy / bound);
        }
        if r.energy > bound && first_violation.is_none() {
            first_violation = Some((r.n, r.energy, bound));
        }
    }
    EnvelopeReport {
        mode,
        sup_ct: dc.sup_ct,
        first_violation,
        max_ratio,
    }
}

/// Decay rates of the separated mode `T ~ cos(kappa x)`, `q ~ sin(kappa x)`,
/// `kappa = m pi / l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRates {
    pub kappa: f64,
    /// Root with the smaller `|Re|`.
    pub slow: Complex64,
    /// `None` when `tau_q = 0` and the mode obeys a scalar equation.
    pub fast: Option<Complex64>,
}

/// Eigenvalues of `a' = -kappa b / (rho c)`, `tau_q b' = -(1 + mu2 kappa^2) b + k kappa a`.
///
/// For `tau_q = 0` the flux is slaved to the temperature and the single rate is
/// `-(k/rho c) kappa^2 / (1 + mu2 kappa^2)`, the Fourier rate when `mu2 = 0`.
pub fn mode_decay_oracle(params: &MaterialParams, mode_index: u32) -> ModeRates {
    let kappa = mode_index as f64 * std::f64::consts::PI / params.l;
    let k2 = kappa * kappa;
    let damping = 1.0 + params.mu2 * k2;
    if params.tau_q == 0.0 {
        return ModeRates {
            kappa,
            slow: Complex64::new(-params.diffusivity() * k2 / damping, 0.0),
            fast: None,
        };
    }
    // lambda^2 + p lambda + q = 0
    let p = damping / params.tau_q;
    let q = params.diffusivity() * k2 / params.tau_q;
    let disc = p * p - 4.0 * q;
    let (slow, fast) = if disc >= 0.0 {
        let fast = -0.5 * (p + disc.sqrt());
        (Complex64::new(q / fast, 0.0), Complex64::new(fast, 0.0))
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(-0.5 * p, im), Complex64::new(-0.5 * p, -im))
    };
    ModeRates {
        kappa,
        slow,
        fast: Some(fast),
    }
}

/// `Z_n = 1 + (M_1 sup|C_T| / (M E0)) e^{omega t_n}`.
pub fn normalized_z(trace: &EnergyTrace, dc: &DecayConstants) -> Result<Vec<f64>> {
    let e0 = trace.initial_energy();
    if e0 == 0.0 || trace.is_empty() {
        return Err(Error::DegenerateTrace("initial energy is zero"));
    }
    let factor = dc.m1 * dc.sup_ct / (dc.m * e0);
    Ok(trace
        .records
        .iter()
        .map(|r| 1.0 + factor * (dc.omega * r.t).exp())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, cosine_initial};
    use crate::model::SimulationConfig;

    fn reference() -> (MaterialParams, Grid) {
        let p = MaterialParams::reference();
        let g = build_grid(&p, &SimulationConfig::reference()).unwrap();
        (p, g)
    }

    #[test]
    fn zero_state_has_zero_everything() {
        let (p, g) = reference();
        let s = State::zeros(g.j_max);
        assert_eq!(discrete_energy(&s, &p, g.dx), 0.0);
        assert_eq!(total_heat(&s, g.dx), 0.0);
        assert_eq!(boundary_term(&s, &p, g.dx), 0.0);
        assert_eq!(lyapunov(&s, &p, g.dx), LyapunovValue { f: 0.0, lcal: 0.0 });
    }

    #[test]
    fn uniform_state_energy_heat_and_boundary_term() {
        let (p, g) = reference();
        let s = State::uniform(g.j_max, 15.0);
        let e = discrete_energy(&s, &p, g.dx);
        assert!((e - 1.125e7).abs() <= 1e-9 * 1.125e7);
        assert!((total_heat(&s, g.dx) - 1.5).abs() < 1e-12);
        assert!((boundary_term(&s, &p, g.dx) + 45000.0).abs() < 1e-8);
    }

    #[test]
    fn initial_energy_of_reference_profile() {
        let (p, g) = reference();
        let s = cosine_initial(&g, 15.0, 30.0);
        let e = discrete_energy(&s, &p, g.dx);
        // (rho c / 2) l (T_b^2 + T_f^2 / 8)
        let continuum: f64 = 0.5 * 1e6 * 0.1 * (225.0 + 900.0 / 8.0);
        assert!((continuum - 1.6875e7).abs() < 1e-6);
        // nodes 0..J omit x = l, so the sum exceeds the integral by (rho c / 2) dx T_b T_f
        let discrete = continuum + 0.5 * 1e6 * g.dx * 15.0 * 30.0;
        assert!((e - discrete).abs() <= 1e-12 * discrete);
        assert!((e - continuum).abs() <= 3e-3 * continuum);
    }

    #[test]
    fn energy_change_matches_direct_difference() {
        let (p, g) = reference();
        let a = cosine_initial(&g, 15.0, 30.0);
        let b = cosine_initial(&g, 14.0, 20.0);
        let direct = discrete_energy(&b, &p, g.dx) - discrete_energy(&a, &p, g.dx);
        let stable = energy_change(&a, &b, &p, g.dx);
        assert!((direct - stable).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn compensated_sum_of_squares() {
        // 1 + 1e-16 pairs lose the small part under naive summation
        let xs = [1.0, 1e-8, 1e-8, -1.0];
        assert_eq!(sum_of_squares(&xs), 2.0 + 2e-16);
        let ys: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let exact = 0.01 * (100.0 * 101.0 * 201.0 / 6.0);
        assert!((sum_of_squares(&ys) - exact).abs() <= 1e-15 * exact);
    }

    #[test]
    fn dissipation_fixed_point_and_corruption() {
        let (p, g) = reference();
        let s = State::uniform(g.j_max, 15.0);
        let r = dissipation_check(&s, &s, &p, g.dx, g.dt);
        assert_eq!((r.lhs, r.rhs, r.ok), (0.0, 0.0, true));
        let hotter = State::uniform(g.j_max, 15.001);
        assert!(!dissipation_check(&s, &hotter, &p, g.dx, g.dt).ok);
    }

    #[test]
    fn reference_decay_constants() {
        let dc = decay_constants(&MaterialParams::reference());
        assert!((dc.beta - 4e-3).abs() < 1e-18);
        // omega = 4e-3 / (0.03 + 0.0084 + 3.2e-5)
        assert!((dc.omega - 4e-3 / 0.038432).abs() < 1e-15);
        assert!((dc.omega - 0.1041).abs() < 1e-4);
        assert!((dc.m - 0.038432 / 0.0128).abs() < 1e-12);
        assert!((dc.m - 3.0025).abs() < 1e-12);
        assert!((dc.gamma0 - 78.125).abs() < 1e-10);
        assert!((dc.m1 - 2.0 * 78.125 / dc.omega).abs() < 1e-9);
    }

    #[test]
    fn fourier_decay_constants() {
        let p = MaterialParams::reference().fourier_limit();
        let dc = decay_constants(&p);
        assert_eq!(dc.beta, 2.0 * p.diffusivity());
        assert!((dc.omega - dc.beta / (3.0 * 0.01)).abs() < 1e-15);
        assert!((dc.m - 3.0).abs() < 1e-15);
        assert!((dc.gamma0 - 100.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_lyapunov_matches_closed_form() {
        let (p, g) = reference();
        let s = State::uniform(g.j_max, 15.0);
        let ly = lyapunov(&s, &p, g.dx);
        let tb: f64 = 15.0;
        let big_j = g.j_max as f64;
        let quadrature: f64 = (0..=g.j_max)
            .map(|j| g.dx * (g.dx * (big_j + 1.0 - j as f64) * tb).powi(2))
            .sum::<f64>()
            * 0.5
            * 1e6
            + 0.5 * 1e6 * p.mu2 * p.l * tb * tb;
        assert!((ly.f - quadrature).abs() <= 1e-10 * quadrature);
        let continuum = 0.5 * 1e6 * tb * tb * p.l.powi(3) / 3.0 + 0.5 * 1e6 * p.mu2 * p.l * tb * tb;
        assert!((ly.f - continuum).abs() <= 0.01 * continuum);
    }

    #[test]
    fn sandwich_for_reference_profile() {
        let (p, g) = reference();
        let s = cosine_initial(&g, 15.0, 30.0);
        let e = discrete_energy(&s, &p, g.dx);
        assert!(sandwich_holds(lyapunov(&s, &p, g.dx).lcal, e, &p));
    }

    #[test]
    fn fourier_mode_rate() {
        let p = MaterialParams::reference().fourier_limit();
        let r = mode_decay_oracle(&p, 1);
        let expected = -2e-3 * (std::f64::consts::PI / 0.1).powi(2);
        assert!((r.slow.re - expected).abs() < 1e-12);
        assert!((r.slow.re + 1.9739).abs() < 1e-4);
        assert!(r.fast.is_none());
    }

    #[test]
    fn reference_mode_rates() {
        let p = MaterialParams::reference();
        let r = mode_decay_oracle(&p, 1);
        let fast = r.fast.unwrap();
        assert!((r.slow.re + 0.525).abs() < 5e-4, "{}", r.slow);
        assert!((fast.re + 469.9).abs() < 0.05, "{fast}");
        assert_eq!(r.slow.im, 0.0);
    }

    #[test]
    fn mode_rates_solve_the_characteristic_polynomial() {
        // independent route: power iteration on the 2x2 system matrix gives the fast root
        let p = MaterialParams::reference();
        let r = mode_decay_oracle(&p, 1);
        let kappa = r.kappa;
        let a = [
            [0.0, -kappa / p.heat_capacity()],
            [
                p.k * kappa / p.tau_q,
                -(1.0 + p.mu2 * kappa * kappa) / p.tau_q,
            ],
        ];
        let mut v = [1.0, 1.0];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let w = [
                a[0][0] * v[0] + a[0][1] * v[1],
                a[1][0] * v[0] + a[1][1] * v[1],
            ];
            lambda = (w[0] * v[0] + w[1] * v[1]) / (v[0] * v[0] + v[1] * v[1]);
            let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
            v = [w[0] / norm, w[1] / norm];
        }
        let fast = r.fast.unwrap().re;
        assert!((lambda - fast).abs() <= 1e-9 * fast.abs());
        // trace and determinant identities
        let trace = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        assert!((r.slow.re + fast - trace).abs() <= 1e-12 * trace.abs());
        assert!((r.slow.re * fast - det).abs() <= 1e-12 * det);
    }

    #[test]
    fn eigenvalue_product_identity() {
        for (tau, mu2) in [(8e-3, 2.8e-3), (1e-1, 1e-1), (5.0, 0.0), (2.0, 5e-2)] {
            let p = MaterialParams::reference()
                .with_relaxation(tau, mu2)
                .unwrap();
            let r = mode_decay_oracle(&p, 2);
            let prod = r.slow * r.fast.unwrap();
            let expected = p.k * r.kappa * r.kappa / (p.heat_capacity() * p.tau_q);
            assert!((prod.re - expected).abs() <= 1e-12 * expected);
            assert!(prod.im.abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn z_series_endpoints() {
        let trace = EnergyTrace {
            records: (0..3)
                .map(|n| TraceRecord {
                    n,
                    t: n as f64,
                    energy: 10.0,
                    diss_lhs: 0.0,
                    diss_rhs: 0.0,
                    heat: 1.0,
                    c_t: if n == 1 { -4.0 } else { 2.0 },
                    f: 0.0,
                    lyapunov: 0.0,
                    fluctuation: 0.0,
                })
                .collect(),
        };
        let dc = decay_constants(&MaterialParams::reference()).with_sup_ct(&trace);
        assert_eq!(dc.sup_ct, 4.0);
        let z = normalized_z(&trace, &dc).unwrap();
        assert!((z[0] - (1.0 + dc.m1 * 4.0 / (dc.m * 10.0))).abs() < 1e-12);
        assert!(z.windows(2).all(|w| w[1] > w[0]));

        let flat = DecayConstants { sup_ct: 0.0, ..dc };
        assert!(normalized_z(&trace, &flat)
            .unwrap()
            .iter()
            .all(|&v| v == 1.0));

        let empty = EnergyTrace {
            records: vec![TraceRecord {
                energy: 0.0,
                ..trace.records[0]
            }],
        };
        assert!(matches!(
            normalized_z(&empty, &dc),
            Err(Error::DegenerateTrace(_))
        ));
    }

    #[test]
    fn fit_recovers_a_pure_exponential() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        assert!((fit_decay_rate(&t, &v).unwrap() - 1.7).abs() < 1e-12);
        assert!(fit_decay_rate(&t[..5], &v[..5]).is_none());
    }

    #[test]
    fn zero_trajectory_satisfies_envelope() {
        let (p, g) = reference();
        let g = g.with_time(1.2e-2, 0.12).unwrap();
        let (_, trace) = trace_run(
            &p,
            &g,
            StepperKind::CoupledImplicit,
            State::zeros(g.j_max),
            1,
        )
        .unwrap();
        let dc = decay_constants(&p).with_sup_ct(&trace);
        assert!(envelope_check(&trace, &dc, EnvelopeMode::General).ok());
        assert!(envelope_check(&trace, &dc, EnvelopeMode::ZeroMean).ok());
    }
}
