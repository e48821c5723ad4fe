//! Config files, the `run`/`verify`/`sweep` commands and their CSV output.
//!
//! A config file holds `key = value` lines; `#` starts a comment. Recognised
//! keys are `rho c tau_q mu2 k l dx dt t_final T_b T_f stepper stride out_dir`,
//! and anything missing takes its reference-case value.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{
    decay_constants, envelope_check, equilibrium_energy, mode_decay_oracle, normalized_z,
    DecayConstants, EnergyTrace, EnvelopeMode, EnvelopeReport, HEAT_DRIFT_TOL,
    QUOTED_EQUILIBRIUM_ENERGY,
};
use crate::discretization::{build_grid, cosine_initial, Grid, State};
use crate::error::Error;
use crate::model::{MaterialParams, SimulationConfig, StepperKind};
use crate::scheme::{
    assemble, gap_between, run_on_grid, step_dense_reference, step_vectorial_as_printed, Stepper,
    Trajectory,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const DEFAULT_STRIDE: usize = 25;
pub const DEFAULT_OUT_DIR: &str = "gkheat-out";

/// Relative tolerance of the fitted decay rate against the spectral oracle.
pub const RATE_FIT_TOL: f64 = 0.02;
/// Relative tolerance of the banded step against the dense reference solve.
pub const ORACLE_TOL: f64 = 1e-10;

pub const TRACE_HEADER: [&str; 9] = [
    "n", "t", "E", "diss_lhs", "diss_rhs", "heat", "C_T", "lyapunov", "Z",
];
pub const SUMMARY_HEADER: [&str; 7] = [
    "tau_q",
    "mu2",
    "fitted_rate",
    "omega",
    "M",
    "E_final",
    "monotone",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(Error::SingularPivot { .. } | Error::SingularMatrix) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub params: MaterialParams,
    pub config: SimulationConfig,
    pub stride: usize,
    pub out_dir: PathBuf,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            params: MaterialParams::reference(),
            config: SimulationConfig::reference(),
            stride: DEFAULT_STRIDE,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

impl RunManifest {
    /// `zero_mean` when `T_b = 0`, otherwise `cosine`, followed by the stepper name.
    pub fn case_label(&self) -> String {
        let data = if self.config.t_base == 0.0 {
            "zero_mean"
        } else {
            "cosine"
        };
        format!("{data}_{}", self.config.stepper)
    }

    pub fn envelope_mode(&self) -> EnvelopeMode {
        if self.config.t_base == 0.0 {
            EnvelopeMode::ZeroMean
        } else {
            EnvelopeMode::General
        }
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(build_grid(&self.params, &self.config)?)
    }

    pub fn initial_state(&self, grid: &Grid) -> State {
        cosine_initial(grid, self.config.t_base, self.config.t_fluct)
    }

    pub fn with_out_dir(self, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            ..self
        }
    }
}

pub fn parse_config(text: &str) -> CliResult<RunManifest> {
    let mut m = RunManifest::default();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| CliError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(CliError::Parse {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        if seen.iter().any(|k| k == key) {
            return Err(CliError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        let num = || {
            value.parse::<f64>().map_err(|e| CliError::Parse {
                line,
                message: format!("`{key}`: {e}"),
            })
        };
        match key {
            "rho" => m.params.rho = num()?,
            "c" => m.params.c = num()?,
            "tau_q" => m.params.tau_q = num()?,
            "mu2" => m.params.mu2 = num()?,
            "k" => m.params.k = num()?,
            "l" => m.params.l = num()?,
            "dx" => m.config.dx = num()?,
            "dt" => m.config.dt = num()?,
            "t_final" => m.config.t_final = num()?,
            "T_b" => m.config.t_base = num()?,
            "T_f" => m.config.t_fluct = num()?,
            "stepper" => {
                m.config.stepper = value
                    .parse()
                    .map_err(|message| CliError::Parse { line, message })?;
            }
            "stride" => {
                m.stride = match value.parse::<usize>() {
                    Ok(s) if s >= 1 => s,
                    _ => {
                        return Err(CliError::Parse {
                            line,
                            message: format!("`stride` must be a positive integer, got `{value}`"),
                        })
                    }
                }
            }
            "out_dir" => m.out_dir = PathBuf::from(value),
            other => return Err(CliError::UnknownKey(other.to_string())),
        }
        seen.push(key.to_string());
    }
    m.params = crate::model::validate(m.params)?;
    m.config = m.config.validated()?;
    build_grid(&m.params, &m.config)?;
    Ok(m)
}

pub fn load_config(path: &Path) -> CliResult<RunManifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvTraceRow {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub diss_lhs: f64,
    pub diss_rhs: f64,
    pub heat: f64,
    pub c_t: f64,
    pub lyapunov: f64,
    pub z: f64,
}

/// Rows for `trace.csv`; `Z` is NaN when the initial energy vanishes.
pub fn trace_rows(trace: &EnergyTrace, dc: &DecayConstants) -> Vec<CsvTraceRow> {
    let z = normalized_z(trace, dc).unwrap_or_else(|_| vec![f64::NAN; trace.len()]);
    trace
        .records
        .iter()
        .zip(z)
        .map(|(r, z)| CsvTraceRow {
            n: r.n,
            t: r.t,
            energy: r.energy,
            diss_lhs: r.diss_lhs,
            diss_rhs: r.diss_rhs,
            heat: r.heat,
            c_t: r.c_t,
            lyapunov: r.lyapunov,
            z,
        })
        .collect()
}

pub fn write_trace_csv<W: io::Write>(out: W, rows: &[CsvTraceRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        let mut rec = vec![r.n.to_string()];
        rec.extend(
            [
                r.t, r.energy, r.diss_lhs, r.diss_rhs, r.heat, r.c_t, r.lyapunov, r.z,
            ]
            .iter()
            .map(|v| fmt_num(*v)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).ok_or_else(|| CliError::Parse {
        line,
        message: format!("missing column {i}"),
    })?;
    raw.trim().parse().map_err(|e: T::Err| CliError::Parse {
        line,
        message: format!("column {i}: {e}"),
    })
}

pub fn read_trace_csv<R: io::Read>(input: R) -> CliResult<Vec<CsvTraceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(CliError::Parse {
            line: 1,
            message: format!("unexpected trace header {:?}", header),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        rows.push(CsvTraceRow {
            n: parse_field(&rec, 0, line)?,
            t: parse_field(&rec, 1, line)?,
            energy: parse_field(&rec, 2, line)?,
            diss_lhs: parse_field(&rec, 3, line)?,
            diss_rhs: parse_field(&rec, 4, line)?,
            heat: parse_field(&rec, 5, line)?,
            c_t: parse_field(&rec, 6, line)?,
            lyapunov: parse_field(&rec, 7, line)?,
            z: parse_field(&rec, 8, line)?,
        });
    }
    Ok(rows)
}

/// Snapshots on the flux grid `x_0..x_{J+1}`. `temperature[s]` has `J + 1`
/// entries; its cell on the last row is left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub temperature: Vec<Vec<f64>>,
    pub flux: Vec<Vec<f64>>,
}

impl Profiles {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            x: traj.grid.x.clone(),
            times: traj.iter().map(|(t, _)| t).collect(),
            temperature: traj
                .states
                .iter()
                .map(|s| s.temperature().to_vec())
                .collect(),
            flux: traj.states.iter().map(|s| s.flux().to_vec()).collect(),
        }
    }
}

/// Columns: `x`, then `T@t` for each stored time, then `q@t` for each stored time.
pub fn write_profiles_csv<W: io::Write>(out: W, p: &Profiles) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    header.extend(p.times.iter().map(|t| format!("T@{}", fmt_num(*t))));
    header.extend(p.times.iter().map(|t| format!("q@{}", fmt_num(*t))));
    w.write_record(&header)?;
    for (j, x) in p.x.iter().enumerate() {
        let mut rec = vec![fmt_num(*x)];
        rec.extend(
            p.temperature
                .iter()
                .map(|col| col.get(j).map_or_else(String::new, |v| fmt_num(*v))),
        );
        rec.extend(p.flux.iter().map(|col| fmt_num(col[j])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profiles_csv<R: io::Read>(input: R) -> CliResult<Profiles> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let cols = header.len();
    if cols < 1 || (cols - 1) % 2 != 0 || header.get(0) != Some("x") {
        return Err(CliError::Parse {
            line: 1,
            message: "profiles header must be x followed by paired T@ and q@ columns".into(),
        });
    }
    let snaps = (cols - 1) / 2;
    let mut times = Vec::with_capacity(snaps);
    for (i, h) in header.iter().skip(1).take(snaps).enumerate() {
        let t = h
            .strip_prefix("T@")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::Parse {
                line: 1,
                message: format!("bad column name `{h}` at {}", i + 1),
            })?;
        times.push(t);
    }
    let mut p = Profiles {
        x: Vec::new(),
        times,
        temperature: vec![Vec::new(); snaps],
        flux: vec![Vec::new(); snaps],
    };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        p.x.push(parse_field(&rec, 0, line)?);
        for s in 0..snaps {
            if !rec.get(1 + s).unwrap_or("").is_empty() {
                p.temperature[s].push(parse_field(&rec, 1 + s, line)?);
            }
            p.flux[s].push(parse_field(&rec, 1 + snaps + s, line)?);
        }
    }
    Ok(p)
}

/// `key = value` lines with the decay constants and reference energies.
pub fn constants_text(m: &RunManifest, dc: &DecayConstants, trace: &EnergyTrace) -> String {
    let mut s = String::new();
    let heat = trace.records.first().map_or(0.0, |r| r.heat);
    let closed_form =
        0.5 * m.params.heat_capacity() * m.params.l * m.config.t_base * m.config.t_base;
    let _ = writeln!(s, "# case {}", m.case_label());
    for (k, v) in [
        ("beta", dc.beta),
        ("omega", dc.omega),
        ("M", dc.m),
        ("gamma0", dc.gamma0),
        ("M1", dc.m1),
        ("sup_C_T", dc.sup_ct),
        ("E_initial", trace.initial_energy()),
        ("E_final", trace.final_energy()),
        ("heat", heat),
        ("E_equilibrium_closed_form", closed_form),
        (
            "E_equilibrium_from_heat",
            equilibrium_energy(heat, &m.params),
        ),
        ("E_equilibrium_quoted", QUOTED_EQUILIBRIUM_ENERGY),
    ] {
        let _ = writeln!(s, "{k} = {}", fmt_num(v));
    }
    s
}

/// Parse `key = value` lines, skipping comments.
pub fn parse_constants(text: &str) -> CliResult<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| CliError::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let v = v.trim().parse().map_err(|e| CliError::Parse {
            line: i + 1,
            message: format!("{e}"),
        })?;
        out.push((k.trim().to_string(), v));
    }
    Ok(out)
}

/// A gnuplot script for the three standard figures, reading the CSVs next to it.
pub fn plot_script(snapshots: usize, dc: &DecayConstants, e0: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "omega = {}", fmt_num(dc.omega));
    let _ = writeln!(s, "M0 = {}", fmt_num(dc.m));
    let _ = writeln!(s, "M1 = {}", fmt_num(dc.m1));
    let _ = writeln!(s, "supCT = {}", fmt_num(dc.sup_ct));
    let _ = writeln!(s, "E0 = {}", fmt_num(e0));
    let _ = writeln!(s, "envelope(t) = M0*E0*exp(-omega*t) + M1*supCT");
    let _ = writeln!(s);
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output 'temperature.png'");
    let _ = writeln!(s, "set xlabel 'x [m]'");
    let _ = writeln!(s, "set ylabel 't [s]'");
    let _ = writeln!(s, "set zlabel 'T'");
    let _ = writeln!(s, "unset key");
    let _ = write!(s, "splot ");
    let plots: Vec<String> = (0..snapshots)
        .map(|i| {
            format!(
                "'profiles.csv' using 1:(word(columnhead({c}),1)*0 + {i}):{c} with lines lc rgb '#1f4e79'",
                c = i + 2
            )
        })
        .collect();
    let _ = writeln!(s, "{}", plots.join(", \\\n      "));
    let _ = writeln!(s);
    let _ = writeln!(s, "set key");
    let _ = writeln!(s, "set output 'energy.png'");
    let _ = writeln!(s, "set xlabel 't [s]'");
    let _ = writeln!(s, "set ylabel 'E'");
    let _ = writeln!(s, "plot 'trace.csv' using 2:3 with lines title 'E'");
    let _ = writeln!(s);
    let _ = writeln!(s, "set output 'energy_log.png'");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(
        s,
        "plot 'trace.csv' using 2:3 with lines title 'E', envelope(x) title 'envelope'"
    );
    s
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub trace: EnergyTrace,
    pub constants: DecayConstants,
    pub files: Vec<PathBuf>,
}

/// Simulate the manifest, returning the trajectory and diagnostics without writing anything.
pub fn simulate(m: &RunManifest) -> CliResult<(Trajectory, EnergyTrace, DecayConstants)> {
    let grid = m.grid()?;
    let (traj, trace) = crate::diagnostics::trace_run(
        &m.params,
        &grid,
        m.config.stepper,
        m.initial_state(&grid),
        m.stride,
    )?;
    let dc = decay_constants(&m.params).with_sup_ct(&trace);
    Ok((traj, trace, dc))
}

/// Writes `trace.csv`, `profiles.csv`, `constants.txt` and `plot.gp` into `out_dir`.
pub fn cmd_run(m: &RunManifest) -> CliResult<RunOutput> {
    let (traj, trace, dc) = simulate(m)?;
    fs::create_dir_all(&m.out_dir)?;
    let path = |name: &str| m.out_dir.join(name);
    let files = vec![
        path("trace.csv"),
        path("profiles.csv"),
        path("constants.txt"),
        path("plot.gp"),
    ];
    write_trace_csv(
        io::BufWriter::new(fs::File::create(&files[0])?),
        &trace_rows(&trace, &dc),
    )?;
    write_profiles_csv(
        io::BufWriter::new(fs::File::create(&files[1])?),
        &Profiles::from_trajectory(&traj),
    )?;
    fs::write(&files[2], constants_text(m, &dc, &trace))?;
    fs::write(
        &files[3],
        plot_script(traj.len(), &dc, trace.initial_energy()),
    )?;
    Ok(RunOutput {
        trajectory: traj,
        trace,
        constants: dc,
        files,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Largest and mean per-step gap between the literal vectorial step and the
/// coupled step, both taken from the coupled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSummary {
    pub steps: usize,
    pub max_temperature: f64,
    pub max_flux: f64,
    pub mean_temperature: f64,
    pub mean_flux: f64,
    pub first_temperature: f64,
    pub first_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub case_label: String,
    pub checks: Vec<Check>,
    pub gap: Option<GapSummary>,
    pub envelope: EnvelopeReport,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            EXIT_OK
        } else {
            EXIT_VERIFY
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("verify {}\n", self.case_label);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {:<20} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        if let Some(g) = &self.gap {
            let _ = writeln!(
                s,
                "INFO printed_vs_coupled steps={} first(T={:.3e}, q={:.3e}) max(T={:.3e}, q={:.3e}) mean(T={:.3e}, q={:.3e})",
                g.steps,
                g.first_temperature,
                g.first_flux,
                g.max_temperature,
                g.max_flux,
                g.mean_temperature,
                g.mean_flux
            );
        }
        s
    }
}

/// Compare `kind` steps against the dense reference on `J = 2..=8` with seeded random states.
pub fn oracle_equivalence(
    params: &MaterialParams,
    dt: f64,
    kind: StepperKind,
    seed: u64,
) -> CliResult<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for j_max in 2..=8 {
        let grid = Grid::uniform(params.l, j_max, dt, 1)?;
        let stepper = Stepper::new(kind, params, &grid)?;
        for _ in 0..10 {
            let t: Vec<f64> = (0..=j_max).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q: Vec<f64> = (0..j_max)
                .map(|_| rng.gen_range(-1.0..1.0) * params.k / params.l)
                .collect();
            let prev = State::from_interior(t, &q)?;
            let fast = stepper.step(&prev)?;
            let dense = step_dense_reference(params, &grid, &prev)?;
            worst = worst.max(fast.max_abs_diff(&dense) / dense.max_abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// The stepper whose invariants `verify` checks: Fourier runs keep their own
/// path, everything else is checked on the coupled solve.
pub fn reference_stepper(kind: StepperKind) -> StepperKind {
    match kind {
        StepperKind::FourierLimit => StepperKind::FourierLimit,
        _ => StepperKind::CoupledImplicit,
    }
}

pub fn cmd_verify(m: &RunManifest) -> CliResult<VerifyReport> {
    let grid = m.grid()?;
    let kind = reference_stepper(m.config.stepper);
    let ops =
        (m.config.stepper == StepperKind::VectorialAsPrinted).then(|| assemble(&m.params, &grid));
    let mut trace = EnergyTrace::new();
    let init = m.initial_state(&grid);
    trace.push_initial(&init, &m.params, &grid);
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    let mut gap_err = None;
    run_on_grid(&m.params, &grid, kind, init, m.stride, |n, prev, next| {
        trace.push_step(n, prev, next, &m.params, &grid);
        if let Some(ops) = &ops {
            match step_vectorial_as_printed(ops, prev) {
                Ok(printed) => {
                    let g = gap_between(&printed, next);
                    gaps.push((g.temperature, g.flux));
                }
                Err(e) => gap_err = Some(e),
            }
        }
    })?;
    if let Some(e) = gap_err {
        return Err(e.into());
    }
    let dc = decay_constants(&m.params).with_sup_ct(&trace);
    let mut checks = Vec::new();

    checks.push(Check {
        name: "energy_monotone",
        passed: trace.energy_non_increasing(),
        detail: format!(
            "E0={:.6e} E_final={:.6e}",
            trace.initial_energy(),
            trace.final_energy()
        ),
    });

    let viol = trace.dissipation_violations();
    checks.push(Check {
        name: "dissipation",
        passed: viol.is_empty(),
        detail: match viol.first() {
            None => format!("{} steps", trace.len() - 1),
            Some(n) => format!("{} violations, first at n={n}", viol.len()),
        },
    });

    let drift = trace.max_heat_drift();
    checks.push(Check {
        name: "heat_conservation",
        passed: drift <= HEAT_DRIFT_TOL,
        detail: format!("max relative drift {drift:.3e}"),
    });

    let sandwich = trace.sandwich_violations(&m.params);
    checks.push(Check {
        name: "lyapunov_sandwich",
        passed: sandwich.is_empty(),
        detail: match sandwich.first() {
            None => "all levels".into(),
            Some(n) => format!("{} violations, first at n={n}", sandwich.len()),
        },
    });

    let envelope = envelope_check(&trace, &dc, m.envelope_mode());
    checks.push(Check {
        name: "decay_envelope",
        passed: envelope.ok(),
        detail: match envelope.first_violation {
            None => format!(
                "{:?}, max E/bound {:.3e}",
                envelope.mode, envelope.max_ratio
            ),
            Some((n, e, b)) => format!(
                "{:?}, first violation n={n} E={e:.6e} bound={b:.6e}",
                envelope.mode
            ),
        },
    });

    let oracle = oracle_equivalence(&m.params, m.config.dt, kind, 0x5eed)?;
    checks.push(Check {
        name: "oracle_equivalence",
        passed: oracle <= ORACLE_TOL,
        detail: format!("J=2..8, worst relative {oracle:.3e}"),
    });

    let target = 2.0 * mode_decay_oracle(&m.params, 1).slow.re.abs();
    checks.push(match trace.fitted_decay_rate() {
        Some(rate) => {
            let rel = (rate - target).abs() / target;
            Check {
                name: "mode_rate",
                passed: rel <= RATE_FIT_TOL,
                detail: format!(
                    "fitted {rate:.6} vs 2|lambda_slow| {target:.6} ({:.2}%)",
                    100.0 * rel
                ),
            }
        }
        None => Check {
            name: "mode_rate",
            passed: true,
            detail: "no decaying fluctuation to fit".into(),
        },
    });

    let gap = (!gaps.is_empty()).then(|| {
        let n = gaps.len() as f64;
        GapSummary {
            steps: gaps.len(),
            max_temperature: gaps.iter().fold(0.0, |a, g| a.max(g.0)),
            max_flux: gaps.iter().fold(0.0, |a, g| a.max(g.1)),
            mean_temperature: gaps.iter().map(|g| g.0).sum::<f64>() / n,
            mean_flux: gaps.iter().map(|g| g.1).sum::<f64>() / n,
            first_temperature: gaps[0].0,
            first_flux: gaps[0].1,
        }
    });

    Ok(VerifyReport {
        case_label: m.case_label(),
        checks,
        gap,
        envelope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub tau_q: f64,
    pub mu2: f64,
    /// NaN when there is nothing to fit.
    pub fitted_rate: f64,
    pub omega: f64,
    pub m: f64,
    pub final_energy: f64,
    pub monotone: bool,
}

/// Runs every `(tau_q, mu2)` pair with the coupled stepper, in parallel, and
/// writes `summary.csv` plus one `pair_NNN/trace.csv` per pair.
pub fn cmd_sweep(m: &RunManifest, pairs: &[(f64, f64)]) -> CliResult<Vec<SweepRow>> {
    let params: Vec<MaterialParams> = pairs
        .iter()
        .map(|&(tau, mu2)| m.params.with_relaxation(tau, mu2))
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(&m.out_dir)?;
    let rows = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> CliResult<SweepRow> {
            let manifest = RunManifest {
                params: *p,
                config: SimulationConfig {
                    stepper: StepperKind::CoupledImplicit,
                    ..m.config
                },
                stride: m.stride,
                out_dir: m.out_dir.join(format!("pair_{i:03}")),
            };
            let (_, trace, dc) = simulate(&manifest)?;
            fs::create_dir_all(&manifest.out_dir)?;
            write_trace_csv(
                io::BufWriter::new(fs::File::create(manifest.out_dir.join("trace.csv"))?),
                &trace_rows(&trace, &dc),
            )?;
            Ok(SweepRow {
                tau_q: p.tau_q,
                mu2: p.mu2,
                fitted_rate: trace.fitted_decay_rate().unwrap_or(f64::NAN),
                omega: dc.omega,
                m: dc.m,
                final_energy: trace.final_energy(),
                monotone: trace.energy_non_increasing(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_summary_csv(
        io::BufWriter::new(fs::File::create(m.out_dir.join("summary.csv"))?),
        &rows,
    )?;
    Ok(rows)
}

pub fn write_summary_csv<W: io::Write>(out: W, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let mut rec: Vec<String> = [r.tau_q, r.mu2, r.fitted_rate, r.omega, r.m, r.final_energy]
            .iter()
            .map(|v| fmt_num(*v))
            .collect();
        rec.push(r.monotone.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: io::Read>(input: R) -> CliResult<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(CliError::Parse {
            line: 1,
            message: format!("unexpected summary header {:?}", header),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        rows.push(SweepRow {
            tau_q: parse_field(&rec, 0, line)?,
            mu2: parse_field(&rec, 1, line)?,
            fitted_rate: parse_field(&rec, 2, line)?,
            omega: parse_field(&rec, 3, line)?,
            m: parse_field(&rec, 4, line)?,
            final_energy: parse_field(&rec, 5, line)?,
            monotone: parse_field(&rec, 6, line)?,
        });
    }
    Ok(rows)
}

/// `"tau,mu2"` as used by `--pair`.
pub fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `tau_q,mu2`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(a)?, num(b)?))
}

#[derive(Debug, Parser)]
#[command(
    name = "gkheat",
    version,
    about = "Guyer-Krumhansl heat conduction solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and write trace.csv, profiles.csv, constants.txt and plot.gp.
    Run {
        /// Config file; reference case when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Output directory, overriding `out_dir`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check the discrete invariants and report pass/fail per property.
    Verify {
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Run a set of (tau_q, mu2) pairs and write summary.csv.
    Sweep {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// A `tau_q,mu2` pair; repeatable.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(f64, f64)>,
    },
}

fn manifest_from(config: Option<&Path>, out: Option<PathBuf>) -> CliResult<RunManifest> {
    let m = match config {
        Some(p) => load_config(p)?,
        None => RunManifest::default(),
    };
    Ok(match out {
        Some(o) => m.with_out_dir(o),
        None => m,
    })
}

fn dispatch(cmd: Command) -> CliResult<i32> {
    // a closed stdout (e.g. piped into `head`) is not an error worth reporting
    let mut stdout = io::stdout().lock();
    match cmd {
        Command::Run { config, out } => {
            let m = manifest_from(config.as_deref(), out)?;
            let r = cmd_run(&m)?;
            let _ = writeln!(
                stdout,
                "{}: {} steps, E0 = {:.6e}, E_final = {:.6e}",
                m.case_label(),
                r.trace.len() - 1,
                r.trace.initial_energy(),
                r.trace.final_energy()
            );
            for f in &r.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::Verify { config } => {
            let m = manifest_from(config.as_deref(), None)?;
            let report = cmd_verify(&m)?;
            let _ = write!(stdout, "{}", report.render());
            Ok(report.exit_code())
        }
        Command::Sweep { config, out, pairs } => {
            let m = manifest_from(config.as_deref(), out)?;
            let rows = cmd_sweep(&m, &pairs)?;
            for r in &rows {
                let _ = writeln!(
                    stdout,
                    "tau_q={:e} mu2={:e} rate={:.6} omega={:.6} monotone={}",
                    r.tau_q, r.mu2, r.fitted_rate, r.omega, r.monotone
                );
            }
            let _ = writeln!(stdout, "wrote {}", m.out_dir.join("summary.csv").display());
            Ok(EXIT_OK)
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
