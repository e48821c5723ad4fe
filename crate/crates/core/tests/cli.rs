use std::fs;
use std::process::Command;

use gk_heat::cli::{
    cmd_run, cmd_sweep, cmd_verify, parse_config, parse_constants, read_profiles_csv, read_summary_csv,
    read_trace_csv, RunManifest, EXIT_CONFIG, EXIT_OK, EXIT_VERIFY,
};
use gk_heat::model::{MaterialParams, StepperKind};

fn manifest(text: &str, dir: &std::path::Path) -> RunManifest {
    parse_config(text).unwrap().with_out_dir(dir)
}

#[test]
fn run_writes_four_files_that_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest("", dir.path());
    let out = cmd_run(&m).unwrap();
    for name in ["trace.csv", "profiles.csv", "constants.txt", "plot.gp"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }

    let rows = read_trace_csv(fs::File::open(dir.path().join("trace.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), out.trace.len());
    assert_eq!(rows.len(), 2501);
    for (row, rec) in rows.iter().zip(&out.trace.records) {
        assert_eq!(row.n, rec.n);
        assert_eq!((row.t, row.energy, row.heat, row.c_t), (rec.t, rec.energy, rec.heat, rec.c_t));
        assert_eq!((row.diss_lhs, row.diss_rhs, row.lyapunov), (rec.diss_lhs, rec.diss_rhs, rec.lyapunov));
    }
    let e_final = rows.last().unwrap().energy;
    assert!((e_final - 1.125e7).abs() <= 5e-3 * 1.125e7);

    let prof = read_profiles_csv(fs::File::open(dir.path().join("profiles.csv")).unwrap()).unwrap();
    assert_eq!(prof.times.len(), out.trajectory.len());
    assert_eq!(prof.x, out.trajectory.grid.x);
    for (s, state) in out.trajectory.states.iter().enumerate() {
        assert_eq!(prof.temperature[s], state.temperature());
        assert_eq!(prof.flux[s], state.flux());
    }

    let kv = parse_constants(&fs::read_to_string(dir.path().join("constants.txt")).unwrap()).unwrap();
    let get = |k: &str| kv.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap();
    assert_eq!(get("omega"), out.constants.omega);
    assert_eq!(get("sup_C_T"), out.constants.sup_ct);
    assert_eq!(get("E_equilibrium_quoted"), 1.24e7);

    let plot = fs::read_to_string(dir.path().join("plot.gp")).unwrap();
    assert!(plot.contains("'trace.csv' using 2:3"));
    assert!(plot.contains("envelope(x)"));
}

#[test]
fn run_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_run(&manifest("t_final = 3", a.path())).unwrap();
    cmd_run(&manifest("t_final = 3", b.path())).unwrap();
    for name in ["trace.csv", "profiles.csv", "constants.txt", "plot.gp"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn zero_mean_run_decays_below_a_ten_thousandth() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_run(&manifest("T_b = 0", dir.path())).unwrap();
    assert!(out.trace.final_energy() <= 1e-4 * out.trace.initial_energy());
}

#[test]
fn fourier_manifest_equals_gk_manifest_without_relaxation() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let from_text = manifest("tau_q = 0\nmu2 = 0\nt_final = 3", a.path());
    let mut built = manifest("t_final = 3", b.path());
    built.params = MaterialParams::reference().with_relaxation(0.0, 0.0).unwrap();
    assert_eq!(from_text.params, built.params);
    cmd_run(&from_text).unwrap();
    cmd_run(&built).unwrap();
    assert_eq!(
        fs::read(a.path().join("trace.csv")).unwrap(),
        fs::read(b.path().join("trace.csv")).unwrap()
    );
}

#[test]
fn verify_passes_on_the_reference_cases() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["", "T_b = 0", "T_b = 0\nT_f = 0", "tau_q = 0\nmu2 = 0\nstepper = fourier_limit"] {
        let report = cmd_verify(&manifest(text, dir.path())).unwrap();
        assert!(report.all_passed(), "{text:?}\n{}", report.render());
        assert_eq!(report.checks.len(), 7);
        assert!(report.gap.is_none());
    }
}

#[test]
fn verify_reports_the_printed_gap() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest("stepper = vectorial_as_printed", dir.path());
    assert_eq!(m.config.stepper, StepperKind::VectorialAsPrinted);
    let report = cmd_verify(&m).unwrap();
    assert!(report.all_passed());
    let gap = report.gap.unwrap();
    assert_eq!(gap.steps, 2500);
    assert!(gap.max_temperature > 0.0 && gap.max_temperature >= gap.mean_temperature);
    assert!(report.render().contains("INFO printed_vs_coupled"));
}

#[test]
fn sweep_rows_are_monotone_and_beat_the_proven_rate() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest("", dir.path());
    let rows = cmd_sweep(&m, &[(8e-3, 2.8e-3), (4e-3, 1.4e-3), (0.0, 0.0)]).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r.monotone);
        assert!(r.fitted_rate >= r.omega, "{r:?}");
    }
    let back = read_summary_csv(fs::File::open(dir.path().join("summary.csv")).unwrap()).unwrap();
    assert_eq!(back, rows);
    for i in 0..3 {
        assert!(dir.path().join(format!("pair_{i:03}/trace.csv")).is_file());
    }
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cmd_sweep(&manifest("", dir.path()), &[]).unwrap().is_empty());
    assert_eq!(
        fs::read_to_string(dir.path().join("summary.csv")).unwrap(),
        "tau_q,mu2,fitted_rate,omega,M,E_final,monotone\n"
    );
}

#[test]
fn fourier_pair_rate_at_refined_step() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest("dt = 1.5e-3\nt_final = 6\nstride = 1000", dir.path());
    let rows = cmd_sweep(&m, &[(0.0, 0.0)]).unwrap();
    let target = 2.0 * 2e3 / 1e6 * (std::f64::consts::PI / 0.1).powi(2);
    assert!((rows[0].fitted_rate - target).abs() <= 0.02 * target);
}

#[test]
fn sweep_rejects_invalid_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_sweep(&manifest("", dir.path()), &[(-1.0, 0.0)]).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
}

fn gkheat(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gkheat")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("case.cfg");
    let out = dir.path().join("out");

    fs::write(&cfg, "# short reference run\nt_final = 1.2\n").unwrap();
    let (code, stdout) = gkheat(&["run", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("wrote"));
    assert!(out.join("trace.csv").is_file());

    let (code, stdout) = gkheat(&["verify", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);

    let (code, _) = gkheat(&[
        "sweep",
        "-c",
        cfg.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--pair",
        "8e-3,2.8e-3",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(read_summary_csv(fs::File::open(out.join("summary.csv")).unwrap()).unwrap().len(), 1);

    fs::write(&cfg, "speed = 3\n").unwrap();
    assert_eq!(gkheat(&["run", "-c", cfg.to_str().unwrap()]).0, EXIT_CONFIG);
    assert_eq!(gkheat(&["frobnicate"]).0, EXIT_CONFIG);
    assert_eq!(gkheat(&["verify", "-c", "/nonexistent/gk.cfg"]).0, EXIT_CONFIG);
}

#[test]
fn verify_failure_exit_code_is_three() {
    // a report with a failing check maps to the verification exit code
    let dir = tempfile::tempdir().unwrap();
    let mut report = cmd_verify(&manifest("t_final = 1.2", dir.path())).unwrap();
    assert_eq!(report.exit_code(), EXIT_OK);
    report.checks[0].passed = false;
    assert_eq!(report.exit_code(), EXIT_VERIFY);
}
