//! Fitted energy decay along a path of (tau_q, mu2) pairs shrinking to the
//! Fourier limit, next to the rate guaranteed by the decay estimate.

use gk_heat::cli::{cmd_sweep, RunManifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("gk-heat-relaxation-sweep");
    let manifest = RunManifest::default().with_out_dir(&out);
    let pairs: Vec<(f64, f64)> = (0..=4)
        .map(|i| {
            let s = 2f64.powi(-i);
            (8e-3 * s, 2.8e-3 * s)
        })
        .chain([(0.0, 0.0)])
        .collect();

    let rows = cmd_sweep(&manifest, &pairs)?;
    println!("{:>10} {:>10} {:>10} {:>10} {:>8}", "tau_q", "mu2", "fitted", "omega", "monotone");
    for r in &rows {
        println!(
            "{:>10.3e} {:>10.3e} {:>10.5} {:>10.5} {:>8}",
            r.tau_q, r.mu2, r.fitted_rate, r.omega, r.monotone
        );
    }
    println!("summary in {}", out.join("summary.csv").display());
    Ok(())
}
