//! The reference heating case: cosine profile on a 10 cm insulated rod.
//!
//! Writes trace.csv, profiles.csv, constants.txt and plot.gp into the
//! directory given as the first argument (default `reference-run`).

use gk_heat::cli::{cmd_run, RunManifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "reference-run".into());
    let manifest = RunManifest::default().with_out_dir(out);
    let run = cmd_run(&manifest)?;

    let trace = &run.trace;
    println!("steps            {}", trace.len() - 1);
    println!("E(0)             {:.6e}", trace.initial_energy());
    println!("E(t_final)       {:.6e}", trace.final_energy());
    println!("closed-form E_eq {:.6e}", 0.5 * manifest.params.heat_capacity() * manifest.params.l * 15.0 * 15.0);
    println!("heat drift       {:.2e}", trace.max_heat_drift());
    println!("dissipation      {} violations", trace.dissipation_violations().len());
    println!("sup |C_T|        {:.4e}", run.constants.sup_ct);
    for every in trace.records.iter().step_by(250) {
        println!("  t = {:6.2}  E = {:.6e}  lyapunov = {:.6e}", every.t, every.energy, every.lyapunov);
    }
    for f in &run.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
