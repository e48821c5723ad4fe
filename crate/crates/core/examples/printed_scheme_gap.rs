//! The closed matrix recursion, evaluated literally, against the coupled solve
//! from the same state. Prints the per-step gap as the time step is halved.

use gk_heat::discretization::{build_grid, cosine_initial};
use gk_heat::model::{MaterialParams, SimulationConfig};
use gk_heat::scheme::{assemble, step_gap};

fn main() -> gk_heat::Result<()> {
    let params = MaterialParams::reference();
    let base = build_grid(&params, &SimulationConfig::reference())?;
    println!("{:>10} {:>12} {:>12} {:>8} {:>10}", "dt", "gap T", "gap q", "ratio", "c_B");
    let mut prev: Option<f64> = None;
    let mut dt = 1.2e-2;
    for _ in 0..10 {
        let grid = base.with_time(dt, dt)?;
        let gap = step_gap(&params, &grid, &cosine_initial(&grid, 15.0, 30.0))?;
        let ratio = prev.map_or(String::from("-"), |p| format!("{:.4}", p / gap.temperature));
        println!(
            "{dt:>10.3e} {:>12.4e} {:>12.4e} {ratio:>8} {:>10.3e}",
            gap.temperature,
            gap.flux,
            assemble(&params, &grid).c_b
        );
        prev = Some(gap.temperature);
        dt /= 2.0;
    }
    Ok(())
}
