//! Switching off relaxation and nonlocality recovers Fourier conduction. The
//! dedicated implicit Euler stepper and the coupled solve give the same run,
//! and one step damps the cosine mode close to the continuum implicit Euler
//! factor (the gap is the spatial truncation error).

use gk_heat::discretization::{build_grid, cosine_initial};
use gk_heat::model::{MaterialParams, SimulationConfig, StepperKind};
use gk_heat::scheme::{run_on_grid, step_fourier, trajectory_difference};

fn main() -> gk_heat::Result<()> {
    let params = MaterialParams::reference().fourier_limit();
    let grid = build_grid(&params, &SimulationConfig::reference())?;
    let init = cosine_initial(&grid, 15.0, 30.0);

    let fourier = run_on_grid(&params, &grid, StepperKind::FourierLimit, init.clone(), 1, |_, _, _| {})?;
    let coupled = run_on_grid(&params, &grid, StepperKind::CoupledImplicit, init.clone(), 1, |_, _, _| {})?;
    let d = trajectory_difference(&fourier, &coupled)?;
    println!("{} levels, max relative difference T {:.2e}, q {:.2e}", coupled.len(), d.temperature, d.flux);

    let kappa = std::f64::consts::PI / params.l;
    let expected = 1.0 / (1.0 + params.diffusivity() * kappa * kappa * grid.dt);
    let next = step_fourier(&params, &grid, &init)?;
    // amplitude of the fluctuation at x = 0
    let factor = (next.temperature()[0] - 15.0) / (init.temperature()[0] - 15.0);
    println!("cosine amplification {factor:.8}, continuum 1/(1 + a kappa^2 dt) = {expected:.8}");

    let wrong = step_fourier(&MaterialParams::reference(), &grid, &init);
    println!("with relaxation: {}", wrong.unwrap_err());
    Ok(())
}
