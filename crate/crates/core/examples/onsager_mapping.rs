//! Converting between the Onsagerian coefficients (l1, l2, m) and the
//! Guyer-Krumhansl parameters (tau_q, k, mu2).

use gk_heat::model::{gk_to_onsager, onsager_to_gk, MaterialParams, OnsagerCoefficients};

fn main() -> gk_heat::Result<()> {
    let p = MaterialParams::reference();
    let t_ref = 288.15;
    let o = gk_to_onsager(p.tau_q, p.k, p.mu2, p.rho, t_ref);
    println!("l1 = {:.6e}, l2 = {:.6e}, m = {:.6e} at T = {t_ref} K", o.l1, o.l2, o.m);

    let back = onsager_to_gk(&OnsagerCoefficients::new(o.l1, o.l2, o.m, o.t_ref)?, p.rho);
    println!("tau_q = {:.6e}, k = {:.6e}, mu2 = {:.6e}", back.tau_q, back.k, back.mu2);

    // l1 = m = 0 leaves Fourier conduction
    let fourier = onsager_to_gk(&OnsagerCoefficients::new(0.0, o.l2, 0.0, t_ref)?, p.rho);
    println!("l1 = m = 0 -> tau_q = {}, mu2 = {}, k = {:.1}", fourier.tau_q, fourier.mu2, fourier.k);

    println!("{}", OnsagerCoefficients::new(0.0, -1.0, 0.0, t_ref).unwrap_err());
    Ok(())
}
