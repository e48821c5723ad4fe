//! Eigenvalues of the separated modes T ~ cos(kappa x), q ~ sin(kappa x).

use gk_heat::diagnostics::mode_decay_oracle;
use gk_heat::model::MaterialParams;

fn main() -> gk_heat::Result<()> {
    let cases = [
        ("reference", MaterialParams::reference()),
        ("fourier", MaterialParams::reference().fourier_limit()),
        ("no nonlocal term", MaterialParams::reference().with_relaxation(8e-3, 0.0)?),
        ("slow relaxation", MaterialParams::reference().with_relaxation(5.0, 2.8e-3)?),
    ];
    for (name, p) in cases {
        println!("{name}: tau_q = {}, mu2 = {}", p.tau_q, p.mu2);
        for m in 1..=4 {
            let r = mode_decay_oracle(&p, m);
            match r.fast {
                Some(fast) => println!("  m = {m}: slow {:.5}, fast {:.5}", r.slow, fast),
                None => println!("  m = {m}: {:.5}", r.slow.re),
            }
        }
    }
    Ok(())
}
