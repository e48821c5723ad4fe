//! Run the invariant suite on a manifest written inline.

use gk_heat::cli::{cmd_verify, parse_config};

const MANIFEST: &str = "
# reference material, shorter horizon, literal matrix recursion for comparison
t_final = 6
stepper = vectorial_as_printed
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = parse_config(MANIFEST)?;
    let report = cmd_verify(&manifest)?;
    print!("{}", report.render());
    println!("exit code {}", report.exit_code());
    Ok(())
}
