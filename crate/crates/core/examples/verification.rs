//! The verification battery on a built-in example, and a negative control.
//!
//! cargo run --release --example verification -- smyth-1

use nil3_dual::dpw::Example;
use nil3_dual::verify::{negative_control, Corruption, RunArtifacts, Tolerances};
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "paraboloid".into());
    let ex = Example::builtin(&name)?;
    let lambdas = [C64::new(1.0, 0.0), C64::from_polar(1.0, std::f64::consts::FRAC_PI_3), C64::new(0.0, 1.0)];
    let art = RunArtifacts::build(&ex, &lambdas, 12)?;
    let tol = Tolerances::default();
    let report = art.verify(&tol);
    print!("{}", report.table());
    let noisy = negative_control(&art, Corruption::FrameNoise { amplitude: 1e-3, seed: 1 }, &tol);
    println!("with 1e-3 frame noise, failing: {:?}", noisy.failing());
    Ok(())
}
