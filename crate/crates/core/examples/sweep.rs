//! The associated family over λ on the unit circle: every member is minimal
//! and e^{w/2} does not depend on λ.
//!
//! cargo run --release --example sweep -- helicoid

use nil3_dual::dpw::Example;
use nil3_dual::grid::Stats;
use nil3_dual::verify::{RunArtifacts, MARGIN};
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "paraboloid".into());
    let ex = Example::builtin(&name)?;
    let lambdas: Vec<C64> = (0..6).map(|n| C64::from_polar(1.0, n as f64 * std::f64::consts::PI / 6.0)).collect();
    let art = RunArtifacts::build(&ex, &lambdas, 12)?;
    let e0 = &art.out.dirac.potential;
    for (l, d) in lambdas.iter().zip(&art.spinor_dirac) {
        let h = Stats::of(&d.mean_curvature.map(|v| v.abs()), MARGIN);
        let drift = Stats::of(&d.potential.zip_map(e0, |a, b| (*a - *b).norm()), MARGIN);
        println!("λ = {l:.4}: max |H| {:.2e}, max |e^(w/2)(λ) − e^(w/2)| {:.2e}", h.max, drift.max);
    }
    Ok(())
}
