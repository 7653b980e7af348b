//! Smyth surfaces: B = −z^k vanishes at the origin, where the dual metric
//! e^{u*} = 4⁴|B|²e^u/h⁴ degenerates (a branch point of f₊).
//!
//! cargo run --release --example smyth_branch_point -- 2

use nil3_dual::dpw::{dpw_pipeline, DpwOptions, Example};
use nil3_dual::grid::DomainGrid;
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    let k: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let ex = Example::builtin(&format!("smyth-{k}"))?;
    let g = DomainGrid::square(0.5, 101)?;
    let out = dpw_pipeline(&ex.potential, &ex.init, &g, &[C64::new(1.0, 0.0)], &DpwOptions::centered(&g))?;
    println!("smyth-{k}: ratio e^(u*)/e^u = 256|B|²/h⁴ along the positive real axis");
    let i = g.ny / 2;
    for j in (g.nx / 2..g.nx).step_by(10) {
        let n = g.index(i, j);
        let b = out.dirac.b.data[n].norm();
        let h = 4.0 * out.dirac.potential.data[n].im;
        println!("  |z| = {:.2}: |B| = {:.3e}, h = {:.4}, ratio = {:.3e}", g.x(j), b, h, 256.0 * b * b / h.powi(4));
    }
    println!("exclusion radius used for export: {}", ex.exclusion_radius);
    Ok(())
}
