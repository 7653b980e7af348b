//! Self-duality of the helicoid: f₊ against f₋ up to isometries of Nil₃,
//! first on the same parameters, then after the domain maps z ↦ −z, −z̄, z̄.
//!
//! cargo run --release --example helicoid_self_duality

use nil3_dual::dpw::{dpw_pipeline, DpwOptions, Example};
use nil3_dual::grid::DomainGrid;
use nil3_dual::symmap::{mc_equivalent_mapped, DomainMap, MC_TOL};
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    let ex = Example::builtin("helicoid")?;
    let g = DomainGrid::square(1.0, 81)?;
    let out = dpw_pipeline(&ex.potential, &ex.init, &g, &[C64::new(1.0, 0.0)], &DpwOptions::centered(&g))?;
    let sym = &out.sym[0];
    for map in DomainMap::ALL {
        let fit = mc_equivalent_mapped(&sym.f_minus, &sym.f_plus, map, true, MC_TOL)?;
        println!(
            "{map:?}: congruent {} (residual {:.2e}, θ = {:.4}, reflected {})",
            fit.equivalent, fit.residual, fit.theta, fit.reflected
        );
    }
    // 16|B| against h² at the base point
    let k = g.index(g.ny / 2, g.nx / 2);
    let h = 4.0 * out.dirac.potential.data[k].im;
    println!("at z = 0: 16|B| = {:.6}, h² = {:.6}", 16.0 * out.dirac.b.data[k].norm(), h * h);
    Ok(())
}
