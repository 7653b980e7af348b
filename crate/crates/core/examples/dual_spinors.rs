//! Dual generating spinors of a minimal surface given by its spinors, with the
//! dual invariants e^{u*}, h*, B*, g*.
//!
//! cargo run --example dual_spinors

use std::f64::consts::FRAC_1_SQRT_2;

use nil3_dual::dualize::{double_dual, dual_invariants, dual_local_check, dual_spinors, DualOptions};
use nil3_dual::grid::DomainGrid;
use nil3_dual::spinor::{dirac_data, DiracOptions, SpinorField};
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    // paraboloid spinors ψ = (cosh(y/2), sinh(y/2))/√2
    let g = DomainGrid::square(1.0, 41)?;
    let s = SpinorField::from_fn(g, C64::new(1.0, 0.0), |i, _| {
        let y = g.y(i);
        (C64::new((y / 2.0).cosh() * FRAC_1_SQRT_2, 0.0), C64::new((y / 2.0).sinh() * FRAC_1_SQRT_2, 0.0))
    });
    let d = dirac_data(&s, &DiracOptions::default())?;
    let k = g.index(20, 20);
    println!("e^(w/2) = {:.6}, B = {:.6} at z = 0", d.potential.data[k], d.b.data[k]);

    let opts = DualOptions::centered(&g);
    let pair = dual_spinors(&s, &d, &opts)?;
    let rep = dual_local_check(&pair);
    println!(
        "dual: {} nodes, local residuals e^u* {:.1e}, h* {:.1e}, g* = {:.3} g",
        rep.count, rep.eu, rep.h, rep.g_factor
    );
    let inv = dual_invariants(&s, &d, &opts)?;
    println!(
        "at z = 0: e^u* = {:.6}, h* = {:.6}, e^(w*/2) = {:.6}",
        inv.eu.data[k], inv.h.data[k], inv.potential.data[k]
    );

    let back = double_dual(&s, &d, &opts)?;
    let err = (0..g.len())
        .map(|n| (back.at(n).0 - s.at(n).0).norm().max((back.at(n).1 - s.at(n).1).norm()))
        .fold(0.0, f64::max);
    println!("ψ** against ψ: {err:.2e}");
    Ok(())
}
