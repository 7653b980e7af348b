//! Extended frame from Dirac data by integrating the flat connection along
//! two path orders, then the Sym formula.
//!
//! cargo run --example frame_integration

use nil3_dual::frame::{integrate_frame, FrameOptions, PathOrder};
use nil3_dual::grid::{DomainGrid, Field};
use nil3_dual::loopalg::{Mat2C, SQRT_I};
use nil3_dual::spinor::DiracData;
use nil3_dual::symmap::sym_maps;
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    let g = DomainGrid::square(1.0, 41)?;
    // paraboloid: e^{w/2} = i/4, B = 1/16
    let d =
        DiracData::from_potential(Field::filled(g, C64::new(0.0, 0.25)), Field::filled(g, C64::new(1.0 / 16.0, 0.0)))?;
    let base = Mat2C::diag(SQRT_I.inv(), SQRT_I);
    let lambda = C64::from_polar(1.0, 0.7);
    let mut opts = FrameOptions::centered(&g);
    opts.order = PathOrder::RowFirst;
    let row = integrate_frame(&d, lambda, base, &opts)?;
    opts.order = PathOrder::ColumnFirst;
    let col = integrate_frame(&d, lambda, base, &opts)?;
    let diff = row.f.data.iter().zip(&col.f.data).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
    println!("row-first vs column-first: {diff:.2e}; max SU(1,1) residual {:.2e}", row.su11_max());
    let sym = sym_maps(&row)?;
    let k = g.index(40, 40);
    println!("f₋(1+i) = {:?}", sym.f_minus.based().points.data[k]);
    println!("f₊(1+i) = {:?}", sym.f_plus.based().points.data[k]);
    println!("Sym reality residual {:.2e}", sym.reality_max());
    Ok(())
}
