//! The paraboloid from its holomorphic potential: DPW, Sym formula, and a
//! comparison with the closed-form associated family.
//!
//! cargo run --example paraboloid

use std::f64::consts::FRAC_PI_3;

use nil3_dual::config::default_out_dir;
use nil3_dual::dpw::{dpw_pipeline, DpwOptions, Example};
use nil3_dual::grid::Field;
use nil3_dual::io::write_obj;
use nil3_dual::nil3::{Nil3Point, SurfaceGrid};
use nil3_dual::C64;

fn closed_form(z: C64, lambda: C64) -> Nil3Point {
    let i = C64::new(0.0, 1.0);
    let p = -0.25 * i * z / lambda;
    let ps = 0.25 * i * lambda * z.conj();
    let s = (2.0 * (p + ps)).sinh();
    Nil3Point::new((-2.0 * i * (p - ps)).re, -s.re, (i * (p - ps) * s).re)
}

fn main() -> nil3_dual::Result<()> {
    let ex = Example::builtin("paraboloid")?;
    let g = ex.grid;
    let lambdas = [C64::new(1.0, 0.0), C64::from_polar(1.0, FRAC_PI_3)];
    let out = dpw_pipeline(&ex.potential, &ex.init, &g, &lambdas, &DpwOptions::centered(&g))?;
    println!(
        "big-cell failures: {}, max Iwasawa reconstruction {:.2e}",
        out.report.failures(),
        out.report.max_reconstruction()
    );

    let dir = default_out_dir().join("examples");
    std::fs::create_dir_all(&dir)?;
    for (n, sym) in out.sym.iter().enumerate() {
        let want =
            SurfaceGrid::new(Field::from_fn(g, |i, j| closed_form(g.z(i, j), sym.lambda)), sym.f_minus.meta.clone());
        let err = sym.f_minus.based().max_dist(&want.based());
        println!("λ = {:.4}: |f₋ − closed form| = {err:.2e}", sym.lambda);
        let mask = vec![false; g.len()];
        write_obj(&dir.join(format!("paraboloid-{n}.obj")), &sym.f_minus, &mask)?;
    }
    println!("meshes in {}", dir.display());
    Ok(())
}
