//! A user-supplied holomorphic potential read from JSON.
//!
//! cargo run --example custom_potential

use nil3_dual::dpw::{dpw_pipeline, DpwOptions, Example, HoloPotential};
use nil3_dual::grid::DomainGrid;
use nil3_dual::C64;

const POTENTIAL: &str = r#"{
  "schema": 1,
  "twisted": true,
  "terms": [
    { "power": -1, "entries": [[[0, 0]], [[1, 0]], [[0.5, 0], [0, 0.5]], [[0, 0]]] }
  ]
}"#;

fn main() -> nil3_dual::Result<()> {
    // ξ₋₁ = [[0, 1], [½ + (i/2)z, 0]]
    let pot: HoloPotential = serde_json::from_str(POTENTIAL)?;
    let g = DomainGrid::square(0.5, 41)?;
    let ex = Example::custom("custom", pot, g)?;
    let out = dpw_pipeline(&ex.potential, &ex.init, &g, &[C64::new(1.0, 0.0)], &DpwOptions::centered(&g))?;
    let k = g.index(20, 20);
    println!("e^(w/2)(0) = {:.6}, B(0) = {:.6}", out.dirac.potential.data[k], out.dirac.b.data[k]);
    println!("big-cell failures {}, Sym reality {:.2e}", out.report.failures(), out.sym[0].reality_max());
    Ok(())
}
