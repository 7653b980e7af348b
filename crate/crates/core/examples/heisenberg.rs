//! The Heisenberg group Nil₃: group law, isometries, and the round trip
//! surface → Maurer–Cartan data → surface.
//!
//! cargo run --example heisenberg

use nil3_dual::grid::{DomainGrid, Field};
use nil3_dual::nil3::{
    conformality_residual, integrate_phi, left_maurer_cartan, nil3_inv, nil3_mul, Nil3Point, SurfaceGrid, SurfaceMeta,
};

fn main() {
    let a = Nil3Point::new(1.0, 0.0, 0.0);
    let b = Nil3Point::new(0.0, 1.0, 0.0);
    println!("a·b = {:?}, b·a = {:?}", nil3_mul(&a, &b), nil3_mul(&b, &a));
    println!("(a·b)⁻¹ = {:?}", nil3_inv(&nil3_mul(&a, &b)));
    let p = Nil3Point::new(0.3, -1.2, 2.0);
    println!("rotation by π/2: {:?}, reflection ρ: {:?}", p.rotated(std::f64::consts::FRAC_PI_2), p.reflected());

    // the paraboloid x₃ = −x₁x₂/2 type surface (−x, −sinh y, (x/2) sinh y)
    let g = DomainGrid::square(1.0, 41).unwrap();
    let f = SurfaceGrid::new(
        Field::from_fn(g, |i, j| {
            let (x, y) = (g.x(j), g.y(i));
            Nil3Point::new(-x, -y.sinh(), 0.5 * x * y.sinh())
        }),
        SurfaceMeta { base: (20, 20), ..Default::default() },
    );
    let phi = left_maurer_cartan(&f);
    let (res, eu) = conformality_residual(&phi);
    let worst = res.data.iter().zip(&eu.data).map(|(r, e)| r / e).fold(0.0, f64::max);
    println!("conformality |Σφ²|/e^u ≤ {worst:.2e}");
    let back = integrate_phi(&phi, (20, 20), f.points.data[g.index(20, 20)]);
    println!("integrated back: max coordinate error {:.2e}", back.max_dist(&f));
}
