//! Iwasawa splitting Φ = F·B₊ of one loop, with the reality condition on F.
//!
//! cargo run --example iwasawa

use nil3_dual::dpw::{iwasawa, HoloPotential};
use nil3_dual::loopalg::{su11_residual, Mat2C, MatrixLoop, SQRT_I};
use nil3_dual::C64;

fn main() -> nil3_dual::Result<()> {
    let pot = HoloPotential::paraboloid();
    let z = C64::new(0.3, -0.7);
    // Φ(z) = exp(z ξ₋₁ λ⁻¹) times the initial value, as a Laurent polynomial
    let x = pot.eval(z).scale(z);
    let mut phi = MatrixLoop::identity();
    let mut term = MatrixLoop::identity();
    for n in 1..30 {
        term = term.mul(&x).scale(C64::new(1.0 / n as f64, 0.0));
        phi = phi.add(&term);
    }
    let phi = phi.right_mul(&Mat2C::diag(SQRT_I.inv(), SQRT_I));
    for n in [4, 8, 12] {
        let it = iwasawa(&phi, n)?;
        println!(
            "N = {n:2}: reconstruction {:.2e}, reality {:.2e}, cond {:.2e}",
            it.reconstruction, it.reality, it.cond
        );
    }
    let it = iwasawa(&phi, 12)?;
    for t in [0.0, 1.0, 2.5] {
        let l = C64::from_polar(1.0, t);
        println!("λ = e^({t}i): F ∈ SU(1,1) to {:.1e}", su11_residual(&it.f.eval(l)));
    }
    println!("B₊(0) = {:?}", it.bp.coeff(0));
    Ok(())
}
