use nil3_dual::config::{parse_lambda, GridSpec};
use nil3_dual::dualize::{dual_local_check, dualize_with, DualOptions};
use nil3_dual::grid::{DomainGrid, Field};
use nil3_dual::io::fmt;
use nil3_dual::loopalg::{project_su11, su11_residual, Mat2C, MatrixLoop};
use nil3_dual::nil3::{conformality_residual, nil3_inv, nil3_mul, xi_nil, Nil3Point};
use nil3_dual::spinor::{phi_from_spinors, spinors_from_phi, uh_from_spinors, InversionOptions, SpinorField};
use nil3_dual::verify::{Tolerances, CHECKS};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn point() -> impl Strategy<Value = Nil3Point> {
    (coord(), coord(), coord()).prop_map(|(a, b, c)| Nil3Point::new(a, b, c))
}

fn complex(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn mat(r: f64) -> impl Strategy<Value = Mat2C> {
    [complex(r), complex(r), complex(r), complex(r)].prop_map(Mat2C)
}

fn close(a: &Nil3Point, b: &Nil3Point, tol: f64) -> bool {
    a.dist_max(b) <= tol * (1.0 + a.coords().iter().map(|v| v.abs()).fold(0.0, f64::max))
}

fn constant_spinors(a: C64, b: C64) -> SpinorField {
    let g = DomainGrid::square(1.0, 5).unwrap();
    SpinorField::from_fn(g, C64::new(1.0, 0.0), |_, _| (a, b))
}

proptest! {
    #[test]
    fn group_law_is_associative_with_inverses(a in point(), b in point(), c in point()) {
        let l = nil3_mul(&nil3_mul(&a, &b), &c);
        let r = nil3_mul(&a, &nil3_mul(&b, &c));
        prop_assert!(close(&l, &r, 1e-12));
        prop_assert!(close(&nil3_mul(&a, &nil3_inv(&a)), &Nil3Point::IDENTITY, 1e-12));
    }

    #[test]
    fn rotations_and_reflection_are_automorphisms(a in point(), b in point(), t in -7.0..7.0f64) {
        let ab = nil3_mul(&a, &b);
        prop_assert!(close(&ab.rotated(t), &nil3_mul(&a.rotated(t), &b.rotated(t)), 1e-12));
        prop_assert!(close(&ab.reflected(), &nil3_mul(&a.reflected(), &b.reflected()), 1e-12));
    }

    #[test]
    fn lie_algebra_coordinates_round_trip(p in point()) {
        let v = Mat2C::e1() * p.x1 + Mat2C::e2() * p.x2 + Mat2C::e3() * p.x3;
        let (q, res) = xi_nil(&v);
        prop_assert!(res < 1e-12);
        prop_assert!(close(&p, &q, 1e-14));
    }

    #[test]
    fn su11_projection_is_idempotent(a in complex(3.0), b in complex(3.0), noise in mat(1e-6)) {
        let s = (1.0 + b.norm_sqr()).sqrt() / a.norm().max(1e-3);
        let m = Mat2C::new(a * s, b, b.conj(), (a * s).conj()) + noise;
        let p = project_su11(&m);
        prop_assert!(su11_residual(&p) < 1e-10);
        prop_assert!((project_su11(&p) - p).norm() < 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn loop_evaluation_is_multiplicative(a in mat(1.0), b in mat(1.0), c in mat(1.0), d in mat(1.0), t in 0.0..6.3f64) {
        let x = MatrixLoop::from_terms(&[(-1, a), (0, b)]);
        let y = MatrixLoop::from_terms(&[(0, c), (2, d)]);
        let l = C64::from_polar(1.0, t);
        let lhs = x.mul(&y).eval(l);
        let rhs = x.eval(l) * y.eval(l);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn plus_inverse_inverts_on_the_circle(b in mat(0.3), t in 0.0..6.3f64) {
        let x = MatrixLoop::from_terms(&[(0, Mat2C::identity()), (1, b)]);
        let inv = x.plus_inverse(60);
        let l = C64::from_polar(1.0, t);
        prop_assert!((x.eval(l) * inv.eval(l) - Mat2C::identity()).norm() < 1e-10);
    }

    #[test]
    fn spinor_data_is_conformal(a in complex(2.0), b in complex(2.0)) {
        prop_assume!(a.norm() + b.norm() > 1e-2);
        let s = constant_spinors(a, b);
        let (res, eu) = conformality_residual(&phi_from_spinors(&s));
        let (eu_s, h) = uh_from_spinors(&s);
        let n = a.norm_sqr() + b.norm_sqr();
        prop_assert!(res.data[0] <= 1e-12 * eu.data[0]);
        prop_assert!((eu_s.data[0] - 4.0 * n * n).abs() <= 1e-12 * (1.0 + eu_s.data[0]));
        prop_assert!((h.data[0] - 2.0 * (a.norm_sqr() - b.norm_sqr())).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn spinors_are_recovered_up_to_sign(a in complex(2.0), b in complex(2.0)) {
        prop_assume!(a.norm() > 1e-2 && b.norm() > 1e-2);
        let s = constant_spinors(a, b);
        let g = s.grid();
        let back = spinors_from_phi(&phi_from_spinors(&s), &InversionOptions::centered(&g)).unwrap();
        let (p, q) = back.at(0);
        let plus = (p - a).norm().max((q - b).norm());
        let minus = (p + a).norm().max((q + b).norm());
        prop_assert!(plus.min(minus) < 1e-10 * (1.0 + a.norm() + b.norm()));
    }

    #[test]
    fn dual_spinors_carry_the_dual_invariants(a in complex(2.0), b in complex(2.0), bb in complex(1.0)) {
        prop_assume!(bb.norm() > 1e-2 && (a.norm_sqr() - b.norm_sqr()).abs() > 1e-2);
        let s = constant_spinors(a, b);
        let g = s.grid();
        let (_, h) = uh_from_spinors(&s);
        let pair = dualize_with(&s, &h, &Field::filled(g, bb), &DualOptions::centered(&g)).unwrap();
        let rep = dual_local_check(&pair);
        prop_assert!(rep.eu < 1e-10 && rep.h < 1e-10, "{rep:?}");
    }

    #[test]
    fn lambda_angles_land_on_the_circle(deg in -720.0..720.0f64) {
        let z = parse_lambda(&format!("{deg}deg")).unwrap();
        prop_assert!((z.norm() - 1.0).abs() < 1e-15);
        prop_assert!((z - C64::from_polar(1.0, deg.to_radians())).norm() < 1e-12);
    }

    #[test]
    fn grid_specs_round_trip(x0 in -5.0..0.0f64, w in 0.1..5.0f64, y0 in -5.0..0.0f64, v in 0.1..5.0f64, nx in 5usize..300, ny in 5usize..300) {
        let text = format!("{x0},{},{y0},{},{nx},{ny}", x0 + w, y0 + v);
        let g: GridSpec = text.parse().unwrap();
        prop_assert_eq!(g.grid().unwrap(), DomainGrid::new(x0, x0 + w, y0, y0 + v, nx, ny).unwrap());
    }

    #[test]
    fn fixed_format_round_trips_exactly(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn tolerance_overrides_apply(k in 0usize..CHECKS.len(), e in -14i32..-1) {
        let name = CHECKS[k].0;
        let mut t = Tolerances::default();
        t.apply(&format!("{name}=1e{e}")).unwrap();
        prop_assert_eq!(t.get(name), 10f64.powi(e));
        let bad = format!("{name}=-1");
        prop_assert!(t.apply(&bad).is_err());
    }
}
