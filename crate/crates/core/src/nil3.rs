//! Heisenberg group arithmetic, its left-invariant metric and Maurer–Cartan data
//! of sampled immersions.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CField, DomainGrid, Field, RField};
use crate::loopalg::{Mat2C, I};

/// A point of Nil₃ in global coordinates (which are also exponential coordinates).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Nil3Point {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl Nil3Point {
    pub const IDENTITY: Nil3Point = Nil3Point { x1: 0.0, x2: 0.0, x3: 0.0 };

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Nil3Point { x1, x2, x3 }
    }

    pub fn nan() -> Self {
        Nil3Point::new(f64::NAN, f64::NAN, f64::NAN)
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    /// Max-norm distance between coordinate triples.
    pub fn dist_max(&self, other: &Nil3Point) -> f64 {
        (self.x1 - other.x1).abs().max((self.x2 - other.x2).abs()).max((self.x3 - other.x3).abs())
    }

    /// Rotation by θ about the e₃ axis (an isometry fixing the identity).
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Nil3Point::new(c * self.x1 - s * self.x2, s * self.x1 + c * self.x2, self.x3)
    }

    /// The isometry ρ(x) = (x₁, −x₂, −x₃).
    pub fn reflected(&self) -> Self {
        Nil3Point::new(self.x1, -self.x2, -self.x3)
    }
}

/// Tangent vector in the left-invariant frame {e₁, e₂, e₃}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Nil3Tangent {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

/// Group product (a₁+b₁, a₂+b₂, a₃+b₃+½(a₁b₂ − b₁a₂)).
pub fn nil3_mul(a: &Nil3Point, b: &Nil3Point) -> Nil3Point {
    Nil3Point::new(a.x1 + b.x1, a.x2 + b.x2, a.x3 + b.x3 + 0.5 * (a.x1 * b.x2 - b.x1 * a.x2))
}

pub fn nil3_inv(p: &Nil3Point) -> Nil3Point {
    Nil3Point::new(-p.x1, -p.x2, -p.x3)
}

/// The left-invariant metric at `p` applied to coordinate vectors `v`, `u`.
pub fn metric_eval(p: &Nil3Point, v: [f64; 3], u: [f64; 3]) -> f64 {
    let a3 = |w: [f64; 3]| w[2] + 0.5 * (p.x2 * w[0] - p.x1 * w[1]);
    v[0] * u[0] + v[1] * u[1] + a3(v) * a3(u)
}

/// Where a surface came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub lambda: C64,
    pub base: (usize, usize),
    pub source: String,
}

/// Sampled immersion of a grid domain into Nil₃. Masked nodes hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    pub points: Field<Nil3Point>,
    pub meta: SurfaceMeta,
}

impl SurfaceGrid {
    pub fn new(points: Field<Nil3Point>, meta: SurfaceMeta) -> Self {
        SurfaceGrid { points, meta }
    }

    pub fn grid(&self) -> DomainGrid {
        self.points.grid
    }

    pub fn base_point(&self) -> Nil3Point {
        let (i, j) = self.meta.base;
        *self.points.at(i, j)
    }

    /// The surface left-translated so that the base node sits at the identity.
    pub fn based(&self) -> SurfaceGrid {
        self.left_translated(&nil3_inv(&self.base_point()))
    }

    pub fn left_translated(&self, g: &Nil3Point) -> SurfaceGrid {
        SurfaceGrid { points: self.points.map(|p| nil3_mul(g, p)), meta: self.meta.clone() }
    }

    pub fn map_points(&self, f: impl Fn(&Nil3Point) -> Nil3Point) -> SurfaceGrid {
        SurfaceGrid { points: self.points.map(f), meta: self.meta.clone() }
    }

    /// Max coordinate distance to `other` over nodes finite in both.
    pub fn max_dist(&self, other: &SurfaceGrid) -> f64 {
        self.points
            .data
            .iter()
            .zip(&other.points.data)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| a.dist_max(b))
            .fold(0.0, f64::max)
    }

    pub fn coordinate(&self, c: usize) -> CField {
        self.points.map(|p| C64::new(p.coords()[c], 0.0))
    }
}

/// Complexified Maurer–Cartan components f⁻¹f_z = Σ φ_k e_k.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiField {
    pub phi: [CField; 3],
}

impl PhiField {
    pub fn grid(&self) -> DomainGrid {
        self.phi[0].grid
    }

    pub fn from_fn(grid: DomainGrid, f: impl Fn(usize, usize) -> [C64; 3]) -> Self {
        let vals = Field::from_fn(grid, f);
        PhiField { phi: std::array::from_fn(|c| vals.map(|v| v[c])) }
    }

    pub fn at(&self, k: usize) -> [C64; 3] {
        [self.phi[0].data[k], self.phi[1].data[k], self.phi[2].data[k]]
    }

    pub fn map(&self, f: impl Fn([C64; 3]) -> [C64; 3]) -> PhiField {
        PhiField::from_fn(self.grid(), |i, j| f(self.at(self.grid().index(i, j))))
    }

    pub fn scaled(&self, s: C64) -> PhiField {
        self.map(|p| p.map(|v| v * s))
    }

    /// Action of the rotation by θ about e₃.
    pub fn rotated(&self, theta: f64) -> PhiField {
        let e = C64::from_polar(1.0, theta);
        self.map(|[p1, p2, p3]| {
            let plus = e * (p1 + I * p2);
            let minus = e.conj() * (p1 - I * p2);
            [0.5 * (plus + minus), -0.5 * I * (plus - minus), p3]
        })
    }

    /// Action of ρ(x) = (x₁, −x₂, −x₃).
    pub fn reflected(&self) -> PhiField {
        self.map(|[p1, p2, p3]| [p1, -p2, -p3])
    }
}

/// φ₁ = ∂_z x₁, φ₂ = ∂_z x₂, φ₃ = ∂_z x₃ + ½(x₂∂_z x₁ − x₁∂_z x₂) by stencils.
pub fn left_maurer_cartan(f: &SurfaceGrid) -> PhiField {
    let x: [CField; 3] = std::array::from_fn(|c| f.coordinate(c));
    let d: [CField; 3] = std::array::from_fn(|c| x[c].d_z());
    let grid = f.grid();
    PhiField::from_fn(grid, |i, j| {
        let k = grid.index(i, j);
        let (x1, x2) = (x[0].data[k], x[1].data[k]);
        [d[0].data[k], d[1].data[k], d[2].data[k] + 0.5 * (x2 * d[0].data[k] - x1 * d[1].data[k])]
    })
}

/// Per node: (|Σφ_k²|, e^u = 2Σ|φ_k|²).
pub fn conformality_residual(phi: &PhiField) -> (RField, RField) {
    let g = phi.grid();
    let res = Field::from_fn(g, |i, j| {
        let p = phi.at(g.index(i, j));
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).norm()
    });
    let eu = Field::from_fn(g, |i, j| {
        let p = phi.at(g.index(i, j));
        2.0 * p.iter().map(|v| v.norm_sqr()).sum::<f64>()
    });
    (res, eu)
}

/// Coefficients of `v` in the basis 𝓔₁, 𝓔₂, 𝓔₃ read as a Nil₃ point, plus the
/// distance of `v` from the real span of the basis.
pub fn xi_nil(v: &Mat2C) -> (Nil3Point, f64) {
    let b = 2.0 * v[(0, 1)];
    let p = Nil3Point::new(b.im, -b.re, (2.0 * I * v[(0, 0)]).re);
    let back = Mat2C::e1() * p.x1 + Mat2C::e2() * p.x2 + Mat2C::e3() * p.x3;
    (p, (*v - back).norm())
}

/// As [`xi_nil`], failing when the residual exceeds `tol`.
pub fn xi_nil_checked(v: &Mat2C, tol: f64) -> Result<Nil3Point> {
    let (p, r) = xi_nil(v);
    if r > tol {
        return Err(Error::NotInSu11(r));
    }
    Ok(p)
}

/// ∫ from node `base` along a line of samples with 4th-order accuracy.
fn cumulative(f: &[f64], h: f64, base: usize) -> Vec<f64> {
    let n = f.len();
    let seg = |k: usize| -> f64 {
        let w = h / 24.0;
        if k == 0 {
            w * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if k + 2 == n {
            w * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            w * (-f[k - 1] + 13.0 * f[k] + 13.0 * f[k + 1] - f[k + 2])
        }
    };
    let mut out = vec![0.0; n];
    for k in base + 1..n {
        out[k] = out[k - 1] + seg(k - 1);
    }
    for k in (0..base).rev() {
        out[k] = out[k + 1] - seg(k);
    }
    out
}

/// Integrates Maurer–Cartan data back to a surface: along the base row first,
/// then along every column, with f(base) = `base_point`.
pub fn integrate_phi(phi: &PhiField, base: (usize, usize), base_point: Nil3Point) -> SurfaceGrid {
    let g = phi.grid();
    let mut pts = vec![Nil3Point::nan(); g.len()];
    // Along a line with direction dz/ds = `dir`, returns the three coordinate
    // increments from the first sample of the line.
    let line = |ks: &[usize], dir: C64, h: f64, start: usize, p0: Nil3Point| -> Vec<Nil3Point> {
        let d = |c: usize, k: usize| 2.0 * (phi.phi[c].data[k] * dir).re;
        let x1 = cumulative(&ks.iter().map(|&k| d(0, k)).collect::<Vec<_>>(), h, start);
        let x2 = cumulative(&ks.iter().map(|&k| d(1, k)).collect::<Vec<_>>(), h, start);
        let x1: Vec<f64> = x1.iter().map(|v| v + p0.x1).collect();
        let x2: Vec<f64> = x2.iter().map(|v| v + p0.x2).collect();
        let f3: Vec<f64> =
            ks.iter().enumerate().map(|(n, &k)| d(2, k) - 0.5 * (x2[n] * d(0, k) - x1[n] * d(1, k))).collect();
        let x3 = cumulative(&f3, h, start);
        (0..ks.len()).map(|n| Nil3Point::new(x1[n], x2[n], x3[n] + p0.x3)).collect()
    };
    let (bi, bj) = base;
    let row: Vec<usize> = (0..g.nx).map(|j| g.index(bi, j)).collect();
    let row_pts = line(&row, C64::new(1.0, 0.0), g.hx(), bj, base_point);
    for j in 0..g.nx {
        let col: Vec<usize> = (0..g.ny).map(|i| g.index(i, j)).collect();
        let col_pts = line(&col, I, g.hy(), bi, row_pts[j]);
        for (i, p) in col_pts.into_iter().enumerate() {
            pts[g.index(i, j)] = p;
        }
    }
    SurfaceGrid::new(
        Field::from_vec(g, pts),
        SurfaceMeta { lambda: C64::new(1.0, 0.0), base, source: "integrated".into() },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paraboloid(g: DomainGrid) -> SurfaceGrid {
        let pts = Field::from_fn(g, |i, j| {
            let (x, y) = (g.x(j), g.y(i));
            Nil3Point::new(-x, -y.sinh(), 0.5 * x * y.sinh())
        });
        SurfaceGrid::new(pts, SurfaceMeta { base: (g.ny / 2, g.nx / 2), ..Default::default() })
    }

    #[test]
    fn group_law_examples() {
        let p = nil3_mul(&Nil3Point::new(1.0, 0.0, 0.0), &Nil3Point::new(0.0, 1.0, 0.0));
        assert_eq!(p, Nil3Point::new(1.0, 1.0, 0.5));
        let q = Nil3Point::new(0.3, -2.0, 5.0);
        assert_eq!(nil3_mul(&Nil3Point::IDENTITY, &q), q);
        assert_eq!(nil3_mul(&q, &nil3_inv(&q)), Nil3Point::IDENTITY);
        let r = nil3_inv(&Nil3Point::new(1.0, 1.0, 0.5));
        assert_eq!(r, Nil3Point::new(-1.0, -1.0, -0.5));
        assert_eq!(nil3_mul(&Nil3Point::new(1.0, 1.0, 0.5), &r), Nil3Point::IDENTITY);
        assert_eq!(nil3_inv(&Nil3Point::new(2.5, 0.0, 0.0)), Nil3Point::new(-2.5, 0.0, 0.0));
    }

    #[test]
    fn metric_examples() {
        let o = Nil3Point::IDENTITY;
        assert_eq!(metric_eval(&o, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), 1.0);
        let p = Nil3Point::new(0.7, -1.3, 2.0);
        assert_eq!(metric_eval(&p, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]), 1.0);
        let p = Nil3Point::new(0.0, 2.0, 0.0);
        assert_eq!(metric_eval(&p, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), 2.0);
    }

    #[test]
    fn maurer_cartan_of_paraboloid() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let phi = left_maurer_cartan(&paraboloid(g));
        for k in 0..g.len() {
            let y = g.z_at(k).im;
            let want = [C64::new(-0.5, 0.0), C64::new(0.0, 0.5 * y.cosh()), C64::new(0.5 * y.sinh(), 0.0)];
            for c in 0..3 {
                assert!((phi.phi[c].data[k] - want[c]).norm() < 2e-6, "node {k} comp {c}");
            }
        }
    }

    #[test]
    fn maurer_cartan_of_plane_and_constant() {
        let g = DomainGrid::square(1.0, 11).unwrap();
        let plane =
            SurfaceGrid::new(Field::from_fn(g, |i, j| Nil3Point::new(g.x(j), g.y(i), 0.0)), SurfaceMeta::default());
        let phi = left_maurer_cartan(&plane);
        for k in 0..g.len() {
            let z = g.z_at(k);
            assert!((phi.phi[2].data[k] - C64::new(z.im, z.re) / 4.0).norm() < 1e-12);
        }
        let c = SurfaceGrid::new(Field::filled(g, Nil3Point::new(1.0, 2.0, 3.0)), SurfaceMeta::default());
        let phi = left_maurer_cartan(&c);
        assert!(phi.phi.iter().all(|f| f.data.iter().all(|v| v.norm() < 1e-12)));
    }

    #[test]
    fn conformality_examples() {
        let g = DomainGrid::square(1.0, 5).unwrap();
        let iso = PhiField::from_fn(g, |_, _| [C64::new(1.0, 0.0), I, C64::new(0.0, 0.0)]);
        let (r, eu) = conformality_residual(&iso);
        assert_eq!(r.data[0], 0.0);
        assert_eq!(eu.data[0], 4.0);
        let bad = PhiField::from_fn(g, |_, _| [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(conformality_residual(&bad).0.data[0], 1.0);
        let par = PhiField::from_fn(g, |i, _| {
            let y = g.y(i);
            [C64::new(-0.5, 0.0), C64::new(0.0, 0.5 * y.cosh()), C64::new(0.5 * y.sinh(), 0.0)]
        });
        let (r, eu) = conformality_residual(&par);
        for k in 0..g.len() {
            let y = g.z_at(k).im;
            assert!(r.data[k] < 1e-15);
            assert!((eu.data[k] - y.cosh().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn xi_nil_examples() {
        assert_eq!(xi_nil(&Mat2C::e3()).0, Nil3Point::new(0.0, 0.0, 1.0));
        let v = Mat2C::e1() * 2.0 - Mat2C::e2();
        assert_eq!(xi_nil(&v).0, Nil3Point::new(2.0, -1.0, 0.0));
        let (p, r) = xi_nil(&(Mat2C::sigma3() * C64::new(0.0, 0.5)));
        assert_eq!(p, Nil3Point::new(0.0, 0.0, -1.0));
        assert_eq!(r, 0.0);
        assert!(xi_nil_checked(&Mat2C::identity(), 1e-12).is_err());
    }

    #[test]
    fn integrate_phi_inverts_maurer_cartan() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let f = paraboloid(g);
        let phi = left_maurer_cartan(&f);
        let back = integrate_phi(&phi, (20, 20), Nil3Point::IDENTITY);
        assert!(back.max_dist(&f) < 1e-5, "{}", back.max_dist(&f));
    }

    #[test]
    fn rotation_and_reflection_act_on_phi_like_on_points() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let f = paraboloid(g);
        let phi = left_maurer_cartan(&f);
        for (moved, on_phi) in
            [(f.map_points(|p| p.rotated(0.8)), phi.rotated(0.8)), (f.map_points(|p| p.reflected()), phi.reflected())]
        {
            let direct = left_maurer_cartan(&moved);
            for c in 0..3 {
                for k in 0..g.len() {
                    assert!((direct.phi[c].data[k] - on_phi.phi[c].data[k]).norm() < 1e-9);
                }
            }
        }
    }
}
