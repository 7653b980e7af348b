//! 2×2 complex matrices, SU(1,1) checks and truncated Laurent loops in λ.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// √i, fixed as e^{iπ/4}.
pub const SQRT_I: C64 = C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Complex 2×2 matrix, entries stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2C(pub [C64; 4]);

impl Mat2C {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2C([a, b, c, d])
    }

    pub const fn zero() -> Self {
        Mat2C([ZERO; 4])
    }

    pub const fn identity() -> Self {
        Mat2C([ONE, ZERO, ZERO, ONE])
    }

    pub const fn diag(a: C64, d: C64) -> Self {
        Mat2C([a, ZERO, ZERO, d])
    }

    pub const fn offdiag(b: C64, c: C64) -> Self {
        Mat2C([ZERO, b, c, ZERO])
    }

    pub fn nan() -> Self {
        Mat2C([C64::new(f64::NAN, f64::NAN); 4])
    }

    /// σ₃ = diag(1, −1).
    pub const fn sigma3() -> Self {
        Mat2C::diag(ONE, C64::new(-1.0, 0.0))
    }

    /// 𝓔₁ = ½[[0, i], [−i, 0]].
    pub const fn e1() -> Self {
        Mat2C::offdiag(C64::new(0.0, 0.5), C64::new(0.0, -0.5))
    }

    /// 𝓔₂ = ½[[0, −1], [−1, 0]].
    pub const fn e2() -> Self {
        Mat2C::offdiag(C64::new(-0.5, 0.0), C64::new(-0.5, 0.0))
    }

    /// 𝓔₃ = ½[[−i, 0], [0, i]].
    pub const fn e3() -> Self {
        Mat2C::diag(C64::new(0.0, -0.5), C64::new(0.0, 0.5))
    }

    pub fn det(&self) -> C64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    /// Inverse by the adjugate; non-finite if the matrix is singular.
    pub fn inv(&self) -> Self {
        let d = self.det();
        Mat2C([self.0[3] / d, -self.0[1] / d, -self.0[2] / d, self.0[0] / d])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Mat2C([self.0[0].conj(), self.0[2].conj(), self.0[1].conj(), self.0[3].conj()])
    }

    pub fn diag_part(&self) -> Self {
        Mat2C::diag(self.0[0], self.0[3])
    }

    pub fn offdiag_part(&self) -> Self {
        Mat2C::offdiag(self.0[1], self.0[2])
    }

    pub fn commutator(&self, other: &Mat2C) -> Self {
        *self * *other - *other * *self
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }
}

impl Index<(usize, usize)> for Mat2C {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.0[2 * r + c]
    }
}

impl IndexMut<(usize, usize)> for Mat2C {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.0[2 * r + c]
    }
}

impl Add for Mat2C {
    type Output = Mat2C;
    fn add(self, o: Mat2C) -> Mat2C {
        Mat2C(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }
}

impl AddAssign for Mat2C {
    fn add_assign(&mut self, o: Mat2C) {
        for k in 0..4 {
            self.0[k] += o.0[k];
        }
    }
}

impl Sub for Mat2C {
    type Output = Mat2C;
    fn sub(self, o: Mat2C) -> Mat2C {
        Mat2C(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }
}

impl Neg for Mat2C {
    type Output = Mat2C;
    fn neg(self) -> Mat2C {
        Mat2C(self.0.map(|z| -z))
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;
    fn mul(self, o: Mat2C) -> Mat2C {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Mat2C([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<C64> for Mat2C {
    type Output = Mat2C;
    fn mul(self, s: C64) -> Mat2C {
        Mat2C(self.0.map(|z| z * s))
    }
}

impl Mul<f64> for Mat2C {
    type Output = Mat2C;
    fn mul(self, s: f64) -> Mat2C {
        Mat2C(self.0.map(|z| z * s))
    }
}

impl Mul<Mat2C> for C64 {
    type Output = Mat2C;
    fn mul(self, m: Mat2C) -> Mat2C {
        m * self
    }
}

/// Distance of `m` from SU(1,1): the max of ‖M†σ₃M − σ₃‖, |det M − 1| and the
/// deviation from the form [[a, b], [b̄, ā]].
pub fn su11_residual(m: &Mat2C) -> f64 {
    let s = Mat2C::sigma3();
    let signature = (m.adjoint() * s * *m - s).norm();
    let det = (m.det() - ONE).norm();
    let form = (m[(1, 0)] - m[(0, 1)].conj()).norm().hypot((m[(1, 1)] - m[(0, 0)].conj()).norm());
    signature.max(det).max(form)
}

/// Nearest matrix of the form [[a, b], [b̄, ā]] with |a|² − |b|² = 1.
pub fn project_su11(m: &Mat2C) -> Mat2C {
    let a = 0.5 * (m[(0, 0)] + m[(1, 1)].conj());
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let q = a.norm_sqr() - b.norm_sqr();
    if q <= 0.0 || !q.is_finite() {
        return *m;
    }
    let s = q.sqrt();
    let (a, b) = (a / s, b / s);
    Mat2C::new(a, b, b.conj(), a.conj())
}

/// Parity structure of a loop under λ ↦ −λ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    /// No parity constraint.
    General,
    /// Diagonal entries on even powers, off-diagonal on odd powers.
    Twisted,
    /// Diagonal entries on odd powers, off-diagonal on even powers.
    AntiTwisted,
}

impl Parity {
    fn combine(self, other: Parity) -> Parity {
        use Parity::*;
        match (self, other) {
            (General, _) | (_, General) => General,
            (Twisted, Twisted) | (AntiTwisted, AntiTwisted) => Twisted,
            _ => AntiTwisted,
        }
    }

    fn flip(self) -> Parity {
        match self {
            Parity::General => Parity::General,
            Parity::Twisted => Parity::AntiTwisted,
            Parity::AntiTwisted => Parity::Twisted,
        }
    }

    /// Whether entry (r, c) may be nonzero at power j.
    fn allows(self, j: i32, r: usize, c: usize) -> bool {
        let even = j.rem_euclid(2) == 0;
        let diag = r == c;
        match self {
            Parity::General => true,
            Parity::Twisted => even == diag,
            Parity::AntiTwisted => even != diag,
        }
    }
}

/// Truncated Laurent polynomial Σ_{j=lo}^{hi} A_j λ^j with 2×2 complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLoop {
    lo: i32,
    coeffs: Vec<Mat2C>,
    parity: Parity,
}

impl MatrixLoop {
    pub fn zero() -> Self {
        MatrixLoop { lo: 0, coeffs: vec![Mat2C::zero()], parity: Parity::General }
    }

    pub fn constant(m: Mat2C) -> Self {
        MatrixLoop { lo: 0, coeffs: vec![m], parity: Parity::General }
    }

    pub fn identity() -> Self {
        MatrixLoop::constant(Mat2C::identity()).with_detected_parity()
    }

    /// Loop from (power, coefficient) pairs; repeated powers are summed.
    pub fn from_terms(terms: &[(i32, Mat2C)]) -> Self {
        if terms.is_empty() {
            return MatrixLoop::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![Mat2C::zero(); (hi - lo + 1) as usize];
        for (j, a) in terms {
            coeffs[(j - lo) as usize] += *a;
        }
        MatrixLoop { lo, coeffs, parity: Parity::General }
    }

    /// Loop with coefficients for powers `lo..lo + coeffs.len()`.
    pub fn from_coeffs(lo: i32, coeffs: Vec<Mat2C>) -> Self {
        assert!(!coeffs.is_empty(), "a loop needs at least one coefficient");
        MatrixLoop { lo, coeffs, parity: Parity::General }
    }

    pub fn lowest_power(&self) -> i32 {
        self.lo
    }

    pub fn highest_power(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    /// Truncation order max(|lo|, |hi|).
    pub fn order(&self) -> i32 {
        self.lo.abs().max(self.highest_power().abs())
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_twisted(&self) -> bool {
        self.parity == Parity::Twisted
    }

    pub fn coeff(&self, j: i32) -> Mat2C {
        if j < self.lo || j > self.highest_power() {
            Mat2C::zero()
        } else {
            self.coeffs[(j - self.lo) as usize]
        }
    }

    /// Iterator over (power, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (i32, &Mat2C)> {
        self.coeffs.iter().enumerate().map(move |(k, a)| (self.lo + k as i32, a))
    }

    /// Largest entry magnitude violating `p`.
    pub fn parity_violation(&self, p: Parity) -> f64 {
        let mut worst = 0.0f64;
        for (j, a) in self.terms() {
            for r in 0..2 {
                for c in 0..2 {
                    if !p.allows(j, r, c) {
                        worst = worst.max(a[(r, c)].norm());
                    }
                }
            }
        }
        worst
    }

    /// Sets the parity flag if the coefficients satisfy it exactly; otherwise
    /// the loop is marked general.
    pub fn with_parity(mut self, p: Parity) -> Self {
        self.parity = if self.parity_violation(p) == 0.0 { p } else { Parity::General };
        self
    }

    /// Marks the loop twisted or anti-twisted when its coefficients allow it.
    pub fn with_detected_parity(self) -> Self {
        if self.parity_violation(Parity::Twisted) == 0.0 {
            self.with_parity(Parity::Twisted)
        } else if self.parity_violation(Parity::AntiTwisted) == 0.0 {
            self.with_parity(Parity::AntiTwisted)
        } else {
            self.with_parity(Parity::General)
        }
    }

    /// Zeroes coefficients forbidden by the current parity (removes rounding noise).
    fn enforce_parity(&mut self) {
        if self.parity == Parity::General {
            return;
        }
        let (lo, p) = (self.lo, self.parity);
        for (k, a) in self.coeffs.iter_mut().enumerate() {
            let j = lo + k as i32;
            for r in 0..2 {
                for c in 0..2 {
                    if !p.allows(j, r, c) {
                        a[(r, c)] = ZERO;
                    }
                }
            }
        }
    }

    /// Σ A_j λ^j by Horner evaluation in λ and λ⁻¹.
    pub fn eval(&self, lambda: C64) -> Mat2C {
        let hi = self.highest_power();
        let mut out = Mat2C::zero();
        if hi >= 0 {
            let start = self.lo.max(0);
            let mut pos = Mat2C::zero();
            for j in (start..=hi).rev() {
                pos = pos * lambda + self.coeff(j);
            }
            out += pos * lambda.powi(start);
        }
        if self.lo < 0 {
            let inv = lambda.inv();
            let end = hi.min(-1);
            let mut neg = Mat2C::zero();
            for j in self.lo..=end {
                neg = neg * inv + self.coeff(j);
            }
            out += neg * lambda.powi(end);
        }
        out
    }

    /// Exact λ-derivative: coefficient j·A_j moves to power j − 1.
    pub fn dlambda(&self) -> Self {
        let coeffs: Vec<Mat2C> = self.terms().map(|(j, a)| *a * j as f64).collect();
        MatrixLoop { lo: self.lo - 1, coeffs, parity: self.parity.flip() }
    }

    /// Cauchy product; the window widens to the sum of the windows.
    pub fn mul(&self, other: &MatrixLoop) -> Self {
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![Mat2C::zero(); n];
        for (k1, a) in self.coeffs.iter().enumerate() {
            if *a == Mat2C::zero() {
                continue;
            }
            for (k2, b) in other.coeffs.iter().enumerate() {
                coeffs[k1 + k2] += *a * *b;
            }
        }
        let mut out = MatrixLoop { lo: self.lo + other.lo, coeffs, parity: self.parity.combine(other.parity) };
        out.enforce_parity();
        out
    }

    pub fn add(&self, other: &MatrixLoop) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.highest_power().max(other.highest_power());
        let coeffs = (lo..=hi).map(|j| self.coeff(j) + other.coeff(j)).collect();
        let parity = if self.parity == other.parity { self.parity } else { Parity::General };
        MatrixLoop { lo, coeffs, parity }
    }

    pub fn sub(&self, other: &MatrixLoop) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        MatrixLoop { lo: self.lo, coeffs: self.coeffs.iter().map(|a| *a * s).collect(), parity: self.parity }
    }

    /// Left multiplication by a constant matrix; the parity flag is kept only
    /// when `m` is diagonal.
    pub fn left_mul(&self, m: &Mat2C) -> Self {
        let parity = if m.offdiag_part() == Mat2C::zero() { self.parity } else { Parity::General };
        MatrixLoop { lo: self.lo, coeffs: self.coeffs.iter().map(|a| *m * *a).collect(), parity }
    }

    pub fn right_mul(&self, m: &Mat2C) -> Self {
        let parity = if m.offdiag_part() == Mat2C::zero() { self.parity } else { Parity::General };
        MatrixLoop { lo: self.lo, coeffs: self.coeffs.iter().map(|a| *a * *m).collect(), parity }
    }

    /// Restricts to powers `lo..=hi`; returns the loop and the tail mass
    /// (largest norm among discarded coefficients).
    pub fn truncate(&self, lo: i32, hi: i32) -> (Self, f64) {
        let tail = self.terms().filter(|(j, _)| *j < lo || *j > hi).map(|(_, a)| a.norm()).fold(0.0, f64::max);
        let coeffs = (lo..=hi).map(|j| self.coeff(j)).collect();
        (MatrixLoop { lo, coeffs, parity: self.parity }, tail)
    }

    /// The loop λ ↦ L(λ)† on the unit circle: coefficient A_j† moves to power −j.
    pub fn dagger_on_circle(&self) -> Self {
        let hi = self.highest_power();
        let coeffs = (-hi..=-self.lo).map(|j| self.coeff(-j).adjoint()).collect();
        MatrixLoop { lo: -hi, coeffs, parity: self.parity }
    }

    /// Inverse of a plus-loop (no negative powers, invertible constant term)
    /// as a power series truncated at `order`.
    pub fn plus_inverse(&self, order: usize) -> Self {
        assert!(self.lo >= 0, "plus_inverse needs a loop without negative powers");
        let a0inv = self.coeff(0).inv();
        let mut c = Vec::with_capacity(order + 1);
        c.push(a0inv);
        for n in 1..=order {
            let mut s = Mat2C::zero();
            for k in 1..=n {
                s += self.coeff(k as i32) * c[n - k];
            }
            c.push(-(a0inv * s));
        }
        let mut out = MatrixLoop { lo: 0, coeffs: c, parity: self.parity };
        out.enforce_parity();
        out
    }

    /// Largest coefficient norm.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(Mat2C::norm).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn su11_examples() {
        assert_eq!(su11_residual(&Mat2C::identity()), 0.0);
        let t: f64 = 0.7;
        let h = Mat2C::new(c(t.cosh(), 0.0), c(t.sinh(), 0.0), c(t.sinh(), 0.0), c(t.cosh(), 0.0));
        assert!(su11_residual(&h) < 1e-14);
        let t = std::f64::consts::FRAC_PI_4;
        let r = Mat2C::new(c(t.cos(), 0.0), c(t.sin(), 0.0), c(-t.sin(), 0.0), c(t.cos(), 0.0));
        assert!(su11_residual(&r) > 0.9);
    }

    #[test]
    fn projection_fixes_su11() {
        let m = Mat2C::new(c(1.2, 0.3), c(0.4, -0.1), c(0.41, 0.1), c(1.2, -0.31));
        let p = project_su11(&m);
        assert!(su11_residual(&p) < 1e-14);
    }

    #[test]
    fn basis_matrices() {
        assert_eq!(Mat2C::e3() * c(-1.0, 0.0), Mat2C::sigma3() * c(0.0, 0.5));
        for e in [Mat2C::e1(), Mat2C::e2(), Mat2C::e3()] {
            assert_eq!(e.trace(), ZERO);
            assert!((e.det() - c(0.25, 0.0) * if e == Mat2C::e3() { 1.0 } else { -1.0 }).norm() < 1e-15);
        }
    }

    #[test]
    fn eval_examples() {
        let l = MatrixLoop::constant(Mat2C::sigma3());
        assert_eq!(l.eval(I), Mat2C::sigma3());
        let a = Mat2C::offdiag(ONE, ZERO);
        let l = MatrixLoop::from_terms(&[(-1, a)]);
        assert_eq!(l.eval(c(-1.0, 0.0)), a * -1.0);
        let l = MatrixLoop::from_terms(&[(2, a), (3, a)]);
        let lam = c(0.6, 0.8);
        assert!((l.eval(lam) - a * (lam.powi(2) + lam.powi(3))).norm() < 1e-15);
        let l = MatrixLoop::from_terms(&[(-3, a), (-2, a)]);
        assert!((l.eval(lam) - a * (lam.powi(-3) + lam.powi(-2))).norm() < 1e-15);
    }

    #[test]
    fn dlambda_examples() {
        let m = Mat2C::new(c(1.0, 2.0), c(3.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0));
        let d = MatrixLoop::constant(m).dlambda();
        assert_eq!(d.max_norm(), 0.0);
        let d = MatrixLoop::from_terms(&[(1, m)]).dlambda();
        assert_eq!(d.coeff(0), m);
        let d = MatrixLoop::from_terms(&[(-1, m)]).dlambda();
        assert_eq!(d.coeff(-2), -m);
    }

    #[test]
    fn mul_examples() {
        let a = Mat2C::new(c(1.0, 2.0), c(3.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0));
        let b = Mat2C::new(c(0.5, 0.0), c(1.0, -1.0), c(2.0, 0.0), c(0.0, 3.0));
        let l = MatrixLoop::from_terms(&[(1, a)]);
        assert_eq!(l.mul(&MatrixLoop::identity()).coeff(1), a);
        let p = l.mul(&MatrixLoop::from_terms(&[(-1, b)]));
        assert_eq!(p.coeff(0), a * b);
    }

    #[test]
    fn twisted_bookkeeping() {
        let d = Mat2C::diag(c(1.0, 0.0), c(2.0, 0.0));
        let o = Mat2C::offdiag(c(1.0, 1.0), c(0.0, 3.0));
        let t = MatrixLoop::from_terms(&[(-1, o), (0, d), (1, o)]).with_parity(Parity::Twisted);
        assert!(t.is_twisted());
        assert!(t.mul(&t).is_twisted());
        assert_eq!(t.dlambda().parity(), Parity::AntiTwisted);
        let bad = MatrixLoop::from_terms(&[(1, d)]).with_parity(Parity::Twisted);
        assert_eq!(bad.parity(), Parity::General);
    }

    #[test]
    fn plus_inverse_is_inverse() {
        let a0 = Mat2C::new(c(2.0, 0.0), c(0.3, 0.1), c(0.0, 0.0), c(0.5, 0.0));
        let a1 = Mat2C::new(c(0.1, 0.2), c(0.3, 0.0), c(-0.2, 0.1), c(0.0, 0.1));
        let l = MatrixLoop::from_terms(&[(0, a0), (1, a1)]);
        let inv = l.plus_inverse(40);
        let lam = c(0.0, 1.0);
        let prod = l.eval(lam) * inv.eval(lam);
        assert!((prod - Mat2C::identity()).norm() < 1e-12);
    }

    #[test]
    fn truncate_reports_tail() {
        let a = Mat2C::identity();
        let l = MatrixLoop::from_terms(&[(-2, a * 1e-3), (0, a), (3, a * 2e-4)]);
        let (t, tail) = l.truncate(-1, 1);
        assert_eq!(t.coeff(0), a);
        assert!((tail - a.norm() * 1e-3).abs() < 1e-18);
    }

    #[test]
    fn dagger_on_circle_matches_pointwise_adjoint() {
        let a = Mat2C::new(c(1.0, 2.0), c(3.0, 0.5), c(0.0, 1.0), c(-1.0, 0.0));
        let l = MatrixLoop::from_terms(&[(-1, a), (2, a * c(0.0, 1.0))]);
        let lam = C64::from_polar(1.0, 0.3);
        assert!((l.dagger_on_circle().eval(lam) - l.eval(lam).adjoint()).norm() < 1e-14);
    }
}
