//! The dual Sym formula: both minimal surfaces f₋^λ, f₊^λ from one extended
//! frame, spinor extraction and rigid-motion-insensitive comparison.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dualize::{dualize_with, DualOptions};
use crate::error::{Error, Result};
use crate::frame::FrameField;
use crate::grid::{CField, DomainGrid, Field, MField, RField};
use crate::loopalg::{Mat2C, I};
use crate::nil3::{left_maurer_cartan, nil3_inv, nil3_mul, xi_nil, Nil3Point, PhiField, SurfaceGrid, SurfaceMeta};
use crate::spinor::{gauss_map, spinors_from_phi, uh_from_spinors, InversionOptions, SpinorField};

/// Both Sym surfaces at one λ.
#[derive(Clone, Debug)]
pub struct SymOutput {
    pub lambda: C64,
    /// The associated-family member f₋^λ.
    pub f_minus: SurfaceGrid,
    /// Its dual f₊^λ.
    pub f_plus: SurfaceGrid,
    /// N_m = (i/2)Fσ₃F⁻¹.
    pub n_m: MField,
    /// Distance of f̂± from the real span of 𝓔₁, 𝓔₂, 𝓔₃ (max of the two).
    pub reality: RField,
}

impl SymOutput {
    pub fn grid(&self) -> DomainGrid {
        self.f_minus.grid()
    }

    pub fn reality_max(&self) -> f64 {
        self.reality.data.iter().filter(|v| v.is_finite()).fold(0.0, |a, b| a.max(*b))
    }
}

/// Largest accepted distance of f̂± from the real span, relative to ‖f̂±‖ + 1.
pub const REALITY_TOL: f64 = 1e-8;

/// f̂± = (m±)^o − (i/2)λ(∂_λm±)^d with m± = −iλF_λF⁻¹ ± N_m.
pub fn sym_maps(frame: &FrameField) -> Result<SymOutput> {
    let g = frame.grid();
    let lam = frame.lambda;
    let s3 = Mat2C::sigma3();
    let half_i = I * 0.5;
    let mut minus = Vec::with_capacity(g.len());
    let mut plus = Vec::with_capacity(g.len());
    let mut nm = Vec::with_capacity(g.len());
    let mut real = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let (f, f1, f2) = (frame.f.data[k], frame.f_l.data[k], frame.f_ll.data[k]);
        if !f.is_finite() {
            minus.push(Nil3Point::nan());
            plus.push(Nil3Point::nan());
            nm.push(Mat2C::nan());
            real.push(f64::NAN);
            continue;
        }
        let fi = f.inv();
        let a = f1 * fi;
        let n = f * s3 * fi * half_i;
        let dm0 = a * (-I) - (f2 * fi - a * a) * (I * lam);
        let dn = (f1 * s3 * fi - f * s3 * fi * a) * half_i;
        let mut worst = 0.0f64;
        let mut eval = |sg: f64| {
            let m = a * (-I * lam) + n * sg;
            let dm = dm0 + dn * sg;
            let hat = m.offdiag_part() - dm.diag_part() * (half_i * lam);
            let (p, r) = xi_nil(&hat);
            worst = worst.max(r / (1.0 + hat.norm()));
            p
        };
        minus.push(eval(-1.0));
        plus.push(eval(1.0));
        nm.push(n);
        real.push(worst);
    }
    let out = SymOutput {
        lambda: lam,
        f_minus: SurfaceGrid::new(Field::from_vec(g, minus), meta(lam, frame.base, "sym-minus")),
        f_plus: SurfaceGrid::new(Field::from_vec(g, plus), meta(lam, frame.base, "sym-plus")),
        n_m: Field::from_vec(g, nm),
        reality: Field::from_vec(g, real),
    };
    let r = out.reality_max();
    if r > REALITY_TOL {
        return Err(Error::NotInSu11(r));
    }
    Ok(out)
}

fn meta(lambda: C64, base: (usize, usize), source: &str) -> SurfaceMeta {
    SurfaceMeta { lambda, base, source: source.to_string() }
}

/// Generating spinors of a Sym surface f^λ, tagged with λ.
pub fn extract_spinors(f: &SurfaceGrid, lambda: C64, opts: &InversionOptions) -> Result<SpinorField> {
    let phi = left_maurer_cartan(f);
    let mut s = spinors_from_phi(&phi, opts)?;
    s.lambda = lambda;
    Ok(s)
}

/// Spinors ψ*(λ) read off f₊^λ.
pub fn extract_dual_spinors(sym: &SymOutput, opts: &InversionOptions) -> Result<SpinorField> {
    extract_spinors(&sym.f_plus, sym.lambda, opts)
}

/// Result of comparing two spinor fields up to one constant factor c with
/// b = c·a on every valid node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorReport {
    pub factor: C64,
    /// Root-mean-square deviation of the per-node ratio from `factor`.
    pub spread: f64,
    /// Largest per-node deviation.
    pub max_dev: f64,
    /// |factor| − 1.
    pub modulus_error: f64,
    pub count: usize,
}

/// Fits b = ±c·a with one constant c over nodes where both are finite and
/// `mask` (if given) is false. Spinors are defined up to sign, so each
/// per-node ratio is taken with the sign closer to the first one.
pub fn common_factor(a: &SpinorField, b: &SpinorField, mask: Option<&[bool]>) -> FactorReport {
    let g = a.grid();
    let ratios: Vec<C64> = (0..g.len())
        .filter(|&k| a.is_valid(k) && b.is_valid(k) && !mask.is_some_and(|m| m[k]))
        .filter_map(|k| {
            let (a1, a2) = a.at(k);
            let (b1, b2) = b.at(k);
            let n = a1.norm_sqr() + a2.norm_sqr();
            (n > 0.0).then(|| (a1.conj() * b1 + a2.conj() * b2) / n)
        })
        .collect();
    let ratios: Vec<C64> = match ratios.first().copied() {
        Some(r0) => ratios.iter().map(|r| if (r - r0).norm() <= (r + r0).norm() { *r } else { -*r }).collect(),
        None => ratios,
    };
    let count = ratios.len();
    if count == 0 {
        return FactorReport {
            factor: C64::new(f64::NAN, f64::NAN),
            spread: f64::NAN,
            max_dev: f64::NAN,
            modulus_error: f64::NAN,
            count,
        };
    }
    let mean = ratios.iter().sum::<C64>() / count as f64;
    let var = ratios.iter().map(|r| (r - mean).norm_sqr()).sum::<f64>() / count as f64;
    let max_dev = ratios.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max);
    FactorReport { factor: mean, spread: var.sqrt(), max_dev, modulus_error: mean.norm() - 1.0, count }
}

/// Boundary margin of the comparison in [`sym_duality`].
pub const DUALITY_MARGIN: usize = 4;

/// Compares spinors read off f₊^λ with the dual of the spinors read off f₋^λ.
/// `b` is the Abresch–Rosenberg coefficient at λ = 1; along the associated
/// family it becomes λ⁻²B.
pub fn sym_duality(sym: &SymOutput, b: &CField, dual: &DualOptions, inv: &InversionOptions) -> Result<FactorReport> {
    let g = sym.grid();
    let s = extract_spinors(&sym.f_minus, sym.lambda, inv)?;
    let (_, h) = uh_from_spinors(&s);
    let l2 = (sym.lambda * sym.lambda).inv();
    let pair = dualize_with(&s, &h, &b.map(|v| v * l2), dual)?;
    let star = extract_dual_spinors(sym, inv)?;
    let mask: Vec<bool> = (0..g.len()).map(|k| pair.mask[k] || !g.is_interior(k, DUALITY_MARGIN)).collect();
    Ok(common_factor(&pair.dual, &star, Some(&mask)))
}

/// Reparametrization applied to the first surface before comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainMap {
    #[default]
    Identity,
    /// z ↦ −z.
    Negate,
    /// z ↦ −z̄.
    NegConj,
    /// z ↦ z̄.
    Conj,
}

impl DomainMap {
    pub const ALL: [DomainMap; 4] = [DomainMap::Identity, DomainMap::Negate, DomainMap::NegConj, DomainMap::Conj];

    fn apply(self, z: C64) -> C64 {
        match self {
            DomainMap::Identity => z,
            DomainMap::Negate => -z,
            DomainMap::NegConj => -z.conj(),
            DomainMap::Conj => z.conj(),
        }
    }

    /// φ of f∘map at z from φ of f at map(z).
    fn pull_back(self, p: [C64; 3]) -> [C64; 3] {
        match self {
            DomainMap::Identity => p,
            DomainMap::Negate => p.map(|v| -v),
            DomainMap::NegConj => p.map(|v| -v.conj()),
            DomainMap::Conj => p.map(|v| v.conj()),
        }
    }
}

/// A motion x ↦ t·R_θ(ρ^r(x)) fitted between two surfaces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MotionFit {
    pub equivalent: bool,
    pub theta: f64,
    pub reflected: bool,
    pub translation: Nil3Point,
    pub domain_map: DomainMap,
    /// max |φ(g) − T·φ(f)| over nodes finite in both, relative to max |φ(f)|.
    pub residual: f64,
    pub tol: f64,
}

impl MotionFit {
    pub fn apply(&self, p: &Nil3Point) -> Nil3Point {
        let q = if self.reflected { p.reflected() } else { *p };
        nil3_mul(&self.translation, &q.rotated(self.theta))
    }
}

/// Default comparator tolerance.
pub const MC_TOL: f64 = 1e-6;

/// Whether g = t·R_θ(ρ^r(f)) for one rotation angle, optional reflection and
/// left translation, by comparing Maurer–Cartan data.
pub fn mc_equivalent(f: &SurfaceGrid, g: &SurfaceGrid, allow_reflection: bool, tol: f64) -> Result<MotionFit> {
    mc_equivalent_mapped(f, g, DomainMap::Identity, allow_reflection, tol)
}

/// As [`mc_equivalent`] with f precomposed with a domain map.
pub fn mc_equivalent_mapped(
    f: &SurfaceGrid,
    g: &SurfaceGrid,
    map: DomainMap,
    allow_reflection: bool,
    tol: f64,
) -> Result<MotionFit> {
    let grid = f.grid();
    if grid != g.grid() {
        return Err(Error::GridMismatch);
    }
    let perm: Vec<usize> = (0..grid.len())
        .map(|k| {
            let w = map.apply(grid.z_at(k));
            let (i, j) = grid.node_at(w)?;
            Ok(grid.index(i, j))
        })
        .collect::<Result<_>>()?;
    let pf = left_maurer_cartan(f);
    let pf = PhiField::from_fn(grid, |i, j| map.pull_back(pf.at(perm[grid.index(i, j)])));
    let fm = SurfaceGrid::new(Field::from_vec(grid, perm.iter().map(|&k| f.points.data[k]).collect()), f.meta.clone());
    let pg = left_maurer_cartan(g);
    let (bi, bj) = g.meta.base;
    let base = grid.index(bi, bj);
    let scale = (0..grid.len())
        .map(|k| pf.at(k).iter().map(|v| v.norm()).fold(0.0, f64::max))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut best: Option<MotionFit> = None;
    for reflected in [false, true] {
        if reflected && !allow_reflection {
            continue;
        }
        let src = if reflected { pf.reflected() } else { pf.clone() };
        let theta = fit_theta(&src, &pg, base);
        let rot = src.rotated(theta);
        let residual = (0..grid.len())
            .map(|k| {
                let (a, b) = (rot.at(k), pg.at(k));
                (0..3).map(|c| (a[c] - b[c]).norm()).fold(0.0, f64::max)
            })
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
            / scale;
        let q = fm.points.data[base];
        let q = if reflected { q.reflected() } else { q };
        let translation = nil3_mul(&g.points.data[base], &nil3_inv(&q.rotated(theta)));
        let fit =
            MotionFit { equivalent: residual <= tol, theta, reflected, translation, domain_map: map, residual, tol };
        if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// θ with (φ₁+iφ₂)(g) = e^{iθ}(φ₁+iφ₂)(f) at the base node (or, if that
/// vanishes there, at the node where it is largest).
fn fit_theta(f: &PhiField, g: &PhiField, base: usize) -> f64 {
    let p = |phi: &PhiField, k: usize| {
        let v = phi.at(k);
        v[0] + I * v[1]
    };
    let mut k = base;
    if !(p(f, k).norm() > 1e-12) {
        k = (0..f.grid().len())
            .filter(|&m| p(f, m).is_finite() && p(g, m).is_finite())
            .max_by(|&a, &b| p(f, a).norm().total_cmp(&p(f, b).norm()))
            .unwrap_or(base);
    }
    (p(g, k) / p(f, k)).arg()
}

/// Normal Gauss map read off N_m: with (n₁, n₂, n₃) = Ξ(N_m) on the
/// hyperboloid n₁² + n₂² − n₃² = −1, g = (n₂ − i n₁)/(1 − n₃).
pub fn gauss_map_from_frame(sym: &SymOutput) -> CField {
    sym.n_m.map(|m| {
        let (p, _) = xi_nil(m);
        C64::new(p.x2, -p.x1) / (1.0 - p.x3)
    })
}

/// |g(N_m) − g(ψ)| per node, with ψ the spinors extracted from f₋^λ.
pub fn normal_agreement(sym: &SymOutput, opts: &InversionOptions) -> Result<RField> {
    let s = extract_spinors(&sym.f_minus, sym.lambda, opts)?;
    let (gs, _) = gauss_map(&s)?;
    let gf = gauss_map_from_frame(sym);
    Ok(gs.zip_map(&gf, |a, b| (a - b).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualize::dual_spinors;
    use crate::frame::{integrate_frame, FrameOptions};
    use crate::grid::Stats;
    use crate::loopalg::SQRT_I;
    use crate::spinor::{dirac_data, DiracData, DiracOptions};
    use std::f64::consts::FRAC_PI_3;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn paraboloid_frame(g: DomainGrid, lambda: C64) -> FrameField {
        let d =
            DiracData::from_potential(Field::filled(g, c(0.0, 0.25)), Field::filled(g, c(1.0 / 16.0, 0.0))).unwrap();
        let base = Mat2C::diag(SQRT_I.inv(), SQRT_I);
        integrate_frame(&d, lambda, base, &FrameOptions::centered(&g)).unwrap()
    }

    fn closed(x: f64, y: f64, sign: f64) -> Nil3Point {
        Nil3Point::new(-x, sign * y.sinh(), -sign * 0.5 * x * y.sinh())
    }

    #[test]
    fn paraboloid_sym_surfaces() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let sym = sym_maps(&paraboloid_frame(g, c(1.0, 0.0))).unwrap();
        let want_m = SurfaceGrid::new(Field::from_fn(g, |i, j| closed(g.x(j), g.y(i), -1.0)), sym.f_minus.meta.clone());
        let want_p = SurfaceGrid::new(Field::from_fn(g, |i, j| closed(g.x(j), g.y(i), 1.0)), sym.f_plus.meta.clone());
        assert!(sym.f_minus.based().max_dist(&want_m.based()) < 1e-7);
        assert!(sym.f_plus.based().max_dist(&want_p.based()) < 1e-7);
        for m in &sym.n_m.data {
            assert!((m.det() - 0.25).norm() < 1e-10);
            assert!(m.trace().norm() < 1e-10);
        }
        assert!(sym.reality_max() < 1e-12);
    }

    #[test]
    fn constant_frame_gives_a_point() {
        let g = DomainGrid::square(1.0, 9).unwrap();
        let frame = FrameField {
            lambda: c(1.0, 0.0),
            f: Field::filled(g, Mat2C::identity()),
            f_l: Field::filled(g, Mat2C::zero()),
            f_ll: Field::filled(g, Mat2C::zero()),
            base: (4, 4),
            base_value: Mat2C::identity(),
            reprojections: 0,
        };
        let sym = sym_maps(&frame).unwrap();
        for p in sym.f_minus.points.data.iter().chain(&sym.f_plus.points.data) {
            assert_eq!(*p, Nil3Point::IDENTITY);
        }
        assert!((sym.n_m.data[0] - Mat2C::sigma3() * (I * 0.5)).norm() < 1e-15);
    }

    #[test]
    fn paraboloid_self_dual_by_reflection() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let sym = sym_maps(&paraboloid_frame(g, c(1.0, 0.0))).unwrap();
        let fit = mc_equivalent(&sym.f_minus, &sym.f_plus, true, MC_TOL).unwrap();
        assert!(fit.equivalent && fit.reflected, "{fit:?}");
        assert!(fit.residual < 1e-12);
        let strict = mc_equivalent(&sym.f_minus, &sym.f_plus, false, MC_TOL).unwrap();
        assert!(!strict.equivalent);
        // the fitted motion maps points too
        for k in 0..g.len() {
            assert!(fit.apply(&sym.f_minus.points.data[k]).dist_max(&sym.f_plus.points.data[k]) < 1e-10);
        }
    }

    #[test]
    fn translate_and_rotate_are_detected() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let sym = sym_maps(&paraboloid_frame(g, c(1.0, 0.0))).unwrap();
        let t = Nil3Point::new(0.3, -1.0, 2.0);
        let moved = sym.f_minus.left_translated(&t);
        let fit = mc_equivalent(&sym.f_minus, &moved, false, MC_TOL).unwrap();
        assert!(fit.equivalent && fit.theta.abs() < 1e-12 && fit.residual < 1e-12);
        let rot = sym.f_minus.map_points(|p| p.rotated(0.7));
        let fit = mc_equivalent(&sym.f_minus, &rot, false, MC_TOL).unwrap();
        assert!(fit.equivalent && (fit.theta - 0.7).abs() < 1e-10);
    }

    #[test]
    fn domain_map_variant() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let sym = sym_maps(&paraboloid_frame(g, c(1.0, 0.0))).unwrap();
        // f(−z̄) is a reparametrization of f
        let f = &sym.f_minus;
        let flipped =
            SurfaceGrid::new(Field::from_fn(g, |i, j| f.points.data[g.index(i, g.nx - 1 - j)]), f.meta.clone());
        let fit = mc_equivalent_mapped(f, &flipped, DomainMap::NegConj, false, MC_TOL).unwrap();
        assert!(fit.equivalent && fit.residual < 1e-12, "{fit:?}");
    }

    #[test]
    fn extracted_dual_spinors_match_dualize() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let opts = InversionOptions::centered(&g);
        for lam in [c(1.0, 0.0), C64::from_polar(1.0, FRAC_PI_3)] {
            let sym = sym_maps(&paraboloid_frame(g, lam)).unwrap();
            let s = extract_spinors(&sym.f_minus, lam, &opts).unwrap();
            let d = dirac_data(&s, &DiracOptions::default()).unwrap();
            let center = g.index(20, 20);
            assert!((d.potential.data[center] - c(0.0, 0.25)).norm() < 1e-6);
            // the associated family rotates B by λ⁻²
            assert!((d.b.data[center] - lam.inv() * lam.inv() / 16.0).norm() < 1e-6);
            // stencil-route B
            let pair = dual_spinors(&s, &d, &DualOptions::centered(&g)).unwrap();
            let star = extract_dual_spinors(&sym, &opts).unwrap();
            let mask: Vec<bool> = (0..g.len()).map(|k| pair.mask[k] || !g.is_interior(k, 4)).collect();
            let rep = common_factor(&pair.dual, &star, Some(&mask));
            assert!(rep.spread < 1e-5 && rep.modulus_error.abs() < 1e-6, "{rep:?}");
            // exact B
            let rep =
                sym_duality(&sym, &Field::filled(g, c(1.0 / 16.0, 0.0)), &DualOptions::centered(&g), &opts).unwrap();
            assert!(rep.spread < 1e-7 && rep.modulus_error.abs() < 1e-6, "{rep:?}");
            assert!((rep.factor - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn paraboloid_dual_spinors_closed_form() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let sym = sym_maps(&paraboloid_frame(g, c(1.0, 0.0))).unwrap();
        let star = extract_dual_spinors(&sym, &InversionOptions::centered(&g)).unwrap();
        let want = SpinorField::from_fn(g, c(1.0, 0.0), |i, _| {
            let y = g.y(i) / 2.0;
            (c(0.0, y.sinh()), c(0.0, -y.cosh()))
        });
        let want = SpinorField::new(
            want.psi1.map(|v| v * std::f64::consts::FRAC_1_SQRT_2),
            want.psi2.map(|v| v * std::f64::consts::FRAC_1_SQRT_2),
            c(1.0, 0.0),
        );
        let rep = common_factor(&want, &star, None);
        assert!(rep.max_dev < 1e-6 && rep.modulus_error.abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn frame_spinors_are_surface_spinors() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        for lam in [c(1.0, 0.0), C64::from_polar(1.0, FRAC_PI_3), c(0.0, 1.0)] {
            let frame = paraboloid_frame(g, lam);
            let sym = sym_maps(&frame).unwrap();
            let a = crate::frame::surface_spinors(&frame, &Field::filled(g, 1.0)).unwrap();
            let b = extract_spinors(&sym.f_minus, lam, &InversionOptions::centered(&g)).unwrap();
            let rep = common_factor(&a, &b, None);
            assert!(rep.max_dev < 1e-6 && rep.modulus_error.abs() < 1e-6, "{lam} {rep:?}");
        }
    }

    #[test]
    fn normals_agree() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        for lam in [c(1.0, 0.0), C64::from_polar(1.0, FRAC_PI_3)] {
            let sym = sym_maps(&paraboloid_frame(g, lam)).unwrap();
            let r = normal_agreement(&sym, &InversionOptions::centered(&g)).unwrap();
            assert!(Stats::of(&r, 4).max < 1e-6, "{}", Stats::of(&r, 4).max);
        }
    }
}
