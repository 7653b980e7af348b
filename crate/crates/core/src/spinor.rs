//! Generating spinors: conversion to and from Maurer–Cartan data, metric and
//! support function, Gauss map, Dirac potential and Abresch–Rosenberg coefficient.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{continue_signs, continuous_log, CField, DomainGrid, Field, RField, Stats};
use crate::loopalg::I;
use crate::nil3::{Nil3Tangent, PhiField};

const NAN: C64 = C64::new(f64::NAN, f64::NAN);

/// Pair (ψ₁, ψ₂) of grid fields tagged with the loop parameter λ.
///
/// Orientation (|ψ₁| > |ψ₂|) is not enforced here: dual spinor fields are
/// downward oriented. Formulas that need it check it themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub psi1: CField,
    pub psi2: CField,
    pub lambda: C64,
}

impl SpinorField {
    pub fn new(psi1: CField, psi2: CField, lambda: C64) -> Self {
        assert_eq!(psi1.grid, psi2.grid, "spinor components on different grids");
        SpinorField { psi1, psi2, lambda }
    }

    pub fn grid(&self) -> DomainGrid {
        self.psi1.grid
    }

    pub fn at(&self, k: usize) -> (C64, C64) {
        (self.psi1.data[k], self.psi2.data[k])
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.psi1.data[k].is_finite() && self.psi2.data[k].is_finite()
    }

    pub fn from_fn(grid: DomainGrid, lambda: C64, f: impl Fn(usize, usize) -> (C64, C64)) -> Self {
        let vals = Field::from_fn(grid, f);
        SpinorField::new(vals.map(|v| v.0), vals.map(|v| v.1), lambda)
    }

    /// Spinors of λ·φ: (√λ ψ₁, conj(√λ) ψ₂).
    pub fn lambda_rescaled(&self, lambda: C64) -> SpinorField {
        let r = lambda.sqrt();
        SpinorField::new(self.psi1.map(|v| v * r), self.psi2.map(|v| v * r.conj()), self.lambda)
    }

    /// Copy with the given nodes set to NaN.
    pub fn masked(&self, mask: &[bool]) -> SpinorField {
        let m = |f: &CField| {
            Field::from_vec(f.grid, f.data.iter().zip(mask).map(|(v, &m)| if m { NAN } else { *v }).collect())
        };
        SpinorField::new(m(&self.psi1), m(&self.psi2), self.lambda)
    }
}

/// φ₁ = ψ̄₂² − ψ₁², φ₂ = i(ψ̄₂² + ψ₁²), φ₃ = 2ψ₁ψ̄₂.
pub fn phi_from_spinors(s: &SpinorField) -> PhiField {
    PhiField::from_fn(s.grid(), |i, j| {
        let (p1, p2) = s.at(s.grid().index(i, j));
        phi_pointwise(p1, p2)
    })
}

pub(crate) fn phi_pointwise(p1: C64, p2: C64) -> [C64; 3] {
    let a = p1 * p1;
    let c = p2.conj() * p2.conj();
    [c - a, I * (c + a), 2.0 * p1 * p2.conj()]
}

/// Options for [`spinors_from_phi`].
#[derive(Clone, Debug)]
pub struct InversionOptions {
    /// Node whose sign convention (principal root) fixes the global sign.
    pub base: (usize, usize),
    /// Largest allowed |Σφ_k²| / Σ|φ_k|².
    pub conformality_tol: f64,
    /// Nodes to skip (left as NaN).
    pub mask: Option<Vec<bool>>,
}

impl InversionOptions {
    pub fn centered(grid: &DomainGrid) -> Self {
        InversionOptions { base: (grid.ny / 2, grid.nx / 2), conformality_tol: 1e-3, mask: None }
    }
}

/// Principal local inversion: the larger of ψ₁², ψ̄₂² is square-rooted and the
/// other component recovered from φ₃ = 2ψ₁ψ̄₂.
fn invert_pointwise(p: [C64; 3]) -> (C64, C64) {
    let a = -(p[0] + I * p[1]) / 2.0;
    let c = (p[0] - I * p[1]) / 2.0;
    if a.norm() >= c.norm() {
        let p1 = a.sqrt();
        (p1, (p[2] / (2.0 * p1)).conj())
    } else {
        let p2bar = c.sqrt();
        (p[2] / (2.0 * p2bar), p2bar.conj())
    }
}

/// Inverts φ ↦ ψ with the sign continued along the serpentine sweep.
pub fn spinors_from_phi(phi: &PhiField, opts: &InversionOptions) -> Result<SpinorField> {
    let g = phi.grid();
    let mut vals = vec![(NAN, NAN); g.len()];
    for (k, v) in vals.iter_mut().enumerate() {
        if opts.mask.as_ref().is_some_and(|m| m[k]) {
            continue;
        }
        let p = phi.at(k);
        if !p.iter().all(|v| v.is_finite()) {
            continue;
        }
        let mass: f64 = p.iter().map(|v| v.norm_sqr()).sum();
        let (i, j) = g.node(k);
        if mass == 0.0 {
            return Err(Error::Degenerate { i, j });
        }
        let conf = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).norm() / mass;
        if conf > opts.conformality_tol {
            return Err(Error::NonConformal { i, j, residual: conf });
        }
        *v = invert_pointwise(p);
    }
    continue_signs(
        &g,
        &mut vals,
        |v| v.0.is_finite(),
        |v| (-v.0, -v.1),
        |a, b| (a.0 - b.0).norm_sqr() + (a.1 - b.1).norm_sqr(),
    )
    .map_err(|k| {
        let (i, j) = g.node(k);
        Error::Branch { i, j }
    })?;
    let base = g.index(opts.base.0, opts.base.1);
    if vals[base].0.is_finite() {
        let want = invert_pointwise(phi.at(base));
        let have = vals[base];
        let dot = (want.0.conj() * have.0 + want.1.conj() * have.1).re;
        if dot < 0.0 {
            for v in vals.iter_mut() {
                *v = (-v.0, -v.1);
            }
        }
    }
    Ok(SpinorField::new(
        Field::from_vec(g, vals.iter().map(|v| v.0).collect()),
        Field::from_vec(g, vals.iter().map(|v| v.1).collect()),
        C64::new(1.0, 0.0),
    ))
}

/// (e^u, h) with e^u = 4(|ψ₁|² + |ψ₂|²)² and h = 2(|ψ₁|² − |ψ₂|²).
pub fn uh_from_spinors(s: &SpinorField) -> (RField, RField) {
    let g = s.grid();
    let eu = Field::from_fn(g, |i, j| {
        let (a, b) = s.at(g.index(i, j));
        4.0 * (a.norm_sqr() + b.norm_sqr()).powi(2)
    });
    let h = Field::from_fn(g, |i, j| {
        let (a, b) = s.at(g.index(i, j));
        2.0 * (a.norm_sqr() - b.norm_sqr())
    });
    (eu, h)
}

/// Normal Gauss map g = ψ₂/ψ̄₁ and the unit normal
/// (2 Re g, 2 Im g, 1 − |g|²)/(1 + |g|²) in the left-invariant frame.
pub fn gauss_map(s: &SpinorField) -> Result<(CField, Field<Nil3Tangent>)> {
    let g = s.grid();
    let mut gm = Vec::with_capacity(g.len());
    let mut normal = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let (a, b) = s.at(k);
        if !(a.is_finite() && b.is_finite()) {
            gm.push(NAN);
            normal.push(Nil3Tangent { a1: f64::NAN, a2: f64::NAN, a3: f64::NAN });
            continue;
        }
        if a.norm() == 0.0 {
            let (i, j) = g.node(k);
            return Err(Error::Degenerate { i, j });
        }
        let v = b / a.conj();
        let d = 1.0 + v.norm_sqr();
        gm.push(v);
        normal.push(Nil3Tangent { a1: 2.0 * v.re / d, a2: 2.0 * v.im / d, a3: (1.0 - v.norm_sqr()) / d });
    }
    Ok((Field::from_vec(g, gm), Field::from_vec(g, normal)))
}

/// Dirac potential, mean curvature and Abresch–Rosenberg coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracData {
    /// e^{w/2}.
    pub potential: CField,
    /// w = 2 log e^{w/2} (continuous branch).
    pub w: CField,
    /// ∂_z w when known in closed form; stencils of `w` are used otherwise.
    pub w_z: Option<CField>,
    /// B.
    pub b: CField,
    /// H.
    pub mean_curvature: RField,
    /// 𝒰 = −∂_zψ₂/ψ₁ (NaN where |ψ₁| ≤ [`QUOTIENT_FLOOR`]·|ψ|).
    pub u_pot: CField,
    /// 𝒱 = ∂_z̄ψ₁/ψ₂ (NaN where |ψ₂| ≤ [`QUOTIENT_FLOOR`]·|ψ|).
    pub v_pot: CField,
    /// Normalized Dirac-system residual per node.
    pub consistency: RField,
}

impl DiracData {
    pub fn grid(&self) -> DomainGrid {
        self.potential.grid
    }

    /// Minimal-surface data from (e^{w/2}, B); other fields are derived.
    pub fn from_potential(potential: CField, b: CField) -> std::result::Result<Self, Error> {
        let g = potential.grid;
        let w = continuous_log(&potential)
            .map_err(|k| {
                let (i, j) = g.node(k);
                Error::Branch { i, j }
            })?
            .map(|v| 2.0 * v);
        Ok(DiracData {
            mean_curvature: potential.map(|_| 0.0),
            u_pot: potential.clone(),
            v_pot: potential.clone(),
            consistency: potential.map(|_| 0.0),
            potential,
            w,
            w_z: None,
            b,
        })
    }
}

/// Tolerances used by [`dirac_data`].
#[derive(Clone, Debug)]
pub struct DiracOptions {
    /// Largest allowed normalized Dirac-system residual.
    pub dirac_tol: f64,
    /// Largest allowed |Re e^{w/2}| / |e^{w/2}| for B extraction.
    pub minimal_tol: f64,
    /// Boundary margin for the checks.
    pub margin: usize,
}

impl Default for DiracOptions {
    fn default() -> Self {
        DiracOptions { dirac_tol: 1e-3, minimal_tol: 1e-3, margin: 2 }
    }
}

/// Relative size below which a spinor component counts as zero in the
/// quotients 𝒰 and 𝒱.
pub const QUOTIENT_FLOOR: f64 = 1e-8;

/// Dirac potential and B from spinors by stencils. Each quantity solves its
/// two available equations in the least-squares sense per node.
pub fn dirac_data(s: &SpinorField, opts: &DiracOptions) -> Result<DiracData> {
    let g = s.grid();
    let d1z = s.psi1.d_z();
    let d1zb = s.psi1.d_zbar();
    let d2z = s.psi2.d_z();
    let d2zb = s.psi2.d_zbar();
    // a quotient is left undefined where its denominator vanishes relative to |ψ|
    let ratio = |num: C64, den: C64, k: usize| {
        let (a, b) = s.at(k);
        if den.norm() > QUOTIENT_FLOOR * (a.norm_sqr() + b.norm_sqr()).sqrt() {
            num / den
        } else {
            NAN
        }
    };
    let u_pot = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        ratio(-d2z.data[k], s.psi1.data[k], k)
    });
    let v_pot = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        ratio(d1zb.data[k], s.psi2.data[k], k)
    });
    let potential = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        let (a, b) = s.at(k);
        (-d2z.data[k] * a.conj() + d1zb.data[k] * b.conj()) / (a.norm_sqr() + b.norm_sqr())
    });
    let consistency = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        let (a, b) = s.at(k);
        let e = potential.data[k];
        let r1 = (d2z.data[k] + e * a).norm();
        let r2 = (d1zb.data[k] - e * b).norm();
        r1.max(r2) / (a.norm_sqr() + b.norm_sqr()).sqrt()
    });
    let mean_curvature = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        let (a, b) = s.at(k);
        -2.0 * potential.data[k].re / (2.0 * (a.norm_sqr() + b.norm_sqr()))
    });
    let worst = Stats::of(&consistency, opts.margin).max;
    if worst > opts.dirac_tol {
        return Err(Error::NotSurfaceSpinor(worst));
    }
    let rel_h = potential.map(|e| e.re.abs() / e.norm());
    let worst_h = Stats::of(&rel_h, opts.margin).max;
    if worst_h > opts.minimal_tol {
        return Err(Error::NotMinimal(worst_h));
    }
    let w = continuous_log(&potential)
        .map_err(|k| {
            let (i, j) = g.node(k);
            Error::Branch { i, j }
        })?
        .map(|v| 2.0 * v);
    let wz = w.d_z();
    let wzb = w.d_zbar();
    let b = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        let (a, c) = s.at(k);
        let e = potential.data[k];
        let x = e * (d1z.data[k] - 0.5 * wz.data[k] * a);
        let y = (e * (0.5 * wzb.data[k] * c - d2zb.data[k])).conj();
        (x * c.conj() + y * a) / (a.norm_sqr() + c.norm_sqr())
    });
    if !b.data.iter().enumerate().any(|(k, v)| g.is_interior(k, opts.margin) && v.is_finite()) {
        return Err(Error::DegenerateB);
    }
    Ok(DiracData { potential, w, w_z: None, b, mean_curvature, u_pot, v_pot, consistency })
}

/// |∂_z̄ B| per node.
pub fn holomorphy_residual(b: &CField) -> RField {
    b.d_zbar().map(|v| v.norm())
}

/// Tension field of g as a map into the Poincaré disk:
/// |g_zz̄ + 2ḡ g_z g_z̄ / (1 − |g|²)|.
pub fn harmonic_residual(gm: &CField) -> RField {
    let gz = gm.d_z();
    let gzb = gm.d_zbar();
    let gzzb = gzb.d_z();
    Field::from_fn(gm.grid, |i, j| {
        let k = gm.grid.index(i, j);
        let v = gm.data[k];
        (gzzb.data[k] + 2.0 * v.conj() * gz.data[k] * gzb.data[k] / (1.0 - v.norm_sqr())).norm()
    })
}
