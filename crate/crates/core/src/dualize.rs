//! Dual generating spinors, the dual geometric invariants and the double dual.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{continue_signs, CField, DomainGrid, Field, RField, Stats};
use crate::spinor::{gauss_map, uh_from_spinors, DiracData, SpinorField};

const NAN: C64 = C64::new(f64::NAN, f64::NAN);

/// Choice of s₂ in ψ₂* = (4 s₂/h) ψ₁.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchConvention {
    /// s₂ = +conj(√(−B)); reproduces the Sym-formula dual f₊.
    #[default]
    SymMatched,
    /// s₂ = −conj(√(−B)).
    Remark,
}

impl BranchConvention {
    fn sign(self) -> f64 {
        match self {
            BranchConvention::SymMatched => 1.0,
            BranchConvention::Remark => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DualOptions {
    pub convention: BranchConvention,
    /// Nodes with |B| < eps_b · max|B| are masked.
    pub eps_b: f64,
    /// Nodes with |h| below this are masked.
    pub h_min: f64,
    /// Largest allowed |Re e^{w/2}| / |e^{w/2}|.
    pub minimal_tol: f64,
    /// Node at which the principal root of −B is used.
    pub base: (usize, usize),
    /// Boundary margin for the minimality precondition.
    pub margin: usize,
}

impl DualOptions {
    pub fn centered(grid: &DomainGrid) -> Self {
        DualOptions {
            convention: BranchConvention::SymMatched,
            eps_b: 1e-8,
            h_min: 1e-8,
            minimal_tol: 1e-3,
            base: (grid.ny / 2, grid.nx / 2),
            margin: 2,
        }
    }
}

/// A spinor field together with its dual.
#[derive(Clone, Debug)]
pub struct DualPair {
    pub source: SpinorField,
    pub dual: SpinorField,
    pub b: CField,
    /// Support function used in the division (h of the source).
    pub h: RField,
    /// Masked nodes (zeros of B or h, invalid source).
    pub mask: Vec<bool>,
    /// Branch of √(−B) used at each node.
    pub root: CField,
    /// +1 where the root equals the principal square root, −1 where it is its negative.
    pub branch: Vec<i8>,
    pub convention: BranchConvention,
}

impl DualPair {
    pub fn unmasked(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    /// Adjacent node pairs across which the continued root changes sheet
    /// relative to the principal branch (the location of a branch cut).
    pub fn branch_flips(&self) -> Vec<(usize, usize)> {
        let g = self.b.grid;
        let mut out = Vec::new();
        for k in 0..g.len() {
            let (i, j) = g.node(k);
            for m in [(j + 1 < g.nx).then(|| k + 1), (i + 1 < g.ny).then(|| k + g.nx)].into_iter().flatten() {
                if !self.mask[k] && !self.mask[m] && self.branch[k] != self.branch[m] {
                    out.push((k, m));
                }
            }
        }
        out
    }
}

/// Degeneracy mask: zeros of B, zeros of h, invalid source nodes.
fn degeneracy_mask(s: &SpinorField, h: &RField, b: &CField, opts: &DualOptions) -> Result<Vec<bool>> {
    let bmax = b.data.iter().filter(|v| v.is_finite()).map(|v| v.norm()).fold(0.0, f64::max);
    if bmax == 0.0 {
        return Err(Error::HorizontalUmbrella);
    }
    Ok((0..b.data.len())
        .map(|k| {
            let bv = b.data[k];
            !bv.is_finite() || bv.norm() < opts.eps_b * bmax || !(h.data[k].abs() >= opts.h_min) || !s.is_valid(k)
        })
        .collect())
}

/// −b without producing a negative zero (keeps √ off the wrong side of its cut).
fn minus(b: C64) -> C64 {
    C64::new(0.0, 0.0) - b
}

/// Continued branch of √(−B) with the principal root at the base node.
fn continued_root(b: &CField, mask: &[bool], base: (usize, usize)) -> Result<(CField, Vec<i8>)> {
    let g = b.grid;
    let mut root: Vec<C64> = b.data.iter().zip(mask).map(|(v, &m)| if m { NAN } else { minus(*v).sqrt() }).collect();
    continue_signs(&g, &mut root, |v| v.is_finite(), |v| -*v, |a, c| (*a - *c).norm()).map_err(|k| {
        let (i, j) = g.node(k);
        Error::Branch { i, j }
    })?;
    let kb = g.index(base.0, base.1);
    if root[kb].is_finite() {
        let principal = minus(b.data[kb]).sqrt();
        if (root[kb] - principal).norm() > (root[kb] + principal).norm() {
            root.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let branch = root
        .iter()
        .zip(&b.data)
        .map(|(r, bv)| {
            if !r.is_finite() {
                0
            } else if (*r - minus(*bv).sqrt()).norm() <= (*r + minus(*bv).sqrt()).norm() {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok((Field::from_vec(g, root), branch))
}

/// ψ₁* = (4√(−B)/h)ψ₂, ψ₂* = (4s₂/h)ψ₁ with an explicit support function `h`.
pub fn dualize_with(s: &SpinorField, h: &RField, b: &CField, opts: &DualOptions) -> Result<DualPair> {
    let mask = degeneracy_mask(s, h, b, opts)?;
    let (root, branch) = continued_root(b, &mask, opts.base)?;
    let sign = opts.convention.sign();
    let g = s.grid();
    let mut p1 = vec![NAN; g.len()];
    let mut p2 = vec![NAN; g.len()];
    for k in 0..g.len() {
        if mask[k] {
            continue;
        }
        let (a, c) = s.at(k);
        let r = root.data[k];
        p1[k] = 4.0 * r / h.data[k] * c;
        p2[k] = 4.0 * sign * r.conj() / h.data[k] * a;
    }
    Ok(DualPair {
        source: s.clone(),
        dual: SpinorField::new(Field::from_vec(g, p1), Field::from_vec(g, p2), s.lambda),
        b: b.clone(),
        h: h.clone(),
        mask,
        root,
        branch,
        convention: opts.convention,
    })
}

/// Dual spinors of a minimal surface.
pub fn dual_spinors(s: &SpinorField, d: &DiracData, opts: &DualOptions) -> Result<DualPair> {
    let rel = d.potential.map(|e| e.re.abs() / e.norm());
    let worst = Stats::of(&rel, opts.margin).max;
    if worst > opts.minimal_tol {
        return Err(Error::NotMinimal(worst));
    }
    let (_, h) = uh_from_spinors(s);
    dualize_with(s, &h, &d.b, opts)
}

/// Invariant data of the dual surface.
#[derive(Clone, Debug)]
pub struct DualInvariants {
    /// e^{u*} = 4⁴|B|²e^u/h⁴.
    pub eu: RField,
    /// h* = 4²|B|/h.
    pub h: RField,
    /// B* = B.
    pub b: CField,
    /// g* = g.
    pub g: CField,
    /// e^{w*/2} = 4i|B|/h.
    pub potential: CField,
}

pub fn dual_invariants(s: &SpinorField, d: &DiracData, opts: &DualOptions) -> Result<DualInvariants> {
    let (eu, h) = uh_from_spinors(s);
    let mask = degeneracy_mask(s, &h, &d.b, opts)?;
    Ok(invariants_from(&eu, &h, &d.b, &gauss_map(s)?.0, &mask))
}

pub(crate) fn invariants_from(eu: &RField, h: &RField, b: &CField, gm: &CField, mask: &[bool]) -> DualInvariants {
    let g = b.grid;
    let pick = |k: usize, v: f64| if mask[k] { f64::NAN } else { v };
    DualInvariants {
        eu: Field::from_fn(g, |i, j| {
            let k = g.index(i, j);
            pick(k, 256.0 * b.data[k].norm_sqr() * eu.data[k] / h.data[k].powi(4))
        }),
        h: Field::from_fn(g, |i, j| {
            let k = g.index(i, j);
            pick(k, 16.0 * b.data[k].norm() / h.data[k])
        }),
        b: Field::from_fn(g, |i, j| {
            let k = g.index(i, j);
            if mask[k] {
                NAN
            } else {
                b.data[k]
            }
        }),
        g: Field::from_fn(g, |i, j| {
            let k = g.index(i, j);
            if mask[k] {
                NAN
            } else {
                gm.data[k]
            }
        }),
        potential: Field::from_fn(g, |i, j| {
            let k = g.index(i, j);
            C64::new(0.0, pick(k, 4.0 * b.data[k].norm() / h.data[k]))
        }),
    }
}

/// Residuals of the local expressions of the dual against the dual invariants.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DualLocalReport {
    /// max |4(|ψ₁*|² + |ψ₂*|²)² − e^{u*}| / (1 + e^{u*}).
    pub eu: f64,
    /// max |2(|ψ₂*|² − |ψ₁*|²) − h*| / (1 + |h*|).
    pub h: f64,
    /// Spread of (−ψ₁*/ψ̄₂*)/g over unmasked nodes where g ≠ 0.
    pub g_factor_spread: f64,
    /// The constant unimodular factor relating g* and g.
    pub g_factor: C64,
    pub count: usize,
    pub masked: usize,
}

pub fn dual_local_check(p: &DualPair) -> DualLocalReport {
    let (eu, _) = uh_from_spinors(&p.source);
    let gm = p.source.psi2.zip_map(&p.source.psi1, |b, a| *b / a.conj());
    let inv = invariants_from(&eu, &p.h, &p.b, &gm, &p.mask);
    let mut rep = DualLocalReport::default();
    let mut factors = Vec::new();
    for k in 0..p.mask.len() {
        if p.mask[k] {
            rep.masked += 1;
            continue;
        }
        rep.count += 1;
        let (a, c) = p.dual.at(k);
        let eu_loc = 4.0 * (a.norm_sqr() + c.norm_sqr()).powi(2);
        let h_loc = 2.0 * (c.norm_sqr() - a.norm_sqr());
        rep.eu = rep.eu.max((eu_loc - inv.eu.data[k]).abs() / (1.0 + inv.eu.data[k]));
        rep.h = rep.h.max((h_loc - inv.h.data[k]).abs() / (1.0 + inv.h.data[k].abs()));
        let gv = inv.g.data[k];
        if gv.norm() > 1e-8 && c.norm() > 0.0 {
            factors.push(-a / c.conj() / gv);
        }
    }
    if let Some(f0) = factors.first().copied() {
        rep.g_factor = f0;
        rep.g_factor_spread = factors.iter().map(|f| (*f - f0).norm()).fold(0.0, f64::max);
    }
    rep
}

/// ψ** from two applications of the dual; the second uses h* = 16|B|/h and B* = B.
pub fn double_dual(s: &SpinorField, d: &DiracData, opts: &DualOptions) -> Result<SpinorField> {
    let first = dual_spinors(s, d, opts)?;
    let h_star = Field::from_fn(s.grid(), |i, j| {
        let k = s.grid().index(i, j);
        if first.mask[k] {
            f64::NAN
        } else {
            16.0 * first.b.data[k].norm() / first.h.data[k]
        }
    });
    Ok(dualize_with(&first.dual, &h_star, &first.b, opts)?.dual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinor::{dirac_data, phi_from_spinors, DiracOptions};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn paraboloid(g: DomainGrid) -> (SpinorField, DiracData) {
        let s = SpinorField::from_fn(g, c(1.0, 0.0), |i, _| {
            let y = g.y(i);
            (c((y / 2.0).cosh() * FRAC_1_SQRT_2, 0.0), c((y / 2.0).sinh() * FRAC_1_SQRT_2, 0.0))
        });
        let d =
            DiracData::from_potential(Field::filled(g, c(0.0, 0.25)), Field::filled(g, c(1.0 / 16.0, 0.0))).unwrap();
        (s, d)
    }

    #[test]
    fn paraboloid_dual_spinors_both_conventions() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let (s, d) = paraboloid(g);
        let mut opts = DualOptions::centered(&g);
        let p = dual_spinors(&s, &d, &opts).unwrap();
        for k in 0..g.len() {
            let y = g.z_at(k).im;
            assert!((p.dual.psi1.data[k] - c(0.0, (y / 2.0).sinh() * FRAC_1_SQRT_2)).norm() < 1e-14);
            assert!((p.dual.psi2.data[k] - c(0.0, -(y / 2.0).cosh() * FRAC_1_SQRT_2)).norm() < 1e-14);
        }
        opts.convention = BranchConvention::Remark;
        let p = dual_spinors(&s, &d, &opts).unwrap();
        for k in 0..g.len() {
            let y = g.z_at(k).im;
            assert!((p.dual.psi2.data[k] - c(0.0, (y / 2.0).cosh() * FRAC_1_SQRT_2)).norm() < 1e-14);
        }
    }

    #[test]
    fn paraboloid_invariants_are_self_dual() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let (s, d) = paraboloid(g);
        let inv = dual_invariants(&s, &d, &DualOptions::centered(&g)).unwrap();
        let (eu, _) = uh_from_spinors(&s);
        for k in 0..g.len() {
            assert!((inv.eu.data[k] - eu.data[k]).abs() < 1e-12);
            assert!((inv.h.data[k] - 1.0).abs() < 1e-14);
            assert_eq!(inv.b.data[k], d.b.data[k]);
            assert!((inv.potential.data[k] - c(0.0, 0.25)).norm() < 1e-14);
        }
    }

    #[test]
    fn paraboloid_local_check() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let (s, d) = paraboloid(g);
        let p = dual_spinors(&s, &d, &DualOptions::centered(&g)).unwrap();
        let rep = dual_local_check(&p);
        assert!(rep.eu < 1e-12 && rep.h < 1e-12 && rep.g_factor_spread < 1e-12);
        assert!((rep.g_factor - c(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(rep.masked, 0);
    }

    #[test]
    fn double_dual_restores_phi() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let (s, d) = paraboloid(g);
        for conv in [BranchConvention::SymMatched, BranchConvention::Remark] {
            let mut opts = DualOptions::centered(&g);
            opts.convention = conv;
            let dd = double_dual(&s, &d, &opts).unwrap();
            let (a, b) = (phi_from_spinors(&s), phi_from_spinors(&dd));
            for k in 0..g.len() {
                for comp in 0..3 {
                    assert!((a.phi[comp].data[k] - b.phi[comp].data[k]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_of_b_is_masked() {
        let g = DomainGrid::square(0.5, 21).unwrap();
        let s = SpinorField::from_fn(g, c(1.0, 0.0), |_, _| (c(1.0, 0.0), c(0.2, 0.1)));
        let b = Field::from_fn(g, |i, j| -g.z(i, j));
        let h = uh_from_spinors(&s).1;
        let p = dualize_with(&s, &h, &b, &DualOptions::centered(&g)).unwrap();
        assert!(p.mask[g.index(10, 10)]);
        assert_eq!(p.unmasked(), g.len() - 1);
        assert!(!p.branch_flips().is_empty());
    }

    #[test]
    fn horizontal_umbrella_is_refused() {
        let g = DomainGrid::square(0.5, 9).unwrap();
        let s = SpinorField::from_fn(g, c(1.0, 0.0), |_, _| (c(1.0, 0.0), c(0.2, 0.1)));
        let h = uh_from_spinors(&s).1;
        let b = Field::filled(g, c(0.0, 0.0));
        assert!(matches!(dualize_with(&s, &h, &b, &DualOptions::centered(&g)), Err(Error::HorizontalUmbrella)));
    }

    #[test]
    fn dual_of_paraboloid_is_minimal_with_negated_standard_potential() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        let (s, d) = paraboloid(g);
        let p = dual_spinors(&s, &d, &DualOptions::centered(&g)).unwrap();
        let dd = dirac_data(&p.dual, &DiracOptions::default()).unwrap();
        for k in 0..g.len() {
            if g.is_interior(k, 2) {
                assert!((dd.potential.data[k] - c(0.0, -0.25)).norm() < 1e-6);
            }
        }
    }
}
