//! Holomorphic potentials, their integration in the loop algebra and the
//! numerical Iwasawa splitting Φ = F·B₊.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FrameField, PathOrder};
use crate::grid::{DomainGrid, Field, RField};
use crate::loopalg::{Mat2C, MatrixLoop, Parity, I, SQRT_I};
use crate::spinor::DiracData;
use crate::symmap::{sym_maps, SymOutput};

/// Default truncation order N.
pub const DEFAULT_ORDER: usize = 12;

/// Condition number above which a node is treated as outside the big cell.
pub const BIG_CELL_COND: f64 = 1e10;

/// One λ-power of a potential: four polynomial entries in z (row-major),
/// coefficients in ascending powers of z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub power: i32,
    pub entries: [Vec<C64>; 4],
}

/// Holomorphic potential ξ = Σ_{j ≥ −1} ξ_j(z) λ^j dz with polynomial entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoloPotential {
    #[serde(default = "schema_one")]
    pub schema: u32,
    pub twisted: bool,
    pub terms: Vec<PotentialTerm>,
}

fn schema_one() -> u32 {
    1
}

fn poly(cs: &[C64], z: C64) -> C64 {
    cs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn constant_term(power: i32, m: Mat2C) -> PotentialTerm {
    PotentialTerm { power, entries: std::array::from_fn(|k| vec![m.0[k]]) }
}

impl HoloPotential {
    /// ξ₋₁ = −(i/4)[[0, 1], [1, 0]].
    pub fn paraboloid() -> Self {
        let q = C64::new(0.0, -0.25);
        HoloPotential { schema: 1, twisted: true, terms: vec![constant_term(-1, Mat2C::offdiag(q, q))] }
    }

    /// D = [[c, aλ⁻¹ + bλ], [−aλ − bλ⁻¹, −c]] with b = −a, c = ½.
    pub fn helicoid(a: f64) -> Self {
        let (a, b, c) = (C64::new(a, 0.0), C64::new(-a, 0.0), C64::new(0.5, 0.0));
        HoloPotential {
            schema: 1,
            twisted: true,
            terms: vec![
                constant_term(-1, Mat2C::offdiag(a, -b)),
                constant_term(0, Mat2C::diag(c, -c)),
                constant_term(1, Mat2C::offdiag(b, -a)),
            ],
        }
    }

    /// ξ₋₁ = [[0, 1], [z^k, 0]].
    pub fn smyth(k: u32) -> Self {
        let zero = C64::new(0.0, 0.0);
        let mut zk = vec![zero; k as usize + 1];
        zk[k as usize] = C64::new(1.0, 0.0);
        HoloPotential {
            schema: 1,
            twisted: true,
            terms: vec![PotentialTerm { power: -1, entries: [vec![zero], vec![C64::new(1.0, 0.0)], zk, vec![zero]] }],
        }
    }

    /// Checks the lowest power and the twisted flag.
    pub fn validate(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::Config(format!("unsupported potential schema {}", self.schema)));
        }
        let lo = self.terms.iter().map(|t| t.power).min();
        if lo != Some(-1) {
            return Err(Error::Config("potential must have lowest λ-power −1".into()));
        }
        if self.twisted {
            for t in &self.terms {
                let even = t.power.rem_euclid(2) == 0;
                for (k, e) in t.entries.iter().enumerate() {
                    let diag = k == 0 || k == 3;
                    if even != diag && e.iter().any(|c| *c != C64::new(0.0, 0.0)) {
                        return Err(Error::Config(format!("potential term λ^{} violates the twisted flag", t.power)));
                    }
                }
            }
        }
        for t in &self.terms {
            let tr: Vec<C64> = (0..t.entries[0].len().max(t.entries[3].len()))
                .map(|k| {
                    t.entries[0].get(k).copied().unwrap_or_default() + t.entries[3].get(k).copied().unwrap_or_default()
                })
                .collect();
            if tr.iter().any(|c| c.norm() > 0.0) {
                return Err(Error::Config(format!("potential term λ^{} is not traceless", t.power)));
            }
        }
        Ok(())
    }

    /// ξ(z) as a loop.
    pub fn eval(&self, z: C64) -> MatrixLoop {
        let terms: Vec<(i32, Mat2C)> =
            self.terms.iter().map(|t| (t.power, Mat2C(std::array::from_fn(|k| poly(&t.entries[k], z))))).collect();
        let l = MatrixLoop::from_terms(&terms);
        if self.twisted {
            l.with_parity(Parity::Twisted)
        } else {
            l
        }
    }

    /// λ⁻¹ coefficient ξ₋₁(z).
    pub fn minus_one(&self, z: C64) -> Mat2C {
        self.eval(z).coeff(-1)
    }

    /// ∂_z of the (1,2) entry of ξ₋₁.
    fn minus_one_upper_dz(&self, z: C64) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.power == -1)
            .map(|t| {
                let d: Vec<C64> = t.entries[1].iter().enumerate().skip(1).map(|(n, c)| c * n as f64).collect();
                poly(&d, z)
            })
            .sum()
    }
}

/// A loop per grid node.
#[derive(Clone, Debug)]
pub struct LoopField {
    pub grid: DomainGrid,
    pub loops: Vec<MatrixLoop>,
    /// Largest coefficient norm discarded by the truncation window.
    pub tail: f64,
    /// Window actually used (may have been widened).
    pub window: i32,
}

impl LoopField {
    /// Largest coefficient difference to `other`.
    pub fn max_diff(&self, other: &LoopField) -> f64 {
        self.loops.iter().zip(&other.loops).map(|(a, b)| a.sub(b).max_norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct PotentialOptions {
    /// Φ is kept on powers −window..=window.
    pub window: i32,
    /// RK4 substeps per grid step.
    pub substeps: usize,
    pub order: PathOrder,
    /// Relative tail mass that triggers widening of the window.
    pub tail_tol: f64,
}

impl PotentialOptions {
    pub fn with_order(n: usize) -> Self {
        PotentialOptions { window: n as i32, substeps: 8, order: PathOrder::RowFirst, tail_tol: 1e-13 }
    }
}

impl Default for PotentialOptions {
    fn default() -> Self {
        PotentialOptions::with_order(DEFAULT_ORDER)
    }
}

struct Stepper<'a> {
    pot: &'a HoloPotential,
    window: i32,
    substeps: usize,
    tail: f64,
}

impl Stepper<'_> {
    fn rhs(&mut self, phi: &MatrixLoop, z: C64, dir: C64) -> MatrixLoop {
        let (out, tail) = phi.mul(&self.pot.eval(z)).scale(dir).truncate(-self.window, self.window);
        self.tail = self.tail.max(tail);
        out
    }

    /// Advances Φ from z to z + h·dir.
    fn step(&mut self, phi: &MatrixLoop, z: C64, dir: C64, h: f64) -> MatrixLoop {
        let mut p = phi.clone();
        let dt = h / self.substeps as f64;
        let dz = dir * dt;
        let half = C64::new(0.5 * dt, 0.0);
        for q in 0..self.substeps {
            let z0 = z + dz * q as f64;
            let k1 = self.rhs(&p, z0, dir);
            let k2 = self.rhs(&p.add(&k1.scale(half)), z0 + 0.5 * dz, dir);
            let k3 = self.rhs(&p.add(&k2.scale(half)), z0 + 0.5 * dz, dir);
            let k4 = self.rhs(&p.add(&k3.scale(C64::new(dt, 0.0))), z0 + dz, dir);
            let inc = k1.add(&k2.scale(C64::new(2.0, 0.0))).add(&k3.scale(C64::new(2.0, 0.0))).add(&k4);
            p = p.add(&inc.scale(C64::new(dt / 6.0, 0.0)));
            p = p.with_parity(phi.parity());
        }
        p
    }

    /// Fills one line of nodes outward from `start`.
    fn line(&mut self, zs: &[C64], start: usize, init: MatrixLoop, dir: C64, h: f64) -> Vec<MatrixLoop> {
        let mut out = vec![init.clone(); zs.len()];
        for s in [1isize, -1] {
            let mut p = init.clone();
            let mut pos = start as isize;
            while (0..zs.len() as isize).contains(&(pos + s)) {
                p = self.step(&p, zs[pos as usize], dir * s as f64, h);
                pos += s;
                out[pos as usize] = p.clone();
            }
        }
        out
    }
}

fn invertible_on_circle(l: &MatrixLoop) -> bool {
    (0..8).all(|k| {
        let lam = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 8.0);
        l.eval(lam).det().norm() > 1e-12
    })
}

/// Solves dΦ = Φξ dz from Φ(base) = `init` along grid lines.
pub fn integrate_potential(
    pot: &HoloPotential,
    grid: &DomainGrid,
    base: (usize, usize),
    init: &MatrixLoop,
    opts: &PotentialOptions,
) -> Result<LoopField> {
    pot.validate()?;
    if !invertible_on_circle(init) {
        return Err(Error::Singular);
    }
    let init = if pot.twisted { init.clone().with_detected_parity() } else { init.clone() };
    let mut window = opts.window;
    loop {
        let mut st = Stepper { pot, window, substeps: opts.substeps, tail: 0.0 };
        let (init, _) = init.truncate(-window, window);
        let init = if pot.twisted { init.with_parity(Parity::Twisted) } else { init };
        let g = *grid;
        let (bi, bj) = base;
        let mut loops = vec![MatrixLoop::zero(); g.len()];
        let xs = |i: usize| (0..g.nx).map(|j| g.z(i, j)).collect::<Vec<_>>();
        let ys = |j: usize| (0..g.ny).map(|i| g.z(i, j)).collect::<Vec<_>>();
        let ex = C64::new(1.0, 0.0);
        match opts.order {
            PathOrder::RowFirst => {
                let first = st.line(&xs(bi), bj, init, ex, g.hx());
                for (j, p0) in first.into_iter().enumerate() {
                    for (i, p) in st.line(&ys(j), bi, p0, I, g.hy()).into_iter().enumerate() {
                        loops[g.index(i, j)] = p;
                    }
                }
            }
            PathOrder::ColumnFirst => {
                let first = st.line(&ys(bj), bi, init, I, g.hy());
                for (i, p0) in first.into_iter().enumerate() {
                    for (j, p) in st.line(&xs(i), bj, p0, ex, g.hx()).into_iter().enumerate() {
                        loops[g.index(i, j)] = p;
                    }
                }
            }
        }
        let scale = loops.iter().map(MatrixLoop::max_norm).fold(0.0, f64::max);
        if st.tail <= opts.tail_tol * scale || window >= 4 * opts.window {
            if st.tail > opts.tail_tol * scale {
                log::warn!("potential truncation tail {:.3e} at window {window}", st.tail);
            }
            return Ok(LoopField { grid: g, loops, tail: st.tail, window });
        }
        log::warn!("potential truncation tail {:.3e}; widening window {window} → {}", st.tail, window + window / 2);
        window += window / 2;
    }
}

/// Outcome of one pointwise splitting.
#[derive(Clone, Debug)]
pub struct Iwasawa {
    pub f: MatrixLoop,
    pub bp: MatrixLoop,
    /// ‖T‖₁‖T⁻¹‖₁ of the Toeplitz system.
    pub cond: f64,
    /// max ‖Φ − F·B₊‖ over the sample points.
    pub reconstruction: f64,
    /// max ‖F†σ₃F − σ₃‖ over the sample points.
    pub reality: f64,
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Φ = F·B₊ with F(λ)†σ₃F(λ) = σ₃ on 𝕊¹ and B₊(0) upper triangular with
/// positive diagonal. M = σ₃Φ†σ₃Φ is split as M₋M₊ (M₋(∞) = I) by the
/// block-Toeplitz system of size 2K = 4N; then M₊(0) = σ₃B₀†σ₃B₀ fixes B₀,
/// B₊ = (σ₃B₀†σ₃)⁻¹M₊ and F = Φ·B₊⁻¹.
pub fn iwasawa(phi: &MatrixLoop, n: usize) -> Result<Iwasawa> {
    let s3 = Mat2C::sigma3();
    let m = phi.dagger_on_circle().left_mul(&s3).right_mul(&s3).mul(phi);
    let k = 2 * n;
    // X = I + Σ_{k=1}^K X_k λ^{−k} with (X·M)_{−j} = 0 for j = 1..K:
    // Σ_k X_k M_{k−j} = −M_{−j}, solved in transposed form.
    let dim = 2 * k;
    let mut t = DMatrix::<C64>::zeros(dim, dim);
    let mut r = DMatrix::<C64>::zeros(dim, 2);
    for kk in 1..=k {
        for j in 1..=k {
            let blk = m.coeff(kk as i32 - j as i32);
            for a in 0..2 {
                for b in 0..2 {
                    // Tᵀ[(j,b),(kk,a)] = M_{kk−j}[a][b]
                    t[(2 * (j - 1) + b, 2 * (kk - 1) + a)] = blk[(a, b)];
                }
            }
        }
        let rhs = m.coeff(-(kk as i32));
        for a in 0..2 {
            for b in 0..2 {
                r[(2 * (kk - 1) + b, a)] = -rhs[(a, b)];
            }
        }
    }
    let lu = t.clone().lu();
    let tinv = lu.try_inverse().ok_or_else(|| Error::BigCell("singular Toeplitz system".into()))?;
    let cond = one_norm(&t) * one_norm(&tinv);
    if !(cond <= BIG_CELL_COND) {
        return Err(Error::BigCell(format!("condition number {cond:.3e}")));
    }
    let xs = &tinv * &r;
    let mut terms = vec![(0, Mat2C::identity())];
    for kk in 1..=k {
        let mut blk = Mat2C::zero();
        for a in 0..2 {
            for b in 0..2 {
                blk[(a, b)] = xs[(2 * (kk - 1) + b, a)];
            }
        }
        terms.push((-(kk as i32), blk));
    }
    let x = MatrixLoop::from_terms(&terms);
    let xm = x.mul(&m);
    let hi = xm.highest_power().max(0);
    let (mp, _) = xm.truncate(0, hi);
    let m0 = mp.coeff(0);
    let m11 = m0[(0, 0)].re;
    if !(m11 > 0.0) {
        return Err(Error::BigCell(format!("M₊(0)₁₁ = {m11:.3e} is not positive")));
    }
    let alpha = m11.sqrt();
    let beta = m0[(0, 1)] / alpha;
    let dd = m0[(1, 1)].re + beta.norm_sqr();
    if !(dd > 0.0) {
        return Err(Error::BigCell("M₊(0) has no positive factorization".into()));
    }
    let b0 = Mat2C::new(C64::new(alpha, 0.0), beta, C64::new(0.0, 0.0), C64::new(dd.sqrt(), 0.0));
    let l = s3 * b0.adjoint() * s3;
    let mut bp = mp.left_mul(&l.inv());
    if phi.is_twisted() {
        bp = bp.with_detected_parity();
    }
    let f = phi.mul(&bp.plus_inverse(3 * n));
    let f = if phi.is_twisted() { f.with_detected_parity() } else { f };
    let (mut recon, mut reality) = (0.0f64, 0.0f64);
    for q in 0..4 * n {
        let lam = C64::from_polar(1.0, std::f64::consts::TAU * q as f64 / (4 * n) as f64);
        let fv = f.eval(lam);
        recon = recon.max((phi.eval(lam) - fv * bp.eval(lam)).norm());
        reality = reality.max((fv.adjoint() * s3 * fv - s3).norm());
    }
    Ok(Iwasawa { f, bp, cond, reconstruction: recon, reality })
}

/// Per-node diagnostics of the splitting.
#[derive(Clone, Debug)]
pub struct BigCellReport {
    pub cond: RField,
    pub failed: Vec<bool>,
    pub reconstruction: RField,
    pub reality: RField,
}

impl BigCellReport {
    pub fn failures(&self) -> usize {
        self.failed.iter().filter(|f| **f).count()
    }

    fn max_of(f: &RField) -> f64 {
        f.data.iter().filter(|v| v.is_finite()).fold(0.0, |a, b| a.max(*b))
    }

    pub fn max_reconstruction(&self) -> f64 {
        Self::max_of(&self.reconstruction)
    }

    pub fn max_reality(&self) -> f64 {
        Self::max_of(&self.reality)
    }

    pub fn max_cond(&self) -> f64 {
        Self::max_of(&self.cond)
    }
}

/// Splittings at every node; failed nodes are `None`.
pub fn iwasawa_field(phi: &LoopField, n: usize) -> (Vec<Option<Iwasawa>>, BigCellReport) {
    let out: Vec<Option<Iwasawa>> = phi.loops.par_iter().map(|l| iwasawa(l, n).ok()).collect();
    let g = phi.grid;
    let pick =
        |f: &dyn Fn(&Iwasawa) -> f64| Field::from_vec(g, out.iter().map(|o| o.as_ref().map_or(f64::NAN, f)).collect());
    let report = BigCellReport {
        cond: pick(&|o| o.cond),
        failed: out.iter().map(Option::is_none).collect(),
        reconstruction: pick(&|o| o.reconstruction),
        reality: pick(&|o| o.reality),
    };
    (out, report)
}

/// (F, F_λ, F_λλ) at λ from the Laurent coefficients of the splittings.
pub fn frame_at(split: &[Option<Iwasawa>], grid: &DomainGrid, base: (usize, usize), lambda: C64) -> FrameField {
    let vals: Vec<[Mat2C; 3]> = split
        .par_iter()
        .map(|o| match o {
            Some(o) => {
                let d1 = o.f.dlambda();
                [o.f.eval(lambda), d1.eval(lambda), d1.dlambda().eval(lambda)]
            }
            None => [Mat2C::nan(); 3],
        })
        .collect();
    let k = grid.index(base.0, base.1);
    FrameField {
        lambda,
        f: Field::from_vec(*grid, vals.iter().map(|v| v[0]).collect()),
        f_l: Field::from_vec(*grid, vals.iter().map(|v| v[1]).collect()),
        f_ll: Field::from_vec(*grid, vals.iter().map(|v| v[2]).collect()),
        base,
        base_value: vals[k][0],
        reprojections: 0,
    }
}

/// Minimal-surface data read off the splitting: with U₋₁ = B₀ξ₋₁B₀⁻¹
/// (B₀ = B₊(0)), u = (U₋₁)₁₂ and l = (U₋₁)₂₁, e^{w/2} = i|u| and B = −u·l.
///
/// For twisted potentials B₀ = diag(α, 1/α), and the reality condition gives
/// the diagonal of the λ⁰ part of F⁻¹F_z as half that of [B₊ξB₊⁻¹]₀, so
/// w_z = 2[B₀ξ₋₁C₁ + B₁ξ₋₁C₀ + B₀ξ₀C₀]₁₁ + p′/p with C = B₊⁻¹, p = (ξ₋₁)₁₂.
pub fn exact_dirac(pot: &HoloPotential, split: &[Option<Iwasawa>], grid: &DomainGrid) -> Result<DiracData> {
    let nan = C64::new(f64::NAN, f64::NAN);
    let mut e = Vec::with_capacity(grid.len());
    let mut b = Vec::with_capacity(grid.len());
    let mut wz = Vec::with_capacity(grid.len());
    for (k, o) in split.iter().enumerate() {
        match o {
            Some(o) => {
                let z = grid.z_at(k);
                let xi = pot.eval(z);
                let (xm, x0) = (xi.coeff(-1), xi.coeff(0));
                let (b0, b1) = (o.bp.coeff(0), o.bp.coeff(1));
                let c0 = b0.inv();
                let c1 = -(c0 * b1 * c0);
                let u = b0 * xm * c0;
                e.push(C64::new(0.0, u[(0, 1)].norm()));
                b.push(-u[(0, 1)] * u[(1, 0)]);
                let lam0 = b0 * xm * c1 + b1 * xm * c0 + b0 * x0 * c0;
                wz.push(2.0 * lam0[(0, 0)] + pot.minus_one_upper_dz(z) / xm[(0, 1)]);
            }
            None => {
                e.push(nan);
                b.push(nan);
                wz.push(nan);
            }
        }
    }
    let mut d = DiracData::from_potential(Field::from_vec(*grid, e), Field::from_vec(*grid, b))?;
    if pot.twisted {
        d.w_z = Some(Field::from_vec(*grid, wz));
    }
    Ok(d)
}

/// Diagonal gauge k = diag(e^{iθ}, e^{−iθ}) with e^{2iθ} = i·u/|u| taking the
/// splitting frame to the frame of [`crate::frame::integrate_frame`].
pub fn standard_gauge(pot: &HoloPotential, split: &[Option<Iwasawa>], grid: &DomainGrid) -> Field<Mat2C> {
    Field::from_vec(
        *grid,
        split
            .iter()
            .enumerate()
            .map(|(k, o)| match o {
                Some(o) => {
                    let b0 = o.bp.coeff(0);
                    let u = (b0 * pot.minus_one(grid.z_at(k)) * b0.inv())[(0, 1)];
                    let e = (I * u / u.norm()).sqrt();
                    Mat2C::diag(e, e.conj())
                }
                None => Mat2C::nan(),
            })
            .collect(),
    )
}

/// A named example: potential, initial value and default domain.
#[derive(Clone, Debug)]
pub struct Example {
    pub name: String,
    pub potential: HoloPotential,
    pub init: Mat2C,
    pub grid: DomainGrid,
    /// Nodes with |z| below this radius are left out of exports and of the
    /// checks on the dual surface.
    pub exclusion_radius: f64,
    /// Whether the surface is expected to be congruent to its dual.
    pub self_dual: bool,
}

/// Radius of the disk around the branch point of the Smyth surfaces.
pub const SMYTH_EXCLUSION: f64 = 0.05;

/// Helicoid parameter a (with b = −a, c = ½).
pub const HELICOID_A: f64 = 0.25;

impl Example {
    /// Built-ins: "paraboloid", "helicoid", "smyth-k".
    pub fn builtin(name: &str) -> Result<Example> {
        let unit = |n| DomainGrid::square(1.0, n);
        let (potential, init, grid, self_dual) = match name {
            "paraboloid" => (HoloPotential::paraboloid(), Mat2C::diag(SQRT_I.inv(), SQRT_I), unit(41)?, true),
            "helicoid" => (HoloPotential::helicoid(HELICOID_A), Mat2C::identity(), unit(161)?, true),
            _ => {
                let k = name
                    .strip_prefix("smyth-")
                    .and_then(|k| k.parse::<u32>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Error::UnknownExample(name.to_string()))?;
                (HoloPotential::smyth(k), Mat2C::identity(), DomainGrid::square(0.5, 201)?, false)
            }
        };
        let exclusion_radius = if name.starts_with("smyth-") { SMYTH_EXCLUSION } else { 0.0 };
        Ok(Example { name: name.to_string(), potential, init, grid, exclusion_radius, self_dual })
    }

    pub const NAMES: [&'static str; 4] = ["paraboloid", "helicoid", "smyth-1", "smyth-2"];

    /// A user potential on a given grid with initial value I.
    pub fn custom(name: &str, potential: HoloPotential, grid: DomainGrid) -> Result<Example> {
        potential.validate()?;
        Ok(Example {
            name: name.to_string(),
            potential,
            init: Mat2C::identity(),
            grid,
            exclusion_radius: 0.0,
            self_dual: false,
        })
    }

    /// Nodes inside the exclusion disk.
    pub fn exclusion_mask(&self, grid: &DomainGrid) -> Vec<bool> {
        (0..grid.len()).map(|k| grid.z_at(k).norm() < self.exclusion_radius).collect()
    }
}

#[derive(Clone, Debug)]
pub struct DpwOptions {
    pub order: usize,
    pub base: (usize, usize),
    pub potential: PotentialOptions,
}

impl DpwOptions {
    pub fn centered(grid: &DomainGrid) -> Self {
        DpwOptions { order: DEFAULT_ORDER, base: (grid.ny / 2, grid.nx / 2), potential: PotentialOptions::default() }
    }
}

/// Everything the potential pipeline produces.
#[derive(Clone, Debug)]
pub struct DpwOutput {
    pub phi: LoopField,
    pub split: Vec<Option<Iwasawa>>,
    pub report: BigCellReport,
    pub dirac: DiracData,
    /// Standard-gauge frames, one per λ sample.
    pub frames: Vec<FrameField>,
    pub sym: Vec<SymOutput>,
}

impl DpwOutput {
    pub fn grid(&self) -> DomainGrid {
        self.phi.grid
    }

    /// Nodes where the splitting failed.
    pub fn mask(&self) -> &[bool] {
        &self.report.failed
    }
}

/// integrate_potential → iwasawa per node → F, F_λ, F_λλ → Sym surfaces.
/// Frames are returned in the standard gauge of [`standard_gauge`].
pub fn dpw_pipeline(
    pot: &HoloPotential,
    init: &Mat2C,
    grid: &DomainGrid,
    lambdas: &[C64],
    opts: &DpwOptions,
) -> Result<DpwOutput> {
    if lambdas.is_empty() {
        return Err(Error::Config("empty λ list".into()));
    }
    for l in lambdas {
        if (l.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("λ = {l} is not on the unit circle")));
        }
    }
    let mut popts = opts.potential.clone();
    popts.window = popts.window.max(opts.order as i32);
    let phi = integrate_potential(pot, grid, opts.base, &MatrixLoop::constant(*init), &popts)?;
    let (split, report) = iwasawa_field(&phi, opts.order);
    if report.failed[grid.index(opts.base.0, opts.base.1)] {
        let (i, j) = opts.base;
        return Err(Error::BigCell(format!("base node ({i},{j}) is outside the big cell")));
    }
    let dirac = exact_dirac(pot, &split, grid)?;
    let gauge = standard_gauge(pot, &split, grid);
    let frames: Vec<FrameField> =
        lambdas.iter().map(|&l| frame_at(&split, grid, opts.base, l).gauged(&gauge)).collect();
    let sym = frames.iter().map(sym_maps).collect::<Result<Vec<_>>>()?;
    Ok(DpwOutput { phi, split, report, dirac, frames, sym })
}
