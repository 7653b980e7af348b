//! The λ-family of flat connections and extended frames.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CField, DomainGrid, Field, MField, RField, Stats};
use crate::loopalg::{project_su11, su11_residual, Mat2C, I, SQRT_I};
use crate::spinor::{DiracData, SpinorField};

/// U^λ and V^λ with α^λ = U dz + V dz̄, plus their λ-derivatives.
#[derive(Clone, Debug)]
pub struct ConnectionCoeffs {
    pub lambda: C64,
    pub u: MField,
    pub v: MField,
    pub u_l: MField,
    pub v_l: MField,
}

fn minimal_check(d: &DiracData, tol: f64, margin: usize) -> Result<()> {
    let rel = d.potential.map(|e| e.re.abs() / e.norm());
    let worst = Stats::of(&rel, margin).max;
    if worst > tol {
        return Err(Error::NotMinimal(worst));
    }
    Ok(())
}

/// U = [[w_z/4, −λ⁻¹e^{w/2}], [λ⁻¹Be^{−w/2}, −w_z/4]] and V = −σ₃U(1/λ̄)†σ₃.
pub fn connection_coeffs(d: &DiracData, lambda: C64) -> Result<ConnectionCoeffs> {
    minimal_check(d, 1e-3, 2)?;
    Ok(assemble(d, lambda))
}

fn assemble(d: &DiracData, lambda: C64) -> ConnectionCoeffs {
    let g = d.grid();
    let wz = d.w_z.clone().unwrap_or_else(|| d.w.d_z());
    let li = lambda.inv();
    let mut u = Vec::with_capacity(g.len());
    let mut v = Vec::with_capacity(g.len());
    let mut u_l = Vec::with_capacity(g.len());
    let mut v_l = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let e = d.potential.data[k];
        let be = d.b.data[k] / e;
        let a = wz.data[k] / 4.0;
        u.push(Mat2C::new(a, -li * e, li * be, -a));
        v.push(Mat2C::new(-a.conj(), lambda * be.conj(), -lambda * e.conj(), a.conj()));
        u_l.push(Mat2C::offdiag(li * li * e, -li * li * be));
        v_l.push(Mat2C::offdiag(be.conj(), -e.conj()));
    }
    ConnectionCoeffs {
        lambda,
        u: Field::from_vec(g, u),
        v: Field::from_vec(g, v),
        u_l: Field::from_vec(g, u_l),
        v_l: Field::from_vec(g, v_l),
    }
}

fn zero_curvature(u: &MField, v: &MField) -> RField {
    let vz = v.d_z();
    let uzb = u.d_zbar();
    Field::from_fn(u.grid, |i, j| {
        let k = u.grid.index(i, j);
        (vz.data[k] - uzb.data[k] + u.data[k].commutator(&v.data[k])).norm()
    })
}

/// ‖∂_zV − ∂_z̄U + [U, V]‖ per node, maximized over the λ samples.
pub fn flatness_residual(d: &DiracData, lambdas: &[C64]) -> RField {
    let g = d.grid();
    let mut out = Field::filled(g, 0.0f64);
    for &l in lambdas {
        let c = assemble(d, l);
        let r = zero_curvature(&c.u, &c.v);
        for (o, v) in out.data.iter_mut().zip(&r.data) {
            *o = if v.is_nan() { f64::NAN } else { o.max(*v) };
        }
    }
    out
}

/// Extended frame sampled at one λ together with its first two λ-derivatives.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub lambda: C64,
    pub f: MField,
    pub f_l: MField,
    pub f_ll: MField,
    pub base: (usize, usize),
    pub base_value: Mat2C,
    /// Number of SU(1,1) re-projections applied during integration.
    pub reprojections: usize,
}

impl FrameField {
    pub fn grid(&self) -> DomainGrid {
        self.f.grid
    }

    /// The frame F·k for a λ-independent gauge field k.
    pub fn gauged(&self, k: &MField) -> FrameField {
        let r = |f: &MField| f.zip_map(k, |a, b| *a * *b);
        let (bi, bj) = self.base;
        FrameField {
            lambda: self.lambda,
            f: r(&self.f),
            f_l: r(&self.f_l),
            f_ll: r(&self.f_ll),
            base: self.base,
            base_value: self.base_value * *k.at(bi, bj),
            reprojections: self.reprojections,
        }
    }

    /// Max SU(1,1) residual over valid nodes.
    pub fn su11_max(&self) -> f64 {
        self.f.data.iter().filter(|m| m.is_finite()).map(su11_residual).fold(0.0, f64::max)
    }
}

/// Integration order of the two sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathOrder {
    /// Base column first, then every row.
    ColumnFirst,
    /// Base row first, then every column.
    RowFirst,
}

#[derive(Clone, Debug)]
pub struct FrameOptions {
    pub base: (usize, usize),
    pub order: PathOrder,
    /// RK4 substeps per grid step.
    pub substeps: usize,
    /// Largest flatness residual accepted as input.
    pub flat_tol: f64,
    /// SU(1,1) drift that triggers a re-projection.
    pub drift_tol: f64,
}

impl FrameOptions {
    pub fn centered(grid: &DomainGrid) -> Self {
        FrameOptions {
            base: (grid.ny / 2, grid.nx / 2),
            order: PathOrder::ColumnFirst,
            substeps: 2,
            flat_tol: 1e-3,
            drift_tol: 1e-6,
        }
    }
}

/// Points used by the Lagrange interpolation of line samples.
const INTERP_POINTS: usize = 6;

/// Lagrange interpolation of line samples at fractional position t.
fn interp(vals: &[Mat2C], t: f64) -> Mat2C {
    let n = vals.len();
    let p = INTERP_POINTS.min(n);
    let k = (t.floor() as isize - (p as isize / 2 - 1)).clamp(0, (n - p) as isize) as usize;
    let mut out = Mat2C::zero();
    for a in 0..p {
        let mut w = 1.0;
        for b in 0..p {
            if a != b {
                w *= (t - (k + b) as f64) / (a as f64 - b as f64);
            }
        }
        out += vals[k + a] * w;
    }
    out
}

type State = [Mat2C; 3];

fn rhs(s: &State, a: &Mat2C, a_l: &Mat2C) -> State {
    [s[0] * *a, s[1] * *a + s[0] * *a_l, s[2] * *a + s[1] * *a_l * 2.0]
}

fn axpy(s: &State, k: &State, h: f64) -> State {
    std::array::from_fn(|c| s[c] + k[c] * h)
}

/// Integrates along one line of nodes from position `start` outward in both
/// directions. `a`/`a_l` are the coefficient matrices of the line ODE per node.
fn integrate_line(
    a: &[Mat2C],
    a_l: &[Mat2C],
    start: usize,
    init: State,
    h: f64,
    substeps: usize,
    drift_tol: f64,
    reproj: &mut usize,
) -> Vec<State> {
    let n = a.len();
    let mut out = vec![init; n];
    for dir in [1isize, -1] {
        let mut s = init;
        let mut pos = start as isize;
        while (0..n as isize).contains(&(pos + dir)) {
            let dt = dir as f64 / substeps as f64;
            let step = h * dt;
            for q in 0..substeps {
                let t = pos as f64 + q as f64 * dt;
                let f = |t: f64| (interp(a, t), interp(a_l, t));
                let (a0, l0) = f(t);
                let (a1, l1) = f(t + 0.5 * dt);
                let (a2, l2) = f(t + dt);
                let k1 = rhs(&s, &a0, &l0);
                let k2 = rhs(&axpy(&s, &k1, 0.5 * step), &a1, &l1);
                let k3 = rhs(&axpy(&s, &k2, 0.5 * step), &a1, &l1);
                let k4 = rhs(&axpy(&s, &k3, step), &a2, &l2);
                for c in 0..3 {
                    s[c] = s[c] + (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (step / 6.0);
                }
                if su11_residual(&s[0]) > drift_tol {
                    s[0] = project_su11(&s[0]);
                    *reproj += 1;
                }
            }
            pos += dir;
            out[pos as usize] = s;
        }
    }
    out
}

/// Solves dF = Fα^λ jointly with F_λ and F_λλ from F(base) = `base_value`.
pub fn integrate_frame(d: &DiracData, lambda: C64, base_value: Mat2C, opts: &FrameOptions) -> Result<FrameField> {
    minimal_check(d, 1e-3, 2)?;
    let g = d.grid();
    let flat = Stats::of(&flatness_residual(d, &[lambda]), 2).max;
    if flat > opts.flat_tol {
        return Err(Error::NotFlat(flat));
    }
    let c = assemble(d, lambda);
    // along x: dz = dz̄ = dx; along y: dz = i dy, dz̄ = −i dy
    let ax: Vec<Mat2C> = c.u.data.iter().zip(&c.v.data).map(|(u, v)| *u + *v).collect();
    let ax_l: Vec<Mat2C> = c.u_l.data.iter().zip(&c.v_l.data).map(|(u, v)| *u + *v).collect();
    let ay: Vec<Mat2C> = c.u.data.iter().zip(&c.v.data).map(|(u, v)| (*u - *v) * I).collect();
    let ay_l: Vec<Mat2C> = c.u_l.data.iter().zip(&c.v_l.data).map(|(u, v)| (*u - *v) * I).collect();
    let row = |i: usize, src: &[Mat2C]| (0..g.nx).map(|j| src[g.index(i, j)]).collect::<Vec<_>>();
    let col = |j: usize, src: &[Mat2C]| (0..g.ny).map(|i| src[g.index(i, j)]).collect::<Vec<_>>();
    let init = [base_value, Mat2C::zero(), Mat2C::zero()];
    let (bi, bj) = opts.base;
    let mut states = vec![init; g.len()];
    let mut reproj = 0;
    match opts.order {
        PathOrder::ColumnFirst => {
            let first = integrate_line(
                &col(bj, &ay),
                &col(bj, &ay_l),
                bi,
                init,
                g.hy(),
                opts.substeps,
                opts.drift_tol,
                &mut reproj,
            );
            for (i, s0) in first.into_iter().enumerate() {
                let line = integrate_line(
                    &row(i, &ax),
                    &row(i, &ax_l),
                    bj,
                    s0,
                    g.hx(),
                    opts.substeps,
                    opts.drift_tol,
                    &mut reproj,
                );
                for (j, s) in line.into_iter().enumerate() {
                    states[g.index(i, j)] = s;
                }
            }
        }
        PathOrder::RowFirst => {
            let first = integrate_line(
                &row(bi, &ax),
                &row(bi, &ax_l),
                bj,
                init,
                g.hx(),
                opts.substeps,
                opts.drift_tol,
                &mut reproj,
            );
            for (j, s0) in first.into_iter().enumerate() {
                let line = integrate_line(
                    &col(j, &ay),
                    &col(j, &ay_l),
                    bi,
                    s0,
                    g.hy(),
                    opts.substeps,
                    opts.drift_tol,
                    &mut reproj,
                );
                for (i, s) in line.into_iter().enumerate() {
                    states[g.index(i, j)] = s;
                }
            }
        }
    }
    Ok(FrameField {
        lambda,
        f: Field::from_vec(g, states.iter().map(|s| s[0]).collect()),
        f_l: Field::from_vec(g, states.iter().map(|s| s[1]).collect()),
        f_ll: Field::from_vec(g, states.iter().map(|s| s[2]).collect()),
        base: opts.base,
        base_value,
        reprojections: reproj,
    })
}

/// F = (|ψ₁|² − |ψ₂|²)^{−1/2}·[[√i⁻¹ψ₁, √i⁻¹ψ₂], [√i ψ̄₂, √i ψ̄₁]].
pub fn frame_from_spinors(s: &SpinorField) -> Result<MField> {
    let g = s.grid();
    let mut out = Vec::with_capacity(g.len());
    let si = SQRT_I.inv();
    for k in 0..g.len() {
        let (a, b) = s.at(k);
        if !(a.is_finite() && b.is_finite()) {
            out.push(Mat2C::nan());
            continue;
        }
        let q = a.norm_sqr() - b.norm_sqr();
        if q <= 0.0 {
            let (i, j) = g.node(k);
            return Err(Error::Vertical { i, j, h: 2.0 * q });
        }
        let n = q.sqrt().recip();
        out.push(Mat2C::new(si * a * n, si * b * n, SQRT_I * b.conj() * n, SQRT_I * a.conj() * n));
    }
    Ok(Field::from_vec(g, out))
}

/// ψ₁ = √(h/2)·√i·F₁₁, ψ₂ = √(h/2)·√i·F₁₂.
pub fn spinors_from_frame(f: &MField, h: &RField, lambda: C64) -> Result<SpinorField> {
    let g = f.grid;
    let mut p1 = Vec::with_capacity(g.len());
    let mut p2 = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let hv = h.data[k];
        if hv.is_nan() || !f.data[k].is_finite() {
            p1.push(C64::new(f64::NAN, f64::NAN));
            p2.push(C64::new(f64::NAN, f64::NAN));
            continue;
        }
        if hv <= 0.0 {
            let (i, j) = g.node(k);
            return Err(Error::Vertical { i, j, h: hv });
        }
        let s = (hv / 2.0).sqrt() * SQRT_I;
        p1.push(s * f.data[k][(0, 0)]);
        p2.push(s * f.data[k][(0, 1)]);
    }
    Ok(SpinorField::new(Field::from_vec(g, p1), Field::from_vec(g, p2), lambda))
}

/// Generating spinors of the surface f₋^λ of a standard-gauge frame:
/// ψ(λ) = √(h/2)·√i·(F₁₁, F₁₂) satisfies φ(f₋^λ) = λ⁻¹φ(ψ(λ)), so the
/// spinors of f₋^λ are ψ(λ) rescaled by λ⁻¹.
pub fn surface_spinors(frame: &FrameField, h: &RField) -> Result<SpinorField> {
    let lam = frame.lambda;
    let mut s = spinors_from_frame(&frame.f, h, lam)?.lambda_rescaled(lam.inv());
    s.lambda = lam;
    Ok(s)
}

/// Left Maurer–Cartan coefficients (F⁻¹∂_zF, F⁻¹∂_z̄F) of a sampled frame.
pub fn frame_connection(f: &MField) -> (MField, MField) {
    let fz = f.d_z();
    let fzb = f.d_zbar();
    let inv = f.map(Mat2C::inv);
    (inv.zip_map(&fz, |a, b| *a * *b), inv.zip_map(&fzb, |a, b| *a * *b))
}

/// Flatness of the connection read off a sampled frame.
pub fn frame_flatness_residual(f: &MField) -> RField {
    let (u, v) = frame_connection(f);
    zero_curvature(&u, &v)
}

/// ‖F⁻¹∂_zF − U^λ‖ + ‖F⁻¹∂_z̄F − V^λ‖ per node.
pub fn frame_compatibility(frame: &FrameField, d: &DiracData) -> RField {
    let (u, v) = frame_connection(&frame.f);
    let c = assemble(d, frame.lambda);
    Field::from_fn(u.grid, |i, j| {
        let k = u.grid.index(i, j);
        (u.data[k] - c.u.data[k]).norm() + (v.data[k] - c.v.data[k]).norm()
    })
}

/// Dirac data read off a frame at parameter λ: with u, l the λ⁻¹-parts of the
/// off-diagonal entries of F⁻¹∂_zF, e^{w/2} = i|u| and B = −u·l.
pub fn dirac_from_frame(f: &MField, lambda: C64) -> Result<DiracData> {
    let (u, _) = frame_connection(f);
    dirac_from_minus_one(&u.map(|m| *m * lambda))
}

/// Dirac data from the λ⁻¹ coefficient of F⁻¹∂_zF.
pub fn dirac_from_minus_one(u_minus: &MField) -> Result<DiracData> {
    let potential: CField = u_minus.map(|m| C64::new(0.0, m[(0, 1)].norm()));
    let b: CField = u_minus.map(|m| -m[(0, 1)] * m[(1, 0)]);
    DiracData::from_potential(potential, b)
}
