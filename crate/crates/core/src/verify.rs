//! Verification battery over the artifacts of one pipeline run.
//!
//! Every check reads exactly one artifact, so a corrupted artifact is caught
//! by the checks that own it and by no other.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dpw::{dpw_pipeline, integrate_potential, DpwOptions, DpwOutput, Example};
use crate::dualize::{dual_local_check, dualize_with, DualOptions, DualPair};
use crate::error::{Error, Result};
use crate::frame::{frame_flatness_residual, integrate_frame, surface_spinors, FrameOptions, PathOrder};
use crate::grid::{Field, MField, RField, Stats};
use crate::loopalg::{su11_residual, MatrixLoop};
use crate::nil3::{conformality_residual, left_maurer_cartan, PhiField};
use crate::spinor::{
    dirac_data, holomorphy_residual, phi_from_spinors, uh_from_spinors, DiracData, DiracOptions, InversionOptions,
    SpinorField,
};
use crate::symmap::{mc_equivalent, mc_equivalent_mapped, normal_agreement, sym_duality, DomainMap};

pub const SCHEMA: u32 = 1;

/// Boundary margin of stencil-based checks.
pub const MARGIN: usize = 4;

/// Boundary margin of checks that differentiate stencil output twice.
pub const NESTED_MARGIN: usize = 8;

/// Check names with their default tolerances.
pub const CHECKS: [(&str, f64); 21] = [
    ("conformality", 1e-6),
    ("dirac-consistency", 1e-6),
    ("minimality", 1e-6),
    ("holomorphy-b", 1e-4),
    ("su11", 1e-8),
    ("frame-flatness", 1e-6),
    ("flatness", 1e-6),
    ("frame-paths", 1e-6),
    ("cross-pipeline", 1e-6),
    ("potential-paths", 1e-10),
    ("duality-involution", 1e-10),
    ("dual-invariants", 1e-10),
    ("sym-reality", 1e-8),
    ("sym-duality", 1e-6),
    ("normal-agreement", 1e-6),
    ("lambda-independence", 1e-6),
    ("self-duality", 1e-6),
    ("self-duality-reparametrized", 1e-6),
    ("self-duality-criterion", 1e-6),
    ("iwasawa-reconstruction", 1e-8),
    ("iwasawa-reality", 1e-8),
];

/// Per-check tolerances, overridable by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(CHECKS.iter().map(|(n, t)| (n.to_string(), *t)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!("tolerance {name} must be positive, got {value}")));
        }
        match self.0.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::Config(format!("unknown check '{name}'"))),
        }
    }

    /// Applies an override of the form `name=value`.
    pub fn apply(&mut self, spec: &str) -> Result<()> {
        let (name, value) =
            spec.split_once('=').ok_or_else(|| Error::Parse(format!("expected name=value, got '{spec}'")))?;
        let value: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad tolerance value in '{spec}'")))?;
        self.set(name.trim(), value)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// One line of a [`VerificationReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub masked: usize,
    pub tol: f64,
    pub pass: bool,
}

impl CheckEntry {
    pub fn new(name: &str, s: Stats, tol: f64) -> Self {
        CheckEntry {
            name: name.to_string(),
            max: s.max,
            mean: s.mean,
            count: s.count,
            masked: s.masked,
            tol,
            pass: s.max.is_finite() && s.max <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub subject: String,
    pub lambdas: Vec<C64>,
    pub entries: Vec<CheckEntry>,
    /// Human-readable remarks (pipeline errors behind failed checks, fitted motions).
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.entries.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "verification of {}", self.subject);
        let _ = writeln!(
            s,
            "{:<28} {:>11} {:>11} {:>7} {:>7} {:>9}  result",
            "check", "max", "mean", "nodes", "masked", "tol"
        );
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<28} {:>11.3e} {:>11.3e} {:>7} {:>7} {:>9.1e}  {}",
                e.name,
                e.max,
                e.mean,
                e.count,
                e.masked,
                e.tol,
                if e.pass { "PASS" } else { "FAIL" }
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn merge(stats: &[Stats]) -> Stats {
    let count: usize = stats.iter().map(|s| s.count).sum();
    let sum: f64 = stats.iter().map(|s| s.mean * s.count as f64).sum();
    Stats {
        max: stats.iter().map(|s| s.max).fold(0.0, f64::max),
        mean: if count > 0 { sum / count as f64 } else { 0.0 },
        count,
        masked: stats.iter().map(|s| s.masked).sum(),
    }
}

fn scalar(v: f64) -> Stats {
    Stats { max: v, mean: v, count: 1, masked: 0 }
}

pub(crate) fn nan_where(f: &RField, mask: &[bool]) -> RField {
    Field::from_vec(f.grid, f.data.iter().zip(mask).map(|(v, &m)| if m { f64::NAN } else { *v }).collect())
}

/// Maximum over nodes of ‖a − b‖ for two frame fields.
fn frame_diff(a: &MField, b: &MField) -> Stats {
    Stats::of(&a.zip_map(b, |x, y| (*x - *y).norm()), 0)
}

/// A deliberate corruption of one artifact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Corruption {
    /// φ₁ of f₋ scaled by 1 + ε.
    NonConformalPhi(f64),
    /// B of the spinor route plus ε·max|B|·z̄.
    AntiHolomorphicB(f64),
    /// Uniform complex noise of the given amplitude on every frame entry.
    FrameNoise { amplitude: f64, seed: u64 },
}

/// Inputs of the battery, computed once per run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub example: Example,
    pub lambdas: Vec<C64>,
    pub out: DpwOutput,
    /// Nodes excluded from checks on the dual surface.
    pub exclusion: Vec<bool>,
    /// Support function h = 4·Im e^{w/2}.
    pub h: RField,
    /// Left Maurer–Cartan data of f₋^λ.
    pub phi: Vec<PhiField>,
    /// Generating spinors of f₋^λ read off the frames.
    pub spinors: Vec<SpinorField>,
    /// Dirac data of those spinors by stencils.
    pub spinor_dirac: Vec<DiracData>,
    /// Frame grids.
    pub frames: Vec<MField>,
    /// Dual pairs at each λ with B(λ) = λ⁻²B.
    pub duals: Vec<DualPair>,
    /// Row-first versus column-first integration of the exact connection, per λ.
    pub frame_paths: Vec<Stats>,
    /// Integrated versus split frames, per λ.
    pub cross_pipeline: Vec<Stats>,
    /// Pipeline failures that turned into failed checks.
    pub pipeline_notes: Vec<String>,
    /// Two-path difference of the potential integration.
    pub potential_paths: f64,
}

impl RunArtifacts {
    pub fn build(example: &Example, lambdas: &[C64], order: usize) -> Result<RunArtifacts> {
        let grid = example.grid;
        let mut opts = DpwOptions::centered(&grid);
        opts.order = order;
        let out = dpw_pipeline(&example.potential, &example.init, &grid, lambdas, &opts)?;
        let failed = out.mask().to_vec();
        let disk = example.exclusion_mask(&grid);
        let exclusion: Vec<bool> = failed.iter().zip(&disk).map(|(a, b)| *a || *b).collect();
        let h = nan_where(&out.dirac.potential.map(|e| 4.0 * e.im), &failed);

        let mut phi = Vec::new();
        let mut spinors = Vec::new();
        let mut spinor_dirac = Vec::new();
        let mut duals = Vec::new();
        let dopts = DualOptions::centered(&grid);
        for (frame, sym) in out.frames.iter().zip(&out.sym) {
            phi.push(left_maurer_cartan(&sym.f_minus));
            let s = surface_spinors(frame, &h)?;
            spinor_dirac.push(dirac_data(&s, &DiracOptions::default())?);
            let l2 = (frame.lambda * frame.lambda).inv();
            let mut pair = dualize_with(&s, &h, &out.dirac.b.map(|v| v * l2), &dopts)?;
            for (m, &d) in pair.mask.iter_mut().zip(&disk) {
                *m |= d;
            }
            pair.dual = pair.dual.masked(&pair.mask);
            duals.push(pair);
            spinors.push(s);
        }

        let mut frame_paths = Vec::new();
        let mut cross_pipeline = Vec::new();
        let mut pipeline_notes = Vec::new();
        for fr in &out.frames {
            let mut fo = FrameOptions::centered(&grid);
            fo.base = opts.base;
            fo.order = PathOrder::RowFirst;
            let row = integrate_frame(&out.dirac, fr.lambda, fr.base_value, &fo);
            fo.order = PathOrder::ColumnFirst;
            let col = integrate_frame(&out.dirac, fr.lambda, fr.base_value, &fo);
            match (row, col) {
                (Ok(r), Ok(c)) => {
                    frame_paths.push(frame_diff(&r.f, &c.f));
                    cross_pipeline.push(frame_diff(&c.f, &fr.f));
                }
                (Err(e), _) | (_, Err(e)) => {
                    pipeline_notes.push(format!("frame integration at λ = {:.6}: {e}", fr.lambda));
                    frame_paths.push(scalar(f64::INFINITY));
                    cross_pipeline.push(scalar(f64::INFINITY));
                }
            }
        }

        let mut popts = opts.potential.clone();
        popts.window = popts.window.max(order as i32);
        popts.order = PathOrder::ColumnFirst;
        let col =
            integrate_potential(&example.potential, &grid, opts.base, &MatrixLoop::constant(example.init), &popts)?;
        let potential_paths = out.phi.max_diff(&col);

        Ok(RunArtifacts {
            example: example.clone(),
            lambdas: lambdas.to_vec(),
            frames: out.frames.iter().map(|f| f.f.clone()).collect(),
            out,
            exclusion,
            h,
            phi,
            spinors,
            spinor_dirac,
            duals,
            frame_paths,
            cross_pipeline,
            pipeline_notes,
            potential_paths,
        })
    }

    pub fn corrupt(&mut self, c: Corruption) {
        match c {
            Corruption::NonConformalPhi(eps) => {
                for p in &mut self.phi {
                    *p = p.map(|v| [v[0] * (1.0 + eps), v[1], v[2]]);
                }
            }
            Corruption::AntiHolomorphicB(eps) => {
                for d in &mut self.spinor_dirac {
                    let scale = d.b.data.iter().filter(|v| v.is_finite()).map(|v| v.norm()).fold(0.0, f64::max);
                    let g = d.b.grid;
                    d.b = Field::from_fn(g, |i, j| d.b.data[g.index(i, j)] + eps * scale * g.z(i, j).conj());
                }
            }
            Corruption::FrameNoise { amplitude, seed } => {
                let mut rng = StdRng::seed_from_u64(seed);
                for f in &mut self.frames {
                    for m in &mut f.data {
                        for v in m.0.iter_mut() {
                            *v += C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amplitude;
                        }
                    }
                }
            }
        }
    }

    /// Runs every enabled check.
    pub fn verify(&self, tol: &Tolerances) -> VerificationReport {
        let mut entries = Vec::new();
        let mut notes = Vec::new();
        let mut push = |name: &str, s: Stats| entries.push(CheckEntry::new(name, s, tol.get(name)));
        let grid = self.example.grid;
        let inv = InversionOptions { mask: Some(self.exclusion.clone()), ..InversionOptions::centered(&grid) };

        let conf: Vec<Stats> = self
            .phi
            .iter()
            .map(|p| {
                let (res, eu) = conformality_residual(p);
                Stats::of(&res.zip_map(&eu, |r, e| 2.0 * r / e), MARGIN)
            })
            .collect();
        push("conformality", merge(&conf));

        let cons: Vec<Stats> = self.spinor_dirac.iter().map(|d| Stats::of(&d.consistency, MARGIN)).collect();
        push("dirac-consistency", merge(&cons));

        let re_u: Vec<Stats> =
            self.spinor_dirac.iter().map(|d| Stats::of(&d.potential.map(|e| e.re.abs() / e.norm()), MARGIN)).collect();
        push("minimality", merge(&re_u));

        let hol: Vec<Stats> = self
            .spinor_dirac
            .iter()
            .map(|d| {
                let scale = d.b.data.iter().filter(|v| v.is_finite()).map(|v| v.norm()).fold(0.0, f64::max);
                Stats::of(&holomorphy_residual(&d.b).map(|v| v / scale), NESTED_MARGIN)
            })
            .collect();
        push("holomorphy-b", merge(&hol));

        let su: Vec<Stats> = self
            .frames
            .iter()
            .map(|f| Stats::of(&f.map(|m| if m.is_finite() { su11_residual(m) } else { f64::NAN }), 0))
            .collect();
        push("su11", merge(&su));

        let ff: Vec<Stats> = self.frames.iter().map(|f| Stats::of(&frame_flatness_residual(f), MARGIN)).collect();
        push("frame-flatness", merge(&ff));

        push("flatness", Stats::of(&crate::frame::flatness_residual(&self.out.dirac, &self.lambdas), MARGIN));

        push("frame-paths", merge(&self.frame_paths));
        push("cross-pipeline", merge(&self.cross_pipeline));
        notes.extend(self.pipeline_notes.iter().cloned());
        push("potential-paths", scalar(self.potential_paths));

        let dopts = DualOptions::centered(&grid);
        let inv_stats: Vec<Stats> = self.duals.iter().map(|p| involution(p, &dopts)).collect();
        push("duality-involution", merge(&inv_stats));

        let local: Vec<Stats> = self
            .duals
            .iter()
            .map(|p| {
                let r = dual_local_check(p);
                Stats {
                    max: r.eu.max(r.h).max(r.g_factor_spread),
                    mean: r.eu.max(r.h),
                    count: r.count,
                    masked: r.masked,
                }
            })
            .collect();
        push("dual-invariants", merge(&local));

        let real: Vec<Stats> = self.out.sym.iter().map(|s| Stats::of(&s.reality, 0)).collect();
        push("sym-reality", merge(&real));

        let mut sd = Vec::new();
        let mut na = Vec::new();
        for sym in &self.out.sym {
            match sym_duality(sym, &self.out.dirac.b, &dopts, &inv) {
                Ok(r) => sd.push(Stats { max: r.spread, mean: r.spread, count: r.count, masked: 0 }),
                Err(e) => {
                    notes.push(format!("sym duality at λ = {:.6}: {e}", sym.lambda));
                    sd.push(scalar(f64::INFINITY));
                }
            }
            match normal_agreement(sym, &inv) {
                Ok(f) => na.push(Stats::of(&f, MARGIN)),
                Err(e) => {
                    notes.push(format!("normal agreement at λ = {:.6}: {e}", sym.lambda));
                    na.push(scalar(f64::INFINITY));
                }
            }
        }
        push("sym-duality", merge(&sd));
        push("normal-agreement", merge(&na));

        if self.spinor_dirac.len() >= 2 {
            let e0 = &self.spinor_dirac[0].potential;
            let li: Vec<Stats> = self.spinor_dirac[1..]
                .iter()
                .map(|d| Stats::of(&d.potential.zip_map(e0, |a, b| (a - b).norm() / b.norm()), MARGIN))
                .collect();
            push("lambda-independence", merge(&li));
        }

        if self.example.self_dual {
            let mut direct = Vec::new();
            let mut mapped = Vec::new();
            for sym in &self.out.sym {
                match mc_equivalent(&sym.f_minus, &sym.f_plus, true, tol.get("self-duality")) {
                    Ok(fit) => direct.push(scalar(fit.residual)),
                    Err(e) => {
                        notes.push(format!("congruence at λ = {:.6}: {e}", sym.lambda));
                        direct.push(scalar(f64::INFINITY));
                    }
                }
                let best = DomainMap::ALL
                    .iter()
                    .filter_map(|m| {
                        mc_equivalent_mapped(
                            &sym.f_minus,
                            &sym.f_plus,
                            *m,
                            true,
                            tol.get("self-duality-reparametrized"),
                        )
                        .ok()
                    })
                    .min_by(|a, b| a.residual.total_cmp(&b.residual));
                match best {
                    Some(fit) => {
                        notes.push(format!(
                            "best congruence at λ = {:.6}: domain map {:?}, θ = {:.6}, reflected = {}, residual {:.3e}",
                            sym.lambda, fit.domain_map, fit.theta, fit.reflected, fit.residual
                        ));
                        mapped.push(scalar(fit.residual));
                    }
                    None => mapped.push(scalar(f64::INFINITY)),
                }
            }
            push("self-duality", merge(&direct));
            push("self-duality-reparametrized", merge(&mapped));
            let crit = self.out.dirac.b.zip_map(&self.h, |b, h| (16.0 * b.norm() - h * h).abs() / (h * h));
            push("self-duality-criterion", Stats::of(&crit, 0));
        }

        push("iwasawa-reconstruction", Stats::of(&nan_where(&self.out.report.reconstruction, self.out.mask()), 0));
        push("iwasawa-reality", Stats::of(&nan_where(&self.out.report.reality, self.out.mask()), 0));
        let failures = self.out.report.failures();
        if failures > 0 {
            notes.push(format!("{failures} nodes outside the big cell are masked"));
        }
        let excluded = self.exclusion.iter().filter(|m| **m).count();
        if self.example.exclusion_radius > 0.0 {
            notes.push(format!(
                "{excluded} nodes with |z| < {} are excluded from the dual checks",
                self.example.exclusion_radius
            ));
        }

        VerificationReport {
            schema: SCHEMA,
            subject: self.example.name.clone(),
            lambdas: self.lambdas.clone(),
            entries,
            notes,
        }
    }
}

/// Relative residuals of φ(ψ**) = φ(ψ) and of the restored (e^u, h).
fn involution(p: &DualPair, opts: &DualOptions) -> Stats {
    let g = p.b.grid;
    let h_star = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        if p.mask[k] {
            f64::NAN
        } else {
            16.0 * p.b.data[k].norm() / p.h.data[k]
        }
    });
    let back = match dualize_with(&p.dual, &h_star, &p.b, opts) {
        Ok(q) => q.dual,
        Err(_) => return scalar(f64::INFINITY),
    };
    let phi = phi_from_spinors(&p.source);
    let phi2 = phi_from_spinors(&back);
    let (eu, h) = uh_from_spinors(&p.source);
    let (eu2, h2) = uh_from_spinors(&back);
    let res = Field::from_fn(g, |i, j| {
        let k = g.index(i, j);
        if p.mask[k] {
            return f64::NAN;
        }
        let (a, b) = (phi.at(k), phi2.at(k));
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        (num / den)
            .max((eu2.data[k] - eu.data[k]).abs() / eu.data[k])
            .max((h2.data[k] - h.data[k]).abs() / h.data[k].abs())
    });
    Stats::of(&res, 0)
}

/// Battery with one corrupted artifact, for negative controls.
pub fn negative_control(base: &RunArtifacts, c: Corruption, tol: &Tolerances) -> VerificationReport {
    let mut a = base.clone();
    a.corrupt(c);
    a.verify(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn paraboloid() -> &'static RunArtifacts {
        static A: OnceLock<RunArtifacts> = OnceLock::new();
        A.get_or_init(|| {
            let ex = Example::builtin("paraboloid").unwrap();
            RunArtifacts::build(&ex, &[C64::new(1.0, 0.0), C64::from_polar(1.0, 1.0)], 12).unwrap()
        })
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.apply("flatness=1e-3").unwrap();
        assert_eq!(t.get("flatness"), 1e-3);
        assert!(matches!(t.apply("nonsense=1"), Err(Error::Config(_))));
        assert!(matches!(t.apply("flatness"), Err(Error::Parse(_))));
        assert!(matches!(t.apply("flatness=-1"), Err(Error::Config(_))));
        assert_eq!(t.iter().count(), CHECKS.len());
    }

    #[test]
    fn paraboloid_passes_every_check() {
        let r = paraboloid().verify(&Tolerances::default());
        assert!(r.passed(), "{}", r.table());
        assert_eq!(r.schema, 1);
        let names: Vec<&str> = r.entries.iter().map(|e| e.name.as_str()).collect();
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), names.len());
        assert_eq!(names.len(), CHECKS.len());
    }

    #[test]
    fn negative_controls_hit_only_their_checks() {
        let tol = Tolerances::default();
        let cases = [
            (Corruption::NonConformalPhi(1e-2), vec!["conformality"]),
            (Corruption::AntiHolomorphicB(1e-2), vec!["holomorphy-b"]),
            (Corruption::FrameNoise { amplitude: 1e-3, seed: 7 }, vec!["su11", "frame-flatness"]),
        ];
        for (c, want) in cases {
            let r = negative_control(paraboloid(), c, &tol);
            assert_eq!(r.failing(), want, "{c:?}\n{}", r.table());
        }
    }

    #[test]
    fn tightened_tolerance_fails() {
        let mut t = Tolerances::default();
        t.set("conformality", 1e-12).unwrap();
        let r = paraboloid().verify(&t);
        assert_eq!(r.failing(), vec!["conformality"]);
        assert!(r.table().contains("FAIL"));
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = paraboloid().verify(&Tolerances::default());
        let s = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.entries.len(), r.entries.len());
        assert!(back.get("dual-invariants").unwrap().pass);
    }
}
