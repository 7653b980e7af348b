//! Command-line front end: `generate`, `dual`, `verify`, `sweep` and `export`.
//!
//! Every command writes into `<out>/<subject>-<hash>/`, where the hash covers
//! the source, grid, λ samples and truncation order. `generate` also leaves a
//! frame cache there that `dual` and `export` reuse.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::config::{parse_lambdas, GridSpec, RunConfig, Source};
use crate::dpw::{dpw_pipeline, DpwOptions, Example};
use crate::dualize::{dual_invariants, dual_local_check, dual_spinors, dualize_with, DualLocalReport, DualOptions};
use crate::error::{Error, Result};
use crate::frame::{surface_spinors, FrameField};
use crate::grid::{RField, Stats};
use crate::io::{self, Column, FrameCache, Sidecar};
use crate::nil3::{conformality_residual, integrate_phi, left_maurer_cartan, Nil3Point, SurfaceGrid};
use crate::spinor::{
    dirac_data, phi_from_spinors, uh_from_spinors, DiracData, DiracOptions, InversionOptions, SpinorField,
};
use crate::symmap::{mc_equivalent, sym_duality, sym_maps, FactorReport, MotionFit, SymOutput, MC_TOL};
use crate::verify::{nan_where, RunArtifacts, VerificationReport, MARGIN, SCHEMA};

#[derive(Debug, Parser)]
#[command(name = "nil3", version, about = "Minimal surfaces in Nil3 and their duals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute f₋ from a potential (or a surface from spinors) and write meshes.
    Generate(Args),
    /// Compute the dual surface f₊ and its invariants.
    Dual(Args),
    /// Run the verification battery; exits nonzero if any check fails.
    Verify(Args),
    /// Run the associated family over several λ.
    Sweep(Args),
    /// Re-export meshes and fields from a frame cache.
    Export(Args),
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("source").required(true).args(["example", "potential", "spinors"])))]
pub struct Args {
    /// Built-in example: paraboloid, helicoid, smyth-1, smyth-2, ...
    #[arg(long)]
    pub example: Option<String>,
    /// Holomorphic potential JSON.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Spinor CSV (columns i, j, psi1_re, psi1_im, psi2_re, psi2_im); needs --grid.
    #[arg(long)]
    pub spinors: Option<PathBuf>,
    /// Domain grid as x0,x1,y0,y1,nx,ny.
    #[arg(long, value_name = "x0,x1,y0,y1,nx,ny", allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    /// Comma-separated λ samples on the unit circle (`1`, `i`, `0.6+0.8i`, `60deg`).
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Laurent truncation order of the Iwasawa splitting.
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,
    /// Tolerance override, repeatable.
    #[arg(long, value_name = "name=val")]
    pub tol: Vec<String>,
    /// Output directory (default: $NIL3_OUT, else ./nil3-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Let congruence reports use the orientation-reversing isometry.
    #[arg(long)]
    pub allow_reflection: bool,
}

/// Result of one command.
#[derive(Debug)]
pub struct Outcome {
    pub run_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

/// λ ∈ {1, e^{iπ/3}, i}.
pub fn default_samples() -> Vec<C64> {
    vec![C64::new(1.0, 0.0), C64::from_polar(1.0, std::f64::consts::FRAC_PI_3), C64::new(0.0, 1.0)]
}

/// Parses arguments and runs; returns the process exit code (0 success,
/// 1 failed checks, 2 usage or runtime error).
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(o) => {
            println!("{}", o.summary);
            println!("output: {}", o.run_dir.display());
            i32::from(!o.passed)
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Generate(a) => generate(&config(a, &[C64::new(1.0, 0.0)])?),
        Command::Dual(a) => dual(&config(a, &[C64::new(1.0, 0.0)])?),
        Command::Verify(a) => verify(&config(a, &default_samples())?),
        Command::Sweep(a) => sweep(&config(a, &default_samples())?),
        Command::Export(a) => export(&config(a, &[C64::new(1.0, 0.0)])?),
    }
}

/// Builds and validates the run configuration of a command.
pub fn config(a: &Args, default_lambdas: &[C64]) -> Result<RunConfig> {
    let source = match (&a.example, &a.potential, &a.spinors) {
        (Some(n), None, None) => Source::Example(n.clone()),
        (None, Some(p), None) => Source::Potential(p.clone()),
        (None, None, Some(p)) => Source::Spinors(p.clone()),
        _ => return Err(Error::Config("give exactly one of --example, --potential, --spinors".into())),
    };
    let mut cfg = RunConfig::new(source);
    cfg.grid = a.grid;
    cfg.lambdas = match &a.lambda {
        Some(s) => parse_lambdas(s)?,
        None => default_lambdas.to_vec(),
    };
    if let Some(n) = a.order {
        cfg.order = n;
    }
    for t in &a.tol {
        cfg.tolerances.apply(t)?;
    }
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    cfg.allow_reflection = a.allow_reflection;
    cfg.validate()?;
    Ok(cfg)
}

/// Pipeline results shared by the commands, computed or read from the cache.
struct Surfaces {
    ex: Example,
    failed: Vec<bool>,
    disk: Vec<bool>,
    dirac: DiracData,
    frames: Vec<FrameField>,
    sym: Vec<SymOutput>,
    /// Max Iwasawa reconstruction error, when computed in this run.
    iwasawa: Option<f64>,
}

impl Surfaces {
    fn compute(cfg: &RunConfig) -> Result<Surfaces> {
        let ex = cfg.example()?;
        let mut opts = DpwOptions::centered(&ex.grid);
        opts.order = cfg.order;
        let out = dpw_pipeline(&ex.potential, &ex.init, &ex.grid, &cfg.lambdas, &opts)?;
        Ok(Surfaces {
            disk: ex.exclusion_mask(&ex.grid),
            failed: out.report.failed.clone(),
            iwasawa: Some(out.report.max_reconstruction()),
            dirac: out.dirac,
            frames: out.frames,
            sym: out.sym,
            ex,
        })
    }

    fn from_cache(cfg: &RunConfig, cache: &FrameCache) -> Result<Surfaces> {
        cache.check()?;
        let mut ex = cfg.example()?;
        ex.grid = cache.grid;
        let frames = cache.frames();
        let sym = frames.iter().map(sym_maps).collect::<Result<Vec<_>>>()?;
        Ok(Surfaces {
            disk: ex.exclusion_mask(&ex.grid),
            failed: cache.failed.clone(),
            dirac: cache.dirac()?,
            frames,
            sym,
            iwasawa: None,
            ex,
        })
    }

    /// Reads the cache of this configuration if present, else computes.
    fn load(cfg: &RunConfig, dir: &Path) -> Result<(Surfaces, bool)> {
        let path = dir.join(CACHE);
        if path.exists() {
            let cache: FrameCache = io::read_json(&path)?;
            if cache.pipeline_hash == cfg.pipeline_hash() {
                return Ok((Surfaces::from_cache(cfg, &cache)?, true));
            }
        }
        Ok((Surfaces::compute(cfg)?, false))
    }

    fn cache(&self, cfg: &RunConfig) -> FrameCache {
        FrameCache::new(
            &cfg.pipeline_hash(),
            &cfg.subject(),
            self.ex.exclusion_radius,
            &self.failed,
            &self.dirac,
            &self.frames,
        )
    }

    fn h(&self) -> RField {
        nan_where(&self.dirac.potential.map(|e| 4.0 * e.im), &self.failed)
    }
}

const CACHE: &str = "frames.json";

fn prepare(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir)?;
    #[derive(Serialize)]
    struct Stored<'a> {
        config_hash: String,
        pipeline_hash: String,
        #[serde(flatten)]
        config: &'a RunConfig,
    }
    // the output location is left out so that identical runs give identical files
    let mut stored = cfg.clone();
    stored.out = PathBuf::new();
    io::write_json(
        &dir.join("config.json"),
        &Stored { config_hash: cfg.hash(), pipeline_hash: cfg.pipeline_hash(), config: &stored },
    )?;
    Ok(dir)
}

/// Writes `<stem>.obj`, `<stem>.csv` and the `<stem>.json` sidecar.
fn write_surface(
    dir: &Path,
    stem: &str,
    cfg: &RunConfig,
    surface: &str,
    surf: &SurfaceGrid,
    masks: &[(&str, &[bool])],
    exclusion_radius: f64,
    mut residuals: BTreeMap<String, f64>,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let g = surf.grid();
    let nonfinite: Vec<bool> = surf.points.data.iter().map(|p| !p.is_finite()).collect();
    let mut all_masks = masks.to_vec();
    all_masks.push(("non-finite", &nonfinite));
    let (mask, masked, mask_reasons) = io::mask_summary(&g, &all_masks);
    let obj = dir.join(format!("{stem}.obj"));
    let faces = io::write_obj(&obj, surf, &mask)?;
    let csv = dir.join(format!("{stem}.csv"));
    io::write_surface_csv(&csv, surf, &mask)?;
    let phi = left_maurer_cartan(surf);
    let (res, eu) = conformality_residual(&phi);
    let conf = Stats::of(&nan_where(&res.zip_map(&eu, |r, e| 2.0 * r / e), &mask), MARGIN);
    residuals.insert("conformality".into(), conf.max);
    let side = Sidecar {
        schema: SCHEMA,
        config_hash: cfg.hash(),
        subject: cfg.subject(),
        surface: surface.into(),
        lambda: surf.meta.lambda,
        grid: g,
        base: surf.meta.base,
        faces,
        masked,
        mask_reasons,
        exclusion_radius,
        residuals,
    };
    let json = dir.join(format!("{stem}.json"));
    io::write_json(&json, &side)?;
    files.extend([obj, csv, json]);
    Ok(())
}

/// f₋ meshes per λ, the scalar fields, the potential and the frame cache.
fn write_primary(dir: &Path, cfg: &RunConfig, s: &Surfaces, files: &mut Vec<PathBuf>) -> Result<()> {
    let g = s.ex.grid;
    for (n, sym) in s.sym.iter().enumerate() {
        let mut res = BTreeMap::new();
        res.insert("sym-reality".to_string(), sym.reality_max());
        if let Some(r) = s.iwasawa {
            res.insert("iwasawa-reconstruction".to_string(), r);
        }
        let masks: [(&str, &[bool]); 2] = [("big-cell", &s.failed), ("exclusion-disk", &s.disk)];
        write_surface(
            dir,
            &format!("f-minus-{n}"),
            cfg,
            "f-minus",
            &sym.f_minus,
            &masks,
            s.ex.exclusion_radius,
            res,
            files,
        )?;
    }
    let h = s.h();
    let eu = match s.frames.first() {
        Some(fr) => uh_from_spinors(&surface_spinors(fr, &h)?).0,
        None => h.map(|_| f64::NAN),
    };
    let fields = dir.join("fields.csv");
    io::write_fields_csv(
        &fields,
        &g,
        &[
            Column::Complex("E", &s.dirac.potential),
            Column::Complex("B", &s.dirac.b),
            Column::Real("h", &h),
            Column::Real("eu", &eu),
            Column::Flag("big_cell_failed", &s.failed),
            Column::Flag("excluded", &s.disk),
        ],
    )?;
    files.push(fields);
    let pot = dir.join("potential.json");
    io::write_json(&pot, &s.ex.potential)?;
    files.push(pot);
    Ok(())
}

fn generate(cfg: &RunConfig) -> Result<Outcome> {
    if let Source::Spinors(path) = &cfg.source {
        return generate_from_spinors(cfg, path);
    }
    let dir = prepare(cfg)?;
    let s = Surfaces::compute(cfg)?;
    let mut files = Vec::new();
    write_primary(&dir, cfg, &s, &mut files)?;
    let cache = dir.join(CACHE);
    io::write_json(&cache, &s.cache(cfg))?;
    files.push(cache);
    let failures = s.failed.iter().filter(|v| **v).count();
    Ok(Outcome {
        summary: format!(
            "generated {} at {} λ sample(s) on {}x{} nodes; {failures} node(s) outside the big cell",
            cfg.subject(),
            cfg.lambdas.len(),
            s.ex.grid.nx,
            s.ex.grid.ny
        ),
        run_dir: dir,
        files,
        passed: true,
    })
}

fn spinor_input(cfg: &RunConfig, path: &Path) -> Result<SpinorField> {
    let grid = cfg.grid.ok_or_else(|| Error::Config("--spinors needs --grid".into()))?.grid()?;
    io::read_spinor_csv(path, grid)
}

fn generate_from_spinors(cfg: &RunConfig, path: &Path) -> Result<Outcome> {
    let s = spinor_input(cfg, path)?;
    let dir = prepare(cfg)?;
    let g = s.grid();
    let base = (g.ny / 2, g.nx / 2);
    let surf = integrate_phi(&phi_from_spinors(&s), base, Nil3Point::IDENTITY);
    let mut files = Vec::new();
    write_surface(&dir, "spinor-surface", cfg, "spinor-surface", &surf, &[], 0.0, BTreeMap::new(), &mut files)?;
    Ok(Outcome {
        summary: format!("integrated spinor surface on {}x{} nodes", g.nx, g.ny),
        run_dir: dir,
        files,
        passed: true,
    })
}

fn export(cfg: &RunConfig) -> Result<Outcome> {
    if matches!(cfg.source, Source::Spinors(_)) {
        return Err(Error::Config("export reads a frame cache; use --example or --potential".into()));
    }
    let dir = cfg.run_dir();
    let path = dir.join(CACHE);
    if !path.exists() {
        return Err(Error::Config(format!(
            "no frame cache at {}; run generate with the same flags first",
            path.display()
        )));
    }
    let cache: FrameCache = io::read_json(&path)?;
    if cache.pipeline_hash != cfg.pipeline_hash() {
        return Err(Error::Config("frame cache belongs to a different configuration".into()));
    }
    prepare(cfg)?;
    let s = Surfaces::from_cache(cfg, &cache)?;
    let mut files = Vec::new();
    write_primary(&dir, cfg, &s, &mut files)?;
    for (n, sym) in s.sym.iter().enumerate() {
        let masks: [(&str, &[bool]); 2] = [("big-cell", &s.failed), ("exclusion-disk", &s.disk)];
        let mut res = BTreeMap::new();
        res.insert("sym-reality".to_string(), sym.reality_max());
        write_surface(
            &dir,
            &format!("f-plus-{n}"),
            cfg,
            "f-plus",
            &sym.f_plus,
            &masks,
            s.ex.exclusion_radius,
            res,
            &mut files,
        )?;
    }
    Ok(Outcome {
        summary: format!("exported {} file(s) from the frame cache", files.len()),
        run_dir: dir,
        files,
        passed: true,
    })
}

/// Per-λ content of `dual.json`.
#[derive(Debug, Serialize)]
struct DualEntry {
    lambda: C64,
    /// f₋ versus f₊ up to an isometry of Nil₃.
    congruence: Option<MotionFit>,
    /// Dual spinors of the spinor route versus those read off f₊.
    sym_duality: Option<FactorReport>,
    /// Spinor-route dual surface versus f₊ (when the dual has no masked nodes).
    spinor_route: Option<MotionFit>,
    local: DualLocalReport,
    masked: usize,
    notes: Vec<String>,
}

#[derive(Debug, Serialize)]
struct DualReport {
    schema: u32,
    config_hash: String,
    subject: String,
    allow_reflection: bool,
    entries: Vec<DualEntry>,
}

fn dual(cfg: &RunConfig) -> Result<Outcome> {
    if let Source::Spinors(path) = &cfg.source {
        return dual_from_spinors(cfg, path);
    }
    let dir = prepare(cfg)?;
    let (s, cached) = Surfaces::load(cfg, &dir)?;
    let mut files = Vec::new();
    if !cached {
        let cache = dir.join(CACHE);
        io::write_json(&cache, &s.cache(cfg))?;
        files.push(cache);
    }
    let g = s.ex.grid;
    let h = s.h();
    let dopts = DualOptions::centered(&g);
    let exclusion: Vec<bool> = s.failed.iter().zip(&s.disk).map(|(a, b)| *a || *b).collect();
    let inv = InversionOptions { mask: Some(exclusion), ..InversionOptions::centered(&g) };
    let masks: [(&str, &[bool]); 2] = [("big-cell", &s.failed), ("exclusion-disk", &s.disk)];
    let mut entries = Vec::new();
    for (n, (fr, sym)) in s.frames.iter().zip(&s.sym).enumerate() {
        let mut notes = Vec::new();
        let mut res = BTreeMap::new();
        res.insert("sym-reality".to_string(), sym.reality_max());
        write_surface(
            &dir,
            &format!("f-plus-{n}"),
            cfg,
            "f-plus",
            &sym.f_plus,
            &masks,
            s.ex.exclusion_radius,
            res,
            &mut files,
        )?;

        let spinors = surface_spinors(fr, &h)?;
        let b = s.dirac.b.map(|v| v / (fr.lambda * fr.lambda));
        let mut pair = dualize_with(&spinors, &h, &b, &dopts)?;
        for (m, &d) in pair.mask.iter_mut().zip(&s.disk) {
            *m |= d;
        }
        pair.dual = pair.dual.masked(&pair.mask);
        let local = dual_local_check(&pair);
        let (eu, _) = uh_from_spinors(&spinors);
        let eu = nan_where(&eu, &pair.mask);
        let inv_dual = crate::dualize::invariants_from(
            &eu,
            &h,
            &b,
            &spinors.psi2.zip_map(&spinors.psi1, |p2, p1| *p2 / p1.conj()),
            &pair.mask,
        );
        let table = dir.join(format!("invariants-{n}.csv"));
        io::write_fields_csv(
            &table,
            &g,
            &[
                Column::Real("eu_dual", &inv_dual.eu),
                Column::Real("h_dual", &inv_dual.h),
                Column::Complex("B_dual", &inv_dual.b),
                Column::Complex("g_dual", &inv_dual.g),
                Column::Complex("E_dual", &inv_dual.potential),
                Column::Flag("masked", &pair.mask),
            ],
        )?;
        files.push(table);
        let spin = dir.join(format!("dual-spinors-{n}.csv"));
        io::write_spinor_csv(&spin, &pair.dual)?;
        files.push(spin);

        let congruence = match mc_equivalent(&sym.f_minus, &sym.f_plus, cfg.allow_reflection, MC_TOL) {
            Ok(f) => Some(f),
            Err(e) => {
                notes.push(format!("congruence: {e}"));
                None
            }
        };
        let sym_dual = match sym_duality(sym, &b, &dopts, &inv) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("sym duality: {e}"));
                None
            }
        };
        let masked = pair.mask.iter().filter(|v| **v).count();
        let spinor_route = if masked == 0 {
            let surf = integrate_phi(&phi_from_spinors(&pair.dual), fr.base, Nil3Point::IDENTITY);
            write_surface(
                &dir,
                &format!("dual-spinor-{n}"),
                cfg,
                "dual-spinor",
                &surf,
                &[],
                0.0,
                BTreeMap::new(),
                &mut files,
            )?;
            mc_equivalent(&surf, &sym.f_plus, true, MC_TOL).ok()
        } else {
            notes.push(format!("{masked} masked node(s): spinor-route dual written as spinors only"));
            None
        };
        entries.push(DualEntry {
            lambda: fr.lambda,
            congruence,
            sym_duality: sym_dual,
            spinor_route,
            local,
            masked,
            notes,
        });
    }
    let summary = entries
        .iter()
        .map(|e| {
            let c = e
                .congruence
                .as_ref()
                .map_or("n/a".to_string(), |f| format!("{} (residual {:.2e})", f.equivalent, f.residual));
            format!("λ = {:.4}: f₋ ≅ f₊ {c}, dual local residual {:.2e}", e.lambda, e.local.eu.max(e.local.h))
        })
        .collect::<Vec<_>>()
        .join("\n");
    let report = dir.join("dual.json");
    io::write_json(
        &report,
        &DualReport {
            schema: SCHEMA,
            config_hash: cfg.hash(),
            subject: cfg.subject(),
            allow_reflection: cfg.allow_reflection,
            entries,
        },
    )?;
    files.push(report);
    Ok(Outcome { summary, run_dir: dir, files, passed: true })
}

fn dual_from_spinors(cfg: &RunConfig, path: &Path) -> Result<Outcome> {
    let s = spinor_input(cfg, path)?;
    let g = s.grid();
    let d = dirac_data(&s, &DiracOptions::default())?;
    let dopts = DualOptions::centered(&g);
    let pair = dual_spinors(&s, &d, &dopts)?;
    let dir = prepare(cfg)?;
    let mut files = Vec::new();
    let inv = dual_invariants(&s, &d, &dopts)?;
    let table = dir.join("invariants.csv");
    io::write_fields_csv(
        &table,
        &g,
        &[
            Column::Real("eu_dual", &inv.eu),
            Column::Real("h_dual", &inv.h),
            Column::Complex("B_dual", &inv.b),
            Column::Complex("g_dual", &inv.g),
            Column::Complex("E_dual", &inv.potential),
            Column::Flag("masked", &pair.mask),
        ],
    )?;
    files.push(table);
    let spin = dir.join("dual-spinors.csv");
    io::write_spinor_csv(&spin, &pair.dual)?;
    files.push(spin);
    let local = dual_local_check(&pair);
    let mut notes = Vec::new();
    if pair.unmasked() == g.len() {
        let surf = integrate_phi(&phi_from_spinors(&pair.dual), dopts.base, Nil3Point::IDENTITY);
        write_surface(&dir, "dual-spinor", cfg, "dual-spinor", &surf, &[], 0.0, BTreeMap::new(), &mut files)?;
    } else {
        notes.push(format!("{} masked node(s): dual written as spinors only", g.len() - pair.unmasked()));
    }
    let summary = format!("dual spinors on {}x{} nodes, local residual {:.2e}", g.nx, g.ny, local.eu.max(local.h));
    let report = dir.join("dual.json");
    io::write_json(
        &report,
        &DualReport {
            schema: SCHEMA,
            config_hash: cfg.hash(),
            subject: cfg.subject(),
            allow_reflection: cfg.allow_reflection,
            entries: vec![DualEntry {
                lambda: s.lambda,
                congruence: None,
                sym_duality: None,
                spinor_route: None,
                local,
                masked: g.len() - pair.unmasked(),
                notes,
            }],
        },
    )?;
    files.push(report);
    Ok(Outcome { summary, run_dir: dir, files, passed: true })
}

fn battery(cfg: &RunConfig) -> Result<(RunArtifacts, VerificationReport)> {
    if matches!(cfg.source, Source::Spinors(_)) {
        return Err(Error::Config("this command needs --example or --potential".into()));
    }
    let ex = cfg.example()?;
    let art = RunArtifacts::build(&ex, &cfg.lambdas, cfg.order)?;
    let rep = art.verify(&cfg.tolerances);
    Ok((art, rep))
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let (_, rep) = battery(cfg)?;
    let dir = prepare(cfg)?;
    let json = dir.join("report.json");
    io::write_json(&json, &rep)?;
    let table = rep.table();
    let txt = dir.join("report.txt");
    fs::write(&txt, &table)?;
    Ok(Outcome { summary: table, run_dir: dir, files: vec![json, txt], passed: rep.passed() })
}

/// Checks the sweep is judged on.
pub const SWEEP_CHECKS: [&str; 4] = ["lambda-independence", "minimality", "sym-reality", "conformality"];

#[derive(Debug, Serialize)]
struct SweepReport {
    schema: u32,
    config_hash: String,
    subject: String,
    lambdas: Vec<C64>,
    /// max |E(λ) − E| per λ, with E(λ) read from the surface at λ.
    potential_drift: Vec<f64>,
    entries: Vec<crate::verify::CheckEntry>,
}

fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.lambdas.len() < 2 {
        return Err(Error::Config("sweep needs at least two λ samples".into()));
    }
    let (art, rep) = battery(cfg)?;
    let dir = prepare(cfg)?;
    let mut files = Vec::new();
    let failed = art.out.report.failed.clone();
    let disk = art.example.exclusion_mask(&art.example.grid);
    let masks: [(&str, &[bool]); 2] = [("big-cell", &failed), ("exclusion-disk", &disk)];
    for (n, sym) in art.out.sym.iter().enumerate() {
        for (name, surf) in [("f-minus", &sym.f_minus), ("f-plus", &sym.f_plus)] {
            let mut res = BTreeMap::new();
            res.insert("sym-reality".to_string(), sym.reality_max());
            write_surface(
                &dir,
                &format!("{name}-{n}"),
                cfg,
                name,
                surf,
                &masks,
                art.example.exclusion_radius,
                res,
                &mut files,
            )?;
        }
    }
    let potential_drift = art
        .spinor_dirac
        .iter()
        .map(|d| {
            let diff = d.potential.zip_map(&art.out.dirac.potential, |a, b| (*a - *b).norm());
            Stats::of(&nan_where(&diff, &art.exclusion), MARGIN).max
        })
        .collect();
    let entries: Vec<_> = SWEEP_CHECKS.iter().filter_map(|n| rep.get(n).cloned()).collect();
    let passed = entries.iter().all(|e| e.pass);
    let summary = entries
        .iter()
        .map(|e| {
            format!("{:<22} max {:.3e}  tol {:.1e}  {}", e.name, e.max, e.tol, if e.pass { "PASS" } else { "FAIL" })
        })
        .collect::<Vec<_>>()
        .join("\n");
    let json = dir.join("sweep.json");
    io::write_json(
        &json,
        &SweepReport {
            schema: SCHEMA,
            config_hash: cfg.hash(),
            subject: cfg.subject(),
            lambdas: cfg.lambdas.clone(),
            potential_drift,
            entries,
        },
    )?;
    files.push(json);
    Ok(Outcome { summary, run_dir: dir, files, passed })
}
