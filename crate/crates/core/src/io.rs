//! File formats: OBJ meshes with JSON sidecars, CSV fields, JSON reports and
//! the frame cache.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FrameField;
use crate::grid::{CField, DomainGrid, Field, RField};
use crate::loopalg::Mat2C;
use crate::nil3::SurfaceGrid;
use crate::spinor::{DiracData, SpinorField};

/// Fixed float format: 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Mesh of a sampled surface: one vertex per node (Nil₃ coordinates), two
/// triangles per grid quad whose corners are all unmasked and finite. Masked
/// nodes keep a placeholder vertex so that vertex k is node k.
pub fn write_obj(path: &Path, surf: &SurfaceGrid, mask: &[bool]) -> Result<usize> {
    let g = surf.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# nil3 surface {}x{}, vertex index = i*nx + j + 1", g.ny, g.nx)?;
    let ok: Vec<bool> = (0..g.len()).map(|k| !mask[k] && surf.points.data[k].is_finite()).collect();
    for (k, p) in surf.points.data.iter().enumerate() {
        let c = if ok[k] { p.coords() } else { [0.0; 3] };
        writeln!(w, "v {} {} {}", fmt(c[0]), fmt(c[1]), fmt(c[2]))?;
    }
    let mut faces = 0;
    for i in 0..g.ny - 1 {
        for j in 0..g.nx - 1 {
            let a = g.index(i, j);
            let b = g.index(i, j + 1);
            let c = g.index(i + 1, j + 1);
            let d = g.index(i + 1, j);
            if [a, b, c, d].iter().all(|&k| ok[k]) {
                writeln!(w, "f {} {} {}", a + 1, b + 1, c + 1)?;
                writeln!(w, "f {} {} {}", a + 1, c + 1, d + 1)?;
                faces += 2;
            }
        }
    }
    w.flush()?;
    Ok(faces)
}

/// Vertices and faces of an OBJ file.
pub fn read_obj(path: &Path) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        let bad = || Error::Parse(format!("bad OBJ line '{line}'"));
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for v in c.iter_mut() {
                    *v = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                }
                verts.push(c);
            }
            Some("f") => {
                let mut c = [0usize; 3];
                for v in c.iter_mut() {
                    *v = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                }
                faces.push(c);
            }
            _ => {}
        }
    }
    Ok((verts, faces))
}

/// Node coordinates of a surface, one row per node.
pub fn write_surface_csv(path: &Path, surf: &SurfaceGrid, mask: &[bool]) -> Result<()> {
    let g = surf.grid();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "x", "y", "x1", "x2", "x3", "masked"])?;
    for k in 0..g.len() {
        let (i, j) = g.node(k);
        let c = surf.points.data[k].coords();
        w.write_record([
            i.to_string(),
            j.to_string(),
            fmt(g.x(j)),
            fmt(g.y(i)),
            fmt(c[0]),
            fmt(c[1]),
            fmt(c[2]),
            u8::from(mask[k]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A named column of a field CSV.
pub enum Column<'a> {
    Real(&'a str, &'a RField),
    Complex(&'a str, &'a CField),
    Flag(&'a str, &'a [bool]),
}

/// Scalar fields on a grid: i, j, x, y and the given columns (complex
/// columns split into `_re`, `_im`).
pub fn write_fields_csv(path: &Path, grid: &DomainGrid, cols: &[Column]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["i", "j", "x", "y"].iter().map(|s| s.to_string()).collect();
    for c in cols {
        match c {
            Column::Real(n, _) | Column::Flag(n, _) => header.push(n.to_string()),
            Column::Complex(n, _) => {
                header.push(format!("{n}_re"));
                header.push(format!("{n}_im"));
            }
        }
    }
    w.write_record(&header)?;
    for k in 0..grid.len() {
        let (i, j) = grid.node(k);
        let mut rec = vec![i.to_string(), j.to_string(), fmt(grid.x(j)), fmt(grid.y(i))];
        for c in cols {
            match c {
                Column::Real(_, f) => rec.push(fmt(f.data[k])),
                Column::Flag(_, m) => rec.push(u8::from(m[k]).to_string()),
                Column::Complex(_, f) => {
                    rec.push(fmt(f.data[k].re));
                    rec.push(fmt(f.data[k].im));
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads generating spinors from a CSV with columns
/// i, j, psi1_re, psi1_im, psi2_re, psi2_im on the given grid. Nodes absent
/// from the file are NaN (masked).
pub fn read_spinor_csv(path: &Path, grid: DomainGrid) -> Result<SpinorField> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse(format!("spinor CSV lacks column '{name}'")))
    };
    let idx = [col("i")?, col("j")?, col("psi1_re")?, col("psi1_im")?, col("psi2_re")?, col("psi2_im")?];
    let nan = C64::new(f64::NAN, f64::NAN);
    let mut p1 = vec![nan; grid.len()];
    let mut p2 = vec![nan; grid.len()];
    for rec in r.records() {
        let rec = rec?;
        let get = |c: usize| rec.get(idx[c]).unwrap_or("").trim();
        let int = |c: usize| get(c).parse::<usize>().map_err(|_| Error::Parse(format!("bad index '{}'", get(c))));
        let num = |c: usize| get(c).parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{}'", get(c))));
        let (i, j) = (int(0)?, int(1)?);
        if i >= grid.ny || j >= grid.nx {
            return Err(Error::GridMismatch);
        }
        let k = grid.index(i, j);
        p1[k] = C64::new(num(2)?, num(3)?);
        p2[k] = C64::new(num(4)?, num(5)?);
    }
    Ok(SpinorField::new(Field::from_vec(grid, p1), Field::from_vec(grid, p2), C64::new(1.0, 0.0)))
}

pub fn write_spinor_csv(path: &Path, s: &SpinorField) -> Result<()> {
    let g = s.grid();
    write_fields_csv(path, &g, &[Column::Complex("psi1", &s.psi1), Column::Complex("psi2", &s.psi2)])
}

/// JSON sidecar written next to every OBJ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: u32,
    pub config_hash: String,
    pub subject: String,
    /// "f-minus", "f-plus", "dual-spinor" or "spinor-surface".
    pub surface: String,
    pub lambda: C64,
    pub grid: DomainGrid,
    pub base: (usize, usize),
    pub faces: usize,
    /// Masked nodes as (i, j).
    pub masked: Vec<(usize, usize)>,
    /// Number of masked nodes per reason.
    pub mask_reasons: BTreeMap<String, usize>,
    /// Radius of the disk left out around z = 0 (0 if none).
    pub exclusion_radius: f64,
    pub residuals: BTreeMap<String, f64>,
}

/// Masked node list and reason counts from named masks.
pub fn mask_summary(
    grid: &DomainGrid,
    masks: &[(&str, &[bool])],
) -> (Vec<bool>, Vec<(usize, usize)>, BTreeMap<String, usize>) {
    let mut all = vec![false; grid.len()];
    let mut reasons = BTreeMap::new();
    for (name, m) in masks {
        let n = m.iter().filter(|v| **v).count();
        if n > 0 {
            reasons.insert(name.to_string(), n);
        }
        for (a, b) in all.iter_mut().zip(m.iter()) {
            *a |= *b;
        }
    }
    let list = (0..grid.len()).filter(|&k| all[k]).map(|k| grid.node(k)).collect();
    (all, list, reasons)
}

fn mat_to(m: &Mat2C) -> [C64; 4] {
    m.0
}

fn mat_from(a: &[C64; 4]) -> Mat2C {
    Mat2C(*a)
}

/// One cached frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedFrame {
    pub lambda: C64,
    pub base_value: [C64; 4],
    pub f: Vec<[C64; 4]>,
    pub f_l: Vec<[C64; 4]>,
    pub f_ll: Vec<[C64; 4]>,
}

/// Frames and exact Dirac data of a run, reusable by later commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCache {
    pub schema: u32,
    pub pipeline_hash: String,
    pub subject: String,
    pub grid: DomainGrid,
    pub base: (usize, usize),
    pub exclusion_radius: f64,
    /// Nodes outside the big cell.
    pub failed: Vec<bool>,
    pub potential: Vec<C64>,
    pub b: Vec<C64>,
    pub w_z: Option<Vec<C64>>,
    pub frames: Vec<CachedFrame>,
}

impl FrameCache {
    pub fn new(
        pipeline_hash: &str,
        subject: &str,
        exclusion_radius: f64,
        failed: &[bool],
        dirac: &DiracData,
        frames: &[FrameField],
    ) -> Self {
        let grid = dirac.grid();
        FrameCache {
            schema: 1,
            pipeline_hash: pipeline_hash.to_string(),
            subject: subject.to_string(),
            grid,
            base: frames.first().map(|f| f.base).unwrap_or((grid.ny / 2, grid.nx / 2)),
            exclusion_radius,
            failed: failed.to_vec(),
            potential: dirac.potential.data.clone(),
            b: dirac.b.data.clone(),
            w_z: dirac.w_z.as_ref().map(|f| f.data.clone()),
            frames: frames
                .iter()
                .map(|fr| CachedFrame {
                    lambda: fr.lambda,
                    base_value: mat_to(&fr.base_value),
                    f: fr.f.data.iter().map(mat_to).collect(),
                    f_l: fr.f_l.data.iter().map(mat_to).collect(),
                    f_ll: fr.f_ll.data.iter().map(mat_to).collect(),
                })
                .collect(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::Config(format!("unsupported frame cache schema {}", self.schema)));
        }
        let n = self.grid.len();
        let sizes_ok = self.failed.len() == n
            && self.potential.len() == n
            && self.b.len() == n
            && self.w_z.as_ref().is_none_or(|w| w.len() == n)
            && self.frames.iter().all(|f| f.f.len() == n && f.f_l.len() == n && f.f_ll.len() == n);
        if sizes_ok {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn dirac(&self) -> Result<DiracData> {
        let g = self.grid;
        let mut d =
            DiracData::from_potential(Field::from_vec(g, self.potential.clone()), Field::from_vec(g, self.b.clone()))?;
        d.w_z = self.w_z.as_ref().map(|w| Field::from_vec(g, w.clone()));
        Ok(d)
    }

    pub fn frames(&self) -> Vec<FrameField> {
        let g = self.grid;
        let field = |v: &[[C64; 4]]| Field::from_vec(g, v.iter().map(mat_from).collect());
        self.frames
            .iter()
            .map(|c| FrameField {
                lambda: c.lambda,
                f: field(&c.f),
                f_l: field(&c.f_l),
                f_ll: field(&c.f_ll),
                base: self.base,
                base_value: mat_from(&c.base_value),
                reprojections: 0,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nil3::{Nil3Point, SurfaceMeta};

    fn plane(g: DomainGrid) -> SurfaceGrid {
        SurfaceGrid::new(Field::from_fn(g, |i, j| Nil3Point::new(g.x(j), g.y(i), 0.0)), SurfaceMeta::default())
    }

    #[test]
    fn obj_round_trip_and_masked_faces() {
        let dir = tempfile::tempdir().unwrap();
        let g = DomainGrid::square(1.0, 5).unwrap();
        let s = plane(g);
        let mut mask = vec![false; g.len()];
        let p = dir.path().join("a.obj");
        assert_eq!(write_obj(&p, &s, &mask).unwrap(), 32);
        mask[g.index(2, 2)] = true;
        assert_eq!(write_obj(&p, &s, &mask).unwrap(), 24);
        let (v, f) = read_obj(&p).unwrap();
        assert_eq!(v.len(), 25);
        assert_eq!(f.len(), 24);
        assert_eq!(v[g.index(1, 3)], [g.x(3), g.y(1), 0.0]);
        assert!(f.iter().all(|t| t.iter().all(|&k| k != g.index(2, 2) + 1)));
    }

    #[test]
    fn fixed_float_format() {
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn spinor_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = DomainGrid::square(1.0, 7).unwrap();
        let s =
            SpinorField::from_fn(g, C64::new(1.0, 0.0), |i, j| (C64::new(1.0 + g.x(j), 0.3), C64::new(g.y(i), -0.1)));
        let p = dir.path().join("s.csv");
        write_spinor_csv(&p, &s).unwrap();
        let back = read_spinor_csv(&p, g).unwrap();
        assert_eq!(back.psi1, s.psi1);
        assert_eq!(back.psi2, s.psi2);
        assert!(matches!(read_spinor_csv(&p, DomainGrid::square(1.0, 5).unwrap()), Err(Error::GridMismatch)));
    }
}
