//! Run configuration: pipeline selector, grid, λ samples, truncation,
//! tolerance overrides and output location.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dpw::{Example, HoloPotential, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::grid::DomainGrid;
use crate::verify::Tolerances;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "NIL3_OUT";

/// Output directory used when neither `--out` nor [`OUT_ENV`] is given.
pub const DEFAULT_OUT: &str = "nil3-out";

/// Where the surface comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Example(String),
    Potential(PathBuf),
    /// CSV with columns i, j, psi1_re, psi1_im, psi2_re, psi2_im.
    Spinors(PathBuf),
}

/// Grid given as x0, x1, y0, y1, nx, ny.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<DomainGrid> {
        DomainGrid::new(self.x0, self.x1, self.y0, self.y1, self.nx, self.ny)
    }

    pub fn of(g: &DomainGrid) -> Self {
        GridSpec { x0: g.x0, x1: g.x1, y0: g.y0, y1: g.y1, nx: g.nx, ny: g.ny }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(Error::Parse(format!("grid needs x0,x1,y0,y1,nx,ny, got '{s}'")));
        }
        let f = |k: usize| parts[k].parse::<f64>().map_err(|_| Error::Parse(format!("bad grid bound '{}'", parts[k])));
        let n = |k: usize| parts[k].parse::<usize>().map_err(|_| Error::Parse(format!("bad grid size '{}'", parts[k])));
        let spec = GridSpec { x0: f(0)?, x1: f(1)?, y0: f(2)?, y1: f(3)?, nx: n(4)?, ny: n(5)? };
        spec.grid()?;
        Ok(spec)
    }
}

/// Parses one λ sample: a complex literal (`1`, `-i`, `0.5+0.866i`) or an
/// angle on the unit circle (`60deg`, `1.047rad`).
pub fn parse_lambda(s: &str) -> Result<C64> {
    let t = s.trim();
    let bad = || Error::Parse(format!("bad λ sample '{s}'"));
    if let Some(d) = t.strip_suffix("deg") {
        let a: f64 = d.trim().parse().map_err(|_| bad())?;
        return Ok(C64::from_polar(1.0, a.to_radians()));
    }
    if let Some(r) = t.strip_suffix("rad") {
        let a: f64 = r.trim().parse().map_err(|_| bad())?;
        return Ok(C64::from_polar(1.0, a));
    }
    let z = parse_complex(t).ok_or_else(bad)?;
    if (z.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!("λ = {t} is not on the unit circle")));
    }
    Ok(z / z.norm())
}

fn parse_complex(t: &str) -> Option<C64> {
    let t: String = t.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = t.parse::<f64>() {
        return Some(C64::new(v, 0.0));
    }
    let body = t.strip_suffix('i')?;
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse::<f64>().ok(),
    };
    match split {
        Some(k) => Some(C64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(C64::new(0.0, imag(body)?)),
    }
}

/// Parses a comma-separated λ list.
pub fn parse_lambdas(s: &str) -> Result<Vec<C64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_lambda).collect()
}

/// Everything a command needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    pub source: Source,
    pub grid: Option<GridSpec>,
    pub lambdas: Vec<C64>,
    pub order: usize,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub allow_reflection: bool,
}

impl RunConfig {
    pub fn new(source: Source) -> Self {
        RunConfig {
            schema: 1,
            source,
            grid: None,
            lambdas: vec![C64::new(1.0, 0.0)],
            order: DEFAULT_ORDER,
            tolerances: Tolerances::default(),
            out: default_out_dir(),
            allow_reflection: false,
        }
    }

    /// Checks the invariants: λ samples unit-modulus and non-empty, valid grid,
    /// positive truncation order.
    pub fn validate(&self) -> Result<()> {
        if self.schema != 1 {
            return Err(Error::Config(format!("unsupported config schema {}", self.schema)));
        }
        if self.lambdas.is_empty() {
            return Err(Error::Config("empty λ list".into()));
        }
        for l in &self.lambdas {
            if (l.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("λ = {l} is not on the unit circle")));
            }
        }
        if self.order == 0 {
            return Err(Error::Config("truncation order must be positive".into()));
        }
        if let Some(g) = &self.grid {
            g.grid()?;
        }
        Ok(())
    }

    /// Resolves the selector to an example with the configured grid.
    pub fn example(&self) -> Result<Example> {
        let mut ex = match &self.source {
            Source::Example(name) => Example::builtin(name)?,
            Source::Potential(path) => {
                let text = std::fs::read_to_string(path)?;
                let pot: HoloPotential = serde_json::from_str(&text)?;
                let grid = match &self.grid {
                    Some(g) => g.grid()?,
                    None => DomainGrid::square(1.0, 41)?,
                };
                let name =
                    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "potential".into());
                Example::custom(&name, pot, grid)?
            }
            Source::Spinors(_) => return Err(Error::Config("a spinor CSV has no holomorphic potential".into())),
        };
        if let Some(g) = &self.grid {
            ex.grid = g.grid()?;
        }
        Ok(ex)
    }

    pub fn subject(&self) -> String {
        match &self.source {
            Source::Example(n) => n.clone(),
            Source::Potential(p) | Source::Spinors(p) => {
                p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
            }
        }
    }

    /// SHA-256 of the canonical JSON of the configuration, minus the output
    /// directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// SHA-256 over the fields that determine the computed surfaces (source,
    /// grid, λ samples, truncation order).
    pub fn pipeline_hash(&self) -> String {
        let key = (self.schema, &self.source, &self.grid, &self.lambdas, self.order);
        let json = serde_json::to_vec(&key).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Per-run output directory `<out>/<subject>-<pipeline hash prefix>`, shared
    /// by every command run on the same surfaces.
    pub fn run_dir(&self) -> PathBuf {
        self.out.join(format!("{}-{}", self.subject(), &self.pipeline_hash()[..12]))
    }
}

/// `$NIL3_OUT` if set, else `nil3-out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| Path::new(DEFAULT_OUT).to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn lambda_literals() {
        assert_eq!(parse_lambda("1").unwrap(), C64::new(1.0, 0.0));
        assert_eq!(parse_lambda("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_lambda("-i").unwrap(), C64::new(0.0, -1.0));
        let z = parse_lambda("60deg").unwrap();
        assert!((z - C64::from_polar(1.0, FRAC_PI_3)).norm() < 1e-15);
        let z = parse_lambda("0.6-0.8i").unwrap();
        assert!((z - C64::new(0.6, -0.8)).norm() < 1e-15);
        let z = parse_lambda("6e-1+8e-1i").unwrap();
        assert!((z - C64::new(0.6, 0.8)).norm() < 1e-15);
        assert!(matches!(parse_lambda("2"), Err(Error::Config(_))));
        assert!(matches!(parse_lambda("x"), Err(Error::Parse(_))));
        assert_eq!(parse_lambdas("1, i,60deg").unwrap().len(), 3);
    }

    #[test]
    fn grid_spec() {
        let g: GridSpec = "-1,1,-1,1,41,41".parse().unwrap();
        assert_eq!(g.grid().unwrap(), DomainGrid::square(1.0, 41).unwrap());
        assert!("-1,1,-1,1,41".parse::<GridSpec>().is_err());
        assert!("1,-1,-1,1,41,41".parse::<GridSpec>().is_err());
        assert!("-1,1,-1,1,3,41".parse::<GridSpec>().is_err());
    }

    #[test]
    fn validation_and_hash() {
        let mut c = RunConfig::new(Source::Example("paraboloid".into()));
        c.validate().unwrap();
        let h = c.hash();
        c.out = PathBuf::from("/elsewhere");
        assert_eq!(c.hash(), h);
        c.lambdas.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.lambdas = vec![C64::new(2.0, 0.0)];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.lambdas = vec![C64::new(0.0, 1.0)];
        assert_ne!(c.hash(), h);
        let p = c.pipeline_hash();
        c.allow_reflection = true;
        assert_ne!(c.hash(), h);
        assert_eq!(c.pipeline_hash(), p);
    }
}
