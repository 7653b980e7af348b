//! Rectangular parameter grids, sampled fields and 4th-order derivative stencils.
//!
//! Node (i, j) sits at z = x₀ + j·hx + i(y₀ + i·hy); storage is row-major over
//! y then x, so the flat index is i·nx + j. Masked samples are stored as NaN.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loopalg::{Mat2C, I};

/// Uniform grid on [x0, x1] × [y0, y1] with `nx` × `ny` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl DomainGrid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 5 || ny < 5 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid(format!("need x0 < x1 and y0 < y1, got [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(DomainGrid { x0, x1, y0, y1, nx, ny })
    }

    /// Square grid [−r, r]² with n nodes per side.
    pub fn square(r: f64, n: usize) -> Result<Self> {
        DomainGrid::new(-r, r, -r, r, n, n)
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nx + j
    }

    pub fn node(&self, k: usize) -> (usize, usize) {
        (k / self.nx, k % self.nx)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.hx()
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y0 + i as f64 * self.hy()
    }

    pub fn z(&self, i: usize, j: usize) -> C64 {
        C64::new(self.x(j), self.y(i))
    }

    pub fn z_at(&self, k: usize) -> C64 {
        let (i, j) = self.node(k);
        self.z(i, j)
    }

    /// Node closest to `z`.
    pub fn nearest(&self, z: C64) -> (usize, usize) {
        let j = ((z.re - self.x0) / self.hx()).round().clamp(0.0, (self.nx - 1) as f64);
        let i = ((z.im - self.y0) / self.hy()).round().clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }

    /// Node at exactly `z`, or an error if `z` is not a grid node.
    pub fn node_at(&self, z: C64) -> Result<(usize, usize)> {
        let (i, j) = self.nearest(z);
        let tol = 1e-9 * self.hx().min(self.hy());
        if (self.z(i, j) - z).norm() > tol {
            return Err(Error::InvalidGrid(format!("{z} is not a grid node")));
        }
        Ok((i, j))
    }

    /// Grid with half the spacing over the same domain.
    pub fn refined(&self) -> Self {
        DomainGrid { nx: 2 * self.nx - 1, ny: 2 * self.ny - 1, ..*self }
    }

    /// Whether node k lies at least `margin` nodes away from every edge.
    pub fn is_interior(&self, k: usize, margin: usize) -> bool {
        let (i, j) = self.node(k);
        i >= margin && j >= margin && i + margin < self.ny && j + margin < self.nx
    }

    /// Serpentine sweep: row 0 left to right, row 1 right to left, and so on.
    pub fn serpentine(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ny).flat_map(move |i| {
            let row: Box<dyn Iterator<Item = usize>> =
                if i % 2 == 0 { Box::new(0..self.nx) } else { Box::new((0..self.nx).rev()) };
            row.map(move |j| self.index(i, j))
        })
    }
}

/// Values sampled on every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub grid: DomainGrid,
    pub data: Vec<T>,
}

pub type CField = Field<C64>;
pub type RField = Field<f64>;
pub type MField = Field<Mat2C>;

impl<T: Clone> Field<T> {
    pub fn filled(grid: DomainGrid, v: T) -> Self {
        Field { grid, data: vec![v; grid.len()] }
    }
}

impl<T> Field<T> {
    pub fn from_fn(grid: DomainGrid, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.ny {
            for j in 0..grid.nx {
                data.push(f(i, j));
            }
        }
        Field { grid, data }
    }

    pub fn from_vec(grid: DomainGrid, data: Vec<T>) -> Self {
        assert_eq!(data.len(), grid.len(), "field size does not match grid");
        Field { grid, data }
    }

    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.data[self.grid.index(i, j)]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field { grid: self.grid, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U, V>(&self, other: &Field<U>, f: impl Fn(&T, &U) -> V) -> Field<V> {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field { grid: self.grid, data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect() }
    }
}

/// Anything a stencil can act on.
pub trait Sample:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Mul<C64, Output = Self>
{
}
impl<T> Sample for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> + Mul<C64, Output = T> {}

/// 4th-order first derivative at position `p` of a line of `n` samples.
fn stencil<T: Sample>(get: impl Fn(usize) -> T, p: usize, n: usize, h: f64) -> T {
    let s = 1.0 / (12.0 * h);
    let w = |c: [f64; 5], base: usize| {
        let mut acc = get(base) * c[0];
        for (k, ck) in c.iter().enumerate().skip(1) {
            acc = acc + get(base + k) * *ck;
        }
        acc * s
    };
    if p >= 2 && p + 2 < n {
        return w([1.0, -8.0, 0.0, 8.0, -1.0], p - 2);
    }
    match p {
        0 => w([-25.0, 48.0, -36.0, 16.0, -3.0], 0),
        1 => w([-3.0, -10.0, 18.0, -6.0, 1.0], 0),
        _ if p + 2 == n => w([-1.0, 6.0, -18.0, 10.0, 3.0], n - 5),
        _ => w([3.0, -16.0, 36.0, -48.0, 25.0], n - 5),
    }
}

impl<T: Sample> Field<T> {
    pub fn d_dx(&self) -> Field<T> {
        let g = self.grid;
        let h = g.hx();
        Field::from_fn(g, |i, j| stencil(|k| self.data[g.index(i, k)], j, g.nx, h))
    }

    pub fn d_dy(&self) -> Field<T> {
        let g = self.grid;
        let h = g.hy();
        Field::from_fn(g, |i, j| stencil(|k| self.data[g.index(k, j)], i, g.ny, h))
    }

    /// ∂_z = ½(∂_x − i∂_y).
    pub fn d_z(&self) -> Field<T> {
        let dx = self.d_dx();
        let dy = self.d_dy();
        dx.zip_map(&dy, |a, b| (*a - *b * I) * 0.5)
    }

    /// ∂_z̄ = ½(∂_x + i∂_y).
    pub fn d_zbar(&self) -> Field<T> {
        let dx = self.d_dx();
        let dy = self.d_dy();
        dx.zip_map(&dy, |a, b| (*a + *b * I) * 0.5)
    }
}

impl CField {
    pub fn is_valid(&self, k: usize) -> bool {
        self.data[k].is_finite()
    }
}

impl RField {
    pub fn to_complex(&self) -> CField {
        self.map(|v| C64::new(*v, 0.0))
    }
}

/// Summary of a scalar residual field over valid nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub masked: usize,
}

impl Stats {
    /// Statistics over nodes at least `margin` away from the boundary; NaN
    /// entries count as masked.
    pub fn of(field: &RField, margin: usize) -> Stats {
        let mut s = Stats::default();
        let mut sum = 0.0;
        for (k, v) in field.data.iter().enumerate() {
            if !field.grid.is_interior(k, margin) {
                continue;
            }
            if v.is_finite() {
                s.max = s.max.max(*v);
                sum += v;
                s.count += 1;
            } else {
                s.masked += 1;
            }
        }
        s.mean = if s.count > 0 { sum / s.count as f64 } else { 0.0 };
        s
    }
}

/// Branch continuation along the serpentine sweep.
///
/// Each valid value is replaced by `choose(value, reference)`, where the
/// reference is an already-accepted grid neighbour: the previous node of the
/// sweep when adjacent, otherwise the node below. Nodes with neither are
/// continued after the sweep from any accepted 4-neighbour. `choose` returns
/// the chosen branch and whether the choice was ambiguous. Invalid values are
/// skipped. Returns the first ambiguous node, if any.
pub(crate) fn continue_branch<T: Copy>(
    grid: &DomainGrid,
    values: &mut [T],
    valid: impl Fn(&T) -> bool,
    choose: impl Fn(&T, &T) -> (T, bool),
) -> std::result::Result<(), usize> {
    let mut accepted = vec![false; values.len()];
    let mut prev: Option<usize> = None;
    let mut ambiguous = None;
    let mut deferred = Vec::new();
    let mut accept = |k: usize, r: Option<usize>, values: &mut [T], accepted: &mut [bool]| {
        if let Some(r) = r {
            let (v, amb) = choose(&values[k], &values[r]);
            values[k] = v;
            if amb && ambiguous.is_none() {
                ambiguous = Some(k);
            }
        }
        accepted[k] = true;
    };
    for k in grid.serpentine() {
        if !valid(&values[k]) {
            continue;
        }
        let (i, j) = grid.node(k);
        let adjacent = |m: usize| {
            let (a, b) = grid.node(m);
            a.abs_diff(i) + b.abs_diff(j) == 1
        };
        let below = (i > 0).then(|| grid.index(i - 1, j)).filter(|&m| accepted[m]);
        let reference = match prev {
            Some(p) if adjacent(p) => Some(p),
            _ => below,
        };
        if reference.is_none() && prev.is_some() {
            // Cut off from the swept region; continued later from a neighbour.
            deferred.push(k);
            continue;
        }
        accept(k, reference, values, &mut accepted);
        prev = Some(k);
    }
    while !deferred.is_empty() {
        let before = deferred.len();
        deferred.retain(|&k| {
            let (i, j) = grid.node(k);
            let neighbour = [(0, 1), (2, 1), (1, 0), (1, 2)]
                .iter()
                .filter_map(|&(di, dj)| {
                    let (a, b) = ((i + di).checked_sub(1)?, (j + dj).checked_sub(1)?);
                    (a < grid.ny && b < grid.nx).then(|| grid.index(a, b))
                })
                .find(|&m| accepted[m]);
            match neighbour {
                Some(m) => {
                    accept(k, Some(m), values, &mut accepted);
                    false
                }
                None => true,
            }
        });
        if deferred.len() == before {
            // A component unreachable from the sweep starts afresh.
            let k = deferred.remove(0);
            accept(k, None, values, &mut accepted);
        }
    }
    match ambiguous {
        Some(k) => Err(k),
        None => Ok(()),
    }
}

/// Sign continuation: each value or its negative, whichever is closer to the
/// reference under `dist`. A choice is ambiguous when both candidates are
/// nearly equidistant.
pub(crate) fn continue_signs<T: Copy>(
    grid: &DomainGrid,
    values: &mut [T],
    valid: impl Fn(&T) -> bool,
    neg: impl Fn(&T) -> T,
    dist: impl Fn(&T, &T) -> f64,
) -> std::result::Result<(), usize> {
    continue_branch(grid, values, valid, |v, r| {
        let n = neg(v);
        let (dp, dn) = (dist(v, r), dist(&n, r));
        let amb = dp.min(dn) > 0.5 * dp.max(dn);
        (if dn < dp { n } else { *v }, amb)
    })
}

/// Continuous logarithm of a complex field; non-finite or zero entries give NaN.
pub fn continuous_log(f: &CField) -> std::result::Result<CField, usize> {
    let mut vals: Vec<C64> = f
        .data
        .iter()
        .map(|v| if v.is_finite() && v.norm() > 0.0 { v.ln() } else { C64::new(f64::NAN, f64::NAN) })
        .collect();
    let tau = 2.0 * std::f64::consts::PI;
    continue_branch(
        &f.grid,
        &mut vals,
        |v| v.is_finite(),
        |v, r| {
            let turns = ((r.im - v.im) / tau).round();
            let out = C64::new(v.re, v.im + turns * tau);
            (out, (out.im - r.im).abs() > 0.45 * tau)
        },
    )?;
    Ok(Field::from_vec(f.grid, vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = DomainGrid::square(1.0, 41).unwrap();
        assert!((g.hx() - 0.05).abs() < 1e-15);
        assert_eq!(g.node_at(C64::new(0.0, 0.0)).unwrap(), (20, 20));
        assert_eq!(g.z(0, 40), C64::new(1.0, -1.0));
        assert!(DomainGrid::square(1.0, 4).is_err());
        assert_eq!(g.refined().nx, 81);
    }

    #[test]
    fn serpentine_visits_every_node_once_adjacently() {
        let g = DomainGrid::new(0.0, 1.0, 0.0, 1.0, 5, 6).unwrap();
        let order: Vec<usize> = g.serpentine().collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..30).collect::<Vec<_>>());
        for w in order.windows(2) {
            let (a, b) = (g.node(w[0]), g.node(w[1]));
            let d = a.0.abs_diff(b.0) + a.1.abs_diff(b.1);
            assert_eq!(d, 1);
        }
    }

    #[test]
    fn stencils_exact_on_quartics() {
        let g = DomainGrid::new(-1.0, 1.0, -0.5, 0.7, 9, 7).unwrap();
        let f = Field::from_fn(g, |i, j| {
            let z = g.z(i, j);
            z * z * z * z + z.conj() * 2.0
        });
        let dz = f.d_z();
        let dzb = f.d_zbar();
        for k in 0..g.len() {
            let z = g.z_at(k);
            assert!((dz.data[k] - z * z * z * 4.0).norm() < 1e-11);
            assert!((dzb.data[k] - 2.0).norm() < 1e-11);
        }
    }

    #[test]
    fn stencil_error_is_fourth_order() {
        let err = |n: usize| {
            let g = DomainGrid::square(1.0, n).unwrap();
            let f = Field::from_fn(g, |_, j| C64::new(g.x(j).sin(), 0.0));
            let d = f.d_dx();
            (0..g.len()).map(|k| (d.data[k].re - g.z_at(k).re.cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn continuous_log_unwraps_around_a_circle() {
        let g = DomainGrid::square(1.0, 21).unwrap();
        let f = Field::from_fn(g, |i, j| (g.z(i, j) - C64::new(3.0, 0.0)).powi(3) * -1.0);
        let l = continuous_log(&f).unwrap();
        let ld = l.d_z();
        for k in 0..g.len() {
            let want = 3.0 / (g.z_at(k) - C64::new(3.0, 0.0));
            assert!((ld.data[k] - want).norm() < 1e-4);
        }
    }

    #[test]
    fn stats_skip_boundary_and_nan() {
        let g = DomainGrid::square(1.0, 9).unwrap();
        let mut f = Field::filled(g, 1.0);
        f.data[0] = 100.0;
        f.data[g.index(4, 4)] = f64::NAN;
        let s = Stats::of(&f, 2);
        assert_eq!(s.max, 1.0);
        assert_eq!(s.count, 24);
        assert_eq!(s.masked, 1);
    }
}
