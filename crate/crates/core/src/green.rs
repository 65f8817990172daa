//! Green function by escape-rate telescoping and slice measures of the
//! Green current on holomorphic disks.

use std::f64::consts::{PI, TAU};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::endo::HomPolyMap;
use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::projgeom::{dist, max_norm, normalize, random_point, ProjPoint, C64, ONE, ZERO};
use crate::rng::seeded;

pub const MAX_DEPTH: usize = 60;
pub const DEFAULT_DEPTH: usize = 40;
const CONSTANT_SAMPLES: usize = 10_000;
const CONSTANT_SEED: u64 = 0x67_7265_656e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub depth: usize,
    pub error_bound: f64,
}

/// `1.5 * sup |log |F(v)|_max|` over a fixed sample of max-normalized `v`.
pub fn green_constant(map: &HomPolyMap) -> f64 {
    let mut rng = seeded(CONSTANT_SEED);
    let pts: Vec<ProjPoint> = (0..CONSTANT_SAMPLES).map(|_| random_point(&mut rng)).collect();
    let sup = crate::par::map(&pts, |p| max_norm(&map.eval_lift(&p.coords())).ln().abs())
        .into_iter()
        .fold(0.0, f64::max);
    1.5 * sup
}

/// Green function evaluator carrying the map's telescoping constant.
#[derive(Debug, Clone)]
pub struct Green<'a> {
    map: &'a HomPolyMap,
    constant: f64,
}

impl<'a> Green<'a> {
    pub fn new(map: &'a HomPolyMap) -> Self {
        Self { map, constant: green_constant(map) }
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn map(&self) -> &HomPolyMap {
        self.map
    }

    pub fn error_bound(&self, depth: usize) -> f64 {
        let d = self.map.degree() as f64;
        self.constant / (d - 1.0) / d.powi(depth as i32)
    }

    pub fn value(&self, p: &ProjPoint, depth: usize) -> Result<GreenValue> {
        if depth > MAX_DEPTH {
            return Err(Error::Precondition(format!("green depth {depth} exceeds {MAX_DEPTH}")));
        }
        Ok(GreenValue { value: telescope(self.map, p, depth), depth, error_bound: self.error_bound(depth) })
    }

    /// Green function of the homogeneous lift: `G(v) = G([v]) + log |v|_max`.
    pub fn lifted(&self, v: &[C64; 3], depth: usize) -> f64 {
        match normalize(*v) {
            Ok(p) => telescope(self.map, &p, depth) + max_norm(v).ln(),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

fn telescope(map: &HomPolyMap, p: &ProjPoint, depth: usize) -> f64 {
    let d = map.degree() as f64;
    let mut w = 1.0 / d;
    let mut sum = 0.0;
    let mut q = *p;
    for _ in 0..depth {
        let image = map.eval_lift(&q.coords());
        sum += w * max_norm(&image).ln();
        w /= d;
        q = match normalize(image) {
            Ok(q) => q,
            Err(_) => break,
        };
    }
    sum
}

/// One-off evaluation; computes the map constant each call.
pub fn green(map: &HomPolyMap, p: &ProjPoint, depth: usize) -> Result<GreenValue> {
    Green::new(map).value(p, depth)
}

/// Holomorphic disk `t -> [P0(t) : P1(t) : P2(t)]` over the closed unit disk,
/// with polynomial coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskParam {
    pub coeffs: [Vec<C64>; 3],
    pub n_grid: usize,
}

pub const MIN_GRID: usize = 64;

impl DiskParam {
    pub fn new(coeffs: [Vec<C64>; 3], n_grid: usize) -> Result<Self> {
        if n_grid < MIN_GRID {
            return Err(Error::Precondition(format!("n_grid must be at least {MIN_GRID}")));
        }
        let disk = Self { coeffs, n_grid };
        let c = disk.center()?;
        let moves = (0..16).any(|k| {
            let t = C64::from_polar(0.5, TAU * k as f64 / 16.0);
            disk.point(t).map(|p| dist(&p, &c) > 1e-9).unwrap_or(false)
        });
        if !moves {
            return Err(Error::InvalidInput("disk parametrization is constant".into()));
        }
        Ok(disk)
    }

    /// `t -> center + radius * t * direction` on a projective line.
    pub fn line(center: [C64; 3], direction: [C64; 3], radius: f64, n_grid: usize) -> Result<Self> {
        let coeffs = [0, 1, 2].map(|k| vec![center[k], direction[k] * radius]);
        Self::new(coeffs, n_grid)
    }

    /// The conic chart `w -> [w^2 : 1 : w]` over the disk `w = w0 + radius t`.
    pub fn conic(w0: C64, radius: f64, n_grid: usize) -> Result<Self> {
        let r = C64::new(radius, 0.0);
        Self::new([vec![w0 * w0, w0 * r * 2.0, r * r], vec![ONE], vec![w0, r]], n_grid)
    }

    /// Same disk with another grid resolution.
    pub fn with_grid(&self, n_grid: usize) -> Result<Self> {
        Self::new(self.coeffs.clone(), n_grid)
    }

    pub fn lift(&self, t: C64) -> [C64; 3] {
        let mut out = [ZERO; 3];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c.iter().rev().fold(ZERO, |acc, a| acc * t + a);
        }
        out
    }

    pub fn lift_derivative(&self, t: C64) -> [C64; 3] {
        let mut out = [ZERO; 3];
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c.iter().enumerate().skip(1).rev().fold(ZERO, |acc, (k, a)| acc * t + a * k as f64);
        }
        out
    }

    pub fn point(&self, t: C64) -> Result<ProjPoint> {
        normalize(self.lift(t))
    }

    pub fn center(&self) -> Result<ProjPoint> {
        self.point(ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceMass {
    pub mass: f64,
    /// Value at the coarse grid used for the refinement check.
    pub coarse: f64,
    /// Amount by which a slightly negative raw value was clamped.
    pub clamped: f64,
}

/// Mass of `dd^c (G o lift)` over `{|t| <= r}`.
pub fn slice_mass(green: &Green, disk: &DiskParam, r: f64, depth: usize) -> Result<f64> {
    slice_mass_report(green, disk, r, depth).map(|s| s.mass)
}

pub fn slice_mass_report(green: &Green, disk: &DiskParam, r: f64, depth: usize) -> Result<SliceMass> {
    sector_mass(green, disk, (0.0, r), (0.0, TAU), depth)
}

/// Mass over the annular sector `r0 <= |t| <= r1`, `a0 <= arg t <= a1`,
/// as the boundary flux of the potential, checked against grid doubling.
pub fn sector_mass(
    green: &Green,
    disk: &DiskParam,
    radii: (f64, f64),
    angles: (f64, f64),
    depth: usize,
) -> Result<SliceMass> {
    let (r0, r1) = radii;
    if !(0.0 <= r0 && r0 < r1 && r1 < 1.0) || !(angles.0 < angles.1 && angles.1 - angles.0 <= TAU + 1e-12) {
        return Err(Error::InvalidInput("sector must satisfy 0 <= r0 < r1 < 1 and a0 < a1".into()));
    }
    if depth > MAX_DEPTH {
        return Err(Error::Precondition(format!("green depth {depth} exceeds {MAX_DEPTH}")));
    }
    let coarse = flux(green, disk, radii, angles, depth, disk.n_grid);
    let fine = flux(green, disk, radii, angles, depth, 2 * disk.n_grid);
    let scale = coarse.abs().max(fine.abs());
    if scale > 1e-6 && (coarse - fine).abs() > 0.05 * scale {
        return Err(Error::GridTooCoarse { coarse, fine });
    }
    let clamped = if fine < 0.0 { -fine } else { 0.0 };
    if clamped > 1e-6 {
        return Err(Error::NoisyLaplacian { clamped, total: fine });
    }
    Ok(SliceMass { mass: fine.max(0.0), coarse, clamped })
}

fn flux(green: &Green, disk: &DiskParam, radii: (f64, f64), angles: (f64, f64), depth: usize, n: usize) -> f64 {
    let h = 2.0 / n as f64;
    let u = |t: C64| green.lifted(&disk.lift(t), depth);
    let (r0, r1) = radii;
    let (a0, a1) = angles;
    let span = a1 - a0;
    let full = (span - TAU).abs() < 1e-12;
    // arcs: outer positive, inner negative, midpoint rule in angle
    let arc = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let m = ((4 * n) as f64 * span / TAU).ceil().max(8.0) as usize;
        let hr = h.min(0.5 * r);
        let vals = crate::par::map_range(m, |k| {
            let a = a0 + span * (k as f64 + 0.5) / m as f64;
            let e = C64::from_polar(1.0, a);
            (u(e * (r + hr)) - u(e * (r - hr))) / (2.0 * hr) * r
        });
        vals.iter().sum::<f64>() * span / m as f64
    };
    let mut total = arc(r1) - arc(r0);
    if !full {
        // radial sides: outward normal derivative is (1/r) du/dtheta
        let m = (((r1 - r0) / h).ceil() as usize * 2).max(8);
        let side = |a: f64| -> f64 {
            let ha = h;
            let vals = crate::par::map_range(m, |k| {
                let r = r0 + (r1 - r0) * (k as f64 + 0.5) / m as f64;
                let dth = ha / r;
                (u(C64::from_polar(r, a + dth)) - u(C64::from_polar(r, a - dth))) / (2.0 * dth) / r
            });
            vals.iter().sum::<f64>() * (r1 - r0) / m as f64
        };
        total += side(a1) - side(a0);
    }
    total / TAU
}

/// Atoms drawn from the cell masses of the 5-point Laplacian of the
/// potential on the disk grid, by systematic resampling; each atom sits at
/// a uniform random point of its cell. Total weight is the grid-measured
/// slice mass.
pub fn slice_sample(
    green: &Green,
    disk: &DiskParam,
    depth: usize,
    atom_count: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    if atom_count == 0 {
        return Err(Error::InvalidInput("atom_count must be positive".into()));
    }
    let cells = laplacian_cells(green, disk, depth)?;
    let total: f64 = cells.iter().map(|c| c.1).sum();
    if total <= 1e-6 {
        return Err(Error::EmptySlice(total));
    }
    let mut rng = seeded(seed);
    let step = total / atom_count as f64;
    let mut target = rng.random::<f64>() * step;
    let mut acc = 0.0;
    let mut atoms = Vec::with_capacity(atom_count);
    let mut drawn = 0;
    let h = 2.0 / disk.n_grid as f64;
    let jittered = |t: C64, rng: &mut crate::rng::Rng| -> Result<ProjPoint> {
        let dt = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * h;
        disk.point(t + dt)
    };
    for (t, m) in &cells {
        acc += m;
        while drawn < atom_count && target < acc {
            atoms.push((jittered(*t, &mut rng)?, step));
            target += step;
            drawn += 1;
        }
    }
    while drawn < atom_count {
        // rounding at the end of the sweep
        let last = cells.iter().rev().find(|c| c.1 > 0.0).expect("positive mass");
        atoms.push((jittered(last.0, &mut rng)?, step));
        drawn += 1;
    }
    EmpiricalMeasure::new(atoms, "slice-sample")
}

/// Cell centers with nonnegative Laplacian mass over the unit-disk grid.
pub fn laplacian_cells(green: &Green, disk: &DiskParam, depth: usize) -> Result<Vec<(C64, f64)>> {
    let n = disk.n_grid;
    let h = 2.0 / n as f64;
    // potential on the grid nodes, including a one-cell margin
    let nodes = n + 3;
    let coord = |i: usize| -1.0 - h + h * i as f64;
    let values = crate::par::map_range(nodes * nodes, |k| {
        let (i, j) = (k / nodes, k % nodes);
        let t = C64::new(coord(i), coord(j));
        if t.norm() <= 1.0 + 2.0 * h {
            green.lifted(&disk.lift(t), depth)
        } else {
            f64::NAN
        }
    });
    let at = |i: usize, j: usize| values[i * nodes + j];
    let mut cells = Vec::new();
    let mut positive = 0.0;
    let mut negative = 0.0;
    for i in 1..nodes - 1 {
        for j in 1..nodes - 1 {
            let t = C64::new(coord(i), coord(j));
            if t.norm() > 1.0 - 0.5 * h {
                continue;
            }
            let lap = at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j);
            let m = lap / (2.0 * PI);
            if !m.is_finite() {
                continue;
            }
            if m >= 0.0 {
                positive += m;
                cells.push((t, m));
            } else {
                negative -= m;
                cells.push((t, 0.0));
            }
        }
    }
    if negative > 0.01 * positive && positive > 0.0 {
        return Err(Error::NoisyLaplacian { clamped: negative, total: positive });
    }
    Ok(cells)
}
