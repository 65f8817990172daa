//! Homogeneous points of the projective plane and the conic trapping region.
//!
//! Points are stored in max-normalized form: the coordinate of largest
//! modulus (smallest index on ties) is exactly `1 + 0i` and every other
//! coordinate has modulus at most one.

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Minimum modulus of the chart coordinate accepted by [`to_chart`].
pub const CHART_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    coords: [C64; 3],
    pivot: usize,
}

/// Affine coordinates in the chart where homogeneous coordinate `chart` is 1.
/// `u` and `v` are the remaining two coordinates in increasing index order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePair {
    pub chart: usize,
    pub u: C64,
    pub v: C64,
}

/// The two non-pivot indices of a chart, in increasing order.
pub const fn chart_others(chart: usize) -> (usize, usize) {
    match chart {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

impl ProjPoint {
    pub fn coords(&self) -> [C64; 3] {
        self.coords
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn x(&self) -> C64 {
        self.coords[0]
    }

    pub fn y(&self) -> C64 {
        self.coords[1]
    }

    pub fn z(&self) -> C64 {
        self.coords[2]
    }

    /// Construct from a raw homogeneous triple.
    pub fn new(x: C64, y: C64, z: C64) -> Result<Self> {
        normalize([x, y, z])
    }

    /// Real-coordinate shorthand, panics on the zero vector.
    pub fn real(x: f64, y: f64, z: f64) -> Self {
        normalize([C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0)])
            .expect("nonzero real triple")
    }

    /// Euclidean unit representative (not max-normalized).
    pub fn unit_lift(&self) -> [C64; 3] {
        let n = euclid_norm(&self.coords);
        self.coords.map(|c| c / n)
    }
}

pub fn euclid_norm(v: &[C64; 3]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt()
}

pub fn max_norm(v: &[C64; 3]) -> f64 {
    v[0].norm().max(v[1].norm()).max(v[2].norm())
}

/// Max-normalize a homogeneous triple.
pub fn normalize(raw: [C64; 3]) -> Result<ProjPoint> {
    if raw.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite homogeneous coordinate".into()));
    }
    let moduli = raw.map(|c| c.norm());
    if moduli.iter().all(|&m| m < 1e-300) {
        return Err(Error::ZeroVector);
    }
    let mut pivot = 0;
    for i in 1..3 {
        if moduli[i] > moduli[pivot] {
            pivot = i;
        }
    }
    let scale = moduli[pivot];
    let phase = raw[pivot] / scale;
    let mut coords = [ZERO; 3];
    for i in 0..3 {
        if i == pivot {
            coords[i] = ONE;
            continue;
        }
        let mut c = (raw[i] / scale) / phase;
        // Rounding may leave a modulus a hair above one, or exactly one at a
        // lower index than the pivot; either would make a second
        // normalization pick a different pivot.
        let limit_strict = i < pivot;
        loop {
            let m = c.norm();
            if m < 1.0 || (!limit_strict && m == 1.0) {
                break;
            }
            c *= 1.0 - f64::EPSILON;
        }
        coords[i] = c;
    }
    Ok(ProjPoint { coords, pivot })
}

fn cross(a: &[C64; 3], b: &[C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Chordal distance `|p ^ q| / (|p| |q|)`, the sine of the Fubini–Study angle.
pub fn dist(p: &ProjPoint, q: &ProjPoint) -> f64 {
    dist_raw(&p.coords, &q.coords)
}

/// Chordal distance between raw (unnormalized, nonzero) representatives.
pub fn dist_raw(a: &[C64; 3], b: &[C64; 3]) -> f64 {
    let c = cross(a, b);
    let num = euclid_norm(&c);
    let den = euclid_norm(a) * euclid_norm(b);
    (num / den).min(1.0)
}

pub fn to_chart(p: &ProjPoint, chart: usize) -> Result<AffinePair> {
    let c = p.coords[chart];
    let m = c.norm();
    if m < CHART_FLOOR {
        return Err(Error::NearChartBoundary { chart, modulus: m });
    }
    let (i, j) = chart_others(chart);
    Ok(AffinePair { chart, u: p.coords[i] / c, v: p.coords[j] / c })
}

impl AffinePair {
    /// The homogeneous vector with a 1 in the chart slot.
    pub fn lift(&self) -> [C64; 3] {
        let (i, j) = chart_others(self.chart);
        let mut v = [ZERO; 3];
        v[self.chart] = ONE;
        v[i] = self.u;
        v[j] = self.v;
        v
    }

    pub fn as_array(&self) -> [C64; 2] {
        [self.u, self.v]
    }

    pub fn from_array(chart: usize, a: [C64; 2]) -> Self {
        Self { chart, u: a[0], v: a[1] }
    }
}

pub fn from_chart(a: &AffinePair) -> Result<ProjPoint> {
    normalize(a.lift())
}

/// `|z^2 - xy|` on the max-normalized representative, i.e. the scale-free
/// defect `|z^2 - xy| / max(|x|,|y|,|z|)^2`.
pub fn conic_defect(p: &ProjPoint) -> f64 {
    let [x, y, z] = p.coords;
    (z * z - x * y).norm()
}

/// Scale-free conic defect of a raw representative.
pub fn conic_defect_raw(v: &[C64; 3]) -> f64 {
    let m = max_norm(v);
    (v[2] * v[2] - v[0] * v[1]).norm() / (m * m)
}

/// Point `[w^2 : 1 : w]` of the invariant conic `z^2 = xy`.
pub fn conic_point(w: C64) -> ProjPoint {
    normalize([w * w, ONE, w]).expect("conic parametrization never vanishes")
}

/// Conic point at angle `2 pi * turns` on the unit circle of the parameter.
pub fn conic_point_turns(turns: f64) -> ProjPoint {
    conic_point(C64::from_polar(1.0, std::f64::consts::TAU * turns))
}

/// Recover the conic parameter `w = z / y` (or `x / z` when `y` is small).
pub fn conic_parameter(p: &ProjPoint) -> C64 {
    let [x, y, z] = p.coords;
    if y.norm() >= z.norm() * 1e-3 && y.norm() > 1e-12 {
        z / y
    } else {
        x / z
    }
}

fn uniform_disk(rng: &mut Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
}

fn gaussian(rng: &mut Rng) -> f64 {
    // Box–Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A point distributed by the Fubini–Study volume.
pub fn random_point(rng: &mut Rng) -> ProjPoint {
    loop {
        let raw = [0; 3].map(|_| C64::new(gaussian(rng), gaussian(rng)));
        if let Ok(p) = normalize(raw) {
            return p;
        }
    }
}

/// A random point of the region `U(delta) = {conic_defect <= delta}`.
///
/// Picks a chart, draws one free coordinate and a defect value in the disk of
/// radius `delta`, and solves for the remaining coordinate; candidates leaving
/// the unit polydisk are rejected. The result is not uniform but charges
/// every part of the region.
pub fn random_point_in_region(rng: &mut Rng, delta: f64) -> ProjPoint {
    loop {
        let chart = rng.random_range(0..3);
        let e = uniform_disk(rng, delta);
        let raw = match chart {
            0 => {
                let z = uniform_disk(rng, 1.0);
                [ONE, z * z - e, z]
            }
            1 => {
                let z = uniform_disk(rng, 1.0);
                [z * z - e, ONE, z]
            }
            _ => {
                let x = uniform_disk(rng, 1.0);
                if x.norm() < 0.5 {
                    continue;
                }
                [x, (ONE - e) / x, ONE]
            }
        };
        if max_norm(&raw) > 1.0 {
            continue;
        }
        if let Ok(p) = normalize(raw) {
            if conic_defect(&p) <= delta {
                return p;
            }
        }
    }
}
