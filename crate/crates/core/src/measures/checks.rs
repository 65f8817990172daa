//! Convergence batteries comparing computed measures against the reference
//! saddle measure of a built-in family.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::{nu_reference, wasserstein1, EmpiricalMeasure};
use crate::endo::{Family, HomPolyMap};
use crate::error::{Error, Result};
use crate::green::{sector_mass, slice_sample, DiskParam, Green};
use crate::orbits::{preserves_equal_modulus, ForwardPolicy};
use crate::periodic::nu_n;
use crate::projgeom::{conic_parameter, ProjPoint, C64, ONE, ZERO};

pub const REFERENCE_ATOMS: usize = 512;

#[derive(Debug, Clone, Serialize)]
pub struct EquidistributionRow {
    pub n: usize,
    pub count: usize,
    pub mass: f64,
    pub w1: f64,
    /// `pi / (d^n - 1) + 0.01`
    pub bound: f64,
    pub delta: f64,
    pub reference_atoms: usize,
}

/// One row per period: number of fixed points of `f^n` in `U(delta)`, the
/// mass of `nu_n`, and its transport distance to the reference measure.
pub fn equidistribution_report(
    map: &HomPolyMap,
    periods: impl IntoIterator<Item = usize>,
    delta: f64,
) -> Result<Vec<EquidistributionRow>> {
    let reference = nu_reference(map, REFERENCE_ATOMS)?;
    let d = map.degree() as f64;
    periods
        .into_iter()
        .map(|n| {
            let nu = nu_n(map, n, delta)?;
            let w1 = if nu.is_empty() { f64::NAN } else { wasserstein1(&nu.normalized()?, &reference)?.value };
            Ok(EquidistributionRow {
                n,
                count: nu.len(),
                mass: nu.total_mass(),
                w1,
                bound: PI / (d.powi(n as i32) - 1.0) + 0.01,
                delta,
                reference_atoms: REFERENCE_ATOMS,
            })
        })
        .collect()
}

/// Partition of the parameter circle arc `start <= arg w < end` into equal
/// arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcPartition {
    pub start: f64,
    pub end: f64,
    pub arcs: usize,
}

impl ArcPartition {
    pub fn new(start: f64, end: f64, arcs: usize) -> Result<Self> {
        if arcs == 0 || !(start < end) || end - start > TAU {
            return Err(Error::InvalidInput("arc partition needs start < end <= start + 2 pi and arcs > 0".into()));
        }
        Ok(Self { start, end, arcs })
    }

    fn bounds(&self, k: usize) -> (f64, f64) {
        let w = (self.end - self.start) / self.arcs as f64;
        (self.start + w * k as f64, self.start + w * (k + 1) as f64)
    }

    /// Arc index of a parameter angle, if it lies on the segment.
    fn locate(&self, angle: f64) -> Option<usize> {
        // tolerance keeps atoms sitting on a boundary in the upper arc
        let a = (angle - self.start + 1e-9).rem_euclid(TAU);
        let span = self.end - self.start;
        (a < span).then(|| ((a / span * self.arcs as f64) as usize).min(self.arcs - 1))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DisintegrationReport {
    pub partition: ArcPartition,
    pub depth: usize,
    /// Renormalized reference mass per arc.
    pub reference: Vec<f64>,
    /// Renormalized slice mass of the Green current per arc.
    pub slice: Vec<f64>,
    pub max_relative_discrepancy: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// The invariant curve of a built-in family as a disk of parameter radius
/// 2 centered at `w = 0`, and the map from points to the curve parameter.
fn curve_disk(map: &HomPolyMap, n_grid: usize) -> Result<(DiskParam, fn(&ProjPoint) -> C64)> {
    match map.family() {
        Family::Ftheta { .. } => Ok((DiskParam::conic(ZERO, 2.0, n_grid)?, conic_parameter)),
        Family::F0 { power_on_line: true } => Ok((
            DiskParam::line([ONE, ZERO, ZERO], [ZERO, C64::new(2.0, 0.0), ZERO], 1.0, n_grid)?,
            |p| p.y() / p.x(),
        )),
        _ => Err(Error::UnsupportedMap(format!("{} has no parametrized invariant curve", map.label()))),
    }
}

/// Compare the reference conditional on an arc of the invariant curve with
/// the slice of the Green current on the same arc.
pub fn disintegration_check(map: &HomPolyMap, partition: &ArcPartition, depth: usize) -> Result<DisintegrationReport> {
    let reference = nu_reference(map, 4096)?;
    disintegration_check_against(map, partition, depth, &reference)
}

pub fn disintegration_check_against(
    map: &HomPolyMap,
    partition: &ArcPartition,
    depth: usize,
    reference: &EmpiricalMeasure,
) -> Result<DisintegrationReport> {
    let (disk, param) = curve_disk(map, 64)?;
    let mut ref_mass = vec![0.0; partition.arcs];
    for (p, w) in reference.atoms() {
        if let Some(k) = partition.locate(param(p).arg()) {
            ref_mass[k] += w;
        }
    }
    let green = Green::new(map);
    // the unit circle of w sits at |t| = 1/2; sectors reach well past it
    let slice: Vec<f64> = (0..partition.arcs)
        .map(|k| sector_mass(&green, &disk, (0.3, 0.7), partition.bounds(k), depth).map(|s| s.mass))
        .collect::<Result<_>>()?;
    let ref_total: f64 = ref_mass.iter().sum();
    let slice_total: f64 = slice.iter().sum();
    if ref_total <= 0.0 || slice_total <= 0.0 {
        return Err(Error::EmptySlice(ref_total.min(slice_total)));
    }
    let reference: Vec<f64> = ref_mass.iter().map(|m| m / ref_total).collect();
    let slice: Vec<f64> = slice.iter().map(|m| m / slice_total).collect();
    let max_relative_discrepancy = reference
        .iter()
        .zip(&slice)
        .map(|(r, s)| if *r > 0.0 { (r - s).abs() / r } else if *s > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    let threshold = 0.1;
    Ok(DisintegrationReport {
        partition: *partition,
        depth,
        reference,
        slice,
        max_relative_discrepancy,
        threshold,
        passed: max_relative_discrepancy < threshold,
    })
}

/// A deliberately wrong conditional on the partition's segment: atoms at
/// angles `start + span * (k / N)^2`.
pub fn skewed_conditional(map: &HomPolyMap, partition: &ArcPartition, atoms: usize) -> Result<EmpiricalMeasure> {
    let param: fn(C64) -> [C64; 3] = match map.family() {
        Family::Ftheta { .. } => |w| [w * w, ONE, w],
        Family::F0 { power_on_line: true } => |w| [ONE, w, ZERO],
        _ => return Err(Error::UnsupportedMap(map.label().to_string())),
    };
    let span = partition.end - partition.start;
    let pts = (0..atoms)
        .map(|k| {
            let s = (k as f64 + 0.5) / atoms as f64;
            let w = C64::from_polar(1.0, partition.start + span * s * s);
            crate::projgeom::normalize(param(w)).map(|p| (p, 1.0 / atoms as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(pts, "skewed")
}

#[derive(Debug, Clone, Serialize)]
pub struct PushforwardRow {
    pub n: usize,
    pub w1: f64,
    pub atoms: usize,
    pub depth: usize,
    pub seed: u64,
}

/// Transport distance from the normalized forward images of a slice sample
/// of the Green current on `disk` to the reference measure.
pub fn pushforward_check(
    map: &HomPolyMap,
    disk: &DiskParam,
    steps: impl IntoIterator<Item = usize>,
    depth: usize,
    atom_count: usize,
    seed: u64,
) -> Result<Vec<PushforwardRow>> {
    let green = Green::new(map);
    let sample = slice_sample(&green, disk, depth, atom_count, seed)?.normalized()?;
    let reference = nu_reference(map, REFERENCE_ATOMS)?;
    let policy = if preserves_equal_modulus(map) { ForwardPolicy::EqualModulus } else { ForwardPolicy::Plain };
    let mut rows = Vec::new();
    for n in steps {
        let image = if n == 0 { sample.clone() } else { sample.pushforward_n(map, n, policy)? };
        let w1 = wasserstein1(&image, &reference)?.value;
        rows.push(PushforwardRow { n, w1, atoms: image.len(), depth, seed });
    }
    Ok(rows)
}

/// Each value exceeds its predecessor by at most `slack` times the largest
/// value seen so far.
pub fn non_increasing(values: &[f64], slack: f64) -> bool {
    let mut peak = 0.0f64;
    values.windows(2).all(|w| {
        peak = peak.max(w[0]);
        w[1] <= w[0] + slack * peak
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::family_ftheta;

    fn ftheta() -> HomPolyMap {
        family_ftheta(C64::new(0.01, 0.0)).unwrap()
    }

    #[test]
    fn small_periods_report() {
        let rows = equidistribution_report(&ftheta(), 1..=3, 0.05).unwrap();
        assert_eq!(rows.iter().map(|r| r.count).collect::<Vec<_>>(), vec![3, 5, 9]);
        assert!((rows[0].w1 - 0.6).abs() < 0.1, "{}", rows[0].w1);
        assert!(non_increasing(&rows.iter().map(|r| r.w1).collect::<Vec<_>>(), 0.1));
    }

    #[test]
    fn slack_is_scaled_by_the_running_peak() {
        assert!(non_increasing(&[1.0, 0.5, 0.01, 0.05, 0.04], 0.1));
        assert!(!non_increasing(&[1.0, 0.5, 0.7], 0.1));
        assert!(non_increasing(&[], 0.1));
    }

    #[test]
    fn single_arc_has_no_discrepancy() {
        let part = ArcPartition::new(0.0, PI, 1).unwrap();
        let r = disintegration_check(&ftheta(), &part, 40).unwrap();
        assert_eq!(r.max_relative_discrepancy, 0.0);
    }

    #[test]
    fn skewed_control_fails() {
        let f = ftheta();
        let part = ArcPartition::new(0.0, PI, 16).unwrap();
        let fake = skewed_conditional(&f, &part, 4096).unwrap();
        let r = disintegration_check_against(&f, &part, 40, &fake).unwrap();
        assert!(r.max_relative_discrepancy > 0.3);
        assert!(!r.passed);
    }

    #[test]
    fn full_circle_slice_is_already_uniform() {
        let f = ftheta();
        let disk = DiskParam::conic(ZERO, 2.0, 128).unwrap();
        let rows = pushforward_check(&f, &disk, [0], 40, 1024, 5).unwrap();
        assert!(rows[0].w1 < 0.02, "{}", rows[0].w1);
    }
}
