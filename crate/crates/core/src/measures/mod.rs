//! Empirical measures on the projective plane, transport distances, the
//! reference saddle measure of the built-in families, and the convergence
//! test batteries built on top of them.

mod checks;
mod dictionary;
mod transport;

pub use checks::{
    disintegration_check, disintegration_check_against, equidistribution_report, non_increasing, pushforward_check,
    skewed_conditional, ArcPartition, DisintegrationReport, EquidistributionRow, PushforwardRow, REFERENCE_ATOMS,
};
pub use dictionary::{TestDictionary, TestFunction};
pub use transport::{dictionary_discrepancy, transport_cost, wasserstein1, W1Mode, W1Result, EXACT_ATOM_LIMIT};

use std::io::Write;

use serde::Serialize;

use crate::endo::{Family, HomPolyMap};
use crate::error::{Error, Result};
use crate::orbits::{forward_step, ForwardPolicy};
use crate::projgeom::{conic_defect, dist, normalize, ProjPoint, C64, ONE, ZERO};

/// Weighted atoms on the projective plane. Atoms closer than `1e-12` are
/// merged on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<(ProjPoint, f64)>,
    pub label: String,
}

const MERGE_RADIUS: f64 = 1e-12;

fn sort_key(p: &ProjPoint) -> f64 {
    let u = p.unit_lift();
    u[0].norm_sqr()
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<(ProjPoint, f64)>, label: impl Into<String>) -> Result<Self> {
        if atoms.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("atom weights must be finite and nonnegative".into()));
        }
        Ok(Self { atoms: dedupe(atoms), label: label.into() })
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Self { atoms: Vec::new(), label: label.into() }
    }

    /// Equal weights `weight` on every point.
    pub fn uniform(points: &[ProjPoint], weight: f64, label: impl Into<String>) -> Result<Self> {
        Self::new(points.iter().map(|p| (*p, weight)).collect(), label)
    }

    pub fn atoms(&self) -> &[(ProjPoint, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Probability measure with the same atoms.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_mass();
        if !(m > 0.0) {
            return Err(Error::MassMismatch(m, 1.0));
        }
        Ok(Self { atoms: self.atoms.iter().map(|&(p, w)| (p, w / m)).collect(), label: self.label.clone() })
    }

    pub fn integrate(&self, f: impl Fn(&ProjPoint) -> f64) -> f64 {
        self.atoms.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Pointwise image under `map`; weights are carried unchanged.
    pub fn pushforward(&self, map: &HomPolyMap) -> Self {
        let images = crate::par::map(&self.atoms, |(p, w)| (map.eval(p), *w));
        Self { atoms: dedupe(images), label: format!("{}#push", self.label) }
    }

    /// Image under `n` steps of the given forward policy.
    pub fn pushforward_n(&self, map: &HomPolyMap, n: usize, policy: ForwardPolicy) -> Result<Self> {
        let images: Vec<Result<(ProjPoint, f64)>> = crate::par::map(&self.atoms, |(p, w)| {
            let mut q = *p;
            for _ in 0..n {
                q = forward_step(map, &q, policy)?;
            }
            Ok((q, *w))
        });
        let atoms = images.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self { atoms: dedupe(atoms), label: format!("{}#push{}", self.label, n) })
    }

    /// CSV with columns `re_x, im_x, re_y, im_y, re_z, im_z, weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re_x,im_x,re_y,im_y,re_z,im_z,weight")?;
        for (p, wt) in &self.atoms {
            let c = p.coords();
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                c[0].re, c[0].im, c[1].re, c[1].im, c[2].re, c[2].im, wt
            )?;
        }
        Ok(())
    }
}

fn dedupe(mut atoms: Vec<(ProjPoint, f64)>) -> Vec<(ProjPoint, f64)> {
    if atoms.len() < 2 {
        return atoms;
    }
    // |key(p) - key(q)| <= dist(p, q), so a sweep over the sorted keys sees
    // every pair closer than the merge radius.
    let mut keyed: Vec<(f64, usize)> = atoms.iter().enumerate().map(|(i, (p, _))| (sort_key(p), i)).collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut owner: Vec<usize> = (0..atoms.len()).collect();
    for a in 0..keyed.len() {
        let (ka, ia) = keyed[a];
        if owner[ia] != ia {
            continue;
        }
        for &(kb, ib) in &keyed[a + 1..] {
            if kb - ka > MERGE_RADIUS {
                break;
            }
            if owner[ib] == ib && dist(&atoms[ia].0, &atoms[ib].0) < MERGE_RADIUS {
                owner[ib] = ia;
            }
        }
    }
    for i in 0..atoms.len() {
        let o = owner[i];
        if o != i {
            let w = atoms[i].1;
            atoms[o].1 += w;
            atoms[i].1 = -1.0;
        }
    }
    atoms.retain(|a| a.1 >= 0.0);
    atoms
}

/// Reference saddle measure of a built-in family: equal weights on the
/// `N`-th roots of unity transported by the parametrization of the
/// invariant curve (`w -> [w^2 : 1 : w]` for F_θ, `w -> [1 : w : 0]` for
/// power-like f0 maps). Total mass 1.
pub fn nu_reference(map: &HomPolyMap, atom_count: usize) -> Result<EmpiricalMeasure> {
    if atom_count == 0 {
        return Err(Error::InvalidInput("atom_count must be positive".into()));
    }
    let param: fn(C64) -> [C64; 3] = match map.family() {
        Family::Ftheta { .. } => |w| [w * w, ONE, w],
        Family::F0 { power_on_line: true } => |w| [ONE, w, ZERO],
        _ => return Err(Error::UnsupportedMap(format!("{} has no known invariant curve", map.label()))),
    };
    let w = 1.0 / atom_count as f64;
    let atoms = (0..atom_count)
        .map(|k| {
            let z = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / atom_count as f64);
            (normalize(param(z)).expect("nonzero"), w)
        })
        .collect();
    EmpiricalMeasure::new(atoms, format!("nu_reference({atom_count})"))
}

#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffResult {
    /// `(1/N) sum_{i<N} phi(f^i p0)` for every dictionary function.
    pub averages: Vec<f64>,
    pub mean_conic_defect: f64,
    /// Equal-weight measure on the last `N/2` orbit points.
    pub orbit_measure: EmpiricalMeasure,
}

/// Birkhoff averages along the forward orbit of `p0`.
pub fn birkhoff(
    map: &HomPolyMap,
    p0: &ProjPoint,
    steps: usize,
    dictionary: &TestDictionary,
    policy: ForwardPolicy,
) -> Result<BirkhoffResult> {
    if steps < 1000 {
        return Err(Error::Precondition(format!("Birkhoff averages need N >= 1000 (got {steps})")));
    }
    let nf = dictionary.len();
    let mut means = vec![0.0; nf];
    let mut defect_mean = 0.0;
    let burn = steps - steps / 2;
    let mut tail = Vec::with_capacity(steps / 2);
    let mut p = *p0;
    for i in 0..steps {
        // running means keep constant sequences exact
        let k = (i + 1) as f64;
        for (m, f) in means.iter_mut().zip(dictionary.functions()) {
            *m += (f.eval(&p) - *m) / k;
        }
        defect_mean += (conic_defect(&p) - defect_mean) / k;
        if i >= burn {
            tail.push(p);
        }
        if i + 1 < steps {
            p = forward_step(map, &p, policy)?;
        }
    }
    let w = 1.0 / tail.len() as f64;
    let orbit_measure = EmpiricalMeasure::uniform(&tail, w, "birkhoff-orbit")?;
    Ok(BirkhoffResult { averages: means, mean_conic_defect: defect_mean, orbit_measure })
}
