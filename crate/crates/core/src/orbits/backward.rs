use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::endo::{preimages, Family, HomPolyMap};
use crate::error::{Error, Result};
use crate::projgeom::{conic_defect, conic_parameter, conic_point, dist, ProjPoint};
use crate::rng::seeded;

/// Largest accepted `dist(f(p_{-k-1}), p_{-k})`.
pub const LINK_TOL: f64 = 1e-9;

/// Defects closer than this count as a tie.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BranchPolicy {
    /// Uniform choice among preimages in `U(delta)`.
    UniformInRegion { delta: f64 },
    /// Preimage of smallest conic defect; ties go to the one closest to the
    /// current point, then to the rng.
    ///
    /// Under both policies, near-conic preimages on F_θ are snapped to the
    /// conic.
    NearestToConic,
}

/// A finite history `p_0, p_{-1}, ..., p_{-n}` with `f(p_{-k-1}) = p_{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardOrbit {
    pub points: Vec<ProjPoint>,
    /// Index of the chosen preimage (in solver order) at each step.
    pub branch_choices: Vec<usize>,
    pub seed: u64,
}

impl BackwardOrbit {
    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    pub fn head(&self) -> ProjPoint {
        self.points[0]
    }

    /// The history of `p_{-k}`.
    pub fn shifted(&self, k: usize) -> BackwardOrbit {
        BackwardOrbit {
            points: self.points[k..].to_vec(),
            branch_choices: self.branch_choices[k.min(self.branch_choices.len())..].to_vec(),
            seed: self.seed,
        }
    }

    /// The history of `f(p_0)`.
    pub fn advanced(&self, map: &HomPolyMap) -> BackwardOrbit {
        let mut points = vec![map.eval(&self.head())];
        points.extend_from_slice(&self.points);
        let mut branch_choices = vec![usize::MAX];
        branch_choices.extend_from_slice(&self.branch_choices);
        BackwardOrbit { points, branch_choices, seed: self.seed }
    }

    /// Largest link residual.
    pub fn max_residual(&self, map: &HomPolyMap) -> f64 {
        self.points.windows(2).map(|w| dist(&map.eval(&w[1]), &w[0])).fold(0.0, f64::max)
    }
}

/// On F_θ the conic is totally invariant at the one-dimensional level, so a
/// near-conic preimage of a conic point is replaced by the exact conic point
/// with the same parameter, which keeps long histories on the conic.
fn snap_to_conic(map: &HomPolyMap, q: ProjPoint, target: &ProjPoint) -> ProjPoint {
    if !matches!(map.family(), Family::Ftheta { .. }) || conic_defect(&q) > 1e-6 {
        return q;
    }
    let s = conic_point(conic_parameter(&q));
    if dist(&map.eval(&s), target) <= dist(&map.eval(&q), target).max(LINK_TOL * 0.1) {
        s
    } else {
        q
    }
}

pub fn backward_orbit(
    map: &HomPolyMap,
    p0: &ProjPoint,
    depth: usize,
    policy: BranchPolicy,
    seed: u64,
) -> Result<BackwardOrbit> {
    let mut rng = seeded(seed);
    let mut points = vec![*p0];
    let mut branch_choices = Vec::with_capacity(depth);
    for step in 0..depth {
        let cur = *points.last().expect("nonempty");
        let pre = preimages(map, &cur)?;
        let choice = match policy {
            BranchPolicy::UniformInRegion { delta } => {
                let ok: Vec<usize> = (0..pre.len()).filter(|&i| conic_defect(&pre[i].0) <= delta).collect();
                if ok.is_empty() {
                    return Err(Error::NoPreimageInRegion { step });
                }
                ok[rng.random_range(0..ok.len())]
            }
            BranchPolicy::NearestToConic => {
                let best = pre.iter().map(|(p, _)| conic_defect(p)).fold(f64::INFINITY, f64::min);
                let tied: Vec<usize> = (0..pre.len()).filter(|&i| conic_defect(&pre[i].0) <= best + TIE).collect();
                let closest = tied.iter().map(|&i| dist(&pre[i].0, &cur)).fold(f64::INFINITY, f64::min);
                let near: Vec<usize> = tied.into_iter().filter(|&i| dist(&pre[i].0, &cur) <= closest + TIE).collect();
                near[rng.random_range(0..near.len())]
            }
        };
        let q = snap_to_conic(map, pre[choice].0, &cur);
        let r = dist(&map.eval(&q), &cur);
        if !(r < LINK_TOL) {
            return Err(Error::SolverDivergence { found: step, expected: depth });
        }
        points.push(q);
        branch_choices.push(choice);
    }
    Ok(BackwardOrbit { points, branch_choices, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::family_ftheta;
    use crate::projgeom::{conic_point_turns, C64};

    fn ftheta() -> HomPolyMap {
        family_ftheta(C64::new(0.01, 0.0)).unwrap()
    }

    #[test]
    fn fixed_point_history_is_constant() {
        let p = ProjPoint::real(1.0, 1.0, 1.0);
        let o = backward_orbit(&ftheta(), &p, 20, BranchPolicy::NearestToConic, 1).unwrap();
        assert_eq!(o.depth(), 20);
        assert!(o.points.iter().all(|q| dist(q, &p) < 1e-14));
    }

    #[test]
    fn conic_history_follows_square_roots() {
        let f = ftheta();
        let p = conic_point_turns(0.3);
        let o = backward_orbit(&f, &p, 10, BranchPolicy::NearestToConic, 7).unwrap();
        let w0 = conic_parameter(&p);
        for (k, q) in o.points.iter().enumerate() {
            assert!(conic_defect(q) < 1e-9);
            let w = conic_parameter(q);
            assert!((w.powu(1 << k) - w0).norm() < 1e-9, "step {k}");
            assert!(dist(&f.iterate(q, k), &p) < 1e-9);
        }
        assert!(o.max_residual(&f) < LINK_TOL);
    }

    #[test]
    fn depth_zero() {
        let p = conic_point_turns(0.1);
        let o = backward_orbit(&ftheta(), &p, 0, BranchPolicy::NearestToConic, 0).unwrap();
        assert_eq!(o.points, vec![p]);
        assert!(o.branch_choices.is_empty());
    }

    #[test]
    fn uniform_policy_stays_in_region() {
        let f = ftheta();
        let p = conic_point_turns(0.17);
        let o = backward_orbit(&f, &p, 12, BranchPolicy::UniformInRegion { delta: 0.05 }, 3).unwrap();
        assert!(o.points.iter().all(|q| conic_defect(q) <= 0.05));
        let far = ProjPoint::real(0.0, 0.0, 1.0);
        let err = backward_orbit(&f, &far, 3, BranchPolicy::UniformInRegion { delta: 1e-3 }, 3).unwrap_err();
        assert_eq!(err, Error::NoPreimageInRegion { step: 0 });
    }
}
