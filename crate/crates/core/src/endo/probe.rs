use std::collections::BTreeMap;

use serde::Serialize;

use super::{preimages, HomPolyMap};
use crate::error::{Error, Result};
use crate::projgeom::{conic_defect, dist, random_point_in_region, ProjPoint};
use crate::rng::{seeded, subseed};

/// Outcome of the sampled small-topological-degree probe.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TopDegreeReport {
    pub delta: f64,
    pub n: u32,
    pub samples: usize,
    /// Largest `#(f^-n(q) ∩ U)` over the sampled `q`.
    pub max_count: usize,
    /// `count -> number of samples`.
    pub histogram: BTreeMap<usize, usize>,
    /// `d^n`, the threshold the counts are compared against.
    pub threshold: u64,
    /// `max_count < d^n` on every sample (vacuously true without data).
    pub holds: bool,
    pub no_data: bool,
}

const BRANCH_BUDGET: u64 = 1_000_000;

/// Full preimage tree of depth `n` at `q`, distinct points only.
pub fn preimage_tree(map: &HomPolyMap, q: &ProjPoint, n: u32) -> Result<Vec<ProjPoint>> {
    let mut level = vec![*q];
    for _ in 0..n {
        let mut next: Vec<ProjPoint> = Vec::with_capacity(level.len() * 4);
        for p in &level {
            for (r, _) in preimages(map, p)? {
                if !next.iter().any(|s| dist(s, &r) < 1e-9) {
                    next.push(r);
                }
            }
        }
        level = next;
    }
    Ok(level)
}

/// Sample `q = f^n(p)` for random `p` in `U(delta)` and count the branches of
/// `f^-n(q)` that land in `U(delta)`.
pub fn small_topdegree_probe(
    map: &HomPolyMap,
    delta: f64,
    n: u32,
    sample_count: usize,
    seed: u64,
) -> Result<TopDegreeReport> {
    let d = map.degree() as u64;
    let branches = (d * d).checked_pow(n).unwrap_or(u64::MAX);
    if branches > BRANCH_BUDGET {
        return Err(Error::BranchBudgetExceeded { branches, budget: BRANCH_BUDGET });
    }
    let threshold = d.pow(n);
    let counts: Vec<Result<usize>> = crate::par::map_range(sample_count, |i| {
        let mut rng = seeded(subseed(seed, i as u64));
        let p = random_point_in_region(&mut rng, delta);
        let q = map.iterate(&p, n as usize);
        let tree = preimage_tree(map, &q, n)?;
        Ok(tree.iter().filter(|r| conic_defect(r) <= delta).count())
    });
    let mut histogram = BTreeMap::new();
    let mut max_count = 0;
    for c in counts {
        let c = c?;
        max_count = max_count.max(c);
        *histogram.entry(c).or_insert(0) += 1;
    }
    Ok(TopDegreeReport {
        delta,
        n,
        samples: sample_count,
        max_count,
        histogram,
        threshold,
        holds: (max_count as u64) < threshold,
        no_data: sample_count == 0,
    })
}
