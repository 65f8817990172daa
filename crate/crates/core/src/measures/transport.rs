//! Exact optimal transport between atom clouds (transportation simplex)
//! and the dictionary discrepancy used above the exact-mode size limit.

use std::collections::VecDeque;

use serde::Serialize;

use super::{EmpiricalMeasure, TestDictionary};
use crate::error::{Error, Result};
use crate::projgeom::dist;

pub const EXACT_ATOM_LIMIT: usize = 2048;
const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum W1Mode {
    Exact,
    Dictionary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W1Result {
    pub value: f64,
    pub mode: W1Mode,
    /// The inputs had different total masses and were normalized first.
    pub normalized: bool,
}

/// Wasserstein-1 distance in the chordal metric.
pub fn wasserstein1(mu: &EmpiricalMeasure, rho: &EmpiricalMeasure) -> Result<W1Result> {
    let (ma, mb) = (mu.total_mass(), rho.total_mass());
    if !(ma > 0.0) || !(mb > 0.0) {
        if ma == 0.0 && mb == 0.0 {
            return Ok(W1Result { value: 0.0, mode: W1Mode::Exact, normalized: false });
        }
        return Err(Error::MassMismatch(ma, mb));
    }
    let normalized = (ma - mb).abs() > MASS_TOL * ma.max(mb);
    let (a, b) = if normalized {
        (mu.normalized()?, rho.normalized()?)
    } else {
        (mu.clone(), rho.clone())
    };
    if a.len() <= EXACT_ATOM_LIMIT && b.len() <= EXACT_ATOM_LIMIT {
        let value = exact(&a, &b)?;
        Ok(W1Result { value, mode: W1Mode::Exact, normalized })
    } else {
        let value = dictionary_discrepancy(&a, &b, &TestDictionary::standard());
        Ok(W1Result { value, mode: W1Mode::Dictionary, normalized })
    }
}

/// `max_phi |mu(phi) - rho(phi)| / Lip(phi)`, a lower bound for W1.
pub fn dictionary_discrepancy(mu: &EmpiricalMeasure, rho: &EmpiricalMeasure, dict: &TestDictionary) -> f64 {
    dict.functions()
        .iter()
        .map(|f| (mu.integrate(|p| f.eval(p)) - rho.integrate(|p| f.eval(p))).abs() / f.lipschitz())
        .fold(0.0, f64::max)
}

fn exact(mu: &EmpiricalMeasure, rho: &EmpiricalMeasure) -> Result<f64> {
    let a: Vec<f64> = mu.atoms().iter().map(|x| x.1).collect();
    let mut b: Vec<f64> = rho.atoms().iter().map(|x| x.1).collect();
    // absorb the rounding-level mass difference into the demands
    let diff = a.iter().sum::<f64>() - b.iter().sum::<f64>();
    let scale = a.iter().sum::<f64>() / (a.iter().sum::<f64>() - diff);
    b.iter_mut().for_each(|x| *x *= scale);
    let pa = mu.atoms();
    let pb = rho.atoms();
    let m = pb.len();
    let rows: Vec<Vec<f64>> = crate::par::map(pa, |(p, _)| pb.iter().map(|(q, _)| dist(p, q)).collect());
    let cost: Vec<f64> = rows.into_iter().flatten().collect();
    transport_cost(&a, &b, &cost, m)
}

/// Minimum of `sum c_ij x_ij` over transport plans between supplies `a`
/// and demands `b` (equal totals), with `cost` row-major `a.len() x m`.
pub fn transport_cost(a: &[f64], b: &[f64], cost: &[f64], m: usize) -> Result<f64> {
    let n = a.len();
    if n == 0 || m == 0 || b.len() != m || cost.len() != n * m {
        return Err(Error::InvalidInput("transport problem dimensions".into()));
    }
    let mut s = Simplex::initial(a, b, cost, m);
    s.optimize()?;
    Ok(s.objective())
}

struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    /// basic cells as (cell index, flow)
    basis: Vec<(usize, f64)>,
    /// node -> basis slots touching it; rows are 0..n, columns n..n+m
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    parent: Vec<usize>,
    parent_slot: Vec<usize>,
    depth: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<'a> Simplex<'a> {
    /// Least-cost greedy start, completed to a spanning tree with zero flows.
    fn initial(a: &[f64], b: &[f64], cost: &'a [f64], m: usize) -> Self {
        let n = a.len();
        let total: f64 = a.iter().sum();
        let eps = 1e-15 * total;
        let mut order: Vec<usize> = (0..n * m).collect();
        order.sort_unstable_by(|&x, &y| cost[x].partial_cmp(&cost[y]).unwrap().then(x.cmp(&y)));
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let mut uf: Vec<usize> = (0..n + m).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut basis = Vec::with_capacity(n + m - 1);
        let mut row_open = n;
        let mut col_open = m;
        for &c in &order {
            if row_open == 0 || col_open == 0 {
                break;
            }
            let (i, j) = (c / m, c % m);
            if ra[i] <= eps || rb[j] <= eps {
                continue;
            }
            let (ri, rj) = (find(&mut uf, i), find(&mut uf, n + j));
            if ri == rj {
                continue;
            }
            let f = ra[i].min(rb[j]);
            ra[i] -= f;
            rb[j] -= f;
            if ra[i] <= eps {
                row_open -= 1;
            }
            if rb[j] <= eps {
                col_open -= 1;
            }
            uf[ri] = rj;
            basis.push((c, f));
        }
        // leftover rounding mass goes to the cheapest already-connected cells
        // implicitly ignored; it is below 1e-15 of the total
        for &c in &order {
            if basis.len() == n + m - 1 {
                break;
            }
            let (i, j) = (c / m, c % m);
            let (ri, rj) = (find(&mut uf, i), find(&mut uf, n + j));
            if ri != rj {
                uf[ri] = rj;
                basis.push((c, 0.0));
            }
        }
        let mut adj = vec![Vec::new(); n + m];
        for (slot, &(c, _)) in basis.iter().enumerate() {
            adj[c / m].push(slot);
            adj[n + c % m].push(slot);
        }
        Self {
            n,
            m,
            cost,
            basis,
            adj,
            u: vec![0.0; n],
            v: vec![0.0; m],
            parent: vec![NONE; n + m],
            parent_slot: vec![NONE; n + m],
            depth: vec![0; n + m],
        }
    }

    fn other(&self, slot: usize, node: usize) -> usize {
        let c = self.basis[slot].0;
        let (r, col) = (c / self.m, self.n + c % self.m);
        if node == r {
            col
        } else {
            r
        }
    }

    fn potentials(&mut self) {
        let mut queue = VecDeque::new();
        self.parent[0] = NONE;
        self.parent_slot[0] = NONE;
        self.depth[0] = 0;
        self.u[0] = 0.0;
        let mut seen = vec![false; self.n + self.m];
        seen[0] = true;
        queue.push_back(0);
        while let Some(x) = queue.pop_front() {
            for k in 0..self.adj[x].len() {
                let slot = self.adj[x][k];
                let y = self.other(slot, x);
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                let c = self.cost[self.basis[slot].0];
                if y >= self.n {
                    self.v[y - self.n] = c - self.u[x];
                } else {
                    self.u[y] = c - self.v[x - self.n];
                }
                self.parent[y] = x;
                self.parent_slot[y] = slot;
                self.depth[y] = self.depth[x] + 1;
                queue.push_back(y);
            }
        }
    }

    fn optimize(&mut self) -> Result<()> {
        let (n, m) = (self.n, self.m);
        let cells = n * m;
        let block = ((cells as f64).sqrt() as usize).max(64).min(cells);
        let cmax = self.cost.iter().cloned().fold(0.0, f64::max);
        let tol = 1e-12 * cmax.max(1e-300);
        let max_pivots = 200 * (n + m) + 10_000;
        let mut start = 0usize;
        self.potentials();
        for _ in 0..max_pivots {
            // block search for an entering cell
            let mut best = NONE;
            let mut best_r = -tol;
            let mut scanned = 0;
            let mut pos = start;
            while scanned < cells {
                let end = (scanned + block).min(cells);
                while scanned < end {
                    let c = pos;
                    let r = self.cost[c] - self.u[c / m] - self.v[c % m];
                    if r < best_r {
                        best_r = r;
                        best = c;
                    }
                    pos += 1;
                    if pos == cells {
                        pos = 0;
                    }
                    scanned += 1;
                }
                if best != NONE {
                    break;
                }
            }
            if best == NONE {
                return Ok(());
            }
            start = pos;
            self.pivot(best);
            self.potentials();
        }
        Err(Error::SolverDivergence { found: 0, expected: max_pivots })
    }

    fn pivot(&mut self, enter: usize) {
        let m = self.m;
        let (i, j) = (enter / m, self.n + enter % m);
        // tree path from column node j to row node i
        let (mut a, mut b) = (j, i);
        let mut from_j = Vec::new();
        let mut from_i = Vec::new();
        while self.depth[a] > self.depth[b] {
            from_j.push(self.parent_slot[a]);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            from_i.push(self.parent_slot[b]);
            b = self.parent[b];
        }
        while a != b {
            from_j.push(self.parent_slot[a]);
            a = self.parent[a];
            from_i.push(self.parent_slot[b]);
            b = self.parent[b];
        }
        from_i.reverse();
        let path: Vec<usize> = from_j.into_iter().chain(from_i).collect();
        // signs along the path starting at j: -, +, -, ...
        let mut theta = f64::INFINITY;
        let mut leave = NONE;
        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 0 && self.basis[slot].1 < theta {
                theta = self.basis[slot].1;
                leave = slot;
            }
        }
        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.basis[slot].1 -= theta;
            } else {
                self.basis[slot].1 += theta;
            }
        }
        self.basis[leave].1 = 0.0;
        let old = self.basis[leave].0;
        let (oi, oj) = (old / m, self.n + old % m);
        self.adj[oi].retain(|&s| s != leave);
        self.adj[oj].retain(|&s| s != leave);
        self.basis[leave] = (enter, theta);
        self.adj[i].push(leave);
        self.adj[j].push(leave);
    }

    fn objective(&self) -> f64 {
        self.basis.iter().map(|&(c, f)| self.cost[c] * f.max(0.0)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projgeom::{conic_point_turns, random_point, ProjPoint};
    use crate::rng::seeded;
    use rand::Rng as _;

    fn brute_force(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
        // uniform equal-size case: minimum over permutations
        let n = a.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        fn rec(k: usize, idx: &mut Vec<usize>, cost: &[f64], n: usize, acc: f64, best: &mut f64) {
            if k == n {
                *best = best.min(acc);
                return;
            }
            for t in k..n {
                idx.swap(k, t);
                rec(k + 1, idx, cost, n, acc + cost[k * n + idx[k]], best);
                idx.swap(k, t);
            }
        }
        rec(0, &mut idx, cost, n, 0.0, &mut best);
        best * a[0].min(b[0])
    }

    #[test]
    fn matches_assignment_brute_force() {
        let mut rng = seeded(11);
        for _ in 0..30 {
            let n = 6;
            let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
            let w = vec![1.0 / n as f64; n];
            let got = transport_cost(&w, &w, &cost, n).unwrap();
            let want = brute_force(&w, &w, &cost);
            assert!((got - want).abs() < 1e-12, "{got} {want}");
        }
    }

    #[test]
    fn dirac_pair() {
        let a = EmpiricalMeasure::new(vec![(ProjPoint::real(1.0, 0.0, 0.0), 1.0)], "a").unwrap();
        let b = EmpiricalMeasure::new(vec![(ProjPoint::real(0.0, 1.0, 0.0), 1.0)], "b").unwrap();
        assert_eq!(wasserstein1(&a, &b).unwrap().value, 1.0);
        assert_eq!(wasserstein1(&a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn unequal_sizes_and_weights() {
        let mut rng = seeded(5);
        let pa: Vec<_> = (0..40).map(|_| (random_point(&mut rng), rng.random::<f64>() + 0.1)).collect();
        let pb: Vec<_> = (0..25).map(|_| (random_point(&mut rng), rng.random::<f64>() + 0.1)).collect();
        let a = EmpiricalMeasure::new(pa, "a").unwrap().normalized().unwrap();
        let b = EmpiricalMeasure::new(pb, "b").unwrap().normalized().unwrap();
        let ab = wasserstein1(&a, &b).unwrap();
        let ba = wasserstein1(&b, &a).unwrap();
        assert!((ab.value - ba.value).abs() < 1e-12);
        // Kantorovich duality lower bound via the dictionary
        assert!(dictionary_discrepancy(&a, &b, &TestDictionary::standard()) <= ab.value + 1e-12);
    }

    #[test]
    fn roots_of_unity_against_fine_reference() {
        let n = 16;
        let coarse: Vec<_> = (0..n).map(|k| conic_point_turns(k as f64 / n as f64)).collect();
        let fine: Vec<_> = (0..512).map(|k| conic_point_turns(k as f64 / 512.0)).collect();
        let a = EmpiricalMeasure::uniform(&coarse, 1.0 / n as f64, "a").unwrap();
        let b = EmpiricalMeasure::uniform(&fine, 1.0 / 512.0, "b").unwrap();
        let w = wasserstein1(&a, &b).unwrap().value;
        assert!(w > 0.0 && w <= std::f64::consts::PI / n as f64, "{w}");
    }

    #[test]
    fn mass_mismatch_normalizes() {
        let a = EmpiricalMeasure::new(vec![(ProjPoint::real(1.0, 0.0, 0.0), 2.0)], "a").unwrap();
        let b = EmpiricalMeasure::new(vec![(ProjPoint::real(1.0, 0.0, 0.0), 1.0)], "b").unwrap();
        let r = wasserstein1(&a, &b).unwrap();
        assert!(r.normalized);
        assert_eq!(r.value, 0.0);
        assert!(wasserstein1(&a, &EmpiricalMeasure::empty("e")).is_err());
    }
}
