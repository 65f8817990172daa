//! Preimage fibers for degrees 2 and 3 by resultant elimination.
//!
//! The two equations `F_a - q_a F_t = F_b - q_b F_t = 0` (with `t` the pivot
//! of `q`) are pulled back through a random unitary change of coordinates so
//! that no two solutions share a projection and none lies at infinity. The
//! resultant in the last coordinate is interpolated on a circle, its `d^2`
//! roots are found by Durand–Kerner, the remaining coordinate is recovered by
//! back-substitution, and every candidate is Newton-polished in its pivot
//! chart before clustering.

use rand::Rng as _;

use super::HomPolyMap;
use crate::error::{Error, Result};
use crate::linalg::M2;
use crate::poly::{circle_nodes, durand_kerner, horner, interpolate_circle, resultant};
use crate::projgeom::{chart_others, dist, max_norm, normalize, to_chart, ProjPoint, C64, ONE, ZERO};

const MERGE_RADIUS: f64 = 1e-6;
const ACCEPT_RESIDUAL: f64 = 1e-8;
const ATTEMPTS: u64 = 8;

struct Fiber<'a> {
    map: &'a HomPolyMap,
    target: [C64; 3],
    t: usize,
    a: usize,
    b: usize,
}

impl Fiber<'_> {
    fn residual(&self, v: &[C64; 3]) -> [C64; 2] {
        let f = self.map.eval_lift(v);
        [f[self.a] - self.target[self.a] * f[self.t], f[self.b] - self.target[self.b] * f[self.t]]
    }
}

fn random_unitary(seed: u64) -> [[C64; 3]; 3] {
    let mut rng = crate::rng::seeded(0xfeed_0000 + seed);
    let mut cols: Vec<[C64; 3]> = Vec::new();
    while cols.len() < 3 {
        let mut v = [0; 3].map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        for c in &cols {
            let proj: C64 = (0..3).map(|i| v[i] * c[i].conj()).sum();
            for i in 0..3 {
                v[i] -= proj * c[i];
            }
        }
        let n = crate::projgeom::euclid_norm(&v);
        if n > 1e-3 {
            cols.push(v.map(|x| x / n));
        }
    }
    let mut m = [[ZERO; 3]; 3];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..3 {
            m[i][j] = c[i];
        }
    }
    m
}

fn apply3(m: &[[C64; 3]; 3], v: &[C64; 3]) -> [C64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn trim(mut c: Vec<C64>) -> Vec<C64> {
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    while c.len() > 1 && c.last().unwrap().norm() <= 1e-13 * scale {
        c.pop();
    }
    c
}

/// Newton polish of `v` on the fiber equations in the pivot chart.
fn polish(fiber: &Fiber, p: ProjPoint) -> ProjPoint {
    let mut p = p;
    for _ in 0..50 {
        let c = p.pivot();
        let Ok(aff) = to_chart(&p, c) else { break };
        let lift = aff.lift();
        let g = fiber.residual(&lift);
        let fnorm = max_norm(&fiber.map.eval_lift(&lift));
        if (g[0].norm() + g[1].norm()) <= 1e-16 * fnorm {
            break;
        }
        let df = fiber.map.lift_derivative(&lift);
        let (i, j) = chart_others(c);
        let row = |k: usize| -> [C64; 2] {
            [df[k][i] - fiber.target[k] * df[fiber.t][i], df[k][j] - fiber.target[k] * df[fiber.t][j]]
        };
        let jac = M2([row(fiber.a), row(fiber.b)]);
        let Some(step) = jac.solve(&[-g[0], -g[1]]) else { break };
        let next = crate::projgeom::AffinePair { chart: c, u: aff.u + step[0], v: aff.v + step[1] };
        let Ok(np) = normalize(next.lift()) else { break };
        let small = step[0].norm() + step[1].norm() < 1e-16;
        p = np;
        if small {
            break;
        }
    }
    p
}

fn attempt(fiber: &Fiber, seed: u64) -> Option<Vec<ProjPoint>> {
    let d = fiber.map.degree() as usize;
    let m = random_unitary(seed);
    let z_nodes = circle_nodes(d + 1, 1.0);
    let z_poly = |x: C64| -> (Vec<C64>, Vec<C64>) {
        let vals: Vec<[C64; 2]> =
            z_nodes.iter().map(|&z| fiber.residual(&apply3(&m, &[x, ONE, z]))).collect();
        let c1 = interpolate_circle(&vals.iter().map(|v| v[0]).collect::<Vec<_>>(), 1.0);
        let c2 = interpolate_circle(&vals.iter().map(|v| v[1]).collect::<Vec<_>>(), 1.0);
        (c1, c2)
    };
    let n = d * d + 1;
    let x_nodes = circle_nodes(n, 1.0);
    let r_vals: Vec<C64> = x_nodes
        .iter()
        .map(|&x| {
            let (c1, c2) = z_poly(x);
            resultant(&c1, &c2)
        })
        .collect();
    let r_coeffs = trim(interpolate_circle(&r_vals, 1.0));
    if r_coeffs.len() != n {
        return None;
    }
    let xs = durand_kerner(&r_coeffs).roots;
    if xs.len() != d * d {
        return None;
    }
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        let (c1, c2) = z_poly(x);
        let c1 = trim(c1);
        if c1.len() < 2 {
            return None;
        }
        let scale2 = c2.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        let zs = durand_kerner(&c1).roots;
        let z = zs.into_iter().min_by(|a, b| {
            let ea = horner(&c2, *a).norm() / (scale2 * (1.0 + a.norm()).powi(d as i32));
            let eb = horner(&c2, *b).norm() / (scale2 * (1.0 + b.norm()).powi(d as i32));
            ea.partial_cmp(&eb).unwrap()
        })?;
        let p = normalize(apply3(&m, &[x, ONE, z])).ok()?;
        out.push(polish(fiber, p));
    }
    Some(out)
}

fn cluster(points: Vec<ProjPoint>, fiber: &Fiber) -> Vec<(ProjPoint, u32)> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist(&points[i], &points[j]) < MERGE_RADIUS {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let q = normalize(fiber.target).unwrap();
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let best = members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let ea = dist(&fiber.map.eval(&points[a]), &q);
                    let eb = dist(&fiber.map.eval(&points[b]), &q);
                    ea.partial_cmp(&eb).unwrap()
                })
                .unwrap();
            (points[best], members.len() as u32)
        })
        .collect()
}

/// All `d^2` preimages of `q`, with multiplicities summing to `d^2`.
/// Solutions closer than `1e-6` (critical fibers) are merged.
pub fn preimages(map: &HomPolyMap, q: &ProjPoint) -> Result<Vec<(ProjPoint, u32)>> {
    let d = map.degree();
    if !(2..=3).contains(&d) {
        return Err(Error::DegreeUnsupported(d));
    }
    let t = q.pivot();
    let (a, b) = chart_others(t);
    let fiber = Fiber { map, target: q.coords(), t, a, b };
    let expected = (d * d) as usize;
    let mut best_found = 0;
    for seed in 0..ATTEMPTS {
        let Some(points) = attempt(&fiber, seed) else { continue };
        let clustered = cluster(points, &fiber);
        let good = clustered.iter().filter(|(p, _)| dist(&map.eval(p), q) < ACCEPT_RESIDUAL).count();
        if good == clustered.len() {
            return Ok(clustered);
        }
        best_found = best_found.max(
            clustered
                .iter()
                .filter(|(p, _)| dist(&map.eval(p), q) < ACCEPT_RESIDUAL)
                .map(|(_, m)| *m as usize)
                .sum(),
        );
    }
    Err(Error::SolverDivergence { found: best_found, expected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{family_ftheta, power_map};
    use crate::projgeom::conic_defect;

    #[test]
    fn squaring_fiber_of_one() {
        let f = power_map(2);
        let q = ProjPoint::real(1.0, 1.0, 1.0);
        let pre = preimages(&f, &q).unwrap();
        assert_eq!(pre.len(), 4);
        assert_eq!(pre.iter().map(|p| p.1).sum::<u32>(), 4);
        for (sy, sz) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let target = ProjPoint::real(1.0, sy, sz);
            assert!(pre.iter().any(|(p, m)| *m == 1 && dist(p, &target) < 1e-10));
        }
    }

    #[test]
    fn squaring_fully_critical_fiber() {
        let f = power_map(2);
        let pre = preimages(&f, &ProjPoint::real(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].1, 4);
        assert!(dist(&pre[0].0, &ProjPoint::real(1.0, 0.0, 0.0)) < 1e-8);
    }

    #[test]
    fn ftheta_fiber_of_fixed_point() {
        let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
        let q = ProjPoint::real(1.0, 1.0, 1.0);
        let pre = preimages(&f, &q).unwrap();
        assert_eq!(pre.iter().map(|p| p.1).sum::<u32>(), 4);
        for (p, _) in &pre {
            assert!(dist(&f.eval(p), &q) < 1e-8);
        }
        // [1:1:1] and [1:1:-1] on the conic, and two points with z^2 = 199
        let on_conic = pre.iter().filter(|(p, _)| conic_defect(p) < 1e-12).count();
        assert_eq!(on_conic, 2);
    }

    #[test]
    fn cubic_fiber_count() {
        let f = power_map(3);
        let q = ProjPoint::new(ONE, C64::new(0.3, -0.2), C64::new(-0.5, 0.1)).unwrap();
        let pre = preimages(&f, &q).unwrap();
        assert_eq!(pre.len(), 9);
        assert_eq!(pre.iter().map(|p| p.1).sum::<u32>(), 9);
    }

    #[test]
    fn high_degree_rejected() {
        let f = power_map(4);
        assert_eq!(preimages(&f, &ProjPoint::real(1.0, 1.0, 1.0)), Err(Error::DegreeUnsupported(4)));
    }
}
