//! Univariate complex polynomial helpers: Durand–Kerner root finding,
//! interpolation on circles, and small determinants.

use crate::projgeom::{C64, ONE, ZERO};
use std::f64::consts::TAU;

/// Evaluate `sum c_k x^k` (coefficients low to high) by Horner's rule.
pub fn horner(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
}

fn horner_with_derivative(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Coefficients (low to high) of the polynomial of degree `< n` whose values
/// at `radius * exp(2 pi i k / n)` are `values[k]`.
pub fn interpolate_circle(values: &[C64], radius: f64) -> Vec<C64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut scale = 1.0;
    for j in 0..n {
        let mut acc = ZERO;
        for (k, &f) in values.iter().enumerate() {
            let ang = -TAU * ((j * k) % n) as f64 / n as f64;
            acc += f * C64::from_polar(1.0, ang);
        }
        out.push(acc / (n as f64 * scale));
        scale *= radius;
    }
    out
}

/// Sample points matching [`interpolate_circle`].
pub fn circle_nodes(n: usize, radius: f64) -> Vec<C64> {
    (0..n).map(|k| C64::from_polar(radius, TAU * k as f64 / n as f64)).collect()
}

#[derive(Debug, Clone)]
pub struct RootsResult {
    pub roots: Vec<C64>,
    pub converged: bool,
    pub iterations: usize,
}

/// All complex roots of the polynomial with coefficients `coeffs` (low to
/// high). Trailing (leading-degree) zeros must already be trimmed.
///
/// Durand–Kerner with 200 sweeps per attempt; on stall the starting
/// configuration is rotated and the iteration restarted. Every root is then
/// polished by a few Newton steps on the original polynomial.
pub fn durand_kerner(coeffs: &[C64]) -> RootsResult {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return RootsResult { roots: vec![], converged: true, iterations: 0 };
    }
    let lead = coeffs[deg];
    let monic: Vec<C64> = coeffs.iter().map(|&c| c / lead).collect();
    if deg == 1 {
        return RootsResult { roots: vec![-monic[0]], converged: true, iterations: 0 };
    }
    // Fujiwara-type bound on root moduli
    let bound = (0..deg)
        .map(|k| monic[k].norm().powf(1.0 / (deg - k) as f64))
        .fold(0.0f64, f64::max)
        * 2.0;
    let bound = bound.max(1e-3);

    let mut best: Option<(Vec<C64>, f64)> = None;
    let mut total_iters = 0;
    for attempt in 0..6 {
        let seed = C64::from_polar(1.0, 0.4 + 0.7 * attempt as f64) * C64::new(0.4, 0.9);
        let mut z: Vec<C64> = (0..deg)
            .map(|k| seed.powu(k as u32) / seed.norm().powi(k as i32) * bound * (0.5 + 0.5 * (k as f64 + 1.0) / deg as f64))
            .collect();
        let mut last_change = f64::INFINITY;
        for _ in 0..200 {
            total_iters += 1;
            last_change = 0.0;
            for i in 0..deg {
                let num = horner(&monic, z[i]);
                let mut den = ONE;
                for j in 0..deg {
                    if i != j {
                        den *= z[i] - z[j];
                    }
                }
                if den.norm() == 0.0 {
                    den = C64::new(1e-14, 1e-14);
                }
                let step = num / den;
                z[i] -= step;
                last_change = last_change.max(step.norm() / (1.0 + z[i].norm()));
            }
            if last_change < 1e-15 {
                break;
            }
        }
        let converged = last_change < 1e-15 && z.iter().all(|r| r.re.is_finite() && r.im.is_finite());
        if z.iter().all(|r| r.re.is_finite() && r.im.is_finite()) {
            for r in z.iter_mut() {
                *r = newton_polish(&monic, *r);
            }
            let resid = z.iter().map(|&r| horner(&monic, r).norm()).fold(0.0, f64::max);
            if best.as_ref().is_none_or(|(_, b)| resid < *b) {
                best = Some((z.clone(), resid));
            }
        }
        if converged {
            let (roots, _) = best.unwrap();
            return RootsResult { roots, converged: true, iterations: total_iters };
        }
    }
    let roots = best.map(|b| b.0).unwrap_or_default();
    RootsResult { roots, converged: false, iterations: total_iters }
}

fn newton_polish(monic: &[C64], mut x: C64) -> C64 {
    for _ in 0..8 {
        let (p, dp) = horner_with_derivative(monic, x);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let cand = x - step;
        if horner(monic, cand).norm() > p.norm() {
            break;
        }
        x = cand;
        if step.norm() <= 1e-17 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

/// Determinant of a square complex matrix by Gaussian elimination with
/// partial pivoting.
pub fn determinant(mut a: Vec<Vec<C64>>) -> C64 {
    let n = a.len();
    let mut det = ONE;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())
            .unwrap();
        if a[piv][col].norm() == 0.0 {
            return ZERO;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
        }
    }
    det
}

/// Sylvester resultant of two polynomials (coefficients low to high).
pub fn resultant(p: &[C64], q: &[C64]) -> C64 {
    let m = p.len() - 1;
    let n = q.len() - 1;
    let size = m + n;
    let mut s = vec![vec![ZERO; size]; size];
    for row in 0..n {
        for (k, &c) in p.iter().rev().enumerate() {
            s[row][row + k] = c;
        }
    }
    for row in 0..m {
        for (k, &c) in q.iter().rev().enumerate() {
            s[n + row][row + k] = c;
        }
    }
    determinant(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dk_finds_simple_roots() {
        // (x-1)(x+2)(x-i) expanded
        let roots_true = [r(1.0), r(-2.0), C64::new(0.0, 1.0)];
        let mut coeffs = vec![ONE];
        for &z in &roots_true {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * z;
            }
            coeffs = next;
        }
        let res = durand_kerner(&coeffs);
        assert!(res.converged);
        for z in roots_true {
            assert!(res.roots.iter().any(|&w| (w - z).norm() < 1e-12));
        }
    }

    #[test]
    fn dk_multiple_root_is_close() {
        // (x-0.5)^4
        let coeffs = vec![r(0.0625), r(-0.5), r(1.5), r(-2.0), r(1.0)];
        let res = durand_kerner(&coeffs);
        assert_eq!(res.roots.len(), 4);
        for z in res.roots {
            assert!((z - r(0.5)).norm() < 1e-3);
        }
    }

    #[test]
    fn interpolation_recovers_coefficients() {
        let c = vec![r(1.0), C64::new(0.0, 2.0), r(-3.0), r(0.5)];
        let nodes = circle_nodes(4, 0.7);
        let vals: Vec<C64> = nodes.iter().map(|&x| horner(&c, x)).collect();
        let back = interpolate_circle(&vals, 0.7);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn resultant_detects_common_root() {
        // (x-1)(x-2) and (x-1)(x+3)
        let p = vec![r(2.0), r(-3.0), r(1.0)];
        let q = vec![r(-3.0), r(2.0), r(1.0)];
        assert!(resultant(&p, &q).norm() < 1e-12);
        let q2 = vec![r(3.0), r(4.0), r(1.0)]; // (x+1)(x+3)
        // product of differences: (1+1)(1+3)(2+1)(2+3) = 120
        assert!((resultant(&p, &q2) - r(120.0)).norm() < 1e-9);
    }
}
