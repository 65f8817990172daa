use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::forward::{forward_step, ForwardPolicy};
use crate::endo::HomPolyMap;
use crate::error::{Error, Result};
use crate::linalg::{qr_step, M2};
use crate::periodic::orbit_jacobian;
use crate::projgeom::{dist, ProjPoint, C64};
use crate::rng::seeded;

pub const MIN_STEPS: usize = 100;
const BLOCKS: usize = 10;
/// Cycles up to this period are recognized and treated exactly.
pub const MAX_DETECTED_PERIOD: usize = 12;
const CYCLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub chi1: f64,
    pub chi2: f64,
    pub steps: usize,
    pub stderr: f64,
    /// Period of the cycle through the start point, when one was detected.
    pub period: Option<usize>,
}

/// Period of `p` if `f^n(p) = p` for some `n <= MAX_DETECTED_PERIOD`.
pub fn detect_period(map: &HomPolyMap, p: &ProjPoint) -> Option<usize> {
    let mut q = *p;
    for n in 1..=MAX_DETECTED_PERIOD {
        q = map.eval(&q);
        if dist(&q, p) < CYCLE_TOL {
            return Some(n);
        }
    }
    None
}

fn cycle_exponents(map: &HomPolyMap, p: &ProjPoint, n: usize) -> Result<(f64, f64)> {
    let c = p.pivot();
    let (jac, _) = orbit_jacobian(map, p, n, c, c)?;
    let (a, b) = jac.eigenvalues();
    let (x, y) = (a.norm().ln() / n as f64, b.norm().ln() / n as f64);
    Ok((x.max(y), x.min(y)))
}

fn random_unitary(seed: u64) -> M2 {
    let mut rng = seeded(seed);
    let mut g = || C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let m = M2([[g(), g()], [g(), g()]]);
    qr_step(&M2::IDENTITY, &m).0
}

/// Exponents from the QR cocycle of pivot-chart Jacobians along the forward
/// orbit of `p0`. A start point on a short cycle gets the exact values from
/// the eigenvalues of the cycle derivative.
pub fn lyapunov(
    map: &HomPolyMap,
    p0: &ProjPoint,
    steps: usize,
    seed: u64,
    policy: ForwardPolicy,
) -> Result<LyapunovEstimate> {
    if steps < MIN_STEPS {
        return Err(Error::Precondition(format!("need at least {MIN_STEPS} steps")));
    }
    if let Some(n) = detect_period(map, p0) {
        let (chi1, chi2) = cycle_exponents(map, p0, n)?;
        return Ok(LyapunovEstimate { chi1, chi2, steps, stderr: 0.0, period: Some(n) });
    }
    let mut q = random_unitary(seed);
    let mut p = *p0;
    let block = steps / BLOCKS;
    let mut sums = [[0.0f64; 2]; BLOCKS];
    let mut total = [0.0f64; 2];
    let mut degenerate = false;
    for k in 0..steps {
        let next = forward_step(map, &p, policy)?;
        let jac = map
            .chart_jacobian(&p, p.pivot(), next.pivot())
            .or_else(|_| map.chart_jacobian(&p, p.pivot(), map.eval(&p).pivot()))
            .map_err(|e| Error::ChartBreakdown(format!("step {k}: {e}")))?;
        let (nq, r11, r22) = qr_step(&jac, &q);
        let (l1, l2) = (r11.ln(), r22.ln());
        if !l1.is_finite() || l2.is_nan() {
            return Err(Error::ChartBreakdown(format!("degenerate derivative at step {k}")));
        }
        // a critical transverse direction (e.g. z = 0 for the squaring map)
        // sends the second exponent to minus infinity
        degenerate |= l2 == f64::NEG_INFINITY;
        total[0] += l1;
        total[1] += l2;
        if let Some(s) = sums.get_mut(k / block) {
            s[0] += l1;
            s[1] += l2;
        }
        q = nq;
        p = next;
    }
    let n = steps as f64;
    let (a, b) = (total[0] / n, total[1] / n);
    let se = |i: usize, mean: f64| {
        let var = sums.iter().map(|s| (s[i] / block as f64 - mean).powi(2)).sum::<f64>() / (BLOCKS - 1) as f64;
        (var / BLOCKS as f64).sqrt()
    };
    let stderr = if degenerate { se(0, a) } else { se(0, a).max(se(1, b)) };
    Ok(LyapunovEstimate { chi1: a.max(b), chi2: a.min(b), steps, stderr, period: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{family_ftheta, power_map};
    use crate::projgeom::{conic_point_turns, normalize, ONE, ZERO};

    #[test]
    fn fixed_point_is_exact() {
        let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
        let p = ProjPoint::real(1.0, 1.0, 1.0);
        let est = lyapunov(&f, &p, 1000, 0, ForwardPolicy::Plain).unwrap();
        assert_eq!(est.period, Some(1));
        let (a, b) = f.chart_jacobian(&p, 0, 0).unwrap().eigenvalues();
        let (hi, lo) = if a.norm() > b.norm() { (a, b) } else { (b, a) };
        assert!((est.chi1 - hi.norm().ln()).abs() < 1e-8);
        assert!((est.chi2 - lo.norm().ln()).abs() < 1e-8);
        assert!((est.chi1 - 2f64.ln()).abs() < 1e-8 && (est.chi2 - 0.02f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn conic_orbit_exponents() {
        let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
        let p = conic_point_turns(0.1234567);
        let est = lyapunov(&f, &p, 20_000, 1, ForwardPolicy::EqualModulus).unwrap();
        assert!((est.chi1 - 2f64.ln()).abs() < 0.01, "{est:?}");
        assert!((est.chi2 - 0.02f64.ln()).abs() < 0.02, "{est:?}");
        assert!(est.chi1 >= est.chi2 && est.stderr < 0.01);
    }

    #[test]
    fn squaring_circle() {
        let f = power_map(2);
        let p = normalize([ONE, C64::from_polar(1.0, 2.0), ZERO]).unwrap();
        let est = lyapunov(&f, &p, 20_000, 2, ForwardPolicy::EqualModulus).unwrap();
        assert!((est.chi1 - 2f64.ln()).abs() < 0.01, "{est:?}");
    }

    #[test]
    fn short_runs_rejected() {
        let f = power_map(2);
        assert!(lyapunov(&f, &ProjPoint::real(1.0, 0.5, 0.2), 99, 0, ForwardPolicy::Plain).is_err());
    }
}
