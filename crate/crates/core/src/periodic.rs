//! Periodic points: location by Newton from conic-root and grid seeds,
//! multiplier classification, and the counting measures `nu_n`.

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::endo::{Family, HomPolyMap};
use crate::error::{Error, Result};
use crate::linalg::M2;
use crate::measures::EmpiricalMeasure;
use crate::projgeom::{
    conic_defect, dist, from_chart, normalize, to_chart, AffinePair, ProjPoint, C64, ONE, ZERO,
};
use crate::rng::{seeded, subseed};

pub const RESIDUAL_TOL: f64 = 1e-9;
pub const DEDUP_RADIUS: f64 = 1e-7;
pub const NEUTRAL_BAND: f64 = 1e-6;
pub const MAX_CONIC_PERIOD: usize = 12;
pub const MAX_GRID_PERIOD: usize = 6;
pub const GRID_SIDE: usize = 64;
pub const SEED_BUDGET: usize = 100_000;
const NEWTON_STEPS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    GridNewton,
    ConicRoots,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Attracting,
    Repelling,
    Saddle,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicPoint {
    pub point: ProjPoint,
    /// `point` is fixed by the `period`-th iterate.
    pub period: usize,
    pub minimal_period: usize,
    pub multipliers: [C64; 2],
    pub class: PointClass,
    pub residual: f64,
    /// A multiplier modulus lies within the neutral band around 1.
    pub neutral_ambiguous: bool,
}

/// `d^n + 1`.
pub fn lefschetz_expected(d: u64, n: u32) -> u64 {
    d.pow(n) + 1
}

/// Chart derivative of `f^n` from chart `src` at `p` to chart `dst` at
/// `f^n(p)`, together with the endpoint. Intermediate steps use pivot charts.
pub fn orbit_jacobian(
    map: &HomPolyMap,
    p: &ProjPoint,
    n: usize,
    src: usize,
    dst: usize,
) -> Result<(M2, ProjPoint)> {
    let mut jac = M2::IDENTITY;
    let mut q = *p;
    let mut chart = src;
    for k in 0..n {
        let next = map.eval(&q);
        let target = if k + 1 == n { dst } else { next.pivot() };
        jac = map.chart_jacobian(&q, chart, target)?.mul(&jac);
        chart = target;
        q = next;
    }
    if n == 0 {
        to_chart(p, dst)?;
        if src != dst {
            return Err(Error::InvalidInput(
                "zero-step derivative between different charts".into(),
            ));
        }
    }
    Ok((jac, q))
}

/// Chart in which the whole cycle through `p` stays furthest from the
/// chart boundary.
fn cycle_chart(map: &HomPolyMap, p: &ProjPoint, n: usize) -> usize {
    let mut worst = [f64::INFINITY; 3];
    let mut q = *p;
    for _ in 0..n.max(1) {
        for (w, c) in worst.iter_mut().zip(q.coords()) {
            *w = w.min(c.norm());
        }
        q = map.eval(&q);
    }
    (0..3).fold(0, |best, c| if worst[c] > worst[best] { c } else { best })
}

fn newton(map: &HomPolyMap, seed: &ProjPoint, n: usize, chart: usize) -> Option<ProjPoint> {
    let g = |a: &AffinePair| -> Option<([C64; 2], M2)> {
        let p = from_chart(a).ok()?;
        let (jac, q) = orbit_jacobian(map, &p, n, chart, chart).ok()?;
        let b = to_chart(&q, chart).ok()?;
        Some(([b.u - a.u, b.v - a.v], jac))
    };
    let norm = |r: &[C64; 2]| (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
    let mut a = to_chart(seed, chart).ok()?;
    let (mut r, mut jac) = g(&a)?;
    for _ in 0..NEWTON_STEPS {
        if norm(&r) < 1e-15 {
            break;
        }
        let step = jac.sub(&M2::IDENTITY).solve(&[-r[0], -r[1]])?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = AffinePair {
                chart,
                u: a.u + step[0] * lambda,
                v: a.v + step[1] * lambda,
            };
            if trial.u.norm() > 1e3 || trial.v.norm() > 1e3 {
                lambda *= 0.5;
                continue;
            }
            if let Some((r2, j2)) = g(&trial) {
                if norm(&r2) < norm(&r) || norm(&r2) < 1e-15 {
                    a = trial;
                    r = r2;
                    jac = j2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let p = from_chart(&a).ok()?;
    (dist(&map.iterate(&p, n), &p) < RESIDUAL_TOL).then_some(p)
}

/// Re-polish a candidate from a seed near it.
pub fn polish(map: &HomPolyMap, seed: &ProjPoint, n: usize) -> Option<ProjPoint> {
    let chart = cycle_chart(map, seed, n);
    newton(map, seed, n, chart).or_else(|| newton(map, seed, n, seed.pivot()))
}

/// Fixed points of `f^n` inside `U(delta)`.
pub fn find_periodic(
    map: &HomPolyMap,
    n: usize,
    delta: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<Vec<PeriodicPoint>> {
    if n == 0 {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let use_conic = matches!(strategy, Strategy::ConicRoots | Strategy::Both);
    let use_grid = matches!(strategy, Strategy::GridNewton | Strategy::Both);
    if use_conic && n > MAX_CONIC_PERIOD {
        return Err(Error::Precondition(format!(
            "conic_roots supports n <= {MAX_CONIC_PERIOD}"
        )));
    }
    if use_grid && n > MAX_GRID_PERIOD {
        return Err(Error::Precondition(format!(
            "grid_newton supports n <= {MAX_GRID_PERIOD}"
        )));
    }
    let mut seeds = Vec::new();
    if use_conic {
        seeds.extend(conic_seeds(map, n)?);
    }
    if use_grid {
        seeds.extend(grid_seeds(delta, seed));
    }
    let found: Vec<Option<ProjPoint>> = crate::par::map(&seeds, |s| polish(map, s, n));
    // single-threaded merge in seed order
    let mut kept: Vec<ProjPoint> = Vec::new();
    for p in found.into_iter().flatten() {
        if conic_defect(&p) <= delta && !kept.iter().any(|q| dist(q, &p) < DEDUP_RADIUS) {
            kept.push(p);
        }
    }
    kept.iter().map(|p| classify_point(map, p, n)).collect()
}

fn conic_seeds(map: &HomPolyMap, n: usize) -> Result<Vec<ProjPoint>> {
    let param: fn(C64) -> [C64; 3] = match map.family() {
        Family::Ftheta { .. } => |w| [w * w, ONE, w],
        Family::F0 {
            power_on_line: true,
        } => |w| [ONE, w, ZERO],
        _ => {
            return Err(Error::UnsupportedMap(format!(
                "{} has no parametrized invariant curve",
                map.label()
            )))
        }
    };
    let d = map.degree() as usize;
    let roots = d.checked_pow(n as u32).map(|x| x - 1).unwrap_or(usize::MAX);
    if roots > SEED_BUDGET {
        return Err(Error::SeedBudgetExceeded { found: roots });
    }
    let mut seeds = vec![normalize(param(ZERO))?];
    // the point at w = infinity
    seeds.push(match map.family() {
        Family::Ftheta { .. } => ProjPoint::real(1.0, 0.0, 0.0),
        _ => ProjPoint::real(0.0, 1.0, 0.0),
    });
    for k in 0..roots {
        let w = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / roots as f64);
        seeds.push(normalize(param(w))?);
    }
    Ok(seeds)
}

/// `GRID_SIDE^2` chart points per chart, each paired with coordinates that
/// put it on the conic and at two random places inside `U(delta)`.
fn grid_seeds(delta: f64, seed: u64) -> Vec<ProjPoint> {
    let mut out = Vec::new();
    for chart in 0..3 {
        let mut rng = seeded(subseed(seed, chart as u64));
        for i in 0..GRID_SIDE {
            for j in 0..GRID_SIDE {
                let s = |k: usize| -1.0 + 2.0 * k as f64 / (GRID_SIDE - 1) as f64;
                let u = C64::new(s(i), s(j));
                if u.norm() > 1.0 {
                    continue;
                }
                let mut vs = Vec::with_capacity(4);
                let shifts = [
                    ZERO,
                    ZERO,
                    random_disk(&mut rng) * delta,
                    random_disk(&mut rng) * delta,
                ];
                for (k, shift) in shifts.iter().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    // conic in chart coordinates: v^2 = u (charts 0, 1), u v = 1 (chart 2)
                    let v = if chart < 2 {
                        (u + shift).sqrt() * sign
                    } else if u.norm() > 1e-3 {
                        (ONE - shift) / u
                    } else {
                        continue;
                    };
                    vs.push(v);
                }
                for v in vs {
                    if v.norm() <= 1.0 {
                        if let Ok(p) = from_chart(&AffinePair { chart, u, v }) {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

fn random_disk(rng: &mut crate::rng::Rng) -> C64 {
    let r = rng.random::<f64>().sqrt();
    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
}

fn classify_point(map: &HomPolyMap, p: &ProjPoint, n: usize) -> Result<PeriodicPoint> {
    let residual = dist(&map.iterate(p, n), p);
    let minimal_period = (1..=n)
        .find(|m| n.is_multiple_of(*m) && dist(&map.iterate(p, *m), p) < 1e-8)
        .unwrap_or(n);
    let chart = cycle_chart(map, p, n);
    let (jac, _) = orbit_jacobian(map, p, n, chart, chart)?;
    let (l1, l2) = jac.eigenvalues();
    let (m1, m2) = (l1.norm(), l2.norm());
    let neutral_ambiguous = (m1 - 1.0).abs() < NEUTRAL_BAND || (m2 - 1.0).abs() < NEUTRAL_BAND;
    let class = if neutral_ambiguous {
        PointClass::Neutral
    } else if m1 < 1.0 && m2 < 1.0 {
        PointClass::Attracting
    } else if m1 > 1.0 && m2 > 1.0 {
        PointClass::Repelling
    } else {
        PointClass::Saddle
    };
    Ok(PeriodicPoint {
        point: *p,
        period: n,
        minimal_period,
        multipliers: [l1, l2],
        class,
        residual,
        neutral_ambiguous,
    })
}

/// Recompute multipliers and class of a located periodic point.
pub fn classify(map: &HomPolyMap, pp: &PeriodicPoint) -> Result<PeriodicPoint> {
    let residual = dist(&map.iterate(&pp.point, pp.period), &pp.point);
    if residual >= RESIDUAL_TOL {
        return Err(Error::Precondition(format!(
            "residual {residual:e} is not below {RESIDUAL_TOL:e}"
        )));
    }
    classify_point(map, &pp.point, pp.period)
}

/// Counting measure with weight `d^-n` on each fixed point of `f^n` in
/// `U(delta)`. Uses conic roots when the family has a parametrized curve
/// and grid seeds up to the grid period limit.
pub fn nu_n(map: &HomPolyMap, n: usize, delta: f64) -> Result<EmpiricalMeasure> {
    let has_curve = matches!(
        map.family(),
        Family::Ftheta { .. }
            | Family::F0 {
                power_on_line: true
            }
    );
    let strategy = match (has_curve, n <= MAX_GRID_PERIOD) {
        (true, true) => Strategy::Both,
        (true, false) => Strategy::ConicRoots,
        (false, _) => Strategy::GridNewton,
    };
    let pts = find_periodic(map, n, delta, strategy, 0)?;
    let w = (map.degree() as f64).powi(-(n as i32));
    EmpiricalMeasure::new(
        pts.iter().map(|p| (p.point, w)).collect(),
        format!("nu_{n}"),
    )
}

/// CSV table: period, minimal period, coordinates, multiplier moduli,
/// class, residual.
pub fn write_csv<W: Write>(points: &[PeriodicPoint], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "period,minimal_period,re_x,im_x,re_y,im_y,re_z,im_z,abs_mult1,abs_mult2,class,residual"
    )?;
    for p in points {
        let c = p.point.coords();
        let class = serde_json::to_value(p.class)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            p.period,
            p.minimal_period,
            c[0].re,
            c[0].im,
            c[1].re,
            c[1].im,
            c[2].re,
            c[2].im,
            p.multipliers[0].norm(),
            p.multipliers[1].norm(),
            class,
            p.residual
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{family_ftheta, power_map};

    fn ftheta() -> HomPolyMap {
        family_ftheta(C64::new(0.01, 0.0)).unwrap()
    }

    fn contains(points: &[PeriodicPoint], q: &ProjPoint) -> bool {
        points.iter().any(|p| dist(&p.point, q) < 1e-9)
    }

    #[test]
    fn lefschetz_formula() {
        assert_eq!(lefschetz_expected(2, 1), 3);
        assert_eq!(lefschetz_expected(2, 10), 1025);
        assert_eq!(lefschetz_expected(3, 2), 10);
    }

    #[test]
    fn ftheta_fixed_points() {
        let pts = find_periodic(&ftheta(), 1, 0.05, Strategy::Both, 1).unwrap();
        assert_eq!(pts.len(), 3);
        for q in [
            ProjPoint::real(1.0, 0.0, 0.0),
            ProjPoint::real(0.0, 1.0, 0.0),
            ProjPoint::real(1.0, 1.0, 1.0),
        ] {
            assert!(contains(&pts, &q));
        }
    }

    #[test]
    fn ftheta_period_two() {
        let pts = find_periodic(&ftheta(), 2, 0.05, Strategy::Both, 2).unwrap();
        assert_eq!(pts.len(), 5);
        let w = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
        assert!(contains(&pts, &crate::projgeom::conic_point(w)));
        assert!(contains(&pts, &crate::projgeom::conic_point(w.conj())));
        let two_cycle = pts.iter().filter(|p| p.minimal_period == 2).count();
        assert_eq!(two_cycle, 2);
    }

    #[test]
    fn squaring_map_fixed_points_globally() {
        let pts = find_periodic(&power_map(2), 1, 1.0, Strategy::GridNewton, 3).unwrap();
        assert_eq!(
            pts.len(),
            7,
            "{:?}",
            pts.iter().map(|p| p.point.coords()).collect::<Vec<_>>()
        );
        let s11 = pts
            .iter()
            .find(|p| dist(&p.point, &ProjPoint::real(1.0, 1.0, 1.0)) < 1e-9)
            .unwrap();
        assert_eq!(s11.class, PointClass::Repelling);
        assert!((s11.multipliers[0].norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ftheta_classification() {
        let f = ftheta();
        let pts = find_periodic(&f, 1, 0.05, Strategy::ConicRoots, 0).unwrap();
        let p = pts
            .iter()
            .find(|p| dist(&p.point, &ProjPoint::real(1.0, 1.0, 1.0)) < 1e-12)
            .unwrap();
        assert_eq!(p.class, PointClass::Saddle);
        let mut m = [p.multipliers[0].norm(), p.multipliers[1].norm()];
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((m[0] - 0.02).abs() < 1e-12 && (m[1] - 2.0).abs() < 1e-12);
        // [0:0:1] lies outside U, classified directly
        let origin = ProjPoint::real(0.0, 0.0, 1.0);
        let pp = PeriodicPoint {
            point: origin,
            period: 1,
            minimal_period: 1,
            multipliers: [ZERO; 2],
            class: PointClass::Neutral,
            residual: 0.0,
            neutral_ambiguous: false,
        };
        let c = classify(&f, &pp).unwrap();
        let jac = f.chart_jacobian(&origin, 2, 2).unwrap();
        let (a, b) = jac.eigenvalues();
        assert_eq!(
            c.class,
            if a.norm() < 1.0 && b.norm() < 1.0 {
                PointClass::Attracting
            } else {
                PointClass::Repelling
            }
        );
    }

    #[test]
    fn nu_two_mass() {
        let m = nu_n(&ftheta(), 2, 0.05).unwrap();
        assert_eq!(m.len(), 5);
        assert!((m.total_mass() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn empty_region_gives_empty_measure() {
        let m = nu_n(&ftheta(), 1, -1.0).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.total_mass(), 0.0);
    }

    #[test]
    fn csv_rows() {
        let pts = find_periodic(&ftheta(), 1, 0.05, Strategy::ConicRoots, 0).unwrap();
        let mut buf = Vec::new();
        write_csv(&pts, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 4);
        assert!(s.contains("saddle"));
    }
}
