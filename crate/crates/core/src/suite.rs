//! Runners for the acceptance criteria. Each returns the measured values
//! next to the verdict; the integration suite and `holodyn report` share
//! them.

use std::f64::consts::{LN_2, PI, TAU};
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::certify::{certify_sj, certify_trapping, ComplexBox, IPoly, RealInterval, Status};
use crate::endo::{family_ftheta, power_map, product_saddle, HomPolyMap};
use crate::error::Result;
use crate::green::{DiskParam, Green};
use crate::measures::{
    birkhoff, disintegration_check, disintegration_check_against, equidistribution_report, non_increasing,
    nu_reference, pushforward_check, skewed_conditional, wasserstein1, ArcPartition, EmpiricalMeasure,
    TestDictionary, REFERENCE_ATOMS,
};
use crate::orbits::{
    auto_policy, backward_orbit, conic_stable_family, conic_transversal, forward_step, frame_chain, graph_transform,
    holonomy_probe, image_frame, local_stable, local_unstable, lyapunov, make_frame, BranchPolicy,
    GraphDisk, GraphKind,
};
use crate::periodic::{find_periodic, lefschetz_expected, orbit_jacobian, PointClass, Strategy, MAX_GRID_PERIOD};
use crate::projgeom::{
    conic_defect, conic_point, conic_point_turns, dist, from_chart, normalize, random_point,
    random_point_in_region, to_chart, AffinePair, ProjPoint, C64, ONE,
};
use crate::rng::{seeded, subseed};

pub const THETA: f64 = 0.01;
pub const DELTA: f64 = 0.05;
pub const MARGIN: f64 = 0.025;
pub const TRAP_DEPTH: u32 = 14;
pub const SJ_DEPTH: u32 = 18;
pub const GREEN_DEPTH: usize = 40;
pub const MAX_PERIOD: usize = 8;
pub const SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub metrics: Vec<Metric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CriterionReport {
    /// Value of a named metric; NaN when absent.
    pub fn metric(&self, name: &str) -> f64 {
        self.metrics.iter().find(|m| m.name == name).map_or(f64::NAN, |m| m.value)
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("[{verdict}] {:>2} {} ({:.1} s)", self.id, self.title, self.seconds);
        if let Some(e) = &self.error {
            s.push_str(&format!(": {e}"));
        }
        s
    }
}

#[derive(Default)]
struct Metrics(Vec<Metric>);

impl Metrics {
    fn push(&mut self, name: impl Into<String>, value: f64) {
        self.0.push(Metric { name: name.into(), value });
    }

    fn flag(&mut self, name: impl Into<String>, value: bool) {
        self.push(name, if value { 1.0 } else { 0.0 });
    }
}

pub const TITLES: [&str; 11] = [
    "trapping certification",
    "Jacobian smallness certification",
    "Lefschetz counts",
    "equidistribution of periodic points",
    "saddle hyperbolicity",
    "conditionals induced by the Green current",
    "holonomy invariance",
    "pushforward convergence",
    "Birkhoff basin statistics",
    "numerical kernel invariants",
    "exactness sentinels",
];

fn ftheta() -> HomPolyMap {
    family_ftheta(C64::new(THETA, 0.0)).expect("built-in family")
}

fn run(id: u8, body: impl FnOnce(&mut Metrics) -> Result<bool>) -> CriterionReport {
    let start = Instant::now();
    let mut m = Metrics::default();
    let outcome = body(&mut m);
    let seconds = start.elapsed().as_secs_f64();
    let (passed, error) = match outcome {
        Ok(p) => (p, None),
        Err(e) => (false, Some(e.to_string())),
    };
    CriterionReport { id, title: TITLES[id as usize - 1], passed, seconds, metrics: m.0, error }
}

/// Run one criterion, numbered from 1.
pub fn criterion(id: u8) -> Option<CriterionReport> {
    Some(match id {
        1 => trapping(),
        2 => jacobian(),
        3 => lefschetz(),
        4 => equidistribution(),
        5 => hyperbolicity(),
        6 => disintegration(),
        7 => holonomy(),
        8 => pushforward(),
        9 => basin(),
        10 => kernels(),
        11 => sentinels(),
        _ => return None,
    })
}

pub fn all() -> Vec<CriterionReport> {
    (1..=11).filter_map(criterion).collect()
}

pub fn trapping() -> CriterionReport {
    run(1, |m| {
        let f = ftheta();
        let start = Instant::now();
        let cert = certify_trapping(&f, DELTA, MARGIN, TRAP_DEPTH)?;
        let secs = start.elapsed().as_secs_f64();
        m.push("status", cert.status.exit_code() as f64);
        m.push("seconds", secs);
        m.push("depth", cert.max_depth_reached as f64);
        m.push("bound", cert.bound_achieved);
        let samples = 100_000;
        let chunks = 100;
        let per = crate::par::map_range(chunks, |c| {
            let mut rng = seeded(subseed(SEED, c as u64));
            (0..samples / chunks)
                .filter(|_| {
                    let p = random_point_in_region(&mut rng, DELTA);
                    conic_defect(&f.eval(&p)) > MARGIN
                })
                .count()
        });
        let violations: usize = per.iter().sum();
        m.push("samples", samples as f64);
        m.push("violations", violations as f64);
        let control = certify_trapping(&family_ftheta(C64::new(0.9, 0.0))?, DELTA, MARGIN, 10)?;
        m.push("control_status", control.status.exit_code() as f64);
        Ok(cert.status == Status::Certified
            && cert.max_depth_reached <= TRAP_DEPTH
            && secs <= 60.0
            && violations == 0
            && control.status != Status::Certified)
    })
}

pub fn jacobian() -> CriterionReport {
    run(2, |m| {
        let f = ftheta();
        let hi = certify_sj(&f, 0.2, DELTA, SJ_DEPTH)?;
        m.push("status_alpha_0.2", hi.status.exit_code() as f64);
        m.push("bound_alpha_0.2", hi.bound_achieved);
        let lo = certify_sj(&f, 0.01, DELTA, TRAP_DEPTH)?;
        m.push("status_alpha_0.01", lo.status.exit_code() as f64);
        let verified = match lo.witness.map(|b| b.center()) {
            Some(Ok(p)) => {
                let r = f.sj_ratio(&p)?;
                m.push("witness_ratio", r);
                conic_defect(&p) <= DELTA && r >= 0.01
            }
            _ => false,
        };
        m.flag("witness_verified", verified);
        Ok(hi.status == Status::Certified && lo.status == Status::Falsified && verified)
    })
}

fn strategy_for(n: usize) -> Strategy {
    if n <= MAX_GRID_PERIOD {
        Strategy::Both
    } else {
        Strategy::ConicRoots
    }
}

pub fn lefschetz() -> CriterionReport {
    run(3, |m| {
        let f = ftheta();
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for n in 1..=MAX_PERIOD {
            let pts = find_periodic(&f, n, DELTA, strategy_for(n), SEED)?;
            let expected = lefschetz_expected(2, n as u32) as usize;
            let res = pts.iter().map(|p| p.residual).fold(0.0, f64::max);
            worst = worst.max(res);
            m.push(format!("count_{n}"), pts.len() as f64);
            ok &= pts.len() == expected && res < 1e-9;
        }
        m.push("max_residual", worst);
        Ok(ok)
    })
    .timed(300.0)
}

impl CriterionReport {
    /// Fail when the run exceeded `limit` seconds.
    fn timed(mut self, limit: f64) -> Self {
        self.metrics.push(Metric { name: "time_limit".into(), value: limit });
        self.passed &= self.seconds <= limit;
        self
    }
}

pub fn equidistribution() -> CriterionReport {
    run(4, |m| {
        let rows = equidistribution_report(&ftheta(), 1..=MAX_PERIOD, DELTA)?;
        let w1: Vec<f64> = rows.iter().map(|r| r.w1).collect();
        for r in &rows {
            m.push(format!("w1_{}", r.n), r.w1);
            m.push(format!("bound_{}", r.n), r.bound);
        }
        let monotone = non_increasing(&w1, 0.1);
        m.flag("non_increasing", monotone);
        Ok(monotone && rows.iter().all(|r| r.w1 <= r.bound))
    })
}

/// A conic angle (in turns) with a full pseudo-random mantissa, avoiding
/// short dyadic fractions, which the doubling map sends to a fixed point.
pub fn generic_turns(seed: u64) -> f64 {
    let mut rng = seeded(seed);
    loop {
        let t: f64 = rng.random();
        if (t * (1u64 << 40) as f64).fract() != 0.0 {
            return t;
        }
    }
}

pub fn hyperbolicity() -> CriterionReport {
    run(5, |m| {
        let f = ftheta();
        let p = conic_point_turns(generic_turns(SEED));
        let start = Instant::now();
        let est = lyapunov(&f, &p, 100_000, SEED, auto_policy(&f, &p))?;
        let secs = start.elapsed().as_secs_f64();
        m.push("chi1", est.chi1);
        m.push("chi2", est.chi2);
        m.push("stderr", est.stderr);
        m.push("seconds", secs);
        let mut ok = (est.chi1 - LN_2).abs() <= 0.01 && (est.chi2 - (2.0 * THETA).ln()).abs() <= 0.02 && secs < 30.0;
        let mut checked = 0;
        let mut excluded = 0;
        for n in 1..=MAX_PERIOD {
            for pp in find_periodic(&f, n, DELTA, Strategy::ConicRoots, SEED)? {
                if conic_defect(&pp.point) > 1e-9 {
                    continue;
                }
                // w = 0 and w = infinity are superattracting and lie off
                // the support of the measure
                let (x, y) = (pp.point.x().norm(), pp.point.y().norm());
                if (x - y).abs() > 1e-9 * x.max(y) {
                    excluded += 1;
                    continue;
                }
                checked += 1;
                ok &= pp.class == PointClass::Saddle;
            }
        }
        m.push("saddles_checked", checked as f64);
        m.push("off_circle_excluded", excluded as f64);
        Ok(ok && checked > 0)
    })
}

pub fn disintegration() -> CriterionReport {
    run(6, |m| {
        let f = ftheta();
        let part = ArcPartition::new(0.0, PI, 16)?;
        let rep = disintegration_check(&f, &part, GREEN_DEPTH)?;
        m.push("max_relative", rep.max_relative_discrepancy);
        let fake = skewed_conditional(&f, &part, 4096)?;
        let control = disintegration_check_against(&f, &part, GREEN_DEPTH, &fake)?;
        m.push("control_max_relative", control.max_relative_discrepancy);
        Ok(rep.max_relative_discrepancy < 0.1 && control.max_relative_discrepancy > 0.3)
    })
}

pub fn holonomy() -> CriterionReport {
    run(7, |m| {
        let f = ftheta();
        let family = conic_stable_family(&f, 0.0, 0.4, 32, 0.05, 0.05)?;
        let rho = family.iter().map(|g| g.frame.rho).fold(f64::INFINITY, f64::min);
        let w0 = C64::new(1.0, 0.0);
        let d = conic_transversal(w0, 0.5, C64::new(0.0, 0.0), 256)?;
        let dp = conic_transversal(w0, 0.5, C64::new(0.25 * rho, 0.0), 256)?;
        let same = holonomy_probe(&f, &d, &d, &family, GREEN_DEPTH, 16)?;
        let moved = holonomy_probe(&f, &d, &dp, &family, GREEN_DEPTH, 16)?;
        m.push("members", family.len() as f64);
        m.push("matched", moved.matched as f64);
        m.push("max_relative", moved.max_relative);
        m.push("same_disk_max_relative", same.max_relative);
        Ok(!moved.no_data && moved.max_relative < 0.05 && same.max_relative == 0.0)
    })
}

pub fn pushforward() -> CriterionReport {
    run(8, |m| {
        let f = ftheta();
        // a disk centered on the circle meeting it in an arc of length pi/4
        let disk = DiskParam::conic(C64::from_polar(1.0, PI / 8.0), 2.0 * (PI / 16.0).sin(), 256)?;
        let rows = pushforward_check(&f, &disk, 0..=10, GREEN_DEPTH, 1024, SEED)?;
        let w1: Vec<f64> = rows.iter().map(|r| r.w1).collect();
        for r in &rows {
            m.push(format!("w1_{}", r.n), r.w1);
        }
        let monotone = non_increasing(&w1, 0.1);
        m.flag("non_increasing", monotone);
        Ok(monotone && w1[10] < 0.05)
    })
}

/// A point of `U(0.05)` off the conic over the circle `|x| = |y|`, where
/// the Green current lives.
pub fn basin_point(seed: u64) -> ProjPoint {
    let mut rng = seeded(seed);
    let w = C64::from_polar(1.0, TAU * generic_turns(subseed(seed, 1)));
    let eps = C64::from_polar(0.005 + 0.015 * rng.random::<f64>(), TAU * rng.random::<f64>());
    normalize([w * w, ONE, w + eps]).expect("nonzero")
}

pub fn basin() -> CriterionReport {
    run(9, |m| {
        let f = ftheta();
        let dict = TestDictionary::standard();
        let reference = nu_reference(&f, REFERENCE_ATOMS)?;
        let seeds: Vec<u64> = (0..20).map(|k| subseed(SEED, 100 + k)).collect();
        let runs = crate::par::map(&seeds, |&s| -> Result<(f64, f64, f64)> {
            let p = basin_point(s);
            let res = birkhoff(&f, &p, 10_000, &dict, auto_policy(&f, &p))?;
            let w1 = wasserstein1(&res.orbit_measure.normalized()?, &reference)?.value;
            Ok((conic_defect(&p), w1, res.mean_conic_defect))
        });
        let mut ok = true;
        let (mut worst_w1, mut worst_defect): (f64, f64) = (0.0, 0.0);
        for r in runs {
            let (d0, w1, defect) = r?;
            ok &= d0 > 0.0 && d0 <= DELTA && w1 < 0.05 && defect < 1e-3;
            worst_w1 = worst_w1.max(w1);
            worst_defect = worst_defect.max(defect);
        }
        m.push("orbits", seeds.len() as f64);
        m.push("max_w1", worst_w1);
        m.push("max_mean_defect", worst_defect);
        Ok(ok)
    })
}

/// Largest violation of the metric axioms over random triples.
pub fn metric_axioms(samples: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let [p, q, r] = [0; 3].map(|_| random_point(&mut rng));
        worst = worst
            .max(dist(&p, &p))
            .max((dist(&p, &q) - dist(&q, &p)).abs())
            .max(dist(&p, &r) - dist(&p, &q) - dist(&q, &r))
            .max(dist(&p, &q) - 1.0);
    }
    worst
}

/// Largest relative homogeneity residual `|F(l v) - l^d F(v)| / |l^d F(v)|`
/// and largest relative gap between the lift derivative and central
/// differences.
pub fn endo_invariants(map: &HomPolyMap, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = seeded(seed);
    let d = map.degree() as i32;
    let (mut hom, mut fd): (f64, f64) = (0.0, 0.0);
    let norm = |v: &[C64; 3]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..samples {
        let v = random_point(&mut rng).coords();
        let l = C64::from_polar(0.5 + rng.random::<f64>(), TAU * rng.random::<f64>());
        let a = map.eval_lift(&v.map(|c| c * l));
        let b = map.eval_lift(&v).map(|c| c * l.powi(d));
        hom = hom.max(norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]) / norm(&b));
        let jac = map.lift_derivative(&v);
        let h = 1e-6;
        for k in 0..3 {
            let mut plus = v;
            let mut minus = v;
            plus[k] += h;
            minus[k] -= h;
            let (fp, fm) = (map.eval_lift(&plus), map.eval_lift(&minus));
            let scale = jac.iter().flatten().map(|c| c.norm()).fold(1.0, f64::max);
            for i in 0..3 {
                let diff = (fp[i] - fm[i]) / (2.0 * h);
                fd = fd.max((diff - jac[i][k]).norm() / scale);
            }
        }
    }
    (hom, fd)
}

/// Largest excess of `|G_n - G_m|` over the telescoping bound for `n < m`,
/// and largest functional-equation residual `|G(f p) - d G(p) + log |F(p)|_max|`.
pub fn green_invariants(map: &HomPolyMap, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let green = Green::new(map);
    let d = map.degree() as f64;
    let mut rng = seeded(seed);
    let (mut cauchy, mut functional): (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for _ in 0..samples {
        let p = random_point(&mut rng);
        let (n, m) = (5 + rng.random_range(0..10), 20 + rng.random_range(0..20));
        let gap = (green.value(&p, n)?.value - green.value(&p, m)?.value).abs();
        cauchy = cauchy.max(gap - green.error_bound(n));
        let image = map.eval_lift(&p.coords());
        let lhs = green.value(&map.eval(&p), GREEN_DEPTH - 1)?.value;
        let rhs = d * green.value(&p, GREEN_DEPTH)?.value - crate::projgeom::max_norm(&image).ln();
        functional = functional.max((lhs - rhs).abs());
    }
    Ok((cauchy, functional))
}

/// Number of samples escaping the interval enclosure of a map component
/// over random boxes in the unit bidisk.
pub fn enclosure_failures(map: &HomPolyMap, samples: usize, seed: u64) -> usize {
    let polys: Vec<Vec<IPoly>> =
        (0..3).map(|chart| (0..3).map(|k| IPoly::from_component(map, k, chart)).collect()).collect();
    let mut rng = seeded(seed);
    let mut fails = 0;
    let interval = |rng: &mut crate::rng::Rng| {
        let w = 0.5 * rng.random::<f64>();
        let lo = -1.0 + (2.0 - w) * rng.random::<f64>();
        RealInterval::new(lo, lo + w)
    };
    for _ in 0..samples {
        let chart = rng.random_range(0..3);
        let k = rng.random_range(0..3);
        let u = ComplexBox::new(interval(&mut rng), interval(&mut rng));
        let v = ComplexBox::new(interval(&mut rng), interval(&mut rng));
        let pick = |b: &ComplexBox, rng: &mut crate::rng::Rng| {
            C64::new(
                b.re.lo + (b.re.hi - b.re.lo) * rng.random::<f64>(),
                b.im.lo + (b.im.hi - b.im.lo) * rng.random::<f64>(),
            )
        };
        let (a, b) = (pick(&u, &mut rng), pick(&v, &mut rng));
        let value = map.eval_lift(&AffinePair { chart, u: a, v: b }.lift())[k];
        let enc = polys[chart][k].enclose(&u, &v);
        if !enc.to_box().contains(value) {
            fails += 1;
        }
    }
    fails
}

/// Largest relative gap between the chart derivative of `f^n` (n <= 5)
/// and central differences of the composed chart map.
pub fn chain_rule_gap(map: &HomPolyMap, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let n = 1 + s % 5;
        let p = conic_point(C64::from_polar(1.0, TAU * rng.random::<f64>()));
        let p = normalize(p.coords().map(|c| c + C64::new(0.01 * rng.random::<f64>(), 0.0)))?;
        let src = p.pivot();
        let end = map.iterate(&p, n);
        let dst = end.pivot();
        let (jac, _) = orbit_jacobian(map, &p, n, src, dst)?;
        let a = to_chart(&p, src)?;
        let h = 1e-7;
        let image = |u: C64, v: C64| -> Result<[C64; 2]> {
            let q = map.iterate(&from_chart(&AffinePair { chart: src, u, v })?, n);
            Ok(to_chart(&q, dst)?.as_array())
        };
        let scale = jac.0.iter().flatten().map(|c| c.norm()).fold(1.0, f64::max);
        for (k, e) in [(0, [h, 0.0]), (1, [0.0, h])] {
            let (du, dv) = (C64::new(e[0], 0.0), C64::new(e[1], 0.0));
            let plus = image(a.u + du, a.v + dv)?;
            let minus = image(a.u - du, a.v - dv)?;
            for i in 0..2 {
                let diff = (plus[i] - minus[i]) / (2.0 * h);
                worst = worst.max((diff - jac.0[i][k]).norm() / scale);
            }
        }
    }
    Ok(worst)
}

/// Largest frame-unit offset of `f` applied to the local unstable disk at
/// `p_{-1}` from the one at `p_0`, and of `f` applied to the stable disk at
/// `p` from the one at `f(p)`.
pub fn manifold_compatibility(map: &HomPolyMap, turns: f64) -> Result<(f64, f64)> {
    let p = conic_point_turns(turns);
    let orbit = backward_orbit(map, &p, 40, BranchPolicy::NearestToConic, SEED)?;
    let frames = frame_chain(map, &orbit, 7, 0.05, 0.05)?;
    let here = local_unstable(map, &orbit, &frames, 6)?;
    let before = local_unstable(map, &orbit.shifted(1), &frames[1..], 6)?;
    let mut unstable: f64 = 0.0;
    for y in before.ring(0.3, 16)? {
        if let Some(off) = here.offset(&map.eval(&y))? {
            unstable = unstable.max(off);
        }
    }
    let fr = make_frame(map, &orbit, 0.05, 0.05)?;
    let disk = local_stable(map, &p, &fr, 3, 10)?;
    let next = orbit.advanced(map);
    let q = next.head();
    let fr_next = make_frame(map, &next, 0.05, 0.05)?;
    let disk_next = local_stable(map, &q, &fr_next, 3, 10)?;
    let mut stable: f64 = 0.0;
    for y in disk.ring(0.5, 16)? {
        let image = forward_step(map, &y, auto_policy(map, &y))?;
        if let Some(off) = disk_next.offset(&image)? {
            stable = stable.max(off);
        }
    }
    Ok((unstable, stable))
}

/// Largest violation of symmetry and the triangle inequality of the
/// transport distance over random clouds, and the largest change in total
/// mass under pushforward.
pub fn transport_invariants(map: &HomPolyMap, triples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = seeded(seed);
    let cloud = |rng: &mut crate::rng::Rng| -> Result<EmpiricalMeasure> {
        let n = 5 + rng.random_range(0..20);
        let pts: Vec<(ProjPoint, f64)> = (0..n).map(|_| (random_point(rng), rng.random::<f64>() + 0.1)).collect();
        EmpiricalMeasure::new(pts, "random")?.normalized()
    };
    let (mut metric, mut mass): (f64, f64) = (0.0, 0.0);
    for _ in 0..triples {
        let (a, b, c) = (cloud(&mut rng)?, cloud(&mut rng)?, cloud(&mut rng)?);
        let ab = wasserstein1(&a, &b)?.value;
        let ba = wasserstein1(&b, &a)?.value;
        let ac = wasserstein1(&a, &c)?.value;
        let bc = wasserstein1(&b, &c)?.value;
        metric = metric.max((ab - ba).abs()).max(ac - ab - bc - 1e-12).max(wasserstein1(&a, &a)?.value);
        let pushed = a.pushforward(map);
        mass = mass.max((pushed.total_mass() - a.total_mass()).abs());
    }
    Ok((metric, mass))
}

pub fn kernels() -> CriterionReport {
    run(10, |m| {
        let f = ftheta();
        let mut ok = true;
        let mut suite = |name: &str, m: &mut Metrics, body: &mut dyn FnMut(&mut Metrics) -> Result<bool>| -> Result<()> {
            let start = Instant::now();
            let pass = body(m)?;
            let secs = start.elapsed().as_secs_f64();
            m.push(format!("{name}_seconds"), secs);
            ok &= pass && secs <= 120.0;
            Ok(())
        };
        suite("projgeom", m, &mut |m| {
            let v = metric_axioms(10_000, SEED);
            m.push("metric_axiom_violation", v);
            Ok(v <= 1e-12)
        })?;
        suite("endo", m, &mut |m| {
            let (hom, fd) = endo_invariants(&f, 1000, SEED);
            m.push("homogeneity_residual", hom);
            m.push("jacobian_fd_gap", fd);
            Ok(hom < 1e-12 && fd < 1e-6)
        })?;
        suite("green", m, &mut |m| {
            let (cauchy, functional) = green_invariants(&f, 1000, SEED)?;
            m.push("cauchy_excess", cauchy);
            m.push("functional_residual", functional);
            Ok(cauchy <= 1e-12 && functional < 1e-10)
        })?;
        suite("certify", m, &mut |m| {
            let fails = enclosure_failures(&f, 10_000, SEED);
            m.push("enclosure_failures", fails as f64);
            Ok(fails == 0)
        })?;
        suite("orbits", m, &mut |m| {
            let gap = chain_rule_gap(&f, 200, SEED)?;
            let (unstable, stable) = manifold_compatibility(&f, 0.2718)?;
            m.push("chain_rule_gap", gap);
            m.push("unstable_compatibility", unstable);
            m.push("stable_compatibility", stable);
            Ok(gap < 1e-5 && unstable < 1e-6 && stable < 1e-6)
        })?;
        suite("measures", m, &mut |m| {
            let (metric, mass) = transport_invariants(&f, 1000, SEED)?;
            m.push("transport_axiom_violation", metric);
            m.push("pushforward_mass_change", mass);
            Ok(metric <= 1e-9 && mass == 0.0)
        })?;
        Ok(ok)
    })
}

pub fn sentinels() -> CriterionReport {
    run(11, |m| {
        let sq = power_map(2);
        let green = Green::new(&sq);
        let mut rng = seeded(SEED);
        let mut nonzero = 0;
        for _ in 0..1000 {
            if green.value(&random_point(&mut rng), GREEN_DEPTH)?.value != 0.0 {
                nonzero += 1;
            }
        }
        m.push("squaring_green_nonzero", nonzero as f64);
        let f = ftheta();
        let mut defect: f64 = 0.0;
        for _ in 0..1000 {
            let w = C64::from_polar(0.5 + rng.random::<f64>(), TAU * rng.random::<f64>());
            defect = defect.max(conic_defect(&f.eval(&conic_point(w))));
        }
        m.push("conic_invariance_defect", defect);
        let saddle = product_saddle(C64::new(THETA, 0.0))?;
        let p = ProjPoint::real(1.0, 1.0, 1.0);
        let orbit = backward_orbit(&saddle, &p, 30, BranchPolicy::NearestToConic, SEED)?;
        let fr = make_frame(&saddle, &orbit, 0.05, 0.05)?;
        let dst = image_frame(&saddle, &fr)?;
        let g = graph_transform(&saddle, &fr, &dst, &GraphDisk::flat(fr, GraphKind::Horizontal))?;
        let flat = g.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        m.push("flat_graph_drift", flat);
        Ok(nonzero == 0 && defect < 1e-12 && flat <= 1e-10)
    })
}
