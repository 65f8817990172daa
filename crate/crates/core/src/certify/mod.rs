//! Interval certification of the trapping property of the conic region,
//! of the Jacobian smallness bound, and of the witness conics inside it.

mod interval;
mod taylor;

pub use interval::{ComplexBox, RealInterval};
pub use taylor::{Enclosure, IPoly};

use serde::{Deserialize, Serialize};

use crate::endo::HomPolyMap;
use crate::error::{Error, Result};
use crate::projgeom::{chart_others, conic_defect, AffinePair, ProjPoint, C64, ONE};
use interval::{add_up, div_down, div_up, mul_down, mul_up};

/// Slack on the chart polydisk.
pub const CHART_SLACK: f64 = 1e-9;
pub const DEFAULT_MAX_DEPTH: u32 = 16;

/// Box in the chart where homogeneous coordinate `chart` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjBox {
    pub chart: usize,
    pub u: ComplexBox,
    pub v: ComplexBox,
}

impl ProjBox {
    /// The unit square `[-1, 1]^2` in both chart coordinates.
    pub fn chart_cover(chart: usize) -> Self {
        let s = RealInterval::new(-1.0, 1.0);
        let b = ComplexBox::new(s, s);
        Self { chart, u: b, v: b }
    }

    pub fn point(p: &ProjPoint) -> Self {
        let a = crate::projgeom::to_chart(p, p.pivot()).expect("pivot chart");
        Self { chart: a.chart, u: ComplexBox::point(a.u), v: ComplexBox::point(a.v) }
    }

    pub fn center(&self) -> Result<ProjPoint> {
        crate::projgeom::from_chart(&AffinePair { chart: self.chart, u: self.u.mid(), v: self.v.mid() })
    }

    fn dims(&self) -> [RealInterval; 4] {
        [self.u.re, self.u.im, self.v.re, self.v.im]
    }

    pub fn width(&self) -> f64 {
        self.dims().iter().map(|d| d.width()).fold(0.0, f64::max)
    }

    /// Bisect the widest real dimension (first one on ties).
    pub fn bisect(&self) -> (ProjBox, ProjBox) {
        let dims = self.dims();
        let k = (0..4).fold(0, |b, i| if dims[i].width() > dims[b].width() { i } else { b });
        let (lo, hi) = dims[k].split();
        let mut a = *self;
        let mut b = *self;
        match k {
            0 => (a.u.re, b.u.re) = (lo, hi),
            1 => (a.u.im, b.u.im) = (lo, hi),
            2 => (a.v.re, b.v.re) = (lo, hi),
            _ => (a.v.im, b.v.im) = (lo, hi),
        }
        (a, b)
    }

    /// All points of the box lie outside the closed chart polydisk.
    fn outside_chart(&self) -> bool {
        self.u.abs().lo > 1.0 + CHART_SLACK || self.v.abs().lo > 1.0 + CHART_SLACK
    }

    /// Upper bound for `max(1, |u|, |v|)`.
    fn max_norm_hi(&self) -> f64 {
        1.0f64.max(self.u.abs().hi).max(self.v.abs().hi)
    }

    pub fn contains(&self, p: &ProjPoint) -> bool {
        match crate::projgeom::to_chart(p, self.chart) {
            Ok(a) => self.u.contains(a.u) && self.v.contains(a.v),
            Err(_) => false,
        }
    }
}

/// `z^2 - xy` in chart coordinates.
fn conic_form(chart: usize) -> IPoly {
    // x, y, z as polynomials: the chart coordinate is 1
    let coord = |i: usize| -> IPoly {
        if i == chart {
            IPoly::constant(ONE)
        } else {
            let (a, _) = chart_others(chart);
            if i == a {
                IPoly::monomial(1, 0, ONE)
            } else {
                IPoly::monomial(0, 1, ONE)
            }
        }
    };
    coord(2).mul(&coord(2)).sub(&coord(0).mul(&coord(1)))
}

/// Enclosure of `|z^2 - xy| / max(|x|, |y|, |z|)^2` over the box.
pub fn box_conic_defect(b: &ProjBox) -> RealInterval {
    let q = conic_form(b.chart).enclose(&b.u, &b.v);
    let m = b.max_norm_hi();
    RealInterval { lo: div_down(q.abs_lo(), mul_up(m, m)), hi: q.abs_hi() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    Falsified,
    Unknown,
}

impl Status {
    /// Process exit code: 0 certified, 1 falsified, 2 unknown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Certified => 0,
            Status::Falsified => 1,
            Status::Unknown => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub status: Status,
    pub boxes_processed: u64,
    pub max_depth_reached: u32,
    /// Largest certified upper bound of the checked quantity.
    pub bound_achieved: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ProjBox>,
    /// No chart gave finite derivative enclosures on some box.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub chart_breakdown: bool,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

enum Outcome {
    Discard,
    Pass(f64),
    Split,
    Falsified,
    Undecided { breakdown: bool },
}

/// Breadth-first subdivision of the three chart covers. Each generation is
/// evaluated with an order-preserving parallel map, so the result does not
/// depend on scheduling.
fn subdivide(max_depth: u32, judge: impl Fn(&ProjBox, bool) -> Outcome + Sync) -> Certificate {
    let mut generation: Vec<ProjBox> = (0..3).map(ProjBox::chart_cover).collect();
    let mut depth = 0u32;
    let mut processed = 0u64;
    let mut bound: f64 = 0.0;
    let mut unknown: Option<ProjBox> = None;
    let mut breakdown = false;
    let mut reached = 0;
    while !generation.is_empty() {
        reached = depth;
        let last = depth >= max_depth;
        let outcomes = crate::par::map(&generation, |b| judge(b, last));
        processed += generation.len() as u64;
        let mut next = Vec::new();
        for (b, o) in generation.iter().zip(outcomes) {
            match o {
                Outcome::Discard => {}
                Outcome::Pass(x) => bound = bound.max(x),
                Outcome::Split => {
                    let (l, r) = b.bisect();
                    next.push(l);
                    next.push(r);
                }
                Outcome::Falsified => {
                    return Certificate {
                        status: Status::Falsified,
                        boxes_processed: processed,
                        max_depth_reached: depth,
                        bound_achieved: bound,
                        witness: Some(*b),
                        chart_breakdown: false,
                    };
                }
                Outcome::Undecided { breakdown: bd } => {
                    breakdown |= bd;
                    unknown.get_or_insert(*b);
                }
            }
        }
        generation = next;
        depth += 1;
    }
    Certificate {
        status: if unknown.is_some() { Status::Unknown } else { Status::Certified },
        boxes_processed: processed,
        max_depth_reached: reached,
        bound_achieved: bound,
        witness: unknown,
        chart_breakdown: breakdown,
    }
}

struct ChartImage {
    comps: [IPoly; 3],
    defect: IPoly,
    /// `defect = q * quotient + remainder`, `q` the conic form.
    quotient: IPoly,
    remainder: IPoly,
}

fn chart_images(map: &HomPolyMap) -> Vec<ChartImage> {
    (0..3)
        .map(|chart| {
            let comps = [0, 1, 2].map(|k| IPoly::from_component(map, k, chart));
            let defect = comps[2].mul(&comps[2]).sub(&comps[0].mul(&comps[1]));
            let (quotient, remainder) = defect.divide_by_conic(chart);
            ChartImage { comps, defect, quotient, remainder }
        })
        .collect()
}

/// Lower bound of `max(|X|, |Y|, |Z|)` of the image lift over the box.
fn image_max_lo(img: &ChartImage, b: &ProjBox) -> f64 {
    img.comps.iter().map(|c| c.enclose(&b.u, &b.v).abs_lo()).fold(0.0, f64::max)
}

/// Certify `F(U(delta))` inside `U(margin)`.
pub fn certify_trapping(map: &HomPolyMap, delta: f64, margin: f64, max_depth: u32) -> Result<Certificate> {
    if !(0.0 < margin && margin < delta && delta < 1.0) {
        return Err(Error::Precondition("need 0 < margin < delta < 1".into()));
    }
    let images = chart_images(map);
    Ok(subdivide(max_depth, |b, last| {
        if b.outside_chart() || box_conic_defect(b).lo > delta {
            return Outcome::Discard;
        }
        let img = &images[b.chart];
        let mlo = image_max_lo(img, b);
        if mlo > 0.0 {
            // Points of the box outside the unit bidisk belong to another
            // chart's cover, so max = 1 here and |q| <= delta on U(delta).
            let q_hi = delta;
            let split = add_up(
                mul_up(q_hi, img.quotient.enclose(&b.u, &b.v).abs_hi()),
                img.remainder.enclose(&b.u, &b.v).abs_hi(),
            );
            let direct = img.defect.enclose(&b.u, &b.v).abs_hi();
            let hi = div_up(direct.min(split), mul_down(mlo, mlo));
            if hi <= margin {
                return Outcome::Pass(hi);
            }
        }
        if let Ok(p) = b.center() {
            if conic_defect(&p) <= delta && conic_defect(&map.eval(&p)) > delta {
                return Outcome::Falsified;
            }
        }
        if last {
            Outcome::Undecided { breakdown: false }
        } else {
            Outcome::Split
        }
    }))
}

/// Certify `|chart_det| < alpha` on `U(delta_n)`, using
/// `|chart_det| = |det DF| * |p|_max^3 / (d * |F(p)|_max^3)` for the lift.
pub fn certify_sj(map: &HomPolyMap, alpha: f64, delta_n: f64, max_depth: u32) -> Result<Certificate> {
    if !(alpha > 0.0 && 0.0 < delta_n && delta_n < 1.0) {
        return Err(Error::Precondition("need alpha > 0 and 0 < delta_n < 1".into()));
    }
    let images = chart_images(map);
    let dets: Vec<IPoly> = (0..3)
        .map(|chart| {
            let m: Vec<Vec<IPoly>> = (0..3)
                .map(|k| (0..3).map(|v| IPoly::from_component_derivative(map, k, v, chart)).collect())
                .collect();
            let minor = |a: usize, b: usize, c: usize, d: usize| m[1][a].mul(&m[2][b]).sub(&m[1][c].mul(&m[2][d]));
            m[0][0]
                .mul(&minor(1, 2, 2, 1))
                .sub(&m[0][1].mul(&minor(0, 2, 2, 0)))
                .add(&m[0][2].mul(&minor(0, 1, 1, 0)))
        })
        .collect();
    let d = map.degree() as f64;
    Ok(subdivide(max_depth, |b, last| {
        if b.outside_chart() || box_conic_defect(b).lo > delta_n {
            return Outcome::Discard;
        }
        let mlo = image_max_lo(&images[b.chart], b);
        let mut breakdown = true;
        if mlo > 0.0 {
            breakdown = false;
            // max = 1 on the part of the box the chart is responsible for
            let num = dets[b.chart].enclose(&b.u, &b.v).abs_hi();
            let hi = div_up(num, mul_down(d, mul_down(mlo, mul_down(mlo, mlo))));
            if hi < alpha {
                return Outcome::Pass(hi);
            }
        }
        if let Ok(p) = b.center() {
            if conic_defect(&p) <= delta_n && map.sj_ratio(&p).map(|s| s >= alpha).unwrap_or(false) {
                return Outcome::Falsified;
            }
        }
        if last {
            Outcome::Undecided { breakdown }
        } else {
            Outcome::Split
        }
    }))
}

/// Conic through `p` from the family `a_i^2 (xy - z^2) = x_i^2 (a_0 a_1 - a_2^2)`,
/// `i` the pivot of `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessConic {
    pub pivot: usize,
    /// Coefficients of `x^2, y^2, z^2, xy, xz, yz`.
    pub coefficients: [C64; 6],
    /// `|equation(p)|`, enclosed.
    pub residual_at_p: f64,
    pub defect_at_p: f64,
    /// Certified upper bound of the conic defect over the whole conic.
    pub defect_bound: f64,
    pub boxes_processed: u64,
    pub verified: bool,
}

pub fn witness_conic(p: &ProjPoint, delta: f64) -> Result<WitnessConic> {
    let defect_at_p = conic_defect(p);
    if !(defect_at_p < delta) {
        return Err(Error::Precondition(format!("conic defect {defect_at_p} is not below {delta}")));
    }
    let i = p.pivot();
    let a = p.coords();
    // kappa = a_0 a_1 - a_2^2 with a_i = 1
    let kappa = a[0] * a[1] - a[2] * a[2];
    let mut coefficients = [C64::new(0.0, 0.0); 6];
    coefficients[3] = ONE;
    coefficients[2] = -ONE;
    coefficients[i] -= kappa;
    // residual of the equation at p, enclosed
    let ab = |k: usize| ComplexBox::point(a[k]);
    let kb = ab(0).mul(&ab(1)).sub(&ab(2).sqr());
    let eq = ab(0).mul(&ab(1)).sub(&ab(2).sqr()).sub(&ab(i).sqr().mul(&kb));
    let residual_at_p = eq.abs().hi;
    // On the conic, z^2 - xy = -kappa x_i^2, so the defect is
    // |kappa| |x_i|^2 / max^2. Over each chart box meeting the conic this is
    // bounded by |kappa| min(1, |x_i|_hi / max_lo)^2; boxes whose equation
    // enclosure excludes zero do not meet it.
    let kappa_abs = kb.abs();
    let mut processed = 0u64;
    let mut bound: f64 = 0.0;
    let mut pending: Vec<(ProjBox, u32)> = (0..3).map(|c| (ProjBox::chart_cover(c), 0)).collect();
    let target = defect_at_p * (1.0 + 1e-6);
    let mut verified = true;
    while let Some((b, depth)) = pending.pop() {
        processed += 1;
        if b.outside_chart() {
            continue;
        }
        let coords = chart_coords(b.chart);
        let x = |k: usize| coords[k].clone();
        let equation = x(0)
            .mul(&x(1))
            .sub(&x(2).mul(&x(2)))
            .sub(&x(i).mul(&x(i)).mul(&IPoly::constant(kappa)));
        if !equation.enclose(&b.u, &b.v).to_box().intersects(&ComplexBox::ZERO) {
            continue;
        }
        let xi_hi = x(i).enclose(&b.u, &b.v).abs_hi();
        let max_lo = 1.0f64.max(b.u.abs().lo).max(b.v.abs().lo);
        // |x_i| never exceeds the max norm
        let r = div_up(xi_hi, max_lo).min(1.0);
        let local = mul_up(kappa_abs.hi, mul_up(r, r));
        if local <= target || local == 0.0 {
            bound = bound.max(local);
        } else if depth < 10 {
            let (l, rr) = b.bisect();
            pending.push((l, depth + 1));
            pending.push((rr, depth + 1));
        } else {
            verified = false;
            bound = bound.max(local);
        }
    }
    verified &= residual_at_p <= 1e-12 && bound < delta;
    Ok(WitnessConic { pivot: i, coefficients, residual_at_p, defect_at_p, defect_bound: bound, boxes_processed: processed, verified })
}

fn chart_coords(chart: usize) -> [IPoly; 3] {
    let (a, _) = chart_others(chart);
    [0, 1, 2].map(|i| {
        if i == chart {
            IPoly::constant(ONE)
        } else if i == a {
            IPoly::monomial(1, 0, ONE)
        } else {
            IPoly::monomial(0, 1, ONE)
        }
    })
}

/// Evaluate a witness conic's equation at a raw point.
pub fn conic_equation(coefficients: &[C64; 6], v: &[C64; 3]) -> C64 {
    let [x, y, z] = *v;
    let m = [x * x, y * y, z * z, x * y, x * z, y * z];
    coefficients.iter().zip(m).map(|(c, t)| c * t).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{family_ftheta, power_map};
    use crate::projgeom::random_point_in_region;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn ftheta(t: f64) -> HomPolyMap {
        family_ftheta(C64::new(t, 0.0)).unwrap()
    }

    #[test]
    fn defect_of_point_boxes() {
        let b = ProjBox::point(&ProjPoint::real(1.0, 1.0, 1.0));
        let d = box_conic_defect(&b);
        assert!(d.lo <= 0.0 && d.hi >= 0.0 && d.width() < 1e-15);
        let d = box_conic_defect(&ProjBox::point(&ProjPoint::real(0.0, 0.0, 1.0)));
        assert!(d.contains(1.0) && d.width() < 1e-15);
    }

    #[test]
    fn defect_of_small_box_contains_samples() {
        let w = RealInterval::new(0.95, 1.05);
        let z = RealInterval::new(-0.05, 0.05);
        let b = ProjBox { chart: 0, u: ComplexBox::new(w, z), v: ComplexBox::new(w, z) };
        let d = box_conic_defect(&b);
        assert!(d.contains_zero() && d.hi < 0.5);
        let mut rng = seeded(41);
        for _ in 0..1000 {
            let u = C64::new(rng.random_range(0.95..1.05), rng.random_range(-0.05..0.05));
            let v = C64::new(rng.random_range(0.95..1.05), rng.random_range(-0.05..0.05));
            let p = crate::projgeom::from_chart(&AffinePair { chart: 0, u, v }).unwrap();
            assert!(d.contains(conic_defect(&p)));
        }
    }

    #[test]
    fn bisection_halves_widest_dimension() {
        let b = ProjBox::chart_cover(1);
        let (l, r) = b.bisect();
        assert_eq!(l.u.re.hi, 0.0);
        assert_eq!(r.u.re.lo, 0.0);
        assert_eq!(l.v, b.v);
    }

    #[test]
    fn ftheta_small_theta_traps() {
        let f = ftheta(0.01);
        let cert = certify_trapping(&f, 0.05, 0.025, 14).unwrap();
        assert_eq!(cert.status, Status::Certified, "{cert:?}");
        assert!(cert.bound_achieved <= 0.025);
        let mut rng = seeded(42);
        for _ in 0..10_000 {
            let p = random_point_in_region(&mut rng, 0.05);
            assert!(conic_defect(&f.eval(&p)) <= 0.025 + 1e-9);
        }
    }

    #[test]
    fn squaring_map_is_falsified() {
        let cert = certify_trapping(&power_map(2), 0.05, 0.025, 14).unwrap();
        assert_eq!(cert.status, Status::Falsified);
        let p = cert.witness.unwrap().center().unwrap();
        assert!(conic_defect(&p) <= 0.05 && conic_defect(&power_map(2).eval(&p)) > 0.05);
    }

    #[test]
    fn large_theta_does_not_certify() {
        let cert = certify_trapping(&ftheta(0.9), 0.05, 0.025, 10).unwrap();
        assert_ne!(cert.status, Status::Certified);
    }

    #[test]
    fn jacobian_bound() {
        let f = ftheta(0.01);
        assert_eq!(certify_sj(&f, 0.2, 0.05, 18).unwrap().status, Status::Certified);
        let low = certify_sj(&f, 0.01, 0.05, 14).unwrap();
        assert_eq!(low.status, Status::Falsified);
        let p = low.witness.unwrap().center().unwrap();
        assert!(f.sj_ratio(&p).unwrap() >= 0.01);
        assert_eq!(certify_sj(&power_map(2), 3.0, 0.05, 14).unwrap().status, Status::Falsified);
    }

    #[test]
    fn witness_conics() {
        let w = witness_conic(&ProjPoint::real(1.0, 1.0, 1.0), 0.05).unwrap();
        assert!(w.verified);
        assert_eq!(w.defect_bound, 0.0);
        let w = witness_conic(&ProjPoint::real(1.0, 0.0, 0.0), 0.05).unwrap();
        assert_eq!(w.coefficients, [C64::new(0.0, 0.0), C64::new(0.0, 0.0), -ONE, ONE, C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        // defect delta / 2 in chart 0
        let p = crate::projgeom::from_chart(&AffinePair { chart: 0, u: C64::new(0.81, 0.0), v: C64::new((0.81f64 + 0.025).sqrt(), 0.0) }).unwrap();
        assert!((conic_defect(&p) - 0.025).abs() < 1e-12);
        let w = witness_conic(&p, 0.05).unwrap();
        assert!(w.verified && w.defect_bound <= 0.025 * (1.0 + 1e-6));
        assert!(conic_equation(&w.coefficients, &p.coords()).norm() < 1e-12);
    }
}
