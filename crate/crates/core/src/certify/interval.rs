//! Outward-rounded real intervals and rectangular complex boxes.
//!
//! Directed rounding is emulated exactly: every primitive computes the
//! round-to-nearest result together with its exact error term (two-sum,
//! fused multiply-add residuals) and steps one ulp outward only when the
//! rounded value lies on the wrong side of the exact one.

use serde::{Deserialize, Serialize};

use crate::projgeom::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealInterval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::MAX
    } else {
        x.next_down()
    }
}

fn up(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::MIN
    } else {
        x.next_up()
    }
}

/// `s` is the rounded value and `err` the sign of `exact - s`.
fn round_down(s: f64, err: f64) -> f64 {
    if err < 0.0 || err.is_nan() {
        down(s)
    } else {
        s
    }
}

fn round_up(s: f64, err: f64) -> f64 {
    if err > 0.0 || err.is_nan() {
        up(s)
    } else {
        s
    }
}

fn sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_dn(a: f64, b: f64) -> f64 {
    let s = a + b;
    round_down(s, sum_err(a, b, s))
}

fn add_upr(a: f64, b: f64) -> f64 {
    let s = a + b;
    round_up(s, sum_err(a, b, s))
}

fn mul_dn(a: f64, b: f64) -> f64 {
    let p = a * b;
    round_down(p, a.mul_add(b, -p))
}

fn mul_upr(a: f64, b: f64) -> f64 {
    let p = a * b;
    round_up(p, a.mul_add(b, -p))
}

/// Sign of `a / b - q`.
fn div_err(a: f64, b: f64, q: f64) -> f64 {
    let r = q.mul_add(b, -a); // q b - a, exact
    if r == 0.0 {
        0.0
    } else if (r > 0.0) == (b > 0.0) {
        -1.0
    } else {
        1.0
    }
}

fn div_dn(a: f64, b: f64) -> f64 {
    let q = a / b;
    round_down(q, div_err(a, b, q))
}

fn div_upr(a: f64, b: f64) -> f64 {
    let q = a / b;
    round_up(q, div_err(a, b, q))
}

fn sqrt_dn(x: f64) -> f64 {
    let s = x.sqrt();
    round_down(s, -s.mul_add(s, -x))
}

fn sqrt_upr(x: f64) -> f64 {
    let s = x.sqrt();
    round_up(s, -s.mul_add(s, -x))
}

impl RealInterval {
    pub const ZERO: RealInterval = RealInterval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval with lo > hi");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    /// Upper bound of the half width.
    pub fn radius(&self) -> f64 {
        let m = self.mid();
        add_upr(self.hi, -m).max(add_upr(m, -self.lo))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn intersects(&self, o: &Self) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn hull(&self, o: &Self) -> Self {
        Self { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    /// Largest absolute value.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { lo: add_dn(self.lo, o.lo), hi: add_upr(self.hi, o.hi) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { lo: add_dn(self.lo, -o.hi), hi: add_upr(self.hi, -o.lo) }
    }

    pub fn neg(&self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let pairs = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = pairs.iter().map(|&(a, b)| mul_dn(a, b)).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|&(a, b)| mul_upr(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Self { lo, hi }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.mul(&Self::point(s))
    }

    pub fn sqr(&self) -> Self {
        let (a, b) = (self.mig(), self.mag());
        Self { lo: mul_dn(a, a).max(0.0), hi: mul_upr(b, b) }
    }

    /// Square root of the nonnegative part.
    pub fn sqrt(&self) -> Self {
        let lo = self.lo.max(0.0);
        let hi = self.hi.max(0.0);
        Self { lo: sqrt_dn(lo).max(0.0), hi: sqrt_upr(hi) }
    }

    /// Division by an interval not containing zero.
    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.contains_zero() {
            return None;
        }
        let pairs = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let lo = pairs.iter().map(|&(a, b)| div_dn(a, b)).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|&(a, b)| div_upr(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Some(Self { lo, hi })
    }

    pub fn split(&self) -> (Self, Self) {
        let m = self.mid();
        (Self { lo: self.lo, hi: m }, Self { lo: m, hi: self.hi })
    }
}

/// Directed scalar operations for bound bookkeeping.
pub fn add_up(a: f64, b: f64) -> f64 {
    add_upr(a, b)
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    mul_upr(a, b)
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    mul_dn(a, b).max(0.0)
}

pub fn div_up(a: f64, b: f64) -> f64 {
    div_upr(a, b)
}

pub fn div_down(a: f64, b: f64) -> f64 {
    div_dn(a, b).max(0.0)
}

pub fn sub_down(a: f64, b: f64) -> f64 {
    add_dn(a, -b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexBox {
    pub re: RealInterval,
    pub im: RealInterval,
}

impl ComplexBox {
    pub const ZERO: ComplexBox = ComplexBox { re: RealInterval::ZERO, im: RealInterval::ZERO };

    pub fn new(re: RealInterval, im: RealInterval) -> Self {
        Self { re, im }
    }

    pub fn point(z: C64) -> Self {
        Self { re: RealInterval::point(z.re), im: RealInterval::point(z.im) }
    }

    pub fn mid(&self) -> C64 {
        C64::new(self.re.mid(), self.im.mid())
    }

    /// Upper bound of the distance from `mid()` to any point of the box.
    pub fn radius(&self) -> f64 {
        let (a, b) = (self.re.radius(), self.im.radius());
        sqrt_upr(add_upr(mul_upr(a, a), mul_upr(b, b)))
    }

    pub fn contains(&self, z: C64) -> bool {
        self.re.contains(z.re) && self.im.contains(z.im)
    }

    pub fn intersects(&self, o: &Self) -> bool {
        self.re.intersects(&o.re) && self.im.intersects(&o.im)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { re: self.re.add(&o.re), im: self.im.add(&o.im) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { re: self.re.sub(&o.re), im: self.im.sub(&o.im) }
    }

    pub fn neg(&self) -> Self {
        Self { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn sqr(&self) -> Self {
        Self { re: self.re.sqr().sub(&self.im.sqr()), im: self.re.mul(&self.im).scale(2.0) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { re: self.re.scale(s), im: self.im.scale(s) }
    }

    /// Enclosure of the modulus over the box.
    pub fn abs(&self) -> RealInterval {
        self.re.sqr().add(&self.im.sqr()).sqrt()
    }

    /// Box widened by a disk of radius `r`.
    pub fn inflate(&self, r: f64) -> Self {
        let ri = RealInterval { lo: -r, hi: r };
        Self { re: self.re.add(&ri), im: self.im.add(&ri) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng as _;

    /// Exact `a + b = s + e` (two-sum).
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    fn encloses(iv: &RealInterval, (s, e): (f64, f64)) -> bool {
        (iv.lo < s || (iv.lo == s && e >= 0.0)) && (s < iv.hi || (s == iv.hi && e <= 0.0))
    }

    fn random_interval(rng: &mut crate::rng::Rng) -> RealInterval {
        let a: f64 = rng.random_range(-3.0..3.0);
        let w: f64 = rng.random_range(0.0..1.0) * if rng.random::<bool>() { 1e-12 } else { 1.0 };
        RealInterval::new(a, a + w)
    }

    #[test]
    fn primitives_enclose_exact_results() {
        let mut rng = seeded(21);
        for _ in 0..10_000 {
            let a = random_interval(&mut rng);
            let b = random_interval(&mut rng);
            let x = a.lo + (a.hi - a.lo) * rng.random::<f64>();
            let y = b.lo + (b.hi - b.lo) * rng.random::<f64>();
            if !(a.contains(x) && b.contains(y)) {
                continue;
            }
            assert!(encloses(&a.add(&b), two_sum(x, y)));
            assert!(encloses(&a.sub(&b), two_sum(x, -y)));
            assert!(encloses(&a.mul(&b), two_prod(x, y)));
            assert!(encloses(&a.sqr(), two_prod(x, x)));
            // sqrt: s^2 compared with the argument using an exact product
            let s = a.sqrt();
            if x >= 0.0 {
                let (p_lo, e_lo) = two_prod(s.lo, s.lo);
                let (p_hi, e_hi) = two_prod(s.hi, s.hi);
                assert!(p_lo < x || (p_lo == x && e_lo <= 0.0));
                assert!(p_hi > x || (p_hi == x && e_hi >= 0.0));
            }
        }
    }

    #[test]
    fn complex_box_operations_contain_samples() {
        let mut rng = seeded(22);
        for _ in 0..10_000 {
            let a = ComplexBox::new(random_interval(&mut rng), random_interval(&mut rng));
            let b = ComplexBox::new(random_interval(&mut rng), random_interval(&mut rng));
            let pick = |bx: &ComplexBox, rng: &mut crate::rng::Rng| {
                C64::new(
                    bx.re.lo + bx.re.width() * rng.random::<f64>(),
                    bx.im.lo + bx.im.width() * rng.random::<f64>(),
                )
            };
            let (x, y) = (pick(&a, &mut rng), pick(&b, &mut rng));
            if !(a.contains(x) && b.contains(y)) {
                continue;
            }
            // the rigorous point enclosure must meet the box enclosure
            let px = ComplexBox::point(x);
            let py = ComplexBox::point(y);
            assert!(a.mul(&b).intersects(&px.mul(&py)));
            assert!(a.add(&b).intersects(&px.add(&py)));
            assert!(a.sqr().intersects(&px.sqr()));
            assert!(a.abs().intersects(&px.abs()));
        }
    }

    #[test]
    fn point_operations_are_tight() {
        let a = RealInterval::point(1.0);
        let s = a.sub(&a);
        assert!(s.lo <= 0.0 && s.hi >= 0.0 && s.width() < 1e-300);
        assert!(RealInterval::new(-1.0, 2.0).div(&RealInterval::new(-1.0, 1.0)).is_none());
    }
}
