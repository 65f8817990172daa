//! Bivariate polynomials with interval coefficients and their enclosures
//! over boxes via a Taylor shift to the box center.

use super::interval::{add_up, mul_up, sub_down, ComplexBox, RealInterval};
use crate::endo::HomPolyMap;
use crate::projgeom::{chart_others, C64};

/// `sum c[j][k] u^j v^k`, stored densely up to total degree `deg`.
#[derive(Debug, Clone, PartialEq)]
pub struct IPoly {
    deg: usize,
    c: Vec<Vec<ComplexBox>>,
}

/// Value enclosure `center + disk(radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub center: ComplexBox,
    pub radius: f64,
}

impl Enclosure {
    pub fn abs_hi(&self) -> f64 {
        add_up(self.center.abs().hi, self.radius)
    }

    pub fn abs_lo(&self) -> f64 {
        sub_down(self.center.abs().lo, self.radius).max(0.0)
    }

    pub fn abs(&self) -> RealInterval {
        RealInterval { lo: self.abs_lo(), hi: self.abs_hi() }
    }

    pub fn to_box(&self) -> ComplexBox {
        self.center.inflate(self.radius)
    }
}

impl IPoly {
    pub fn zero(deg: usize) -> Self {
        Self { deg, c: vec![vec![ComplexBox::ZERO; deg + 1]; deg + 1] }
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn coeff(&self, j: usize, k: usize) -> ComplexBox {
        if j + k <= self.deg {
            self.c[j][k]
        } else {
            ComplexBox::ZERO
        }
    }

    fn add_term(&mut self, j: usize, k: usize, a: ComplexBox) {
        self.c[j][k] = self.c[j][k].add(&a);
    }

    pub fn constant(a: C64) -> Self {
        let mut p = Self::zero(0);
        p.c[0][0] = ComplexBox::point(a);
        p
    }

    /// Component `k` of the map in chart coordinates: the chart coordinate
    /// is set to 1 and the other two become `(u, v)` in increasing order.
    pub fn from_component(map: &HomPolyMap, k: usize, chart: usize) -> Self {
        let d = map.degree() as usize;
        let mut p = Self::zero(d);
        let (a, b) = chart_others(chart);
        for m in &map.components()[k] {
            p.add_term(m.exps[a] as usize, m.exps[b] as usize, ComplexBox::point(m.coeff));
        }
        p
    }

    /// Partial derivative `dF_k / dx_m` of the homogeneous component, in
    /// chart coordinates.
    pub fn from_component_derivative(map: &HomPolyMap, k: usize, var: usize, chart: usize) -> Self {
        let d = map.degree() as usize;
        let mut p = Self::zero(d.saturating_sub(1));
        let (a, b) = chart_others(chart);
        for m in &map.components()[k] {
            let e = m.exps[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps;
            exps[var] -= 1;
            p.add_term(exps[a] as usize, exps[b] as usize, ComplexBox::point(m.coeff * e as f64));
        }
        p
    }

    /// Monomial `u^j v^k` with coefficient `a`.
    pub fn monomial(j: usize, k: usize, a: C64) -> Self {
        let mut p = Self::zero(j + k);
        p.c[j][k] = ComplexBox::point(a);
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        let deg = self.deg.max(o.deg);
        let mut p = Self::zero(deg);
        for j in 0..=deg {
            for k in 0..=deg - j {
                p.c[j][k] = self.coeff(j, k).add(&o.coeff(j, k));
            }
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self { deg: self.deg, c: self.c.iter().map(|r| r.iter().map(|a| a.neg()).collect()).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Self::zero(self.deg + o.deg);
        for j1 in 0..=self.deg {
            for k1 in 0..=self.deg - j1 {
                let a = self.c[j1][k1];
                if a == ComplexBox::ZERO {
                    continue;
                }
                for j2 in 0..=o.deg {
                    for k2 in 0..=o.deg - j2 {
                        let b = o.c[j2][k2];
                        if b == ComplexBox::ZERO {
                            continue;
                        }
                        p.add_term(j1 + j2, k1 + k2, a.mul(&b));
                    }
                }
            }
        }
        p
    }

    /// `self = q S + R` with `q` the conic form `z^2 - xy` in the chart:
    /// `v^2 - u` in charts 0 and 1, `1 - uv` in chart 2. `R` is reduced
    /// (no `v^2` factor, resp. no mixed `uv` factor).
    pub fn divide_by_conic(&self, chart: usize) -> (IPoly, IPoly) {
        let n = self.deg;
        let mut r = self.clone();
        let mut s = Self::zero(n.saturating_sub(2));
        if chart < 2 {
            for k in (2..=n).rev() {
                for j in 0..=n - k {
                    let c = r.c[j][k];
                    if c == ComplexBox::ZERO {
                        continue;
                    }
                    s.add_term(j, k - 2, c);
                    r.add_term(j + 1, k - 2, c);
                    r.c[j][k] = ComplexBox::ZERO;
                }
            }
        } else {
            for t in (2..=n).rev() {
                for j in 1..t {
                    let k = t - j;
                    let c = r.c[j][k];
                    if c == ComplexBox::ZERO {
                        continue;
                    }
                    s.add_term(j - 1, k - 1, c.neg());
                    r.add_term(j - 1, k - 1, c);
                    r.c[j][k] = ComplexBox::ZERO;
                }
            }
        }
        (s, r)
    }

    /// Value at a point, enclosed.
    pub fn eval_point(&self, u: C64, v: C64) -> ComplexBox {
        let (bu, bv) = (ComplexBox::point(u), ComplexBox::point(v));
        let mut acc = ComplexBox::ZERO;
        for j in (0..=self.deg).rev() {
            let mut row = ComplexBox::ZERO;
            for k in (0..=self.deg - j).rev() {
                row = row.mul(&bv).add(&self.c[j][k]);
            }
            acc = acc.mul(&bu).add(&row);
        }
        acc
    }

    /// Enclosure over `{u in bu, v in bv}`: shift to the box center, keep
    /// the constant term as a box and bound the rest by the radii.
    pub fn enclose(&self, bu: &ComplexBox, bv: &ComplexBox) -> Enclosure {
        let (cu, cv) = (bu.mid(), bv.mid());
        let (ru, rv) = (bu.radius(), bv.radius());
        let shifted = self.shift(cu, cv);
        let mut radius = 0.0;
        let mut pu = 1.0;
        for j in 0..=self.deg {
            let mut pv = pu;
            for k in 0..=self.deg - j {
                if j + k > 0 {
                    radius = add_up(radius, mul_up(shifted.c[j][k].abs().hi, pv));
                }
                pv = mul_up(pv, rv);
            }
            pu = mul_up(pu, ru);
        }
        Enclosure { center: shifted.c[0][0], radius }
    }

    /// Coefficients of `p(cu + h, cv + g)` in `(h, g)`.
    fn shift(&self, cu: C64, cv: C64) -> Self {
        let n = self.deg;
        let mut p = self.clone();
        let bu = ComplexBox::point(cu);
        let bv = ComplexBox::point(cv);
        // Taylor shift in u for each fixed power of v (synthetic division)
        for k in 0..=n {
            let m = n - k;
            for i in 0..m {
                for j in (i..m).rev() {
                    let t = p.c[j + 1][k].mul(&bu);
                    p.c[j][k] = p.c[j][k].add(&t);
                }
            }
        }
        // then in v for each fixed power of h
        for j in 0..=n {
            let m = n - j;
            for i in 0..m {
                for k in (i..m).rev() {
                    let t = p.c[j][k + 1].mul(&bv);
                    p.c[j][k] = p.c[j][k].add(&t);
                }
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::family_ftheta;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn sample_box(rng: &mut crate::rng::Rng, w: f64) -> ComplexBox {
        let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        ComplexBox::new(RealInterval::new(c.re, c.re + w), RealInterval::new(c.im, c.im + w))
    }

    #[test]
    fn shift_preserves_values() {
        let f = family_ftheta(C64::new(0.3, 0.1)).unwrap();
        let z = IPoly::from_component(&f, 2, 0);
        let q = z.mul(&z).sub(&IPoly::from_component(&f, 0, 0).mul(&IPoly::from_component(&f, 1, 0)));
        let (u, v) = (C64::new(0.3, -0.2), C64::new(-0.5, 0.4));
        let direct = q.eval_point(u, v);
        let shifted = q.shift(C64::new(0.25, 0.0), C64::new(-0.5, 0.5));
        let via = shifted.eval_point(u - C64::new(0.25, 0.0), v - C64::new(-0.5, 0.5));
        assert!(direct.intersects(&via));
    }

    #[test]
    fn enclosures_contain_sampled_values() {
        let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
        let mut rng = seeded(31);
        for chart in 0..3 {
            let z = IPoly::from_component(&f, 2, chart);
            let q = z.mul(&z).sub(&IPoly::from_component(&f, 0, chart).mul(&IPoly::from_component(&f, 1, chart)));
            for _ in 0..1000 {
                let w = if rng.random::<bool>() { 0.1 } else { 1e-6 };
                let (bu, bv) = (sample_box(&mut rng, w), sample_box(&mut rng, w));
                let enc = q.enclose(&bu, &bv).to_box();
                for _ in 0..3 {
                    let u = C64::new(bu.re.lo + w * rng.random::<f64>(), bu.im.lo + w * rng.random::<f64>());
                    let v = C64::new(bv.re.lo + w * rng.random::<f64>(), bv.im.lo + w * rng.random::<f64>());
                    if bu.contains(u) && bv.contains(v) {
                        assert!(enc.intersects(&q.eval_point(u, v)));
                    }
                }
            }
        }
    }

    #[test]
    fn conic_division_is_exact_for_ftheta() {
        let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
        for chart in 0..3 {
            let z = IPoly::from_component(&f, 2, chart);
            let q = z.mul(&z).sub(&IPoly::from_component(&f, 0, chart).mul(&IPoly::from_component(&f, 1, chart)));
            let (s, r) = q.divide_by_conic(chart);
            for j in 0..=r.degree() {
                for k in 0..=r.degree() - j {
                    assert!(r.coeff(j, k).abs().hi < 1e-15);
                }
            }
            // recombine at a point
            let (u, v) = (C64::new(0.3, 0.1), C64::new(-0.2, 0.7));
            let conic = if chart < 2 { v * v - u } else { C64::new(1.0, 0.0) - u * v };
            let back = s.eval_point(u, v).mul(&ComplexBox::point(conic)).add(&r.eval_point(u, v));
            assert!(back.inflate(1e-14).intersects(&q.eval_point(u, v)));
        }
    }

    #[test]
    fn derivative_polynomials() {
        let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
        // d/dz of the third component is 2 theta z; in chart 0, z = v
        let dz = IPoly::from_component_derivative(&f, 2, 2, 0);
        let val = dz.eval_point(C64::new(0.0, 0.0), C64::new(0.5, 0.0));
        assert!(val.contains(C64::new(0.01, 0.0)));
    }
}
