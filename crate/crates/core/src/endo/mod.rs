//! Homogeneous polynomial endomorphisms of the projective plane.

mod preimage;
mod probe;

pub use preimage::preimages;
pub use probe::{small_topdegree_probe, TopDegreeReport};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det3, M2};
use crate::projgeom::{chart_others, max_norm, normalize, to_chart, ProjPoint, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "MonomialRepr", into = "MonomialRepr")]
pub struct Monomial {
    pub exps: [u32; 3],
    pub coeff: C64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialRepr {
    exps: [u32; 3],
    re: f64,
    im: f64,
}

impl From<MonomialRepr> for Monomial {
    fn from(m: MonomialRepr) -> Self {
        Monomial { exps: m.exps, coeff: C64::new(m.re, m.im) }
    }
}

impl From<Monomial> for MonomialRepr {
    fn from(m: Monomial) -> Self {
        MonomialRepr { exps: m.exps, re: m.coeff.re, im: m.coeff.im }
    }
}

impl Monomial {
    pub fn new(exps: [u32; 3], coeff: C64) -> Self {
        Self { exps, coeff }
    }

    pub fn real(exps: [u32; 3], coeff: f64) -> Self {
        Self { exps, coeff: C64::new(coeff, 0.0) }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

/// Built-in families with known restricted dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `[P : Q : z^d]`; `power_on_line` is set when `P(x,y,0) = x^d` and
    /// `Q(x,y,0) = y^d`, so the line `z = 0` carries `w -> w^d`.
    F0 { power_on_line: bool },
    /// `[x^2 : y^2 : xy + theta (z^2 - xy)]`, with invariant conic `z^2 = xy`.
    Ftheta { theta: C64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct HomPolyMap {
    degree: u32,
    components: [Vec<Monomial>; 3],
    label: String,
    family: Family,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRepr {
    degree: u32,
    components: Vec<Vec<Monomial>>,
    label: String,
}

impl TryFrom<MapRepr> for HomPolyMap {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        let comps: [Vec<Monomial>; 3] = r
            .components
            .try_into()
            .map_err(|_| Error::InvalidInput("a map has exactly three components".into()))?;
        HomPolyMap::new(r.degree, comps, r.label)
    }
}

impl From<HomPolyMap> for MapRepr {
    fn from(m: HomPolyMap) -> Self {
        MapRepr { degree: m.degree, components: m.components.to_vec(), label: m.label }
    }
}

/// Derivative data at a point; see [`HomPolyMap::jacobian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianData {
    /// Determinant of the 3x3 derivative of the lift at the normalized
    /// representative.
    pub lift_det: C64,
    /// Chart derivative from the pivot chart of `p` to the pivot chart of `f(p)`.
    pub chart_jac: M2,
    pub chart_det: C64,
    pub src_chart: usize,
    pub dst_chart: usize,
}

fn pow_table(v: C64, d: u32) -> Vec<C64> {
    let mut t = Vec::with_capacity(d as usize + 1);
    let mut acc = ONE;
    for _ in 0..=d {
        t.push(acc);
        acc *= v;
    }
    t
}

impl HomPolyMap {
    /// Validate and build a map. Non-degeneracy is checked by evaluating the
    /// lift on 64 random unit vectors and rejecting any image of norm below
    /// `1e-12`.
    pub fn new(degree: u32, components: [Vec<Monomial>; 3], label: impl Into<String>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidInput("degree must be positive".into()));
        }
        for comp in &components {
            for m in comp {
                if m.degree() != degree {
                    return Err(Error::DegreeMismatch { expected: degree, found: m.degree() });
                }
                if !m.coeff.re.is_finite() || !m.coeff.im.is_finite() {
                    return Err(Error::InvalidInput("non-finite coefficient".into()));
                }
            }
        }
        let mut map = HomPolyMap { degree, components, label: label.into(), family: Family::Custom };
        map.family = map.detect_family();
        if map.family == Family::Custom {
            map.check_nondegenerate()?;
        }
        Ok(map)
    }

    fn check_nondegenerate(&self) -> Result<()> {
        let mut rng = crate::rng::seeded(0x5e_ed0f_d1a6);
        for _ in 0..64 {
            let raw = [0; 3].map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let n = crate::projgeom::euclid_norm(&raw);
            let v = raw.map(|c| c / n);
            if crate::projgeom::euclid_norm(&self.eval_lift(&v)) < 1e-12 {
                return Err(Error::DegenerateParameter(
                    "components have a common zero (probabilistic check)".into(),
                ));
            }
        }
        Ok(())
    }

    fn detect_family(&self) -> Family {
        let d = self.degree;
        let simplify = |c: &[Monomial]| -> Vec<Monomial> {
            let mut out: Vec<Monomial> = Vec::new();
            for m in c {
                if let Some(e) = out.iter_mut().find(|e| e.exps == m.exps) {
                    e.coeff += m.coeff;
                } else {
                    out.push(*m);
                }
            }
            out.retain(|m| m.coeff != ZERO);
            out
        };
        let comps = [0, 1, 2].map(|k| simplify(&self.components[k]));
        let is_single = |c: &[Monomial], e: [u32; 3]| c.len() == 1 && c[0].exps == e && c[0].coeff == ONE;
        if is_single(&comps[2], [0, 0, d]) {
            let on_line = |c: &[Monomial], e: [u32; 3]| {
                let restricted: Vec<&Monomial> = c.iter().filter(|m| m.exps[2] == 0).collect();
                restricted.len() == 1 && restricted[0].exps == e && restricted[0].coeff == ONE
            };
            let power = on_line(&comps[0], [d, 0, 0]) && on_line(&comps[1], [0, d, 0]);
            return Family::F0 { power_on_line: power };
        }
        if d == 2 && is_single(&comps[0], [2, 0, 0]) && is_single(&comps[1], [0, 2, 0]) {
            // (1 - theta) xy + theta z^2
            let z = &comps[2];
            let get = |e: [u32; 3]| z.iter().find(|m| m.exps == e).map_or(ZERO, |m| m.coeff);
            let theta = get([0, 0, 2]);
            let xy = get([1, 1, 0]);
            if z.iter().all(|m| m.exps == [0, 0, 2] || m.exps == [1, 1, 0])
                && theta != ZERO
                && (xy + theta - ONE).norm() < 1e-15
            {
                return Family::Ftheta { theta };
            }
        }
        Family::Custom
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn components(&self) -> &[Vec<Monomial>; 3] {
        &self.components
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> Option<C64> {
        match self.family {
            Family::Ftheta { theta } => Some(theta),
            _ => None,
        }
    }

    /// The same map with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: C64) -> Result<Self> {
        let comps = self.components.clone().map(|c| {
            c.into_iter().map(|m| Monomial::new(m.exps, m.coeff * factor)).collect()
        });
        HomPolyMap::new(self.degree, comps, format!("{}*{}", self.label, factor))
    }

    pub fn eval_lift(&self, v: &[C64; 3]) -> [C64; 3] {
        let d = self.degree;
        let px = pow_table(v[0], d);
        let py = pow_table(v[1], d);
        let pz = pow_table(v[2], d);
        let mut out = [ZERO; 3];
        for (k, comp) in self.components.iter().enumerate() {
            let mut acc = ZERO;
            for m in comp {
                let [i, j, l] = m.exps;
                acc += m.coeff * px[i as usize] * py[j as usize] * pz[l as usize];
            }
            out[k] = acc;
        }
        out
    }

    /// Derivative of the lift: `out[k][m] = dF_k / dv_m`.
    pub fn lift_derivative(&self, v: &[C64; 3]) -> [[C64; 3]; 3] {
        let d = self.degree;
        let p = [pow_table(v[0], d), pow_table(v[1], d), pow_table(v[2], d)];
        let mut out = [[ZERO; 3]; 3];
        for (k, comp) in self.components.iter().enumerate() {
            for m in comp {
                for var in 0..3 {
                    let e = m.exps[var];
                    if e == 0 {
                        continue;
                    }
                    let mut term = m.coeff * e as f64;
                    for w in 0..3 {
                        let ew = if w == var { e - 1 } else { m.exps[w] };
                        term *= p[w][ew as usize];
                    }
                    out[k][var] += term;
                }
            }
        }
        out
    }

    pub fn eval(&self, p: &ProjPoint) -> ProjPoint {
        normalize(self.eval_lift(&p.coords())).expect("non-degenerate map has no common zero")
    }

    pub fn iterate(&self, p: &ProjPoint, n: usize) -> ProjPoint {
        let mut q = *p;
        for _ in 0..n {
            q = self.eval(&q);
        }
        q
    }

    /// Derivative of the chart expression of the map from chart `src` at `p`
    /// to chart `dst` at `f(p)`.
    pub fn chart_jacobian(&self, p: &ProjPoint, src: usize, dst: usize) -> Result<M2> {
        let a = to_chart(p, src)?;
        let lift = a.lift();
        let f = self.eval_lift(&lift);
        let ft = f[dst];
        if ft.norm() < crate::projgeom::CHART_FLOOR * max_norm(&f) {
            return Err(Error::NearChartBoundary { chart: dst, modulus: ft.norm() / max_norm(&f) });
        }
        let df = self.lift_derivative(&lift);
        let (i, j) = chart_others(src);
        let (a_idx, b_idx) = chart_others(dst);
        let row = |k: usize| -> [C64; 2] {
            let g = f[k] / ft;
            [(df[k][i] - g * df[dst][i]) / ft, (df[k][j] - g * df[dst][j]) / ft]
        };
        Ok(M2([row(a_idx), row(b_idx)]))
    }

    pub fn jacobian(&self, p: &ProjPoint) -> Result<JacobianData> {
        let src = p.pivot();
        let dst = self.eval(p).pivot();
        let chart_jac = self.chart_jacobian(p, src, dst)?;
        let lift_det = det3(&self.lift_derivative(&p.coords()));
        Ok(JacobianData { lift_det, chart_jac, chart_det: chart_jac.det(), src_chart: src, dst_chart: dst })
    }

    /// `|det|` of the chart derivative between max-normalized
    /// representatives; the smallness predicate at level `alpha` is
    /// `sj_ratio < alpha`.
    pub fn sj_ratio(&self, p: &ProjPoint) -> Result<f64> {
        Ok(self.jacobian(p)?.chart_det.norm())
    }
}

/// `[P : Q : z^d]`.
pub fn family_f0(p: Vec<Monomial>, q: Vec<Monomial>, degree: u32) -> Result<HomPolyMap> {
    let label = format!("f0(d={degree})");
    HomPolyMap::new(degree, [p, q, vec![Monomial::real([0, 0, degree], 1.0)]], label)
}

/// `[x^d : y^d : z^d]`.
pub fn power_map(degree: u32) -> HomPolyMap {
    family_f0(
        vec![Monomial::real([degree, 0, 0], 1.0)],
        vec![Monomial::real([0, degree, 0], 1.0)],
        degree,
    )
    .expect("power map is valid")
}

/// `[x^2 : y^2 : xy + theta (z^2 - xy)]`.
pub fn family_ftheta(theta: C64) -> Result<HomPolyMap> {
    if theta == ZERO {
        return Err(Error::DegenerateParameter("theta = 0 leaves [0:0:1] as a common zero".into()));
    }
    if !theta.re.is_finite() || !theta.im.is_finite() {
        return Err(Error::InvalidInput("non-finite theta".into()));
    }
    HomPolyMap::new(
        2,
        [
            vec![Monomial::real([2, 0, 0], 1.0)],
            vec![Monomial::real([0, 2, 0], 1.0)],
            vec![Monomial::new([1, 1, 0], ONE - theta), Monomial::new([0, 0, 2], theta)],
        ],
        format!("Ftheta(theta={theta})"),
    )
}

/// `[x^2 : y^2 : x^2 + theta (z^2 - x^2)]`: in the chart `x = 1` it is the
/// product `(u, v) -> (u^2, 1 + theta (v^2 - 1))`, a saddle at `[1:1:1]`
/// with multipliers `2` and `2 theta` whose eigenlines are invariant.
pub fn product_saddle(theta: C64) -> Result<HomPolyMap> {
    if theta == ZERO || !theta.re.is_finite() || !theta.im.is_finite() {
        return Err(Error::DegenerateParameter("theta must be finite and nonzero".into()));
    }
    HomPolyMap::new(
        2,
        [
            vec![Monomial::real([2, 0, 0], 1.0)],
            vec![Monomial::real([0, 2, 0], 1.0)],
            vec![Monomial::new([2, 0, 0], ONE - theta), Monomial::new([0, 0, 2], theta)],
        ],
        format!("product-saddle(theta={theta})"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projgeom::{conic_defect, conic_point, dist};
    use std::f64::consts::PI;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn ftheta() -> HomPolyMap {
        family_ftheta(r(0.01)).unwrap()
    }

    #[test]
    fn f0_construction() {
        let sq = power_map(2);
        assert_eq!(sq.components()[2], vec![Monomial::real([0, 0, 2], 1.0)]);
        assert_eq!(sq.family(), Family::F0 { power_on_line: true });
        let m = family_f0(
            vec![Monomial::real([2, 0, 0], 1.0), Monomial::real([0, 1, 1], 1.0)],
            vec![Monomial::real([0, 2, 0], 1.0)],
            2,
        )
        .unwrap();
        assert_eq!(m.components()[2][0].exps, [0, 0, 2]);
        let cube = power_map(3);
        assert_eq!(cube.eval_lift(&[r(2.0), r(1.0), r(-1.0)]), [r(8.0), r(1.0), r(-1.0)]);
        assert!(matches!(
            family_f0(vec![Monomial::real([1, 0, 0], 1.0)], vec![Monomial::real([0, 2, 0], 1.0)], 2),
            Err(Error::DegreeMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn ftheta_examples() {
        let f = ftheta();
        assert_eq!(f.theta(), Some(r(0.01)));
        assert!(dist(&f.eval(&ProjPoint::real(1.0, 1.0, 1.0)), &ProjPoint::real(1.0, 1.0, 1.0)) < 1e-15);
        let img = f.eval(&ProjPoint::real(1.0, -1.0, 0.0));
        assert!(dist(&img, &ProjPoint::real(1.0, 1.0, -0.99)) < 1e-15);
        let img = f.eval(&ProjPoint::real(0.0, 0.0, 1.0));
        assert_eq!(img, ProjPoint::real(0.0, 0.0, 1.0));
        assert_eq!(f.eval(&ProjPoint::real(1.0, 0.0, 0.0)), ProjPoint::real(1.0, 0.0, 0.0));
        assert!(matches!(family_ftheta(ZERO), Err(Error::DegenerateParameter(_))));
    }

    #[test]
    fn eval_examples() {
        let sq = power_map(2);
        let p = ProjPoint::new(ONE, C64::new(0.0, 1.0), ZERO).unwrap();
        assert_eq!(sq.eval(&p), ProjPoint::real(1.0, -1.0, 0.0));
        let w = C64::from_polar(1.0, PI / 3.0);
        let img = ftheta().eval(&conic_point(w));
        assert!(dist(&img, &conic_point(w * w)) < 1e-15);
    }

    #[test]
    fn eval_lift_examples() {
        assert_eq!(power_map(2).eval_lift(&[r(2.0), ZERO, ZERO]), [r(4.0), ZERO, ZERO]);
        assert_eq!(ftheta().eval_lift(&[ZERO; 3]), [ZERO; 3]);
        let v = ftheta().eval_lift(&[r(1.0), r(1.0), ZERO]);
        assert_eq!(v[0], ONE);
        assert_eq!(v[1], ONE);
        assert!((v[2] - r(0.99)).norm() < 1e-16);
    }

    #[test]
    fn jacobian_examples() {
        let f = ftheta();
        let one = ProjPoint::real(1.0, 1.0, 1.0);
        let jd = f.jacobian(&one).unwrap();
        // symbolic determinant 8 theta xyz
        assert!((jd.lift_det - r(0.08)).norm() < 1e-15);
        // chart 0: (u, v) -> (u^2, (1-theta) u + theta v^2)
        let expected = M2([[r(2.0), ZERO], [r(0.99), r(0.02)]]);
        assert!(jd.chart_jac.sub(&expected).frobenius() < 1e-14);

        let sq = power_map(2).jacobian(&one).unwrap();
        assert!(sq.chart_jac.sub(&M2([[r(2.0), ZERO], [ZERO, r(2.0)]])).frobenius() < 1e-14);
        assert!((sq.chart_det - r(4.0)).norm() < 1e-14);

        // on the line z = 0 the chart coordinate z/x is mapped to (z/x)^2,
        // whose derivative vanishes there
        let p = ProjPoint::new(ONE, C64::new(0.3, 0.2), ZERO).unwrap();
        let j = power_map(2).jacobian(&p).unwrap().chart_jac;
        assert!(j.0[1][0].norm() < 1e-15 && j.0[1][1].norm() < 1e-15);
    }

    #[test]
    fn sj_ratio_examples() {
        let f = ftheta();
        for t in [0.05, 0.2, 0.45, 0.8] {
            let p = conic_point(C64::from_polar(1.0, 2.0 * PI * t));
            assert!((f.sj_ratio(&p).unwrap() - 0.04).abs() < 1e-12);
        }
        assert!((power_map(2).sj_ratio(&ProjPoint::real(1.0, 1.0, 1.0)).unwrap() - 4.0).abs() < 1e-14);
        // critical point of the squaring map: z = 0 line, lift_det = 8xyz = 0
        let p = ProjPoint::real(1.0, 0.5, 0.0);
        assert_eq!(power_map(2).sj_ratio(&p).unwrap(), 0.0);
    }

    #[test]
    fn conic_forward_invariance() {
        let f = ftheta();
        for k in 0..50 {
            let w = C64::from_polar(0.3 + 0.03 * k as f64, 0.37 * k as f64);
            let p = conic_point(w);
            assert!(conic_defect(&p) <= 1e-12);
            assert!(conic_defect(&f.eval(&p)) <= 1e-12);
        }
    }

    #[test]
    fn json_roundtrip_and_family_detection() {
        let f = ftheta();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"exps\":[1,1,0]"));
        let back: HomPolyMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back.family(), f.family());
        assert_eq!(back, f);
        let zero = r#"{"degree":2,"components":[[],[],[]],"label":"x"}"#;
        assert!(serde_json::from_str::<HomPolyMap>(zero).is_err());
        let two = r#"{"degree":2,"components":[[],[]],"label":"x"}"#;
        assert!(serde_json::from_str::<HomPolyMap>(two).is_err());
        let unknown = r#"{"degree":2,"components":[[],[],[]],"label":"x","extra":1}"#;
        assert!(serde_json::from_str::<HomPolyMap>(unknown).is_err());
    }
}
