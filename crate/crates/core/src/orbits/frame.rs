use serde::{Deserialize, Serialize};

use super::backward::BackwardOrbit;
use super::forward::{auto_policy, forward_step};
use crate::endo::HomPolyMap;
use crate::error::{Error, Result};
use crate::linalg::{inner2, norm2, normalize2, M2, V2};
use crate::projgeom::{chart_others, from_chart, to_chart, AffinePair, ProjPoint, C64, ONE};
use crate::rng::seeded;

/// Default number of steps used to grow the Oseledets directions.
pub const GROWTH_STEPS: usize = 30;
pub const MIN_GROWTH_STEPS: usize = 10;
const MAX_RADIUS: f64 = 0.1;
const MIN_RADIUS: f64 = 1e-6;
const FRAME_SAMPLES: usize = 1000;

/// Splitting at `p_0` with the growth rates measured along the way.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub chart: usize,
    pub eu: V2,
    pub es: V2,
    /// Mean log growth of the pushed-forward generic vector.
    pub chi_u: f64,
    /// Mean log of the smaller singular value of the forward product.
    pub chi_s: f64,
    /// Relative gap between the singular values of the forward product.
    pub gap: f64,
}

fn adjoint_apply(m: &M2, v: &V2) -> V2 {
    let a = m.0;
    [
        a[0][0].conj() * v[0] + a[1][0].conj() * v[1],
        a[0][1].conj() * v[0] + a[1][1].conj() * v[1],
    ]
}

fn perp(v: &V2) -> V2 {
    [-v[1].conj(), v[0].conj()]
}

const GENERIC: V2 = [C64::new(0.8, 0.1), C64::new(0.3, -0.5)];

/// Jacobians of `m` forward steps from `p` in pivot charts.
fn forward_jacobians(map: &HomPolyMap, p: &ProjPoint, m: usize) -> Result<Vec<M2>> {
    let mut out = Vec::with_capacity(m);
    let policy = auto_policy(map, p);
    let mut q = *p;
    for _ in 0..m {
        let next = forward_step(map, &q, policy)?;
        out.push(map.chart_jacobian(&q, q.pivot(), next.pivot()).map_err(|e| Error::ChartBreakdown(e.to_string()))?);
        q = next;
    }
    Ok(out)
}

/// Most contracted direction of the `m`-step forward derivative at `p`, in
/// the pivot chart of `p`, with the log singular values of the product.
pub fn stable_direction(map: &HomPolyMap, p: &ProjPoint, m: usize) -> Result<(V2, f64, f64)> {
    let jacs = forward_jacobians(map, p, m)?;
    // power iteration with the adjoint product: the top right singular
    // vector, the stable one is its orthogonal complement
    let mut w = normalize2(&GENERIC);
    let mut log_top = 0.0;
    for j in jacs.iter().rev() {
        let next = adjoint_apply(j, &w);
        let n = norm2(&next);
        if n == 0.0 {
            return Err(Error::DegenerateSplitting { gap: 0.0 });
        }
        log_top += n.ln();
        w = [next[0] / n, next[1] / n];
    }
    let log_det: f64 = jacs.iter().map(|j| j.det().norm().ln()).sum();
    Ok((perp(&w), log_top, log_det - log_top))
}

/// `E_u` pushed forward from `p_{-m}`, `E_s` from the forward product at `p_0`.
pub fn oseledets_directions(map: &HomPolyMap, orbit: &BackwardOrbit, m: usize) -> Result<Splitting> {
    if m < MIN_GROWTH_STEPS || orbit.depth() < m {
        return Err(Error::Precondition(format!("need orbit depth >= m >= {MIN_GROWTH_STEPS}")));
    }
    let mut v = normalize2(&GENERIC);
    let mut log_u = 0.0;
    for k in (1..=m).rev() {
        let (src, dst) = (orbit.points[k], orbit.points[k - 1]);
        let j = map.chart_jacobian(&src, src.pivot(), dst.pivot()).map_err(|e| Error::ChartBreakdown(e.to_string()))?;
        let w = j.apply(&v);
        let n = norm2(&w);
        if n == 0.0 {
            return Err(Error::DegenerateSplitting { gap: 0.0 });
        }
        log_u += n.ln();
        v = [w[0] / n, w[1] / n];
    }
    let p0 = orbit.head();
    let (es, log_top, log_low) = stable_direction(map, &p0, m)?;
    let gap = 1.0 - (log_low - log_top).exp();
    if !(gap >= 1e-3) {
        return Err(Error::DegenerateSplitting { gap });
    }
    Ok(Splitting { chart: p0.pivot(), eu: v, es, chi_u: log_u / m as f64, chi_s: log_low / m as f64, gap })
}

/// Affine frame `a_0 + s E_u + t E_s` in the pivot chart of the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartFrame {
    pub center: ProjPoint,
    pub chart: usize,
    pub eu: V2,
    pub es: V2,
    pub rho: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub chi_u: f64,
    pub chi_s: f64,
}

impl ChartFrame {
    /// Frame with the given unit directions at `center`, in its pivot chart.
    pub fn with_directions(center: ProjPoint, eu: V2, es: V2, template: &ChartFrame) -> Result<Self> {
        let f = ChartFrame { center, chart: center.pivot(), eu: normalize2(&eu), es: normalize2(&es), ..*template };
        f.basis_inverse()?;
        Ok(f)
    }

    fn origin(&self) -> [C64; 2] {
        let (i, j) = chart_others(self.chart);
        let c = self.center.coords();
        let piv = c[self.chart];
        [c[i] / piv, c[j] / piv]
    }

    pub fn basis(&self) -> M2 {
        M2::from_cols(self.eu, self.es)
    }

    fn basis_inverse(&self) -> Result<M2> {
        if inner2(&self.eu, &self.es).norm() >= 1.0 - 1e-6 {
            return Err(Error::DegenerateSplitting { gap: 0.0 });
        }
        self.basis().inverse().ok_or(Error::DegenerateSplitting { gap: 0.0 })
    }

    /// Chart coordinates of the frame point `(s, t)`.
    pub fn chart_coords(&self, s: C64, t: C64) -> [C64; 2] {
        let a = self.origin();
        [a[0] + s * self.eu[0] + t * self.es[0], a[1] + s * self.eu[1] + t * self.es[1]]
    }

    pub fn point(&self, s: C64, t: C64) -> Result<ProjPoint> {
        let [u, v] = self.chart_coords(s, t);
        from_chart(&AffinePair { chart: self.chart, u, v })
    }

    /// Frame coordinates of chart coordinates.
    pub fn coords_of_chart(&self, a: [C64; 2]) -> Result<(C64, C64)> {
        let o = self.origin();
        let d = [a[0] - o[0], a[1] - o[1]];
        let x = self.basis_inverse()?.apply(&d);
        Ok((x[0], x[1]))
    }

    pub fn coords_of(&self, p: &ProjPoint) -> Result<(C64, C64)> {
        let a = to_chart(p, self.chart)?;
        self.coords_of_chart([a.u, a.v])
    }
}

/// The map read in frame coordinates from `src` to `dst`.
pub fn local_map(map: &HomPolyMap, src: &ChartFrame, dst: &ChartFrame, s: C64, t: C64) -> Result<(C64, C64)> {
    let [u, v] = src.chart_coords(s, t);
    let lift = AffinePair { chart: src.chart, u, v }.lift();
    let f = map.eval_lift(&lift);
    let piv = f[dst.chart];
    if piv.norm() == 0.0 {
        return Err(Error::NearChartBoundary { chart: dst.chart, modulus: 0.0 });
    }
    let (i, j) = chart_others(dst.chart);
    dst.coords_of_chart([f[i] / piv, f[j] / piv])
}

/// Derivative of [`local_map`] at `(s, t)`.
pub fn local_derivative(map: &HomPolyMap, src: &ChartFrame, dst: &ChartFrame, s: C64, t: C64) -> Result<M2> {
    let y = src.point(s, t)?;
    let j = map.chart_jacobian(&y, src.chart, dst.chart)?;
    Ok(dst.basis_inverse()?.mul(&j).mul(&src.basis()))
}

/// Frame at `f(center)` with both directions pushed by the derivative.
pub fn image_frame(map: &HomPolyMap, frame: &ChartFrame) -> Result<ChartFrame> {
    let img = map.eval(&frame.center);
    let j = map.chart_jacobian(&frame.center, frame.chart, img.pivot())?;
    ChartFrame::with_directions(img, j.apply(&frame.eu), j.apply(&frame.es), frame)
}

/// Largest `||Dh||` over random points of the bidisk of radius `frame.rho`,
/// where `h` is the deviation of the local map from its derivative at 0.
pub fn nonlinearity(map: &HomPolyMap, frame: &ChartFrame, samples: usize, seed: u64) -> Result<f64> {
    use rand::Rng as _;
    let dst = image_frame(map, frame)?;
    let a = local_derivative(map, frame, &dst, C64::new(0.0, 0.0), C64::new(0.0, 0.0))?;
    let mut rng = seeded(seed);
    let mut disk = || {
        let r = frame.rho * rng.random::<f64>().sqrt();
        C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
    };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (s, t) = (disk(), disk());
        let d = local_derivative(map, frame, &dst, s, t)?;
        worst = worst.max(d.sub(&a).spectral_norm());
    }
    Ok(worst)
}

/// Hyperbolicity inequalities of the adapted charts.
pub fn frame_inequalities_hold(chi_u: f64, chi_s: f64, gamma: f64, eps0: f64) -> bool {
    (chi_u - gamma).exp() - eps0 > gamma.exp() && (chi_s + gamma).exp() + eps0 < (-gamma).exp()
}

/// Frame at `p_0` with the largest dyadic radius `rho <= 0.1` on which the
/// sampled nonlinearity stays below `eps0`.
pub fn make_frame(map: &HomPolyMap, orbit: &BackwardOrbit, gamma: f64, eps0: f64) -> Result<ChartFrame> {
    if !(gamma > 0.0 && eps0 > 0.0) {
        return Err(Error::Precondition("gamma and eps0 must be positive".into()));
    }
    let m = GROWTH_STEPS.min(orbit.depth());
    let sp = oseledets_directions(map, orbit, m)?;
    if !(sp.chi_u > 0.0 && sp.chi_s < 0.0) {
        return Err(Error::FrameNotFound(format!("not a saddle: chi_u {} chi_s {}", sp.chi_u, sp.chi_s)));
    }
    if !frame_inequalities_hold(sp.chi_u, sp.chi_s, gamma, eps0) {
        return Err(Error::FrameNotFound(format!(
            "frame inequalities fail for chi_u {:.4}, chi_s {:.4}, gamma {gamma}, eps0 {eps0}",
            sp.chi_u, sp.chi_s
        )));
    }
    let mut frame = ChartFrame {
        center: orbit.head(),
        chart: sp.chart,
        eu: sp.eu,
        es: sp.es,
        rho: MAX_RADIUS,
        gamma,
        eps0,
        chi_u: sp.chi_u,
        chi_s: sp.chi_s,
    };
    frame.basis_inverse()?;
    while frame.rho >= MIN_RADIUS {
        if nonlinearity(map, &frame, FRAME_SAMPLES, 0).map(|n| n <= eps0).unwrap_or(false) {
            return Ok(frame);
        }
        frame.rho *= 0.5;
    }
    Err(Error::FrameNotFound(format!("no radius >= {MIN_RADIUS} keeps the nonlinearity below {eps0}")))
}

/// Frames at `p_0, p_{-1}, ..., p_{-k}` sharing the smallest radius.
pub fn frame_chain(map: &HomPolyMap, orbit: &BackwardOrbit, k: usize, gamma: f64, eps0: f64) -> Result<Vec<ChartFrame>> {
    if orbit.depth() < k + MIN_GROWTH_STEPS {
        return Err(Error::Precondition(format!("need orbit depth >= k + {MIN_GROWTH_STEPS}")));
    }
    let mut frames: Vec<ChartFrame> =
        (0..=k).map(|j| make_frame(map, &orbit.shifted(j), gamma, eps0)).collect::<Result<_>>()?;
    let rho = frames.iter().map(|f| f.rho).fold(f64::INFINITY, f64::min);
    for f in &mut frames {
        f.rho = rho;
    }
    Ok(frames)
}

/// Unit tangent to the conic `[w^2 : 1 : w]` at parameter `w`, in the
/// pivot chart of the point.
pub fn conic_tangent(w: C64) -> (ProjPoint, V2) {
    let p = crate::projgeom::conic_point(w);
    let lift = [w * w, ONE, w];
    let dlift = [w * 2.0, C64::new(0.0, 0.0), ONE];
    let c = p.pivot();
    let (i, j) = chart_others(c);
    let d = |k: usize| (dlift[k] * lift[c] - lift[k] * dlift[c]) / (lift[c] * lift[c]);
    (p, normalize2(&[d(i), d(j)]))
}
