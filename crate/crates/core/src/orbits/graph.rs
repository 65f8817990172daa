use serde::{Deserialize, Serialize};

use super::backward::BackwardOrbit;
use super::forward::{auto_policy, forward_step};
use super::frame::{local_derivative, local_map, stable_direction, ChartFrame, GROWTH_STEPS};
use crate::endo::{preimages, HomPolyMap};
use crate::error::{Error, Result};
use crate::projgeom::{dist, ProjPoint, C64};

/// Degree of the fitted graph polynomials.
pub const GRAPH_DEGREE: usize = 8;
const RADII: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const ANGLES: usize = 18;
const NEWTON_ITERS: usize = 60;
/// Forward steps used to seed the stable graph before the final solve.
const STABLE_HORIZON: usize = 40;
/// Distances below this are rounding noise in forward contraction tests.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// `t = phi(s)` over `|s| <= rho`.
    Horizontal,
    /// `s = psi(t)` over `|t| <= rho`.
    Vertical,
}

/// Graph of a polynomial in `sigma = base / rho` inside a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDisk {
    pub frame: ChartFrame,
    pub kind: GraphKind,
    pub coeffs: Vec<C64>,
    /// Bound on `|d graph / d base|` over the base disk.
    pub lipschitz_bound: f64,
    /// Fit or invariance residual, in frame units.
    pub residual: f64,
}

fn polar_grid() -> Vec<C64> {
    let mut out = Vec::with_capacity(RADII.len() * ANGLES);
    for r in RADII {
        for k in 0..ANGLES {
            out.push(C64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.5 * r) / ANGLES as f64));
        }
    }
    out
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Option<Vec<C64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let s: C64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Weighted least squares `sum_i |w_i (sum_j c_j sigma_i^j) - y_i|^2`.
fn least_squares(sigmas: &[C64], weights: &[C64], ys: &[C64], degree: usize) -> Option<Vec<C64>> {
    let n = degree + 1;
    let mut gram = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for ((s, w), y) in sigmas.iter().zip(weights).zip(ys) {
        let row: Vec<C64> = (0..n).map(|j| w * s.powu(j as u32)).collect();
        for j in 0..n {
            for k in 0..n {
                gram[j][k] += row[j].conj() * row[k];
            }
            rhs[j] += row[j].conj() * y;
        }
    }
    solve_dense(gram, rhs)
}

fn poly(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn poly_derivative(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().enumerate().skip(1).rev().fold(C64::new(0.0, 0.0), |acc, (j, c)| acc * x + c * j as f64)
}

impl GraphDisk {
    pub fn flat(frame: ChartFrame, kind: GraphKind) -> Self {
        GraphDisk { frame, kind, coeffs: vec![C64::new(0.0, 0.0)], lipschitz_bound: 0.0, residual: 0.0 }
    }

    /// Graph of a polynomial given in the base variable itself.
    pub fn from_base_coeffs(frame: ChartFrame, kind: GraphKind, base: &[C64]) -> Result<Self> {
        let coeffs: Vec<C64> = base.iter().enumerate().map(|(j, c)| c * frame.rho.powi(j as i32)).collect();
        Self::checked(frame, kind, coeffs, 0.0)
    }

    fn checked(frame: ChartFrame, kind: GraphKind, coeffs: Vec<C64>, residual: f64) -> Result<Self> {
        let sup: f64 = coeffs.iter().map(|c| c.norm()).sum();
        if !(sup <= frame.rho) {
            return Err(Error::GraphEscapesBox(format!("sup bound {sup:e} exceeds radius {:e}", frame.rho)));
        }
        let lipschitz_bound = coeffs.iter().enumerate().map(|(j, c)| j as f64 * c.norm()).sum::<f64>() / frame.rho;
        Ok(GraphDisk { frame, kind, coeffs, lipschitz_bound, residual })
    }

    /// Graph value over base coordinate `b`.
    pub fn value(&self, b: C64) -> C64 {
        poly(&self.coeffs, b / self.frame.rho)
    }

    pub fn slope(&self, b: C64) -> C64 {
        poly_derivative(&self.coeffs, b / self.frame.rho) / self.frame.rho
    }

    /// Frame coordinates `(s, t)` over base `b`.
    pub fn frame_point(&self, b: C64) -> (C64, C64) {
        match self.kind {
            GraphKind::Horizontal => (b, self.value(b)),
            GraphKind::Vertical => (self.value(b), b),
        }
    }

    pub fn point(&self, b: C64) -> Result<ProjPoint> {
        let (s, t) = self.frame_point(b);
        self.frame.point(s, t)
    }

    /// Distance, in frame units, from `p` to the graph along the fiber
    /// direction; `None` when `p` projects outside the base disk.
    pub fn offset(&self, p: &ProjPoint) -> Result<Option<f64>> {
        let (s, t) = self.frame.coords_of(p)?;
        let (b, other) = match self.kind {
            GraphKind::Horizontal => (s, t),
            GraphKind::Vertical => (t, s),
        };
        Ok((b.norm() <= self.frame.rho).then(|| (other - self.value(b)).norm()))
    }

    /// Sample points at radius `fraction * rho`.
    pub fn ring(&self, fraction: f64, count: usize) -> Result<Vec<ProjPoint>> {
        (0..count)
            .map(|k| self.point(C64::from_polar(fraction * self.frame.rho, std::f64::consts::TAU * k as f64 / count as f64)))
            .collect()
    }
}

/// Fit `value(base)` over the base disk of `frame`.
fn fit(frame: ChartFrame, kind: GraphKind, samples: &[(C64, C64)]) -> Result<GraphDisk> {
    let sig: Vec<C64> = samples.iter().map(|(b, _)| b / frame.rho).collect();
    let ys: Vec<C64> = samples.iter().map(|(_, y)| *y).collect();
    let ones = vec![C64::new(1.0, 0.0); samples.len()];
    let coeffs = least_squares(&sig, &ones, &ys, GRAPH_DEGREE)
        .ok_or_else(|| Error::GraphEscapesBox("singular fit".into()))?;
    let residual = sig.iter().zip(&ys).map(|(s, y)| (poly(&coeffs, *s) - y).norm()).fold(0.0, f64::max);
    GraphDisk::checked(frame, kind, coeffs, residual)
}

/// Image of a horizontal graph: for each base point of `dst`, solve for the
/// source base point whose image lands over it. Only the part over the
/// `dst` base disk is kept (the cut-off).
pub fn graph_transform(map: &HomPolyMap, src: &ChartFrame, dst: &ChartFrame, graph: &GraphDisk) -> Result<GraphDisk> {
    if graph.kind != GraphKind::Horizontal {
        return Err(Error::Precondition("graph_transform takes a horizontal graph".into()));
    }
    let zero = C64::new(0.0, 0.0);
    let d0 = local_derivative(map, src, dst, zero, graph.value(zero))?;
    let a_u = d0.0[0][0] + d0.0[0][1] * graph.slope(zero);
    let mut samples = Vec::new();
    let mut escaped = Vec::new();
    for sigma in polar_grid() {
        let target = sigma * dst.rho;
        let mut s = target / a_u;
        let mut done = false;
        for _ in 0..NEWTON_ITERS {
            let t = graph.value(s);
            let (sp, _) = local_map(map, src, dst, s, t)?;
            let r = sp - target;
            if r.norm() <= 1e-15 * dst.rho {
                done = true;
                break;
            }
            let d = local_derivative(map, src, dst, s, t)?;
            let ds = d.0[0][0] + d.0[0][1] * graph.slope(s);
            s -= r / ds;
            if !s.is_finite() {
                break;
            }
        }
        if !done {
            let (sp, _) = local_map(map, src, dst, s, graph.value(s))?;
            done = (sp - target).norm() <= 1e-12 * dst.rho;
        }
        if !done || s.norm() > src.rho * (1.0 + 1e-9) {
            escaped.push(target);
            continue;
        }
        let (_, tp) = local_map(map, src, dst, s, graph.value(s))?;
        samples.push((target, tp));
    }
    if !escaped.is_empty() {
        return Err(Error::GraphEscapesBox(format!("{} base samples not covered, e.g. {:?}", escaped.len(), &escaped[..escaped.len().min(4)])));
    }
    fit(*dst, GraphKind::Horizontal, &samples)
}

/// Preimage of a vertical graph at `dst` as a vertical graph at `src`.
pub fn graph_pullback(map: &HomPolyMap, src: &ChartFrame, dst: &ChartFrame, graph: &GraphDisk) -> Result<GraphDisk> {
    if graph.kind != GraphKind::Vertical {
        return Err(Error::Precondition("graph_pullback takes a vertical graph".into()));
    }
    let mut samples = Vec::new();
    for sigma in polar_grid() {
        let t = sigma * src.rho;
        let s = solve_onto_vertical(map, src, dst, graph, t, C64::new(0.0, 0.0))?;
        samples.push((t, s));
    }
    fit(*src, GraphKind::Vertical, &samples)
}

/// `s` with `f(s, t)` on the vertical graph at `dst`.
fn solve_onto_vertical(
    map: &HomPolyMap,
    src: &ChartFrame,
    dst: &ChartFrame,
    graph: &GraphDisk,
    t: C64,
    start: C64,
) -> Result<C64> {
    let mut s = start;
    for _ in 0..NEWTON_ITERS {
        let (sp, tp) = local_map(map, src, dst, s, t)?;
        let r = sp - graph.value(tp);
        if r.norm() <= 1e-15 * dst.rho {
            break;
        }
        let d = local_derivative(map, src, dst, s, t)?;
        let g = d.0[0][0] - graph.slope(tp) * d.0[1][0];
        s -= r / g;
        if !s.is_finite() {
            return Err(Error::GraphEscapesBox(format!("pullback diverged at t = {t}")));
        }
    }
    let (sp, tp) = local_map(map, src, dst, s, t)?;
    if (sp - graph.value(tp)).norm() > 1e-12 * dst.rho || tp.norm() > dst.rho || s.norm() > src.rho {
        return Err(Error::GraphEscapesBox(format!("no preimage over t = {t} inside the boxes")));
    }
    Ok(s)
}

/// `k`-fold graph transform of the flat graph at `p_{-k}`; `frames[j]` is
/// the frame at `p_{-j}`.
pub fn local_unstable(map: &HomPolyMap, orbit: &BackwardOrbit, frames: &[ChartFrame], k: usize) -> Result<GraphDisk> {
    if orbit.depth() < k || frames.len() <= k {
        return Err(Error::Precondition("need orbit depth and frame chain of length >= k".into()));
    }
    let mut g = GraphDisk::flat(frames[k], GraphKind::Horizontal);
    for j in (1..=k).rev() {
        g = graph_transform(map, &frames[j], &frames[j - 1], &g)?;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowingReport {
    /// `distances[j]` is the largest `dist(y_{-j}, p_{-j})` over the samples.
    pub distances: Vec<f64>,
    /// Smallest `C` with `distances[j] <= C exp(-(chi_u - gamma) j)`.
    pub constant: f64,
}

/// Pull sample points of an unstable disk back along the recorded branches.
pub fn unstable_shadowing(map: &HomPolyMap, orbit: &BackwardOrbit, disk: &GraphDisk, k: usize) -> Result<ShadowingReport> {
    let rate = disk.frame.chi_u - disk.frame.gamma;
    let mut ys = disk.ring(0.5, 8)?;
    let mut distances = vec![ys.iter().map(|y| dist(y, &orbit.points[0])).fold(0.0, f64::max)];
    for j in 1..=k.min(orbit.depth()) {
        let target = orbit.points[j];
        ys = ys
            .iter()
            .map(|y| {
                let pre = preimages(map, y)?;
                Ok(pre.into_iter().map(|(q, _)| q).min_by(|a, b| dist(a, &target).total_cmp(&dist(b, &target))).expect("d^2 preimages"))
            })
            .collect::<Result<_>>()?;
        distances.push(ys.iter().map(|y| dist(y, &target)).fold(0.0, f64::max));
    }
    let constant = distances.iter().enumerate().map(|(j, d)| d * (rate * j as f64).exp()).fold(0.0, f64::max);
    Ok(ShadowingReport { distances, constant })
}

/// Frames along the forward orbit of `frame.center`: unstable directions
/// pushed forward, stable directions from forward products.
pub fn forward_frames(map: &HomPolyMap, frame: &ChartFrame, steps: usize) -> Result<Vec<ChartFrame>> {
    let mut out = vec![*frame];
    let policy = auto_policy(map, &frame.center);
    for _ in 0..steps {
        let prev = out.last().expect("nonempty");
        let p = forward_step(map, &prev.center, policy)?;
        let j = map.chart_jacobian(&prev.center, prev.chart, p.pivot())?;
        let (es, _, _) = stable_direction(map, &p, GROWTH_STEPS)?;
        out.push(ChartFrame::with_directions(p, j.apply(&prev.eu), es, prev)?);
    }
    Ok(out)
}

/// Vertical jet of order `order` through `p0` solving the one-step
/// invariance equation against the stable graph at `f(p0)`, by Gauss-Newton
/// on the coefficients. The graph at `f(p0)` is the pullback of a flat
/// vertical graph from further along the forward orbit.
pub fn local_stable(map: &HomPolyMap, p0: &ProjPoint, frame: &ChartFrame, order: usize, newton_steps: usize) -> Result<GraphDisk> {
    if !(frame.chi_s < 0.0) {
        return Err(Error::Precondition(format!("chi_s = {} is not negative", frame.chi_s)));
    }
    if dist(p0, &frame.center) > 1e-12 {
        return Err(Error::Precondition("frame is not centered at p0".into()));
    }
    if order == 0 || order > GRAPH_DEGREE {
        return Err(Error::InvalidInput(format!("order must be in 1..={GRAPH_DEGREE}")));
    }
    let frames = forward_frames(map, frame, STABLE_HORIZON)?;
    let mut next = GraphDisk::flat(frames[STABLE_HORIZON], GraphKind::Vertical);
    for j in (1..STABLE_HORIZON).rev() {
        next = graph_pullback(map, &frames[j], &frames[j + 1], &next)?;
    }
    let (src, dst) = (&frames[0], &frames[1]);
    let taus: Vec<C64> = polar_grid().iter().map(|s| s * src.rho).collect();
    let sig: Vec<C64> = taus.iter().map(|t| t / src.rho).collect();
    let mut coeffs = vec![C64::new(0.0, 0.0); order + 1];
    let eval = |coeffs: &[C64]| -> Result<(Vec<C64>, Vec<C64>)> {
        let mut res = Vec::with_capacity(taus.len());
        let mut slope = Vec::with_capacity(taus.len());
        for (t, s) in taus.iter().zip(&sig) {
            let sv = poly(coeffs, *s);
            let (sp, tp) = local_map(map, src, dst, sv, *t)?;
            let d = local_derivative(map, src, dst, sv, *t)?;
            res.push(sp - next.value(tp));
            slope.push(d.0[0][0] - next.slope(tp) * d.0[1][0]);
        }
        Ok((res, slope))
    };
    let max = |v: &[C64]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let (mut res, mut slope) = eval(&coeffs)?;
    for _ in 0..newton_steps {
        if max(&res) <= 1e-14 * src.rho {
            break;
        }
        let neg: Vec<C64> = res.iter().map(|r| -r).collect();
        let step = least_squares(&sig, &slope, &neg, order)
            .ok_or_else(|| Error::NewtonDivergence("singular invariance system".into()))?;
        let trial: Vec<C64> = coeffs.iter().zip(&step).map(|(c, d)| c + d).collect();
        let (r2, s2) = eval(&trial)?;
        if !(max(&r2) <= max(&res)) {
            break;
        }
        coeffs = trial;
        res = r2;
        slope = s2;
    }
    let residual = max(&res);
    if !residual.is_finite() {
        return Err(Error::NewtonDivergence("non-finite invariance residual".into()));
    }
    if residual > 1e-8 * src.rho {
        return Err(Error::NewtonDivergence(format!("invariance residual {residual:e} above 1e-8 rho")));
    }
    GraphDisk::checked(*src, GraphKind::Vertical, coeffs, residual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// `distances[n]` is the largest `dist(f^n(y), f^n(p_0))` over the samples.
    pub distances: Vec<f64>,
    /// Steps before the distances hit the rounding floor or stop decreasing.
    pub resolved_steps: usize,
    /// Smallest `C` with `distances[n] <= C exp((chi_s + gamma) n)` on the
    /// resolved steps.
    pub constant: f64,
    /// Least-squares slope of `log distances[n]` over the resolved steps.
    pub exponent: f64,
}

/// Forward contraction of sample points of a stable disk.
pub fn forward_contraction(map: &HomPolyMap, disk: &GraphDisk, steps: usize, samples: usize) -> Result<ContractionReport> {
    let mut ys = disk.ring(0.5, samples)?;
    let mut p = disk.frame.center;
    let mut distances = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        distances.push(ys.iter().map(|y| dist(y, &p)).fold(0.0, f64::max));
        if n < steps {
            ys = ys.iter().map(|y| forward_step(map, y, auto_policy(map, y))).collect::<Result<_>>()?;
            p = forward_step(map, &p, auto_policy(map, &p))?;
        }
    }
    let mut resolved = 1;
    while resolved < distances.len() && distances[resolved] > NOISE_FLOOR && distances[resolved] < distances[resolved - 1] {
        resolved += 1;
    }
    let rate = disk.frame.chi_s + disk.frame.gamma;
    let constant = distances[..resolved].iter().enumerate().map(|(n, d)| d * (-rate * n as f64).exp()).fold(0.0, f64::max);
    let exponent = if resolved >= 2 {
        let m = resolved as f64;
        let xs: Vec<f64> = (0..resolved).map(|n| n as f64).collect();
        let ys: Vec<f64> = distances[..resolved].iter().map(|d| d.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(ContractionReport { distances, resolved_steps: resolved, constant, exponent })
}
