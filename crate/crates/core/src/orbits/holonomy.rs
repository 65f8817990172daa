use serde::{Deserialize, Serialize};

use super::backward::{backward_orbit, BranchPolicy};
use super::frame::{make_frame, GROWTH_STEPS};
use super::graph::{local_stable, GraphDisk, GraphKind};
use crate::endo::HomPolyMap;
use crate::error::{Error, Result};
use crate::green::{laplacian_cells, DiskParam, Green};
use crate::linalg::{norm2, M2};
use crate::projgeom::{chart_others, conic_point, C64};

const SCAN: usize = 41;
const NEWTON_ITERS: usize = 50;
const INTERSECTION_TOL: f64 = 1e-9;
/// A grid cell belongs to the nearest family member within this multiple of
/// the member's parameter spacing.
const CELL_REACH: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyBin {
    pub index: usize,
    pub members: usize,
    pub mass: f64,
    pub mass_prime: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub bins: Vec<HolonomyBin>,
    pub max_relative: f64,
    /// Family members crossing both disks.
    pub matched: usize,
    /// Members skipped for lack of a transversal intersection.
    pub skipped: usize,
    pub no_data: bool,
}

/// Parameter `t` of `disk` where it crosses the vertical graph, with the
/// residual of the 2-D Newton solve.
pub fn intersect(graph: &GraphDisk, disk: &DiskParam) -> Result<(C64, f64)> {
    if graph.kind != GraphKind::Vertical {
        return Err(Error::Precondition("holonomy runs along vertical graphs".into()));
    }
    let fr = &graph.frame;
    let c = fr.chart;
    let (i, j) = chart_others(c);
    let chart_of = |t: C64| -> Option<[C64; 2]> {
        let l = disk.lift(t);
        (l[c].norm() > 1e-12).then(|| [l[i] / l[c], l[j] / l[c]])
    };
    // coarse start: the grid point closest to the graph
    let mut best: Option<(f64, C64, C64)> = None;
    for a in 0..SCAN {
        for b in 0..SCAN {
            let t = C64::new(-1.0 + 2.0 * a as f64 / (SCAN - 1) as f64, -1.0 + 2.0 * b as f64 / (SCAN - 1) as f64);
            if t.norm() > 1.0 {
                continue;
            }
            let Some(x) = chart_of(t) else { continue };
            let Ok((s, tau)) = fr.coords_of_chart(x) else { continue };
            if tau.norm() > fr.rho {
                continue;
            }
            let off = (s - graph.value(tau)).norm();
            if best.is_none_or(|b| off < b.0) {
                best = Some((off, t, tau));
            }
        }
    }
    let (_, mut t, mut tau) = best.ok_or_else(|| Error::NoTransversalIntersection("disk misses the frame box".into()))?;
    let residual = |t: C64, tau: C64| -> Option<[C64; 2]> {
        let x = chart_of(t)?;
        let y = fr.chart_coords(graph.value(tau), tau);
        Some([x[0] - y[0], x[1] - y[1]])
    };
    for _ in 0..NEWTON_ITERS {
        let r = residual(t, tau).ok_or_else(|| Error::NoTransversalIntersection("chart breakdown".into()))?;
        if norm2(&r) < 1e-15 {
            break;
        }
        let l = disk.lift(t);
        let dl = disk.lift_derivative(t);
        let dx = [(dl[i] * l[c] - l[i] * dl[c]) / (l[c] * l[c]), (dl[j] * l[c] - l[j] * dl[c]) / (l[c] * l[c])];
        let sl = graph.slope(tau);
        let dy = [-(sl * fr.eu[0] + fr.es[0]), -(sl * fr.eu[1] + fr.es[1])];
        let jac = M2::from_cols(dx, dy);
        let step = jac
            .solve(&[-r[0], -r[1]])
            .ok_or_else(|| Error::NoTransversalIntersection("tangential crossing".into()))?;
        t += step[0];
        tau += step[1];
    }
    let r = residual(t, tau).map(|r| norm2(&r)).unwrap_or(f64::INFINITY);
    if !(r < INTERSECTION_TOL) || tau.norm() > fr.rho * (1.0 + 1e-9) || t.norm() > 1.0 {
        return Err(Error::NoTransversalIntersection(format!("residual {r:e}, |tau| {:e}, |t| {:e}", tau.norm(), t.norm())));
    }
    Ok((t, r))
}

/// Mass of the grid cells nearest to each member parameter.
fn member_masses(cells: &[(C64, f64)], params: &[C64]) -> Vec<f64> {
    let reach: Vec<f64> = (0..params.len())
        .map(|k| {
            let mut h = f64::INFINITY;
            if k > 0 {
                h = h.min((params[k] - params[k - 1]).norm());
            }
            if k + 1 < params.len() {
                h = h.min((params[k] - params[k + 1]).norm());
            }
            CELL_REACH * h
        })
        .collect();
    let mut out = vec![0.0; params.len()];
    for (t, m) in cells {
        if *m <= 0.0 {
            continue;
        }
        let (k, d) = params
            .iter()
            .enumerate()
            .map(|(k, p)| (k, (t - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if d <= reach[k] {
            out[k] += m;
        }
    }
    out
}

/// Compare the slices of `T` on two transversals over holonomy-matched
/// pieces. Members of `family` (vertical graphs, ordered along the
/// family) are matched to their crossing parameters on each disk; each
/// grid cell charging the slice goes to the nearest member, and consecutive
/// members are grouped into `bins`.
pub fn holonomy_probe(
    map: &HomPolyMap,
    disk: &DiskParam,
    disk_prime: &DiskParam,
    family: &[GraphDisk],
    depth: usize,
    bins: usize,
) -> Result<HolonomyReport> {
    let empty = |skipped| HolonomyReport { bins: vec![], max_relative: 0.0, matched: 0, skipped, no_data: true };
    if family.is_empty() {
        return Ok(empty(0));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    let crossings = crate::par::map(family, |g| Ok::<_, Error>((intersect(g, disk)?.0, intersect(g, disk_prime)?.0)));
    let pairs: Vec<(C64, C64)> = crossings.into_iter().filter_map(|c| c.ok()).collect();
    let skipped = family.len() - pairs.len();
    if pairs.is_empty() {
        return Ok(empty(skipped));
    }
    let green = Green::new(map);
    let cells = laplacian_cells(&green, disk, depth)?;
    let cells_prime = if disk_prime == disk { cells.clone() } else { laplacian_cells(&green, disk_prime, depth)? };
    let a: Vec<C64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<C64> = pairs.iter().map(|p| p.1).collect();
    let ma = member_masses(&cells, &a);
    let mb = member_masses(&cells_prime, &b);
    let per = pairs.len().div_ceil(bins);
    let mut rows = Vec::new();
    for (index, chunk) in (0..pairs.len()).collect::<Vec<_>>().chunks(per).enumerate() {
        let mass: f64 = chunk.iter().map(|&k| ma[k]).sum();
        let mass_prime: f64 = chunk.iter().map(|&k| mb[k]).sum();
        let mean = 0.5 * (mass + mass_prime);
        let relative = if mean > 0.0 { (mass - mass_prime).abs() / mean } else { 0.0 };
        rows.push(HolonomyBin { index, members: chunk.len(), mass, mass_prime, relative });
    }
    let max_relative = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
    Ok(HolonomyReport { bins: rows, max_relative, matched: pairs.len(), skipped, no_data: false })
}

/// `t -> [w^2 : 1 : w + shift]` with `w = w0 + radius t`: the conic disk for
/// `shift = 0`, a parallel translate along the fibers `[x : y] = const`
/// otherwise.
pub fn conic_transversal(w0: C64, radius: f64, shift: C64, n_grid: usize) -> Result<DiskParam> {
    let r = C64::new(radius, 0.0);
    DiskParam::new([vec![w0 * w0, w0 * r * 2.0, r * r], vec![C64::new(1.0, 0.0)], vec![w0 + shift, r]], n_grid)
}

/// Local stable graphs at `count` conic points `e^{i phi}`, `phi` evenly
/// spaced over `[phi0 - span/2, phi0 + span/2]`.
pub fn conic_stable_family(
    map: &HomPolyMap,
    phi0: f64,
    span: f64,
    count: usize,
    gamma: f64,
    eps0: f64,
) -> Result<Vec<GraphDisk>> {
    let phis: Vec<f64> = (0..count)
        .map(|k| phi0 - 0.5 * span + span * k as f64 / (count.max(2) - 1) as f64)
        .collect();
    crate::par::map(&phis, |&phi| {
        let p = conic_point(C64::from_polar(1.0, phi));
        let orbit = backward_orbit(map, &p, GROWTH_STEPS, BranchPolicy::NearestToConic, 0)?;
        let frame = make_frame(map, &orbit, gamma, eps0)?;
        local_stable(map, &p, &frame, 1, 10)
    })
    .into_iter()
    .collect()
}
