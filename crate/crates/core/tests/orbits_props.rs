use std::sync::LazyLock;

use holodyn::endo::{family_ftheta, HomPolyMap};
use holodyn::linalg::{line_angle_sin, norm2, V2};
use holodyn::orbits::{
    auto_policy, backward_orbit, forward_step, frame_chain, graph_transform, local_unstable, lyapunov,
    BranchPolicy, GraphDisk, GraphKind,
};
use holodyn::periodic::orbit_jacobian;
use holodyn::projgeom::{
    conic_defect, conic_parameter, conic_point, conic_point_turns, dist, from_chart, normalize, to_chart, AffinePair, C64,
};
use holodyn::suite::manifold_compatibility;
use proptest::prelude::*;

static F: LazyLock<HomPolyMap> = LazyLock::new(|| family_ftheta(C64::new(0.01, 0.0)).unwrap());
static F2: LazyLock<HomPolyMap> = LazyLock::new(|| family_ftheta(C64::new(0.2, 0.0)).unwrap());

/// Turns away from the few rational angles with short cycles.
fn turns() -> impl Strategy<Value = f64> {
    (0.0f64..1.0).prop_filter("short cycle", |t| (1..=12).all(|n| ((t * ((1u64 << n) - 1) as f64).fract() - 0.5).abs() < 0.499))
}

/// Tangent of `w -> [w^2 : 1 : w]` in the affine chart `c`.
fn tangent_in_chart(w: C64, c: usize) -> V2 {
    let lift = [w * w, C64::new(1.0, 0.0), w];
    let dlift = [w * 2.0, C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let d = |k: usize| (dlift[k] * lift[c] - lift[k] * dlift[c]) / (lift[c] * lift[c]);
    let others: Vec<usize> = (0..3).filter(|&k| k != c).collect();
    [d(others[0]), d(others[1])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chain_rule_for_short_iterates(t in turns(), off in -0.01f64..0.01, n in 1usize..=5) {
        let p = conic_point_turns(t);
        let p = normalize(p.coords().map(|c| c + C64::new(off, 0.0))).unwrap();
        let src = p.pivot();
        let dst = F.iterate(&p, n).pivot();
        let (jac, _) = orbit_jacobian(&F, &p, n, src, dst).unwrap();
        let a = to_chart(&p, src).unwrap();
        let image = |u: C64, v: C64| to_chart(&F.iterate(&from_chart(&AffinePair { chart: src, u, v }).unwrap(), n), dst).unwrap().as_array();
        let h = 1e-7;
        let scale = jac.0.iter().flatten().map(|c| c.norm()).fold(1.0, f64::max);
        for (k, (du, dv)) in [(C64::new(h, 0.0), C64::new(0.0, 0.0)), (C64::new(0.0, 0.0), C64::new(h, 0.0))].into_iter().enumerate() {
            let plus = image(a.u + du, a.v + dv);
            let minus = image(a.u - du, a.v - dv);
            for i in 0..2 {
                let diff = (plus[i] - minus[i]) / (2.0 * h);
                prop_assert!((diff - jac.0[i][k]).norm() <= 1e-5 * scale);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lyapunov_ignores_a_shift_along_the_orbit(t in turns()) {
        let p = conic_point(C64::from_polar(1.0, std::f64::consts::TAU * t));
        let policy = auto_policy(&F, &p);
        let mut q = p;
        for _ in 0..10 {
            q = forward_step(&F, &q, policy).unwrap();
        }
        let a = lyapunov(&F, &p, 20_000, 7, policy).unwrap();
        let b = lyapunov(&F, &q, 20_000, 7, policy).unwrap();
        let tol = 2.0 * a.stderr.max(b.stderr);
        prop_assert!((a.chi1 - b.chi1).abs() <= tol, "{a:?} {b:?}");
        prop_assert!((a.chi2 - b.chi2).abs() <= tol, "{a:?} {b:?}");
    }

    #[test]
    fn local_manifolds_are_compatible(t in turns()) {
        let (unstable, stable) = manifold_compatibility(&F, t).unwrap();
        prop_assert!(unstable <= 1e-6 && stable <= 1e-6, "{unstable:e} {stable:e}");
    }

    #[test]
    fn graph_transform_flattens(t in turns(), slope in 0.1f64..0.9, a in 0.0f64..6.3) {
        let p = conic_point_turns(t);
        let o = backward_orbit(&F, &p, 40, BranchPolicy::NearestToConic, 0).unwrap();
        let frames = frame_chain(&F, &o, 4, 0.05, 0.05).unwrap();
        let steep = [C64::new(0.0, 0.0), C64::from_polar(slope, a)];
        let mut g = GraphDisk::from_base_coeffs(frames[4], GraphKind::Horizontal, &steep).unwrap();
        let mut bounds = vec![g.lipschitz_bound];
        for j in (1..=4).rev() {
            g = graph_transform(&F, &frames[j], &frames[j - 1], &g).unwrap();
            bounds.push(g.lipschitz_bound);
        }
        prop_assert!(bounds.windows(2).all(|w| w[1] <= w[0]), "{bounds:?}");
    }

    #[test]
    fn unstable_disk_is_the_conic_arc(t in turns()) {
        let p = conic_point_turns(t);
        let o = backward_orbit(&F, &p, 40, BranchPolicy::NearestToConic, 0).unwrap();
        let frames = frame_chain(&F, &o, 6, 0.05, 0.05).unwrap();
        let g = local_unstable(&F, &o, &frames, 6).unwrap();
        for y in g.ring(1.0, 32).unwrap().iter().chain(&g.ring(0.5, 16).unwrap()) {
            let arc = conic_point(conic_parameter(y));
            prop_assert!(dist(y, &arc) <= 1e-8, "{:e}", dist(y, &arc));
            prop_assert!(conic_defect(y) <= 1e-8);
        }
    }

    #[test]
    fn unstable_direction_aligns_with_the_conic(t in turns()) {
        // pushed-forward generic vectors approach the conic tangent at the
        // rate exp(-(chi1 - chi2)) per step; with gamma = 0.05 the fitted
        // slope must be within 20% of chi1 - chi2 - 2 gamma
        let f = &*F2;
        let p = conic_point_turns(t);
        let o = backward_orbit(f, &p, 20, BranchPolicy::NearestToConic, 0).unwrap();
        let tangent = tangent_in_chart(conic_parameter(&o.head()), o.head().pivot());
        let generic: V2 = [C64::new(0.8, 0.1), C64::new(0.3, -0.5)];
        let mut samples = vec![];
        for m in 2..=12 {
            let mut v = generic;
            for k in (1..=m).rev() {
                let (src, dst) = (o.points[k], o.points[k - 1]);
                let w = f.chart_jacobian(&src, src.pivot(), dst.pivot()).unwrap().apply(&v);
                let n = norm2(&w);
                v = [w[0] / n, w[1] / n];
            }
            samples.push((m as f64, line_angle_sin(&v, &tangent).ln()));
        }
        let n = samples.len() as f64;
        let (mx, my) = (samples.iter().map(|s| s.0).sum::<f64>() / n, samples.iter().map(|s| s.1).sum::<f64>() / n);
        let slope = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum::<f64>()
            / samples.iter().map(|s| (s.0 - mx).powi(2)).sum::<f64>();
        let expected = -(2f64.ln() - 0.4f64.ln() - 0.1);
        prop_assert!((slope - expected).abs() <= 0.2 * expected.abs(), "slope {slope} expected {expected}");
    }
}
