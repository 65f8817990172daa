use holodyn::endo::{family_ftheta, preimages, HomPolyMap};
use holodyn::projgeom::{conic_defect, conic_point, dist, from_chart, normalize, to_chart, AffinePair, ProjPoint, C64};
use proptest::prelude::*;

fn ftheta(t: f64) -> HomPolyMap {
    family_ftheta(C64::new(t, 0.0)).unwrap()
}

fn point() -> impl Strategy<Value = ProjPoint> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter_map("zero vector", |a| normalize([C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5])]).ok())
}

fn norm(v: &[C64; 3]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lift_is_homogeneous(theta in 0.0f64..1.0, p in point(), r in 0.2f64..5.0, a in 0.0f64..6.3) {
        let f = ftheta(theta);
        let l = C64::from_polar(r, a);
        let v = p.coords();
        let lhs = f.eval_lift(&v.map(|c| c * l));
        let rhs = f.eval_lift(&v).map(|c| c * l * l);
        let gap = norm(&[lhs[0] - rhs[0], lhs[1] - rhs[1], lhs[2] - rhs[2]]);
        prop_assert!(gap <= 1e-13 * norm(&rhs));
    }

    #[test]
    fn chart_jacobian_matches_differences(theta in 0.0f64..1.0, p in point()) {
        let f = ftheta(theta);
        let src = p.pivot();
        let q = f.eval(&p);
        let dst = q.pivot();
        let jac = f.chart_jacobian(&p, src, dst).unwrap();
        let a = to_chart(&p, src).unwrap();
        let image = |u: C64, v: C64| to_chart(&f.eval(&from_chart(&AffinePair { chart: src, u, v }).unwrap()), dst).unwrap().as_array();
        let h = 1e-5;
        let scale = jac.0.iter().flatten().map(|c| c.norm()).fold(1.0, f64::max);
        for (k, (du, dv)) in [(C64::new(h, 0.0), C64::new(0.0, 0.0)), (C64::new(0.0, 0.0), C64::new(h, 0.0))].into_iter().enumerate() {
            let plus = image(a.u + du, a.v + dv);
            let minus = image(a.u - du, a.v - dv);
            for i in 0..2 {
                let diff = (plus[i] - minus[i]) / (2.0 * h);
                prop_assert!((diff - jac.0[i][k]).norm() <= 1e-6 * scale, "entry {i}{k}: {diff} vs {}", jac.0[i][k]);
            }
        }
    }

    #[test]
    fn preimages_contain_the_source(theta in 0.005f64..1.0, p in point()) {
        let f = ftheta(theta);
        let pre = preimages(&f, &f.eval(&p)).unwrap();
        let total: u32 = pre.iter().map(|(_, m)| m).sum();
        prop_assert_eq!(total, 4);
        let nearest = pre.iter().map(|(q, _)| dist(q, &p)).fold(f64::INFINITY, f64::min);
        prop_assert!(nearest <= 1e-8, "nearest preimage at {nearest:e}");
    }

    #[test]
    fn conic_is_invariant(theta in 0.0f64..1.0, r in 0.1f64..10.0, a in 0.0f64..6.3) {
        let f = ftheta(theta);
        let p = conic_point(C64::from_polar(r, a));
        prop_assert!(conic_defect(&f.eval(&p)) <= 1e-12);
    }
}
