use holodyn::projgeom::{conic_defect, dist, normalize, ProjPoint, C64};
use proptest::prelude::*;

fn coords() -> impl Strategy<Value = [C64; 3]> {
    prop::array::uniform6(-1.0f64..1.0).prop_map(|a| [C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5])])
}

fn point() -> impl Strategy<Value = ProjPoint> {
    coords().prop_filter_map("zero vector", |v| normalize(v).ok())
}

fn scalar() -> impl Strategy<Value = C64> {
    (0.1f64..10.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| C64::from_polar(r, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn normalize_is_idempotent(p in point()) {
        let q = normalize(p.coords()).unwrap();
        prop_assert_eq!(p.coords(), q.coords());
    }

    #[test]
    fn dist_ignores_representatives(p in point(), q in point(), a in scalar(), b in scalar()) {
        let pa = normalize(p.coords().map(|c| c * a)).unwrap();
        let qb = normalize(q.coords().map(|c| c * b)).unwrap();
        prop_assert!((dist(&p, &q) - dist(&pa, &qb)).abs() <= 1e-14);
    }

    #[test]
    fn conic_defect_ignores_representatives(p in point(), a in scalar()) {
        let pa = normalize(p.coords().map(|c| c * a)).unwrap();
        prop_assert!((conic_defect(&p) - conic_defect(&pa)).abs() <= 1e-13);
    }

    #[test]
    fn dist_is_symmetric_and_quasi_triangular(p in point(), q in point(), r in point()) {
        prop_assert_eq!(dist(&p, &q), dist(&q, &p));
        prop_assert!(dist(&p, &p) <= 1e-15);
        prop_assert!(dist(&p, &r) <= 2.0 * (dist(&p, &q) + dist(&q, &r)));
        prop_assert!((0.0..=1.0 + 1e-15).contains(&dist(&p, &q)));
    }
}
