use std::sync::LazyLock;

use holodyn::endo::{family_ftheta, HomPolyMap};
use holodyn::measures::{nu_reference, wasserstein1, EmpiricalMeasure, W1Mode};
use holodyn::projgeom::{normalize, ProjPoint, C64};
use proptest::prelude::*;

static F: LazyLock<HomPolyMap> = LazyLock::new(|| family_ftheta(C64::new(0.01, 0.0)).unwrap());

fn point() -> impl Strategy<Value = ProjPoint> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter_map("zero vector", |a| normalize([C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5])]).ok())
}

fn cloud() -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec((point(), 0.1f64..1.0), 1..25)
        .prop_map(|atoms| EmpiricalMeasure::new(atoms, "cloud").unwrap().normalized().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn transport_distance_is_a_metric(a in cloud(), b in cloud(), c in cloud()) {
        let w = |x: &EmpiricalMeasure, y: &EmpiricalMeasure| {
            let r = wasserstein1(x, y).unwrap();
            assert_eq!(r.mode, W1Mode::Exact);
            r.value
        };
        prop_assert!(w(&a, &a).abs() <= 1e-12);
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() <= 1e-12);
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-12);
    }

    #[test]
    fn pushforward_keeps_mass(atoms in prop::collection::vec((point(), 0.0f64..1.0), 1..50)) {
        let mu = EmpiricalMeasure::new(atoms, "cloud").unwrap();
        prop_assert_eq!(mu.pushforward(&F).total_mass(), mu.total_mass());
    }
}

#[test]
fn reference_measure_is_invariant() {
    for n in [8, 64, 256] {
        let pushed = nu_reference(&F, 2 * n).unwrap().pushforward(&F);
        let target = nu_reference(&F, n).unwrap();
        assert_eq!(pushed.len(), n);
        let w = wasserstein1(&pushed, &target).unwrap().value;
        assert!(w < 1e-9, "N = {n}: {w:e}");
    }
}
