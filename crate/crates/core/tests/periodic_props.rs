use std::sync::LazyLock;

use holodyn::endo::{family_ftheta, HomPolyMap};
use holodyn::periodic::{find_periodic, polish, PeriodicPoint, Strategy};
use holodyn::projgeom::{dist, normalize, C64};
use proptest::prelude::*;

static F: LazyLock<HomPolyMap> = LazyLock::new(|| family_ftheta(C64::new(0.01, 0.0)).unwrap());
static CYCLES: LazyLock<Vec<Vec<PeriodicPoint>>> =
    LazyLock::new(|| (1..=6).map(|n| find_periodic(&F, n, 0.05, Strategy::ConicRoots, 1).unwrap()).collect());

fn divisors(n: usize) -> impl Iterator<Item = usize> {
    (1..=n).filter(move |k| n.is_multiple_of(*k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn polish_returns_from_a_small_kick(n in 1usize..=6, pick in any::<prop::sample::Index>(), kick in prop::array::uniform6(-1.0f64..1.0)) {
        let pp = pick.get(&CYCLES[n - 1]);
        let mut v = pp.point.coords();
        for (k, c) in v.iter_mut().enumerate() {
            *c += C64::new(kick[2 * k], kick[2 * k + 1]) * 1e-5;
        }
        let seed = normalize(v).unwrap();
        let back = polish(&F, &seed, n).expect("newton converges");
        prop_assert!(dist(&back, &pp.point) <= 1e-9, "{:e}", dist(&back, &pp.point));
    }
}

#[test]
fn minimal_periods_are_consistent() {
    for (i, cycle) in CYCLES.iter().enumerate() {
        let n = i + 1;
        for pp in cycle {
            assert_eq!(pp.period, n);
            assert_eq!(n % pp.minimal_period, 0);
            let m = pp.minimal_period;
            assert!(dist(&F.iterate(&pp.point, m), &pp.point) <= 1e-9);
            for k in divisors(m).filter(|&k| k < m) {
                assert!(dist(&F.iterate(&pp.point, k), &pp.point) > 1e-7, "period {n} point returns after {k}");
            }
        }
        // every point of minimal period m | n also shows up at period m
        for pp in cycle {
            let m = pp.minimal_period;
            assert!(CYCLES[m - 1].iter().any(|q| dist(&q.point, &pp.point) < 1e-7));
        }
    }
}
