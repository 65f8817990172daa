//! One line per acceptance criterion; every tolerance is pinned here and
//! checked against the raw measurements, independently of the runner's own
//! verdict.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use holodyn::suite::{self, CriterionReport};

const CERTIFIED: f64 = 0.0;
const FALSIFIED: f64 = 1.0;

fn report(r: &CriterionReport, checks: &[(&str, bool)]) -> bool {
    let mut failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if failed.is_empty() != r.passed {
        failed.push("runner verdict agrees with the pinned checks");
    }
    let ok = failed.is_empty() && r.error.is_none();
    let mut out = format!("{} {:>2} {}\n", if ok { "PASS" } else { "FAIL" }, r.id, r.title);
    for m in &r.metrics {
        out += &format!("      {} = {:e}\n", m.name, m.value);
    }
    if let Some(e) = &r.error {
        out += &format!("      error: {e}\n");
    }
    for f in &failed {
        out += &format!("      violated: {f}\n");
    }
    // the raw handle bypasses the harness capture, so the summary shows
    // up in plain `cargo test` logs
    let _ = std::io::stdout().lock().write_all(format!("\n{out}").as_bytes());
    ok
}

fn c1() -> bool {
    let r = suite::trapping();
    report(&r, &[
        ("certified", r.metric("status") == CERTIFIED),
        ("depth <= 14", r.metric("depth") <= 14.0),
        ("within 60 s", r.metric("seconds") <= 60.0),
        ("1e5 samples", r.metric("samples") >= 1e5),
        ("no violations", r.metric("violations") == 0.0),
        ("theta = 0.9 not certified", r.metric("control_status") != CERTIFIED),
    ])
}

fn c2() -> bool {
    let r = suite::jacobian();
    report(&r, &[
        ("alpha 0.2 certified", r.metric("status_alpha_0.2") == CERTIFIED),
        ("alpha 0.01 falsified", r.metric("status_alpha_0.01") == FALSIFIED),
        ("witness verified", r.metric("witness_verified") == 1.0 && r.metric("witness_ratio") >= 0.01),
    ])
}

fn c3() -> bool {
    let r = suite::lefschetz();
    let mut checks: Vec<(String, bool)> = (1..=8)
        .map(|n| (format!("count at n = {n} is 2^n + 1"), r.metric(&format!("count_{n}")) == (1u64 << n) as f64 + 1.0))
        .collect();
    checks.push(("residuals < 1e-9".into(), r.metric("max_residual") < 1e-9));
    checks.push(("within 5 min".into(), r.seconds <= 300.0));
    let checks: Vec<(&str, bool)> = checks.iter().map(|(s, b)| (s.as_str(), *b)).collect();
    report(&r, &checks)
}

fn c4() -> bool {
    let r = suite::equidistribution();
    let w1: Vec<f64> = (1..=8).map(|n| r.metric(&format!("w1_{n}"))).collect();
    let mut peak: f64 = 0.0;
    let monotone = w1.windows(2).all(|w| {
        peak = peak.max(w[0]);
        w[1] <= w[0] + 0.1 * peak
    });
    let bounded = w1.iter().enumerate().all(|(k, w)| *w <= PI / ((1u64 << (k + 1)) as f64 - 1.0) + 0.01);
    report(&r, &[
        ("non-increasing with 10% slack", monotone),
        ("W1 <= pi/(2^n - 1) + 0.01", bounded),
        ("n = 8 below 0.023", w1[7] <= 0.023),
    ])
}

fn c5() -> bool {
    let r = suite::hyperbolicity();
    report(&r, &[
        ("chi1 = log 2 +- 0.01", (r.metric("chi1") - LN_2).abs() <= 0.01),
        ("chi2 = log 0.02 +- 0.02", (r.metric("chi2") - 0.02f64.ln()).abs() <= 0.02),
        ("under 30 s", r.metric("seconds") < 30.0),
        // all 2^n - 1 roots of unity for n = 1..8, counted with period
        ("every circle cycle checked", r.metric("saddles_checked") == (1..=8).map(|n| (1u64 << n) as f64 - 1.0).sum::<f64>()),
    ])
}

fn c6() -> bool {
    let r = suite::disintegration();
    report(&r, &[
        ("max relative < 0.1", r.metric("max_relative") < 0.1),
        ("skewed control > 0.3", r.metric("control_max_relative") > 0.3),
    ])
}

fn c7() -> bool {
    let r = suite::holonomy();
    report(&r, &[
        ("32 members", r.metric("members") == 32.0),
        ("max relative < 0.05", r.metric("max_relative") < 0.05),
        ("D = D' gives 0", r.metric("same_disk_max_relative") == 0.0),
    ])
}

fn c8() -> bool {
    let r = suite::pushforward();
    let w1: Vec<f64> = (0..=10).map(|n| r.metric(&format!("w1_{n}"))).collect();
    let mut peak: f64 = 0.0;
    let monotone = w1.windows(2).all(|w| {
        peak = peak.max(w[0]);
        w[1] <= w[0] + 0.1 * peak
    });
    report(&r, &[("non-increasing with 10% slack", monotone), ("W1 at n = 10 < 0.05", w1[10] < 0.05)])
}

fn c9() -> bool {
    let r = suite::basin();
    report(&r, &[
        ("20 orbits", r.metric("orbits") == 20.0),
        ("W1 < 0.05", r.metric("max_w1") < 0.05),
        ("mean defect < 1e-3", r.metric("max_mean_defect") < 1e-3),
    ])
}

fn c10() -> bool {
    let r = suite::kernels();
    let within = ["projgeom", "endo", "green", "certify", "orbits", "measures"]
        .iter()
        .all(|s| r.metric(&format!("{s}_seconds")) <= 120.0);
    report(&r, &[
        ("metric axioms", r.metric("metric_axiom_violation") <= 1e-12),
        ("homogeneity", r.metric("homogeneity_residual") < 1e-12),
        ("finite-difference Jacobian", r.metric("jacobian_fd_gap") < 1e-6),
        ("telescoping bound", r.metric("cauchy_excess") <= 1e-12),
        ("functional equation", r.metric("functional_residual") < 1e-10),
        ("enclosure soundness", r.metric("enclosure_failures") == 0.0),
        ("chain rule", r.metric("chain_rule_gap") < 1e-5),
        ("unstable f-compatibility", r.metric("unstable_compatibility") < 1e-6),
        ("stable f-compatibility", r.metric("stable_compatibility") < 1e-6),
        ("transport metric axioms", r.metric("transport_axiom_violation") <= 1e-9),
        ("mass conservation", r.metric("pushforward_mass_change") == 0.0),
        ("each suite within 2 min", within),
    ])
}

fn c11() -> bool {
    let r = suite::sentinels();
    report(&r, &[
        ("squaring Green exactly 0", r.metric("squaring_green_nonzero") == 0.0),
        ("conic invariance < 1e-12", r.metric("conic_invariance_defect") < 1e-12),
        ("flat graph fixed to 1e-10", r.metric("flat_graph_drift") <= 1e-10),
    ])
}

#[test]
fn acceptance() {
    let results = [c1(), c2(), c3(), c4(), c5(), c6(), c7(), c8(), c9(), c10(), c11()];
    let failed: Vec<usize> = results.iter().enumerate().filter(|r| !r.1).map(|r| r.0 + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
