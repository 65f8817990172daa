use clap::Subcommand;
use holodyn::certify::{certify_sj, certify_trapping, witness_conic};
use holodyn::endo::{small_topdegree_probe, HomPolyMap};
use holodyn::green::{laplacian_cells, slice_mass_report, DiskParam, Green};
use holodyn::measures::{
    birkhoff, disintegration_check, disintegration_check_against, equidistribution_report, nu_reference,
    pushforward_check, skewed_conditional, wasserstein1, ArcPartition, TestDictionary,
};
use holodyn::orbits::{
    auto_policy, backward_orbit, conic_stable_family, conic_transversal, frame_chain, holonomy_probe, local_stable,
    local_unstable, lyapunov, make_frame, oseledets_directions, BranchPolicy, GraphDisk, GROWTH_STEPS,
};
use holodyn::periodic::{find_periodic, lefschetz_expected};
use holodyn::projgeom::{conic_defect, ProjPoint, C64};
use holodyn::{suite, Error};
use serde_json::json;

use crate::config::{Config, ConfigError};
use crate::output::{num, Outcome, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Certify that the map sends U(delta) into U(margin).
    CertifyTrap,
    /// Certify |chart_det| < alpha on U(delta).
    CertifySj,
    /// Conic through the base point and a certified bound on its defect.
    WitnessConic,
    /// Green function at the base point and along a transverse segment.
    Green,
    /// Slice mass of the Green current on a conic disk.
    Slice,
    /// Lyapunov exponents along the forward orbit of the base point.
    Lyapunov,
    /// Oseledets splitting at the base point along a backward history.
    Oseledets,
    /// Local unstable and stable disks at the base point.
    Manifolds,
    /// Slice masses of the Green current on two transversals to a stable family.
    Holonomy,
    /// Periodic points of each period in `n` inside U(delta).
    Periodic,
    /// Periodic counts and transport distance of nu_n to the reference.
    Equidistribution,
    /// Birkhoff averages along the forward orbit of the base point.
    Birkhoff,
    /// Conditionals of the Green current on an arc partition of the curve.
    Disintegration,
    /// Forward images of a slice sample against the reference measure.
    Pushforward,
    /// Preimage counts inside U(delta) under iterates.
    TopdegreeProbe,
    /// Run the acceptance criteria.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CertifyTrap => "certify-trap",
            Command::CertifySj => "certify-sj",
            Command::WitnessConic => "witness-conic",
            Command::Green => "green",
            Command::Slice => "slice",
            Command::Lyapunov => "lyapunov",
            Command::Oseledets => "oseledets",
            Command::Manifolds => "manifolds",
            Command::Holonomy => "holonomy",
            Command::Periodic => "periodic",
            Command::Equidistribution => "equidistribution",
            Command::Birkhoff => "birkhoff",
            Command::Disintegration => "disintegration",
            Command::Pushforward => "pushforward",
            Command::TopdegreeProbe => "topdegree-probe",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Runtime(#[from] Error),
}

type Run = Result<Outcome, RunError>;

fn point_cells(p: &ProjPoint) -> Vec<String> {
    p.coords().iter().flat_map(|c| [num(c.re), num(c.im)]).collect()
}

const POINT_COLS: [&str; 6] = ["re_x", "im_x", "re_y", "im_y", "re_z", "im_z"];

fn with_cols(lead: &[&'static str], trail: &[&'static str]) -> Vec<&'static str> {
    lead.iter().chain(&POINT_COLS).chain(trail).copied().collect()
}

fn ring_table(name: &str, disk: &GraphDisk) -> Result<Table, Error> {
    let cols = with_cols(&["k"], &["conic_defect"]);
    let mut t = Table::new(name, &cols, true);
    for (k, p) in disk.ring(1.0, 64)?.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(point_cells(p));
        row.push(num(conic_defect(p)));
        t.push(row);
    }
    Ok(t)
}

pub fn run(cmd: Command, cfg: &Config) -> Run {
    if cmd == Command::Report {
        return report(cfg);
    }
    let map = cfg.build_map()?;
    match cmd {
        Command::CertifyTrap => {
            let c = certify_trapping(&map, cfg.delta, cfg.margin, cfg.max_depth)?;
            Ok(Outcome::new(json!({ "certificate": c })).code(c.status.exit_code()))
        }
        Command::CertifySj => {
            let c = certify_sj(&map, cfg.alpha, cfg.delta, cfg.sj_max_depth)?;
            Ok(Outcome::new(json!({ "certificate": c })).code(c.status.exit_code()))
        }
        Command::WitnessConic => {
            let p = cfg.base_point()?;
            let w = witness_conic(&p, cfg.delta)?;
            Ok(Outcome::new(json!({ "point": p, "witness": w })))
        }
        Command::Green => green(cfg, &map),
        Command::Slice => {
            let g = Green::new(&map);
            let disk = DiskParam::conic(cfg.w0(), cfg.radius, cfg.n_grid)?;
            let s = slice_mass_report(&g, &disk, cfg.r, cfg.green_depth)?;
            let mut t = Table::new("slice_cells", &["re_t", "im_t", "mass"], true);
            for (c, m) in laplacian_cells(&g, &disk, cfg.green_depth)? {
                t.push(vec![num(c.re), num(c.im), num(m)]);
            }
            Ok(Outcome::new(json!({ "slice": s, "green_constant": g.constant() })).table(t))
        }
        Command::Lyapunov => {
            let p = cfg.base_point()?;
            let policy = auto_policy(&map, &p);
            let est = lyapunov(&map, &p, cfg.steps, cfg.seed, policy)?;
            Ok(Outcome::new(json!({ "point": p, "policy": policy, "estimate": est })))
        }
        Command::Oseledets => {
            let p = cfg.base_point()?;
            let orbit = backward_orbit(&map, &p, cfg.orbit_depth, BranchPolicy::NearestToConic, cfg.seed)?;
            let sp = oseledets_directions(&map, &orbit, GROWTH_STEPS.min(cfg.orbit_depth))?;
            Ok(Outcome::new(json!({ "point": p, "splitting": sp, "orbit_residual": orbit.max_residual(&map) })))
        }
        Command::Manifolds => {
            let p = cfg.base_point()?;
            let orbit = backward_orbit(&map, &p, cfg.orbit_depth, BranchPolicy::NearestToConic, cfg.seed)?;
            let frames = frame_chain(&map, &orbit, cfg.unstable_steps, cfg.gamma, cfg.eps0)?;
            let unstable = local_unstable(&map, &orbit, &frames, cfg.unstable_steps)?;
            let frame = make_frame(&map, &orbit, cfg.gamma, cfg.eps0)?;
            let stable = local_stable(&map, &p, &frame, cfg.stable_order, 10)?;
            Ok(Outcome::new(json!({ "point": p, "unstable": unstable, "stable": stable }))
                .table(ring_table("unstable_ring", &unstable)?)
                .table(ring_table("stable_ring", &stable)?))
        }
        Command::Holonomy => {
            let phi = std::f64::consts::TAU * cfg.turns;
            let family = conic_stable_family(&map, phi, cfg.span, cfg.members, cfg.gamma, cfg.eps0)?;
            let rho = family.first().map_or(0.0, |g| g.frame.rho);
            let d = conic_transversal(cfg.w0(), cfg.radius, C64::new(0.0, 0.0), cfg.n_grid)?;
            let dp = conic_transversal(cfg.w0(), cfg.radius, C64::new(cfg.shift * rho, 0.0), cfg.n_grid)?;
            let rep = holonomy_probe(&map, &d, &dp, &family, cfg.green_depth, cfg.bins)?;
            let mut t = Table::new("holonomy_bins", &["bin", "members", "mass", "mass_prime", "relative", "seed"], true);
            for b in &rep.bins {
                t.push(vec![b.index.to_string(), b.members.to_string(), num(b.mass), num(b.mass_prime), num(b.relative), cfg.seed.to_string()]);
            }
            Ok(Outcome::new(json!({ "frame_radius": rho, "report": rep })).table(t))
        }
        Command::Periodic => periodic(cfg, &map),
        Command::Equidistribution => {
            let rows = equidistribution_report(&map, cfg.periods()?, cfg.delta)?;
            let mut t = Table::new("equidistribution", &["n", "count", "mass", "w1", "bound", "delta", "seed"], true);
            for r in &rows {
                t.push(vec![
                    r.n.to_string(),
                    r.count.to_string(),
                    num(r.mass),
                    num(r.w1),
                    num(r.bound),
                    num(r.delta),
                    cfg.seed.to_string(),
                ]);
            }
            Ok(Outcome::new(json!({ "rows": rows })).table(t))
        }
        Command::Birkhoff => {
            let p = cfg.base_point()?;
            let dict = TestDictionary::standard();
            let res = birkhoff(&map, &p, cfg.steps, &dict, auto_policy(&map, &p))?;
            let reference = nu_reference(&map, cfg.reference_atoms)?;
            let w1 = wasserstein1(&res.orbit_measure, &reference)?;
            let mut t = Table::new("birkhoff", &["function", "average", "reference", "seed"], false);
            for (f, avg) in dict.functions().iter().zip(&res.averages) {
                t.push(vec![f.name(), num(*avg), num(reference.integrate(|q| f.eval(q))), cfg.seed.to_string()]);
            }
            Ok(Outcome::new(json!({
                "point": p,
                "averages": res.averages,
                "mean_conic_defect": res.mean_conic_defect,
                "w1": w1,
            }))
            .table(t))
        }
        Command::Disintegration => {
            let part = ArcPartition::new(cfg.arc_start, cfg.arc_end, cfg.arcs)?;
            let rep = disintegration_check(&map, &part, cfg.green_depth)?;
            let fake = skewed_conditional(&map, &part, 4096)?;
            let control = disintegration_check_against(&map, &part, cfg.green_depth, &fake)?;
            let mut t = Table::new("disintegration", &["arc", "reference", "slice", "skewed"], true);
            for k in 0..part.arcs {
                t.push(vec![k.to_string(), num(rep.reference[k]), num(rep.slice[k]), num(control.reference[k])]);
            }
            let code = i32::from(!rep.passed);
            Ok(Outcome::new(json!({ "report": rep, "skewed_control": control })).table(t).code(code))
        }
        Command::Pushforward => {
            let disk = DiskParam::conic(cfg.w0(), cfg.radius, cfg.n_grid)?;
            let rows = pushforward_check(&map, &disk, cfg.periods()?, cfg.green_depth, cfg.atoms, cfg.seed)?;
            let mut t = Table::new("pushforward", &["n", "w1", "atoms", "depth", "seed"], true);
            for r in &rows {
                t.push(vec![r.n.to_string(), num(r.w1), r.atoms.to_string(), r.depth.to_string(), r.seed.to_string()]);
            }
            Ok(Outcome::new(json!({ "rows": rows })).table(t))
        }
        Command::TopdegreeProbe => {
            let reports = cfg
                .periods()?
                .into_iter()
                .map(|n| small_topdegree_probe(&map, cfg.delta, n as u32, cfg.samples, cfg.seed))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Outcome::new(json!({ "reports": reports })))
        }
        Command::Report => unreachable!("handled above"),
    }
}

fn green(cfg: &Config, map: &HomPolyMap) -> Run {
    let g = Green::new(map);
    let p = cfg.base_point()?;
    let value = g.value(&p, cfg.green_depth)?;
    // profile across the curve along [w^2 : 1 : w + s]
    let w = cfg.w0();
    let mut t = Table::new("green_profile", &["s", "green", "conic_defect"], true);
    for k in 0..=200 {
        let s = cfg.radius * (k as f64 / 100.0 - 1.0);
        let q = holodyn::projgeom::normalize([w * w, C64::new(1.0, 0.0), w + s])?;
        t.push(vec![num(s), num(g.value(&q, cfg.green_depth)?.value), num(conic_defect(&q))]);
    }
    Ok(Outcome::new(json!({ "point": p, "green": value, "green_constant": g.constant() })).table(t))
}

fn periodic(cfg: &Config, map: &HomPolyMap) -> Run {
    let cols = with_cols(&["period", "minimal_period"], &["abs_mult1", "abs_mult2", "class", "residual", "delta", "seed"]);
    let mut t = Table::new("periodic", &cols, false);
    let mut summary = vec![];
    for n in cfg.periods()? {
        let pts = find_periodic(map, n, cfg.delta, cfg.strategy.into(), cfg.seed)?;
        for pp in &pts {
            let mut row = vec![pp.period.to_string(), pp.minimal_period.to_string()];
            row.extend(point_cells(&pp.point));
            row.push(num(pp.multipliers[0].norm()));
            row.push(num(pp.multipliers[1].norm()));
            row.push(serde_json::to_value(pp.class).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
            row.push(num(pp.residual));
            row.push(num(cfg.delta));
            row.push(cfg.seed.to_string());
            t.push(row);
        }
        let max_residual = pts.iter().map(|p| p.residual).fold(0.0, f64::max);
        summary.push(json!({
            "n": n,
            "count": pts.len(),
            "expected": lefschetz_expected(map.degree() as u64, n as u32),
            "max_residual": max_residual,
        }));
    }
    Ok(Outcome::new(json!({ "periods": summary })).table(t))
}

fn report(cfg: &Config) -> Run {
    let reports: Vec<_> = cfg.criteria_ids()?.into_iter().filter_map(suite::criterion).collect();
    let mut t = Table::new("report", &["id", "passed", "seconds"], false);
    for r in &reports {
        println!("{}", r.line());
        t.push(vec![r.id.to_string(), r.passed.to_string(), format!("{:.3}", r.seconds)]);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    Ok(Outcome::new(json!({ "criteria": reports, "failed": failed })).table(t).code(i32::from(failed > 0)))
}
