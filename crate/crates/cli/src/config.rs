use std::f64::consts::{PI, TAU};
use std::path::Path;

use clap::{Args, ValueEnum};
use holodyn::endo::{family_ftheta, power_map, product_saddle, HomPolyMap};
use holodyn::projgeom::{normalize, ProjPoint, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Parse(String, String),
    #[error("invalid {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MapName {
    #[serde(alias = "Ftheta")]
    #[value(alias = "Ftheta")]
    Ftheta,
    Power,
    ProductSaddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    GridNewton,
    ConicRoots,
    Both,
}

impl From<StrategyName> for holodyn::periodic::Strategy {
    fn from(s: StrategyName) -> Self {
        match s {
            StrategyName::GridNewton => Self::GridNewton,
            StrategyName::ConicRoots => Self::ConicRoots,
            StrategyName::Both => Self::Both,
        }
    }
}

/// Declares the resolved config, its serde form with every key defaulted,
/// and the command-line overrides with one flag per key.
macro_rules! config {
    ($($(#[doc = $doc:literal])* $key:ident : $ty:ty = $default:expr),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct Config {
            $($(#[doc = $doc])* pub $key: $ty,)*
        }

        impl Default for Config {
            fn default() -> Self {
                Self { $($key: $default,)* }
            }
        }

        #[derive(Debug, Clone, Default, Args)]
        pub struct Overrides {
            $($(#[doc = $doc])* #[arg(long, global = true)] pub $key: Option<$ty>,)*
        }

        impl Config {
            pub fn apply(&mut self, o: &Overrides) {
                $(if let Some(v) = &o.$key { self.$key = v.clone(); })*
            }
        }
    };
}

config! {
    /// Built-in map.
    map: MapName = MapName::Ftheta,
    /// JSON file with a serialized map; replaces `map` when set.
    map_file: String = String::new(),
    /// Real part of the family parameter.
    theta: f64 = 0.01,
    /// Imaginary part of the family parameter.
    theta_im: f64 = 0.0,
    /// Degree of the power map.
    degree: u32 = 2,
    /// Region U(delta) = {conic_defect <= delta}.
    delta: f64 = 0.05,
    /// Trapping target U(margin).
    margin: f64 = 0.025,
    /// Jacobian bound for certify-sj.
    alpha: f64 = 0.2,
    /// Subdivision depth cap for certify-trap.
    max_depth: u32 = 14,
    /// Subdivision depth cap for certify-sj.
    sj_max_depth: u32 = 18,
    seed: u64 = 20_240_917,
    green_depth: usize = 40,
    orbit_depth: usize = 40,
    /// Forward steps for lyapunov and birkhoff.
    steps: usize = 100_000,
    /// Periods or pushforward steps: `a..b` (inclusive) or a comma list.
    n: String = "1..8".into(),
    strategy: StrategyName = StrategyName::Both,
    /// Base point `[w^2 : 1 : w + offset]` with `w = exp(2 pi i turns)`.
    turns: f64 = 0.2718,
    offset: f64 = 0.0,
    /// Explicit base point `re_x,im_x,re_y,im_y,re_z,im_z`; replaces `turns`.
    point: String = String::new(),
    /// Disk radius in the conic parameter.
    radius: f64 = 0.5,
    n_grid: usize = 128,
    /// Slice radius inside the unit parameter disk.
    r: f64 = 0.9,
    gamma: f64 = 0.05,
    eps0: f64 = 0.05,
    /// Graph transform steps for the unstable disk.
    unstable_steps: usize = 6,
    /// Taylor order of the stable disk.
    stable_order: usize = 3,
    /// Stable family size for holonomy.
    members: usize = 32,
    /// Angular span of the stable family.
    span: f64 = 0.4,
    bins: usize = 16,
    /// Transversal shift in units of the frame radius.
    shift: f64 = 0.25,
    arcs: usize = 16,
    arc_start: f64 = 0.0,
    arc_end: f64 = PI,
    /// Slice atoms for pushforward.
    atoms: usize = 1024,
    /// Atoms of the reference measure for birkhoff.
    reference_atoms: usize = 512,
    /// Sampled targets for topdegree-probe.
    samples: usize = 200,
    /// Acceptance criteria for report: `all` or a comma list of ids.
    criteria: String = "all".into(),
}

impl Config {
    /// Defaults, then the file, then the flags.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(name.clone(), e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(name, e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse(name, e.to_string()))
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if self.n_grid < 8 {
            return Err(invalid("n_grid", "must be at least 8"));
        }
        if !(self.radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        self.periods()?;
        self.criteria_ids()?;
        if !self.point.is_empty() {
            self.base_point()?;
        }
        Ok(())
    }

    pub fn periods(&self) -> Result<Vec<usize>, ConfigError> {
        let bad = |s: &str| invalid("n", format!("cannot parse {s:?}"));
        let s = self.n.trim();
        let out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad(s))?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad(s))?;
            (a..=b).collect()
        } else {
            s.split(',').map(|t| t.trim().parse().map_err(|_| bad(s))).collect::<Result<_, _>>()?
        };
        if out.is_empty() {
            return Err(invalid("n", "empty range"));
        }
        Ok(out)
    }

    pub fn criteria_ids(&self) -> Result<Vec<u8>, ConfigError> {
        if self.criteria.trim() == "all" {
            return Ok((1..=11).collect());
        }
        self.criteria
            .split(',')
            .map(|t| match t.trim().parse::<u8>() {
                Ok(k @ 1..=11) => Ok(k),
                _ => Err(invalid("criteria", format!("{t:?} is not a criterion id in 1..=11"))),
            })
            .collect()
    }

    pub fn theta_c(&self) -> C64 {
        C64::new(self.theta, self.theta_im)
    }

    /// Center of the conic disks: `exp(2 pi i turns)`.
    pub fn w0(&self) -> C64 {
        C64::from_polar(1.0, TAU * self.turns)
    }

    pub fn base_point(&self) -> Result<ProjPoint, ConfigError> {
        if self.point.is_empty() {
            let w = self.w0();
            return normalize([w * w, C64::new(1.0, 0.0), w + self.offset])
                .map_err(|e| invalid("turns", e.to_string()));
        }
        let v: Vec<f64> = self
            .point
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| invalid("point", e.to_string()))?;
        if v.len() != 6 {
            return Err(invalid("point", "need six numbers"));
        }
        normalize([C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])])
            .map_err(|e| invalid("point", e.to_string()))
    }

    pub fn build_map(&self) -> Result<HomPolyMap, ConfigError> {
        if !self.map_file.is_empty() {
            let text = std::fs::read_to_string(&self.map_file).map_err(|e| ConfigError::Io(self.map_file.clone(), e))?;
            return serde_json::from_str(&text).map_err(|e| ConfigError::Parse(self.map_file.clone(), e.to_string()));
        }
        match self.map {
            MapName::Ftheta => family_ftheta(self.theta_c()).map_err(|e| invalid("theta", e.to_string())),
            MapName::ProductSaddle => product_saddle(self.theta_c()).map_err(|e| invalid("theta", e.to_string())),
            MapName::Power if self.degree >= 2 => Ok(power_map(self.degree)),
            MapName::Power => Err(invalid("degree", "must be at least 2")),
        }
    }
}
