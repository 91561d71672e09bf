//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [run]
//! out = "evglab-out"
//! resolution = 1.0
//! jobs = 0
//! checks = ["manifold", "tilde", "heat", "green", "rearrange", "mt"]
//!
//! [[manifold]]
//! id = "taper3"
//! family = "exp_taper"
//! n = 3
//! c = 0.8
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::geomspace;
use crate::manifold::Family;
use crate::Manifold;

/// A group of checks run per manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckGroup {
    Manifold,
    Tilde,
    Heat,
    Green,
    Rearrange,
    Mt,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 6] = [
        CheckGroup::Manifold,
        CheckGroup::Tilde,
        CheckGroup::Heat,
        CheckGroup::Green,
        CheckGroup::Rearrange,
        CheckGroup::Mt,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CheckGroup::Manifold => "manifold",
            CheckGroup::Tilde => "tilde",
            CheckGroup::Heat => "heat",
            CheckGroup::Green => "green",
            CheckGroup::Rearrange => "rearrange",
            CheckGroup::Mt => "mt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Grid refinement factor shared by every solver; refinement checks compare it with twice
    /// its value.
    #[serde(default = "one")]
    pub resolution: f64,
    /// Worker threads; 0 lets rayon decide.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "all_groups")]
    pub checks: Vec<CheckGroup>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { out: default_out(), resolution: 1.0, jobs: 0, checks: all_groups() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub id: String,
    pub family: String,
    pub n: usize,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    /// Upper end of the admissibility scan and of the geometry grid.
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl ManifoldConfig {
    pub fn euclidean(n: usize) -> Self {
        ManifoldConfig {
            id: format!("euclidean{n}"),
            family: "euclidean".into(),
            n,
            c: None,
            a: None,
            r_max: default_r_max(),
            grid_points: default_grid_points(),
        }
    }

    pub fn family(&self) -> Result<Family> {
        Family::from_tag(&self.family, self.c, self.a).map_err(|e| LabError::Config(format!("manifold '{}': {e}", self.id)))
    }

    pub fn build(&self) -> Result<Manifold> {
        Manifold::new(self.family()?, self.n, self.r_max)
    }
}

/// How the sharpness sweeps pick `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSetting {
    Fixed,
    Calibrated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtConfig {
    /// Orders to sweep; empty means every supported order below `n`.
    #[serde(default)]
    pub alphas: Vec<usize>,
    #[serde(default = "default_r_list")]
    pub r_list: Vec<f64>,
    #[serde(default = "default_theta")]
    pub theta: Vec<f64>,
    #[serde(default = "default_denom")]
    pub denom: Vec<f64>,
    #[serde(default = "default_rho")]
    pub rho: RhoSetting,
    #[serde(default = "one")]
    pub rho_value: f64,
    /// Moser radii; empty picks them per manifold from small-ball volumes `10^{-20} .. 10^{-240}`.
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "one")]
    pub kappa: f64,
}

impl Default for MtConfig {
    fn default() -> Self {
        MtConfig {
            alphas: Vec::new(),
            r_list: default_r_list(),
            theta: default_theta(),
            denom: default_denom(),
            rho: default_rho(),
            rho_value: 1.0,
            eps: Vec::new(),
            kappa: 1.0,
        }
    }
}

/// Constant used in the annular kernel conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelConstant {
    /// `sigma^{-alpha/(n-alpha)} / gamma`.
    Adjusted,
    /// `1 / gamma`, wrong on `sigma < 1`; kept to demonstrate the failure.
    Unadjusted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_constant")]
    pub constant: KernelConstant,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { constant: KernelConstant::Adjusted }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, rename = "manifold")]
    pub manifolds: Vec<ManifoldConfig>,
    #[serde(default)]
    pub mt: MtConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
}

impl Default for Config {
    /// The default suite: every check group on flat three-space.
    fn default() -> Self {
        Config {
            run: RunConfig::default(),
            manifolds: vec![ManifoldConfig::euclidean(3)],
            mt: MtConfig::default(),
            kernel: KernelConfig::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialisation")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(LabError::Config(s));
        if !(self.run.resolution > 0.0 && self.run.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.run.resolution));
        }
        let mut ids: Vec<&str> = self.manifolds.iter().map(|m| m.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("manifold ids must be unique".into());
        }
        for m in &self.manifolds {
            if m.id.is_empty() || !m.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("manifold id '{}' must be nonempty [A-Za-z0-9_-]", m.id));
            }
            if m.n < 2 {
                return bad(format!("manifold '{}': n must be at least 2", m.id));
            }
            if m.grid_points < 8 {
                return bad(format!("manifold '{}': grid_points must be at least 8", m.id));
            }
            m.family()?;
        }
        let mt = &self.mt;
        if mt.r_list.len() < 3 || mt.r_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("mt.r_list needs at least three increasing radii".into());
        }
        if !mt.eps.is_empty() && mt.eps.len() < 3 || mt.eps.windows(2).any(|w| w[1] >= w[0]) || mt.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("mt.eps needs to be empty or hold at least three decreasing values in (0, 1)".into());
        }
        if mt.theta.iter().chain(&mt.denom).any(|&x| !(x > 0.0)) || mt.kappa <= 0.0 || mt.rho_value <= 0.0 {
            return bad("mt.theta, mt.denom, mt.kappa and mt.rho_value must be positive".into());
        }
        Ok(())
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("evglab-out")
}
fn one() -> f64 {
    1.0
}
fn all_groups() -> Vec<CheckGroup> {
    CheckGroup::ALL.to_vec()
}
fn default_r_max() -> f64 {
    1e8
}
fn default_grid_points() -> usize {
    241
}
fn default_r_list() -> Vec<f64> {
    geomspace(1e2, 1e4, 5)
}
fn default_theta() -> Vec<f64> {
    vec![1.0, 1.1]
}
fn default_denom() -> Vec<f64> {
    vec![1.0, 0.5]
}
fn default_rho() -> RhoSetting {
    RhoSetting::Fixed
}
fn default_constant() -> KernelConstant {
    KernelConstant::Adjusted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_run() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.run, RunConfig::default());
        assert!(c.manifolds.is_empty());
    }

    #[test]
    fn round_trip() {
        let c = Config::default();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn full_file() {
        let c = Config::parse(
            r#"
[run]
out = "x"
resolution = 0.5
checks = ["heat", "mt"]
[[manifold]]
id = "p"
family = "poly_taper"
n = 4
c = 0.5
a = 0.5
[mt]
alphas = [2]
rho = "calibrated"
[kernel]
constant = "unadjusted"
"#,
        )
        .unwrap();
        assert_eq!(c.run.checks, vec![CheckGroup::Heat, CheckGroup::Mt]);
        assert_eq!(c.manifolds[0].family().unwrap(), Family::PolyTaper { c: 0.5, a: 0.5 });
        assert_eq!(c.mt.rho, RhoSetting::Calibrated);
        assert_eq!(c.kernel.constant, KernelConstant::Unadjusted);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[run]\nresolution = -1",
            "[run]\nbogus = 1",
            "[run]\nchecks = [\"nope\"]",
            "[[manifold]]\nid = \"a\"\nfamily = \"exp_taper\"\nn = 3",
            "[[manifold]]\nid = \"a\"\nfamily = \"euclidean\"\nn = 3\n[[manifold]]\nid = \"a\"\nfamily = \"euclidean\"\nn = 2",
            "[mt]\neps = [0.1, 0.2, 0.01]",
            "not toml at all [",
        ] {
            assert!(matches!(Config::parse(text), Err(LabError::Config(_))), "{text}");
        }
    }
}
