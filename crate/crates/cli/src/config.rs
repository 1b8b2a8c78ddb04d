//! Run configuration as read from JSON.

use std::path::{Path, PathBuf};

use harmonic_duality::duality::{default_tolerance, Claim, DualityOptions, GridConfig};
use harmonic_duality::model::dual_ratio;
use harmonic_duality::rdm::{RdmOptions, SubsetSpec};
use harmonic_duality::wavefunction::StateTemplate;
use harmonic_duality::InteractionMatrix;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateConfig {
    Named(String),
    Occupation { nu: Vec<usize> },
    Superposition(StateTemplate),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SubsetConfig {
    List(Vec<Vec<usize>>),
    Named(String),
    Size { all_of_size: usize },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Pass threshold for duality checks; state-dependent default when absent.
    pub duality: Option<f64>,
    /// Allowed `|trace - 1|` of a kernel.
    pub quad: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub r: Vec<f64>,
    pub n: usize,
    #[serde(default = "one")]
    pub d1: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Value>,
    pub state: Option<StateConfig>,
    pub subsets: Option<SubsetConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_q_list")]
    pub q_list: Vec<f64>,
    #[serde(default = "default_checks")]
    pub checks: Vec<Claim>,
    pub delta_grid: Option<Vec<OneOrMany>>,
    pub c: Option<OneOrMany>,
    #[serde(default = "default_basis_size")]
    pub basis_size: usize,
    pub budget: Option<usize>,
    pub sweep: Option<SweepConfig>,
}

fn default_k_max() -> usize {
    40
}

fn default_q_list() -> Vec<f64> {
    vec![2.0]
}

fn default_checks() -> Vec<Claim> {
    vec![Claim::Spectral]
}

fn default_basis_size() -> usize {
    24
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.k_max == 0 {
            return Err(CliError::Config("k_max must be >= 1".into()));
        }
        if let Some(q) = self.q_list.iter().find(|&&q| !(q > 0.0) || q == 1.0 || !q.is_finite()) {
            return Err(CliError::Config(format!("q_list entries must be > 0 and != 1, got {q}")));
        }
        if let Some(t) = self.tolerances.duality.iter().chain(&self.tolerances.quad).find(|&&t| !(t > 0.0)) {
            return Err(CliError::Config(format!("tolerances must be > 0, got {t}")));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<InteractionMatrix, CliError> {
        let spec = self.model.as_ref().ok_or_else(|| CliError::Config("config has no \"model\"".into()))?;
        Ok(InteractionMatrix::from_json(spec)?)
    }

    pub fn template(&self, n: usize) -> Result<StateTemplate, CliError> {
        let t = match &self.state {
            None => StateTemplate::ground(n),
            Some(StateConfig::Named(s)) if s == "ground" => StateTemplate::ground(n),
            Some(StateConfig::Named(s)) => return Err(CliError::Config(format!("unknown state \"{s}\""))),
            Some(StateConfig::Occupation { nu }) => StateTemplate::single(nu.clone()),
            Some(StateConfig::Superposition(t)) => StateTemplate::normalized(t.terms.clone())?,
        };
        for (_, nu) in &t.terms {
            nu.validate(n)?;
        }
        Ok(t)
    }

    /// Subsets in lexicographic order when enumerated.
    pub fn subsets(&self, n: usize) -> Result<Vec<SubsetSpec>, CliError> {
        let size = match &self.subsets {
            None => return Ok(vec![SubsetSpec::new(vec![0], n)?]),
            Some(SubsetConfig::List(list)) => {
                if list.is_empty() {
                    return Err(CliError::Config("\"subsets\" is empty".into()));
                }
                return list.iter().map(|s| SubsetSpec::from_one_based(s, n).map_err(CliError::from)).collect();
            }
            Some(SubsetConfig::Size { all_of_size }) => *all_of_size,
            Some(SubsetConfig::Named(s)) => s
                .strip_prefix("all_of_size_")
                .and_then(|m| m.parse().ok())
                .ok_or_else(|| CliError::Config(format!("subsets must be a list or \"all_of_size_M\", got \"{s}\"")))?,
        };
        Ok(SubsetSpec::all_of_size(size, n)?)
    }

    pub fn rdm_options(&self) -> RdmOptions {
        let mut o = RdmOptions::default();
        if let Some(q) = self.tolerances.quad {
            o.quad_tol = q;
        }
        if let Some(b) = self.budget {
            o.budget = b;
        }
        o
    }

    pub fn duality_options(&self) -> DualityOptions {
        DualityOptions { grid: self.grid, rdm: self.rdm_options() }
    }

    pub fn tolerance(&self, template: &StateTemplate) -> f64 {
        self.tolerances.duality.unwrap_or_else(|| default_tolerance(template))
    }

    pub fn c_values(&self) -> Vec<f64> {
        self.c.as_ref().map(OneOrMany::to_vec).unwrap_or_else(|| vec![7.0])
    }

    pub fn delta_grid(&self) -> Option<Vec<Vec<f64>>> {
        self.delta_grid.as_ref().map(|g| g.iter().map(OneOrMany::to_vec).collect())
    }

    pub fn sweep(&self) -> Result<&SweepConfig, CliError> {
        let s = self.sweep.as_ref().ok_or_else(|| CliError::Config("config has no \"sweep\" section".into()))?;
        if s.n < 2 {
            return Err(CliError::Config(format!("sweep.n must be >= 2, got {}", s.n)));
        }
        if !(s.d1 > 0.0) {
            return Err(CliError::Config(format!("sweep.d1 must be > 0, got {}", s.d1)));
        }
        if s.r.is_empty() {
            return Err(CliError::Config("sweep.r is empty".into()));
        }
        Ok(s)
    }
}

/// `r*` with `-0.0` folded to `0.0`.
pub fn sweep_dual(r: f64, n: usize) -> harmonic_duality::Result<f64> {
    dual_ratio(r, n).map(|x| x + 0.0)
}
