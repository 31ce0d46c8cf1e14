use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::Tolerance;
use crate::entropy::EntropyMethod;
use crate::models::{
    GenerativeModel, Marginal, ModelError, ModelSpec, Prior, SummaryFn, SummarySpec,
};
use crate::sampler::SamplerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Posterior approximation used by an experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Abcel,
    Synthetic,
    Rejection,
}

/// How the sampler finds its first feasible state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Independent prior draws.
    #[default]
    Prior,
    /// Prior-predictive pilot; candidates tried in order of summary distance.
    Pilot,
    /// Pilot as above, then a short synthetic-likelihood chain from the best
    /// candidate; its draws are tried latest first.
    Synthetic,
}

/// Regression adjustment applied after rejection ABC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    None,
    #[default]
    Linear,
    Ridge,
}

fn default_repeats() -> usize {
    1
}
fn default_pilot_sims() -> usize {
    2000
}
fn default_init_chain_iters() -> usize {
    2000
}
fn default_pilot_rounds() -> usize {
    1
}
fn default_standardize_sims() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default)]
    pub method: Method,
    /// Parameter that generates the observed data, and the coverage target.
    pub true_theta: Vec<f64>,
    /// Replicates per likelihood evaluation.
    pub m: usize,
    /// Neighbour order; the default depends on `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub entropy: EntropyMethod,
    /// Standardize summaries with a pilot run at the prior median.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default = "default_standardize_sims")]
    pub standardize_sims: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default = "default_pilot_sims")]
    pub init_pilot_sims: usize,
    /// Length of the synthetic-likelihood chain for `init = "synthetic"`,
    /// split evenly into burn-in and draws.
    #[serde(default = "default_init_chain_iters")]
    pub init_chain_iters: usize,
    /// Pilot rounds; each round after the first proposes from a Gaussian
    /// fitted to the previous round's nearest parameters.
    #[serde(default = "default_pilot_rounds")]
    pub init_pilot_rounds: usize,
    /// Fraction of each pilot round kept; defaults to
    /// `max_init_tries / init_pilot_sims`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_pilot_keep: Option<f64>,
    /// Observed dataset file; when absent each repeat simulates its own at
    /// `true_theta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_n_pilot() -> usize {
    1000
}
fn default_ridge() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcSection {
    pub n_sims: usize,
    pub tolerance: Tolerance,
    #[serde(default)]
    pub adjustment: Adjustment,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    /// Prior-predictive simulations used to scale the distance.
    #[serde(default = "default_n_pilot")]
    pub n_pilot: usize,
    /// Narrower prior used only for rejection sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<Marginal>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub model: ModelSpec,
    pub prior: Vec<Marginal>,
    pub summaries: Vec<SummarySpec>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abc: Option<AbcSection>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// A bundled config by name, or a file path.
    pub fn load(name_or_path: &str) -> Result<Self, ConfigError> {
        match super::bundled::bundled_config(name_or_path) {
            Some(text) => Self::from_toml(text),
            None => Self::from_file(Path::new(name_or_path)),
        }
    }

    pub fn prior(&self) -> Result<Prior, ConfigError> {
        Ok(Prior::new(self.prior.clone())?)
    }

    pub fn summary_fns(&self) -> Vec<Box<dyn SummaryFn>> {
        self.summaries
            .iter()
            .map(|s| Box::new(s.clone()) as Box<dyn SummaryFn>)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        let e = &self.experiment;
        let d = self.model.param_dim();
        let prior = self.prior()?;
        if prior.dim() != d {
            return invalid(format!(
                "prior has {} coordinates, model `{}` has {d}",
                prior.dim(),
                self.model.name()
            ));
        }
        if e.true_theta.len() != d {
            return invalid(format!(
                "true_theta has {} coordinates, expected {d}",
                e.true_theta.len()
            ));
        }
        if e.m < 2 {
            return invalid("m must be at least 2".into());
        }
        if e.repeats == 0 {
            return invalid("repeats must be at least 1".into());
        }
        if self.summaries.is_empty() {
            return invalid("at least one summary is required".into());
        }
        if let Some(k) = e.k {
            if k == 0 || k >= e.m {
                return invalid(format!("k = {k} must lie in 1..m"));
            }
        }
        self.sampler
            .validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        if e.init_pilot_rounds == 0 || e.init_pilot_sims == 0 {
            return invalid("init_pilot_rounds and init_pilot_sims must be at least 1".into());
        }
        if e.init_pilot_keep.is_some_and(|q| !(q > 0.0 && q <= 1.0)) {
            return invalid("init_pilot_keep must lie in (0, 1]".into());
        }
        if e.method == Method::Rejection && self.abc.is_none() {
            return invalid("method `rejection` needs an [abc] section".into());
        }
        if let Some(abc) = &self.abc {
            if abc.n_sims == 0 {
                return invalid("abc.n_sims must be at least 1".into());
            }
            if let Some(p) = &abc.prior {
                if Prior::new(p.clone())?.dim() != d {
                    return invalid("abc.prior has the wrong dimension".into());
                }
            }
        }
        Ok(())
    }
}
