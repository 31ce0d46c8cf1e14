//! Generative models, priors and summary statistics.

mod exact;
mod graph;
mod prior;
mod simulators;
mod summary;

use std::fmt::Debug;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::StreamRng;

pub use exact::{
    normal_mean_posterior, normal_var_log_posterior, normal_var_max_log_posterior, NormalPosterior,
};
pub use graph::Graph;
pub use prior::{Marginal, Prior, Transform};
pub use simulators::{
    gk_quantile, sample_gpd, sim_arch1, sim_boombust, sim_er_graph, sim_gk, sim_normal_mean,
    sim_normal_var, sim_stereo,
};
pub use summary::{
    lag_concordance, quantile_sorted, smoothed_log_periodogram, summarize, SummaryError, SummaryFn,
    SummarySpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter for {model}: {reason}")]
    InvalidParameter { model: &'static str, reason: String },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("parameter has dimension {got}, model `{model}` expects {expected}")]
    DimensionMismatch {
        model: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("malformed dataset file: {0}")]
    Parse(String),
}

/// One simulated or observed dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Series(Vec<f64>),
    Graph(Graph),
}

impl Dataset {
    /// Number of observations, or nodes for a graph.
    pub fn len(&self) -> usize {
        match self {
            Dataset::Series(x) => x.len(),
            Dataset::Graph(g) => g.nodes(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Series as a single column headed by `name`; graphs as a `u,v` edge
    /// list preceded by a `# nodes=N` line.
    pub fn write_csv<W: Write>(&self, name: &str, mut w: W) -> std::io::Result<()> {
        match self {
            Dataset::Series(x) => {
                writeln!(w, "{name}")?;
                for v in x {
                    writeln!(w, "{v}")?;
                }
            }
            Dataset::Graph(g) => {
                writeln!(w, "# nodes={}", g.nodes())?;
                writeln!(w, "u,v")?;
                for (u, v) in g.edges() {
                    writeln!(w, "{u},{v}")?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, ModelError> {
        let mut lines = r
            .lines()
            .map(|l| l.map_err(|e| ModelError::Parse(e.to_string())));
        let first = lines
            .next()
            .ok_or_else(|| ModelError::Parse("empty file".into()))??;
        let parse = |s: &str| -> Result<usize, ModelError> {
            s.trim()
                .parse()
                .map_err(|_| ModelError::Parse(format!("bad integer `{s}`")))
        };
        if let Some(nodes) = first.strip_prefix("# nodes=") {
            let mut g = Graph::empty(parse(nodes)?);
            for line in lines.skip(1) {
                let line = line?;
                let (u, v) = line
                    .split_once(',')
                    .ok_or_else(|| ModelError::Parse(format!("bad edge `{line}`")))?;
                let (u, v) = (parse(u)?, parse(v)?);
                if u == v || u >= g.nodes() || v >= g.nodes() {
                    return Err(ModelError::Parse(format!("invalid edge ({u}, {v})")));
                }
                g.add_edge(u, v);
            }
            Ok(Dataset::Graph(g))
        } else {
            let mut x = Vec::new();
            for line in lines {
                let line = line?;
                let v: f64 = line
                    .trim()
                    .parse()
                    .map_err(|_| ModelError::Parse(format!("bad value `{line}`")))?;
                if !v.is_finite() {
                    return Err(ModelError::Parse("non-finite value".into()));
                }
                x.push(v);
            }
            Ok(Dataset::Series(x))
        }
    }
}

pub trait GenerativeModel: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn param_dim(&self) -> usize;
    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Dataset, ModelError>;
}

fn default_gk_c() -> f64 {
    0.8
}
fn default_arch_warmup() -> usize {
    100
}
fn default_bb_burn() -> usize {
    50
}
fn default_bb_x0() -> u64 {
    10
}
fn default_v0() -> f64 {
    5.0
}

/// The built-in models, addressable by name from configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `N(μ, 1)` samples of size `n`.
    NormalMean {
        n: usize,
    },
    /// `N(0, θ)` samples of size `n`.
    NormalVar {
        n: usize,
    },
    GAndK {
        n: usize,
        #[serde(default = "default_gk_c")]
        c: f64,
    },
    Arch1 {
        n: usize,
        #[serde(default = "default_arch_warmup")]
        warmup: usize,
    },
    BoomBust {
        n: usize,
        #[serde(default = "default_bb_burn")]
        burn: usize,
        #[serde(default = "default_bb_x0")]
        x0: u64,
    },
    Stereo {
        #[serde(default = "default_v0")]
        v0: f64,
    },
    ErGraph {
        nodes: usize,
    },
}

impl ModelSpec {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelSpec::NormalMean { .. } => &["mu"],
            ModelSpec::NormalVar { .. } => &["theta"],
            ModelSpec::GAndK { .. } => &["A", "B", "g", "k"],
            ModelSpec::Arch1 { .. } => &["alpha0", "alpha1"],
            ModelSpec::BoomBust { .. } => &["r", "kappa", "alpha", "beta"],
            ModelSpec::Stereo { .. } => &["lambda", "sigma", "xi"],
            ModelSpec::ErGraph { .. } => &["p"],
        }
    }
}

impl GenerativeModel for ModelSpec {
    fn name(&self) -> &'static str {
        match self {
            ModelSpec::NormalMean { .. } => "normal_mean",
            ModelSpec::NormalVar { .. } => "normal_var",
            ModelSpec::GAndK { .. } => "g_and_k",
            ModelSpec::Arch1 { .. } => "arch1",
            ModelSpec::BoomBust { .. } => "boom_bust",
            ModelSpec::Stereo { .. } => "stereo",
            ModelSpec::ErGraph { .. } => "er_graph",
        }
    }

    fn param_dim(&self) -> usize {
        self.param_names().len()
    }

    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Dataset, ModelError> {
        if theta.len() != self.param_dim() {
            return Err(ModelError::DimensionMismatch {
                model: self.name(),
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        Ok(match *self {
            ModelSpec::NormalMean { n } => Dataset::Series(sim_normal_mean(theta[0], n, rng)?),
            ModelSpec::NormalVar { n } => Dataset::Series(sim_normal_var(theta[0], n, rng)?),
            ModelSpec::GAndK { n, c } => Dataset::Series(sim_gk(theta, n, c, rng)?),
            ModelSpec::Arch1 { n, warmup } => Dataset::Series(sim_arch1(theta, n, warmup, rng)?),
            ModelSpec::BoomBust { n, burn, x0 } => {
                Dataset::Series(sim_boombust(theta, n, burn, x0, rng)?)
            }
            ModelSpec::Stereo { v0 } => Dataset::Series(sim_stereo(theta, v0, rng)?),
            ModelSpec::ErGraph { nodes } => Dataset::Graph(sim_er_graph(theta[0], nodes, rng)?),
        })
    }
}
