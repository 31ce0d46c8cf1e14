//! The empirical-likelihood log-posterior at a single parameter value.
//!
//! Each evaluation draws `m` fresh replicate datasets, so the value is a noisy
//! estimate and repeated calls differ unless the random stream is reset.

use std::sync::Arc;

use thiserror::Error;

use crate::el::{solve_el, ConstraintMatrix, ElConfig, ElError};
use crate::entropy::{
    default_k, euclidean_weights, gaussian_entropy, kl_entropy_with_weights, EntropyError,
    EntropyMethod, WeightVectorNu,
};
use crate::models::{summarize, GenerativeModel, ModelError, Prior, SummaryError, SummaryFn};
use crate::rng::StreamRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosteriorError {
    #[error("simulator failed at theta = {theta:?}: {source}")]
    SimulatorFailure {
        theta: Vec<f64>,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("invalid evaluation context: {0}")]
    InvalidContext(String),
}

/// Affine map `s ↦ (s - center) / scale` applied to every summary vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Centre and scale from the sample mean and standard deviation of pilot
    /// summaries. Constant coordinates keep unit scale.
    pub fn from_pilot(pilot: &[Vec<f64>]) -> Self {
        let r = pilot.first().map_or(0, Vec::len);
        let n = pilot.len() as f64;
        let center: Vec<f64> = (0..r)
            .map(|j| pilot.iter().map(|s| s[j]).sum::<f64>() / n)
            .collect();
        let scale = (0..r)
            .map(|j| {
                let var = pilot
                    .iter()
                    .map(|s| (s[j] - center[j]).powi(2))
                    .sum::<f64>()
                    / (n - 1.0).max(1.0);
                if var > 0.0 && var.is_finite() {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { center, scale }
    }

    pub fn apply(&self, s: &mut [f64]) {
        for ((v, c), sc) in s.iter_mut().zip(&self.center).zip(&self.scale) {
            *v = (*v - c) / sc;
        }
    }
}

/// Everything needed to evaluate the log-posterior except the random stream.
#[derive(Clone, Debug)]
pub struct EvaluationContext {
    pub model: Arc<dyn GenerativeModel>,
    pub prior: Prior,
    pub summaries: Arc<[Box<dyn SummaryFn>]>,
    /// Observed summary vector, already standardized if a standardizer is set.
    observed: Vec<f64>,
    pub m: usize,
    pub k: usize,
    pub entropy_method: EntropyMethod,
    nu: Option<WeightVectorNu<f64>>,
    pub el_config: ElConfig<f64>,
    standardizer: Option<Standardizer>,
}

impl EvaluationContext {
    /// `k = None` selects [`default_k`]`(m)`. The entropy weights are computed
    /// once here and reused at every `θ`.
    pub fn new(
        model: Arc<dyn GenerativeModel>,
        prior: Prior,
        summaries: Vec<Box<dyn SummaryFn>>,
        observed: Vec<f64>,
        m: usize,
        k: Option<usize>,
        entropy_method: EntropyMethod,
    ) -> Result<Self, PosteriorError> {
        let r: usize = summaries.iter().map(|s| s.output_dim()).sum();
        if r == 0 {
            return Err(PosteriorError::InvalidContext("no summaries".into()));
        }
        if observed.len() != r {
            return Err(PosteriorError::InvalidContext(format!(
                "observed summary has dimension {}, summaries produce {r}",
                observed.len()
            )));
        }
        if observed.iter().any(|v| !v.is_finite()) {
            return Err(PosteriorError::InvalidContext(
                "observed summary is not finite".into(),
            ));
        }
        if prior.dim() != model.param_dim() {
            return Err(PosteriorError::InvalidContext(format!(
                "prior has dimension {}, model `{}` expects {}",
                prior.dim(),
                model.name(),
                model.param_dim()
            )));
        }
        if m < 2 {
            return Err(PosteriorError::InvalidContext(
                "need m >= 2 replicates".into(),
            ));
        }
        let k = k.unwrap_or_else(|| default_k(m));
        let nu = match entropy_method {
            EntropyMethod::KozachenkoLeonenko => {
                if k == 0 || k >= m {
                    return Err(PosteriorError::InvalidContext(format!(
                        "k = {k} must lie in 1..m = {m}"
                    )));
                }
                Some(euclidean_weights(k, r)?)
            }
            EntropyMethod::Gaussian => None,
        };
        Ok(Self {
            model,
            prior,
            summaries: summaries.into(),
            observed,
            m,
            k,
            entropy_method,
            nu,
            el_config: ElConfig::default(),
            standardizer: None,
        })
    }

    /// Standardizes the observed summary now and every simulated summary
    /// from here on.
    pub fn with_standardizer(mut self, standardizer: Standardizer) -> Self {
        if let Some(old) = &self.standardizer {
            // Undo the previous map before applying the new one.
            for ((v, c), s) in self.observed.iter_mut().zip(&old.center).zip(&old.scale) {
                *v = *v * s + c;
            }
        }
        standardizer.apply(&mut self.observed);
        self.standardizer = Some(standardizer);
        self
    }

    pub fn with_el_config(mut self, config: ElConfig<f64>) -> Self {
        self.el_config = config;
        self
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn nu(&self) -> Option<&WeightVectorNu<f64>> {
        self.nu.as_ref()
    }

    pub fn summary_dim(&self) -> usize {
        self.observed.len()
    }

    /// Summaries of one simulated dataset, standardized if configured.
    /// `Ok(None)` means a summary was undefined on the simulated data.
    pub fn simulate_summary(
        &self,
        theta: &[f64],
        rng: &mut StreamRng,
    ) -> Result<Option<Vec<f64>>, PosteriorError> {
        let data =
            self.model
                .simulate(theta, rng)
                .map_err(|source| PosteriorError::SimulatorFailure {
                    theta: theta.to_vec(),
                    source,
                })?;
        match summarize(&self.summaries, &data) {
            Ok(mut s) => {
                if let Some(st) = &self.standardizer {
                    st.apply(&mut s);
                }
                Ok(Some(s))
            }
            Err(SummaryError::EmptyData { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// `count` replicate summaries at `θ`. All replicates are drawn even if
    /// one is undefined, so the stream position does not depend on the data.
    pub fn simulate_summaries(
        &self,
        theta: &[f64],
        count: usize,
        rng: &mut StreamRng,
    ) -> Result<Option<Vec<Vec<f64>>>, PosteriorError> {
        let mut out = Vec::with_capacity(count);
        let mut defined = true;
        for _ in 0..count {
            match self.simulate_summary(theta, rng)? {
                Some(s) => out.push(s),
                None => defined = false,
            }
        }
        Ok(defined.then_some(out))
    }
}

/// One evaluation of the log-posterior and its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPosteriorValue {
    pub value: f64,
    /// Mean log empirical-likelihood weight, `-∞` when infeasible.
    pub el_part: f64,
    /// Entropy estimate; NaN when it was not computed or is undefined.
    pub entropy_part: f64,
    pub prior_part: f64,
    pub m_used: usize,
}

impl LogPosteriorValue {
    fn zero(prior_part: f64, el_part: f64, m_used: usize) -> Self {
        Self {
            value: f64::NEG_INFINITY,
            el_part,
            entropy_part: f64::NAN,
            prior_part,
            m_used,
        }
    }

    /// `el_part + entropy_part`, the estimated log-likelihood.
    pub fn log_likelihood(&self) -> f64 {
        if self.value == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.el_part + self.entropy_part
        }
    }
}

/// Estimated log-posterior at `θ`, up to an additive constant.
pub fn eval_log_posterior(
    theta: &[f64],
    ctx: &EvaluationContext,
    rng: &mut StreamRng,
) -> Result<LogPosteriorValue, PosteriorError> {
    let prior_part = ctx.prior.log_density(theta);
    if prior_part == f64::NEG_INFINITY {
        return Ok(LogPosteriorValue::zero(prior_part, f64::NEG_INFINITY, 0));
    }
    let Some(replicates) = ctx.simulate_summaries(theta, ctx.m, rng)? else {
        return Ok(LogPosteriorValue::zero(
            prior_part,
            f64::NEG_INFINITY,
            ctx.m,
        ));
    };
    if replicates.iter().flatten().any(|v| !v.is_finite()) {
        return Ok(LogPosteriorValue::zero(
            prior_part,
            f64::NEG_INFINITY,
            ctx.m,
        ));
    }
    let h = ConstraintMatrix::from_summaries(&replicates, &ctx.observed)
        .map_err(|e| PosteriorError::InvalidContext(e.to_string()))?;
    let el_part = match solve_el(&h, &ctx.el_config) {
        Ok(sol) => sol.mean_log_weight,
        Err(ElError::MaxIterExceeded { .. }) => f64::NEG_INFINITY,
        Err(e) => return Err(PosteriorError::InvalidContext(e.to_string())),
    };
    if el_part == f64::NEG_INFINITY {
        return Ok(LogPosteriorValue::zero(prior_part, el_part, ctx.m));
    }
    let entropy = match (&ctx.nu, ctx.entropy_method) {
        (Some(nu), EntropyMethod::KozachenkoLeonenko) => {
            kl_entropy_with_weights(&replicates, nu).map(|e| e.value)
        }
        _ => gaussian_entropy(&replicates),
    };
    let entropy_part = match entropy {
        Ok(v) => v,
        Err(EntropyError::DuplicatePoints | EntropyError::SingularCovariance) => {
            return Ok(LogPosteriorValue::zero(prior_part, el_part, ctx.m));
        }
        Err(e) => return Err(e.into()),
    };
    Ok(LogPosteriorValue {
        value: prior_part + el_part + entropy_part,
        el_part,
        entropy_part,
        prior_part,
        m_used: ctx.m,
    })
}

/// Heuristic replicate count `⌈n^{α / c1²}⌉`.
pub fn recommend_replications(n: usize, alpha: f64, c1: f64) -> usize {
    assert!(
        n >= 1 && alpha > 0.0 && c1 > 0.0,
        "recommend_replications needs n >= 1, alpha > 0, c1 > 0"
    );
    let v = (n as f64).powf(alpha / (c1 * c1));
    let rounded = v.round();
    if (v - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        v.ceil() as usize
    }
}

/// Defaults used when the replicate count is derived from the sample size.
/// With these, `n = 100` gives `m = 25`.
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_C1: f64 = 1.2;
