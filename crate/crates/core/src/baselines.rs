//! Rejection ABC with regression adjustment, and the Gaussian synthetic
//! likelihood.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{mean_and_covariance, Matrix};
use crate::models::{quantile_sorted, Prior};
use crate::posterior::{EvaluationContext, PosteriorError};
use crate::rng::{substream, StreamRng};
use crate::sampler::{Draw, LogTarget};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("regression adjustment needs at least {needed} accepted points, got {got}")]
    TooFewAccepted { needed: usize, got: usize },
    #[error("invalid setting: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

/// Which simulations rejection ABC keeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    /// Keep the `round(q · n_sims)` closest simulations (at least one).
    KeepQuantile(f64),
    /// Keep every simulation within this distance.
    Absolute(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbcResult {
    pub thetas: Vec<Vec<f64>>,
    pub summaries: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    /// Largest distance kept for a quantile rule, or the absolute tolerance.
    pub tolerance_used: f64,
    pub adjusted: Option<Vec<Vec<f64>>>,
}

impl AbcResult {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Adjusted samples if present, raw accepted samples otherwise.
    pub fn samples(&self) -> &[Vec<f64>] {
        self.adjusted.as_deref().unwrap_or(&self.thetas)
    }

    /// Samples as chain-format draws, with `log_post` set to NaN.
    pub fn as_draws(&self) -> Vec<Draw> {
        self.samples()
            .iter()
            .map(|t| Draw {
                theta: t.clone(),
                log_post: f64::NAN,
                accepted: true,
            })
            .collect()
    }
}

/// Per-summary median absolute deviation of `summaries`; zero or undefined
/// deviations are replaced by one.
pub fn mad_scales(summaries: &[Vec<f64>]) -> Vec<f64> {
    let r = summaries.first().map_or(0, Vec::len);
    (0..r)
        .map(|j| {
            let mut col: Vec<f64> = summaries
                .iter()
                .map(|s| s[j])
                .filter(|v| v.is_finite())
                .collect();
            if col.is_empty() {
                return 1.0;
            }
            col.sort_unstable_by(f64::total_cmp);
            let med = quantile_sorted(&col, 0.5);
            let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
            dev.sort_unstable_by(f64::total_cmp);
            let mad = quantile_sorted(&dev, 0.5);
            if mad > 0.0 {
                mad
            } else {
                1.0
            }
        })
        .collect()
}

/// Scales from `n_pilot` prior-predictive simulations.
pub fn pilot_scales(
    ctx: &EvaluationContext,
    n_pilot: usize,
    seed: u64,
) -> Result<Vec<f64>, BaselineError> {
    let mut rng = substream(seed, "abc-pilot", &[]);
    let mut pilot = Vec::with_capacity(n_pilot);
    for _ in 0..n_pilot {
        let theta = ctx.prior.sample(&mut rng);
        if let Some(s) = ctx.simulate_summary(&theta, &mut rng)? {
            pilot.push(s);
        }
    }
    Ok(mad_scales(&pilot))
}

fn scaled_distance(s: &[f64], observed: &[f64], scales: &[f64]) -> f64 {
    s.iter()
        .zip(observed)
        .zip(scales)
        .map(|((a, b), c)| ((a - b) / c).powi(2))
        .sum::<f64>()
        .sqrt()
}

const CHUNK: usize = 4096;

/// Draws `n_sims` parameters from the prior, simulates one dataset each and
/// keeps those close to the observed summary in the scaled Euclidean
/// distance. Chunks of simulations use their own substreams, so the result is
/// independent of the thread count.
pub fn rejection_abc(
    ctx: &EvaluationContext,
    n_sims: usize,
    tolerance: Tolerance,
    scales: &[f64],
    seed: u64,
) -> Result<AbcResult, BaselineError> {
    rejection_abc_from(ctx, n_sims, tolerance, scales, seed, &|rng| {
        ctx.prior.sample(rng)
    })
}

/// [`rejection_abc`] with parameters drawn by `propose` instead of the
/// prior. Proposals outside the prior support get an infinite distance.
pub fn rejection_abc_from(
    ctx: &EvaluationContext,
    n_sims: usize,
    tolerance: Tolerance,
    scales: &[f64],
    seed: u64,
    propose: &(dyn Fn(&mut StreamRng) -> Vec<f64> + Sync),
) -> Result<AbcResult, BaselineError> {
    if n_sims == 0 {
        return Err(BaselineError::InvalidConfig("n_sims must be at least 1"));
    }
    if scales.len() != ctx.summary_dim() {
        return Err(BaselineError::InvalidConfig(
            "scale vector has the wrong dimension",
        ));
    }
    match tolerance {
        Tolerance::KeepQuantile(q) if !(q > 0.0 && q <= 1.0) => {
            return Err(BaselineError::InvalidConfig(
                "keep quantile must lie in (0, 1]",
            ))
        }
        Tolerance::Absolute(t) if t.is_nan() || t < 0.0 => {
            return Err(BaselineError::InvalidConfig(
                "tolerance must be nonnegative",
            ))
        }
        _ => {}
    }
    let observed = ctx.observed();
    let r = ctx.summary_dim();
    let n_chunks = n_sims.div_ceil(CHUNK);
    let chunks: Vec<Vec<(Vec<f64>, Vec<f64>, f64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, "abc", &[c as u64]);
            let count = CHUNK.min(n_sims - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let theta = propose(&mut rng);
                if !ctx.prior.in_support(&theta) {
                    out.push((theta, vec![f64::NAN; r], f64::INFINITY));
                    continue;
                }
                let (s, dist) = match ctx.simulate_summary(&theta, &mut rng)? {
                    Some(s) => {
                        let d = scaled_distance(&s, observed, scales);
                        (s, if d.is_nan() { f64::INFINITY } else { d })
                    }
                    None => (vec![f64::NAN; r], f64::INFINITY),
                };
                out.push((theta, s, dist));
            }
            Ok(out)
        })
        .collect::<Result<_, PosteriorError>>()?;
    let all: Vec<(Vec<f64>, Vec<f64>, f64)> = chunks.into_iter().flatten().collect();

    let (keep, tolerance_used): (Vec<usize>, f64) = match tolerance {
        Tolerance::KeepQuantile(q) => {
            let count = ((q * n_sims as f64).round() as usize).clamp(1, n_sims);
            let mut order: Vec<usize> = (0..n_sims).collect();
            order.sort_by(|&a, &b| all[a].2.total_cmp(&all[b].2).then(a.cmp(&b)));
            order.truncate(count);
            let used = all[*order.last().expect("count >= 1")].2;
            order.sort_unstable();
            (order, used)
        }
        Tolerance::Absolute(t) => ((0..n_sims).filter(|&i| all[i].2 <= t).collect(), t),
    };
    let mut result = AbcResult {
        thetas: Vec::with_capacity(keep.len()),
        summaries: Vec::with_capacity(keep.len()),
        distances: Vec::with_capacity(keep.len()),
        tolerance_used,
        adjusted: None,
    };
    for i in keep {
        result.thetas.push(all[i].0.clone());
        result.summaries.push(all[i].1.clone());
        result.distances.push(all[i].2);
    }
    Ok(result)
}

/// Least-squares coefficients of `y` on `[1, x]` with an optional ridge
/// penalty on the slopes. `None` if the normal equations are singular.
fn regression_coefficients(x: &[Vec<f64>], ys: &[Vec<f64>], ridge: f64) -> Option<Vec<Vec<f64>>> {
    let p = x[0].len() + 1;
    let mut xtx = Matrix::<f64>::zeros(p, p);
    let outputs = ys[0].len();
    let mut xty = vec![vec![0.0; p]; outputs];
    for (row, y) in x.iter().zip(ys) {
        let design: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for a in 0..p {
            for b in 0..p {
                xtx[(a, b)] += design[a] * design[b];
            }
            for (o, yo) in y.iter().enumerate() {
                xty[o][a] += design[a] * yo;
            }
        }
    }
    for a in 1..p {
        xtx[(a, a)] += ridge;
    }
    let chol = xtx.cholesky()?;
    // Reject numerically singular designs.
    let diag: Vec<f64> = (0..p).map(|a| chol.factor()[(a, a)]).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    if diag.iter().any(|&v| !(v > 1e-10 * max)) {
        return None;
    }
    Some(xty.iter().map(|b| chol.solve(b)).collect())
}

/// Regresses each parameter coordinate on `s - s_o` over the accepted
/// points and sets `θ_i ← θ_i - β̂ᵀ(s_i - s_o)`. `ridge = 0` is ordinary
/// least squares; a singular design falls back to a ridge penalty of `1e-6`.
pub fn regression_adjust(
    result: &AbcResult,
    observed: &[f64],
    ridge: f64,
) -> Result<AbcResult, BaselineError> {
    if !(ridge >= 0.0) {
        return Err(BaselineError::InvalidConfig(
            "ridge penalty must be nonnegative",
        ));
    }
    let d = result.thetas.first().map_or(0, Vec::len);
    let r = observed.len();
    let needed = d + r + 1;
    if result.len() < needed {
        return Err(BaselineError::TooFewAccepted {
            needed,
            got: result.len(),
        });
    }
    let x: Vec<Vec<f64>> = result
        .summaries
        .iter()
        .map(|s| s.iter().zip(observed).map(|(a, b)| a - b).collect())
        .collect();
    let beta = match regression_coefficients(&x, &result.thetas, ridge) {
        Some(b) => b,
        None => {
            warn!("singular regression design; refitting with ridge penalty 1e-6");
            regression_coefficients(&x, &result.thetas, ridge.max(1e-6)).ok_or(
                BaselineError::InvalidConfig(
                    "regression design is singular even with ridge penalty",
                ),
            )?
        }
    };
    let adjusted = result
        .thetas
        .iter()
        .zip(&x)
        .map(|(theta, dx)| {
            theta
                .iter()
                .zip(&beta)
                .map(|(t, b)| t - b[1..].iter().zip(dx).map(|(bi, xi)| bi * xi).sum::<f64>())
                .collect()
        })
        .collect();
    Ok(AbcResult {
        adjusted: Some(adjusted),
        ..result.clone()
    })
}

/// Log-density of `observed` under the normal law with the sample mean and
/// covariance of `replicates`. The replicates are sorted first, so the value
/// does not depend on their order.
pub fn gaussian_loglik_from_replicates(replicates: &[Vec<f64>], observed: &[f64]) -> f64 {
    let mut sorted = replicates.to_vec();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let r = observed.len();
    let (mean, mut cov) = mean_and_covariance(&sorted);
    let chol = match cov.cholesky() {
        Some(c) => c,
        None => {
            warn!("singular synthetic-likelihood covariance; adding 1e-8 jitter");
            cov.add_diagonal(1e-8);
            match cov.cholesky() {
                Some(c) => c,
                None => return f64::NEG_INFINITY,
            }
        }
    };
    let diff: Vec<f64> = observed.iter().zip(&mean).map(|(a, b)| a - b).collect();
    let z = chol.forward(&diff);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * r as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * chol.log_det() - 0.5 * quad
}

/// Synthetic log-likelihood at `θ` from `ctx.m` fresh replicates.
pub fn synthetic_loglik(
    theta: &[f64],
    ctx: &EvaluationContext,
    rng: &mut StreamRng,
) -> Result<f64, BaselineError> {
    if ctx.m < ctx.summary_dim() + 2 {
        return Err(BaselineError::InvalidConfig(
            "synthetic likelihood needs m >= r + 2",
        ));
    }
    Ok(match ctx.simulate_summaries(theta, ctx.m, rng)? {
        Some(reps) if reps.iter().flatten().all(|v| v.is_finite()) => {
            gaussian_loglik_from_replicates(&reps, ctx.observed())
        }
        _ => f64::NEG_INFINITY,
    })
}

/// Prior times synthetic likelihood, as a sampler target.
pub struct SyntheticTarget<'a>(pub &'a EvaluationContext);

impl LogTarget for SyntheticTarget<'_> {
    fn prior(&self) -> &Prior {
        &self.0.prior
    }

    fn log_target(&self, theta: &[f64], rng: &mut StreamRng) -> Result<f64, PosteriorError> {
        let lp = self.0.prior.log_density(theta);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        match synthetic_loglik(theta, self.0, rng) {
            Ok(v) => Ok(lp + v),
            Err(BaselineError::Posterior(e)) => Err(e),
            Err(e) => Err(PosteriorError::InvalidContext(e.to_string())),
        }
    }
}
