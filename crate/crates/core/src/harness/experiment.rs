use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Adjustment, ConfigError, ExperimentConfig, InitStrategy, Method};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::baselines::{
    pilot_scales, regression_adjust, rejection_abc, rejection_abc_from, BaselineError,
    SyntheticTarget, Tolerance,
};
use crate::linalg::mean_and_covariance;
use crate::models::{quantile_sorted, summarize, Dataset, GenerativeModel, Prior};
use crate::posterior::{EvaluationContext, PosteriorError, Standardizer};
use crate::rng::{substream, substream_seed, StreamRng};
use crate::sampler::{
    init_chain, init_from_candidates, run_chain, write_draws_csv, ChainStart, Draw, LogTarget,
    SamplerConfig, SamplerError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Equal-tailed interval from the `(1-level)/2` and `(1+level)/2` type-7
/// sample quantiles.
pub fn equal_tailed_interval(samples: &[f64], level: f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(&s, tail), quantile_sorted(&s, 1.0 - tail))
}

/// Per-coordinate intervals of a sample of parameter vectors.
pub fn intervals_of(samples: &[Vec<f64>], level: f64) -> Vec<(f64, f64)> {
    let d = samples.first().map_or(0, Vec::len);
    (0..d)
        .map(|j| {
            let col: Vec<f64> = samples.iter().map(|t| t[j]).collect();
            equal_tailed_interval(&col, level)
        })
        .collect()
}

/// Result of one repeat of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub observed_summary: Vec<f64>,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
    /// Central 95% intervals per coordinate.
    pub interval95: Vec<(f64, f64)>,
    /// Central 99% intervals per coordinate.
    pub interval99: Vec<(f64, f64)>,
    /// `None` for rejection ABC.
    pub acceptance_rate: Option<f64>,
    pub samples: usize,
}

/// Coverage of central 95% intervals over repeats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub experiment: String,
    pub method: Method,
    pub true_theta: Vec<f64>,
    pub repeats: usize,
    /// Fraction of repeats whose interval contains the true value, per coordinate.
    pub coverage: Vec<f64>,
    /// Mean interval length per coordinate.
    pub avg_length: Vec<f64>,
    /// Mean acceptance rate across repeats, if a sampler was used.
    pub acceptance_rate: Option<f64>,
    pub outcomes: Vec<RepeatOutcome>,
}

impl CoverageReport {
    pub fn from_outcomes(
        experiment: &str,
        method: Method,
        true_theta: &[f64],
        outcomes: Vec<RepeatOutcome>,
    ) -> Self {
        let d = true_theta.len();
        let n = outcomes.len() as f64;
        let coverage = (0..d)
            .map(|j| {
                outcomes
                    .iter()
                    .filter(|o| {
                        let (lo, hi) = o.interval95[j];
                        lo <= true_theta[j] && true_theta[j] <= hi
                    })
                    .count() as f64
                    / n
            })
            .collect();
        let avg_length = (0..d)
            .map(|j| {
                outcomes
                    .iter()
                    .map(|o| o.interval95[j].1 - o.interval95[j].0)
                    .sum::<f64>()
                    / n
            })
            .collect();
        let rates: Vec<f64> = outcomes.iter().filter_map(|o| o.acceptance_rate).collect();
        let acceptance_rate =
            (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
        Self {
            experiment: experiment.to_string(),
            method,
            true_theta: true_theta.to_vec(),
            repeats: outcomes.len(),
            coverage,
            avg_length,
            acceptance_rate,
            outcomes,
        }
    }
}

/// Summarizes a posterior sample into a repeat outcome.
pub fn outcome_from_samples(
    repeat: usize,
    observed_summary: Vec<f64>,
    samples: &[Vec<f64>],
    acceptance_rate: Option<f64>,
) -> RepeatOutcome {
    let d = samples.first().map_or(0, Vec::len);
    let n = samples.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| samples.iter().map(|t| t[j]).sum::<f64>() / n)
        .collect();
    let sd = (0..d)
        .map(|j| {
            (samples
                .iter()
                .map(|t| (t[j] - mean[j]).powi(2))
                .sum::<f64>()
                / (n - 1.0).max(1.0))
            .sqrt()
        })
        .collect();
    RepeatOutcome {
        repeat,
        observed_summary,
        posterior_mean: mean,
        posterior_sd: sd,
        interval95: intervals_of(samples, 0.95),
        interval99: intervals_of(samples, 0.99),
        acceptance_rate,
        samples: samples.len(),
    }
}

/// Observed dataset for a repeat: the configured file, or a simulation at
/// the true parameter.
pub fn observed_dataset(cfg: &ExperimentConfig, repeat: usize) -> Result<Dataset, HarnessError> {
    let e = &cfg.experiment;
    match &e.observed_data {
        Some(path) => {
            let f = File::open(path).map_err(io_err(path))?;
            Dataset::read_csv(std::io::BufReader::new(f))
                .map_err(|e| HarnessError::Config(e.into()))
        }
        None => {
            let mut rng = substream(e.seed, "observed", &[repeat as u64]);
            cfg.model
                .simulate(&e.true_theta, &mut rng)
                .map_err(|source| {
                    HarnessError::Posterior(PosteriorError::SimulatorFailure {
                        theta: e.true_theta.clone(),
                        source,
                    })
                })
        }
    }
}

/// Evaluation context for one repeat, including the optional pilot
/// standardization.
pub fn build_context(
    cfg: &ExperimentConfig,
    repeat: usize,
) -> Result<EvaluationContext, HarnessError> {
    let e = &cfg.experiment;
    let data = observed_dataset(cfg, repeat)?;
    let summaries = cfg.summary_fns();
    let observed = summarize(&summaries, &data).map_err(PosteriorError::from)?;
    let ctx = EvaluationContext::new(
        Arc::new(cfg.model.clone()),
        cfg.prior()?,
        summaries,
        observed,
        e.m,
        e.k,
        e.entropy,
    )?;
    if !e.standardize {
        return Ok(ctx);
    }
    let mut rng = substream(e.seed, "standardize", &[repeat as u64]);
    let median = ctx.prior.median();
    let pilot = ctx
        .simulate_summaries(&median, e.standardize_sims, &mut rng)?
        .ok_or_else(|| {
            HarnessError::Invalid("standardization pilot produced undefined summaries".into())
        })?;
    Ok(ctx.with_standardizer(Standardizer::from_pilot(&pilot)))
}

pub fn pilot_candidates(
    ctx: &EvaluationContext,
    cfg: &ExperimentConfig,
    repeat: usize,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    let e = &cfg.experiment;
    let seed = substream_seed(e.seed, "init-pilot", &[repeat as u64]);
    let scales = pilot_scales(ctx, 500, seed)?;
    let keep_fraction = e
        .init_pilot_keep
        .unwrap_or(cfg.sampler.max_init_tries as f64 / e.init_pilot_sims as f64);
    let keep = Tolerance::KeepQuantile(keep_fraction.min(1.0));
    let mut res = rejection_abc(ctx, e.init_pilot_sims, keep, &scales, seed)?;
    let transforms = ctx.prior.transforms();
    for round in 1..e.init_pilot_rounds {
        let unconstrained: Vec<Vec<f64>> = res
            .thetas
            .iter()
            .map(|t| {
                t.iter()
                    .zip(&transforms)
                    .map(|(&x, tr)| tr.to_unconstrained(x))
                    .collect()
            })
            .collect();
        if unconstrained.len() < 2 {
            break;
        }
        let (mean, mut cov) = mean_and_covariance(&unconstrained);
        cov.scale(2.0);
        cov.add_diagonal(1e-10);
        let Some(chol) = cov.cholesky() else { break };
        let propose = |rng: &mut StreamRng| -> Vec<f64> {
            let z: Vec<f64> = (0..mean.len())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            chol.mul_lower(&z)
                .iter()
                .zip(&mean)
                .zip(&transforms)
                .map(|((dz, m), tr)| tr.from_unconstrained(m + dz))
                .collect()
        };
        let round_seed = substream_seed(e.seed, "init-pilot", &[repeat as u64, round as u64]);
        res = rejection_abc_from(ctx, e.init_pilot_sims, keep, &scales, round_seed, &propose)?;
    }
    let mut order: Vec<usize> = (0..res.len()).collect();
    order.sort_by(|&a, &b| {
        res.distances[a]
            .total_cmp(&res.distances[b])
            .then(a.cmp(&b))
    });
    Ok(order
        .into_iter()
        .filter(|&i| res.distances[i].is_finite())
        .map(|i| res.thetas[i].clone())
        .collect())
}

fn start_chain<T: LogTarget>(
    target: &T,
    ctx: &EvaluationContext,
    cfg: &ExperimentConfig,
    repeat: usize,
    rng: &mut crate::rng::StreamRng,
) -> Result<ChainStart, HarnessError> {
    Ok(match cfg.experiment.init {
        InitStrategy::Prior => init_chain(target, cfg.sampler.max_init_tries, rng)?,
        InitStrategy::Pilot => {
            let candidates = pilot_candidates(ctx, cfg, repeat)?;
            init_from_candidates(target, &candidates, cfg.sampler.max_init_tries, rng)?
        }
        InitStrategy::Synthetic => {
            let candidates = pilot_candidates(ctx, cfg, repeat)?;
            let sl = SyntheticTarget(ctx);
            let sl_start = best_of_candidates(&sl, &candidates, cfg.sampler.max_init_tries, rng)?;
            let half = (cfg.experiment.init_chain_iters / 2).max(1);
            let sl_config = SamplerConfig {
                n_iter: half,
                n_burn: half,
                adapt_start: cfg.sampler.adapt_start.min(half),
                ..cfg.sampler.clone()
            };
            let sl_seed = substream_seed(cfg.experiment.seed, "init-chain", &[repeat as u64]);
            let sl_chain = run_chain(&sl, &sl_start, &sl_config, rng, sl_seed)?;
            debug!(
                "repeat {repeat}: synthetic-likelihood pilot from {:?}, acceptance {:.3}",
                sl_start.theta, sl_chain.acceptance_rate
            );
            let candidates = around_median(sl_chain.draws.into_iter().map(|d| d.theta).collect());
            let nearest = candidates.len().min(NEAR_MEDIAN);
            let retries: Vec<Vec<f64>> = candidates[..nearest]
                .iter()
                .cycle()
                .take(cfg.sampler.max_init_tries)
                .cloned()
                .collect();
            let start = init_from_candidates(target, &retries, cfg.sampler.max_init_tries, rng)?;
            debug!(
                "repeat {repeat}: median {:?}, start {:?}",
                candidates[0], start.theta
            );
            start
        }
    })
}

/// Number of draws nearest the synthetic-likelihood median that are retried
/// when looking for a feasible start.
const NEAR_MEDIAN: usize = 50;

/// Evaluates the first `max_tries` candidates and returns the one with the
/// highest finite log target.
fn best_of_candidates<T: LogTarget>(
    target: &T,
    candidates: &[Vec<f64>],
    max_tries: usize,
    rng: &mut StreamRng,
) -> Result<ChainStart, HarnessError> {
    let tries = candidates.len().min(max_tries);
    let mut best: Option<ChainStart> = None;
    for theta in &candidates[..tries] {
        let log_target = target.log_target(theta, rng)?;
        if log_target.is_finite() && best.as_ref().is_none_or(|b| log_target > b.log_target) {
            best = Some(ChainStart {
                theta: theta.clone(),
                log_target,
            });
        }
    }
    best.ok_or(HarnessError::Sampler(SamplerError::NoFeasibleStart {
        tries,
    }))
}

/// The coordinatewise median of `draws`, then the distinct draws in order of
/// their sd-scaled distance to it.
fn around_median(mut draws: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let d = draws.first().map_or(0, Vec::len);
    let mut median = Vec::with_capacity(d);
    let mut sd = Vec::with_capacity(d);
    for j in 0..d {
        let mut col: Vec<f64> = draws.iter().map(|t| t[j]).collect();
        col.sort_by(f64::total_cmp);
        median.push(quantile_sorted(&col, 0.5));
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
        sd.push(if var > 0.0 { var.sqrt() } else { 1.0 });
    }
    let dist = |t: &[f64]| -> f64 {
        t.iter()
            .zip(&median)
            .zip(&sd)
            .map(|((x, m), s)| ((x - m) / s).powi(2))
            .sum()
    };
    draws.sort_by(|a, b| dist(a).total_cmp(&dist(b)));
    draws.dedup();
    std::iter::once(median).chain(draws).collect()
}

/// Posterior draws for one repeat with the configured method.
pub fn run_repeat_draws(
    cfg: &ExperimentConfig,
    repeat: usize,
) -> Result<(EvaluationContext, Vec<Draw>, Option<f64>), HarnessError> {
    let e = &cfg.experiment;
    let ctx = build_context(cfg, repeat)?;
    let chain_seed = substream_seed(e.seed, "chain", &[repeat as u64]);
    let mut rng = substream(e.seed, "chain", &[repeat as u64]);
    let (draws, rate) = match e.method {
        Method::Abcel => {
            let start = start_chain(&ctx, &ctx, cfg, repeat, &mut rng)?;
            let chain = run_chain(&ctx, &start, &cfg.sampler, &mut rng, chain_seed)?;
            (chain.draws, Some(chain.acceptance_rate))
        }
        Method::Synthetic => {
            let target = SyntheticTarget(&ctx);
            let start = start_chain(&target, &ctx, cfg, repeat, &mut rng)?;
            let chain = run_chain(&target, &start, &cfg.sampler, &mut rng, chain_seed)?;
            (chain.draws, Some(chain.acceptance_rate))
        }
        Method::Rejection => {
            let abc = cfg
                .abc
                .as_ref()
                .expect("validated config has an abc section");
            let mut abc_ctx = ctx.clone();
            if let Some(p) = &abc.prior {
                abc_ctx.prior =
                    Prior::new(p.clone()).map_err(|e| HarnessError::Config(e.into()))?;
            }
            let seed = substream_seed(e.seed, "abc", &[repeat as u64]);
            let scales = pilot_scales(&abc_ctx, abc.n_pilot, seed)?;
            let mut res = rejection_abc(&abc_ctx, abc.n_sims, abc.tolerance, &scales, seed)?;
            res = match abc.adjustment {
                Adjustment::None => res,
                Adjustment::Linear => regression_adjust(&res, ctx.observed(), 0.0)?,
                Adjustment::Ridge => regression_adjust(&res, ctx.observed(), abc.ridge)?,
            };
            (res.as_draws(), None)
        }
    };
    Ok((ctx, draws, rate))
}

/// Runs one repeat and optionally writes its chain CSV into `out_dir`.
pub fn run_repeat(
    cfg: &ExperimentConfig,
    repeat: usize,
    out_dir: Option<&Path>,
) -> Result<RepeatOutcome, HarnessError> {
    let (ctx, draws, rate) = run_repeat_draws(cfg, repeat)?;
    if let Some(dir) = out_dir {
        let path = dir.join(format!("chain_{repeat:03}.csv"));
        let f = File::create(&path).map_err(io_err(&path))?;
        write_draws_csv(&draws, cfg.model.param_dim(), BufWriter::new(f)).map_err(io_err(&path))?;
    }
    let samples: Vec<Vec<f64>> = draws.into_iter().map(|d| d.theta).collect();
    if samples.is_empty() {
        return Err(HarnessError::Invalid(
            "method produced no posterior samples".into(),
        ));
    }
    info!("{}: repeat {repeat} done", cfg.experiment.name);
    Ok(outcome_from_samples(
        repeat,
        ctx.observed().to_vec(),
        &samples,
        rate,
    ))
}

pub(crate) fn with_pool<R: Send>(
    workers: usize,
    f: impl FnOnce() -> R + Send,
) -> Result<R, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs every repeat on a pool of `workers` threads and aggregates coverage.
/// With `out_dir`, one chain CSV per repeat is written there.
pub fn coverage_study(
    cfg: &ExperimentConfig,
    workers: usize,
    out_dir: Option<&Path>,
) -> Result<CoverageReport, HarnessError> {
    cfg.validate()?;
    let outcomes = with_pool(workers, || {
        (0..cfg.experiment.repeats)
            .into_par_iter()
            .map(|rep| run_repeat(cfg, rep, out_dir))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(CoverageReport::from_outcomes(
        &cfg.experiment.name,
        cfg.experiment.method,
        &cfg.experiment.true_theta,
        outcomes,
    ))
}

#[derive(Serialize)]
struct Timing {
    runtime_seconds: f64,
    workers: usize,
}

/// Runs the experiment, writing `chain_XXX.csv` files, `report.json` and
/// `timing.json` into `out_dir`. Everything except `timing.json` depends only
/// on the config and seed.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<CoverageReport, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let started = Instant::now();
    let report = coverage_study(cfg, workers, Some(out_dir))?;
    write_json(&out_dir.join("report.json"), &report)?;
    write_json(
        &out_dir.join("timing.json"),
        &Timing {
            runtime_seconds: started.elapsed().as_secs_f64(),
            workers,
        },
    )?;
    let cfg_path = out_dir.join("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml()?).map_err(io_err(&cfg_path))?;
    Ok(report)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    use std::io::Write;
    writeln!(w).map_err(io_err(path))
}
