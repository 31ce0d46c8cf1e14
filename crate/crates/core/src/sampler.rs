//! Adaptive random-walk Metropolis for noisy log-targets.
//!
//! Proposals are Gaussian on an unconstrained scale: bounded prior
//! coordinates are mapped through a logit and the log-Jacobian is added to the
//! target. The first `adapt_start` iterations use a fixed diagonal proposal;
//! after that the covariance is `(2.4²/d) Cov(history) + jitter·I`, updated at
//! every step.
//!
//! The log-target of the current state is kept from the evaluation that
//! accepted it and is never recomputed.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::models::{Prior, Transform};
use crate::posterior::{eval_log_posterior, EvaluationContext, PosteriorError};
use crate::rng::StreamRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("no feasible starting point after {tries} tries; consider raising m")]
    NoFeasibleStart { tries: usize },
    #[error("starting point has log-target -inf")]
    InfeasibleStart,
    #[error("invalid sampler settings: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

/// A possibly noisy log-density over the prior's parameter space.
pub trait LogTarget: Sync {
    fn prior(&self) -> &Prior;
    fn log_target(&self, theta: &[f64], rng: &mut StreamRng) -> Result<f64, PosteriorError>;
}

impl LogTarget for EvaluationContext {
    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn log_target(&self, theta: &[f64], rng: &mut StreamRng) -> Result<f64, PosteriorError> {
        Ok(eval_log_posterior(theta, self, rng)?.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Stored draws after burn-in.
    pub n_iter: usize,
    pub n_burn: usize,
    /// Iterations with the fixed initial proposal.
    pub adapt_start: usize,
    /// Initial proposal sd as a fraction of each prior range.
    pub initial_scale: f64,
    pub jitter: f64,
    pub max_init_tries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iter: 50_000,
            n_burn: 50_000,
            adapt_start: 1000,
            initial_scale: 0.05,
            jitter: 1e-8,
            max_init_tries: 1000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n_iter == 0 {
            return Err(SamplerError::InvalidConfig("n_iter must be at least 1"));
        }
        if !(self.initial_scale > 0.0) || !(self.jitter > 0.0) {
            return Err(SamplerError::InvalidConfig(
                "initial_scale and jitter must be positive",
            ));
        }
        if self.max_init_tries == 0 {
            return Err(SamplerError::InvalidConfig(
                "max_init_tries must be at least 1",
            ));
        }
        Ok(())
    }
}

/// A feasible state and its log-target value.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStart {
    pub theta: Vec<f64>,
    pub log_target: f64,
}

/// Prior draws until the log-target is finite.
pub fn init_chain<T: LogTarget + ?Sized>(
    target: &T,
    max_tries: usize,
    rng: &mut StreamRng,
) -> Result<ChainStart, SamplerError> {
    for _ in 0..max_tries {
        let theta = target.prior().sample(rng);
        let log_target = target.log_target(&theta, rng)?;
        if log_target.is_finite() {
            return Ok(ChainStart { theta, log_target });
        }
    }
    Err(SamplerError::NoFeasibleStart { tries: max_tries })
}

/// Tries the candidates in order and returns the first with a finite
/// log-target.
pub fn init_from_candidates<T: LogTarget + ?Sized>(
    target: &T,
    candidates: &[Vec<f64>],
    max_tries: usize,
    rng: &mut StreamRng,
) -> Result<ChainStart, SamplerError> {
    let tries = candidates.len().min(max_tries);
    for theta in &candidates[..tries] {
        let log_target = target.log_target(theta, rng)?;
        if log_target.is_finite() {
            return Ok(ChainStart {
                theta: theta.clone(),
                log_target,
            });
        }
    }
    Err(SamplerError::NoFeasibleStart { tries })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub theta: Vec<f64>,
    pub log_post: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    /// Post-burn-in draws.
    pub draws: Vec<Draw>,
    /// Fraction of accepted proposals after burn-in.
    pub acceptance_rate: f64,
    /// Final proposal covariance on the unconstrained scale.
    pub proposal_cov: Matrix<f64>,
    pub burn_in: usize,
    pub seed: u64,
}

impl Chain {
    pub fn dim(&self) -> usize {
        self.draws.first().map_or(0, |d| d.theta.len())
    }

    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.theta[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.draws.iter().map(|d| d.theta[j]).sum::<f64>() / self.draws.len() as f64)
            .collect()
    }

    pub fn sd(&self) -> Vec<f64> {
        let mean = self.mean();
        let n = self.draws.len() as f64;
        (0..self.dim())
            .map(|j| {
                (self
                    .draws
                    .iter()
                    .map(|d| (d.theta[j] - mean[j]).powi(2))
                    .sum::<f64>()
                    / (n - 1.0).max(1.0))
                .sqrt()
            })
            .collect()
    }

    /// Batch-means Monte Carlo standard error of each coordinate's mean.
    pub fn mcse(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| batch_means_se(&self.coordinate(j)))
            .collect()
    }

    /// Writes `iter,theta_1..theta_d,log_post,accepted`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_draws_csv(&self.draws, self.dim(), w)
    }
}

/// CSV with columns `iter,theta_1..theta_d,log_post,accepted`.
pub fn write_draws_csv<W: Write>(draws: &[Draw], dim: usize, mut w: W) -> std::io::Result<()> {
    write!(w, "iter")?;
    for j in 1..=dim {
        write!(w, ",theta_{j}")?;
    }
    writeln!(w, ",log_post,accepted")?;
    for (i, d) in draws.iter().enumerate() {
        write!(w, "{i}")?;
        for v in &d.theta {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{},{}", d.log_post, u8::from(d.accepted))?;
    }
    Ok(())
}

/// Standard error of the mean from `⌊√n⌋` non-overlapping batches.
pub fn batch_means_se(x: &[f64]) -> f64 {
    let n = x.len();
    let size = ((n as f64).sqrt() as usize).max(1);
    let batches = n / size;
    if batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Running mean and covariance.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Matrix<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: Matrix::zeros(d, d),
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let d = x.len();
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / self.n as f64;
        }
        for i in 0..d {
            for j in 0..d {
                self.m2[(i, j)] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    fn covariance(&self) -> Matrix<f64> {
        let mut c = self.m2.clone();
        c.scale(1.0 / (self.n as f64 - 1.0));
        c
    }
}

fn log_jacobian(transforms: &[Transform], u: &[f64]) -> f64 {
    transforms
        .iter()
        .zip(u)
        .map(|(t, &x)| t.log_jacobian(x))
        .sum()
}

fn to_theta(transforms: &[Transform], u: &[f64]) -> Vec<f64> {
    transforms
        .iter()
        .zip(u)
        .map(|(t, &x)| t.from_unconstrained(x))
        .collect()
}

/// Runs `n_burn + n_iter` Metropolis steps from a feasible start.
pub fn run_chain<T: LogTarget + ?Sized>(
    target: &T,
    start: &ChainStart,
    config: &SamplerConfig,
    rng: &mut StreamRng,
    seed: u64,
) -> Result<Chain, SamplerError> {
    config.validate()?;
    if !start.log_target.is_finite() {
        return Err(SamplerError::InfeasibleStart);
    }
    let prior = target.prior();
    let d = prior.dim();
    let transforms = prior.transforms();
    let mut u: Vec<f64> = transforms
        .iter()
        .zip(&start.theta)
        .map(|(t, &x)| t.to_unconstrained(x))
        .collect();
    let mut theta = start.theta.clone();
    let mut log_post = start.log_target;
    let mut log_jac = log_jacobian(&transforms, &u);

    let initial_sd: Vec<f64> = prior
        .ranges()
        .iter()
        .zip(&transforms)
        .zip(&u)
        .map(|((range, t), &x)| (config.initial_scale * range / t.derivative(x)).clamp(1e-6, 2.0))
        .collect();
    let initial_factor = Matrix::diagonal(&initial_sd);
    let mut factor = initial_factor.clone();
    let mut proposal_cov = Matrix::diagonal(&initial_sd.iter().map(|s| s * s).collect::<Vec<_>>());
    let scale = 2.4 * 2.4 / d as f64;

    let mut history = Welford::new(d);
    history.push(&u);
    let total = config.n_burn + config.n_iter;
    let mut draws = Vec::with_capacity(config.n_iter);
    let mut accepted_after_burn = 0usize;
    let mut z = vec![0.0; d];

    for iter in 0..total {
        if iter >= config.adapt_start && history.n > d {
            let mut cov = history.covariance();
            cov.scale(scale);
            cov.add_diagonal(config.jitter);
            if let Some(ch) = cov.cholesky() {
                factor = ch.factor().clone();
                proposal_cov = cov;
            }
        }
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let step = factor.matvec(&z);
        let u_new: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + b).collect();
        let theta_new = to_theta(&transforms, &u_new);
        let mut accepted = false;
        if prior.in_support(&theta_new) {
            let lp_new = target.log_target(&theta_new, rng)?;
            if lp_new.is_finite() {
                let jac_new = log_jacobian(&transforms, &u_new);
                let log_ratio = (lp_new + jac_new) - (log_post + log_jac);
                if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
                    u = u_new;
                    theta = theta_new;
                    log_post = lp_new;
                    log_jac = jac_new;
                    accepted = true;
                }
            }
        }
        history.push(&u);
        if iter >= config.n_burn {
            accepted_after_burn += usize::from(accepted);
            draws.push(Draw {
                theta: theta.clone(),
                log_post,
                accepted,
            });
        }
    }
    Ok(Chain {
        acceptance_rate: accepted_after_burn as f64 / config.n_iter as f64,
        draws,
        proposal_cov,
        burn_in: config.n_burn,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Marginal;
    use rand::SeedableRng;

    struct Flat(Prior);

    impl LogTarget for Flat {
        fn prior(&self) -> &Prior {
            &self.0
        }
        fn log_target(&self, theta: &[f64], _: &mut StreamRng) -> Result<f64, PosteriorError> {
            Ok(if self.0.in_support(theta) {
                0.0
            } else {
                f64::NEG_INFINITY
            })
        }
    }

    struct StdNormal(Prior);

    impl LogTarget for StdNormal {
        fn prior(&self) -> &Prior {
            &self.0
        }
        fn log_target(&self, theta: &[f64], _: &mut StreamRng) -> Result<f64, PosteriorError> {
            Ok(theta.iter().map(|x| -0.5 * x * x).sum())
        }
    }

    fn small_config() -> SamplerConfig {
        SamplerConfig {
            n_iter: 20_000,
            n_burn: 2_000,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn flat_target_accepts_everything() {
        // Improper flat target on the real line: every proposal is accepted.
        let t = Flat(Prior::new(vec![Marginal::Normal { mean: 0.0, sd: 1.0 }]).unwrap());
        let mut rng = StreamRng::seed_from_u64(1);
        let start = init_chain(&t, 10, &mut rng).unwrap();
        let chain = run_chain(&t, &start, &small_config(), &mut rng, 1).unwrap();
        assert!((chain.acceptance_rate - 1.0).abs() < 0.01);
    }

    #[test]
    fn gaussian_target_moments() {
        let t = StdNormal(
            Prior::new(vec![
                Marginal::Normal {
                    mean: 0.0,
                    sd: 10.0
                };
                2
            ])
            .unwrap(),
        );
        let mut rng = StreamRng::seed_from_u64(2);
        let start = init_chain(&t, 10, &mut rng).unwrap();
        let chain = run_chain(&t, &start, &small_config(), &mut rng, 2).unwrap();
        let (mean, sd, se) = (chain.mean(), chain.sd(), chain.mcse());
        for j in 0..2 {
            assert!(mean[j].abs() < 4.0 * se[j], "mean {} se {}", mean[j], se[j]);
            assert!((sd[j] - 1.0).abs() < 0.1);
        }
        assert!(chain.acceptance_rate > 0.2 && chain.acceptance_rate < 0.5);
        let eig = chain.proposal_cov.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= 1e-8));
    }

    #[test]
    fn bounded_prior_stays_inside() {
        let t = Flat(Prior::new(vec![Marginal::Uniform { lo: 0.0, hi: 1.0 }]).unwrap());
        let mut rng = StreamRng::seed_from_u64(3);
        let start = init_chain(&t, 10, &mut rng).unwrap();
        let chain = run_chain(&t, &start, &small_config(), &mut rng, 3).unwrap();
        let x = chain.coordinate(0);
        assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
        // The Jacobian correction makes the chain uniform on (0, 1).
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 0.5).abs() < 4.0 * chain.mcse()[0]);
    }

    #[test]
    fn seeded_chains_repeat() {
        let t = StdNormal(
            Prior::new(vec![Marginal::Normal {
                mean: 0.0,
                sd: 10.0,
            }])
            .unwrap(),
        );
        let run = || {
            let mut rng = StreamRng::seed_from_u64(9);
            let start = init_chain(&t, 10, &mut rng).unwrap();
            run_chain(&t, &start, &small_config(), &mut rng, 9).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn infeasible_everywhere_gives_no_start() {
        struct Never(Prior);
        impl LogTarget for Never {
            fn prior(&self) -> &Prior {
                &self.0
            }
            fn log_target(&self, _: &[f64], _: &mut StreamRng) -> Result<f64, PosteriorError> {
                Ok(f64::NEG_INFINITY)
            }
        }
        let t = Never(Prior::new(vec![Marginal::Normal { mean: 0.0, sd: 1.0 }]).unwrap());
        let mut rng = StreamRng::seed_from_u64(4);
        assert_eq!(
            init_chain(&t, 5, &mut rng),
            Err(SamplerError::NoFeasibleStart { tries: 5 })
        );
        let start = ChainStart {
            theta: vec![0.0],
            log_target: f64::NEG_INFINITY,
        };
        assert_eq!(
            run_chain(&t, &start, &small_config(), &mut rng, 4),
            Err(SamplerError::InfeasibleStart)
        );
    }

    #[test]
    fn csv_layout() {
        let draws = vec![
            Draw {
                theta: vec![1.0, 2.5],
                log_post: -3.0,
                accepted: true,
            },
            Draw {
                theta: vec![1.0, 2.5],
                log_post: -3.0,
                accepted: false,
            },
        ];
        let mut buf = Vec::new();
        write_draws_csv(&draws, 2, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,theta_1,theta_2,log_post,accepted\n0,1,2.5,-3,1\n1,1,2.5,-3,0\n"
        );
    }

    #[test]
    fn batch_means_of_iid_noise() {
        let mut rng = StreamRng::seed_from_u64(5);
        let x: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let se = batch_means_se(&x);
        assert!((se / 0.01 - 1.0).abs() < 0.3);
    }
}
