//! Reference curves for the normal-variance log-posterior comparison.

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{build_context, observed_dataset, HarnessError};
use super::grid::{density_grid, GridRow};
use crate::models::{
    normal_var_log_posterior, normal_var_max_log_posterior, Dataset, Marginal, ModelSpec,
    SummarySpec,
};

/// Exact log posterior for a `normal_var` config with a uniform prior. With
/// the `max` summary it conditions on the observed maximum only; otherwise on
/// the full sample, for which the mean square is sufficient.
pub struct NormalVarReference {
    n: usize,
    lo: f64,
    hi: f64,
    sum_sq: f64,
    max: f64,
    given_max: bool,
}

impl NormalVarReference {
    pub fn new(cfg: &ExperimentConfig, repeat: usize) -> Result<Self, HarnessError> {
        let ModelSpec::NormalVar { n } = cfg.model else {
            return Err(HarnessError::Invalid(
                "reference curves need the normal_var model".into(),
            ));
        };
        let [Marginal::Uniform { lo, hi }] = cfg.prior[..] else {
            return Err(HarnessError::Invalid(
                "reference curves need a single uniform prior".into(),
            ));
        };
        let given_max = match cfg.summaries[..] {
            [SummarySpec::Max] => true,
            [SummarySpec::MeanSquare] => false,
            _ => {
                return Err(HarnessError::Invalid(
                    "reference curves need a single max or mean_square summary".into(),
                ))
            }
        };
        let Dataset::Series(x) = observed_dataset(cfg, repeat)? else {
            return Err(HarnessError::Invalid("normal_var produces a series".into()));
        };
        Ok(Self {
            n,
            lo,
            hi,
            sum_sq: x.iter().map(|v| v * v).sum(),
            max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            given_max,
        })
    }

    pub fn log_posterior(&self, theta: f64) -> f64 {
        if self.given_max {
            normal_var_max_log_posterior(theta, self.n, self.max, self.lo, self.hi)
        } else {
            normal_var_log_posterior(theta, self.n, self.sum_sq, self.lo, self.hi)
        }
    }

    /// `points` equally spaced values spanning `{θ : π(θ) > threshold}` for
    /// the normalized posterior density `π`.
    pub fn region_grid(&self, threshold: f64, points: usize) -> Vec<f64> {
        const FINE: usize = 20_000;
        let h = (self.hi - self.lo) / FINE as f64;
        let fine: Vec<f64> = (0..FINE).map(|i| self.lo + (i as f64 + 0.5) * h).collect();
        let lp: Vec<f64> = fine.iter().map(|&t| self.log_posterior(t)).collect();
        let top = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = lp.iter().map(|v| (v - top).exp() * h).sum();
        let inside: Vec<f64> = fine
            .iter()
            .zip(&lp)
            .filter(|(_, v)| (*v - top).exp() / z > threshold)
            .map(|(t, _)| *t)
            .collect();
        let (a, b) = (inside[0], inside[inside.len() - 1]);
        if points == 1 {
            return vec![0.5 * (a + b)];
        }
        (0..points)
            .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
            .collect()
    }
}

/// Estimated and exact log posterior on a common grid for one `m`.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceCurve {
    pub m: usize,
    pub exact: Vec<f64>,
    pub rows: Vec<GridRow>,
}

impl ReferenceCurve {
    pub fn estimated_means(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean).collect()
    }

    /// Pearson correlation between estimated means and exact values.
    pub fn correlation(&self) -> f64 {
        pearson(&self.estimated_means(), &self.exact)
    }

    /// Spread of the estimated means across the grid.
    pub fn range(&self) -> f64 {
        let est = self.estimated_means();
        est.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - est.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the estimated log likelihood `evals` times per grid point for
/// the observed data of repeat 0, with `m` replicates.
pub fn reference_curve(
    cfg: &ExperimentConfig,
    m: usize,
    grid: &[f64],
    evals: usize,
    workers: usize,
) -> Result<ReferenceCurve, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.experiment.m = m;
    let reference = NormalVarReference::new(&cfg, 0)?;
    let ctx = build_context(&cfg, 0)?;
    let points: Vec<Vec<f64>> = grid.iter().map(|&t| vec![t]).collect();
    let rows = density_grid(&ctx, &points, evals, cfg.experiment.seed, workers)?;
    Ok(ReferenceCurve {
        m,
        exact: grid.iter().map(|&t| reference.log_posterior(t)).collect(),
        rows,
    })
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pearson needs equal lengths");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_of_affine_map_is_one() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let b: Vec<f64> = a.iter().map(|x| 3.0 - 2.0 * x).collect();
        assert!((pearson(&a, &b) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_grid_brackets_the_mode() {
        let cfg = ExperimentConfig::load("normal_var_mean_square_fig1").unwrap();
        let reference = NormalVarReference::new(&cfg, 0).unwrap();
        let grid = reference.region_grid(0.05, 11);
        let mode = reference.sum_sq / reference.n as f64;
        assert!(grid[0] < mode && mode < grid[10]);
        assert_eq!(grid.len(), 11);
    }
}
