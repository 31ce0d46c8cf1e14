use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{with_pool, HarnessError};
use crate::posterior::{eval_log_posterior, EvaluationContext};
use crate::rng::substream;

/// Mean and normal-theory 95% band of the estimated log-likelihood at one
/// parameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub theta: Vec<f64>,
    /// Mean over finite evaluations; `-inf` when none were finite.
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// Evaluations with a finite value.
    pub finite: usize,
    pub in_support: bool,
}

/// Evaluates `el_part + entropy_part` `evals` times at every grid point.
/// Point `i` uses the substream `("grid", i)` of `seed`.
pub fn density_grid(
    ctx: &EvaluationContext,
    grid: &[Vec<f64>],
    evals: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<GridRow>, HarnessError> {
    if evals == 0 {
        return Err(HarnessError::Invalid(
            "evals per point must be at least 1".into(),
        ));
    }
    with_pool(workers, || {
        grid.par_iter()
            .enumerate()
            .map(|(i, theta)| {
                let in_support = ctx.prior.in_support(theta);
                let mut values = Vec::with_capacity(evals);
                if in_support {
                    let mut rng = substream(seed, "grid", &[i as u64]);
                    for _ in 0..evals {
                        let v = eval_log_posterior(theta, ctx, &mut rng)?.log_likelihood();
                        if v.is_finite() {
                            values.push(v);
                        }
                    }
                }
                Ok(grid_row(theta.clone(), &values, in_support))
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })?
}

fn grid_row(theta: Vec<f64>, values: &[f64], in_support: bool) -> GridRow {
    if values.is_empty() {
        return GridRow {
            theta,
            mean: f64::NEG_INFINITY,
            lo95: f64::NEG_INFINITY,
            hi95: f64::NEG_INFINITY,
            finite: 0,
            in_support,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    GridRow {
        theta,
        mean,
        lo95: mean - 1.96 * sd,
        hi95: mean + 1.96 * sd,
        finite: values.len(),
        in_support,
    }
}

/// Writes `theta_1..theta_d,mean_logpost,lo95,hi95`.
pub fn write_grid_csv<W: Write>(rows: &[GridRow], mut w: W) -> std::io::Result<()> {
    let d = rows.first().map_or(0, |r| r.theta.len());
    for j in 1..=d {
        write!(w, "theta_{j},")?;
    }
    writeln!(w, "mean_logpost,lo95,hi95")?;
    for r in rows {
        for v in &r.theta {
            write!(w, "{v},")?;
        }
        writeln!(w, "{},{},{}", r.mean, r.lo95, r.hi95)?;
    }
    Ok(())
}

/// Reads grid points: one parameter vector per line, comma separated. Blank
/// lines and lines starting with `#` or a letter (a header) are skipped.
pub fn read_theta_grid<R: BufRead>(r: R) -> Result<Vec<Vec<f64>>, HarnessError> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|source| HarnessError::Io {
            path: "theta grid".into(),
            source,
        })?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let row = t
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                HarnessError::Invalid(format!("bad number on grid line {}", lineno + 1))
            })?;
        out.push(row);
    }
    Ok(out)
}
