//! Summary statistics mapping a dataset to a real vector.

use std::cell::RefCell;
use std::fmt::Debug;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Dataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummaryError {
    #[error("summary `{summary}` is undefined on an empty dataset")]
    EmptyData { summary: &'static str },
    #[error("periodogram summary needs at least 8 observations, got {n}")]
    PeriodogramTooShort { n: usize },
    #[error("summary `{summary}` does not apply to this kind of dataset")]
    WrongDataKind { summary: &'static str },
}

pub trait SummaryFn: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn output_dim(&self) -> usize;
    /// Appends `output_dim()` values to `out`.
    fn apply(&self, data: &Dataset, out: &mut Vec<f64>) -> Result<(), SummaryError>;
}

/// Concatenated summaries of one dataset.
pub fn summarize(
    summaries: &[Box<dyn SummaryFn>],
    data: &Dataset,
) -> Result<Vec<f64>, SummaryError> {
    let mut out = Vec::with_capacity(summaries.iter().map(|s| s.output_dim()).sum());
    for s in summaries {
        s.apply(data, &mut out)?;
    }
    Ok(out)
}

/// The built-in summary library, addressable by name from configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SummarySpec {
    Mean,
    /// `(1/n) Σ (x - x̄)^order`.
    CentralMoment {
        order: u32,
    },
    /// `(1/n) Σ x²`.
    MeanSquare,
    Max,
    Median,
    Quantile {
        p: f64,
    },
    Quartiles,
    /// Quartiles of `|x|`.
    AbsQuartiles,
    /// Fraction of values in the open interval `(lo, hi)`.
    PropInInterval {
        lo: f64,
        hi: f64,
    },
    /// Fraction of values `≤ threshold`.
    PropAtMost {
        threshold: f64,
    },
    /// Fraction of first differences `> threshold`, over the `n - 1` differences.
    PropDiffAbove {
        threshold: f64,
    },
    /// Concordance of centred squares with their lag-1 values.
    LagConcordance,
    /// Fraction of smoothed-periodogram log ordinates in `(lo, hi)`.
    PeriodogramProp {
        lo: f64,
        hi: f64,
    },
    EdgeCount,
    TriangleCount,
    /// `(n - offset) / scale` where `n` is the number of values.
    ScaledCount {
        offset: f64,
        scale: f64,
    },
}

fn series<'a>(data: &'a Dataset, summary: &'static str) -> Result<&'a [f64], SummaryError> {
    match data {
        Dataset::Series(x) => Ok(x),
        Dataset::Graph(_) => Err(SummaryError::WrongDataKind { summary }),
    }
}

fn nonempty<'a>(data: &'a Dataset, summary: &'static str) -> Result<&'a [f64], SummaryError> {
    let x = series(data, summary)?;
    if x.is_empty() {
        Err(SummaryError::EmptyData { summary })
    } else {
        Ok(x)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantiles at ascending probabilities `ps`, found by selection. The
/// slice is reordered.
pub fn quantiles_select(x: &mut [f64], ps: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut start = 0;
    ps.iter()
        .map(|&p| {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            if lo >= start {
                x[start..].select_nth_unstable_by(lo - start, f64::total_cmp);
            }
            let a = x[lo];
            let frac = h - lo as f64;
            let v = if frac > 0.0 && lo + 1 < n {
                let b = x[lo + 1..].iter().copied().fold(f64::INFINITY, f64::min);
                a + frac * (b - a)
            } else {
                a
            };
            start = lo + 1;
            v
        })
        .collect()
}

#[cfg(test)]
fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn proportion(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

/// Lag-1 concordance statistic of the centred squares `Y_j = x_j² - mean(x²)`.
pub fn lag_concordance(x: &[f64]) -> f64 {
    let n = x.len();
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let y: Vec<f64> = x.iter().map(|v| v * v - m2).collect();
    let score: i64 = y
        .windows(2)
        .map(|w| if w[0] * w[1] >= 0.0 { 1 } else { -1 })
        .sum();
    score as f64 / n as f64
}

thread_local! {
    static FFT_PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

const DANIELL_5: [f64; 5] = [0.125, 0.25, 0.25, 0.25, 0.125];

/// Log ordinates of the mean-removed periodogram smoothed by a modified
/// Daniell window of span 5, at Fourier frequencies `1..=n/2`.
pub fn smoothed_log_periodogram(x: &[f64]) -> Result<Vec<f64>, SummaryError> {
    let n = x.len();
    if n < 8 {
        return Err(SummaryError::PeriodogramTooShort { n });
    }
    let mu = mean(x);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v - mu, 0.0)).collect();
    FFT_PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let mut pgram: Vec<f64> = buf.iter().map(|c| c.norm_sqr() / n as f64).collect();
    // The zero frequency vanishes after mean removal; fill it from its neighbours.
    pgram[0] = 0.5 * (pgram[1] + pgram[n - 1]);
    Ok((1..=n / 2)
        .map(|j| {
            DANIELL_5
                .iter()
                .enumerate()
                .map(|(o, w)| w * pgram[(j + n + o - 2) % n])
                .sum::<f64>()
                .ln()
        })
        .collect())
}

impl SummaryFn for SummarySpec {
    fn name(&self) -> &'static str {
        match self {
            SummarySpec::Mean => "mean",
            SummarySpec::CentralMoment { .. } => "central_moment",
            SummarySpec::MeanSquare => "mean_square",
            SummarySpec::Max => "max",
            SummarySpec::Median => "median",
            SummarySpec::Quantile { .. } => "quantile",
            SummarySpec::Quartiles => "quartiles",
            SummarySpec::AbsQuartiles => "abs_quartiles",
            SummarySpec::PropInInterval { .. } => "prop_in_interval",
            SummarySpec::PropAtMost { .. } => "prop_at_most",
            SummarySpec::PropDiffAbove { .. } => "prop_diff_above",
            SummarySpec::LagConcordance => "lag_concordance",
            SummarySpec::PeriodogramProp { .. } => "periodogram_prop",
            SummarySpec::EdgeCount => "edge_count",
            SummarySpec::TriangleCount => "triangle_count",
            SummarySpec::ScaledCount { .. } => "scaled_count",
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            SummarySpec::Quartiles | SummarySpec::AbsQuartiles => 3,
            _ => 1,
        }
    }

    fn apply(&self, data: &Dataset, out: &mut Vec<f64>) -> Result<(), SummaryError> {
        let name = self.name();
        match *self {
            SummarySpec::Mean => out.push(mean(nonempty(data, name)?)),
            SummarySpec::CentralMoment { order } => {
                let x = nonempty(data, name)?;
                let mu = mean(x);
                out.push(
                    x.iter().map(|v| (v - mu).powi(order as i32)).sum::<f64>() / x.len() as f64,
                );
            }
            SummarySpec::MeanSquare => {
                let x = nonempty(data, name)?;
                out.push(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64);
            }
            SummarySpec::Max => out.push(
                nonempty(data, name)?
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
            SummarySpec::Median => out.extend(quantiles_select(
                &mut nonempty(data, name)?.to_vec(),
                &[0.5],
            )),
            SummarySpec::Quantile { p } => {
                out.extend(quantiles_select(&mut nonempty(data, name)?.to_vec(), &[p]))
            }
            SummarySpec::Quartiles | SummarySpec::AbsQuartiles => {
                let x = nonempty(data, name)?;
                let mut s: Vec<f64> = if matches!(self, SummarySpec::AbsQuartiles) {
                    x.iter().map(|v| v.abs()).collect()
                } else {
                    x.to_vec()
                };
                out.extend(quantiles_select(&mut s, &[0.25, 0.5, 0.75]));
            }
            SummarySpec::PropInInterval { lo, hi } => {
                let x = nonempty(data, name)?;
                out.push(proportion(
                    x.iter().filter(|&&v| v > lo && v < hi).count(),
                    x.len(),
                ));
            }
            SummarySpec::PropAtMost { threshold } => {
                let x = nonempty(data, name)?;
                out.push(proportion(
                    x.iter().filter(|&&v| v <= threshold).count(),
                    x.len(),
                ));
            }
            SummarySpec::PropDiffAbove { threshold } => {
                let x = series(data, name)?;
                if x.len() < 2 {
                    return Err(SummaryError::EmptyData { summary: name });
                }
                let count = x.windows(2).filter(|w| w[1] - w[0] > threshold).count();
                out.push(proportion(count, x.len() - 1));
            }
            SummarySpec::LagConcordance => out.push(lag_concordance(nonempty(data, name)?)),
            SummarySpec::PeriodogramProp { lo, hi } => {
                let logs = smoothed_log_periodogram(series(data, name)?)?;
                out.push(proportion(
                    logs.iter().filter(|&&v| v > lo && v < hi).count(),
                    logs.len(),
                ));
            }
            SummarySpec::EdgeCount | SummarySpec::TriangleCount => match data {
                Dataset::Graph(g) => out.push(if matches!(self, SummarySpec::EdgeCount) {
                    g.edge_count() as f64
                } else {
                    g.triangle_count() as f64
                }),
                Dataset::Series(_) => return Err(SummaryError::WrongDataKind { summary: name }),
            },
            SummarySpec::ScaledCount { offset, scale } => {
                out.push((series(data, name)?.len() as f64 - offset) / scale);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::graph::Graph;

    fn apply(s: SummarySpec, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        s.apply(&Dataset::Series(x.to_vec()), &mut out).unwrap();
        out
    }

    #[test]
    fn quartiles_of_one_to_eight() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        // Type 7: h = 7p, so 2.75, 4.5, 6.25.
        assert_eq!(apply(SummarySpec::Quartiles, &x), vec![2.75, 4.5, 6.25]);
        assert_eq!(apply(SummarySpec::Median, &[3.0, 1.0, 2.0]), vec![2.0]);
    }

    #[test]
    fn selection_matches_sorting() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(3);
        let ps = [0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0];
        for n in [1, 2, 3, 7, 8, 100, 101] {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64).collect();
            let sorted = sorted_copy(&x);
            let want: Vec<f64> = ps.iter().map(|&p| quantile_sorted(&sorted, p)).collect();
            assert_eq!(quantiles_select(&mut x.clone(), &ps), want, "n = {n}");
        }
    }

    #[test]
    fn moments() {
        let x = [1.0, 2.0, 3.0, 6.0];
        assert_eq!(apply(SummarySpec::Mean, &x), vec![3.0]);
        assert_eq!(
            apply(SummarySpec::CentralMoment { order: 2 }, &x),
            vec![3.5]
        );
        assert_eq!(
            apply(SummarySpec::CentralMoment { order: 3 }, &x),
            vec![4.5]
        );
        assert_eq!(apply(SummarySpec::MeanSquare, &x), vec![12.5]);
        assert_eq!(apply(SummarySpec::Max, &x), vec![6.0]);
    }

    #[test]
    fn proportions() {
        let x = [0.0, 1.0, 14.0, 15.0, 20.0];
        assert_eq!(
            apply(SummarySpec::PropInInterval { lo: 0.0, hi: 15.0 }, &x),
            vec![0.4]
        );
        assert_eq!(
            apply(SummarySpec::PropAtMost { threshold: 14.0 }, &x),
            vec![0.6]
        );
        // Differences 1, 13, 1, 5.
        assert_eq!(
            apply(SummarySpec::PropDiffAbove { threshold: 2.0 }, &x),
            vec![0.5]
        );
        assert_eq!(
            apply(
                SummarySpec::ScaledCount {
                    offset: 112.0,
                    scale: 100.0
                },
                &x
            ),
            vec![-1.07]
        );
    }

    #[test]
    fn concordance_all_concordant() {
        // Centred squares are negative in the first half and positive in the
        // second, so only the crossing pair is discordant.
        let x = [1.0, 2.0, 3.0, 4.0, 10.0, 11.0, 12.0, 13.0];
        assert_eq!(lag_concordance(&x), 5.0 / 8.0);
        // Zero products count as concordant.
        let flat = [2.0; 10];
        assert_eq!(lag_concordance(&flat), 9.0 / 10.0);
    }

    #[test]
    fn periodogram_of_sinusoid() {
        let n = 64;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 8.0 * t as f64 / n as f64).cos())
            .collect();
        let logs = smoothed_log_periodogram(&x).unwrap();
        assert_eq!(logs.len(), 32);
        // All power sits at frequency 8: |X_8|² / n = n / 4.
        let peak = (0.25 * n as f64 / 4.0).ln();
        assert!((logs[7] - peak).abs() < 1e-9);
        assert!((logs[6] - peak).abs() < 1e-9);
        assert!((logs[5] - (0.125 * n as f64 / 4.0).ln()).abs() < 1e-9);
        assert!(matches!(
            smoothed_log_periodogram(&x[..7]),
            Err(SummaryError::PeriodogramTooShort { n: 7 })
        ));
    }

    #[test]
    fn triangle_on_three_cycle() {
        let mut g = Graph::empty(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(0, 2);
        let mut out = Vec::new();
        SummarySpec::TriangleCount
            .apply(&Dataset::Graph(g.clone()), &mut out)
            .unwrap();
        SummarySpec::EdgeCount
            .apply(&Dataset::Graph(g), &mut out)
            .unwrap();
        assert_eq!(out, vec![1.0, 3.0]);
    }

    #[test]
    fn empty_and_wrong_kind() {
        let mut out = Vec::new();
        assert!(matches!(
            SummarySpec::Mean.apply(&Dataset::Series(vec![]), &mut out),
            Err(SummaryError::EmptyData { .. })
        ));
        assert!(matches!(
            SummarySpec::Mean.apply(&Dataset::Graph(Graph::empty(2)), &mut out),
            Err(SummaryError::WrongDataKind { .. })
        ));
        SummarySpec::ScaledCount {
            offset: 0.0,
            scale: 1.0,
        }
        .apply(&Dataset::Series(vec![]), &mut out)
        .unwrap();
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn spec_names_round_trip() {
        let s = SummarySpec::PeriodogramProp {
            lo: 5.12,
            hi: 6.278,
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"name":"periodogram_prop","lo":5.12,"hi":6.278}"#);
        assert_eq!(serde_json::from_str::<SummarySpec>(&json).unwrap(), s);
        assert!(serde_json::from_str::<SummarySpec>(r#"{"name":"nope"}"#).is_err());
    }
}
