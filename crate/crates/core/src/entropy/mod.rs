//! Differential entropy of replicate summaries.
//!
//! The default estimator is the weighted Kozachenko–Leonenko estimator built
//! from k-nearest-neighbour distances,
//!
//! ```text
//! Ĥ = (1/m) Σ_i Σ_j ν_j log( (m-1) π^{r/2} ρ_{(j),i}^r e^{-ψ(j)} / Γ(1 + r/2) )
//! ```
//!
//! with `ν` chosen by [`euclidean_weights`]. A Gaussian plug-in based on the
//! sample covariance is available for summaries that are close to normal.

mod kdtree;
mod knn;
mod weights;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::mean_and_covariance;
use crate::scalar::Scalar;
use crate::special::{digamma_int, ln_gamma};

pub use knn::{knn_table, knn_table_brute, knn_table_kdtree, NeighborTable, KD_TREE_THRESHOLD};
pub use weights::{euclidean_weights, moment_constraint_count, support_grid, WeightVectorNu};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("need at least k + 1 = {} points, got {m}", k + 1)]
    TooFewPoints { m: usize, k: usize },
    #[error("invalid neighbour order k = {k} for dimension r = {r}")]
    InvalidOrder { k: usize, r: usize },
    #[error("moment constraints on the entropy weights are unsatisfiable for k = {k}, r = {r}; increase k")]
    InconsistentConstraints { k: usize, r: usize },
    #[error("points have dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("points contain non-finite coordinates")]
    NonFinite,
    #[error("duplicate points give a zero neighbour distance; entropy is undefined")]
    DuplicatePoints,
    #[error("sample covariance is singular; Gaussian entropy is undefined")]
    SingularCovariance,
}

/// How the entropy term is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    #[default]
    KozachenkoLeonenko,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEstimate<T> {
    /// Estimate in nats.
    pub value: T,
    pub k: usize,
    pub nu: WeightVectorNu<T>,
}

/// Default neighbour order: `⌈m^{1/3}⌉` clipped to `[3, m - 1]`.
pub fn default_k(m: usize) -> usize {
    let mut k = 1;
    while k * k * k < m {
        k += 1;
    }
    k.max(3).min(m.saturating_sub(1)).max(1)
}

/// Weighted Kozachenko–Leonenko estimate with weights for `(k, r)` computed
/// on the fly.
pub fn kl_entropy<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
) -> Result<EntropyEstimate<T>, EntropyError> {
    let r = points.first().map_or(0, Vec::len);
    let nu = euclidean_weights(k, r)?;
    kl_entropy_with_weights(points, &nu)
}

/// Weighted Kozachenko–Leonenko estimate with precomputed weights.
pub fn kl_entropy_with_weights<T: Scalar>(
    points: &[Vec<T>],
    nu: &WeightVectorNu<T>,
) -> Result<EntropyEstimate<T>, EntropyError> {
    let r = points.first().map_or(0, Vec::len);
    if r != nu.r {
        return Err(EntropyError::DimensionMismatch {
            expected: nu.r,
            got: r,
        });
    }
    let k = nu.k;
    let table = knn_table(points, k)?;
    let m = points.len();
    let rf = T::from_count(r);
    let constant = T::from_count(m - 1).ln() + rf / T::c(2.0) * T::c(std::f64::consts::PI).ln()
        - ln_gamma(T::one() + rf / T::c(2.0));

    let mut value = T::zero();
    for (j, w) in nu.active() {
        let mut log_rho = T::zero();
        for i in 0..m {
            let rho = table.rho[(i, j - 1)];
            if rho == T::zero() {
                return Err(EntropyError::DuplicatePoints);
            }
            log_rho += rho.ln();
        }
        value += w * (constant - digamma_int::<T>(j) + rf * log_rho / T::from_count(m));
    }
    Ok(EntropyEstimate {
        value,
        k,
        nu: nu.clone(),
    })
}

/// Entropy of the normal distribution with the sample covariance of `points`.
pub fn gaussian_entropy<T: Scalar>(points: &[Vec<T>]) -> Result<T, EntropyError> {
    let r = points.first().map_or(0, Vec::len);
    if points.len() < r + 1 {
        return Err(EntropyError::TooFewPoints {
            m: points.len(),
            k: r,
        });
    }
    let (_, cov) = mean_and_covariance(points);
    let chol = cov.cholesky().ok_or(EntropyError::SingularCovariance)?;
    let rf = T::from_count(r);
    Ok(
        rf / T::c(2.0) * (T::one() + T::c(2.0 * std::f64::consts::PI).ln())
            + chol.log_det() / T::c(2.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn hand_evaluated_three_points() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let h = kl_entropy(&pts, 1).unwrap();
        let psi1 = -crate::special::EULER_GAMMA;
        let expect: f64 = [1.0f64, 1.0, 2.0]
            .iter()
            .map(|rho| (2.0 * 2.0 * rho / psi1.exp()).ln())
            .sum::<f64>()
            / 3.0;
        assert!(
            (h.value - expect).abs() < 1e-12,
            "{} vs {}",
            h.value,
            expect
        );
        assert_eq!(h.nu.nu, vec![1.0]);
    }

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(25), 3);
        assert_eq!(default_k(27), 3);
        assert_eq!(default_k(28), 4);
        assert_eq!(default_k(40), 4);
        assert_eq!(default_k(500), 8);
        assert_eq!(default_k(3), 2);
    }

    #[test]
    fn duplicates_make_entropy_undefined() {
        let pts = vec![vec![0.0], vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(kl_entropy(&pts, 1), Err(EntropyError::DuplicatePoints));
        // The duplicate is only the first neighbour; order 2 is still defined.
        assert!(kl_entropy(&pts, 2).is_ok());
    }

    #[test]
    fn reduces_to_classical_estimator() {
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let h = kl_entropy(&pts, 1).unwrap().value;
        // Classical 1-NN estimator in two dimensions: ψ(m) replaced by log(m-1).
        let t = knn_table_brute(&pts, 1).unwrap();
        let m = pts.len() as f64;
        let mean_log: f64 = (0..pts.len()).map(|i| t.rho[(i, 0)].ln()).sum::<f64>() / m;
        let classical = (m - 1.0).ln()
            + std::f64::consts::PI.ln()
            + 2.0 * mean_log
            + crate::special::EULER_GAMMA;
        assert!((h - classical).abs() < 1e-12);
    }

    #[test]
    fn gaussian_entropy_of_standard_normal_sample() {
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..20000)
            .map(|_| vec![StandardNormal.sample(&mut rng)])
            .collect();
        let h = gaussian_entropy(&pts).unwrap();
        assert!((h - 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).abs() < 0.02);
    }

    #[test]
    fn gaussian_entropy_singular() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert_eq!(
            gaussian_entropy(&pts),
            Err(EntropyError::SingularCovariance)
        );
    }
}
