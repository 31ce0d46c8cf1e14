use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::special::gamma_ratio;

use super::EntropyError;

/// Weights `ν` over neighbour orders `1..=k` for the weighted estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVectorNu<T> {
    /// `nu[j - 1]` is the weight on the `j`-th nearest neighbour.
    pub nu: Vec<T>,
    pub k: usize,
    pub r: usize,
}

impl<T: Scalar> WeightVectorNu<T> {
    /// Neighbour orders carrying nonzero weight, with their weights.
    pub fn active(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.nu
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != T::zero())
            .map(|(j, &w)| (j + 1, w))
    }
}

/// Orders allowed to carry weight: `{⌊jk/r⌋ : j = 1..r}` without zero or
/// repeats, ascending.
pub fn support_grid(k: usize, r: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (1..=r).map(|j| j * k / r).filter(|&x| x >= 1).collect();
    s.dedup();
    s
}

/// Number of moment constraints beyond the sum-to-one condition.
pub fn moment_constraint_count(r: usize) -> usize {
    r / 4
}

/// Minimizes `Σ_j (k ν_j - 1)²` subject to the support restriction, `Σ ν_j = 1`
/// and `Σ ν_j Γ(j + 2l/r)/Γ(j) = 0` for `l = 1..⌊r/4⌋`.
///
/// Off-support terms are constant, so the minimizer is the Euclidean
/// projection of the uniform vector `1/k` onto the affine constraint set,
/// obtained from the KKT system `ν = u - Aᵀ(AAᵀ)⁻¹(Au - b)`.
pub fn euclidean_weights<T: Scalar>(k: usize, r: usize) -> Result<WeightVectorNu<T>, EntropyError> {
    if k == 0 || r == 0 {
        return Err(EntropyError::InvalidOrder { k, r });
    }
    let support = support_grid(k, r);
    let n_moment = moment_constraint_count(r);
    let n_cons = 1 + n_moment;
    if support.len() < n_cons {
        return Err(EntropyError::InconsistentConstraints { k, r });
    }
    let s = support.len();
    // Constraint rows in f64, then the projection in f64 for accuracy.
    let mut a = Matrix::<f64>::zeros(n_cons, s);
    let mut b = vec![0.0; n_cons];
    for (c, &j) in support.iter().enumerate() {
        a[(0, c)] = 1.0;
        for l in 1..=n_moment {
            a[(l, c)] = gamma_ratio(j as f64, 2.0 * l as f64 / r as f64);
        }
    }
    b[0] = 1.0;
    let u = vec![1.0 / k as f64; s];
    let au = a.matvec(&u);
    let rhs: Vec<f64> = au.iter().zip(&b).map(|(x, y)| x - y).collect();
    let aat = a.matmul(&a.transpose());
    let mu = aat
        .solve(&rhs)
        .ok_or(EntropyError::InconsistentConstraints { k, r })?;
    let correction = a.transpose().matvec(&mu);
    let nu_s: Vec<f64> = u.iter().zip(&correction).map(|(x, c)| x - c).collect();

    // The projection only exists if the system is consistent; check it.
    let check = a.matvec(&nu_s);
    for (row, (got, want)) in check.iter().zip(&b).enumerate() {
        let scale = (0..s).map(|c| a[(row, c)].abs()).fold(1.0, f64::max);
        if (got - want).abs() > 1e-9 * scale {
            return Err(EntropyError::InconsistentConstraints { k, r });
        }
    }
    let mut nu = vec![T::zero(); k];
    for (&j, &w) in support.iter().zip(&nu_s) {
        nu[j - 1] = T::c(w);
    }
    Ok(WeightVectorNu { nu, k, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_puts_all_weight_on_k() {
        for k in 1..8 {
            let w = euclidean_weights::<f64>(k, 1).unwrap();
            let mut expect = vec![0.0; k];
            expect[k - 1] = 1.0;
            assert_eq!(w.nu, expect);
        }
    }

    #[test]
    fn two_dimensional_k4_is_symmetric() {
        let w = euclidean_weights::<f64>(4, 2).unwrap();
        assert_eq!(support_grid(4, 2), vec![2, 4]);
        assert!((w.nu[1] - 0.5).abs() < 1e-15);
        assert!((w.nu[3] - 0.5).abs() < 1e-15);
        assert_eq!(w.nu[0], 0.0);
        assert_eq!(w.nu[2], 0.0);
    }

    #[test]
    fn support_grid_reading() {
        assert_eq!(support_grid(3, 2), vec![1, 3]);
        assert_eq!(support_grid(4, 4), vec![1, 2, 3, 4]);
        assert_eq!(support_grid(2, 4), vec![1, 2]);
        assert_eq!(support_grid(1, 3), vec![1]);
        assert_eq!(support_grid(10, 3), vec![3, 6, 10]);
    }

    #[test]
    fn too_small_support_is_inconsistent() {
        // r = 8 needs three constraints; k = 1 leaves a single support index.
        assert_eq!(
            euclidean_weights::<f64>(1, 8),
            Err(EntropyError::InconsistentConstraints { k: 1, r: 8 })
        );
    }

    #[test]
    fn constraints_hold_for_higher_dimensions() {
        for &(k, r) in &[(4, 4), (6, 4), (8, 5), (9, 8), (12, 9)] {
            let w = euclidean_weights::<f64>(k, r).unwrap();
            let total: f64 = w.nu.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for l in 1..=r / 4 {
                let m: f64 = w
                    .active()
                    .map(|(j, v)| v * gamma_ratio(j as f64, 2.0 * l as f64 / r as f64))
                    .sum();
                assert!(m.abs() < 1e-8, "moment {l} = {m} for k={k}, r={r}");
            }
            let support = support_grid(k, r);
            for (j, v) in w.nu.iter().enumerate() {
                if !support.contains(&(j + 1)) {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }
}
