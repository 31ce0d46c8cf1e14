//! Special functions at the precision the estimators need.

use crate::scalar::Scalar;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma at a positive integer: `ψ(j) = -γ + Σ_{i<j} 1/i`.
pub fn digamma_int<T: Scalar>(j: usize) -> T {
    assert!(j >= 1, "digamma_int needs a positive integer");
    let harmonic: f64 = (1..j).map(|i| 1.0 / i as f64).sum();
    T::c(harmonic - EULER_GAMMA)
}

pub fn ln_gamma<T: Scalar>(x: T) -> T {
    T::c(statrs::function::gamma::ln_gamma(x.to_f64_lossy()))
}

/// `Γ(a + b) / Γ(a)` evaluated through log-gamma differences.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (ln_gamma(a + b) - ln_gamma(a)).exp()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_small_integers() {
        assert!((digamma_int::<f64>(1) + EULER_GAMMA).abs() < 1e-15);
        assert!((digamma_int::<f64>(2) - (1.0 - EULER_GAMMA)).abs() < 1e-15);
        assert!((digamma_int::<f64>(4) - (1.0 + 0.5 + 1.0 / 3.0 - EULER_GAMMA)).abs() < 1e-14);
    }

    #[test]
    fn gamma_ratio_half_step() {
        // Γ(3/2)/Γ(1) = √π/2
        let expect = std::f64::consts::PI.sqrt() / 2.0;
        assert!((gamma_ratio(1.0, 0.5) - expect).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_round_trip() {
        for p in [0.01, 0.25, 0.5, 0.8, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-10);
        }
    }
}
