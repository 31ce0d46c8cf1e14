//! Closed-form posteriors used as references.

/// Normal posterior `N(mean, sd²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalPosterior {
    pub mean: f64,
    pub sd: f64,
}

/// Posterior of `μ` for `N(μ, 1)` data under a `N(prior_mean, prior_sd²)`
/// prior. With a standard normal prior this is `N(Σx/(n+1), 1/(n+1))`.
pub fn normal_mean_posterior(data: &[f64], prior_mean: f64, prior_sd: f64) -> NormalPosterior {
    let precision = data.len() as f64 + 1.0 / (prior_sd * prior_sd);
    let mean = (data.iter().sum::<f64>() + prior_mean / (prior_sd * prior_sd)) / precision;
    NormalPosterior {
        mean,
        sd: precision.sqrt().recip(),
    }
}

/// Unnormalized log posterior of `θ` for `N(0, θ)` data with `n` points and
/// `Σx² = sum_sq`, under a `U(lo, hi)` prior.
pub fn normal_var_log_posterior(theta: f64, n: usize, sum_sq: f64, lo: f64, hi: f64) -> f64 {
    if !(theta > lo && theta < hi && theta > 0.0) {
        return f64::NEG_INFINITY;
    }
    -0.5 * n as f64 * theta.ln() - 0.5 * sum_sq / theta
}

/// Unnormalized log posterior of `θ` given only the sample maximum `max` of
/// `n` draws from `N(0, θ)`, under a `U(lo, hi)` prior. The maximum has
/// density `n φ(x/√θ) Φ(x/√θ)^(n-1) / √θ`.
pub fn normal_var_max_log_posterior(theta: f64, n: usize, max: f64, lo: f64, hi: f64) -> f64 {
    if !(theta > lo && theta < hi && theta > 0.0) {
        return f64::NEG_INFINITY;
    }
    let z = max / theta.sqrt();
    -0.5 * theta.ln() - 0.5 * z * z + (n as f64 - 1.0) * crate::special::normal_cdf(z).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_density_integrates_to_one() {
        let (theta, n) = (4.0, 100);
        let h = 1e-3;
        let total: f64 = (0..40_000)
            .map(|i| -10.0 + i as f64 * h)
            .map(|x| {
                let lp = normal_var_max_log_posterior(theta, n, x, 0.0, 10.0);
                (lp + (n as f64).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()).exp() * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn normal_mean_posterior_conjugate() {
        let p = normal_mean_posterior(&[1.0, 2.0, 3.0], 0.0, 1.0);
        assert!((p.mean - 1.5).abs() < 1e-15);
        assert!((p.sd - 0.5).abs() < 1e-15);
    }

    #[test]
    fn variance_posterior_outside_prior() {
        assert_eq!(
            normal_var_log_posterior(11.0, 10, 5.0, 0.0, 10.0),
            f64::NEG_INFINITY
        );
        assert_eq!(
            normal_var_max_log_posterior(-1.0, 10, 5.0, 0.0, 10.0),
            f64::NEG_INFINITY
        );
    }
}
