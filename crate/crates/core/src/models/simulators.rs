//! Simulators for the benchmark models.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson, StandardNormal};

use super::graph::Graph;
use super::ModelError;

fn invalid(model: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        model,
        reason: reason.into(),
    }
}

/// `n` draws from `N(mu, 1)`.
pub fn sim_normal_mean<R: Rng + ?Sized>(
    mu: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    if !mu.is_finite() {
        return Err(invalid("normal_mean", "mean must be finite"));
    }
    Ok((0..n)
        .map(|_| {
            mu + {
                let z: f64 = StandardNormal.sample(rng);
                z
            }
        })
        .collect())
}

/// `n` draws from `N(0, variance)`.
pub fn sim_normal_var<R: Rng + ?Sized>(
    variance: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(invalid("normal_var", "variance must be positive"));
    }
    let sd = variance.sqrt();
    Ok((0..n)
        .map(|_| {
            sd * {
                let z: f64 = StandardNormal.sample(rng);
                z
            }
        })
        .collect())
}

/// g-and-k quantile function `Q(p; A, B, g, k)` with constant `c`.
pub fn gk_quantile(p: f64, theta: &[f64], c: f64) -> f64 {
    gk_transform(crate::special::normal_quantile(p), theta, c)
}

#[inline]
fn gk_transform(z: f64, theta: &[f64], c: f64) -> f64 {
    let (a, b, g, k) = (theta[0], theta[1], theta[2], theta[3]);
    // (1 - e^{-gz}) / (1 + e^{-gz}) = tanh(gz / 2)
    a + b * (1.0 + c * (0.5 * g * z).tanh()) * (1.0 + z * z).powf(k) * z
}

/// `n` g-and-k draws: standard normal `z(p)` pushed through the quantile map.
pub fn sim_gk<R: Rng + ?Sized>(
    theta: &[f64],
    n: usize,
    c: f64,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    if theta.len() != 4 {
        return Err(invalid("g_and_k", "expected (A, B, g, k)"));
    }
    if !(theta[1] > 0.0) {
        return Err(invalid("g_and_k", "B must be positive"));
    }
    if !(theta[3] > -0.5) {
        return Err(invalid("g_and_k", "k must exceed -0.5"));
    }
    Ok((0..n)
        .map(|_| gk_transform(StandardNormal.sample(rng), theta, c))
        .collect())
}

/// ARCH(1): `X_j = σ_j ε_j`, `σ_j² = α₀ + α₁ X_{j-1}²`.
///
/// `X_0` is drawn from `N(0, α₀ / (1 - α₁))` and the first `warmup` values
/// are discarded.
pub fn sim_arch1<R: Rng + ?Sized>(
    theta: &[f64],
    n: usize,
    warmup: usize,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    if theta.len() != 2 {
        return Err(invalid("arch1", "expected (alpha0, alpha1)"));
    }
    let (a0, a1) = (theta[0], theta[1]);
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(invalid("arch1", "alpha0 must be positive"));
    }
    if !(0.0..1.0).contains(&a1) {
        return Err(invalid("arch1", "alpha1 must lie in [0, 1)"));
    }
    let init =
        Normal::new(0.0, (a0 / (1.0 - a1)).sqrt()).map_err(|e| invalid("arch1", e.to_string()))?;
    let mut x = init.sample(rng);
    let mut out = Vec::with_capacity(n);
    for step in 0..(warmup + n) {
        let sigma = (a0 + a1 * x * x).sqrt();
        let eps: f64 = StandardNormal.sample(rng);
        x = sigma * eps;
        if step >= warmup {
            out.push(x);
        }
    }
    Ok(out)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        0.0
    } else {
        Poisson::new(mean)
            .expect("finite positive Poisson mean")
            .sample(rng)
    }
}

/// Boom-and-bust recruitment process with parameters `(r, κ, α, β)`.
///
/// Given `x`, the next value is `Poisson(x(1 + r))` when `x ≤ κ` and
/// `Binomial(x, α)` otherwise, plus independent `Poisson(β)` noise. The path
/// starts at `x0` and the first `burn` values are dropped.
pub fn sim_boombust<R: Rng + ?Sized>(
    theta: &[f64],
    n: usize,
    burn: usize,
    x0: u64,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    if theta.len() != 4 {
        return Err(invalid("boom_bust", "expected (r, kappa, alpha, beta)"));
    }
    let (r, kappa, alpha, beta) = (theta[0], theta[1], theta[2], theta[3]);
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid("boom_bust", "r must be nonnegative"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("boom_bust", "alpha must lie in [0, 1]"));
    }
    if !(beta >= 0.0 && beta.is_finite() && kappa.is_finite()) {
        return Err(invalid(
            "boom_bust",
            "beta must be nonnegative and kappa finite",
        ));
    }
    let mut x = x0;
    let mut out = Vec::with_capacity(n);
    for step in 0..(burn + n) {
        let base = if (x as f64) <= kappa {
            poisson(x as f64 * (1.0 + r), rng) as u64
        } else {
            Binomial::new(x, alpha).expect("valid binomial").sample(rng)
        };
        x = base + poisson(beta, rng) as u64;
        if step >= burn {
            out.push(x as f64);
        }
    }
    Ok(out)
}

/// Generalized Pareto draw with scale `sigma` and shape `xi`.
pub fn sample_gpd<R: Rng + ?Sized>(sigma: f64, xi: f64, rng: &mut R) -> f64 {
    // U in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    if xi.abs() < 1e-12 {
        -sigma * u.ln()
    } else {
        sigma / xi * (u.powf(-xi) - 1.0)
    }
}

/// Planar largest-diameter measurements from the elliptical inclusion model.
///
/// Geometry (an approximation of the sectioning law):
/// * the number of candidate inclusions in a unit-thickness block is
///   `Poisson(λ)`;
/// * each has largest principal diameter `V = v0 + GPD(σ, ξ)` and two further
///   diameters `V·U₁`, `V·U₂` with `U ~ U(0, 1)`;
/// * one of the three principal axes, chosen uniformly, is perpendicular to
///   the cutting plane, and the plane hits the inclusion with probability
///   `d_perp / V`;
/// * the plane cuts at a uniform relative offset `t ∈ (-1, 1)`, so the
///   section is an ellipse scaled by `√(1 - t²)` and the recorded value is its
///   major axis.
pub fn sim_stereo<R: Rng + ?Sized>(
    theta: &[f64],
    v0: f64,
    rng: &mut R,
) -> Result<Vec<f64>, ModelError> {
    if theta.len() != 3 {
        return Err(invalid("stereo", "expected (lambda, sigma, xi)"));
    }
    let (lambda, sigma, xi) = (theta[0], theta[1], theta[2]);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("stereo", "lambda must be positive"));
    }
    if !(sigma > 0.0 && sigma.is_finite() && xi.is_finite()) {
        return Err(invalid("stereo", "sigma must be positive"));
    }
    let count = poisson(lambda, rng) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v = v0 + sample_gpd(sigma, xi, rng);
        let diameters = [v, v * rng.random::<f64>(), v * rng.random::<f64>()];
        let perp = rng.random_range(0..3);
        if rng.random::<f64>() >= diameters[perp] / v {
            continue;
        }
        let in_plane = (0..3)
            .filter(|&a| a != perp)
            .map(|a| diameters[a])
            .fold(0.0, f64::max);
        let t: f64 = rng.random_range(-1.0..1.0);
        out.push(in_plane * (1.0 - t * t).sqrt());
    }
    Ok(out)
}

/// Erdős–Rényi graph on `nodes` vertices with edge probability `p`.
pub fn sim_er_graph<R: Rng + ?Sized>(
    p: f64,
    nodes: usize,
    rng: &mut R,
) -> Result<Graph, ModelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("er_graph", "edge probability must lie in [0, 1]"));
    }
    Ok(Graph::erdos_renyi(nodes, p, rng))
}
