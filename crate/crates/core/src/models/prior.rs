use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use super::ModelError;

/// One coordinate of a product prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Beta { a: f64, b: f64 },
}

/// Map between a coordinate and the real line used by the sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    Identity,
    /// `θ = lo + (hi - lo) σ(u)`.
    Logit {
        lo: f64,
        hi: f64,
    },
}

impl Transform {
    pub fn to_unconstrained(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Logit { lo, hi } => {
                let p = (x - lo) / (hi - lo);
                (p / (1.0 - p)).ln()
            }
        }
    }

    pub fn from_unconstrained(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => u,
            Transform::Logit { lo, hi } => lo + (hi - lo) * sigmoid(u),
        }
    }

    /// `log |dθ/du|` at `u`.
    pub fn log_jacobian(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => 0.0,
            Transform::Logit { lo, hi } => {
                // log σ(u) + log(1 - σ(u)), written to avoid overflow.
                (hi - lo).ln() - softplus(-u) - softplus(u)
            }
        }
    }

    /// `|dθ/du|` at `u`.
    pub fn derivative(&self, u: f64) -> f64 {
        self.log_jacobian(u).exp()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

impl Marginal {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            Marginal::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Marginal::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Marginal::Beta { a, b } => a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidPrior(format!("{self:?}")))
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match *self {
            Marginal::Uniform { lo, hi } => x > lo && x < hi,
            Marginal::Normal { .. } => x.is_finite(),
            Marginal::Beta { .. } => x > 0.0 && x < 1.0,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Marginal::Uniform { lo, hi } => -(hi - lo).ln(),
            Marginal::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Marginal::Beta { a, b } => {
                (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => loop {
                let x = rng.random_range(lo..hi);
                if x > lo {
                    return x;
                }
            },
            Marginal::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("validated prior").sample(rng)
            }
            Marginal::Beta { a, b } => loop {
                let x = Beta::new(a, b).expect("validated prior").sample(rng);
                if x > 0.0 && x < 1.0 {
                    return x;
                }
            },
        }
    }

    pub fn median(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Normal { mean, .. } => mean,
            Marginal::Beta { a, b } => {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if beta_reg(a, b, mid) < 0.5 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Width used to scale the initial random-walk proposal: the support
    /// width for bounded marginals, the central 99% interval otherwise.
    pub fn range(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => hi - lo,
            Marginal::Normal { sd, .. } => 2.0 * 2.575_829_303_548_901 * sd,
            Marginal::Beta { .. } => 1.0,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Marginal::Beta { .. } => (0.0, 1.0),
        }
    }

    pub fn transform(&self) -> Transform {
        match *self {
            Marginal::Uniform { lo, hi } => Transform::Logit { lo, hi },
            Marginal::Normal { .. } => Transform::Identity,
            Marginal::Beta { .. } => Transform::Logit { lo: 0.0, hi: 1.0 },
        }
    }
}

/// Product prior over the parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prior {
    marginals: Vec<Marginal>,
}

impl Prior {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self, ModelError> {
        if marginals.is_empty() {
            return Err(ModelError::InvalidPrior("prior has no coordinates".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(Self { marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && self
                .marginals
                .iter()
                .zip(theta)
                .all(|(m, &x)| m.in_support(x))
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.dim() {
            return f64::NEG_INFINITY;
        }
        self.marginals
            .iter()
            .zip(theta)
            .map(|(m, &x)| m.log_density(x))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }

    pub fn median(&self) -> Vec<f64> {
        self.marginals.iter().map(Marginal::median).collect()
    }

    pub fn ranges(&self) -> Vec<f64> {
        self.marginals.iter().map(Marginal::range).collect()
    }

    pub fn support_box(&self) -> Vec<(f64, f64)> {
        self.marginals.iter().map(Marginal::support).collect()
    }

    pub fn transforms(&self) -> Vec<Transform> {
        self.marginals.iter().map(Marginal::transform).collect()
    }
}
