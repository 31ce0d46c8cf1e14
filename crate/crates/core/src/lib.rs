//! Likelihood-free Bayesian inference with an empirical-likelihood
//! pseudo-posterior.
//!
//! At a parameter `θ` the model is simulated `m` times. The constraint rows
//! `h_i = s(X_i) - s(X_o)` enter an empirical-likelihood problem whose mean
//! log weight, plus a nearest-neighbour estimate of the entropy of the
//! simulated summaries, gives the log-likelihood estimate. An adaptive
//! Metropolis sampler draws from the resulting posterior.
//!
//! The numerical kernels ([`el`], [`entropy`], [`linalg`]) are generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix them to `f64`.

pub mod baselines;
pub mod el;
pub mod entropy;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod posterior;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod special;

pub use scalar::Scalar;

pub type ConstraintMatrix64 = el::ConstraintMatrix<f64>;
pub type ElSolution64 = el::ElSolution<f64>;
pub type ElConfig64 = el::ElConfig<f64>;
pub type EntropyEstimate64 = entropy::EntropyEstimate<f64>;
pub type NeighborTable64 = entropy::NeighborTable<f64>;
pub type WeightVectorNu64 = entropy::WeightVectorNu<f64>;
pub type Matrix64 = linalg::Matrix<f64>;

pub type ConstraintMatrix32 = el::ConstraintMatrix<f32>;
pub type ElSolution32 = el::ElSolution<f32>;
pub type EntropyEstimate32 = entropy::EntropyEstimate<f32>;
