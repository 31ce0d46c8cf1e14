//! Empirical likelihood on simulated constraint vectors.
//!
//! Given constraint rows `h_i = s(X_i) - s(X_o)`, find simplex weights `w`
//! maximizing `Σ log(m w_i)` subject to `Σ w_i h_i = 0`. The problem is solved
//! through its dual: the weights are `w_i = 1 / (m (1 + λᵀh_i))` where `λ`
//! minimizes the convex function `-Σ log⋆(1 + λᵀh_i)`. `log⋆` agrees with
//! `log` above `1/m` and continues it by its second-order Taylor expansion
//! below, so the dual is finite everywhere and Newton's method can start at
//! `λ = 0`.
//!
//! The optimum only exists when the origin lies in the interior of the convex
//! hull of the rows. Points on the boundary or outside are reported as
//! infeasible with a mean log-weight of `-∞`.

use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElError {
    #[error("constraint matrix contains a non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("constraint matrix must have at least one row and one column")]
    Empty,
    #[error("constraint row {row} has length {got}, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("dual Newton iteration did not converge after {iterations} iterations (residual {residual_norm:e})")]
    MaxIterExceeded {
        iterations: usize,
        residual_norm: f64,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
}

/// The `m × r` matrix of constraint vectors `h_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMatrix<T> {
    m: usize,
    r: usize,
    data: Vec<T>,
}

impl<T: Scalar> ConstraintMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, ElError> {
        let r = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || r == 0 {
            return Err(ElError::Empty);
        }
        let mut data = Vec::with_capacity(rows.len() * r);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != r {
                return Err(ElError::Ragged {
                    row: i,
                    got: row.len(),
                    expected: r,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), r, data)
    }

    /// Rows `s_i - observed` for replicate summaries `s_i`.
    pub fn from_summaries(replicates: &[Vec<T>], observed: &[T]) -> Result<Self, ElError> {
        let r = observed.len();
        if replicates.is_empty() || r == 0 {
            return Err(ElError::Empty);
        }
        let mut data = Vec::with_capacity(replicates.len() * r);
        for (i, s) in replicates.iter().enumerate() {
            if s.len() != r {
                return Err(ElError::Ragged {
                    row: i,
                    got: s.len(),
                    expected: r,
                });
            }
            data.extend(s.iter().zip(observed).map(|(&a, &b)| a - b));
        }
        Self::from_row_major(replicates.len(), r, data)
    }

    pub fn from_row_major(m: usize, r: usize, data: Vec<T>) -> Result<Self, ElError> {
        if m == 0 || r == 0 {
            return Err(ElError::Empty);
        }
        if data.len() != m * r {
            return Err(ElError::Ragged {
                row: data.len() / r,
                got: data.len() % r,
                expected: r,
            });
        }
        if let Some(idx) = data.iter().position(|x| !x.is_finite()) {
            return Err(ElError::NonFinite {
                row: idx / r,
                col: idx % r,
            });
        }
        Ok(Self { m, r, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.r..(i + 1) * self.r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.r)
    }

    /// Returns a copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            m: self.m,
            r: self.r,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElConfig<T> {
    /// Bound on the norm of the dual gradient `Σ h_i / (1 + λᵀh_i)`, measured
    /// after each column of `H` has been divided by its largest magnitude.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for ElConfig<T> {
    fn default() -> Self {
        let tol = T::c(1e-8).max(T::epsilon().sqrt() * T::c(10.0));
        Self { tol, max_iter: 50 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElSolution<T> {
    pub weights: Vec<T>,
    /// Dual vector in the units of the original constraint matrix.
    pub lambda: Vec<T>,
    /// `(1/m) Σ log w_i`, or `-∞` when infeasible.
    pub mean_log_weight: T,
    pub feasible: bool,
    pub iterations: usize,
    pub residual_norm: T,
}

impl<T: Scalar> ElSolution<T> {
    fn infeasible(m: usize, r: usize, iterations: usize, residual_norm: T) -> Self {
        Self {
            weights: vec![T::zero(); m],
            lambda: vec![T::zero(); r],
            mean_log_weight: T::neg_infinity(),
            feasible: false,
            iterations,
            residual_norm,
        }
    }
}

/// Second-order continuation of `log` below `eps`, with first and second
/// derivatives.
#[inline]
fn log_star<T: Scalar>(z: T, eps: T) -> (T, T, T) {
    if z >= eps {
        (z.ln(), z.recip(), -(z * z).recip())
    } else {
        let ratio = z / eps;
        let value = eps.ln() - T::c(1.5) + T::c(2.0) * ratio - ratio * ratio / T::c(2.0);
        let d1 = T::c(2.0) / eps - z / (eps * eps);
        let d2 = -(eps * eps).recip();
        (value, d1, d2)
    }
}

struct Dual<'a, T> {
    rows: &'a [T],
    m: usize,
    r: usize,
    eps: T,
}

impl<T: Scalar> Dual<'_, T> {
    fn z(&self, lambda: &[T], i: usize) -> T {
        T::one() + dot(lambda, &self.rows[i * self.r..(i + 1) * self.r])
    }

    fn objective(&self, lambda: &[T]) -> T {
        (0..self.m)
            .map(|i| -log_star(self.z(lambda, i), self.eps).0)
            .sum()
    }

    /// Objective, gradient and Hessian of `-Σ log⋆(1 + λᵀh_i)`.
    fn derivatives(&self, lambda: &[T]) -> (T, Vec<T>, Matrix<T>) {
        let r = self.r;
        let mut value = T::zero();
        let mut grad = vec![T::zero(); r];
        let mut hess = Matrix::zeros(r, r);
        for i in 0..self.m {
            let h = &self.rows[i * r..(i + 1) * r];
            let (v, d1, d2) = log_star(T::one() + dot(lambda, h), self.eps);
            value -= v;
            for a in 0..r {
                grad[a] -= d1 * h[a];
                for b in a..r {
                    hess[(a, b)] -= d2 * h[a] * h[b];
                }
            }
        }
        for a in 0..r {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        (value, grad, hess)
    }
}

/// Solves the empirical-likelihood weight problem for the rows of `h`.
///
/// Returns `Err(MaxIterExceeded)` when Newton's method fails to reach the
/// tolerance; callers treat that as an infeasible point.
pub fn solve_el<T: Scalar>(
    h: &ConstraintMatrix<T>,
    config: &ElConfig<T>,
) -> Result<ElSolution<T>, ElError> {
    if !(config.tol > T::zero()) {
        return Err(ElError::InvalidConfig("tol must be positive"));
    }
    if config.max_iter == 0 {
        return Err(ElError::InvalidConfig("max_iter must be at least 1"));
    }
    let (m, r) = (h.m, h.r);

    // Column scaling leaves the weights unchanged and rescales λ.
    let mut scale = vec![T::zero(); r];
    for row in h.rows() {
        for (s, &x) in scale.iter_mut().zip(row) {
            *s = s.max(x.abs());
        }
    }
    if scale.iter().any(|&s| s == T::zero()) {
        return Ok(ElSolution::infeasible(m, r, 0, T::zero()));
    }
    // Each coordinate must take both signs for the origin to be interior.
    for c in 0..r {
        let (lo, hi) = h
            .rows()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), row| {
                (lo.min(row[c]), hi.max(row[c]))
            });
        if !(lo < T::zero() && hi > T::zero()) {
            return Ok(ElSolution::infeasible(m, r, 0, T::zero()));
        }
    }
    let scaled: Vec<T> = h
        .data
        .iter()
        .enumerate()
        .map(|(idx, &x)| x / scale[idx % r])
        .collect();
    let mf = T::from_count(m);
    let dual = Dual {
        rows: &scaled,
        m,
        r,
        eps: mf.recip(),
    };

    let mut lambda = vec![T::zero(); r];
    let mut iterations = 0;
    let mut residual = T::infinity();
    let mut converged = false;
    while iterations < config.max_iter {
        let (value, grad, mut hess) = dual.derivatives(&lambda);
        residual = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
        if residual <= config.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let neg_grad: Vec<T> = grad.iter().map(|&g| -g).collect();
        let step = match hess.cholesky() {
            Some(ch) => ch.solve(&neg_grad),
            None => {
                let ridge = hess.trace().abs().max(T::one()) * T::epsilon().sqrt();
                hess.add_diagonal(ridge);
                match hess.cholesky() {
                    Some(ch) => ch.solve(&neg_grad),
                    // Rows do not span R^r: no interior.
                    None => return Ok(ElSolution::infeasible(m, r, iterations, residual)),
                }
            }
        };
        let slope = dot(&grad, &step);
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = lambda.iter().zip(&step).map(|(&l, &s)| l + t * s).collect();
            let f = dual.objective(&trial);
            if f.is_finite() && f <= value + T::c(1e-4) * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= T::c(0.5);
        }
        match accepted {
            Some(next) => lambda = next,
            None => break,
        }

        // If every row has a nonnegative inner product with λ, the half-space
        // {x : λᵀx ≥ 0} contains the hull and the origin cannot be interior.
        let min_proj = (0..m)
            .map(|i| dot(&lambda, &scaled[i * r..(i + 1) * r]))
            .fold(T::infinity(), T::min);
        if min_proj >= T::zero() && lambda.iter().any(|&l| l != T::zero()) {
            return Ok(ElSolution::infeasible(m, r, iterations, residual));
        }
    }
    if !converged {
        return Err(ElError::MaxIterExceeded {
            iterations,
            residual_norm: residual.to_f64_lossy(),
        });
    }

    // One undamped polishing step: Newton is quadratic here, so this takes
    // the residual from `tol` to rounding level.
    {
        let (_, grad, hess) = dual.derivatives(&lambda);
        if let Some(ch) = hess.cholesky() {
            let neg_grad: Vec<T> = grad.iter().map(|&g| -g).collect();
            let step = ch.solve(&neg_grad);
            let trial: Vec<T> = lambda.iter().zip(&step).map(|(&l, &s)| l + s).collect();
            let (_, g2, _) = dual.derivatives(&trial);
            let r2 = g2.iter().map(|&g| g * g).sum::<T>().sqrt();
            if r2 < residual {
                lambda = trial;
                residual = r2;
            }
        }
    }

    let half_eps = (T::c(2.0) * mf).recip();
    let z: Vec<T> = (0..m).map(|i| dual.z(&lambda, i)).collect();
    if z.iter().any(|&zi| !(zi > half_eps)) {
        return Ok(ElSolution::infeasible(m, r, iterations, residual));
    }
    let raw: Vec<T> = z.iter().map(|&zi| (mf * zi).recip()).collect();
    let total: T = raw.iter().copied().sum();
    // At an exact stationary point Σ 1/z_i = m; a large gap means the
    // gradient vanished only asymptotically.
    if (total - T::one()).abs() > T::c(1e-6).max(config.tol.sqrt()) {
        return Ok(ElSolution::infeasible(m, r, iterations, residual));
    }
    let weights: Vec<T> = raw.iter().map(|&w| w / total).collect();
    let mean_log_weight = weights.iter().map(|w| w.ln()).sum::<T>() / mf;
    let lambda = lambda.iter().zip(&scale).map(|(&l, &s)| l / s).collect();
    Ok(ElSolution {
        weights,
        lambda,
        mean_log_weight,
        feasible: true,
        iterations,
        residual_norm: residual,
    })
}

/// Whether the origin is an interior point of the convex hull of the rows.
///
/// Exact for one column; for more columns the verdict comes from the dual
/// solver (a non-converged solve counts as not interior).
pub fn feasibility_check<T: Scalar>(h: &ConstraintMatrix<T>) -> bool {
    if h.r == 1 {
        let (lo, hi) = h
            .data
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        return lo < T::zero() && hi > T::zero();
    }
    solve_el(h, &ElConfig::default()).is_ok_and(|s| s.feasible)
}
