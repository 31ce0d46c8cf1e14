//! Brute-force reference implementations shared by the integration tests.
//! None of them call into the library's solvers.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Whether the origin is interior to the convex hull of the rows, for one or
/// two columns. In two dimensions this holds iff the directions of the
/// nonzero rows leave no angular gap of `π` or more.
pub fn origin_interior(rows: &[Vec<f64>]) -> bool {
    match rows[0].len() {
        1 => {
            let lo = rows.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
            lo < 0.0 && hi > 0.0
        }
        2 => {
            let mut angles: Vec<f64> = rows
                .iter()
                .filter(|r| r[0] != 0.0 || r[1] != 0.0)
                .map(|r| r[1].atan2(r[0]))
                .collect();
            if angles.len() < 3 {
                return false;
            }
            angles.sort_by(f64::total_cmp);
            let mut max_gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
            for w in angles.windows(2) {
                max_gap = max_gap.max(w[1] - w[0]);
            }
            max_gap < PI - 1e-12
        }
        r => panic!("no hull oracle for {r} columns"),
    }
}

/// Feasibility of `Σ w_i h_i = 0` with `w` in the open simplex, by a small
/// phase-one simplex LP: maximize `t` subject to `Σ w_i h_i = 0`,
/// `Σ w_i = 1`, `w_i ≥ t`. Interior iff the optimum is positive.
pub fn origin_interior_lp(rows: &[Vec<f64>]) -> bool {
    // Substitute w_i = t + v_i with v_i ≥ 0, t free (split t = tp - tn):
    //   Σ v_i h_i + t Σ h_i = 0,  Σ v_i + m t = 1.
    let m = rows.len();
    let r = rows[0].len();
    let n_vars = m + 2;
    let mut a = vec![vec![0.0; n_vars]; r + 1];
    let mut b = vec![0.0; r + 1];
    for c in 0..r {
        let col_sum: f64 = rows.iter().map(|h| h[c]).sum();
        for i in 0..m {
            a[c][i] = rows[i][c];
        }
        a[c][m] = col_sum;
        a[c][m + 1] = -col_sum;
    }
    for i in 0..m {
        a[r][i] = 1.0;
    }
    a[r][m] = m as f64;
    a[r][m + 1] = -(m as f64);
    b[r] = 1.0;
    let mut c = vec![0.0; n_vars];
    c[m] = 1.0;
    c[m + 1] = -1.0;
    match simplex_max(&a, &b, &c) {
        LpResult::Optimal(v) => v > 1e-9,
        LpResult::Unbounded => true,
        LpResult::Infeasible => false,
    }
}

pub enum LpResult {
    Optimal(f64),
    Unbounded,
    Infeasible,
}

/// Maximizes `cᵀx` subject to `Ax = b`, `x ≥ 0` with a two-phase tableau
/// simplex and Bland's rule.
pub fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpResult {
    let rows = a.len();
    let n = c.len();
    // Columns: n originals, rows artificials, then the right-hand side.
    let width = n + rows + 1;
    let mut t = vec![vec![0.0; width]; rows];
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();
    let phase1: Vec<f64> = (0..n + rows)
        .map(|j| if j >= n { -1.0 } else { 0.0 })
        .collect();
    if !run_simplex(&mut t, &mut basis, &phase1, n + rows) {
        return LpResult::Unbounded;
    }
    let infeas: f64 = (0..rows)
        .filter(|&i| basis[i] >= n)
        .map(|i| t[i][width - 1])
        .sum();
    if infeas > 1e-9 {
        return LpResult::Infeasible;
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..rows {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
        }
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, rows));
    // Artificial columns may not re-enter.
    if !run_simplex(&mut t, &mut basis, &phase2, n) {
        return LpResult::Unbounded;
    }
    let value: f64 = (0..rows).map(|i| phase2[basis[i]] * t[i][width - 1]).sum();
    LpResult::Optimal(value)
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
}

/// Returns false when the objective is unbounded.
fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> bool {
    let width = t[0].len();
    loop {
        let reduced = |j: usize, t: &[Vec<f64>], basis: &[usize]| -> f64 {
            cost[j] - (0..t.len()).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>()
        };
        let Some(enter) =
            (0..allowed).find(|&j| !basis.contains(&j) && reduced(j, t, basis) > 1e-12)
        else {
            return true;
        };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..t.len() {
            if t[i][enter] > 1e-12 {
                let ratio = t[i][width - 1] / t[i][enter];
                if ratio < best - 1e-15
                    || (ratio <= best + 1e-15 && leave.is_some_and(|l: usize| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else { return false };
        pivot(t, leave, enter);
        basis[leave] = enter;
    }
}

/// `F(λ) = Σ log(1 + λᵀh_i)`, or `-∞` outside the domain.
fn dual_value(rows: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let mut total = 0.0;
    for h in rows {
        let z = 1.0 + h.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>();
        if z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += z.ln();
    }
    total
}

/// Maximizer of a concave function on `(lo, hi)` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    if fx >= f1.max(f2) {
        (x, fx)
    } else if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Interval of `λ₂` keeping `1 + λ₁h_{i1} + λ₂h_{i2} > 0` for every row.
fn second_coordinate_domain(rows: &[Vec<f64>], l1: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for h in rows {
        let base = 1.0 + l1 * h[0];
        if h[1] > 0.0 {
            lo = lo.max(-base / h[1]);
        } else if h[1] < 0.0 {
            hi = hi.min(-base / h[1]);
        } else if base <= 0.0 {
            return None;
        }
    }
    (lo < hi && lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

/// Interval of `λ₁` where the `λ₂` domain is nonempty, found by bisection
/// from `λ₁ = 0` (always inside).
fn first_coordinate_domain(rows: &[Vec<f64>]) -> (f64, f64) {
    let edge = |dir: f64| -> f64 {
        let (mut inside, mut outside) = (0.0, dir);
        while second_coordinate_domain(rows, outside).is_some() {
            inside = outside;
            outside *= 2.0;
            assert!(
                outside.abs() < 1e12,
                "dual domain unbounded; the instance is infeasible"
            );
        }
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if second_coordinate_domain(rows, mid).is_some() {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    (edge(-1.0), edge(1.0))
}

/// Mean log empirical-likelihood weight `-log m - max_λ F(λ)/m`, from a
/// golden-section search on the dual (nested for two columns). Only valid
/// for feasible instances with one or two columns.
pub fn el_mean_log_weight_oracle(rows: &[Vec<f64>]) -> f64 {
    let m = rows.len() as f64;
    let best = match rows[0].len() {
        1 => {
            let hi_h = rows.iter().map(|h| h[0]).fold(f64::NEG_INFINITY, f64::max);
            let lo_h = rows.iter().map(|h| h[0]).fold(f64::INFINITY, f64::min);
            golden_max(|l| dual_value(rows, &[l]), -1.0 / hi_h, -1.0 / lo_h).1
        }
        2 => {
            let profile = |l1: f64| -> f64 {
                match second_coordinate_domain(rows, l1) {
                    Some((lo, hi)) => golden_max(|l2| dual_value(rows, &[l1, l2]), lo, hi).1,
                    None => f64::NEG_INFINITY,
                }
            };
            let (lo, hi) = first_coordinate_domain(rows);
            golden_max(profile, lo, hi).1
        }
        r => panic!("no dual oracle for {r} columns"),
    };
    -m.ln() - best / m
}

/// Dense grid search over the dual for one column, on the bracket
/// `[-0.99/max h, 0.99/|min h|]`.
pub fn el_grid_oracle_1d(h: &[f64], points: usize) -> f64 {
    let m = h.len() as f64;
    let hi_h = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo_h = h.iter().copied().fold(f64::INFINITY, f64::min);
    let (a, b) = (-0.99 / hi_h, 0.99 / lo_h.abs());
    let rows: Vec<Vec<f64>> = h.iter().map(|&x| vec![x]).collect();
    let best = (0..=points)
        .map(|i| a + (b - a) * i as f64 / points as f64)
        .map(|l| dual_value(&rows, &[l]))
        .fold(f64::NEG_INFINITY, f64::max);
    -m.ln() - best / m
}

/// Least squares of `y` on the columns of `x` by modified Gram-Schmidt QR
/// and back substitution.
pub fn lstsq_qr(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let p = x[0].len();
    let mut q: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| x[i][j]).collect()).collect();
    let mut r = vec![vec![0.0; p]; p];
    for j in 0..p {
        for k in 0..j {
            let d: f64 = (0..n).map(|i| q[k][i] * q[j][i]).sum();
            r[k][j] = d;
            for i in 0..n {
                q[j][i] -= d * q[k][i];
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[j][j] = norm;
        for v in q[j].iter_mut() {
            *v /= norm;
        }
    }
    let qty: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| q[j][i] * y[i]).sum())
        .collect();
    let mut beta = vec![0.0; p];
    for j in (0..p).rev() {
        let s: f64 = ((j + 1)..p).map(|k| r[j][k] * beta[k]).sum();
        beta[j] = (qty[j] - s) / r[j][j];
    }
    beta
}

/// Standard normal CDF by Simpson integration of the density from 0.
pub fn normal_cdf_quadrature(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let mut s = f(0.0) + f(x);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    0.5 + s * h / 3.0
}

/// Mean and sd of a one-dimensional log density on `[lo, hi]` by the
/// trapezoid rule.
pub fn moments_by_quadrature(
    log_density: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> (f64, f64) {
    let h = (hi - lo) / points as f64;
    let xs: Vec<f64> = (0..=points).map(|i| lo + i as f64 * h).collect();
    let lp: Vec<f64> = xs.iter().map(|&x| log_density(x)).collect();
    let top = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lp
        .iter()
        .enumerate()
        .map(|(i, v)| (v - top).exp() * if i == 0 || i == points { 0.5 } else { 1.0 })
        .collect();
    let z: f64 = w.iter().sum();
    let mean = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / z;
    let var = xs
        .iter()
        .zip(&w)
        .map(|(x, w)| (x - mean).powi(2) * w)
        .sum::<f64>()
        / z;
    (mean, var.sqrt())
}
