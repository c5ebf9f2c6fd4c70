//! Small bounded Levenberg-Marquardt fitter.
//!
//! The model family here is smooth and at most four-dimensional, so a
//! dense normal-equation solve with a numerically differenced Jacobian is
//! plenty. Parameters live in finite boxes; proposed steps are clamped to
//! the box before evaluation. Uncertainties come from the quadratic
//! approximation at the optimum, `cov = (J^T J)^{-1}` on weighted
//! residuals.

use crate::error::{Error, Result};

pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Bounds { lower, upper }
    }

    fn clamp(&self, params: &mut [f64]) {
        for (p, (lo, hi)) in params.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *p = p.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// 1-sigma uncertainties from the curvature at the optimum.
    pub sigmas: Vec<f64>,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub iterations: usize,
    /// Weighted residuals at the optimum.
    pub residuals: Vec<f64>,
}

const MAX_ITERATIONS: usize = 200;

/// Minimize the sum of squared weighted residuals produced by `f`.
///
/// `f(params, out)` must fill `out` (fixed length) with residuals.
pub fn fit<F>(f: F, init: &[f64], bounds: &Bounds, n_residuals: usize) -> Result<FitOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let p = init.len();
    assert!(n_residuals > p, "need more residuals than parameters");
    let mut params = init.to_vec();
    bounds.clamp(&mut params);

    let mut residuals = vec![0.0; n_residuals];
    f(&params, &mut residuals);
    let mut chi2 = norm_sq(&residuals);

    let mut lambda = 1e-3;
    let mut jac = vec![vec![0.0; p]; n_residuals];
    let mut trial_res = vec![0.0; n_residuals];
    let mut stalled = 0usize;

    for iteration in 1..=MAX_ITERATIONS {
        numeric_jacobian(&f, &params, bounds, &residuals, &mut jac, &mut trial_res);

        // normal equations: (A + lambda diag(A)) step = -g
        let mut a = vec![vec![0.0; p]; p];
        let mut g = vec![0.0; p];
        for row in 0..n_residuals {
            for i in 0..p {
                g[i] += jac[row][i] * residuals[row];
                for j in i..p {
                    a[i][j] += jac[row][i] * jac[row][j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                a[i][j] = a[j][i];
            }
        }

        let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm < 1e-14 * chi2.max(1.0) {
            return Ok(finish(f, params, bounds, chi2, iteration, n_residuals, p));
        }

        let mut improved = false;
        for _ in 0..16 {
            let mut damped = a.clone();
            for i in 0..p {
                damped[i][i] += lambda * a[i][i].max(1e-30);
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = solve(damped, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            bounds.clamp(&mut trial);
            f(&trial, &mut trial_res);
            let trial_chi2 = norm_sq(&trial_res);
            if trial_chi2.is_finite() && trial_chi2 < chi2 {
                let rel_drop = (chi2 - trial_chi2) / chi2.max(1e-300);
                let step_size: f64 = params
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                params = trial;
                residuals.copy_from_slice(&trial_res);
                chi2 = trial_chi2;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_drop < 1e-10 || step_size == 0.0 {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                break;
            }
            lambda *= 10.0;
        }

        if !improved {
            stalled += 1;
        }
        if stalled >= 2 {
            return Ok(finish(f, params, bounds, chi2, iteration, n_residuals, p));
        }
    }

    Err(Error::NonConvergence { iterations: MAX_ITERATIONS, chi2 })
}

fn finish<F>(
    f: F,
    params: Vec<f64>,
    bounds: &Bounds,
    chi2: f64,
    iterations: usize,
    n_residuals: usize,
    p: usize,
) -> FitOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut residuals = vec![0.0; n_residuals];
    f(&params, &mut residuals);
    let mut jac = vec![vec![0.0; p]; n_residuals];
    let mut scratch = vec![0.0; n_residuals];
    numeric_jacobian(&f, &params, bounds, &residuals, &mut jac, &mut scratch);

    let mut a = vec![vec![0.0; p]; p];
    for row in 0..n_residuals {
        for i in 0..p {
            for j in i..p {
                a[i][j] += jac[row][i] * jac[row][j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    let sigmas = match invert(a) {
        Some(cov) => (0..p).map(|i| cov[i][i].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; p],
    };
    let dof = (n_residuals - p).max(1) as f64;
    FitOutcome {
        params,
        sigmas,
        chi2,
        chi2_reduced: chi2 / dof,
        iterations,
        residuals,
    }
}

fn numeric_jacobian<F>(
    f: &F,
    params: &[f64],
    bounds: &Bounds,
    base: &[f64],
    jac: &mut [Vec<f64>],
    scratch: &mut [f64],
) where
    F: Fn(&[f64], &mut [f64]),
{
    let p = params.len();
    let mut shifted = params.to_vec();
    for j in 0..p {
        let span = (bounds.upper[j] - bounds.lower[j]).abs();
        let h = 1e-6 * params[j].abs().max(1e-3 * span).max(1e-300);
        // step inward when pinned at the upper bound
        let h = if params[j] + h > bounds.upper[j] { -h } else { h };
        shifted[j] = params[j] + h;
        f(&shifted, scratch);
        for (row, jac_row) in jac.iter_mut().enumerate() {
            jac_row[j] = (scratch[row] - base[row]) / h;
        }
        shifted[j] = params[j];
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Gaussian elimination with partial pivoting; None if singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn invert(a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve(a.clone(), e)?;
        for row in 0..n {
            out[row][col] = x[row];
        }
    }
    Some(out)
}
