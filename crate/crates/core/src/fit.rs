//! Levenberg-Marquardt least squares for small parametric models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::FitError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresFit {
    pub params: Vec<f64>,
    /// One-sigma parameter errors from the scaled covariance.
    pub errors: Vec<f64>,
    /// Sum of squared residuals.
    pub residual: f64,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 500;

fn sum_sq<F: Fn(f64, &[f64]) -> f64>(model: &F, xs: &[f64], ys: &[f64], p: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - model(x, p);
            r * r
        })
        .sum()
}

fn jacobian<F: Fn(f64, &[f64]) -> f64>(model: &F, xs: &[f64], p: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(xs.len(), p.len());
    let mut q = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(1e-3);
        q[k] = p[k] + h;
        let up: Vec<f64> = xs.iter().map(|&x| model(x, &q)).collect();
        q[k] = p[k] - h;
        for (row, &x) in xs.iter().enumerate() {
            j[(row, k)] = (up[row] - model(x, &q)) / (2.0 * h);
        }
        q[k] = p[k];
    }
    j
}

/// Minimizes `sum (y - model(x, p))^2` starting from `init`.
pub fn levenberg_marquardt<F>(model: F, xs: &[f64], ys: &[f64], init: &[f64]) -> Result<LeastSquaresFit, FitError>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let n = xs.len();
    let m = init.len();
    if n < m {
        return Err(FitError::TooFewPoints { needed: m, got: n });
    }
    let mut p = init.to_vec();
    let mut cost = sum_sq(&model, xs, ys, &p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let j = jacobian(&model, xs, &p);
        let r = DVector::from_iterator(n, xs.iter().zip(ys).map(|(&x, &y)| y - model(x, &p)));
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * r;

        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_cost = sum_sq(&model, xs, ys, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                let small_step = step
                    .iter()
                    .zip(&trial)
                    .all(|(s, t)| s.abs() <= 1e-10 * (t.abs() + 1e-10));
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < 1e-14 || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            converged = true;
            break;
        }
    }
    if !converged || !cost.is_finite() {
        return Err(FitError::NoConvergence {
            iterations,
            residual: cost,
        });
    }

    let j = jacobian(&model, xs, &p);
    let jtj = j.transpose() * &j;
    let dof = (n - m).max(1) as f64;
    let scale = cost / dof;
    let errors = match jtj.try_inverse() {
        Some(cov) => (0..m).map(|k| (cov[(k, k)] * scale).abs().sqrt()).collect(),
        None => vec![f64::NAN; m],
    };
    Ok(LeastSquaresFit {
        params: p,
        errors,
        residual: cost,
        iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    pub mu_error: f64,
    pub sigma: f64,
    pub sigma_error: f64,
    pub amplitude: f64,
    pub residual: f64,
}

pub fn gaussian(x: f64, amplitude: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    amplitude * (-0.5 * z * z).exp()
}

/// Unweighted least-squares fit of `amplitude * exp(-(x-mu)^2 / 2 sigma^2)` to binned counts.
pub fn fit_gaussian(centers: &[f64], counts: &[f64], init: (f64, f64, f64)) -> Result<GaussianFit, FitError> {
    if counts.iter().all(|&c| c == 0.0) {
        return Err(FitError::Empty);
    }
    let (a0, mu0, s0) = init;
    let fit = levenberg_marquardt(
        |x, p| gaussian(x, p[0], p[1], p[2]),
        centers,
        counts,
        &[a0, mu0, s0.abs().max(1e-3)],
    )?;
    Ok(GaussianFit {
        amplitude: fit.params[0],
        mu: fit.params[1],
        mu_error: fit.errors[1],
        sigma: fit.params[2].abs(),
        sigma_error: fit.errors[2],
        residual: fit.residual,
    })
}
