use serde::{Deserialize, Serialize};

use super::ProbabilityModel;
use crate::nn::{cholesky_solve, sigmoid, Matrix};
use crate::{Error, Result};

/// Gradient tolerance per unit of total row weight.
const GRAD_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedRow {
    pub features: Vec<f64>,
    pub label: u8,
    pub weight: f64,
}

/// Logistic regression `P(y = 1 | x) = sigmoid(b0 + b . x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    /// Infinity norm of the gradient at the returned coefficients.
    pub gradient_norm: f64,
    pub converged: bool,
}

impl LogisticModel {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.coefficients[0]
            + row
                .iter()
                .zip(&self.coefficients[1..])
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }
}

impl ProbabilityModel for LogisticModel {
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() + 1 != self.coefficients.len() {
            return Err(Error::dim(
                "logistic features",
                self.coefficients.len() - 1,
                x.cols(),
            ));
        }
        Ok(x.iter_rows()
            .map(|r| sigmoid(self.linear_predictor(r)))
            .collect())
    }
}

/// Fits on explicit weighted rows; see [`fit_logistic`].
pub fn logreg_fit(rows: &[WeightedRow], l2: f64) -> Result<LogisticModel> {
    let d = rows.first().map_or(0, |r| r.features.len());
    let mut data = Vec::with_capacity(rows.len() * d);
    for r in rows {
        if r.features.len() != d {
            return Err(Error::dim("weighted row", d, r.features.len()));
        }
        data.extend_from_slice(&r.features);
    }
    let x = Matrix::from_vec(rows.len(), d, data)?;
    let y: Vec<u8> = rows.iter().map(|r| r.label).collect();
    let w: Vec<f64> = rows.iter().map(|r| r.weight).collect();
    fit_logistic(&x, &y, &w, l2)
}

fn objective(x: &Matrix, y: &[u8], w: &[f64], l2: f64, beta: &[f64]) -> f64 {
    let mut j = 0.5 * l2 * beta[1..].iter().map(|b| b * b).sum::<f64>();
    for (i, r) in x.iter_rows().enumerate() {
        let eta = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        // -log-likelihood of one row, evaluated stably
        let s = if y[i] == 1 { -eta } else { eta };
        j += w[i] * crate::nn::softplus(s);
    }
    j
}

/// Maximizes `sum_i w_i log-lik_i - l2 |b|^2 / 2` (intercept unpenalized) by
/// damped Newton steps, stopping when the gradient infinity norm drops below
/// 1e-12 per unit of total weight or after 100 iterations.
///
/// With `l2 = 0`, perfectly separable data has no finite optimum and yields
/// [`Error::FitDivergence`].
pub fn fit_logistic(x: &Matrix, y: &[u8], w: &[f64], l2: f64) -> Result<LogisticModel> {
    let n = x.rows();
    let p = x.cols() + 1;
    if y.len() != n || w.len() != n {
        return Err(Error::dim("logistic rows", n, y.len().min(w.len())));
    }
    if n < 2 {
        return Err(Error::contract(
            "logistic regression needs at least two rows",
        ));
    }
    if !(l2 >= 0.0) || w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::contract(
            "weights and l2 must be finite and non-negative",
        ));
    }
    let w1: f64 = (0..n).filter(|&i| y[i] == 1).map(|i| w[i]).sum();
    let w0: f64 = (0..n).filter(|&i| y[i] == 0).map(|i| w[i]).sum();
    if !(w1 > 0.0 && w0 > 0.0) {
        return Err(Error::contract("both classes need positive total weight"));
    }
    let mut beta = vec![0.0; p];
    beta[0] = (w1 / w0).ln();
    let mut current = objective(x, y, w, l2, &beta);
    let tol = GRAD_TOL * (w1 + w0).max(1.0);
    let mut grad_norm = f64::INFINITY;
    for iter in 0..=MAX_ITER {
        let mut g = vec![0.0; p];
        let mut h = Matrix::zeros(p, p);
        let mut separated = l2 == 0.0;
        for (i, r) in x.iter_rows().enumerate() {
            if w[i] == 0.0 {
                continue;
            }
            let eta = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            if (if y[i] == 1 { eta } else { -eta }) <= 0.0 {
                separated = false;
            }
            let mu = sigmoid(eta);
            let resid = w[i] * (mu - f64::from(y[i]));
            let curv = w[i] * mu * (1.0 - mu);
            g[0] += resid;
            for a in 0..p - 1 {
                g[a + 1] += resid * r[a];
            }
            let hd = h.data_mut();
            for a in 0..p {
                let xa = if a == 0 { 1.0 } else { r[a - 1] };
                for b in 0..=a {
                    let xb = if b == 0 { 1.0 } else { r[b - 1] };
                    hd[a * p + b] += curv * xa * xb;
                }
            }
        }
        for a in 1..p {
            g[a] += l2 * beta[a];
            h.data_mut()[a * p + a] += l2;
        }
        for a in 0..p {
            for b in 0..a {
                let v = h.get(a, b);
                h.set(b, a, v);
            }
        }
        if separated {
            return Err(Error::FitDivergence(
                "classes are perfectly separated; use l2 > 0".into(),
            ));
        }
        grad_norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grad_norm < tol {
            return Ok(LogisticModel {
                coefficients: beta,
                iterations: iter,
                gradient_norm: grad_norm,
                converged: true,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        let step = match cholesky_solve(&h, &g) {
            Ok(s) => s,
            Err(_) => {
                return Err(Error::FitDivergence(
                    "singular Hessian (separation or collinear features); use l2 > 0".into(),
                ))
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            let val = objective(x, y, w, l2, &cand);
            // Near the optimum the decrease is below rounding of the sum.
            if val <= current + 64.0 * f64::EPSILON * current.abs() {
                beta = cand;
                current = val;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if beta.iter().any(|b| !b.is_finite() || b.abs() > 1e8) {
            return Err(Error::FitDivergence(
                "coefficients diverge (separated classes); use l2 > 0".into(),
            ));
        }
    }
    log::warn!("logistic fit stopped with gradient norm {grad_norm:e}");
    Ok(LogisticModel {
        coefficients: beta,
        iterations: MAX_ITER,
        gradient_norm: grad_norm,
        converged: false,
    })
}
