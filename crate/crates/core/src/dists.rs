//! Diagonal Gaussians, the two-component mixture prior and Bernoulli label
//! distributions, with the closed-form expectations the bounds are built from.
//!
//! Conventions: variances (not standard deviations) are stored; the mixture
//! component index equals the class label, and `pi` is the prior mass of
//! `y = 0`, so `1 - pi` is the prior default probability.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower clamp applied to class probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-7;
/// Floor added to every variance produced by a network head.
pub const VAR_FLOOR: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.len() != var.len() {
            return Err(Error::dim("DiagGaussian", mean.len(), var.len()));
        }
        if let Some(v) = var.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::contract(format!(
                "variance must be positive and finite, got {v}"
            )));
        }
        Ok(Self { mean, var })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `p(z) = pi N(comp_0) + (1 - pi) N(comp_1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPrior {
    pub pi: f64,
    pub components: [DiagGaussian; 2],
}

impl GmmPrior {
    pub fn new(pi: f64, components: [DiagGaussian; 2]) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::contract(format!(
                "mixture weight must lie in (0,1), got {pi}"
            )));
        }
        if components[0].dim() != components[1].dim() {
            return Err(Error::dim(
                "GmmPrior",
                components[0].dim(),
                components[1].dim(),
            ));
        }
        Ok(Self { pi, components })
    }

    pub fn label_prior(&self) -> BernoulliDist {
        BernoulliDist { p1: 1.0 - self.pi }
    }

    /// `log p(z)` of the mixture.
    pub fn logpdf(&self, z: &[f64]) -> Result<f64> {
        let a = self.pi.ln() + gauss_logpdf(&self.components[0], z)?;
        let b = (1.0 - self.pi).ln() + gauss_logpdf(&self.components[1], z)?;
        let m = a.max(b);
        Ok(m + ((a - m).exp() + (b - m).exp()).ln())
    }
}

/// Distribution over `y in {0, 1}` with `P(y = 1) = p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliDist {
    pub p1: f64,
}

impl BernoulliDist {
    pub fn new(p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::contract(format!(
                "probability must lie in [0,1], got {p1}"
            )));
        }
        Ok(Self { p1 })
    }

    pub fn prob(&self, y: usize) -> f64 {
        if y == 1 {
            self.p1
        } else {
            1.0 - self.p1
        }
    }
}

/// `ln(max(p, PROB_FLOOR))`; exactly zero at `p = 1`.
#[inline]
pub fn clamped_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Derivative of [`clamped_ln`].
#[inline]
pub fn clamped_ln_grad(p: f64) -> f64 {
    if p > PROB_FLOOR {
        1.0 / p
    } else {
        0.0
    }
}

fn same_dim(a: &DiagGaussian, b: &DiagGaussian, context: &'static str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::dim(context, a.dim(), b.dim()));
    }
    Ok(())
}

pub fn gauss_logpdf(g: &DiagGaussian, x: &[f64]) -> Result<f64> {
    if x.len() != g.dim() {
        return Err(Error::dim("gauss_logpdf", g.dim(), x.len()));
    }
    let mut s = 0.0;
    for ((&xi, &m), &v) in x.iter().zip(&g.mean).zip(&g.var) {
        if !(v > 0.0) {
            return Err(Error::contract(format!("nonpositive variance {v}")));
        }
        let d = xi - m;
        s += -0.5 * (LN_2PI + v.ln()) - d * d / (2.0 * v);
    }
    Ok(s)
}

/// `mean + sqrt(var) * eps`.
pub fn reparam_sample(g: &DiagGaussian, eps: &[f64]) -> Result<Vec<f64>> {
    if eps.len() != g.dim() {
        return Err(Error::dim("reparam_sample", g.dim(), eps.len()));
    }
    Ok(g.mean
        .iter()
        .zip(&g.var)
        .zip(eps)
        .map(|((m, v), e)| m + v.sqrt() * e)
        .collect())
}

/// `E_q[log p]` for diagonal Gaussians `p`, `q`, in closed form.
pub fn gauss_cross_entropy(p: &DiagGaussian, q: &DiagGaussian) -> Result<f64> {
    same_dim(p, q, "gauss_cross_entropy")?;
    let mut s = 0.0;
    for i in 0..p.dim() {
        let (m1, v1) = (p.mean[i], p.var[i]);
        let (m2, v2) = (q.mean[i], q.var[i]);
        s += -0.5 * (2.0 * PI * v1).ln() - v2 / (2.0 * v1) - (m2 - m1).powi(2) / (2.0 * v1);
    }
    Ok(s)
}

/// Differential entropy `-E_g[log g]`.
pub fn gauss_entropy(g: &DiagGaussian) -> f64 {
    g.var
        .iter()
        .map(|v| 0.5 * ((2.0 * PI * v).ln() + 1.0))
        .sum()
}

/// `KL(q || p)` assembled from the entropy and cross-entropy integrals.
pub fn kl_diag_gauss(q: &DiagGaussian, p: &DiagGaussian) -> Result<f64> {
    same_dim(q, p, "kl_diag_gauss")?;
    Ok(-gauss_entropy(q) - gauss_cross_entropy(p, q)?)
}

/// `KL(q || N(0, I))`.
pub fn kl_gauss_std(q: &DiagGaussian) -> f64 {
    q.mean
        .iter()
        .zip(&q.var)
        .map(|(m, v)| 0.5 * (v + m * m - 1.0 - v.ln()))
        .sum()
}

/// `sum_y q(y) [log prior(y) - log q(y)]`, i.e. `-KL(q || prior)`.
pub fn bernoulli_entropy_terms(post: BernoulliDist, prior: BernoulliDist) -> f64 {
    (0..2)
        .map(|y| {
            let q = post.prob(y);
            if q == 0.0 {
                0.0
            } else {
                q * (clamped_ln(prior.prob(y)) - clamped_ln(q))
            }
        })
        .sum()
}

/// Per-dimension partial derivatives of `KL(q || p)` for diagonal Gaussians.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KlPartials {
    pub d_mean_q: f64,
    pub d_var_q: f64,
    pub d_mean_p: f64,
    pub d_var_p: f64,
}

pub(crate) fn kl_partials(mq: f64, vq: f64, mp: f64, vp: f64) -> KlPartials {
    let d = mq - mp;
    KlPartials {
        d_mean_q: d / vp,
        d_var_q: 0.5 * (1.0 / vp - 1.0 / vq),
        d_mean_p: -d / vp,
        d_var_p: 0.5 * (1.0 / vp - (vq + d * d) / (vp * vp)),
    }
}

/// Value of one dimension of `KL(q || p)`.
#[inline]
pub(crate) fn kl_term(mq: f64, vq: f64, mp: f64, vp: f64) -> f64 {
    let d = mq - mp;
    0.5 * ((vp / vq).ln() + (vq + d * d) / vp - 1.0)
}

/// One dimension of `log N(x | m, v)` and its partials in `m` and `v`.
#[inline]
pub(crate) fn logpdf_term(x: f64, m: f64, v: f64) -> (f64, f64, f64) {
    let d = x - m;
    let val = -0.5 * (LN_2PI + v.ln()) - d * d / (2.0 * v);
    (val, d / v, 0.5 * (d * d / (v * v) - 1.0 / v))
}
