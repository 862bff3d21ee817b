//! Dense linear algebra, feed-forward networks with hand-written
//! backpropagation, Glorot initialization and the Adam optimizer.

mod adam;
mod linalg;
mod matrix;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use linalg::cholesky_solve;
pub use matrix::Matrix;
pub use mlp::{
    glorot_bound, Dense, ForwardPass, GradientTape, HeadActivation, HeadSpec, HiddenActivation,
    MlpGradients, MlpParams,
};

/// `log(1 + exp(x))` without overflow for large `|x|`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    (-x.abs()).exp().ln_1p() + x.max(0.0)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax of `logits` written into `out`, shifted by the max logit.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}
