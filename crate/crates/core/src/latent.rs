//! Shared machinery of both generative models: the mixture-prior network,
//! the `q(z|x,y) -> z -> p(x|z[,y])` branch, and their backward passes.

use crate::dists::{kl_partials, kl_term, logpdf_term, VAR_FLOOR};
use crate::nn::{ForwardPass, HeadActivation, HeadSpec, Matrix, MlpParams};
use crate::{Error, Result};

pub(crate) const MEAN_HEAD: usize = 0;
pub(crate) const VAR_HEAD: usize = 1;

/// Heads of every Gaussian-parameterizing network: mean and variance.
pub(crate) fn gaussian_heads(dim: usize) -> Vec<HeadSpec> {
    vec![
        HeadSpec::new("mu", dim, HeadActivation::Linear),
        HeadSpec::new("var", dim, HeadActivation::ExpLinear),
    ]
}

pub(crate) fn softmax_head() -> Vec<HeadSpec> {
    vec![HeadSpec::new("prob", 2, HeadActivation::Softmax)]
}

pub(crate) fn dims_with(input: usize, hidden: &[usize]) -> Vec<usize> {
    std::iter::once(input)
        .chain(hidden.iter().copied())
        .collect()
}

/// Appends a one-hot label code (or zeros when `labels` is `None`).
pub(crate) fn with_onehot(x: &Matrix, labels: Option<&[usize]>) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), x.cols() + 2);
    for i in 0..x.rows() {
        let row = out.row_mut(i);
        row[..x.cols()].copy_from_slice(x.row(i));
        if let Some(l) = labels {
            row[x.cols() + l[i]] = 1.0;
        }
    }
    out
}

/// Variance read from an exp-linear head, with the floor applied.
pub(crate) fn floored(var_head: &Matrix) -> Matrix {
    let mut v = var_head.clone();
    v.data_mut().iter_mut().for_each(|x| *x += VAR_FLOOR);
    v
}

/// Both mixture components, evaluated by running the prior network on the
/// two one-hot codes (row `k` is component `k`).
pub(crate) struct Components {
    pub mu: Matrix,
    pub var: Matrix,
    pass: ForwardPass,
}

impl Components {
    pub fn eval(gmm: &MlpParams) -> Result<Self> {
        let codes = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]])?;
        let pass = gmm.forward(&codes)?;
        Ok(Self {
            mu: pass.head(MEAN_HEAD).clone(),
            var: floored(pass.head(VAR_HEAD)),
            pass,
        })
    }

    pub fn backward(&self, gmm: &MlpParams, d_mu: &Matrix, d_var: &Matrix) -> Result<MlpParams> {
        Ok(gmm
            .backward(&self.pass.tape, &[Some(d_mu), Some(d_var)])?
            .params)
    }
}

pub(crate) enum LatentPrior<'a> {
    Mixture(&'a Components),
    Standard,
}

/// Rows of one branch: features, the label used for the prior component and
/// the conditioning inputs, and `samples` reparameterization draws per row.
pub(crate) struct BranchInput<'a> {
    pub x: &'a Matrix,
    pub labels: &'a [usize],
    /// Row `i * samples + l` holds draw `l` for row `i`.
    pub eps: &'a Matrix,
    pub samples: usize,
    pub encoder_label: bool,
    pub decoder_label: bool,
}

pub(crate) struct BranchPass {
    enc: ForwardPass,
    mu_q: Matrix,
    var_q: Matrix,
    dec: ForwardPass,
    mu_x: Matrix,
    var_x: Matrix,
    pub kl: Vec<f64>,
    pub entropy: Vec<f64>,
    pub cross_entropy: Vec<f64>,
    pub recon: Vec<f64>,
    pub recon_se: Vec<f64>,
}

pub(crate) struct BranchGrads {
    pub encoder: MlpParams,
    pub decoder: MlpParams,
    /// Gradient into the two mixture components, `2 x dim_z`.
    pub d_mu_p: Matrix,
    pub d_var_p: Matrix,
}

impl BranchPass {
    pub fn forward(
        encoder: &MlpParams,
        decoder: &MlpParams,
        prior: &LatentPrior<'_>,
        input: &BranchInput<'_>,
    ) -> Result<Self> {
        let b = input.x.rows();
        let l = input.samples;
        if input.labels.len() != b {
            return Err(Error::dim("branch labels", b, input.labels.len()));
        }
        if input.labels.iter().any(|&y| y > 1) {
            return Err(Error::contract("labels must be 0 or 1"));
        }
        if l == 0 || input.eps.rows() != b * l {
            return Err(Error::dim(
                "branch noise rows",
                b * l.max(1),
                input.eps.rows(),
            ));
        }
        let enc_in = with_onehot(input.x, input.encoder_label.then_some(input.labels));
        let enc = encoder.forward(&enc_in)?;
        let mu_q = enc.head(MEAN_HEAD).clone();
        let var_q = floored(enc.head(VAR_HEAD));
        let dz = mu_q.cols();
        if input.eps.cols() != dz {
            return Err(Error::dim("branch noise cols", dz, input.eps.cols()));
        }

        let mut z = Matrix::zeros(b * l, dz);
        for i in 0..b {
            for s in 0..l {
                let r = i * l + s;
                let e = input.eps.row(r);
                let zr = z.row_mut(r);
                for j in 0..dz {
                    zr[j] = mu_q.get(i, j) + var_q.get(i, j).sqrt() * e[j];
                }
            }
        }
        let dec_in = if input.decoder_label {
            let rep: Vec<usize> = (0..b * l).map(|r| input.labels[r / l]).collect();
            with_onehot(&z, Some(&rep))
        } else {
            z
        };
        let dec = decoder.forward(&dec_in)?;
        let mu_x = dec.head(MEAN_HEAD).clone();
        let var_x = floored(dec.head(VAR_HEAD));
        if mu_x.cols() != input.x.cols() {
            return Err(Error::dim("decoder output", input.x.cols(), mu_x.cols()));
        }

        let mut kl = vec![0.0; b];
        let mut entropy = vec![0.0; b];
        let mut cross_entropy = vec![0.0; b];
        let mut recon = vec![0.0; b];
        let mut recon_se = vec![0.0; b];
        let half_ln_2pi_e = 0.5 * (1.0 + (2.0 * std::f64::consts::PI).ln());
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        for i in 0..b {
            let (pm, pv): (Vec<f64>, Vec<f64>) = match prior {
                LatentPrior::Mixture(c) => (
                    c.mu.row(input.labels[i]).to_vec(),
                    c.var.row(input.labels[i]).to_vec(),
                ),
                LatentPrior::Standard => (vec![0.0; dz], vec![1.0; dz]),
            };
            for j in 0..dz {
                let (mq, vq) = (mu_q.get(i, j), var_q.get(i, j));
                kl[i] += kl_term(mq, vq, pm[j], pv[j]);
                entropy[i] += half_ln_2pi_e + 0.5 * vq.ln();
                cross_entropy[i] +=
                    -half_ln_2pi - 0.5 * pv[j].ln() - (vq + (mq - pm[j]).powi(2)) / (2.0 * pv[j]);
            }
            let x = input.x.row(i);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for s in 0..l {
                let r = i * l + s;
                let v: f64 = (0..x.len())
                    .map(|j| logpdf_term(x[j], mu_x.get(r, j), var_x.get(r, j)).0)
                    .sum();
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / l as f64;
            recon[i] = mean;
            if l > 1 {
                let var = ((sum_sq - l as f64 * mean * mean) / (l as f64 - 1.0)).max(0.0);
                recon_se[i] = (var / l as f64).sqrt();
            }
            if !kl[i].is_finite() {
                return Err(Error::NonFinite {
                    term: format!("latent KL (row {i})"),
                });
            }
            if !recon[i].is_finite() {
                return Err(Error::NonFinite {
                    term: format!("reconstruction (row {i})"),
                });
            }
        }
        Ok(Self {
            enc,
            mu_q,
            var_q,
            dec,
            mu_x,
            var_x,
            kl,
            entropy,
            cross_entropy,
            recon,
            recon_se,
        })
    }

    /// Gradient of `sum_i coef[i] * (recon[i] - kl[i])`.
    pub fn backward(
        &self,
        encoder: &MlpParams,
        decoder: &MlpParams,
        prior: &LatentPrior<'_>,
        input: &BranchInput<'_>,
        coef: &[f64],
    ) -> Result<BranchGrads> {
        let b = input.x.rows();
        let l = input.samples;
        let dz = self.mu_q.cols();
        let dx = input.x.cols();
        let inv_l = 1.0 / l as f64;

        let mut d_mu_x = Matrix::zeros(b * l, dx);
        let mut d_var_x = Matrix::zeros(b * l, dx);
        for i in 0..b {
            let c = coef[i] * inv_l;
            if c == 0.0 {
                continue;
            }
            let x = input.x.row(i);
            for s in 0..l {
                let r = i * l + s;
                for j in 0..dx {
                    let (_, dm, dv) = logpdf_term(x[j], self.mu_x.get(r, j), self.var_x.get(r, j));
                    d_mu_x.set(r, j, c * dm);
                    d_var_x.set(r, j, c * dv);
                }
            }
        }
        let dec_g = decoder.backward(&self.dec.tape, &[Some(&d_mu_x), Some(&d_var_x)])?;

        let mut d_mu_q = Matrix::zeros(b, dz);
        let mut d_var_q = Matrix::zeros(b, dz);
        let mut d_mu_p = Matrix::zeros(2, dz);
        let mut d_var_p = Matrix::zeros(2, dz);
        for i in 0..b {
            let c = coef[i];
            for s in 0..l {
                let r = i * l + s;
                let dzr = &dec_g.input.row(r)[..dz];
                let e = input.eps.row(r);
                for j in 0..dz {
                    d_mu_q.data_mut()[i * dz + j] += dzr[j];
                    d_var_q.data_mut()[i * dz + j] +=
                        dzr[j] * e[j] / (2.0 * self.var_q.get(i, j).sqrt());
                }
            }
            if c == 0.0 {
                continue;
            }
            let y = input.labels[i];
            for j in 0..dz {
                let (mq, vq) = (self.mu_q.get(i, j), self.var_q.get(i, j));
                let (mp, vp) = match prior {
                    LatentPrior::Mixture(comp) => (comp.mu.get(y, j), comp.var.get(y, j)),
                    LatentPrior::Standard => (0.0, 1.0),
                };
                let kp = kl_partials(mq, vq, mp, vp);
                d_mu_q.data_mut()[i * dz + j] -= c * kp.d_mean_q;
                d_var_q.data_mut()[i * dz + j] -= c * kp.d_var_q;
                if let LatentPrior::Mixture(_) = prior {
                    d_mu_p.data_mut()[y * dz + j] -= c * kp.d_mean_p;
                    d_var_p.data_mut()[y * dz + j] -= c * kp.d_var_p;
                }
            }
        }
        let enc_g = encoder.backward(&self.enc.tape, &[Some(&d_mu_q), Some(&d_var_q)])?;
        Ok(BranchGrads {
            encoder: enc_g.params,
            decoder: dec_g.params,
            d_mu_p,
            d_var_p,
        })
    }
}

/// `acc += other`, elementwise over matching architectures.
pub(crate) fn accumulate(acc: &mut MlpParams, other: &MlpParams) {
    for (a, b) in acc.values_mut().zip(other.values()) {
        *a += *b;
    }
}

pub(crate) fn accumulate_matrix(acc: &mut Matrix, other: &Matrix) {
    for (a, b) in acc.data_mut().iter_mut().zip(other.data()) {
        *a += *b;
    }
}
