//! Model 2: the mixture prior of Model 1 plus an auxiliary latent variable.
//!
//! Inference is `q(a|x) q(y|x,a) q(z|x,y)`; the classifier sees the features
//! together with a draw of `a`, and the decoder is conditioned on `(z, y)`.
//! The prior on `a` is `N(0, I)` and only enters through a closed-form KL.
//!
//! ```text
//! -L_accept(x, y) = -KL_z(y) + log p(y) - KL_a + 1/L sum_l log N(x | z_l, y)
//! -L_reject(x)    = 1/L_a sum_la sum_y q(y|x,a_la) [-KL_z(y) + log p(y)
//!                       + 1/L sum_l log N(x | z_l, y) - log q(y|x,a_la)] - KL_a
//! ```

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, UnlabeledDataset};
use crate::dists::{clamped_ln, clamped_ln_grad, kl_partials, kl_term, DiagGaussian, GmmPrior};
use crate::latent::{
    accumulate, accumulate_matrix, dims_with, floored, gaussian_heads, softmax_head, BranchGrads,
    BranchInput, BranchPass, Components, LatentPrior, MEAN_HEAD, VAR_HEAD,
};
use crate::model1::{alpha, check_common, enumerate};
pub use crate::model1::{ElboBreakdown, ObjectiveValue, Trained};
use crate::nn::{AdamConfig, AdamState, ForwardPass, Matrix, MlpParams};
use crate::rng::{derive_seed, seeded, standard_normals, Rng};
use crate::schedule::run_epochs;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model2Arch {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub gmm_hidden: Vec<usize>,
    pub aux_hidden: Vec<usize>,
    pub classifier_hidden: Vec<usize>,
    pub latent_dim: usize,
    pub aux_dim: usize,
}

impl Default for Model2Arch {
    fn default() -> Self {
        Self {
            encoder_hidden: vec![10, 40, 10],
            decoder_hidden: vec![10, 40, 10],
            gmm_hidden: vec![10],
            aux_hidden: vec![10, 40],
            classifier_hidden: vec![130],
            latent_dim: 50,
            aux_dim: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig2 {
    pub learning_rate: f64,
    pub beta: f64,
    /// Draws of `z` per row.
    pub samples: usize,
    /// Draws of `a` per unlabeled row.
    pub aux_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs of the bound alone (classifier weight zero) before training.
    pub pretrain_epochs: usize,
    pub prior_pi: f64,
    pub alternating: bool,
    /// Auxiliary draws averaged by [`predict_proba2`] at evaluation time.
    pub predict_samples: usize,
    pub arch: Model2Arch,
}

impl Default for TrainConfig2 {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            beta: 0.008,
            samples: 1,
            aux_samples: 1,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            pretrain_epochs: 10,
            prior_pi: 0.5,
            alternating: false,
            predict_samples: 100,
            arch: Model2Arch::default(),
        }
    }
}

impl TrainConfig2 {
    pub fn validate(&self) -> Result<()> {
        check_common(
            self.learning_rate,
            self.beta,
            self.samples,
            self.batch_size,
            self.prior_pi,
        )?;
        if self.aux_samples == 0 || self.predict_samples == 0 {
            return Err(Error::contract("auxiliary sample counts must be positive"));
        }
        if self.arch.latent_dim == 0 || self.arch.aux_dim == 0 {
            return Err(Error::contract("latent_dim and aux_dim must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model2Params {
    pub prior_pi: f64,
    pub gmm_net: MlpParams,
    pub decoder_net: MlpParams,
    pub encoder_z_net: MlpParams,
    pub encoder_a_net: MlpParams,
    pub classifier_net: MlpParams,
}

impl Model2Params {
    pub fn init(x_dim: usize, arch: &Model2Arch, prior_pi: f64, rng: &mut Rng) -> Result<Self> {
        let (dz, da) = (arch.latent_dim, arch.aux_dim);
        if dz == 0 || da == 0 || x_dim == 0 {
            return Err(Error::contract(
                "feature, latent and auxiliary dims must be positive",
            ));
        }
        let p = Self {
            prior_pi,
            gmm_net: MlpParams::glorot(&dims_with(2, &arch.gmm_hidden), &gaussian_heads(dz), rng)?,
            decoder_net: MlpParams::glorot(
                &dims_with(dz + 2, &arch.decoder_hidden),
                &gaussian_heads(x_dim),
                rng,
            )?,
            encoder_z_net: MlpParams::glorot(
                &dims_with(x_dim + 2, &arch.encoder_hidden),
                &gaussian_heads(dz),
                rng,
            )?,
            encoder_a_net: MlpParams::glorot(
                &dims_with(x_dim, &arch.aux_hidden),
                &gaussian_heads(da),
                rng,
            )?,
            classifier_net: MlpParams::glorot(
                &dims_with(x_dim + da, &arch.classifier_hidden),
                &softmax_head(),
                rng,
            )?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn x_dim(&self) -> usize {
        self.encoder_a_net.input_dim()
    }

    pub fn z_dim(&self) -> usize {
        self.gmm_net.head_specs()[0].dim
    }

    pub fn a_dim(&self) -> usize {
        self.encoder_a_net.head_specs()[0].dim
    }

    pub fn label_prior(&self) -> [f64; 2] {
        [self.prior_pi, 1.0 - self.prior_pi]
    }

    pub fn gmm_prior(&self) -> Result<GmmPrior> {
        let c = Components::eval(&self.gmm_net)?;
        let comp = |k: usize| DiagGaussian::new(c.mu.row(k).to_vec(), c.var.row(k).to_vec());
        GmmPrior::new(self.prior_pi, [comp(0)?, comp(1)?])
    }

    /// `q(a|x)` for every row: (means, floored variances).
    pub fn aux_posterior(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        let pass = self.encoder_a_net.forward(x)?;
        Ok((pass.head(MEAN_HEAD).clone(), floored(pass.head(VAR_HEAD))))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_pi > 0.0 && self.prior_pi < 1.0) {
            return Err(Error::contract("prior_pi must lie in (0, 1)"));
        }
        for n in self.nets() {
            n.validate()?;
        }
        let (dx, dz, da) = (self.x_dim(), self.z_dim(), self.a_dim());
        let check = |ctx: &'static str, expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::dim(ctx, expected, actual))
            }
        };
        check("gmm input", 2, self.gmm_net.input_dim())?;
        check("encoder_z input", dx + 2, self.encoder_z_net.input_dim())?;
        check(
            "encoder_z output",
            dz,
            self.encoder_z_net.head_specs()[0].dim,
        )?;
        check("decoder input", dz + 2, self.decoder_net.input_dim())?;
        check("decoder output", dx, self.decoder_net.head_specs()[0].dim)?;
        check("classifier input", dx + da, self.classifier_net.input_dim())?;
        check(
            "classifier heads",
            2,
            self.classifier_net.head_specs()[0].dim,
        )
    }

    /// Networks in a fixed order: gmm, decoder, encoder_z, encoder_a, classifier.
    pub fn nets(&self) -> [&MlpParams; 5] {
        [
            &self.gmm_net,
            &self.decoder_net,
            &self.encoder_z_net,
            &self.encoder_a_net,
            &self.classifier_net,
        ]
    }

    pub fn nets_mut(&mut self) -> [&mut MlpParams; 5] {
        [
            &mut self.gmm_net,
            &mut self.decoder_net,
            &mut self.encoder_z_net,
            &mut self.encoder_a_net,
            &mut self.classifier_net,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.nets().iter().map(|n| n.num_params()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.nets()
            .iter()
            .flat_map(|n| n.values().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dim("flat parameters", self.num_params(), flat.len()));
        }
        let mut it = flat.iter();
        for n in self.nets_mut() {
            n.values_mut().for_each(|v| *v = *it.next().unwrap());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Model2Grads {
    pub gmm_net: MlpParams,
    pub decoder_net: MlpParams,
    pub encoder_z_net: MlpParams,
    pub encoder_a_net: MlpParams,
    pub classifier_net: MlpParams,
    pub component_mean: Matrix,
    pub component_var: Matrix,
}

impl Model2Grads {
    fn zeros(p: &Model2Params) -> Self {
        Self {
            gmm_net: p.gmm_net.zeros_like(),
            decoder_net: p.decoder_net.zeros_like(),
            encoder_z_net: p.encoder_z_net.zeros_like(),
            encoder_a_net: p.encoder_a_net.zeros_like(),
            classifier_net: p.classifier_net.zeros_like(),
            component_mean: Matrix::zeros(2, p.z_dim()),
            component_var: Matrix::zeros(2, p.z_dim()),
        }
    }

    pub fn nets(&self) -> [&MlpParams; 5] {
        [
            &self.gmm_net,
            &self.decoder_net,
            &self.encoder_z_net,
            &self.encoder_a_net,
            &self.classifier_net,
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.nets()
            .iter()
            .flat_map(|n| n.values().copied())
            .collect()
    }

    fn add_branch(&mut self, g: &BranchGrads) {
        accumulate(&mut self.encoder_z_net, &g.encoder);
        accumulate(&mut self.decoder_net, &g.decoder);
        accumulate_matrix(&mut self.component_mean, &g.d_mu_p);
        accumulate_matrix(&mut self.component_var, &g.d_var_p);
    }
}

/// Standard-normal draws for one objective evaluation.
///
/// `labeled_z`/`unlabeled_z` hold `samples` rows per data row (shared by
/// both label branches); `labeled_a` one row per labeled row and
/// `unlabeled_a` `aux_samples` rows per unlabeled row.
#[derive(Debug, Clone)]
pub struct Noise2 {
    pub labeled_z: Matrix,
    pub labeled_a: Matrix,
    pub unlabeled_z: Matrix,
    pub unlabeled_a: Matrix,
    pub samples: usize,
    pub aux_samples: usize,
}

impl Noise2 {
    pub fn sample(
        rng: &mut Rng,
        n_labeled: usize,
        n_unlabeled: usize,
        samples: usize,
        aux_samples: usize,
        z_dim: usize,
        a_dim: usize,
    ) -> Self {
        let draw = |rng: &mut Rng, rows: usize, cols: usize| {
            Matrix::from_vec(rows, cols, standard_normals(rng, rows * cols))
                .expect("shape by construction")
        };
        Self {
            labeled_z: draw(rng, n_labeled * samples, z_dim),
            labeled_a: draw(rng, n_labeled, a_dim),
            unlabeled_z: draw(rng, n_unlabeled * samples, z_dim),
            unlabeled_a: draw(rng, n_unlabeled * aux_samples, a_dim),
            samples,
            aux_samples,
        }
    }
}

fn labels_usize(labels: &[u8]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|&y| {
            if y <= 1 {
                Ok(y as usize)
            } else {
                Err(Error::contract("labels must be 0 or 1"))
            }
        })
        .collect()
}

fn branch<'a>(
    x: &'a Matrix,
    labels: &'a [usize],
    eps: &'a Matrix,
    samples: usize,
) -> BranchInput<'a> {
    BranchInput {
        x,
        labels,
        eps,
        samples,
        encoder_label: true,
        decoder_label: true,
    }
}

/// `q(a|x)` pass with `reps` reparameterized draws per row.
struct AuxPass {
    pass: ForwardPass,
    mu: Matrix,
    var: Matrix,
    a: Matrix,
    kl: Vec<f64>,
    reps: usize,
}

impl AuxPass {
    fn forward(net: &MlpParams, x: &Matrix, eps: &Matrix, reps: usize) -> Result<Self> {
        let pass = net.forward(x)?;
        let mu = pass.head(MEAN_HEAD).clone();
        let var = floored(pass.head(VAR_HEAD));
        let (n, da) = (x.rows(), mu.cols());
        if eps.rows() != n * reps || eps.cols() != da {
            return Err(Error::dim("auxiliary noise rows", n * reps, eps.rows()));
        }
        let mut a = Matrix::zeros(n * reps, da);
        let mut kl = vec![0.0; n];
        for i in 0..n {
            for j in 0..da {
                kl[i] += kl_term(mu.get(i, j), var.get(i, j), 0.0, 1.0);
            }
            for s in 0..reps {
                let r = i * reps + s;
                for j in 0..da {
                    a.set(r, j, mu.get(i, j) + var.get(i, j).sqrt() * eps.get(r, j));
                }
            }
            if !kl[i].is_finite() {
                return Err(Error::NonFinite {
                    term: format!("auxiliary KL (row {i})"),
                });
            }
        }
        Ok(Self {
            pass,
            mu,
            var,
            a,
            kl,
            reps,
        })
    }

    /// Classifier input `[x | a]`, one row per draw.
    fn classifier_input(&self, x: &Matrix) -> Result<Matrix> {
        let idx: Vec<usize> = (0..x.rows() * self.reps).map(|r| r / self.reps).collect();
        x.select_rows(&idx).hstack(&self.a)
    }

    /// Backward through the draws (`d_a`, one row per draw) and through
    /// `kl_coef[i] * KL_a(i)`.
    fn backward(
        &self,
        net: &MlpParams,
        d_a: Option<&Matrix>,
        eps: &Matrix,
        kl_coef: &[f64],
    ) -> Result<MlpParams> {
        let (n, da) = (self.mu.rows(), self.mu.cols());
        let mut d_mu = Matrix::zeros(n, da);
        let mut d_var = Matrix::zeros(n, da);
        for i in 0..n {
            for j in 0..da {
                let (m, v) = (self.mu.get(i, j), self.var.get(i, j));
                let kp = kl_partials(m, v, 0.0, 1.0);
                let mut gm = kl_coef[i] * kp.d_mean_q;
                let mut gv = kl_coef[i] * kp.d_var_q;
                if let Some(d_a) = d_a {
                    for s in 0..self.reps {
                        let r = i * self.reps + s;
                        gm += d_a.get(r, j);
                        gv += d_a.get(r, j) * eps.get(r, j) / (2.0 * v.sqrt());
                    }
                }
                d_mu.set(i, j, gm);
                d_var.set(i, j, gv);
            }
        }
        Ok(net
            .backward(&self.pass.tape, &[Some(&d_mu), Some(&d_var)])?
            .params)
    }
}

fn branch_breakdown(pass: &BranchPass, i: usize, log_prior: f64, aux_kl: f64) -> ElboBreakdown {
    ElboBreakdown {
        kl_to_prior: -pass.kl[i],
        aux_kl: -aux_kl,
        reconstruction: pass.recon[i],
        log_prior_label: log_prior,
        latent_entropy: pass.entropy[i],
        latent_cross_entropy: pass.cross_entropy[i],
        reconstruction_se: pass.recon_se[i],
        ..Default::default()
    }
    .finish()
}

fn aux_kl_closed_form(params: &Model2Params, x: &Matrix) -> Result<Vec<f64>> {
    let (mu, var) = params.aux_posterior(x)?;
    Ok((0..x.rows())
        .map(|i| {
            (0..mu.cols())
                .map(|j| kl_term(mu.get(i, j), var.get(i, j), 0.0, 1.0))
                .sum()
        })
        .collect())
}

/// Supervised bounds for a batch; the auxiliary KL is in closed form.
pub fn elbo_accept2_batch(
    params: &Model2Params,
    x: &Matrix,
    labels: &[u8],
    eps_z: &Matrix,
    samples: usize,
) -> Result<Vec<ElboBreakdown>> {
    let labels = labels_usize(labels)?;
    let comps = Components::eval(&params.gmm_net)?;
    let prior = LatentPrior::Mixture(&comps);
    let pass = BranchPass::forward(
        &params.encoder_z_net,
        &params.decoder_net,
        &prior,
        &branch(x, &labels, eps_z, samples),
    )?;
    let kl_a = aux_kl_closed_form(params, x)?;
    let lp = params.label_prior();
    Ok((0..x.rows())
        .map(|i| branch_breakdown(&pass, i, lp[labels[i]].ln(), kl_a[i]))
        .collect())
}

/// Unsupervised bounds for a batch: `eps_z` holds `samples` rows per data
/// row and `eps_a` holds `aux_samples` rows per data row.
pub fn elbo_reject2_batch(
    params: &Model2Params,
    x: &Matrix,
    eps_z: &Matrix,
    samples: usize,
    eps_a: &Matrix,
    aux_samples: usize,
) -> Result<Vec<ElboBreakdown>> {
    let n = x.rows();
    let b0 = elbo_accept2_batch(params, x, &vec![0; n], eps_z, samples)?;
    let b1 = elbo_accept2_batch(params, x, &vec![1; n], eps_z, samples)?;
    let aux = AuxPass::forward(&params.encoder_a_net, x, eps_a, aux_samples)?;
    let probs = params.classifier_net.forward(&aux.classifier_input(x)?)?;
    let w = probs.head(0);
    let inv = 1.0 / aux_samples as f64;
    Ok((0..n)
        .map(|i| {
            let mut out = ElboBreakdown::default();
            for s in 0..aux_samples {
                let r = i * aux_samples + s;
                let e = enumerate(&[b0[i], b1[i]], [w.get(r, 0), w.get(r, 1)]);
                out.kl_to_prior += inv * e.kl_to_prior;
                out.aux_kl += inv * e.aux_kl;
                out.reconstruction += inv * e.reconstruction;
                out.log_prior_label += inv * e.log_prior_label;
                out.classifier_term += inv * e.classifier_term;
                out.latent_entropy += inv * e.latent_entropy;
                out.latent_cross_entropy += inv * e.latent_cross_entropy;
                out.reconstruction_se += inv * e.reconstruction_se;
            }
            out.finish()
        })
        .collect())
}

/// `-L_accept(x, y)` for one row; `eps_z` is `L x z_dim`.
pub fn elbo_accept2(
    params: &Model2Params,
    x: &[f64],
    y: u8,
    eps_z: &Matrix,
) -> Result<ElboBreakdown> {
    let xm = Matrix::row_vector(x);
    Ok(elbo_accept2_batch(params, &xm, &[y], eps_z, eps_z.rows())?[0])
}

/// `-L_reject(x)` for one row; `eps_a` is `L_a x a_dim`.
pub fn elbo_reject2(
    params: &Model2Params,
    x: &[f64],
    eps_z: &Matrix,
    eps_a: &Matrix,
) -> Result<ElboBreakdown> {
    let xm = Matrix::row_vector(x);
    Ok(elbo_reject2_batch(params, &xm, eps_z, eps_z.rows(), eps_a, eps_a.rows())?[0])
}

/// Loss and gradients of one training step, mirroring
/// [`objective1`](crate::model1::objective1). The labeled classifier term
/// uses one draw of `a` per row.
pub fn objective2(
    params: &Model2Params,
    labeled_x: &Matrix,
    labels: &[u8],
    unlabeled_x: &Matrix,
    alpha: f64,
    noise: &Noise2,
) -> Result<(ObjectiveValue, Model2Grads)> {
    if labeled_x.rows() == 0 {
        return Err(Error::contract(
            "objective2 needs a non-empty labeled batch",
        ));
    }
    objective_parts(params, labeled_x, labels, unlabeled_x, alpha, noise)
}

fn objective_parts(
    params: &Model2Params,
    labeled_x: &Matrix,
    labels: &[u8],
    unlabeled_x: &Matrix,
    alpha: f64,
    noise: &Noise2,
) -> Result<(ObjectiveValue, Model2Grads)> {
    let labels = labels_usize(labels)?;
    if labels.len() != labeled_x.rows() {
        return Err(Error::dim("labels", labeled_x.rows(), labels.len()));
    }
    let comps = Components::eval(&params.gmm_net)?;
    let prior = LatentPrior::Mixture(&comps);
    let log_prior = params.label_prior().map(f64::ln);
    let mut grads = Model2Grads::zeros(params);
    let mut value = ObjectiveValue::default();
    let l = noise.samples;
    let dx = params.x_dim();

    let bl = labeled_x.rows();
    if bl > 0 {
        let inv = 1.0 / bl as f64;
        let input = branch(labeled_x, &labels, &noise.labeled_z, l);
        let pass = BranchPass::forward(&params.encoder_z_net, &params.decoder_net, &prior, &input)?;
        let aux = AuxPass::forward(&params.encoder_a_net, labeled_x, &noise.labeled_a, 1)?;
        let cls = params
            .classifier_net
            .forward(&aux.classifier_input(labeled_x)?)?;
        let probs = cls.head(0);
        let mut d_probs = Matrix::zeros(bl, 2);
        for i in 0..bl {
            let y = labels[i];
            let p = probs.get(i, y);
            value.supervised += (pass.kl[i] + aux.kl[i] - log_prior[y] - pass.recon[i]) * inv;
            value.cross_entropy -= clamped_ln(p) * inv;
            d_probs.set(i, y, -alpha * inv * clamped_ln_grad(p));
        }
        let g = pass.backward(
            &params.encoder_z_net,
            &params.decoder_net,
            &prior,
            &input,
            &vec![-inv; bl],
        )?;
        grads.add_branch(&g);
        let cg = params
            .classifier_net
            .backward(&cls.tape, &[Some(&d_probs)])?;
        accumulate(&mut grads.classifier_net, &cg.params);
        let (_, d_a) = cg.input.split_cols(dx);
        let ga = aux.backward(
            &params.encoder_a_net,
            Some(&d_a),
            &noise.labeled_a,
            &vec![inv; bl],
        )?;
        accumulate(&mut grads.encoder_a_net, &ga);
    }

    let bu = unlabeled_x.rows();
    if bu > 0 {
        let inv = 1.0 / bu as f64;
        let la = noise.aux_samples;
        let inv_la = 1.0 / la as f64;
        let aux = AuxPass::forward(&params.encoder_a_net, unlabeled_x, &noise.unlabeled_a, la)?;
        let cls = params
            .classifier_net
            .forward(&aux.classifier_input(unlabeled_x)?)?;
        let w = cls.head(0);
        let mut d_w = Matrix::zeros(bu * la, 2);
        for y in 0..2 {
            let ys = vec![y; bu];
            let input = branch(unlabeled_x, &ys, &noise.unlabeled_z, l);
            let pass =
                BranchPass::forward(&params.encoder_z_net, &params.decoder_net, &prior, &input)?;
            let mut coef = vec![0.0; bu];
            for j in 0..bu {
                let a = -pass.kl[j] + log_prior[y] + pass.recon[j];
                for s in 0..la {
                    let r = j * la + s;
                    let wy = w.get(r, y);
                    value.unsupervised -= wy * (a - clamped_ln(wy)) * inv * inv_la;
                    coef[j] -= wy * inv * inv_la;
                    d_w.set(
                        r,
                        y,
                        -(a - clamped_ln(wy) - wy * clamped_ln_grad(wy)) * inv * inv_la,
                    );
                }
            }
            let g = pass.backward(
                &params.encoder_z_net,
                &params.decoder_net,
                &prior,
                &input,
                &coef,
            )?;
            grads.add_branch(&g);
        }
        for j in 0..bu {
            value.unsupervised += aux.kl[j] * inv;
        }
        let cg = params.classifier_net.backward(&cls.tape, &[Some(&d_w)])?;
        accumulate(&mut grads.classifier_net, &cg.params);
        let (_, d_a) = cg.input.split_cols(dx);
        let ga = aux.backward(
            &params.encoder_a_net,
            Some(&d_a),
            &noise.unlabeled_a,
            &vec![inv; bu],
        )?;
        accumulate(&mut grads.encoder_a_net, &ga);
    }

    value.loss = value.supervised + alpha * value.cross_entropy + value.unsupervised;
    if !value.loss.is_finite() {
        return Err(Error::NonFinite {
            term: "objective2 loss".into(),
        });
    }
    grads.gmm_net = comps.backward(&params.gmm_net, &grads.component_mean, &grads.component_var)?;
    Ok((value, grads))
}

#[allow(clippy::too_many_arguments)]
fn run_phase(
    params: &mut Model2Params,
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    config: &TrainConfig2,
    epochs: usize,
    alpha: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Ok(Vec::new());
    }
    let (n, m) = (labeled.len(), unlabeled.len());
    let (dz, da) = (params.z_dim(), params.a_dim());
    let mut adam = AdamState::for_nets(AdamConfig::with_lr(config.learning_rate), &params.nets())?;
    run_epochs(
        epochs,
        n,
        m,
        config.batch_size,
        config.alternating,
        rng,
        |li, ui, rng| {
            let xl = labeled.features.select_rows(li);
            let yl: Vec<u8> = li.iter().map(|&i| labeled.labels[i]).collect();
            let xu = if m == 0 {
                Matrix::zeros(0, labeled.dim())
            } else {
                unlabeled.features.select_rows(ui)
            };
            let noise = Noise2::sample(
                rng,
                li.len(),
                ui.len(),
                config.samples,
                config.aux_samples,
                dz,
                da,
            );
            let (v, g) = objective_parts(params, &xl, &yl, &xu, alpha, &noise)?;
            adam.update_nets(&mut params.nets_mut(), &g.nets())?;
            Ok(v.loss)
        },
    )
}

/// Prewarms every network on the bound alone, then trains the full
/// objective with Adam.
pub fn train2(
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    config: &TrainConfig2,
) -> Result<Trained<Model2Params>> {
    config.validate()?;
    if labeled.is_empty() {
        return Err(Error::contract("train2 needs labeled rows"));
    }
    if !unlabeled.is_empty() && unlabeled.dim() != labeled.dim() {
        return Err(Error::dim(
            "unlabeled features",
            labeled.dim(),
            unlabeled.dim(),
        ));
    }
    let mut rng = seeded(derive_seed(config.seed, 2));
    let mut params = Model2Params::init(labeled.dim(), &config.arch, config.prior_pi, &mut rng)?;
    let pretrain_trace = run_phase(
        &mut params,
        labeled,
        unlabeled,
        config,
        config.pretrain_epochs,
        0.0,
        &mut rng,
    )?;
    let a = alpha(config.beta, labeled.len(), unlabeled.len());
    let loss_trace = run_phase(
        &mut params,
        labeled,
        unlabeled,
        config,
        config.epochs,
        a,
        &mut rng,
    )?;
    Ok(Trained {
        params,
        pretrain_trace,
        loss_trace,
    })
}

/// `P(y = 1 | x)` averaged over `n_mc` draws of `a ~ q(a|x)`.
pub fn predict_proba2(
    params: &Model2Params,
    x: &Matrix,
    n_mc: usize,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if n_mc == 0 {
        return Err(Error::contract("n_mc must be positive"));
    }
    let eps = Matrix::from_vec(
        x.rows() * n_mc,
        params.a_dim(),
        standard_normals(rng, x.rows() * n_mc * params.a_dim()),
    )?;
    let aux = AuxPass::forward(&params.encoder_a_net, x, &eps, n_mc)?;
    let probs = params.classifier_net.forward(&aux.classifier_input(x)?)?;
    let w = probs.head(0);
    Ok((0..x.rows())
        .map(|i| (0..n_mc).map(|s| w.get(i * n_mc + s, 1)).sum::<f64>() / n_mc as f64)
        .collect())
}
