//! Model 1: a Gaussian-mixture latent prior.
//!
//! Generative process `p(y) p(z|y) p(x|z)` with `p(y) = Bernoulli`, one
//! diagonal Gaussian component per class (`k = y`, `pi = P(y = 0)`) and a
//! Gaussian decoder. Inference uses `q(y|x)` (the default-probability
//! classifier) and `q(z|x,y)`.
//!
//! Labeled rows contribute the supervised bound
//!
//! ```text
//! -L_accept(x, y) = -KL(q(z|x,y) || p(z|y)) + log p(y) + 1/L sum_l log N(x | z_l)
//! ```
//!
//! and unlabeled rows the enumeration over both outcomes
//!
//! ```text
//! -L_reject(x) = sum_y q(y|x) [-L_accept(x, y) - log q(y|x)]
//! ```
//!
//! The training loss is the per-batch mean of `L_accept + alpha * CE` over
//! labeled rows plus the per-batch mean of `L_reject` over unlabeled rows,
//! with `alpha = beta (m + n) / n`.

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, UnlabeledDataset};
use crate::dists::{clamped_ln, clamped_ln_grad, DiagGaussian, GmmPrior};
use crate::latent::{
    accumulate, accumulate_matrix, dims_with, gaussian_heads, softmax_head, BranchGrads,
    BranchInput, BranchPass, Components, LatentPrior,
};
use crate::nn::{AdamConfig, AdamState, Matrix, MlpParams};
use crate::rng::{derive_seed, seeded, standard_normals, Rng};
use crate::schedule::run_epochs;
use crate::{Error, Result};

/// Per-term decomposition of a lower bound. Every field is signed so that
/// `total` is their plain sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElboBreakdown {
    /// `-KL(q(z|.) || p(z|y))`, label-weighted for unlabeled rows.
    pub kl_to_prior: f64,
    /// `-KL(q(a|x) || N(0, I))`; zero for Model 1.
    pub aux_kl: f64,
    /// Monte-Carlo estimate of `E_q[log p(x|.)]`.
    pub reconstruction: f64,
    /// `E_q[log p(y)]`.
    pub log_prior_label: f64,
    /// Classifier entropy `-sum_y q(y|.) log q(y|.)`; zero for labeled rows.
    pub classifier_term: f64,
    pub total: f64,
    /// `-E_q[log q(z|.)]`, reported for inspection.
    pub latent_entropy: f64,
    /// `E_q[log p(z|y)]`, reported for inspection.
    pub latent_cross_entropy: f64,
    /// Standard error of the reconstruction estimate (zero for one draw).
    pub reconstruction_se: f64,
}

impl ElboBreakdown {
    pub(crate) fn finish(mut self) -> Self {
        self.total = self.kl_to_prior
            + self.aux_kl
            + self.reconstruction
            + self.log_prior_label
            + self.classifier_term;
        self
    }
}

/// Hidden widths and latent size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model1Arch {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub gmm_hidden: Vec<usize>,
    pub classifier_hidden: Vec<usize>,
    pub latent_dim: usize,
}

impl Default for Model1Arch {
    fn default() -> Self {
        Self {
            encoder_hidden: vec![10, 10],
            decoder_hidden: vec![10, 10],
            gmm_hidden: vec![10],
            classifier_hidden: vec![70],
            latent_dim: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig1 {
    pub learning_rate: f64,
    /// Scales the classifier weight `alpha = beta (m + n) / n`.
    pub beta: f64,
    /// Reparameterized draws `L` per row.
    pub samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub pretrain_epochs: usize,
    /// `P(y = 0)`, held fixed.
    pub prior_pi: f64,
    /// Labeled and unlabeled batches in separate optimizer steps.
    pub alternating: bool,
    pub arch: Model1Arch,
}

impl Default for TrainConfig1 {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta: 1.1,
            samples: 1,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            pretrain_epochs: 10,
            prior_pi: 0.5,
            alternating: false,
            arch: Model1Arch::default(),
        }
    }
}

impl TrainConfig1 {
    pub fn validate(&self) -> Result<()> {
        check_common(
            self.learning_rate,
            self.beta,
            self.samples,
            self.batch_size,
            self.prior_pi,
        )?;
        if self.arch.latent_dim == 0 {
            return Err(Error::contract("latent_dim must be positive"));
        }
        Ok(())
    }
}

pub(crate) fn check_common(
    lr: f64,
    beta: f64,
    samples: usize,
    batch: usize,
    pi: f64,
) -> Result<()> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::contract("learning_rate must be positive"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::contract("beta must be non-negative"));
    }
    if samples == 0 {
        return Err(Error::contract(
            "at least one reparameterized sample is required",
        ));
    }
    if batch == 0 {
        return Err(Error::contract("batch_size must be positive"));
    }
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::contract("prior_pi must lie in (0, 1)"));
    }
    Ok(())
}

/// `beta (m + n) / n` for `n` labeled and `m` unlabeled training rows.
pub fn alpha(beta: f64, n_labeled: usize, n_unlabeled: usize) -> f64 {
    beta * (n_labeled + n_unlabeled) as f64 / n_labeled as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model1Params {
    pub prior_pi: f64,
    pub gmm_net: MlpParams,
    pub decoder_net: MlpParams,
    pub encoder_net: MlpParams,
    pub classifier_net: MlpParams,
}

impl Model1Params {
    pub fn init(x_dim: usize, arch: &Model1Arch, prior_pi: f64, rng: &mut Rng) -> Result<Self> {
        let dz = arch.latent_dim;
        if dz == 0 || x_dim == 0 {
            return Err(Error::contract("feature and latent dims must be positive"));
        }
        let p = Self {
            prior_pi,
            gmm_net: MlpParams::glorot(&dims_with(2, &arch.gmm_hidden), &gaussian_heads(dz), rng)?,
            decoder_net: MlpParams::glorot(
                &dims_with(dz, &arch.decoder_hidden),
                &gaussian_heads(x_dim),
                rng,
            )?,
            encoder_net: MlpParams::glorot(
                &dims_with(x_dim + 2, &arch.encoder_hidden),
                &gaussian_heads(dz),
                rng,
            )?,
            classifier_net: MlpParams::glorot(
                &dims_with(x_dim, &arch.classifier_hidden),
                &softmax_head(),
                rng,
            )?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn x_dim(&self) -> usize {
        self.classifier_net.input_dim()
    }

    pub fn z_dim(&self) -> usize {
        self.gmm_net.head_specs()[0].dim
    }

    /// `[p(y = 0), p(y = 1)]`.
    pub fn label_prior(&self) -> [f64; 2] {
        [self.prior_pi, 1.0 - self.prior_pi]
    }

    /// The latent mixture `p(z)` as evaluated by the prior network.
    pub fn gmm_prior(&self) -> Result<GmmPrior> {
        let c = Components::eval(&self.gmm_net)?;
        let comp = |k: usize| DiagGaussian::new(c.mu.row(k).to_vec(), c.var.row(k).to_vec());
        GmmPrior::new(self.prior_pi, [comp(0)?, comp(1)?])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_pi > 0.0 && self.prior_pi < 1.0) {
            return Err(Error::contract("prior_pi must lie in (0, 1)"));
        }
        for n in self.nets() {
            n.validate()?;
        }
        let (dx, dz) = (self.x_dim(), self.z_dim());
        let check = |ctx: &'static str, expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::dim(ctx, expected, actual))
            }
        };
        check("gmm input", 2, self.gmm_net.input_dim())?;
        check("encoder input", dx + 2, self.encoder_net.input_dim())?;
        check("encoder output", dz, self.encoder_net.head_specs()[0].dim)?;
        check("decoder input", dz, self.decoder_net.input_dim())?;
        check("decoder output", dx, self.decoder_net.head_specs()[0].dim)?;
        check(
            "classifier heads",
            2,
            self.classifier_net.head_specs()[0].dim,
        )
    }

    /// Networks in a fixed order: gmm, decoder, encoder, classifier.
    pub fn nets(&self) -> [&MlpParams; 4] {
        [
            &self.gmm_net,
            &self.decoder_net,
            &self.encoder_net,
            &self.classifier_net,
        ]
    }

    pub fn nets_mut(&mut self) -> [&mut MlpParams; 4] {
        [
            &mut self.gmm_net,
            &mut self.decoder_net,
            &mut self.encoder_net,
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

/// Gradients of the training loss, shaped like the four networks.
#[derive(Debug, Clone)]
pub struct Model1Grads {
    pub gmm_net: MlpParams,
    pub decoder_net: MlpParams,
    pub encoder_net: MlpParams,
    pub classifier_net: MlpParams,
    /// Gradient with respect to the component means (row `k` = component `k`).
    pub component_mean: Matrix,
    /// Gradient with respect to the component variances.
    pub component_var: Matrix,
}

impl Model1Grads {
    fn zeros(p: &Model1Params) -> Self {
        Self {
            gmm_net: p.gmm_net.zeros_like(),
            decoder_net: p.decoder_net.zeros_like(),
            encoder_net: p.encoder_net.zeros_like(),
            classifier_net: p.classifier_net.zeros_like(),
            component_mean: Matrix::zeros(2, p.z_dim()),
            component_var: Matrix::zeros(2, p.z_dim()),
        }
    }

    pub fn nets(&self) -> [&MlpParams; 4] {
        [
            &self.gmm_net,
            &self.decoder_net,
            &self.encoder_net,
            &self.classifier_net,
        ]
    }

    /// Flattened in the order of [`Model1Params::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.nets()
            .iter()
            .flat_map(|n| n.values().copied())
            .collect()
    }

    fn add_branch(&mut self, g: &BranchGrads) {
        accumulate(&mut self.encoder_net, &g.encoder);
        accumulate(&mut self.decoder_net, &g.decoder);
        accumulate_matrix(&mut self.component_mean, &g.d_mu_p);
        accumulate_matrix(&mut self.component_var, &g.d_var_p);
    }
}

/// Standard-normal draws for one objective evaluation: `samples` rows per
/// data row, shared by both label branches of an unlabeled row.
#[derive(Debug, Clone)]
pub struct Noise1 {
    pub labeled: Matrix,
    pub unlabeled: Matrix,
    pub samples: usize,
}

impl Noise1 {
    pub fn sample(
        rng: &mut Rng,
        n_labeled: usize,
        n_unlabeled: usize,
        samples: usize,
        z_dim: usize,
    ) -> Self {
        let draw = |rng: &mut Rng, rows: usize| {
            Matrix::from_vec(rows, z_dim, standard_normals(rng, rows * z_dim))
                .expect("shape by construction")
        };
        Self {
            labeled: draw(rng, n_labeled * samples),
            unlabeled: draw(rng, n_unlabeled * samples),
            samples,
        }
    }
}

/// Loss value of one objective evaluation, split by source.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ObjectiveValue {
    pub loss: f64,
    /// Mean `L_accept` over labeled rows.
    pub supervised: f64,
    /// Mean classifier cross-entropy over labeled rows.
    pub cross_entropy: f64,
    /// Mean `L_reject` over unlabeled rows.
    pub unsupervised: f64,
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
        decoder_label: false,
    }
}

fn breakdown(pass: &BranchPass, i: usize, log_prior: f64) -> ElboBreakdown {
    ElboBreakdown {
        kl_to_prior: -pass.kl[i],
        reconstruction: pass.recon[i],
        log_prior_label: log_prior,
        latent_entropy: pass.entropy[i],
        latent_cross_entropy: pass.cross_entropy[i],
        reconstruction_se: pass.recon_se[i],
        ..Default::default()
    }
    .finish()
}

/// Combines per-label branch bounds with classifier weights `w`.
pub(crate) fn enumerate(branches: &[ElboBreakdown; 2], w: [f64; 2]) -> ElboBreakdown {
    let mut out = ElboBreakdown::default();
    for y in 0..2 {
        let b = &branches[y];
        out.kl_to_prior += w[y] * b.kl_to_prior;
        out.aux_kl += w[y] * b.aux_kl;
        out.reconstruction += w[y] * b.reconstruction;
        out.log_prior_label += w[y] * b.log_prior_label;
        out.latent_entropy += w[y] * b.latent_entropy;
        out.latent_cross_entropy += w[y] * b.latent_cross_entropy;
        out.reconstruction_se += w[y] * b.reconstruction_se;
        out.classifier_term -= w[y] * clamped_ln(w[y]);
    }
    out.finish()
}

/// Supervised bounds `-L_accept` for a batch; `eps` holds `samples` rows per
/// data row.
pub fn elbo_accept_batch(
    params: &Model1Params,
    x: &Matrix,
    labels: &[u8],
    eps: &Matrix,
    samples: usize,
) -> Result<Vec<ElboBreakdown>> {
    let labels = labels_usize(labels)?;
    let comps = Components::eval(&params.gmm_net)?;
    let prior = LatentPrior::Mixture(&comps);
    let pass = BranchPass::forward(
        &params.encoder_net,
        &params.decoder_net,
        &prior,
        &branch(x, &labels, eps, samples),
    )?;
    let lp = params.label_prior();
    Ok((0..x.rows())
        .map(|i| breakdown(&pass, i, lp[labels[i]].ln()))
        .collect())
}

/// Unsupervised bounds `-L_reject` for a batch.
pub fn elbo_reject_batch(
    params: &Model1Params,
    x: &Matrix,
    eps: &Matrix,
    samples: usize,
) -> Result<Vec<ElboBreakdown>> {
    let n = x.rows();
    let b0 = elbo_accept_batch(params, x, &vec![0; n], eps, samples)?;
    let b1 = elbo_accept_batch(params, x, &vec![1; n], eps, samples)?;
    let probs = params.classifier_net.forward(x)?;
    let w = probs.head(0);
    Ok((0..n)
        .map(|i| enumerate(&[b0[i], b1[i]], [w.get(i, 0), w.get(i, 1)]))
        .collect())
}

/// `-L_accept(x, y)` for one row; `eps` is `L x z_dim`.
pub fn elbo_accept(params: &Model1Params, x: &[f64], y: u8, eps: &Matrix) -> Result<ElboBreakdown> {
    let xm = Matrix::row_vector(x);
    Ok(elbo_accept_batch(params, &xm, &[y], eps, eps.rows())?[0])
}

/// `-L_reject(x)` for one row; both label branches share `eps`.
pub fn elbo_reject(params: &Model1Params, x: &[f64], eps: &Matrix) -> Result<ElboBreakdown> {
    let xm = Matrix::row_vector(x);
    Ok(elbo_reject_batch(params, &xm, eps, eps.rows())?[0])
}

/// Loss and gradients of one training step.
///
/// Labeled and unlabeled parts are averaged over their own batch sizes and
/// summed. An empty labeled batch is rejected.
pub fn objective1(
    params: &Model1Params,
    labeled_x: &Matrix,
    labels: &[u8],
    unlabeled_x: &Matrix,
    alpha: f64,
    noise: &Noise1,
) -> Result<(ObjectiveValue, Model1Grads)> {
    if labeled_x.rows() == 0 {
        return Err(Error::contract(
            "objective1 needs a non-empty labeled batch",
        ));
    }
    objective_parts(params, labeled_x, labels, unlabeled_x, alpha, noise)
}

pub(crate) fn objective_parts(
    params: &Model1Params,
    labeled_x: &Matrix,
    labels: &[u8],
    unlabeled_x: &Matrix,
    alpha: f64,
    noise: &Noise1,
) -> Result<(ObjectiveValue, Model1Grads)> {
    let labels = labels_usize(labels)?;
    if labels.len() != labeled_x.rows() {
        return Err(Error::dim("labels", labeled_x.rows(), labels.len()));
    }
    let comps = Components::eval(&params.gmm_net)?;
    let prior = LatentPrior::Mixture(&comps);
    let log_prior = params.label_prior().map(f64::ln);
    let mut grads = Model1Grads::zeros(params);
    let mut value = ObjectiveValue::default();
    let l = noise.samples;

    let bl = labeled_x.rows();
    if bl > 0 {
        let input = branch(labeled_x, &labels, &noise.labeled, l);
        let pass = BranchPass::forward(&params.encoder_net, &params.decoder_net, &prior, &input)?;
        let inv = 1.0 / bl as f64;
        let cls = params.classifier_net.forward(labeled_x)?;
        let probs = cls.head(0);
        let mut d_probs = Matrix::zeros(bl, 2);
        for i in 0..bl {
            let y = labels[i];
            let p = probs.get(i, y);
            value.supervised += (pass.kl[i] - log_prior[y] - pass.recon[i]) * inv;
            value.cross_entropy -= clamped_ln(p) * inv;
            d_probs.set(i, y, -alpha * inv * clamped_ln_grad(p));
        }
        let g = pass.backward(
            &params.encoder_net,
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
    }

    let bu = unlabeled_x.rows();
    if bu > 0 {
        let inv = 1.0 / bu as f64;
        let cls = params.classifier_net.forward(unlabeled_x)?;
        let w = cls.head(0);
        let mut d_w = Matrix::zeros(bu, 2);
        for y in 0..2 {
            let ys = vec![y; bu];
            let input = branch(unlabeled_x, &ys, &noise.unlabeled, l);
            let pass =
                BranchPass::forward(&params.encoder_net, &params.decoder_net, &prior, &input)?;
            let mut coef = vec![0.0; bu];
            for j in 0..bu {
                let wy = w.get(j, y);
                let a = -pass.kl[j] + log_prior[y] + pass.recon[j];
                value.unsupervised -= wy * (a - clamped_ln(wy)) * inv;
                coef[j] = -wy * inv;
                d_w.set(j, y, -(a - clamped_ln(wy) - wy * clamped_ln_grad(wy)) * inv);
            }
            let g = pass.backward(
                &params.encoder_net,
                &params.decoder_net,
                &prior,
                &input,
                &coef,
            )?;
            grads.add_branch(&g);
        }
        let cg = params.classifier_net.backward(&cls.tape, &[Some(&d_w)])?;
        accumulate(&mut grads.classifier_net, &cg.params);
    }

    value.loss = value.supervised + alpha * value.cross_entropy + value.unsupervised;
    if !value.loss.is_finite() {
        return Err(Error::NonFinite {
            term: "objective1 loss".into(),
        });
    }
    grads.gmm_net = comps.backward(&params.gmm_net, &grads.component_mean, &grads.component_var)?;
    Ok((value, grads))
}

/// Maximizes a single-Gaussian-prior ELBO over all features to warm up the
/// encoder (fed a zero label code) and the decoder. Returns the mean ELBO of
/// every epoch.
pub fn pretrain_vae(
    params: &mut Model1Params,
    x: &Matrix,
    config: &TrainConfig1,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if config.pretrain_epochs == 0 || x.rows() == 0 {
        return Ok(Vec::new());
    }
    let dz = params.z_dim();
    let l = config.samples;
    let mut adam = AdamState::for_nets(
        AdamConfig::with_lr(config.learning_rate),
        &[&params.encoder_net, &params.decoder_net],
    )?;
    let dummy = vec![0usize; config.batch_size];
    let trace = run_epochs(
        config.pretrain_epochs,
        x.rows(),
        0,
        config.batch_size,
        false,
        rng,
        |idx, _, rng| {
            let xb = x.select_rows(idx);
            let eps =
                Matrix::from_vec(idx.len() * l, dz, standard_normals(rng, idx.len() * l * dz))?;
            let input = BranchInput {
                x: &xb,
                labels: &dummy[..idx.len()],
                eps: &eps,
                samples: l,
                encoder_label: false,
                decoder_label: false,
            };
            let prior = LatentPrior::Standard;
            let pass =
                BranchPass::forward(&params.encoder_net, &params.decoder_net, &prior, &input)?;
            let inv = 1.0 / idx.len() as f64;
            let elbo: f64 = (0..idx.len())
                .map(|i| (pass.recon[i] - pass.kl[i]) * inv)
                .sum();
            let g = pass.backward(
                &params.encoder_net,
                &params.decoder_net,
                &prior,
                &input,
                &vec![-inv; idx.len()],
            )?;
            adam.update_nets(
                &mut [&mut params.encoder_net, &mut params.decoder_net],
                &[&g.encoder, &g.decoder],
            )?;
            Ok(-elbo)
        },
    )?;
    Ok(trace.into_iter().map(|v| -v).collect())
}

/// A trained generative model with its monitoring traces.
#[derive(Debug, Clone)]
pub struct Trained<P> {
    pub params: P,
    /// Mean pretraining ELBO per epoch (Model 1) or prewarm loss (Model 2).
    pub pretrain_trace: Vec<f64>,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Pretrains, then minimizes the combined objective with Adam.
pub fn train1(
    labeled: &LabeledDataset,
    unlabeled: &UnlabeledDataset,
    config: &TrainConfig1,
) -> Result<Trained<Model1Params>> {
    config.validate()?;
    if labeled.is_empty() {
        return Err(Error::contract("train1 needs labeled rows"));
    }
    if !unlabeled.is_empty() && unlabeled.dim() != labeled.dim() {
        return Err(Error::dim(
            "unlabeled features",
            labeled.dim(),
            unlabeled.dim(),
        ));
    }
    let mut rng = seeded(derive_seed(config.seed, 1));
    let mut params = Model1Params::init(labeled.dim(), &config.arch, config.prior_pi, &mut rng)?;
    let all_x = if unlabeled.is_empty() {
        labeled.features.clone()
    } else {
        labeled.features.vstack(&unlabeled.features)?
    };
    let pretrain_trace = pretrain_vae(&mut params, &all_x, config, &mut rng)?;

    let (n, m) = (labeled.len(), unlabeled.len());
    let a = alpha(config.beta, n, m);
    let dz = params.z_dim();
    let mut adam = AdamState::for_nets(AdamConfig::with_lr(config.learning_rate), &params.nets())?;
    let loss_trace = run_epochs(
        config.epochs,
        n,
        m,
        config.batch_size,
        config.alternating,
        &mut rng,
        |li, ui, rng| {
            let xl = labeled.features.select_rows(li);
            let yl: Vec<u8> = li.iter().map(|&i| labeled.labels[i]).collect();
            let xu = if m == 0 {
                Matrix::zeros(0, labeled.dim())
            } else {
                unlabeled.features.select_rows(ui)
            };
            let noise = Noise1::sample(rng, li.len(), ui.len(), config.samples, dz);
            let (v, g) = objective_parts(&params, &xl, &yl, &xu, a, &noise)?;
            adam.update_nets(&mut params.nets_mut(), &g.nets())?;
            Ok(v.loss)
        },
    )?;
    Ok(Trained {
        params,
        pretrain_trace,
        loss_trace,
    })
}

/// `P(y = 1 | x)` from the classifier, one value per row.
pub fn predict_proba1(params: &Model1Params, x: &Matrix) -> Result<Vec<f64>> {
    let pass = params.classifier_net.forward(x)?;
    Ok(pass.head(0).iter_rows().map(|r| r[1]).collect())
}
