//! Feed-forward networks: a softplus trunk with one or more output heads.
//!
//! Every head attaches to the last hidden layer (or to the input when the
//! trunk is empty). Heads come in three flavours:
//!
//! - `Linear`: the affine output as-is (means, logits).
//! - `Softmax`: a probability simplex per row.
//! - `ExpLinear`: `exp` of the affine output, i.e. the affine part is a
//!   log-variance. Outputs are strictly positive.
//!
//! Backpropagation is written out by hand against a [`GradientTape`] recorded
//! by [`MlpParams::forward`].

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::{sigmoid, softmax_into, softplus, Matrix};
use crate::{Error, Result};

/// Log-variance outputs are clamped to this range before exponentiation.
const EXP_HEAD_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadActivation {
    Linear,
    Softmax,
    ExpLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub name: String,
    pub dim: usize,
    pub activation: HeadActivation,
}

impl HeadSpec {
    pub fn new(name: &str, dim: usize, activation: HeadActivation) -> Self {
        Self {
            name: name.to_owned(),
            dim,
            activation,
        }
    }
}

/// Affine map `y = W x + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// `input * W^T + b` for a batch of rows.
    fn forward(&self, input: &Matrix) -> Matrix {
        let (n_out, n_in) = (self.out_dim(), self.in_dim());
        let mut out = Matrix::zeros(input.rows(), n_out);
        for b in 0..input.rows() {
            let x = input.row(b);
            let o = out.row_mut(b);
            for j in 0..n_out {
                let w = &self.weight.data()[j * n_in..(j + 1) * n_in];
                let mut s = self.bias[j];
                for k in 0..n_in {
                    s += w[k] * x[k];
                }
                o[j] = s;
            }
        }
        out
    }

    /// Accumulates `dW`, `db` into `grad` and optionally writes `d input`.
    fn backward(
        &self,
        input: &Matrix,
        d_out: &Matrix,
        grad: &mut Dense,
        d_input: Option<&mut Matrix>,
    ) {
        let (n_out, n_in) = (self.out_dim(), self.in_dim());
        for b in 0..input.rows() {
            let x = input.row(b);
            let g = d_out.row(b);
            for j in 0..n_out {
                let gj = g[j];
                if gj == 0.0 {
                    continue;
                }
                grad.bias[j] += gj;
                let dw = &mut grad.weight.data_mut()[j * n_in..(j + 1) * n_in];
                for k in 0..n_in {
                    dw[k] += gj * x[k];
                }
            }
        }
        if let Some(d_input) = d_input {
            for b in 0..input.rows() {
                let g = d_out.row(b);
                let di = d_input.row_mut(b);
                for j in 0..n_out {
                    let gj = g[j];
                    if gj == 0.0 {
                        continue;
                    }
                    let w = &self.weight.data()[j * n_in..(j + 1) * n_in];
                    for k in 0..n_in {
                        di[k] += gj * w[k];
                    }
                }
            }
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weight.data().iter().chain(self.bias.iter())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weight
            .data_mut()
            .iter_mut()
            .chain(self.bias.iter_mut())
    }
}

/// Parameters of one multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Input width followed by each hidden width.
    layer_dims: Vec<usize>,
    layers: Vec<Dense>,
    hidden_activation: HiddenActivation,
    head_specs: Vec<HeadSpec>,
    heads: Vec<Dense>,
}

/// Gradients of a scalar loss with respect to an [`MlpParams`] and its input.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub params: MlpParams,
    pub input: Matrix,
}

/// Activations cached by a forward pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    input: Matrix,
    pre: Vec<Matrix>,
    act: Vec<Matrix>,
    head_pre: Vec<Matrix>,
}

impl GradientTape {
    pub fn batch_size(&self) -> usize {
        self.input.rows()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// One output matrix per head, in declaration order.
    pub heads: Vec<Matrix>,
    pub tape: GradientTape,
}

impl ForwardPass {
    pub fn head(&self, index: usize) -> &Matrix {
        &self.heads[index]
    }
}

/// Half-width of the Glorot uniform distribution.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl MlpParams {
    /// All-zero parameters.
    pub fn zeros(layer_dims: &[usize], heads: &[HeadSpec]) -> Result<Self> {
        if layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(Error::contract("layer dims must be non-empty and positive"));
        }
        if heads.is_empty() || heads.iter().any(|h| h.dim == 0) {
            return Err(Error::contract(
                "an MLP needs at least one head of positive width",
            ));
        }
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1]))
            .collect();
        let last = *layer_dims.last().unwrap();
        let head_layers = heads.iter().map(|h| Dense::zeros(last, h.dim)).collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            hidden_activation: HiddenActivation::Softplus,
            head_specs: heads.to_vec(),
            heads: head_layers,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        layer_dims: &[usize],
        heads: &[HeadSpec],
        rng: &mut R,
    ) -> Result<Self> {
        let mut p = Self::zeros(layer_dims, heads)?;
        for d in p.layers.iter_mut().chain(p.heads.iter_mut()) {
            let bound = glorot_bound(d.in_dim(), d.out_dim());
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite glorot bound");
            for w in d.weight.data_mut() {
                *w = dist.sample(rng);
            }
        }
        Ok(p)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden_activation
    }

    pub fn head_specs(&self) -> &[HeadSpec] {
        &self.head_specs
    }

    pub fn head_index(&self, name: &str) -> Option<usize> {
        self.head_specs.iter().position(|h| h.name == name)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn heads(&self) -> &[Dense] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [Dense] {
        &mut self.heads
    }

    /// Checks internal shape consistency, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() + 1 != self.layer_dims.len()
            || self.heads.len() != self.head_specs.len()
        {
            return Err(Error::contract(
                "layer or head count does not match declared dims",
            ));
        }
        for (d, w) in self.layers.iter().zip(self.layer_dims.windows(2)) {
            if d.in_dim() != w[0] || d.out_dim() != w[1] || d.bias.len() != w[1] {
                return Err(Error::contract(
                    "hidden layer shape does not match declared dims",
                ));
            }
        }
        let last = *self.layer_dims.last().unwrap();
        for (d, h) in self.heads.iter().zip(&self.head_specs) {
            if d.in_dim() != last || d.out_dim() != h.dim || d.bias.len() != h.dim {
                return Err(Error::contract(format!("head '{}' shape mismatch", h.name)));
            }
        }
        if !self.values().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                term: "mlp parameters".into(),
            });
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .chain(&self.heads)
            .map(|d| d.weight.data().len() + d.bias.len())
            .sum()
    }

    /// Every weight and bias in a fixed order: hidden layers, then heads.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .chain(self.heads.iter())
            .flat_map(Dense::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .chain(self.heads.iter_mut())
            .flat_map(Dense::values_mut)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dim(
                "MlpParams::set_flat",
                self.num_params(),
                flat.len(),
            ));
        }
        for (p, v) in self.values_mut().zip(flat) {
            *p = *v;
        }
        Ok(())
    }

    /// Same architecture, all values zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.values_mut().for_each(|v| *v = 0.0);
        z
    }

    pub fn forward(&self, input: &Matrix) -> Result<ForwardPass> {
        if input.cols() != self.input_dim() {
            return Err(Error::dim(
                "mlp_forward input",
                self.input_dim(),
                input.cols(),
            ));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.forward(act.last().unwrap_or(input));
            let mut a = z.clone();
            a.data_mut().iter_mut().for_each(|v| *v = softplus(*v));
            pre.push(z);
            act.push(a);
        }
        let trunk = act.last().unwrap_or(input);
        let mut head_pre = Vec::with_capacity(self.heads.len());
        let mut heads = Vec::with_capacity(self.heads.len());
        for (d, spec) in self.heads.iter().zip(&self.head_specs) {
            let z = d.forward(trunk);
            let out = head_output(&z, spec.activation);
            head_pre.push(z);
            heads.push(out);
        }
        Ok(ForwardPass {
            heads,
            tape: GradientTape {
                input: input.clone(),
                pre,
                act,
                head_pre,
            },
        })
    }

    /// Backpropagates head-output gradients through the network.
    ///
    /// `head_grads` holds one entry per declared head; `None` contributes
    /// nothing. Contributions of several heads add up in the shared trunk.
    pub fn backward(
        &self,
        tape: &GradientTape,
        head_grads: &[Option<&Matrix>],
    ) -> Result<MlpGradients> {
        if head_grads.len() != self.heads.len() {
            return Err(Error::contract(format!(
                "expected {} head gradients, got {}",
                self.heads.len(),
                head_grads.len()
            )));
        }
        let batch = tape.batch_size();
        let mut grads = self.zeros_like();
        let trunk = tape.act.last().unwrap_or(&tape.input);
        let mut d_trunk = Matrix::zeros(batch, trunk.cols());
        for (h, g) in head_grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let spec = &self.head_specs[h];
            if g.rows() != batch || g.cols() != spec.dim {
                return Err(Error::contract(format!(
                    "gradient for head '{}' has shape {}x{}, expected {}x{}",
                    spec.name,
                    g.rows(),
                    g.cols(),
                    batch,
                    spec.dim
                )));
            }
            let d_pre = head_backward(&tape.head_pre[h], g, spec.activation);
            self.heads[h].backward(trunk, &d_pre, &mut grads.heads[h], Some(&mut d_trunk));
        }
        let mut d_act = d_trunk;
        for l in (0..self.layers.len()).rev() {
            let mut d_pre = d_act;
            for (d, z) in d_pre.data_mut().iter_mut().zip(tape.pre[l].data()) {
                *d *= sigmoid(*z);
            }
            let below = if l == 0 {
                &tape.input
            } else {
                &tape.act[l - 1]
            };
            let mut d_below = Matrix::zeros(batch, below.cols());
            self.layers[l].backward(below, &d_pre, &mut grads.layers[l], Some(&mut d_below));
            d_act = d_below;
        }
        Ok(MlpGradients {
            params: grads,
            input: d_act,
        })
    }
}

fn head_output(pre: &Matrix, activation: HeadActivation) -> Matrix {
    let mut out = pre.clone();
    match activation {
        HeadActivation::Linear => {}
        HeadActivation::ExpLinear => out
            .data_mut()
            .iter_mut()
            .for_each(|v| *v = v.clamp(-EXP_HEAD_CLAMP, EXP_HEAD_CLAMP).exp()),
        HeadActivation::Softmax => {
            for i in 0..pre.rows() {
                softmax_into(pre.row(i), out.row_mut(i));
            }
        }
    }
    out
}

fn head_backward(pre: &Matrix, g: &Matrix, activation: HeadActivation) -> Matrix {
    let mut d = g.clone();
    match activation {
        HeadActivation::Linear => {}
        HeadActivation::ExpLinear => {
            for (dv, z) in d.data_mut().iter_mut().zip(pre.data()) {
                *dv = if z.abs() > EXP_HEAD_CLAMP {
                    0.0
                } else {
                    *dv * z.exp()
                };
            }
        }
        HeadActivation::Softmax => {
            let mut p = vec![0.0; pre.cols()];
            for i in 0..pre.rows() {
                softmax_into(pre.row(i), &mut p);
                let row = d.row_mut(i);
                let dot: f64 = row.iter().zip(&p).map(|(a, b)| a * b).sum();
                for (r, pi) in row.iter_mut().zip(&p) {
                    *r = pi * (*r - dot);
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn heads() -> Vec<HeadSpec> {
        vec![
            HeadSpec::new("mu", 2, HeadActivation::Linear),
            HeadSpec::new("var", 2, HeadActivation::ExpLinear),
            HeadSpec::new("prob", 3, HeadActivation::Softmax),
        ]
    }

    /// Independent per-element evaluation, no shared helpers.
    fn naive_forward(p: &MlpParams, x: &[f64]) -> Vec<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in p.layers() {
            let mut next = Vec::new();
            for j in 0..layer.weight.rows() {
                let mut s = layer.bias[j];
                for k in 0..layer.weight.cols() {
                    s += layer.weight.get(j, k) * h[k];
                }
                next.push((1.0 + s.exp()).ln());
            }
            h = next;
        }
        p.head_specs()
            .iter()
            .zip(p.heads())
            .map(|(spec, d)| {
                let z: Vec<f64> = (0..d.weight.rows())
                    .map(|j| {
                        d.bias[j]
                            + (0..d.weight.cols())
                                .map(|k| d.weight.get(j, k) * h[k])
                                .sum::<f64>()
                    })
                    .collect();
                match spec.activation {
                    HeadActivation::Linear => z,
                    HeadActivation::ExpLinear => z.iter().map(|v| v.exp()).collect(),
                    HeadActivation::Softmax => {
                        let s: f64 = z.iter().map(|v| v.exp()).sum();
                        z.iter().map(|v| v.exp() / s).collect()
                    }
                }
            })
            .collect()
    }

    fn random_params(seed: u64) -> MlpParams {
        let mut rng = seeded(seed);
        let mut p = MlpParams::glorot(&[3, 5, 4], &heads(), &mut rng).unwrap();
        let dist = Uniform::new(-0.5, 0.5).unwrap();
        for layer in p.layers_mut() {
            layer
                .bias
                .iter_mut()
                .for_each(|b| *b = dist.sample(&mut rng));
        }
        p
    }

    fn random_input(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = seeded(seed);
        let dist = Uniform::new(-2.0, 2.0).unwrap();
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| dist.sample(&mut rng)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_give_zero_linear_head() {
        let p =
            MlpParams::zeros(&[3, 2], &[HeadSpec::new("out", 1, HeadActivation::Linear)]).unwrap();
        let fp = p.forward(&random_input(4, 3, 1)).unwrap();
        assert!(fp.head(0).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_head_on_equal_logits_is_uniform() {
        let p = MlpParams::zeros(&[2], &[HeadSpec::new("p", 2, HeadActivation::Softmax)]).unwrap();
        let fp = p.forward(&Matrix::row_vector(&[0.3, -1.0])).unwrap();
        assert_eq!(fp.head(0).row(0), &[0.5, 0.5]);
    }

    #[test]
    fn forward_matches_naive_loop() {
        let p = random_params(7);
        let x = random_input(3, 3, 8);
        let fp = p.forward(&x).unwrap();
        for i in 0..3 {
            let naive = naive_forward(&p, x.row(i));
            for (h, out) in naive.iter().enumerate() {
                for (a, b) in out.iter().zip(fp.head(h).row(i)) {
                    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                }
            }
            let sum: f64 = fp.head(2).row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(fp.head(1).row(i).iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn batch_equals_row_by_row() {
        let p = random_params(3);
        let x = random_input(5, 3, 4);
        let fp = p.forward(&x).unwrap();
        for i in 0..5 {
            let single = p.forward(&Matrix::row_vector(x.row(i))).unwrap();
            for h in 0..3 {
                assert_eq!(single.head(h).row(0), fp.head(h).row(i));
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = random_params(1);
        assert!(matches!(
            p.forward(&Matrix::zeros(2, 4)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn backward_requires_one_entry_per_head() {
        let p = random_params(1);
        let fp = p.forward(&random_input(2, 3, 2)).unwrap();
        assert!(p.backward(&fp.tape, &[None]).is_err());
        let bad = Matrix::zeros(2, 5);
        assert!(p.backward(&fp.tape, &[Some(&bad), None, None]).is_err());
    }

    #[test]
    fn zero_head_grads_give_zero_gradients() {
        let p = random_params(2);
        let fp = p.forward(&random_input(4, 3, 5)).unwrap();
        let z: Vec<Matrix> = fp
            .heads
            .iter()
            .map(|h| Matrix::zeros(h.rows(), h.cols()))
            .collect();
        let g = p
            .backward(&fp.tape, &[Some(&z[0]), Some(&z[1]), Some(&z[2])])
            .unwrap();
        assert!(g.params.values().all(|&v| v == 0.0));
        assert!(g.input.data().iter().all(|&v| v == 0.0));
    }

    /// Loss = sum over heads of <c_h, out_h> for fixed random coefficients.
    fn weighted_loss(p: &MlpParams, x: &Matrix, coef: &[Matrix]) -> f64 {
        let fp = p.forward(x).unwrap();
        fp.heads
            .iter()
            .zip(coef)
            .map(|(h, c)| {
                h.data()
                    .iter()
                    .zip(c.data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn backward_matches_central_differences() {
        let p = random_params(11);
        let x = random_input(3, 3, 12);
        let fp = p.forward(&x).unwrap();
        let coef: Vec<Matrix> = fp
            .heads
            .iter()
            .enumerate()
            .map(|(i, h)| random_input(h.rows(), h.cols(), 100 + i as u64))
            .collect();
        let g = p
            .backward(&fp.tape, &[Some(&coef[0]), Some(&coef[1]), Some(&coef[2])])
            .unwrap();
        let flat = p.to_flat();
        let analytic = g.params.to_flat();
        let h = 1e-5;
        let mut max_rel: f64 = 0.0;
        for i in 0..flat.len() {
            let mut q = p.clone();
            let mut f = flat.clone();
            f[i] += h;
            q.set_flat(&f).unwrap();
            let up = weighted_loss(&q, &x, &coef);
            f[i] -= 2.0 * h;
            q.set_flat(&f).unwrap();
            let down = weighted_loss(&q, &x, &coef);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-3);
            max_rel = max_rel.max(rel);
        }
        assert!(max_rel < 1e-6, "max relative error {max_rel}");

        // input gradient
        for i in 0..x.data().len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += h;
            let up = weighted_loss(&p, &xp, &coef);
            xp.data_mut()[i] -= 2.0 * h;
            let down = weighted_loss(&p, &xp, &coef);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g.input.data()[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn two_heads_sum_single_head_passes() {
        let p = random_params(21);
        let x = random_input(4, 3, 22);
        let fp = p.forward(&x).unwrap();
        let g0 = random_input(4, 2, 23);
        let g2 = random_input(4, 3, 24);
        let both = p.backward(&fp.tape, &[Some(&g0), None, Some(&g2)]).unwrap();
        let a = p.backward(&fp.tape, &[Some(&g0), None, None]).unwrap();
        let b = p.backward(&fp.tape, &[None, None, Some(&g2)]).unwrap();
        for ((s, u), v) in both
            .params
            .values()
            .zip(a.params.values())
            .zip(b.params.values())
        {
            assert!((s - (u + v)).abs() < 1e-12);
        }
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let b = glorot_bound(4, 4);
        assert!((b - 0.75f64.sqrt()).abs() < 1e-15);
        let spec = [HeadSpec::new("o", 4, HeadActivation::Linear)];
        let p1 = MlpParams::glorot(&[4, 4], &spec, &mut seeded(5)).unwrap();
        let p2 = MlpParams::glorot(&[4, 4], &spec, &mut seeded(5)).unwrap();
        assert_eq!(p1, p2);
        for layer in p1.layers() {
            assert!(layer.weight.data().iter().all(|w| w.abs() <= b));
            assert!(layer.bias.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn glorot_variance_matches_uniform_moment() {
        // one 200 x 250 layer and its head: 10^5 weights in the first layer
        let spec = [HeadSpec::new("o", 1, HeadActivation::Linear)];
        let p = MlpParams::glorot(&[250, 400], &spec, &mut seeded(9)).unwrap();
        let w = p.layers()[0].weight.data();
        assert_eq!(w.len(), 100_000);
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let bound = glorot_bound(250, 400);
        let expected = bound * bound / 3.0;
        assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn flat_round_trip() {
        let p = random_params(4);
        let mut q = p.zeros_like();
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&[1.0]).is_err());
        assert_eq!(p.num_params(), p.to_flat().len());
        p.validate().unwrap();
    }
}
