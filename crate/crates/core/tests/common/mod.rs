//! Independent oracles shared by the integration and acceptance tests:
//! Gauss-Hermite quadrature, finite differences, literal bound
//! transcriptions and brute-force metric computations.
#![allow(dead_code)]

pub mod checks;

use std::f64::consts::PI;

use rand::Rng as _;
use rejinf::dists::DiagGaussian;
use rejinf::model1::{Model1Arch, Model1Params};
use rejinf::model2::{Model2Arch, Model2Params};
use rejinf::nn::{Matrix, MlpParams};
use rejinf::rng::{seeded, Rng};

/// Nodes and weights for `int e^{-x^2} f(x) dx`, by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[f(X)]` for `X ~ N(mu, var)` with an `n`-node rule.
pub fn gh_expect(mu: f64, var: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s = (2.0 * var).sqrt();
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| wi * f(mu + s * xi))
        .sum::<f64>()
        / PI.sqrt()
}

/// `ln N(x; m, v)` written out directly.
pub fn ln_normal(x: f64, m: f64, v: f64) -> f64 {
    -0.5 * (2.0 * PI * v).ln() - (x - m).powi(2) / (2.0 * v)
}

/// `|a - b| / max(|a|, |b|, floor)`, maximized over entries.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Central differences of `f` at `x0`.
pub fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], h: f64) -> Vec<f64> {
    let mut x = x0.to_vec();
    (0..x0.len())
        .map(|i| {
            x[i] = x0[i] + h;
            let up = f(&x);
            x[i] = x0[i] - h;
            let down = f(&x);
            x[i] = x0[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn tiny_arch1(width: usize, latent: usize) -> Model1Arch {
    Model1Arch {
        encoder_hidden: vec![width],
        decoder_hidden: vec![width],
        gmm_hidden: vec![width],
        classifier_hidden: vec![width],
        latent_dim: latent,
    }
}

pub fn tiny_arch2(width: usize, latent: usize, aux: usize) -> Model2Arch {
    Model2Arch {
        encoder_hidden: vec![width],
        decoder_hidden: vec![width],
        gmm_hidden: vec![width],
        aux_hidden: vec![width],
        classifier_hidden: vec![width],
        latent_dim: latent,
        aux_dim: aux,
    }
}

pub fn model1(seed: u64, x_dim: usize, width: usize, latent: usize) -> Model1Params {
    Model1Params::init(x_dim, &tiny_arch1(width, latent), 0.5, &mut seeded(seed)).unwrap()
}

pub fn model2(seed: u64, x_dim: usize, width: usize, latent: usize, aux: usize) -> Model2Params {
    Model2Params::init(
        x_dim,
        &tiny_arch2(width, latent, aux),
        0.5,
        &mut seeded(seed),
    )
    .unwrap()
}

/// Output heads of a Gaussian network for one input row: `(mean, var)`,
/// with the crate's variance floor added.
pub fn gaussian_out(net: &MlpParams, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pass = net.forward(&Matrix::row_vector(input)).unwrap();
    let var = pass
        .head(1)
        .row(0)
        .iter()
        .map(|v| v + rejinf::dists::VAR_FLOOR)
        .collect();
    (pass.head(0).row(0).to_vec(), var)
}

pub fn onehot(y: usize) -> [f64; 2] {
    let mut o = [0.0; 2];
    o[y] = 1.0;
    o
}

pub fn cat(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

/// The supervised bound written out term by term: half the sum of
/// `1 + ln var_q`, minus half the sum of `ln var_p + var_q / var_p +
/// (mu_q - mu_p)^2 / var_p`, plus `ln pi_y` and the averaged Gaussian
/// log-likelihoods of the decoded samples.
pub fn literal_accept(
    mu_q: &[f64],
    var_q: &[f64],
    mu_p: &[f64],
    var_p: &[f64],
    ln_prior_y: f64,
    x: &[f64],
    decoded: &[(Vec<f64>, Vec<f64>)],
) -> f64 {
    let mut v = 0.0;
    for j in 0..mu_q.len() {
        v += 0.5 * (1.0 + var_q[j].ln());
        v -= 0.5 * (var_p[j].ln() + var_q[j] / var_p[j] + (mu_q[j] - mu_p[j]).powi(2) / var_p[j]);
    }
    v += ln_prior_y;
    let l = decoded.len() as f64;
    for (mx, vx) in decoded {
        for j in 0..x.len() {
            v += (-0.5 * (2.0 * PI * vx[j]).ln() - (x[j] - mx[j]).powi(2) / (2.0 * vx[j])) / l;
        }
    }
    v
}

/// Pairwise AUC: fraction of (positive, negative) pairs ordered correctly,
/// ties counted as one half.
pub fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Recall and precision at the default-rate quantile by explicit ranking:
/// row `i` is flagged when fewer than `k` rows outrank it (higher score, or
/// equal score and earlier position).
pub fn brute_recall_precision(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    let n = scores.len();
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let k = (n1 as f64 / n as f64 * n as f64).round() as usize;
    let (mut tp, mut fp) = (0usize, 0usize);
    for i in 0..n {
        let outrank = (0..n)
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count();
        if outrank < k {
            if labels[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    (tp as f64 / n1 as f64, tp as f64 / (tp + fp) as f64)
}

fn beta_pdf(c: f64, a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if c <= 0.0 || c >= 1.0 {
        return 0.0;
    }
    ((a - 1.0) * c.ln() + (b - 1.0) * (1.0 - c).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b))
        .exp()
}

/// H-measure by direct minimization over every threshold on a fine cost
/// grid (midpoint rule).
pub fn brute_h(scores: &[f64], labels: &[u8], a: f64, b: f64, grid: usize) -> f64 {
    let n = scores.len() as f64;
    let n1 = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n0 = n - n1;
    let (p0, p1) = (n0 / n, n1 / n);
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(f64::INFINITY);
    let rates: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| {
            let fp = (0..scores.len())
                .filter(|&i| labels[i] == 0 && scores[i] >= t)
                .count() as f64;
            let tp = (0..scores.len())
                .filter(|&i| labels[i] == 1 && scores[i] >= t)
                .count() as f64;
            (fp / n0, tp / n1)
        })
        .collect();
    let (mut loss, mut max) = (0.0, 0.0);
    for g in 0..grid {
        let c = (g as f64 + 0.5) / grid as f64;
        let w = beta_pdf(c, a, b) / grid as f64;
        let best = rates
            .iter()
            .map(|&(f, t)| c * p0 * f + (1.0 - c) * p1 * (1.0 - t))
            .fold(f64::INFINITY, f64::min);
        loss += w * best;
        max += w * (c * p0).min((1.0 - c) * p1);
    }
    1.0 - loss / max
}

/// Every labelling of `n` rows with both classes and every score vector
/// over `grid`, visited by callback.
pub fn for_each_instance(n: usize, grid: &[f64], mut f: impl FnMut(&[f64], &[u8])) {
    let g = grid.len();
    let total_scores = g.pow(n as u32);
    let mut scores = vec![0.0; n];
    let mut labels = vec![0u8; n];
    for lab in 0..(1u32 << n) {
        let ones = lab.count_ones() as usize;
        if ones == 0 || ones == n {
            continue;
        }
        for (i, l) in labels.iter_mut().enumerate() {
            *l = ((lab >> i) & 1) as u8;
        }
        for code in 0..total_scores {
            let mut c = code;
            for s in scores.iter_mut() {
                *s = grid[c % g];
                c /= g;
            }
            f(&scores, &labels);
        }
    }
}

/// Every multiset of `n` (score, label) pairs with both classes present,
/// scores drawn from `grid`. Order-free metrics need only these.
pub fn for_each_multiset(n: usize, grid: &[f64], mut f: impl FnMut(&[f64], &[u8])) {
    let cats: Vec<(f64, u8)> = grid.iter().flat_map(|&s| [(s, 0u8), (s, 1u8)]).collect();
    let mut counts = vec![0usize; cats.len()];
    fn rec(
        k: usize,
        left: usize,
        counts: &mut Vec<usize>,
        cats: &[(f64, u8)],
        f: &mut dyn FnMut(&[f64], &[u8]),
    ) {
        if k == cats.len() - 1 {
            counts[k] = left;
            let mut s = Vec::new();
            let mut l = Vec::new();
            for (c, &(score, label)) in counts.iter().zip(cats) {
                for _ in 0..*c {
                    s.push(score);
                    l.push(label);
                }
            }
            let ones = l.iter().filter(|&&y| y == 1).count();
            if ones > 0 && ones < l.len() {
                f(&s, &l);
            }
            return;
        }
        for c in 0..=left {
            counts[k] = c;
            rec(k + 1, left - c, counts, cats, f);
        }
    }
    rec(0, n, &mut counts, &cats, &mut f);
}

/// Zeroes the head weights of a two-head Gaussian network and sets its
/// biases, so it outputs `N(mean, exp(log_var) + floor)` for every input.
pub fn rig_gaussian(net: &mut MlpParams, mean: &[f64], log_var: &[f64]) {
    let heads = net.heads_mut();
    for (h, b) in heads.iter_mut().zip([mean, log_var]) {
        h.weight.fill(0.0);
        h.bias.copy_from_slice(b);
    }
}

/// Makes a softmax network output `softmax(logits)` for every input.
pub fn rig_softmax(net: &mut MlpParams, logits: [f64; 2]) {
    let h = &mut net.heads_mut()[0];
    h.weight.fill(0.0);
    h.bias.copy_from_slice(&logits);
}

/// Softmax output of a classifier network for one input row.
pub fn class_probs(net: &MlpParams, input: &[f64]) -> [f64; 2] {
    let pass = net.forward(&Matrix::row_vector(input)).unwrap();
    let r = pass.head(0).row(0);
    [r[0], r[1]]
}

pub fn noise(rng: &mut rejinf::rng::Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, rejinf::rng::standard_normals(rng, rows * cols)).unwrap()
}

/// `log int N(z; m, v) exp(g(z)) dz` for scalar `z` by the trapezoid rule on
/// `m +- 14 sqrt(v)`, in log space.
pub fn log_integral_1d(m: f64, v: f64, points: usize, g: impl Fn(f64) -> f64) -> f64 {
    let s = v.sqrt();
    let (lo, hi) = (m - 14.0 * s, m + 14.0 * s);
    let h = (hi - lo) / (points - 1) as f64;
    let terms: Vec<f64> = (0..points)
        .map(|i| {
            let z = lo + i as f64 * h;
            let w: f64 = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            w.ln() + ln_normal(z, m, v) + g(z)
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln() + h.ln()
}

/// `-L_accept` written out from the raw network outputs.
pub fn literal1(p: &Model1Params, x: &[f64], y: usize, eps: &Matrix) -> f64 {
    let (mu_q, var_q) = gaussian_out(&p.encoder_net, &cat(x, &onehot(y)));
    let (mu_p, var_p) = gaussian_out(&p.gmm_net, &onehot(y));
    let decoded: Vec<_> = (0..eps.rows())
        .map(|l| {
            let z: Vec<f64> = (0..mu_q.len())
                .map(|j| mu_q[j] + var_q[j].sqrt() * eps.get(l, j))
                .collect();
            gaussian_out(&p.decoder_net, &z)
        })
        .collect();
    literal_accept(
        &mu_q,
        &var_q,
        &mu_p,
        &var_p,
        p.label_prior()[y].ln(),
        x,
        &decoded,
    )
}

/// `log p(x, y)` for a one-dimensional latent by quadrature over `z`.
pub fn log_evidence1(p: &Model1Params, x: &[f64], y: usize) -> f64 {
    let (m, v) = gaussian_out(&p.gmm_net, &onehot(y));
    let ll = |z: f64| {
        let (mx, vx) = gaussian_out(&p.decoder_net, &[z]);
        (0..x.len())
            .map(|j| ln_normal(x[j], mx[j], vx[j]))
            .sum::<f64>()
    };
    p.label_prior()[y].ln() + log_integral_1d(m[0], v[0], 40_001, ll)
}

pub fn literal_kl_std(mu: &[f64], var: &[f64]) -> f64 {
    mu.iter()
        .zip(var)
        .map(|(m, v)| 0.5 * (v + m * m - 1.0 - v.ln()))
        .sum()
}

/// `-L_accept` of the auxiliary model from raw network outputs.
pub fn literal2(p: &Model2Params, x: &[f64], y: usize, eps: &Matrix) -> f64 {
    let (mu_q, var_q) = gaussian_out(&p.encoder_z_net, &cat(x, &onehot(y)));
    let (mu_p, var_p) = gaussian_out(&p.gmm_net, &onehot(y));
    let (mu_a, var_a) = gaussian_out(&p.encoder_a_net, x);
    let decoded: Vec<_> = (0..eps.rows())
        .map(|l| {
            let z: Vec<f64> = (0..mu_q.len())
                .map(|j| mu_q[j] + var_q[j].sqrt() * eps.get(l, j))
                .collect();
            gaussian_out(&p.decoder_net, &cat(&z, &onehot(y)))
        })
        .collect();
    literal_accept(
        &mu_q,
        &var_q,
        &mu_p,
        &var_p,
        p.label_prior()[y].ln(),
        x,
        &decoded,
    ) - literal_kl_std(&mu_a, &var_a)
}

/// Classifier weights `pi_{y|x,a}` for each auxiliary draw.
pub fn literal_weights(p: &Model2Params, x: &[f64], eps_a: &Matrix) -> Vec<[f64; 2]> {
    let (mu_a, var_a) = gaussian_out(&p.encoder_a_net, x);
    (0..eps_a.rows())
        .map(|s| {
            let a: Vec<f64> = (0..mu_a.len())
                .map(|j| mu_a[j] + var_a[j].sqrt() * eps_a.get(s, j))
                .collect();
            class_probs(&p.classifier_net, &cat(x, &a))
        })
        .collect()
}

pub fn literal_reject2(p: &Model2Params, x: &[f64], eps_z: &Matrix, eps_a: &Matrix) -> f64 {
    let acc = [literal2(p, x, 0, eps_z), literal2(p, x, 1, eps_z)];
    let w = literal_weights(p, x, eps_a);
    w.iter()
        .map(|pi| (0..2).map(|y| pi[y] * (acc[y] - pi[y].ln())).sum::<f64>())
        .sum::<f64>()
        / w.len() as f64
}

pub fn log_evidence2(p: &Model2Params, x: &[f64], y: usize) -> f64 {
    let (m, v) = gaussian_out(&p.gmm_net, &onehot(y));
    let ll = |z: f64| {
        let (mx, vx) = gaussian_out(&p.decoder_net, &cat(&[z], &onehot(y)));
        (0..x.len())
            .map(|j| ln_normal(x[j], mx[j], vx[j]))
            .sum::<f64>()
    };
    p.label_prior()[y].ln() + log_integral_1d(m[0], v[0], 40_001, ll)
}

pub fn random_x(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn batch(rng: &mut Rng, rows: usize, d: usize) -> Matrix {
    Matrix::from_rows(&(0..rows).map(|_| random_x(rng, d)).collect::<Vec<_>>()).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn random_gaussian(rng: &mut Rng, d: usize) -> DiagGaussian {
    let mean = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let var = (0..d)
        .map(|_| rng.random_range(-1.5f64..1.5).exp())
        .collect();
    DiagGaussian::new(mean, var).unwrap()
}

/// `E_q[log p]` by tensor-product Gauss-Hermite over all `d` coordinates.
pub fn tensor_quadrature(p: &DiagGaussian, q: &DiagGaussian, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let d = q.dim();
    let norm = std::f64::consts::PI.powf(-(d as f64) / 2.0);
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut weight = norm;
        let mut logp = 0.0;
        for j in 0..d {
            weight *= w[idx[j]];
            let z = q.mean[j] + (2.0 * q.var[j]).sqrt() * x[idx[j]];
            logp += ln_normal(z, p.mean[j], p.var[j]);
        }
        total += weight * logp;
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            return total;
        }
    }
}
