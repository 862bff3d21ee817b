//! Whole check procedures that return a verdict instead of panicking, so the
//! integration tests can assert them and the acceptance run can report them.

use rand::Rng as _;
use rejinf::baselines::{
    augment_weight, fit_logistic, fuzzy_parcel, logreg_fit, reclassify, ProbabilityModel,
};
use rejinf::baselines::{ReclassifyRule, WeightedRow};
use rejinf::data::{LabeledDataset, UnlabeledDataset};
use rejinf::dists::{gauss_cross_entropy, gauss_logpdf, kl_diag_gauss, kl_gauss_std, DiagGaussian};
use rejinf::eval::{
    auc, gini, h_measure, recall_precision_at_default_rate, HMeasureParams, ScoredSet,
};
use rejinf::model1::{elbo_accept, elbo_reject, objective1, Noise1};
use rejinf::model2::{elbo_accept2, elbo_reject2, objective2, Noise2};
use rejinf::nn::Matrix;
use rejinf::rng::{seeded, standard_normals};
use rejinf::Result;

use super::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub ok: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            ok,
            detail: detail.into(),
        }
    }

    /// All parts pass; details joined in order.
    pub fn all(parts: Vec<Verdict>) -> Self {
        let ok = parts.iter().all(|v| v.ok);
        let detail = parts
            .iter()
            .map(|v| v.detail.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        Self { ok, detail }
    }

    #[track_caller]
    pub fn assert(&self) {
        assert!(self.ok, "{}", self.detail);
    }
}

const DIMS: [usize; 4] = [1, 2, 3, 5];

pub fn cross_entropy_quadrature(pairs: usize) -> Verdict {
    let mut rng = seeded(11);
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let d = DIMS[i % DIMS.len()];
        let p = random_gaussian(&mut rng, d);
        let q = random_gaussian(&mut rng, d);
        let closed = gauss_cross_entropy(&p, &q).unwrap();
        worst = worst.max((closed - tensor_quadrature(&p, &q, 8)).abs());
    }
    Verdict::new(
        worst < 1e-8,
        format!("{pairs} pairs, quadrature deviation {worst:.2e}"),
    )
}

pub fn cross_entropy_monte_carlo(pairs: usize, n: usize) -> Verdict {
    let mut rng = seeded(12);
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let d = DIMS[i % DIMS.len()];
        let p = random_gaussian(&mut rng, d);
        let q = random_gaussian(&mut rng, d);
        let closed = gauss_cross_entropy(&p, &q).unwrap();
        let (mut s, mut s2) = (0.0, 0.0);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            let eps = standard_normals(&mut rng, d);
            for j in 0..d {
                z[j] = q.mean[j] + q.var[j].sqrt() * eps[j];
            }
            let v = gauss_logpdf(&p, &z).unwrap();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / (n - 1) as f64).sqrt();
        let zscore = (mean - closed) / se;
        worst = worst.max(zscore.abs());
        if zscore.abs() > 3.0 {
            misses.push((i, zscore));
        }
    }
    Verdict::new(
        misses.is_empty(),
        format!("{pairs} pairs at {n} draws, largest |z| {worst:.2}, outside 3 SE: {misses:?}"),
    )
}

pub fn kl_nonnegative(pairs: usize) -> Verdict {
    let mut rng = seeded(13);
    let (mut negative, mut self_kl): (usize, f64) = (0, 0.0);
    for i in 0..pairs {
        let d = DIMS[i % DIMS.len()];
        let p = random_gaussian(&mut rng, d);
        let q = random_gaussian(&mut rng, d);
        negative += usize::from(kl_diag_gauss(&q, &p).unwrap() < 0.0);
        self_kl = self_kl.max(kl_diag_gauss(&q, &q).unwrap().abs());
    }
    Verdict::new(
        negative == 0 && self_kl < 1e-12,
        format!("{pairs} pairs, {negative} negative, largest |KL(q,q)| {self_kl:.1e}"),
    )
}

pub fn kl_std_consistency(pairs: usize) -> Verdict {
    let mut rng = seeded(15);
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let d = DIMS[i % DIMS.len()];
        let q = random_gaussian(&mut rng, d);
        let general = kl_diag_gauss(&q, &DiagGaussian::standard(d)).unwrap();
        worst = worst.max((kl_gauss_std(&q) - general).abs());
    }
    Verdict::new(
        worst < 1e-12,
        format!("standard-normal KL deviation {worst:.1e}"),
    )
}

/// Full-parameter gradient of `objective1` against central differences at
/// widths 4 and 8, latent dimension 2.
pub fn gradient1() -> Verdict {
    let mut rng = seeded(24);
    let mut parts = Vec::new();
    for (seed, width) in [(1u64, 4usize), (2, 8)] {
        let p = model1(300 + seed, 3, width, 2);
        let lx = batch(&mut rng, 5, 3);
        let labels = [0u8, 1, 1, 0, 1];
        let ux = batch(&mut rng, 6, 3);
        let nz = Noise1::sample(&mut rng, 5, 6, 2, 2);
        let alpha = 1.3;
        let (_, g) = objective1(&p, &lx, &labels, &ux, alpha, &nz).unwrap();
        let mut q = p.clone();
        let fd = central_diff(
            |t| {
                q.set_flat(t).unwrap();
                objective1(&q, &lx, &labels, &ux, alpha, &nz)
                    .unwrap()
                    .0
                    .loss
            },
            &p.to_flat(),
            1e-5,
        );
        let err = max_rel_error(&g.to_flat(), &fd, 1e-3);
        parts.push(Verdict::new(
            err < 1e-4,
            format!("model 1 width {width}: {err:.1e}"),
        ));
    }
    Verdict::all(parts)
}

/// Same for `objective2`, latent and auxiliary dimension 2.
pub fn gradient2() -> Verdict {
    let mut rng = seeded(35);
    let mut parts = Vec::new();
    for (seed, width, aux_samples) in [(1u64, 4usize, 1usize), (2, 8, 3)] {
        let p = model2(300 + seed, 3, width, 2, 2);
        let lx = batch(&mut rng, 5, 3);
        let labels = [1u8, 0, 1, 0, 0];
        let ux = batch(&mut rng, 6, 3);
        let nz = Noise2::sample(&mut rng, 5, 6, 2, aux_samples, 2, 2);
        let alpha = 0.7;
        let (_, g) = objective2(&p, &lx, &labels, &ux, alpha, &nz).unwrap();
        let mut q = p.clone();
        let fd = central_diff(
            |t| {
                q.set_flat(t).unwrap();
                objective2(&q, &lx, &labels, &ux, alpha, &nz)
                    .unwrap()
                    .0
                    .loss
            },
            &p.to_flat(),
            1e-5,
        );
        let err = max_rel_error(&g.to_flat(), &fd, 1e-3);
        parts.push(Verdict::new(
            err < 1e-4,
            format!("model 2 width {width}: {err:.1e}"),
        ));
    }
    Verdict::all(parts)
}

fn bound_verdict(name: &str, failures: Vec<String>, instances: u64) -> Verdict {
    Verdict::new(
        failures.is_empty(),
        format!(
            "{name}: {} of {instances} instances above log p(x,y) {failures:?}",
            failures.len()
        ),
    )
}

/// Supervised bound of 50 one-latent Model 1 instances against quadrature
/// of the log evidence, with 1e5 reparameterized draws each.
pub fn bound_validity1(instances: u64) -> Verdict {
    let mut rng = seeded(26);
    let mut failures = Vec::new();
    for seed in 0..instances {
        let p = model1(400 + seed, 2, 4, 1);
        let x = random_x(&mut rng, 2);
        let y = (seed % 2) as u8;
        let eps = noise(&mut rng, 100_000, 1);
        let b = elbo_accept(&p, &x, y, &eps).unwrap();
        let evidence = log_evidence1(&p, &x, y as usize);
        if evidence < b.total - 3.0 * b.reconstruction_se {
            failures.push(format!(
                "#{seed}: {evidence} < {} +- {}",
                b.total, b.reconstruction_se
            ));
        }
    }
    bound_verdict("model 1", failures, instances)
}

pub fn bound_validity2(instances: u64) -> Verdict {
    let mut rng = seeded(38);
    let mut failures = Vec::new();
    for seed in 0..instances {
        let p = model2(400 + seed, 2, 4, 1, 1);
        let x = random_x(&mut rng, 2);
        let y = (seed % 2) as u8;
        let eps = noise(&mut rng, 100_000, 1);
        let b = elbo_accept2(&p, &x, y, &eps).unwrap();
        let evidence = log_evidence2(&p, &x, y as usize);
        if evidence < b.total - 3.0 * b.reconstruction_se {
            failures.push(format!(
                "#{seed}: {evidence} < {} +- {}",
                b.total, b.reconstruction_se
            ));
        }
    }
    bound_verdict("model 2", failures, instances)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn reject_enumeration1() -> Verdict {
    let mut rng = seeded(22);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let p = model1(100 + seed, 3, 5, 2);
        let x = random_x(&mut rng, 3);
        let eps = noise(&mut rng, 2, 2);
        let pi = class_probs(&p.classifier_net, &x);
        let want: f64 = (0..2)
            .map(|y| pi[y] * (literal1(&p, &x, y, &eps) - pi[y].ln()))
            .sum();
        worst = worst.max(rel(elbo_reject(&p, &x, &eps).unwrap().total, want));
    }
    Verdict::new(
        worst <= 1e-12,
        format!("model 1 reject bound vs enumeration {worst:.1e}"),
    )
}

pub fn reject_enumeration2() -> Verdict {
    let mut rng = seeded(32);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let p = model2(100 + seed, 3, 5, 2, 2);
        let x = random_x(&mut rng, 3);
        let eps_z = noise(&mut rng, 2, 2);
        let eps_a = noise(&mut rng, 1 + (seed as usize % 4), 2);
        let got = elbo_reject2(&p, &x, &eps_z, &eps_a).unwrap().total;
        worst = worst.max(rel(got, literal_reject2(&p, &x, &eps_z, &eps_a)));
    }
    Verdict::new(
        worst <= 1e-12,
        format!("model 2 reject bound vs enumeration {worst:.1e}"),
    )
}

const CERTAIN: [(u8, [f64; 2]); 2] = [(0, [400.0, -400.0]), (1, [-400.0, 400.0])];

/// A classifier certain of `y` turns the reject bound into the accept bound
/// for `y` with no entropy term.
pub fn collapse1() -> Verdict {
    let mut rng = seeded(23);
    let (mut worst, mut entropy): (f64, f64) = (0.0, 0.0);
    for seed in 0..10 {
        let mut p = model1(200 + seed, 3, 4, 2);
        let x = random_x(&mut rng, 3);
        let eps = noise(&mut rng, 2, 2);
        for (y, logits) in CERTAIN {
            rig_softmax(&mut p.classifier_net, logits);
            let rej = elbo_reject(&p, &x, &eps).unwrap();
            let acc = elbo_accept(&p, &x, y, &eps).unwrap();
            worst = worst.max(rel(rej.total, acc.total));
            entropy = entropy.max(rej.classifier_term.abs());
        }
    }
    Verdict::new(
        worst <= 1e-12 && entropy == 0.0,
        format!("model 1 collapse {worst:.1e}, entropy term {entropy:.1e}"),
    )
}

pub fn collapse2() -> Verdict {
    let mut rng = seeded(33);
    let (mut worst, mut entropy): (f64, f64) = (0.0, 0.0);
    for seed in 0..10 {
        let mut p = model2(200 + seed, 3, 4, 2, 2);
        let x = random_x(&mut rng, 3);
        let eps_z = noise(&mut rng, 2, 2);
        let eps_a = noise(&mut rng, 1, 2);
        for (y, logits) in CERTAIN {
            rig_softmax(&mut p.classifier_net, logits);
            let rej = elbo_reject2(&p, &x, &eps_z, &eps_a).unwrap();
            let acc = elbo_accept2(&p, &x, y, &eps_z).unwrap();
            worst = worst.max(rel(rej.total, acc.total));
            entropy = entropy.max(rej.classifier_term.abs());
        }
    }
    Verdict::new(
        worst <= 1e-12 && entropy == 0.0,
        format!("model 2 collapse {worst:.1e}, entropy term {entropy:.1e}"),
    )
}

/// Nonzero gradient entries of component 1 (mean, variance and its one-hot
/// input column of the prior network) on an all-zero-label batch, and
/// whether component 0 receives any gradient at all.
fn routing_counts(mean: &Matrix, var: &Matrix, first_layer: &Matrix) -> (usize, bool) {
    let leaked = mean
        .row(1)
        .iter()
        .chain(var.row(1))
        .filter(|&&v| v != 0.0)
        .count()
        + (0..first_layer.rows())
            .filter(|&r| first_layer.get(r, 1) != 0.0)
            .count();
    let live = mean.row(0).iter().any(|&v| v != 0.0)
        && (0..first_layer.rows()).any(|r| first_layer.get(r, 0) != 0.0);
    (leaked, live)
}

pub fn routing1() -> Verdict {
    let mut rng = seeded(25);
    let p = model1(7, 3, 6, 2);
    let lx = batch(&mut rng, 4, 3);
    let nz = Noise1::sample(&mut rng, 4, 0, 1, 2);
    let (_, g) = objective1(&p, &lx, &[0; 4], &Matrix::zeros(0, 3), 2.0, &nz).unwrap();
    let (leaked, live) = routing_counts(
        &g.component_mean,
        &g.component_var,
        &g.gmm_net.layers()[0].weight,
    );
    Verdict::new(
        leaked == 0 && live,
        format!("model 1: {leaked} nonzero component-1 entries"),
    )
}

pub fn routing2() -> Verdict {
    let mut rng = seeded(37);
    let p = model2(8, 3, 6, 2, 2);
    let lx = batch(&mut rng, 4, 3);
    let nz = Noise2::sample(&mut rng, 4, 0, 1, 1, 2, 2);
    let (_, g) = objective2(&p, &lx, &[0; 4], &Matrix::zeros(0, 3), 2.0, &nz).unwrap();
    let (leaked, live) = routing_counts(
        &g.component_mean,
        &g.component_var,
        &g.gmm_net.layers()[0].weight,
    );
    Verdict::new(
        leaked == 0 && live,
        format!("model 2: {leaked} nonzero component-1 entries"),
    )
}

pub const GRID: [f64; 4] = [0.1, 0.35, 0.6, 0.85];

fn scored(scores: &[f64], labels: &[u8]) -> ScoredSet {
    ScoredSet::new(scores.to_vec(), labels.to_vec()).unwrap()
}

/// AUC, gini and recall/precision on every labelling and score pattern of
/// 2 to 8 rows over the 4-point grid.
pub fn metrics_exhaustive() -> Verdict {
    let (mut visited, mut auc_bad, mut gini_bad, mut rp_bad) = (0usize, 0usize, 0usize, 0usize);
    for n in 2..=8 {
        for_each_instance(n, &GRID, |s, y| {
            let ss = scored(s, y);
            let a = auc(&ss).unwrap();
            auc_bad += usize::from((a - brute_auc(s, y)).abs() >= 1e-12);
            gini_bad += usize::from((gini(&ss).unwrap() - (2.0 * a - 1.0)).abs() >= 1e-12);
            let rp = recall_precision_at_default_rate(&ss).unwrap();
            let (r, p) = brute_recall_precision(s, y);
            rp_bad += usize::from(rp.recall != r || rp.precision != p);
            visited += 1;
        });
    }
    let expected = (2..=8)
        .map(|n| ((1usize << n) - 2) * 4usize.pow(n as u32))
        .sum::<usize>();
    Verdict::new(
        visited == expected && auc_bad + gini_bad + rp_bad == 0,
        format!("{visited} instances, mismatches auc {auc_bad} gini {gini_bad} recall/precision {rp_bad}"),
    )
}

/// H-measure on every multiset of 2 to 8 rows over the grid (it depends on
/// neither row order nor anything else), against a 4000-cell cost grid.
pub fn h_measure_exhaustive() -> Verdict {
    let hp = HMeasureParams::default();
    let (mut worst, mut visited): (f64, usize) = (0.0, 0);
    for n in 2..=8 {
        for_each_multiset(n, &GRID, |s, y| {
            let h = h_measure(&scored(s, y), hp).unwrap();
            worst = worst.max((h - brute_h(s, y, hp.a, hp.b, 4000)).abs());
            visited += 1;
        });
    }
    Verdict::new(
        worst < 1e-6,
        format!("{visited} multisets, H deviation {worst:.1e}"),
    )
}

/// 1000 defaults against 1000 non-defaults arranged so that exactly 629389
/// of the 10^6 pairs are ordered correctly.
pub fn table_gini_pair() -> Verdict {
    let mut scores: Vec<f64> = (0..1000).map(|j| j as f64).collect();
    let mut labels = vec![0u8; 1000];
    let below = |i: usize| match i {
        i if i < 629 => 1000,
        629 => 389,
        _ => 0,
    };
    for i in 0..1000 {
        scores.push(below(i) as f64 - 0.5);
        labels.push(1);
    }
    let s = scored(&scores, &labels);
    let (a, g) = (auc(&s).unwrap(), gini(&s).unwrap());
    Verdict::new(
        (a - 0.629389).abs() < 1e-12 && (g - 0.258778).abs() < 1e-12,
        format!(
            "AUC {a:.6} gives GINI {g:.6}, off by {:.1e}",
            (g - 0.258778).abs()
        ),
    )
}

pub fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Overlapping classes: `y ~ Bernoulli(sigmoid(1.5 x0 - x1 + 0.3))`.
pub fn noisy_logistic(seed: u64, n: usize) -> LabeledDataset {
    let mut rng = seeded(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let x = standard_normals(&mut rng, 2);
        let p = 1.0 / (1.0 + (-(1.5 * x[0] - x[1] + 0.3)).exp());
        labels.push(u8::from(rng.random::<f64>() < p));
        rows.push(x);
    }
    LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), labels, names(2)).unwrap()
}

pub fn unlabeled(seed: u64, n: usize) -> UnlabeledDataset {
    let mut rng = seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| standard_normals(&mut rng, 2)).collect();
    UnlabeledDataset::new(Matrix::from_rows(&rows).unwrap(), names(2)).unwrap()
}

/// Scores rows by a fixed function of the first feature.
pub struct Fixed(pub fn(f64) -> f64);

impl ProbabilityModel for Fixed {
    fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(x.iter_rows().map(|r| (self.0)(r[0])).collect())
    }
}

pub fn augmentation_example() -> Verdict {
    let w = augment_weight(0.8);
    Verdict::new(
        (w - 5.0).abs() < 1e-12,
        format!("weight {w} at p_reject 0.8"),
    )
}

/// Each reject splits into a default row weighted `p` and a good row
/// weighted `1 - p`, so the total weight is one per row.
pub fn fuzzy_conservation() -> Verdict {
    let acc = noisy_logistic(4, 50);
    let rej = unlabeled(5, 30);
    let base = Fixed(|x0| 1.0 / (1.0 + (-x0).exp()));
    let (x, y, w) = fuzzy_parcel(&acc, &rej, &base).unwrap();
    let p = base.predict_proba(&rej.features).unwrap();
    let mut worst: f64 = (w.iter().sum::<f64>() - 80.0).abs();
    let mut layout = x.rows() == 110;
    for k in 0..30 {
        let (w1, w0) = (w[50 + 2 * k], w[50 + 2 * k + 1]);
        layout &= (y[50 + 2 * k], y[50 + 2 * k + 1]) == (1, 0);
        worst = worst.max((w1 - p[k]).abs()).max((w1 + w0 - 1.0).abs());
    }
    Verdict::new(
        layout && worst < 1e-12,
        format!("weight conservation deviation {worst:.1e}"),
    )
}

pub fn fuzzy_is_hard_reclassification() -> Verdict {
    let acc = noisy_logistic(6, 120);
    let rej = unlabeled(7, 80);
    let base = Fixed(|x0| if x0 > 0.1 { 1.0 } else { 0.0 });
    let (x, y, w) = fuzzy_parcel(&acc, &rej, &base).unwrap();
    let fuzzy = fit_logistic(&x, &y, &w, 0.3).unwrap();
    let hard = reclassify(&acc, &rej, &base, ReclassifyRule::Cutoff { cutoff: 0.5 }).unwrap();
    let re = fit_logistic(&hard.features, &hard.labels, &vec![1.0; hard.len()], 0.3).unwrap();
    let worst = fuzzy
        .coefficients
        .iter()
        .zip(&re.coefficients)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Verdict::new(
        worst < 1e-8,
        format!("fuzzy vs reclassified coefficients {worst:.1e}"),
    )
}

/// Every fourth row duplicated against the same rows at weight 2, with and
/// without the ridge penalty.
pub fn duplication_is_weighting() -> Verdict {
    let data = noisy_logistic(2, 200);
    let mut dup = Vec::new();
    let mut dbl = Vec::new();
    for (i, r) in data.features.iter_rows().enumerate() {
        let row = WeightedRow {
            features: r.to_vec(),
            label: data.labels[i],
            weight: 1.0,
        };
        if i % 4 == 0 {
            dup.push(row.clone());
            dbl.push(WeightedRow {
                weight: 2.0,
                ..row.clone()
            });
        } else {
            dbl.push(row.clone());
        }
        dup.push(row);
    }
    let mut worst: f64 = 0.0;
    for l2 in [0.0, 1.0] {
        let a = logreg_fit(&dup, l2).unwrap();
        let b = logreg_fit(&dbl, l2).unwrap();
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            worst = worst.max((x - y).abs());
        }
    }
    Verdict::new(
        worst < 1e-10,
        format!("duplicated vs doubled coefficients {worst:.1e}"),
    )
}
