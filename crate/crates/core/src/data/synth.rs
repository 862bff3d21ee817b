//! Synthetic loan applications with a known Bayes-optimal score.
//!
//! Outcomes follow `y ~ Bernoulli(default_rate)` and features
//! `x | y ~ N(mu_y, I)` with `mu_1 - mu_0 = delta * u` along the unit
//! direction `u = (1, ..., 1) / sqrt(d)`, centred so the population mean is
//! zero. Everything that matters lives on the projection `t = u . x`:
//!
//! - the true posterior is `logit P(y=1|x) = delta (t - (m0 + m1)/2) + log(rho / (1 - rho))`,
//! - the population Bayes AUC is `Phi(delta / sqrt 2)`,
//! - an application is accepted when `-k t + s e > c` with `e ~ N(0, 1)`,
//!   so accepted applicants are the lower-risk ones and selection depends on
//!   `x` alone (the accepted-set posterior equals the population posterior).
//!
//! Each Gaussian column can then be mapped affinely so the accepted and
//! rejected column means hit prescribed targets, and independent Bernoulli
//! dummy columns can be appended.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{LabeledDataset, UnlabeledDataset};
use crate::nn::{sigmoid, Matrix};
use crate::rng::{seeded, Rng};
use crate::{Error, Result};

/// Selection rule: accept when `-weight * t + noise * e > c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptRule {
    pub weight: f64,
    pub noise: f64,
}

impl Default for AcceptRule {
    fn default() -> Self {
        Self {
            weight: 1.0,
            noise: 1.0,
        }
    }
}

/// Accepted and rejected means for one Gaussian column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentTarget {
    pub column: usize,
    pub accepted_mean: f64,
    pub rejected_mean: f64,
}

/// Independent Bernoulli column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DummyColumn {
    pub name: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_applications: usize,
    /// Number of Gaussian columns.
    pub dim: usize,
    pub default_rate: f64,
    /// Population AUC of the true posterior; fixes the class separation.
    pub bayes_auc: f64,
    /// Fraction of applications accepted.
    pub accept_rate: f64,
    pub accept_rule: AcceptRule,
    /// Names of the Gaussian columns (default `x1..xd`).
    pub column_names: Option<Vec<String>>,
    pub moment_targets: Vec<MomentTarget>,
    pub dummies: Vec<DummyColumn>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_applications: 10_000,
            dim: 4,
            default_rate: 0.2,
            bayes_auc: 0.85,
            accept_rate: 0.5,
            accept_rule: AcceptRule::default(),
            column_names: None,
            moment_targets: Vec::new(),
            dummies: Vec::new(),
        }
    }
}

/// Output column `j` is `scale * latent_j + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub scale: f64,
    pub shift: f64,
}

/// Closed-form facts about a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracle {
    pub dim: usize,
    pub default_rate: f64,
    /// Distance between the class means.
    pub delta: f64,
    pub rule: AcceptRule,
    /// Acceptance threshold `c`.
    pub threshold: f64,
    pub maps: Vec<ColumnMap>,
    pub n_dummies: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub accepted: LabeledDataset,
    pub rejected: UnlabeledDataset,
    /// Outcomes of the rejected applications, never shown to models.
    pub rejected_labels: Vec<u8>,
    pub accepted_posterior: Vec<f64>,
    pub rejected_posterior: Vec<f64>,
    pub oracle: SyntheticOracle,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

impl SyntheticOracle {
    /// Projection means `(m0, m1)`.
    pub fn class_means(&self) -> (f64, f64) {
        let r = self.default_rate;
        (-r * self.delta, (1.0 - r) * self.delta)
    }

    fn spread(&self) -> f64 {
        self.rule.weight.hypot(self.rule.noise)
    }

    /// `(alpha_0, alpha_1)` with `P(accept | y) = Phi(alpha_y)`.
    fn alphas(&self) -> (f64, f64) {
        let (m0, m1) = self.class_means();
        let s = self.spread();
        let k = self.rule.weight;
        (
            (-self.threshold - k * m0) / s,
            (-self.threshold - k * m1) / s,
        )
    }

    pub fn population_bayes_auc(&self) -> f64 {
        std_normal().cdf(self.delta / std::f64::consts::SQRT_2)
    }

    pub fn accept_probability(&self) -> f64 {
        let n = std_normal();
        let (a0, a1) = self.alphas();
        (1.0 - self.default_rate) * n.cdf(a0) + self.default_rate * n.cdf(a1)
    }

    pub fn accepted_default_rate(&self) -> f64 {
        let (_, a1) = self.alphas();
        self.default_rate * std_normal().cdf(a1) / self.accept_probability()
    }

    /// `E[t | accepted]` and `E[t | rejected]`.
    pub fn projection_means(&self) -> (f64, f64) {
        let n = std_normal();
        let (m0, m1) = self.class_means();
        let (a0, a1) = self.alphas();
        let ks = self.rule.weight / self.spread();
        let (mut acc, mut rej, mut pa, mut pr) = (0.0, 0.0, 0.0, 0.0);
        for (m, a, w) in [
            (m0, a0, 1.0 - self.default_rate),
            (m1, a1, self.default_rate),
        ] {
            let (phi, cdf) = (n.pdf(a), n.cdf(a));
            acc += w * cdf * (m - ks * phi / cdf);
            rej += w * (1.0 - cdf) * (m + ks * phi / (1.0 - cdf));
            pa += w * cdf;
            pr += w * (1.0 - cdf);
        }
        (acc / pa, rej / pr)
    }

    /// Latent column `j` of an output row.
    fn latent(&self, row: &[f64], j: usize) -> f64 {
        (row[j] - self.maps[j].shift) / self.maps[j].scale
    }

    /// True `P(y = 1 | x)` for a generated row (dummy columns are ignored).
    pub fn posterior(&self, row: &[f64]) -> f64 {
        let u = 1.0 / (self.dim as f64).sqrt();
        let t: f64 = (0..self.dim).map(|j| u * self.latent(row, j)).sum();
        let (m0, m1) = self.class_means();
        let r = self.default_rate;
        sigmoid(self.delta * (t - 0.5 * (m0 + m1)) + (r / (1.0 - r)).ln())
    }

    /// AUC of the true posterior among accepted applications, by quadrature
    /// over the projection `t`.
    pub fn accepted_bayes_auc(&self) -> f64 {
        let n = std_normal();
        let (m0, m1) = self.class_means();
        let (k, s, c) = (self.rule.weight, self.rule.noise, self.threshold);
        let accept = |t: f64| {
            if s > 0.0 {
                n.cdf((-k * t - c) / s)
            } else if -k * t > c {
                1.0
            } else {
                0.0
            }
        };
        let (lo, hi) = (m0.min(m1) - 12.0, m0.max(m1) + 12.0);
        let steps = 40_000;
        let h = (hi - lo) / steps as f64;
        let (mut f0_cum, mut num, mut z0, mut z1) = (0.0, 0.0, 0.0, 0.0);
        let dens = |t: f64, m: f64| n.pdf(t - m) * accept(t);
        let mut prev0 = dens(lo, m0);
        let mut prev1 = dens(lo, m1);
        for i in 1..=steps {
            let t = lo + i as f64 * h;
            let (d0, d1) = (dens(t, m0), dens(t, m1));
            let new_cum = f0_cum + 0.5 * h * (prev0 + d0);
            // Integrand f1(t) F0(t), trapezoid rule.
            num += 0.5 * h * (prev1 * f0_cum + d1 * new_cum);
            z0 += 0.5 * h * (prev0 + d0);
            z1 += 0.5 * h * (prev1 + d1);
            f0_cum = new_cum;
            prev0 = d0;
            prev1 = d1;
        }
        num / (z0 * z1)
    }
}

/// Separation giving a population Bayes AUC of `auc`.
pub fn delta_for_auc(auc: f64) -> f64 {
    std::f64::consts::SQRT_2 * std_normal().inverse_cdf(auc)
}

fn solve_threshold(oracle: &mut SyntheticOracle, target: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        oracle.threshold = mid;
        if oracle.accept_probability() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn validate(config: &GeneratorConfig) -> Result<()> {
    let unit = |v: f64| v > 0.0 && v < 1.0;
    if config.dim == 0 || config.n_applications == 0 {
        return Err(Error::contract("dim and n_applications must be positive"));
    }
    if !unit(config.default_rate) || !unit(config.accept_rate) {
        return Err(Error::contract(
            "default_rate and accept_rate must lie in (0, 1)",
        ));
    }
    if !(config.bayes_auc > 0.5 && config.bayes_auc < 1.0) {
        return Err(Error::contract("bayes_auc must lie in (0.5, 1)"));
    }
    let r = config.accept_rule;
    if !(r.weight >= 0.0 && r.noise >= 0.0) || r.weight.hypot(r.noise) == 0.0 {
        return Err(Error::contract(
            "accept rule needs a non-negative weight and noise, not both zero",
        ));
    }
    if let Some(names) = &config.column_names {
        if names.len() != config.dim {
            return Err(Error::dim("column names", config.dim, names.len()));
        }
    }
    for t in &config.moment_targets {
        if t.column >= config.dim {
            return Err(Error::contract(format!(
                "moment target column {} out of range",
                t.column
            )));
        }
        if r.weight == 0.0 {
            return Err(Error::contract(
                "moment targets need an informative accept rule",
            ));
        }
    }
    if config.dummies.iter().any(|d| !(0.0..=1.0).contains(&d.p)) {
        return Err(Error::contract("dummy probabilities must lie in [0, 1]"));
    }
    Ok(())
}

/// Builds the oracle (threshold and column maps) without sampling.
pub fn synth_oracle(config: &GeneratorConfig) -> Result<SyntheticOracle> {
    validate(config)?;
    let mut oracle = SyntheticOracle {
        dim: config.dim,
        default_rate: config.default_rate,
        delta: delta_for_auc(config.bayes_auc),
        rule: config.accept_rule,
        threshold: 0.0,
        maps: vec![
            ColumnMap {
                scale: 1.0,
                shift: 0.0
            };
            config.dim
        ],
        n_dummies: config.dummies.len(),
    };
    oracle.threshold = solve_threshold(&mut oracle, config.accept_rate);
    let (ta, tr) = oracle.projection_means();
    let u = 1.0 / (config.dim as f64).sqrt();
    for t in &config.moment_targets {
        let (ea, er) = (u * ta, u * tr);
        let scale = (t.accepted_mean - t.rejected_mean) / (ea - er);
        oracle.maps[t.column] = ColumnMap {
            scale,
            shift: t.accepted_mean - scale * ea,
        };
    }
    Ok(oracle)
}

pub fn synth_generate(config: &GeneratorConfig, seed: u64) -> Result<SyntheticData> {
    let oracle = synth_oracle(config)?;
    let mut rng: Rng = seeded(seed);
    let normal = rand_distr::StandardNormal;
    let d = config.dim;
    let width = d + config.dummies.len();
    let (m0, m1) = oracle.class_means();
    let u = 1.0 / (d as f64).sqrt();

    let mut acc_rows = Vec::new();
    let mut acc_labels = Vec::new();
    let mut rej_rows = Vec::new();
    let mut rej_labels = Vec::new();
    let mut row = vec![0.0; width];
    for _ in 0..config.n_applications {
        let y = u8::from(rng.random::<f64>() < config.default_rate);
        let m = if y == 1 { m1 } else { m0 };
        let mut t = 0.0;
        for j in 0..d {
            let z: f64 = rng.sample(normal);
            let latent = u * m + z;
            t += u * latent;
            row[j] = oracle.maps[j].scale * latent + oracle.maps[j].shift;
        }
        for (k, dummy) in config.dummies.iter().enumerate() {
            row[d + k] = f64::from(u8::from(rng.random::<f64>() < dummy.p));
        }
        let e: f64 = rng.sample(normal);
        if -config.accept_rule.weight * t + config.accept_rule.noise * e > oracle.threshold {
            acc_rows.extend_from_slice(&row);
            acc_labels.push(y);
        } else {
            rej_rows.extend_from_slice(&row);
            rej_labels.push(y);
        }
    }
    let mut names: Vec<String> = match &config.column_names {
        Some(n) => n.clone(),
        None => (1..=d).map(|j| format!("x{j}")).collect(),
    };
    names.extend(config.dummies.iter().map(|dm| dm.name.clone()));

    let n_acc = acc_labels.len();
    let accepted = LabeledDataset::new(
        Matrix::from_vec(n_acc, width, acc_rows)?,
        acc_labels,
        names.clone(),
    )?;
    let rejected =
        UnlabeledDataset::new(Matrix::from_vec(rej_labels.len(), width, rej_rows)?, names)?;
    let accepted_posterior = accepted
        .features
        .iter_rows()
        .map(|r| oracle.posterior(r))
        .collect();
    let rejected_posterior = rejected
        .features
        .iter_rows()
        .map(|r| oracle.posterior(r))
        .collect();
    Ok(SyntheticData {
        accepted,
        rejected,
        rejected_labels: rej_labels,
        accepted_posterior,
        rejected_posterior,
        oracle,
    })
}
