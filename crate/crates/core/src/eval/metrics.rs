use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::{Error, Result};

/// Scores `P(y = 1)` with their observed labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::dim("scored set", scores.len(), labels.len()));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite {
                term: "scores".into(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::contract("labels must be 0 or 1"));
        }
        Ok(Self { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    fn class_counts(&self) -> Result<(usize, usize)> {
        let n1 = self.n_positive();
        let n0 = self.len() - n1;
        if n0 == 0 || n1 == 0 {
            return Err(Error::UndefinedMetric(
                "both classes must be present".into(),
            ));
        }
        Ok((n0, n1))
    }

    /// Indices sorted by descending score, ties kept in original order.
    fn descending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        idx
    }
}

/// Mann-Whitney estimate with ties counted as one half.
pub fn auc(s: &ScoredSet) -> Result<f64> {
    let (n0, n1) = s.class_counts()?;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s.scores[a].total_cmp(&s.scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && s.scores[idx[j + 1]] == s.scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if s.labels[k] == 1 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let (n0, n1) = (n0 as f64, n1 as f64);
    Ok((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1))
}

pub fn gini(s: &ScoredSet) -> Result<f64> {
    Ok(2.0 * auc(s)? - 1.0)
}

/// Empirical ROC points `(FPR, TPR)` from the strictest threshold to the
/// loosest, one point per distinct score.
pub fn roc_points(s: &ScoredSet) -> Result<Vec<(f64, f64)>> {
    let (n0, n1) = s.class_counts()?;
    let idx = s.descending();
    let mut pts = vec![(0.0, 0.0)];
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let v = s.scores[idx[i]];
        while i < idx.len() && s.scores[idx[i]] == v {
            if s.labels[idx[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push((fp as f64 / n0 as f64, tp as f64 / n1 as f64));
    }
    Ok(pts)
}

/// Parameters of the Beta cost-severity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HMeasureParams {
    pub a: f64,
    pub b: f64,
}

impl Default for HMeasureParams {
    fn default() -> Self {
        Self { a: 2.0, b: 2.0 }
    }
}

/// Upper concave hull of ROC points sorted by FPR.
fn roc_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Hand's H-measure: one minus the severity-averaged minimum misclassification
/// loss, relative to the loss of the best trivial classifier.
///
/// A row is called positive (default) above the threshold. At cost `c` the
/// loss of ROC point `(f, t)` is `c p0 f + (1 - c) p1 (1 - t)`; the minimum
/// over the ROC hull is piecewise linear in `c`, so the Beta-weighted
/// integral is evaluated exactly with regularized incomplete beta functions.
pub fn h_measure(s: &ScoredSet, params: HMeasureParams) -> Result<f64> {
    let (n0, _) = s.class_counts()?;
    if !(params.a > 0.0 && params.b > 0.0) {
        return Err(Error::contract("severity parameters must be positive"));
    }
    let p0 = n0 as f64 / s.len() as f64;
    let p1 = 1.0 - p0;
    let hull = roc_hull(&roc_points(s)?);
    let loss = integrate_envelope(&hull, p0, p1, params);
    let max = integrate_envelope(&[(0.0, 0.0), (1.0, 1.0)], p0, p1, params);
    Ok((1.0 - loss / max).clamp(0.0, 1.0))
}

/// `int_0^1 min_k [c p0 f_k + (1 - c) p1 (1 - t_k)] w(c) dc` over hull vertices.
fn integrate_envelope(hull: &[(f64, f64)], p0: f64, p1: f64, hp: HMeasureParams) -> f64 {
    let (a, b) = (hp.a, hp.b);
    let mean = a / (a + b);
    let w = |lo: f64, hi: f64| beta_reg(a, b, hi) - beta_reg(a, b, lo);
    let cw = |lo: f64, hi: f64| mean * (beta_reg(a + 1.0, b, hi) - beta_reg(a + 1.0, b, lo));
    // Vertex k is optimal on [c_k, c_{k-1}], where c_k separates k and k+1.
    let k_max = hull.len() - 1;
    let mut upper = 1.0;
    let mut total = 0.0;
    for k in 0..=k_max {
        let lower = if k == k_max {
            0.0
        } else {
            let df = hull[k + 1].0 - hull[k].0;
            let dt = hull[k + 1].1 - hull[k].1;
            let denom = p0 * df + p1 * dt;
            if denom > 0.0 {
                (p1 * dt / denom).min(upper)
            } else {
                upper
            }
        };
        if upper > lower {
            let (f, t) = hull[k];
            let slope = p0 * f - p1 * (1.0 - t);
            let icept = p1 * (1.0 - t);
            total += slope * cw(lower, upper) + icept * w(lower, upper);
        }
        upper = lower;
    }
    total
}

/// How the classification threshold is derived from the default rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Flag the top `round(rate * n)` scores.
    #[default]
    Quantile,
    /// Flag scores at or above the rate itself.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallPrecision {
    pub recall: f64,
    pub precision: f64,
    pub threshold: f64,
    /// Rows flagged as defaults.
    pub flagged: usize,
    pub true_positives: usize,
}

pub fn recall_precision_at_default_rate(s: &ScoredSet) -> Result<RecallPrecision> {
    recall_precision(s, ThresholdRule::Quantile)
}

/// Recall and precision of class 1 at the empirical default-rate threshold.
pub fn recall_precision(s: &ScoredSet, rule: ThresholdRule) -> Result<RecallPrecision> {
    let (_, n1) = s.class_counts()?;
    let rate = n1 as f64 / s.len() as f64;
    let (flags, threshold) = match rule {
        ThresholdRule::Quantile => {
            let k = (rate * s.len() as f64).round() as usize;
            if k == 0 {
                return Err(Error::UndefinedMetric(
                    "no row flagged; precision undefined".into(),
                ));
            }
            let idx = s.descending();
            let mut flags = vec![false; s.len()];
            for &i in &idx[..k] {
                flags[i] = true;
            }
            (flags, s.scores[idx[k - 1]])
        }
        ThresholdRule::Absolute => (s.scores.iter().map(|&v| v >= rate).collect(), rate),
    };
    let flagged = flags.iter().filter(|&&f| f).count();
    if flagged == 0 {
        return Err(Error::UndefinedMetric(
            "no row flagged; precision undefined".into(),
        ));
    }
    let tp = flags
        .iter()
        .zip(&s.labels)
        .filter(|(&f, &y)| f && y == 1)
        .count();
    Ok(RecallPrecision {
        recall: tp as f64 / n1 as f64,
        precision: tp as f64 / flagged as f64,
        threshold,
        flagged,
        true_positives: tp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreMoments {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
    /// Excess kurtosis `m4 / m2^2 - 3`.
    pub kurtosis: f64,
    /// `m3 / m2^(3/2)`.
    pub skewness: f64,
}

/// Moments of a score distribution. Constant scores report zero spread,
/// skewness and kurtosis.
pub fn score_moments(scores: &[f64]) -> ScoreMoments {
    let n = scores.len() as f64;
    if scores.is_empty() {
        return ScoreMoments {
            mean: f64::NAN,
            std: 0.0,
            kurtosis: 0.0,
            skewness: 0.0,
        };
    }
    let mean = scores.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &s in scores {
        let d = s - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = if scores.len() > 1 {
        (m2 / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 <= 0.0 {
        return ScoreMoments {
            mean,
            std: 0.0,
            kurtosis: 0.0,
            skewness: 0.0,
        };
    }
    ScoreMoments {
        mean,
        std,
        kurtosis: m4 / (m2 * m2) - 3.0,
        skewness: m3 / m2.powf(1.5),
    }
}

/// The fixed-key report written by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub gini: f64,
    pub h_measure: f64,
    pub recall: f64,
    pub precision: f64,
    pub mean: f64,
    pub std: f64,
    pub kurtosis: f64,
    pub skewness: f64,
    pub threshold: f64,
    pub n_test: usize,
    pub seed: u64,
}

pub fn metrics_report(
    s: &ScoredSet,
    seed: u64,
    rule: ThresholdRule,
    hp: HMeasureParams,
) -> Result<MetricsReport> {
    let a = auc(s)?;
    let rp = recall_precision(s, rule)?;
    let m = score_moments(&s.scores);
    Ok(MetricsReport {
        auc: a,
        gini: 2.0 * a - 1.0,
        h_measure: h_measure(s, hp)?,
        recall: rp.recall,
        precision: rp.precision,
        mean: m.mean,
        std: m.std,
        kurtosis: m.kurtosis,
        skewness: m.skewness,
        threshold: rp.threshold,
        n_test: s.len(),
        seed,
    })
}
