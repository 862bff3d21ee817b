use serde::{Deserialize, Serialize};

use super::ScoredSet;
use crate::baselines::fit_logistic;
use crate::dists::PROB_FLOOR;
use crate::nn::{sigmoid, Matrix};
use crate::{Error, Result};

/// Input transform of Platt scaling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlattInput {
    /// `sigmoid(a s + b)`.
    #[default]
    Raw,
    /// `sigmoid(a logit(s) + b)`.
    Logit,
}

/// A fitted score-to-probability map. Fitted maps return values inside
/// `[1e-7, 1 - 1e-7]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationMap {
    Identity,
    Platt {
        a: f64,
        b: f64,
        input: PlattInput,
    },
    /// `sigmoid(a ln s - b ln(1 - s) + c)`.
    Beta {
        a: f64,
        b: f64,
        c: f64,
    },
}

fn clamp01(s: f64) -> f64 {
    s.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

fn logit(s: f64) -> f64 {
    let s = clamp01(s);
    (s / (1.0 - s)).ln()
}

impl CalibrationMap {
    pub fn apply(&self, s: f64) -> f64 {
        match *self {
            CalibrationMap::Identity => s,
            CalibrationMap::Platt { a, b, input } => {
                let v = match input {
                    PlattInput::Raw => s,
                    PlattInput::Logit => logit(s),
                };
                clamp01(sigmoid(a * v + b))
            }
            CalibrationMap::Beta { a, b, c } => {
                let s = clamp01(s);
                clamp01(sigmoid(a * s.ln() - b * (1.0 - s).ln() + c))
            }
        }
    }

    pub fn apply_all(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply(s)).collect()
    }

    /// Non-decreasing on (0, 1).
    pub fn is_monotone(&self) -> bool {
        match *self {
            CalibrationMap::Identity => true,
            CalibrationMap::Platt { a, .. } => a >= 0.0,
            CalibrationMap::Beta { a, b, .. } => a >= 0.0 && b >= 0.0,
        }
    }
}

fn fit_columns(cols: &[Vec<f64>], labels: &[u8]) -> Result<Vec<f64>> {
    let n = labels.len();
    let mut data = Vec::with_capacity(n * cols.len());
    for i in 0..n {
        data.extend(cols.iter().map(|c| c[i]));
    }
    let x = Matrix::from_vec(n, cols.len(), data)?;
    Ok(fit_logistic(&x, labels, &vec![1.0; n], 0.0)?.coefficients)
}

fn check(set: &ScoredSet) -> Result<()> {
    let n1 = set.n_positive();
    if n1 == 0 || n1 == set.len() {
        return Err(Error::UndefinedMetric(
            "calibration needs both classes".into(),
        ));
    }
    Ok(())
}

/// Platt scaling by logistic likelihood. A degenerate fit (separable
/// validation data) falls back to the identity map with a warning. A
/// negative slope is kept and reported.
pub fn platt_fit(set: &ScoredSet, input: PlattInput) -> Result<CalibrationMap> {
    check(set)?;
    let v: Vec<f64> = match input {
        PlattInput::Raw => set.scores.clone(),
        PlattInput::Logit => set.scores.iter().map(|&s| logit(s)).collect(),
    };
    match fit_columns(&[v], &set.labels) {
        Ok(c) => {
            if c[1] < 0.0 {
                log::warn!(
                    "Platt slope {} is negative: scores are anti-correlated with labels",
                    c[1]
                );
            }
            Ok(CalibrationMap::Platt {
                a: c[1],
                b: c[0],
                input,
            })
        }
        Err(e @ (Error::FitDivergence(_) | Error::Contract(_))) => {
            log::warn!("Platt fit degenerate ({e}); using the identity map");
            Ok(CalibrationMap::Identity)
        }
        Err(e) => Err(e),
    }
}

/// Beta calibration: logistic regression on `(ln s, -ln(1 - s))`. A
/// feature whose coefficient comes out negative is dropped and the rest
/// refitted, so the returned map is monotone.
pub fn beta_calibrate_fit(set: &ScoredSet) -> Result<CalibrationMap> {
    check(set)?;
    let f1: Vec<f64> = set.scores.iter().map(|&s| clamp01(s).ln()).collect();
    let f2: Vec<f64> = set
        .scores
        .iter()
        .map(|&s| -(1.0 - clamp01(s)).ln())
        .collect();
    let fit = || -> Result<CalibrationMap> {
        let c = fit_columns(&[f1.clone(), f2.clone()], &set.labels)?;
        let (a, b) = (c[1], c[2]);
        if a >= 0.0 && b >= 0.0 {
            return Ok(CalibrationMap::Beta { a, b, c: c[0] });
        }
        if a < 0.0 && b < 0.0 {
            // Anti-correlated scores: no monotone member beats the base rate.
            let p = set.n_positive() as f64 / set.len() as f64;
            return Ok(CalibrationMap::Beta {
                a: 0.0,
                b: 0.0,
                c: (p / (1.0 - p)).ln(),
            });
        }
        if a < 0.0 {
            let c = fit_columns(std::slice::from_ref(&f2), &set.labels)?;
            Ok(CalibrationMap::Beta {
                a: 0.0,
                b: c[1].max(0.0),
                c: c[0],
            })
        } else {
            let c = fit_columns(std::slice::from_ref(&f1), &set.labels)?;
            Ok(CalibrationMap::Beta {
                a: c[1].max(0.0),
                b: 0.0,
                c: c[0],
            })
        }
    };
    match fit() {
        Ok(m) => Ok(m),
        Err(e @ (Error::FitDivergence(_) | Error::Contract(_))) => {
            log::warn!("beta calibration degenerate ({e}); using the identity map");
            Ok(CalibrationMap::Identity)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_stay_in_unit_interval() {
        let m = CalibrationMap::Platt {
            a: 50.0,
            b: -3.0,
            input: PlattInput::Raw,
        };
        for s in [0.0, 0.3, 1.0] {
            let p = m.apply(s);
            assert!(p > 0.0 && p < 1.0);
        }
        let b = CalibrationMap::Beta {
            a: 1.0,
            b: 1.0,
            c: 0.0,
        };
        for s in [0.0, 1.0] {
            assert!(b.apply(s).is_finite());
        }
        assert!((b.apply(0.3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn separable_validation_falls_back_to_identity() {
        let set = ScoredSet::new(vec![0.1, 0.2, 0.8, 0.9], vec![0, 0, 1, 1]).unwrap();
        assert_eq!(
            platt_fit(&set, PlattInput::Raw).unwrap(),
            CalibrationMap::Identity
        );
    }
}
