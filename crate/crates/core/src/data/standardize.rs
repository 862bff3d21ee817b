use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

/// Per-column affine scaling `(x - mean) / std`.
///
/// Columns whose standard deviation is zero on the fitting data carry no
/// information and are dropped from the output; [`Standardizer::dropped`]
/// reports them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_names: Vec<String>,
    /// Input column index of every retained column.
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on the row-concatenation of `parts` (population standard deviation).
    pub fn fit(parts: &[&Matrix], names: &[String]) -> Result<Self> {
        let cols = names.len();
        let mut n = 0usize;
        let mut sum = vec![0.0; cols];
        for p in parts {
            if p.cols() != cols {
                return Err(Error::dim("standardizer fit", cols, p.cols()));
            }
            for r in p.iter_rows() {
                for (s, v) in sum.iter_mut().zip(r) {
                    *s += v;
                }
            }
            n += p.rows();
        }
        if n == 0 {
            return Err(Error::contract("cannot fit a standardizer on zero rows"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut ss = vec![0.0; cols];
        for p in parts {
            for r in p.iter_rows() {
                for j in 0..cols {
                    ss[j] += (r[j] - mean[j]).powi(2);
                }
            }
        }
        let mut out = Self {
            input_names: names.to_vec(),
            kept: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for j in 0..cols {
            let sd = (ss[j] / n as f64).sqrt();
            if sd > 0.0 && sd.is_finite() {
                out.kept.push(j);
                out.mean.push(mean[j]);
                out.std.push(sd);
            }
        }
        if out.kept.is_empty() {
            return Err(Error::contract("every column is constant"));
        }
        Ok(out)
    }

    pub fn output_names(&self) -> Vec<String> {
        self.kept
            .iter()
            .map(|&j| self.input_names[j].clone())
            .collect()
    }

    pub fn dropped(&self) -> Vec<String> {
        (0..self.input_names.len())
            .filter(|j| !self.kept.contains(j))
            .map(|j| self.input_names[j].clone())
            .collect()
    }

    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.input_names.len() {
            return Err(Error::Schema(format!(
                "standardizer expects {} columns, got {}",
                self.input_names.len(),
                features.cols()
            )));
        }
        let mut out = Matrix::zeros(features.rows(), self.kept.len());
        for (i, r) in features.iter_rows().enumerate() {
            let o = out.row_mut(i);
            for (k, &j) in self.kept.iter().enumerate() {
                o[k] = (r[j] - self.mean[k]) / self.std[k];
            }
        }
        Ok(out)
    }
}
