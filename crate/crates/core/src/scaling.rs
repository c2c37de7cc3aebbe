use serde::{Deserialize, Serialize};

use crate::dataset::mean_sd;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Per-feature z-score parameters fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardization {
    /// Identity transform (mean 0, sd 1) for `dim` features.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            sd: vec![1.0; dim],
        }
    }

    /// Fit column means and sample SDs. A constant column is rejected with a
    /// singular-design error naming it.
    pub fn fit(x: &Matrix, names: &[String]) -> Result<Self> {
        let mut mean = Vec::with_capacity(x.cols());
        let mut sd = Vec::with_capacity(x.cols());
        let mut constant = Vec::new();
        for c in 0..x.cols() {
            let (m, s) = mean_sd((0..x.rows()).map(|r| x.get(r, c)));
            if !(s > 0.0) {
                constant.push(names.get(c).cloned().unwrap_or_else(|| format!("#{c}")));
            }
            mean.push(m);
            sd.push(s);
        }
        if !constant.is_empty() {
            return Err(Error::Singular {
                condition: f64::INFINITY,
                columns: constant,
            });
        }
        Ok(Self { mean, sd })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_matrix(&self, x: &Matrix) -> Matrix {
        let mut data = Vec::with_capacity(x.rows() * x.cols());
        for r in 0..x.rows() {
            data.extend(self.apply(x.row(r)));
        }
        Matrix::from_row_major(x.rows(), x.cols(), data)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.mean.len() != self.sd.len() {
            return Err(Error::Config(
                "standardization mean and sd lengths differ".into(),
            ));
        }
        if self.sd.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config(
                "standardization needs finite means and positive sds".into(),
            ));
        }
        Ok(())
    }
}
