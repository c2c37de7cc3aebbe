//! Regression metrics: MAE, RMSE and the coefficient of determination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(truth: &[f64], predicted: &[f64], min_len: usize) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::domain(
            "predicted",
            format!(
                "length {} does not match {} true values",
                predicted.len(),
                truth.len()
            ),
        ));
    }
    if truth.len() < min_len {
        return Err(Error::domain(
            "true_values",
            format!("need at least {min_len} samples, got {}", truth.len()),
        ));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(truth, predicted, 1)?;
    let sum: f64 = truth.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum();
    Ok(sum / truth.len() as f64)
}

/// Mean squared error. Shared by the training losses.
pub fn mse(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(truth, predicted, 1)?;
    let sum: f64 = truth.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(sum / truth.len() as f64)
}

/// Root mean squared error.
pub fn rmse(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    mse(truth, predicted).map(f64::sqrt)
}

/// Coefficient of determination `1 − SS_res / SS_tot`. Can be negative.
/// Constant `truth` makes it undefined and is reported as a domain error.
pub fn r2(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(truth, predicted, 2)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::domain(
            "true_values",
            "R² is undefined when all true values are identical",
        ));
    }
    let ss_res: f64 = truth.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Held-out evaluation of one model on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_descriptor: String,
    pub split_seed: u64,
    pub n: usize,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    /// `(true, predicted)` body-fat pairs, in test-set order.
    pub pairs: Vec<(f64, f64)>,
}

impl EvalReport {
    pub fn from_pairs(
        model_descriptor: impl Into<String>,
        split_seed: u64,
        truth: &[f64],
        predicted: &[f64],
    ) -> Result<Self> {
        Ok(Self {
            model_descriptor: model_descriptor.into(),
            split_seed,
            n: truth.len(),
            mae: mae(truth, predicted)?,
            rmse: rmse(truth, predicted)?,
            r2: r2(truth, predicted)?,
            pairs: truth.iter().copied().zip(predicted.iter().copied()).collect(),
        })
    }

    /// `true,predicted` CSV of the pairs.
    pub fn pairs_csv(&self) -> String {
        let mut out = String::from("true,predicted\n");
        for (t, p) in &self.pairs {
            out.push_str(&format!("{t},{p}\n"));
        }
        out
    }
}
