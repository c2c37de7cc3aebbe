//! Linear body-fat regression on z-scored features.
//!
//! [`fit_ols`] solves least squares exactly with a Householder QR
//! factorization; [`fit_gd`] reaches the same optimum by full-batch gradient
//! descent on the mean squared error. Both store coefficients in
//! standardized units, so `|coefficient|` compares predictor strength
//! directly. [`LinearModel::raw_coefficients`] converts back to raw units.

use serde::{Deserialize, Serialize};

use crate::dataset::Design;
use crate::error::{Error, Result};
use crate::formulas::BfPercent;
use crate::linalg::{Matrix, Qr};
use crate::scaling::Standardization;
use crate::trace::{TraceEntry, TrainingTrace};

/// Condition estimates above this are treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

/// Losses above this abort gradient descent as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    /// One coefficient per feature, in %BF per standard deviation.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub standardization: Standardization,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    /// Intercept and slopes in the original feature units.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let st = &self.standardization;
        let slopes: Vec<f64> = self
            .coefficients
            .iter()
            .zip(&st.sd)
            .map(|(b, s)| b / s)
            .collect();
        let shift: f64 = slopes.iter().zip(&st.mean).map(|(b, m)| b * m).sum();
        (self.intercept - shift, slopes)
    }

    /// Name of the largest-magnitude coefficient; ties go to the earlier feature.
    pub fn strongest_predictor(&self) -> &str {
        let mut best = 0;
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.abs() > self.coefficients[best].abs() {
                best = i;
            }
        }
        &self.feature_names[best]
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.coefficients.len();
        if self.feature_names.len() != p || self.standardization.dim() != p {
            return Err(Error::Config(format!(
                "linear model has {} names, {p} coefficients and {} standardization entries",
                self.feature_names.len(),
                self.standardization.dim()
            )));
        }
        self.standardization.validate()
    }
}

fn check_shape(design: &Design) -> Result<()> {
    let (n, p) = (design.x.rows(), design.x.cols());
    if p == 0 {
        return Err(Error::Config("design has no feature columns".into()));
    }
    if n <= p {
        return Err(Error::domain(
            "X",
            format!("need more rows than columns, got {n} × {p}"),
        ));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Exact least-squares fit with intercept on standardized features.
pub fn fit_ols(design: &Design) -> Result<LinearModel> {
    check_shape(design)?;
    let standardization = Standardization::fit(&design.x, &design.feature_names)?;
    let z = standardization.apply_matrix(&design.x);

    // Columns of z have zero mean, so the intercept decouples: it is mean(y)
    // and the slopes solve the centered problem.
    let intercept = mean(&design.y);
    let centered: Vec<f64> = design.y.iter().map(|v| v - intercept).collect();

    let qr = Qr::new(&z);
    let condition = qr.condition_estimate();
    if !(condition <= MAX_CONDITION) {
        let diag = qr.r_diagonal();
        let largest = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut columns: Vec<String> = diag
            .iter()
            .enumerate()
            .filter(|(_, d)| d.abs() <= largest / MAX_CONDITION)
            .map(|(j, _)| design.feature_names[j].clone())
            .collect();
        if columns.is_empty() {
            let (j, _) = diag
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("at least one column");
            columns.push(design.feature_names[j].clone());
        }
        return Err(Error::Singular { condition, columns });
    }
    let coefficients = qr.solve_least_squares(&centered);

    Ok(LinearModel {
        feature_names: design.feature_names.clone(),
        coefficients,
        intercept,
        standardization,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once an epoch lowers the loss by less than this.
    pub tolerance: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 5000,
            tolerance: 1e-10,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

fn linear_outputs(z: &Matrix, weights: &[f64], bias: f64, out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = bias + z.row(r).iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Full-batch gradient descent on the mean squared error, starting from zero.
///
/// Each trace entry holds the loss before that epoch's update. Iteration ends
/// when an epoch improves the loss by less than `tolerance` or after
/// `max_epochs` entries.
pub fn fit_gd(design: &Design, config: &GdConfig) -> Result<(LinearModel, TrainingTrace)> {
    config.validate()?;
    check_shape(design)?;
    let standardization = Standardization::fit(&design.x, &design.feature_names)?;
    let z = standardization.apply_matrix(&design.x);
    let (n, p) = (z.rows(), z.cols());

    let mut weights = vec![0.0; p];
    let mut bias = 0.0;
    let mut outputs = vec![0.0; n];
    let mut grad = vec![0.0; p];
    let mut trace = TrainingTrace::default();
    let mut previous: Option<f64> = None;

    for epoch in 0..config.max_epochs {
        linear_outputs(&z, &weights, bias, &mut outputs);
        let residuals: Vec<f64> = outputs.iter().zip(&design.y).map(|(o, y)| o - y).collect();
        let loss = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Divergence { epoch, loss });
        }
        trace.push(TraceEntry {
            epoch,
            train_loss: loss,
            holdout_loss: None,
        });
        if let Some(prev) = previous {
            let improvement = prev - loss;
            if (0.0..config.tolerance).contains(&improvement) {
                break;
            }
        }
        previous = Some(loss);

        let scale = 2.0 / n as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (r, res) in residuals.iter().enumerate() {
            for (g, x) in grad.iter_mut().zip(z.row(r)) {
                *g += res * x;
            }
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * scale * g;
        }
        bias -= config.learning_rate * scale * residuals.iter().sum::<f64>();
    }

    let model = LinearModel {
        feature_names: design.feature_names.clone(),
        coefficients: weights,
        intercept: bias,
        standardization,
    };
    Ok((model, trace))
}

/// Predicted body fat for one raw feature vector.
pub fn predict_linear(model: &LinearModel, features: &[f64]) -> Result<BfPercent> {
    if features.len() != model.n_features() {
        return Err(Error::Config(format!(
            "model expects {} features ({}), got {}",
            model.n_features(),
            model.feature_names.join(", "),
            features.len()
        )));
    }
    let z = model.standardization.apply(features);
    let value = model.intercept
        + z.iter()
            .zip(&model.coefficients)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    Ok(BfPercent::new(value))
}

/// Predictions for every row of `x`.
pub fn predict_rows(model: &LinearModel, x: &Matrix) -> Result<Vec<f64>> {
    (0..x.rows())
        .map(|r| predict_linear(model, x.row(r)).map(BfPercent::value))
        .collect()
}
