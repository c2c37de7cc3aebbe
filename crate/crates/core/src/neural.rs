//! A small dense feed-forward regressor trained by mini-batch gradient
//! descent with early stopping.
//!
//! Layers are `a_l = act(W_l a_{l-1} + b_l)` with the activation applied to
//! hidden layers only; the single output unit is linear. Weight matrices are
//! stored flat in row-major `out × in` order. Inputs are z-scored with the
//! model's [`Standardization`] before the first layer, and the network's
//! output is mapped back to body-fat units through [`TargetScale`].
//!
//! All randomness comes from [`SplitMix64`] streams of one seed: weight
//! initialization ([`Stream::Init`]), the holdout carve-out
//! ([`Stream::Holdout`]) and per-epoch batch order ([`Stream::Shuffle`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Design;
use crate::error::{Error, Result};
use crate::formulas::BfPercent;
use crate::linalg::Matrix;
use crate::metrics;
use crate::rng::{SplitMix64, Stream};
use crate::scaling::Standardization;
use crate::trace::{TraceEntry, TrainingTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative given the pre-activation `pre` and the activation `out`.
    #[inline]
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected relu or tanh)"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

/// Affine map from the network output to the prediction: `mean + sd · output`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub sd: f64,
}

impl TargetScale {
    pub const IDENTITY: TargetScale = TargetScale { mean: 0.0, sd: 1.0 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    /// Per layer, `layer_dims[l+1] × layer_dims[l]` weights in row-major order.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub standardization: Standardization,
    pub target_scale: TargetScale,
    pub feature_names: Vec<String>,
}

/// Gradients (or any per-parameter values) shaped like an [`MlpModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// All values, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// `|a − b| / max(|a|, |b|, 1e-7)`. The floor keeps gradients that are zero
/// up to roundoff from producing meaningless ratios.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

/// Largest [`relative_error`] over corresponding entries of two gradient sets.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    a.flatten()
        .iter()
        .zip(b.flatten())
        .map(|(x, y)| relative_error(*x, y))
        .fold(0.0, f64::max)
}

/// Activations of one forward pass: `pre[l]`, `post[l]` for each layer, plus the input.
struct ForwardCache {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in 0..self.weights.len() {
            let wl = self.weights[l].len();
            if index < wl {
                return &mut self.weights[l][index];
            }
            index -= wl;
            let bl = self.biases[l].len();
            if index < bl {
                return &mut self.biases[l][index];
            }
            index -= bl;
        }
        panic!("parameter index out of range");
    }

    /// Checks the shape and finiteness invariants.
    pub fn validate(&self) -> Result<()> {
        validate_dims(&self.layer_dims)?;
        let layers = self.layer_dims.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Config(format!(
                "expected {layers} weight and bias tensors"
            )));
        }
        for l in 0..layers {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if self.weights[l].len() != fan_in * fan_out || self.biases[l].len() != fan_out {
                return Err(Error::Config(format!(
                    "layer {l} parameters do not match dims {fan_in} → {fan_out}"
                )));
            }
        }
        if self
            .weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("model has non-finite parameters".into()));
        }
        if !(self.target_scale.sd > 0.0 && self.target_scale.sd.is_finite() && self.target_scale.mean.is_finite()) {
            return Err(Error::Config("target scale needs a finite mean and positive sd".into()));
        }
        if self.standardization.dim() != self.input_dim()
            || (!self.feature_names.is_empty() && self.feature_names.len() != self.input_dim())
        {
            return Err(Error::Config(
                "standardization or feature names do not match the input dimension".into(),
            ));
        }
        self.standardization.validate()
    }

    fn forward_cached(&self, z: &[f64]) -> ForwardCache {
        let layers = self.n_layers();
        let mut pre = Vec::with_capacity(layers);
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(layers);
        for l in 0..layers {
            let input = if l == 0 { z } else { &post[l - 1] };
            let fan_in = self.layer_dims[l];
            let p: Vec<f64> = self.biases[l]
                .iter()
                .enumerate()
                .map(|(o, b)| {
                    let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                    b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
                })
                .collect();
            let a = if l + 1 == layers {
                p.clone()
            } else {
                p.iter().map(|&v| self.activation.apply(v)).collect()
            };
            pre.push(p);
            post.push(a);
        }
        ForwardCache {
            input: z.to_vec(),
            pre,
            post,
        }
    }

    fn predict_standardized(&self, z: &[f64]) -> f64 {
        let out = self.forward_cached(z).post.last().expect("at least one layer")[0];
        self.target_scale.mean + self.target_scale.sd * out
    }

    fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.input_dim() {
            return Err(Error::Config(format!(
                "model expects {} features, got {n}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Mean squared error over standardized rows.
    fn batch_loss(&self, z_rows: &[&[f64]], targets: &[f64]) -> f64 {
        let preds: Vec<f64> = z_rows.iter().map(|z| self.predict_standardized(z)).collect();
        loss_mse(&preds, targets).expect("non-empty batch")
    }

    /// Exact MSE gradients on standardized rows.
    fn gradients_standardized(&self, z_rows: &[&[f64]], targets: &[f64]) -> Gradients {
        let mut grads = Gradients::zeros_like(self);
        let scale = 2.0 / z_rows.len() as f64;
        let TargetScale { mean, sd } = self.target_scale;
        let layers = self.n_layers();
        for (z, &y) in z_rows.iter().zip(targets) {
            let cache = self.forward_cached(z);
            let prediction = mean + sd * cache.post[layers - 1][0];
            let mut delta = vec![scale * (prediction - y) * sd];
            for l in (0..layers).rev() {
                let input = if l == 0 { &cache.input } else { &cache.post[l - 1] };
                let fan_in = self.layer_dims[l];
                for (o, d) in delta.iter().enumerate() {
                    let row = &mut grads.weights[l][o * fan_in..(o + 1) * fan_in];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                    grads.biases[l][o] += d;
                }
                if l > 0 {
                    let mut next = vec![0.0; fan_in];
                    for (o, d) in delta.iter().enumerate() {
                        let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                        for (n, w) in next.iter_mut().zip(row) {
                            *n += w * d;
                        }
                    }
                    for (i, n) in next.iter_mut().enumerate() {
                        *n *= self
                            .activation
                            .derivative(cache.pre[l - 1][i], cache.post[l - 1][i]);
                    }
                    delta = next;
                }
            }
        }
        grads
    }

    fn step(&mut self, grads: &Gradients, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.iter_mut().zip(g).for_each(|(p, g)| *p -= learning_rate * g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.iter_mut().zip(g).for_each(|(p, g)| *p -= learning_rate * g);
        }
    }

    fn standardized_batch(&self, features: &Matrix, targets: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_arity(features.cols())?;
        if features.rows() == 0 || features.rows() != targets.len() {
            return Err(Error::Config(format!(
                "batch has {} feature rows and {} targets",
                features.rows(),
                targets.len()
            )));
        }
        Ok((0..features.rows())
            .map(|r| self.standardization.apply(features.row(r)))
            .collect())
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(
            "an MLP needs at least an input and an output layer".into(),
        ));
    }
    if let Some(i) = layer_dims.iter().position(|&d| d == 0) {
        return Err(Error::Config(format!("layer {i} has zero width")));
    }
    if *layer_dims.last().expect("non-empty") != 1 {
        return Err(Error::Config("the output layer must have width 1".into()));
    }
    Ok(())
}

/// Seeded model with weights uniform in ±1/√fan_in and zero biases. Input
/// standardization and target scale are the identity until training replaces them.
pub fn init_mlp(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<MlpModel> {
    validate_dims(layer_dims)?;
    let mut rng = SplitMix64::stream(seed, Stream::Init);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let limit = 1.0 / (fan_in as f64).sqrt();
        weights.push(
            (0..fan_in * fan_out)
                .map(|_| rng.uniform(-limit, limit))
                .collect(),
        );
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpModel {
        layer_dims: layer_dims.to_vec(),
        activation,
        weights,
        biases,
        standardization: Standardization::identity(layer_dims[0]),
        target_scale: TargetScale::IDENTITY,
        feature_names: (0..layer_dims[0]).map(|i| format!("x{i}")).collect(),
    })
}

/// Prediction for one raw feature vector.
pub fn forward(model: &MlpModel, features: &[f64]) -> Result<BfPercent> {
    model.check_arity(features.len())?;
    let z = model.standardization.apply(features);
    Ok(BfPercent::new(model.predict_standardized(&z)))
}

pub fn predict_rows(model: &MlpModel, x: &Matrix) -> Result<Vec<f64>> {
    (0..x.rows())
        .map(|r| forward(model, x.row(r)).map(BfPercent::value))
        .collect()
}

/// Mean squared error between predictions and targets.
pub fn loss_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    metrics::mse(targets, predictions)
}

/// Exact MSE gradients for a batch of raw feature rows.
pub fn backprop_gradients(model: &MlpModel, features: &Matrix, targets: &[f64]) -> Result<Gradients> {
    let rows = model.standardized_batch(features, targets)?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(model.gradients_standardized(&refs, targets))
}

/// Central-difference estimate `(L(θ+ε) − L(θ−ε)) / 2ε` for every parameter.
pub fn finite_diff_gradients(
    model: &MlpModel,
    features: &Matrix,
    targets: &[f64],
    epsilon: f64,
) -> Result<Gradients> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let rows = model.standardized_batch(features, targets)?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let mut probe = model.clone();
    let mut values = Vec::with_capacity(model.parameter_count());
    for i in 0..model.parameter_count() {
        let original = *probe.parameter_mut(i);
        *probe.parameter_mut(i) = original + epsilon;
        let plus = probe.batch_loss(&refs, targets);
        *probe.parameter_mut(i) = original - epsilon;
        let minus = probe.batch_loss(&refs, targets);
        *probe.parameter_mut(i) = original;
        values.push((plus - minus) / (2.0 * epsilon));
    }
    let mut grads = Gradients::zeros_like(model);
    let mut it = values.into_iter();
    for (w, b) in grads.weights.iter_mut().zip(grads.biases.iter_mut()) {
        w.iter_mut().for_each(|v| *v = it.next().expect("count matches"));
        b.iter_mut().for_each(|v| *v = it.next().expect("count matches"));
    }
    Ok(grads)
}

/// Hidden layers and activation of a regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: vec![16, 8],
            activation: Activation::Relu,
        }
    }
}

impl Architecture {
    pub fn layer_dims(&self, inputs: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(inputs);
        dims.extend_from_slice(&self.hidden);
        dims.push(1);
        dims
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stopping_patience: usize,
    pub early_stopping_min_delta: f64,
    /// Fraction of training rows held out to monitor early stopping; 0 monitors training loss.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 16,
            max_epochs: 50,
            early_stopping_patience: 10,
            early_stopping_min_delta: 1e-5,
            holdout_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "batch_size and max_epochs must be positive".into(),
            ));
        }
        if !(self.early_stopping_min_delta >= 0.0) {
            return Err(Error::Config("min_delta must be non-negative".into()));
        }
        if !(0.0..0.5).contains(&self.holdout_fraction) {
            return Err(Error::Config(format!(
                "holdout_fraction {} is not in [0, 0.5)",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

/// Result of [`train_mlp`]. `model` holds the parameters of `best_epoch`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub trace: TrainingTrace,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainOutcome {
    /// The loss early stopping watched at `entry`.
    pub fn monitored(entry: &TraceEntry) -> f64 {
        entry.holdout_loss.unwrap_or(entry.train_loss)
    }
}

/// Mini-batch gradient descent with early stopping and best-epoch restoration.
///
/// The network learns the z-scored target (mean and SD of the fitting rows);
/// the trace reports losses in body-fat units.
///
/// After each epoch the monitored loss (holdout if configured, training
/// otherwise) is compared with the best so far. An epoch that fails to beat
/// it by more than `min_delta` counts towards patience, and training stops
/// after `max(patience, 1)` such epochs in a row. The returned parameters are
/// those of the epoch with the lowest monitored loss.
pub fn train_mlp(design: &Design, arch: &Architecture, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let n = design.len();
    let mut order: Vec<usize> = (0..n).collect();
    let (fit_rows, holdout_rows) = if config.holdout_fraction > 0.0 {
        let n_hold = (config.holdout_fraction * n as f64).floor() as usize;
        if n_hold == 0 {
            return Err(Error::Config(format!(
                "holdout_fraction {} selects no rows out of {n}",
                config.holdout_fraction
            )));
        }
        SplitMix64::stream(config.seed, Stream::Holdout).shuffle(&mut order);
        let mut fit = order.split_off(n_hold);
        let mut hold = order;
        fit.sort_unstable();
        hold.sort_unstable();
        (fit, hold)
    } else {
        (order, Vec::new())
    };
    if fit_rows.len() < 2 {
        return Err(Error::domain(
            "records",
            format!("need at least 2 training samples, got {}", fit_rows.len()),
        ));
    }

    let fit_x = design.x.select_rows(&fit_rows);
    let standardization = Standardization::fit(&fit_x, &design.feature_names)?;
    let z: Vec<Vec<f64>> = (0..n)
        .map(|r| standardization.apply(design.x.row(r)))
        .collect();

    let mut model = init_mlp(&arch.layer_dims(design.x.cols()), arch.activation, config.seed)?;
    model.standardization = standardization;
    model.feature_names = design.feature_names.clone();
    let (target_mean, target_sd) =
        crate::dataset::mean_sd(fit_rows.iter().map(|&i| design.y[i]));
    model.target_scale = TargetScale {
        mean: target_mean,
        sd: if target_sd > 0.0 { target_sd } else { 1.0 },
    };
    // Steps follow the gradient of the MSE on the z-scored target, which is
    // the body-fat MSE divided by sd².
    let step_size = config.learning_rate / (model.target_scale.sd * model.target_scale.sd);

    let rows_of = |idx: &[usize]| -> (Vec<&[f64]>, Vec<f64>) {
        (
            idx.iter().map(|&i| z[i].as_slice()).collect(),
            idx.iter().map(|&i| design.y[i]).collect(),
        )
    };
    let (fit_z, fit_y) = rows_of(&fit_rows);
    let (hold_z, hold_y) = rows_of(&holdout_rows);

    let mut shuffler = SplitMix64::stream(config.seed, Stream::Shuffle);
    let mut batch_order = fit_rows.clone();
    let mut trace = TrainingTrace::default();
    let mut best: Option<(usize, f64, MlpModel)> = None;
    let mut reference = f64::INFINITY;
    let mut stale = 0usize;
    let mut stopped_early = false;

    for epoch in 0..config.max_epochs {
        shuffler.shuffle(&mut batch_order);
        for chunk in batch_order.chunks(config.batch_size) {
            let (bz, by) = rows_of(chunk);
            let grads = model.gradients_standardized(&bz, &by);
            model.step(&grads, step_size);
        }

        let train_loss = model.batch_loss(&fit_z, &fit_y);
        let holdout_loss = (!hold_z.is_empty()).then(|| model.batch_loss(&hold_z, &hold_y));
        for loss in std::iter::once(train_loss).chain(holdout_loss) {
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
        }
        let entry = TraceEntry {
            epoch,
            train_loss,
            holdout_loss,
        };
        trace.push(entry);

        let monitored = TrainOutcome::monitored(&entry);
        if best.as_ref().is_none_or(|(_, b, _)| monitored < *b) {
            best = Some((epoch, monitored, model.clone()));
        }
        if monitored < reference - config.early_stopping_min_delta {
            reference = monitored;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.early_stopping_patience.max(1) {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_epoch, _, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        trace,
        best_epoch,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_design(seed: u64, n: usize, p: usize, noise: f64) -> Design {
        let mut rng = SplitMix64::new(seed);
        let coef: Vec<f64> = (0..p).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..p).map(|_| rng.uniform(-2.0, 2.0)).collect();
            y.push(5.0 + row.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + noise * rng.uniform(-1.0, 1.0));
            data.extend(row);
        }
        Design::new(
            (0..p).map(|i| format!("f{i}")).collect(),
            Matrix::from_row_major(n, p, data),
            y,
        )
    }

    #[test]
    fn init_is_deterministic_and_validated() {
        let a = init_mlp(&[5, 16, 8, 1], Activation::Relu, 7).unwrap();
        let b = init_mlp(&[5, 16, 8, 1], Activation::Relu, 7).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_ne!(a, init_mlp(&[5, 16, 8, 1], Activation::Relu, 8).unwrap());
        let limit = 1.0 / 5f64.sqrt();
        assert!(a.weights[0].iter().all(|w| w.abs() <= limit));
        assert!(a.biases.iter().flatten().all(|b| *b == 0.0));
        assert!(init_mlp(&[5, 16, 0, 1], Activation::Relu, 7).is_err());
        assert!(init_mlp(&[5, 2], Activation::Relu, 7).is_err());
        assert!(init_mlp(&[5], Activation::Relu, 7).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut m = init_mlp(&[3, 4, 1], Activation::Tanh, 1).unwrap();
        m.weights.iter_mut().flatten().for_each(|w| *w = 0.0);
        assert_eq!(forward(&m, &[1.0, -2.0, 9.0]).unwrap().value(), 0.0);
        assert!(matches!(forward(&m, &[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn single_layer_is_affine() {
        let mut m = init_mlp(&[2, 1], Activation::Relu, 3).unwrap();
        m.weights[0] = vec![2.0, -3.0];
        m.biases[0] = vec![0.5];
        m.standardization = Standardization {
            mean: vec![1.0, 2.0],
            sd: vec![2.0, 4.0],
        };
        // standardized input = (1.5, -0.5)
        assert_eq!(forward(&m, &[4.0, 0.0]).unwrap().value(), 2.0 * 1.5 + 3.0 * 0.5 + 0.5);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(loss_mse(&[2.0], &[5.0]).unwrap(), 9.0);
        assert!(loss_mse(&[], &[]).is_err());
    }

    #[test]
    fn gradients_vanish_at_exact_fit() {
        let m = init_mlp(&[2, 3, 1], Activation::Tanh, 11).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2], [0.7, -1.0]]);
        let y = predict_rows(&m, &x).unwrap();
        let g = backprop_gradients(&m, &x, &y).unwrap();
        assert!(g.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_by_one_hand_gradient() {
        // L = (w x + b − y)^2 → dL/dw = 2 (w x + b − y) x, dL/db = 2 (w x + b − y)
        let mut m = init_mlp(&[1, 1], Activation::Relu, 0).unwrap();
        m.weights[0] = vec![1.5];
        m.biases[0] = vec![-0.5];
        let x = Matrix::from_rows(&[[2.0]]);
        let g = backprop_gradients(&m, &x, &[4.0]).unwrap();
        assert_eq!(g.weights[0][0], 2.0 * (3.0 - 0.5 - 4.0) * 2.0);
        assert_eq!(g.biases[0][0], 2.0 * (3.0 - 0.5 - 4.0));
        let fd = finite_diff_gradients(&m, &x, &[4.0], 1e-5).unwrap();
        assert!(max_relative_error(&g, &fd) < 1e-8);
    }

    #[test]
    fn finite_diff_of_zero_network() {
        let mut m = init_mlp(&[2, 3, 1], Activation::Relu, 5).unwrap();
        m.weights.iter_mut().flatten().for_each(|w| *w = 0.0);
        let x = Matrix::from_rows(&[[0.3, 0.4]]);
        let fd = finite_diff_gradients(&m, &x, &[0.0], 1e-5).unwrap();
        assert!(fd.flatten().iter().all(|v| v.abs() < 1e-9));
        assert!(finite_diff_gradients(&m, &x, &[0.0], 0.0).is_err());
        assert!(backprop_gradients(&m, &x, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn realizable_affine_target_is_learned() {
        let d = random_design(1, 200, 5, 0.0);
        let config = TrainConfig {
            learning_rate: 0.05,
            batch_size: 16,
            max_epochs: 400,
            early_stopping_patience: 50,
            early_stopping_min_delta: 0.0,
            holdout_fraction: 0.0,
            seed: 3,
        };
        let arch = Architecture {
            hidden: vec![],
            activation: Activation::Relu,
        };
        let out = train_mlp(&d, &arch, &config).unwrap();
        let best = &out.trace.entries[out.best_epoch];
        assert!(best.train_loss < 1e-6, "loss {}", best.train_loss);
    }

    #[test]
    fn patience_zero_stops_at_first_non_improvement() {
        let d = random_design(2, 60, 3, 2.0);
        let config = TrainConfig {
            learning_rate: 0.05,
            max_epochs: 500,
            early_stopping_patience: 0,
            early_stopping_min_delta: 1e-3,
            holdout_fraction: 0.2,
            seed: 9,
            ..TrainConfig::default()
        };
        let out = train_mlp(&d, &Architecture::default(), &config).unwrap();
        assert!(out.stopped_early);
        let losses: Vec<f64> = out.trace.entries.iter().map(TrainOutcome::monitored).collect();
        let last = losses.len() - 1;
        // every epoch before the last improved on all earlier ones by more than min_delta
        for i in 1..last {
            assert!(losses[i] < losses[i - 1] - 1e-3);
        }
        assert!(losses[last] >= losses[last - 1] - 1e-3);
    }

    #[test]
    fn training_is_deterministic_and_restores_best() {
        let d = random_design(4, 120, 4, 3.0);
        let config = TrainConfig {
            max_epochs: 80,
            seed: 21,
            ..TrainConfig::default()
        };
        let a = train_mlp(&d, &Architecture::default(), &config).unwrap();
        let b = train_mlp(&d, &Architecture::default(), &config).unwrap();
        assert_eq!(a, b);
        a.trace.validate().unwrap();
        let best = TrainOutcome::monitored(&a.trace.entries[a.best_epoch]);
        assert!(a.trace.entries.iter().all(|e| best <= TrainOutcome::monitored(e)));
        assert!(a.trace.entries.iter().all(|e| e.holdout_loss.is_some()));
    }

    #[test]
    fn bad_configs_rejected() {
        let d = random_design(5, 10, 2, 0.1);
        let arch = Architecture::default();
        for config in [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { holdout_fraction: 0.5, ..TrainConfig::default() },
            TrainConfig { holdout_fraction: 0.05, ..TrainConfig::default() },
        ] {
            assert!(matches!(train_mlp(&d, &arch, &config), Err(Error::Config(_))));
        }
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let d = random_design(6, 50, 3, 1.0);
        let config = TrainConfig {
            learning_rate: 1e6,
            holdout_fraction: 0.0,
            ..TrainConfig::default()
        };
        let arch = Architecture { hidden: vec![], activation: Activation::Relu };
        assert!(matches!(
            train_mlp(&d, &arch, &config),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let m = init_mlp(&[3, 4, 1], Activation::Tanh, 2).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.starts_with(r#"{"layer_dims":[3,4,1],"activation":"tanh","weights":"#));
        let back: MlpModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
