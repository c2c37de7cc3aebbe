#![allow(dead_code)]

use std::path::PathBuf;

use bodyfat_core::dataset::{self, AnthropometricRecord, Design, Units};
use bodyfat_core::linalg::Matrix;
use bodyfat_core::neural::{init_mlp, Activation, MlpModel, TargetScale};
use bodyfat_core::rng::{SplitMix64, Stream};
use bodyfat_core::scaling::Standardization;
use nalgebra::{DMatrix, DVector};

pub fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/bodyfat.csv")
}

pub fn canonical() -> Vec<AnthropometricRecord> {
    dataset::load_csv(data_path(), Units::Imperial).expect("canonical dataset loads")
}

pub const FEATURES: [&str; 5] = ["weight", "chest", "abdomen", "hip", "thigh"];

pub fn canonical_design() -> Design {
    dataset::select_features(&canonical(), &FEATURES, "bodyfat").unwrap()
}

/// `y = 5 + x·β + noise`, with features of differing scales and β in ±3.
pub fn synthetic(seed: u64, n: usize, p: usize, noise: f64) -> Design {
    let mut rng = SplitMix64::new(seed);
    let beta: Vec<f64> = (0..p).map(|_| rng.uniform(-3.0, 3.0)).collect();
    let scale: Vec<f64> = (0..p).map(|_| rng.uniform(0.5, 20.0)).collect();
    let shift: Vec<f64> = (0..p).map(|_| rng.uniform(-50.0, 50.0)).collect();
    let mut data = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|j| shift[j] + scale[j] * rng.uniform(-1.0, 1.0)).collect();
        let signal: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        y.push(5.0 + signal + noise * rng.uniform(-1.0, 1.0));
        data.extend(row);
    }
    Design::new(
        (0..p).map(|j| format!("x{j}")).collect(),
        Matrix::from_row_major(n, p, data),
        y,
    )
}

/// Raw intercept and slopes from the Moore–Penrose pseudo-inverse of `[1 | X]`.
pub fn pinv_fit(design: &Design) -> (f64, Vec<f64>) {
    let (n, p) = (design.x.rows(), design.x.cols());
    let a = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { design.x.get(r, c - 1) });
    let b = DVector::from_column_slice(&design.y);
    let pinv = a.pseudo_inverse(1e-12).expect("svd converges");
    let beta = pinv * b;
    (beta[0], beta.iter().skip(1).copied().collect())
}

/// ‖a − b‖ / max(‖b‖, tiny).
pub fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

pub fn with_intercept(intercept: f64, slopes: &[f64]) -> Vec<f64> {
    std::iter::once(intercept).chain(slopes.iter().copied()).collect()
}

/// Straight matrix-algebra forward pass over the model's public parameters.
pub fn reference_forward(model: &MlpModel, x: &[f64]) -> f64 {
    reference_pass(model, x).0
}

/// Output and the smallest |pre-activation| over hidden units.
pub fn reference_pass(model: &MlpModel, x: &[f64]) -> (f64, f64) {
    let mut nearest_kink = f64::INFINITY;
    let st = &model.standardization;
    let mut a = DVector::from_iterator(
        x.len(),
        x.iter().enumerate().map(|(i, v)| (v - st.mean[i]) / st.sd[i]),
    );
    let layers = model.weights.len();
    for l in 0..layers {
        let w = DMatrix::from_row_slice(model.layer_dims[l + 1], model.layer_dims[l], &model.weights[l]);
        let z = w * a + DVector::from_column_slice(&model.biases[l]);
        a = if l + 1 == layers {
            z
        } else {
            nearest_kink = z.iter().fold(nearest_kink, |m, v| m.min(v.abs()));
            match model.activation {
                Activation::Relu => z.map(|v| v.max(0.0)),
                Activation::Tanh => z.map(f64::tanh),
            }
        };
    }
    (model.target_scale.mean + model.target_scale.sd * a[0], nearest_kink)
}

/// Central differences are not an oracle across a relu kink, so relu cases
/// with a hidden pre-activation this close to zero are redrawn.
pub const KINK_MARGIN: f64 = 1e-3;

pub fn differentiable(model: &MlpModel, x: &Matrix) -> bool {
    model.activation != Activation::Relu
        || (0..x.rows()).all(|r| reference_pass(model, x.row(r)).1 > KINK_MARGIN)
}

/// Random architecture, standardization, target scale and batch.
pub fn random_case(seed: u64) -> (MlpModel, Matrix, Vec<f64>) {
    let mut rng = SplitMix64::new(seed ^ 0x5eed);
    let inputs = 1 + rng.below(6);
    let mut dims = vec![inputs];
    for _ in 0..rng.below(4) {
        dims.push(1 + rng.below(8));
    }
    dims.push(1);
    let act = if rng.below(2) == 0 { Activation::Relu } else { Activation::Tanh };
    let mut model = init_mlp(&dims, act, seed).unwrap();
    for b in model.biases.iter_mut().flatten() {
        *b = rng.uniform(-0.5, 0.5);
    }
    model.standardization = Standardization {
        mean: (0..inputs).map(|_| rng.uniform(-5.0, 5.0)).collect(),
        sd: (0..inputs).map(|_| rng.uniform(0.5, 4.0)).collect(),
    };
    model.target_scale = TargetScale {
        mean: rng.uniform(-2.0, 2.0),
        sd: rng.uniform(0.5, 2.0),
    };
    let batch = 1 + rng.below(20);
    let rows: Vec<Vec<f64>> = (0..batch)
        .map(|_| (0..inputs).map(|_| rng.uniform(-10.0, 10.0)).collect())
        .collect();
    let targets = (0..batch).map(|_| rng.uniform(-3.0, 3.0)).collect();
    (model, Matrix::from_rows(&rows), targets)
}

/// Rows the trainer holds out for monitoring, re-derived from its seed stream.
pub fn holdout_rows(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::stream(seed, Stream::Holdout).shuffle(&mut order);
    order.truncate((fraction * n as f64).floor() as usize);
    order.sort_unstable();
    order
}
