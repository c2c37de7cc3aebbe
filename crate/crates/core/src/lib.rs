//! Body-fat estimation from anthropometric measurements.
//!
//! - [`formulas`]: BMI, Siri's density equation, U.S. Navy circumference method.
//! - [`dataset`]: canonical CSV ingestion, cohort summaries, seeded splits.
//! - [`regression`]: least squares via Householder QR, and gradient descent.
//! - [`neural`]: a small feed-forward regressor with backprop and early stopping.
//! - [`metrics`]: MAE, RMSE, R².
//! - [`harness`]: experiments, seed sweeps and artifact files.
//!
//! ```
//! use bodyfat_core::formulas::{bmi, navy_bf_male};
//!
//! let index = bmi(80.0, 1.8).unwrap();
//! assert!((index - 24.69).abs() < 0.01);
//! let bf = navy_bf_male(90.0, 38.0, 180.0).unwrap();
//! assert!((bf.value() - 19.81).abs() < 0.01);
//! ```

pub mod dataset;
pub mod error;
pub mod formulas;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod regression;
pub mod rng;
pub mod scaling;
pub mod svg;
pub mod trace;

pub use error::{Error, Result};
