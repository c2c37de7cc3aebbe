mod common;

use bodyfat_core::dataset::Design;
use bodyfat_core::linalg::Matrix;
use bodyfat_core::neural::{
    self, backprop_gradients, finite_diff_gradients, max_relative_error, Activation, Architecture,
    TrainConfig, TrainOutcome,
};
use bodyfat_core::regression::{self, fit_ols};
use common::{differentiable, holdout_rows, random_case, reference_forward};
use proptest::prelude::*;

#[test]
fn forward_matches_reference_implementation() {
    for seed in 0..50 {
        let (model, x, _) = random_case(seed);
        for r in 0..x.rows() {
            let got = neural::forward(&model, x.row(r)).unwrap().value();
            let want = reference_forward(&model, x.row(r));
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "seed {seed}: {got} vs {want}");
        }
    }
}

#[test]
fn backprop_matches_finite_differences_on_120_configurations() {
    let mut checked = 0;
    let mut relu = 0;
    for seed in 0.. {
        if checked == 120 {
            break;
        }
        let (model, x, y) = random_case(seed);
        if !differentiable(&model, &x) {
            continue;
        }
        checked += 1;
        relu += (model.activation == Activation::Relu) as usize;
        let exact = backprop_gradients(&model, &x, &y).unwrap();
        let numeric = finite_diff_gradients(&model, &x, &y, 1e-5).unwrap();
        let err = max_relative_error(&exact, &numeric);
        assert!(err <= 1e-4, "seed {seed}: max relative error {err}");
    }
    assert!(relu >= 30, "only {relu} relu cases");
}

#[test]
fn shape_mismatches_are_config_errors() {
    let (model, x, y) = random_case(3);
    let wide = Matrix::zeros(x.rows(), x.cols() + 1);
    assert!(matches!(
        backprop_gradients(&model, &wide, &y),
        Err(bodyfat_core::Error::Config(_))
    ));
    assert!(backprop_gradients(&model, &x, &y[..y.len() - 1]).is_err());
}

#[test]
fn restored_model_has_the_lowest_monitored_loss() {
    let design = common::canonical_design();
    let config = TrainConfig {
        seed: 11,
        ..TrainConfig::default()
    };
    let out = neural::train_mlp(&design, &Architecture::default(), &config).unwrap();
    let hold = design.subset(&holdout_rows(design.len(), config.holdout_fraction, config.seed));
    let pred = neural::predict_rows(&out.model, &hold.x).unwrap();
    let loss = neural::loss_mse(&pred, &hold.y).unwrap();
    let best = out.trace.entries[out.best_epoch];
    assert!((loss - TrainOutcome::monitored(&best)).abs() <= 1e-9 * loss);
    for e in &out.trace.entries {
        assert!(loss <= TrainOutcome::monitored(e) * (1.0 + 1e-12));
    }
}

#[test]
fn single_layer_network_converges_to_ols() {
    let design: Design = common::synthetic(42, 80, 3, 2.0);
    let config = TrainConfig {
        learning_rate: 0.02,
        batch_size: 80,
        max_epochs: 4000,
        early_stopping_patience: 4000,
        early_stopping_min_delta: 0.0,
        holdout_fraction: 0.0,
        seed: 1,
    };
    let arch = Architecture {
        hidden: vec![],
        activation: Activation::Relu,
    };
    let out = neural::train_mlp(&design, &arch, &config).unwrap();
    let net = neural::predict_rows(&out.model, &design.x).unwrap();
    let ols = regression::predict_rows(&fit_ols(&design).unwrap(), &design.x).unwrap();
    let rmse = bodyfat_core::metrics::rmse(&ols, &net).unwrap();
    assert!(rmse < 1e-3, "rmse between predictions {rmse}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_gradient_checks(seed in any::<u64>()) {
        let (model, x, y) = random_case(seed);
        prop_assume!(differentiable(&model, &x));
        let err = max_relative_error(
            &backprop_gradients(&model, &x, &y).unwrap(),
            &finite_diff_gradients(&model, &x, &y, 1e-5).unwrap(),
        );
        prop_assert!(err <= 1e-4, "max relative error {}", err);
    }

    #[test]
    fn training_is_bit_deterministic(seed in 0u64..1000) {
        let design = common::synthetic(seed, 40, 2, 1.0);
        let config = TrainConfig { max_epochs: 5, seed, ..TrainConfig::default() };
        let arch = Architecture { hidden: vec![4], activation: Activation::Tanh };
        let a = neural::train_mlp(&design, &arch, &config).unwrap();
        let b = neural::train_mlp(&design, &arch, &config).unwrap();
        prop_assert_eq!(a, b);
    }
}

