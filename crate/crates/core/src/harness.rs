//! Experiment orchestration: load → split → fit → evaluate → write artifacts,
//! plus seed sweeps and the full report bundle.
//!
//! Fitting sees training rows only; standardization is fitted inside each
//! model on those rows, so test records never influence parameters.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, AnthropometricRecord, Design, Units};
use crate::error::{Error, Result, Stage};
use crate::formulas;
use crate::linalg::Matrix;
use crate::metrics::EvalReport;
use crate::neural::{self, Activation, Architecture, MlpModel, TrainConfig};
use crate::regression::{self, GdConfig, LinearModel};
use crate::svg;
use crate::trace::TrainingTrace;

/// Features of the published five-measurement regression.
pub const DEFAULT_FEATURES: [&str; 5] = ["weight", "chest", "abdomen", "hip", "thigh"];

/// Name of the derived body-mass-index feature (kg/m²).
pub const BMI_FEATURE: &str = "bmi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Ols,
    Gd,
    Mlp,
    Navy,
    BmiBaseline,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Ols,
        ModelKind::Gd,
        ModelKind::Mlp,
        ModelKind::Navy,
        ModelKind::BmiBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ols => "ols",
            ModelKind::Gd => "gd",
            ModelKind::Mlp => "mlp",
            ModelKind::Navy => "navy",
            ModelKind::BmiBaseline => "bmi-baseline",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model `{s}` (expected ols, gd, mlp, navy or bmi-baseline)"
                ))
            })
    }
}

/// One experiment, as a flat JSON document. Every key has a CLI flag of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub units: Units,
    pub model: ModelKind,
    pub features: Vec<String>,
    pub target: String,
    pub split_ratio: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub svg: bool,
    /// Learning rate; defaults to 0.05 for `gd` and 0.01 for `mlp`.
    pub learning_rate: Option<f64>,
    /// Epoch cap; defaults to 5000 for `gd` and 50 for `mlp`.
    pub max_epochs: Option<usize>,
    pub tolerance: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub holdout_fraction: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let arch = Architecture::default();
        Self {
            data_path: PathBuf::from("data/bodyfat.csv"),
            units: Units::Imperial,
            model: ModelKind::Ols,
            features: DEFAULT_FEATURES.iter().map(|s| s.to_string()).collect(),
            target: "bodyfat".into(),
            split_ratio: 0.8,
            seed: 0,
            output_dir: None,
            svg: false,
            learning_rate: None,
            max_epochs: None,
            tolerance: GdConfig::default().tolerance,
            batch_size: train.batch_size,
            patience: train.early_stopping_patience,
            min_delta: train.early_stopping_min_delta,
            holdout_fraction: train.holdout_fraction,
            hidden: arch.hidden,
            activation: arch.activation,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(format!(
                "split_ratio {} is not in (0, 1)",
                self.split_ratio
            )));
        }
        if self.target.is_empty() {
            return Err(Error::Config("target is empty".into()));
        }
        match self.model {
            ModelKind::Ols | ModelKind::Mlp | ModelKind::Gd if self.features.is_empty() => {
                Err(Error::Config("feature list is empty".into()))
            }
            ModelKind::Gd => self.gd_config().validate(),
            ModelKind::Mlp => self.train_config().validate(),
            _ => Ok(()),
        }
    }

    pub fn gd_config(&self) -> GdConfig {
        let d = GdConfig::default();
        GdConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            tolerance: self.tolerance,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            batch_size: self.batch_size,
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            early_stopping_patience: self.patience,
            early_stopping_min_delta: self.min_delta,
            holdout_fraction: self.holdout_fraction,
            seed: self.seed,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            hidden: self.hidden.clone(),
            activation: self.activation,
        }
    }

    /// Feature names the chosen model actually uses.
    pub fn model_features(&self) -> Vec<String> {
        match self.model {
            ModelKind::BmiBaseline => vec![BMI_FEATURE.to_string()],
            ModelKind::Navy => vec!["abdomen".into(), "neck".into(), "height".into()],
            _ => self.features.clone(),
        }
    }

    pub fn descriptor(&self) -> String {
        let features = self.model_features().join(",");
        match self.model {
            ModelKind::Mlp => {
                let dims = self.architecture().layer_dims(self.features.len());
                let dims: Vec<String> = dims.iter().map(usize::to_string).collect();
                format!(
                    "mlp[{} {}]({features})->{}",
                    dims.join("-"),
                    self.activation,
                    self.target
                )
            }
            kind => format!("{kind}({features})->{}", self.target),
        }
    }
}

/// A fitted model as stored in `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Mlp(MlpModel),
    Linear(LinearModel),
}

impl ModelFile {
    pub fn feature_names(&self) -> &[String] {
        match self {
            ModelFile::Mlp(m) => &m.feature_names,
            ModelFile::Linear(m) => &m.feature_names,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelFile::Mlp(m) => m.validate(),
            ModelFile::Linear(m) => m.validate(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: not a model file: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        match self {
            ModelFile::Mlp(m) => neural::forward(m, features).map(|b| b.value()),
            ModelFile::Linear(m) => regression::predict_linear(m, features).map(|b| b.value()),
        }
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            ModelFile::Mlp(m) => neural::predict_rows(m, x),
            ModelFile::Linear(m) => regression::predict_rows(m, x),
        }
    }
}

fn bmi_of(r: &AnthropometricRecord) -> Result<f64> {
    formulas::bmi(r.weight, r.height / 100.0)
}

/// Design matrix that also understands the derived `bmi` feature.
pub fn build_design<S: AsRef<str>>(
    records: &[AnthropometricRecord],
    features: &[S],
    target: &str,
) -> Result<Design> {
    if !features.iter().any(|f| f.as_ref() == BMI_FEATURE) {
        return dataset::select_features(records, features, target);
    }
    if features.is_empty() {
        return Err(Error::Config("feature list is empty".into()));
    }
    let target_field = dataset::Field::parse(target)?;
    let mut columns = Vec::with_capacity(features.len());
    for f in features {
        let f = f.as_ref();
        if f == BMI_FEATURE {
            columns.push(records.iter().map(bmi_of).collect::<Result<Vec<_>>>()?);
        } else {
            let field = dataset::Field::parse(f)?;
            columns.push(records.iter().map(|r| r.get(field)).collect());
        }
    }
    let mut x = Matrix::zeros(records.len(), features.len());
    for (c, col) in columns.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            x.set(r, c, *v);
        }
    }
    Ok(Design::new(
        features.iter().map(|f| f.as_ref().to_string()).collect(),
        x,
        records.iter().map(|r| r.get(target_field)).collect(),
    ))
}

/// Everything one experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub report: EvalReport,
    pub trace: Option<TrainingTrace>,
    pub model: Option<ModelFile>,
    pub split: dataset::DatasetSplit,
}

/// Run one experiment on already-loaded records. Nothing is written.
pub fn run_on_records(records: &[AnthropometricRecord], config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let split = dataset::split(records, config.split_ratio, config.seed).map_err(|e| e.at(Stage::Split))?;
    let pick = |idx: &[usize]| -> Vec<AnthropometricRecord> { idx.iter().map(|&i| records[i].clone()).collect() };
    let train = pick(&split.train_indices);
    let test = pick(&split.test_indices);
    let descriptor = config.descriptor();

    if config.model == ModelKind::Navy {
        let target = dataset::Field::parse(&config.target).map_err(|e| e.at(Stage::Features))?;
        let truth: Vec<f64> = test.iter().map(|r| r.get(target)).collect();
        let predicted = test
            .iter()
            .map(|r| formulas::navy_bf_male(r.abdomen, r.neck, r.height).map(|b| b.value()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at(Stage::Evaluate))?;
        let report = EvalReport::from_pairs(descriptor, config.seed, &truth, &predicted)
            .map_err(|e| e.at(Stage::Evaluate))?;
        return Ok(Experiment {
            report,
            trace: None,
            model: None,
            split,
        });
    }

    let features = config.model_features();
    let train_design = build_design(&train, &features, &config.target).map_err(|e| e.at(Stage::Features))?;
    let test_design = build_design(&test, &features, &config.target).map_err(|e| e.at(Stage::Features))?;

    let fitted: Result<(ModelFile, Option<TrainingTrace>)> = match config.model {
        ModelKind::Ols | ModelKind::BmiBaseline => {
            regression::fit_ols(&train_design).map(|m| (ModelFile::Linear(m), None))
        }
        ModelKind::Gd => regression::fit_gd(&train_design, &config.gd_config())
            .map(|(m, t)| (ModelFile::Linear(m), Some(t))),
        ModelKind::Mlp => neural::train_mlp(&train_design, &config.architecture(), &config.train_config())
            .map(|out| (ModelFile::Mlp(out.model), Some(out.trace))),
        ModelKind::Navy => unreachable!("handled above"),
    };
    let (model, trace) = fitted.map_err(|e| e.at(Stage::Fit))?;

    let predicted = model.predict_rows(&test_design.x).map_err(|e| e.at(Stage::Evaluate))?;
    let report = EvalReport::from_pairs(descriptor, config.seed, &test_design.y, &predicted)
        .map_err(|e| e.at(Stage::Evaluate))?;
    Ok(Experiment {
        report,
        trace,
        model: Some(model),
        split,
    })
}

fn load_records(config: &ExperimentConfig) -> Result<Vec<AnthropometricRecord>> {
    dataset::load_csv(&config.data_path, config.units).map_err(|e| e.at(Stage::Load))
}

/// Load the configured data, run the experiment and write its artifacts to
/// `output_dir` when one is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let records = load_records(config)?;
    let experiment = run_on_records(&records, config)?;
    if let Some(dir) = &config.output_dir {
        write_experiment(&experiment, dir, config.svg).map_err(|e| e.at(Stage::Write))?;
    }
    Ok(experiment)
}

/// Write `path` via a temporary sibling and a rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

/// `true,predicted` CSV, plus a sibling `.svg` when `svg` is set.
pub fn emit_scatter(report: &EvalReport, path: &Path, svg: bool) -> Result<()> {
    if report.pairs.is_empty() {
        return Err(Error::domain("report", "no pairs to plot"));
    }
    atomic_write(path, report.pairs_csv().as_bytes())?;
    if svg {
        atomic_write(&path.with_extension("svg"), svg::scatter(&report.pairs).as_bytes())?;
    }
    Ok(())
}

/// `epoch,train_loss,holdout_loss` CSV, plus a sibling `.svg` when `svg` is set.
pub fn emit_trace(trace: &TrainingTrace, path: &Path, svg: bool) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::domain("trace", "no epochs to plot"));
    }
    atomic_write(path, trace.to_csv().as_bytes())?;
    if svg {
        atomic_write(&path.with_extension("svg"), svg::loss_curves(trace).as_bytes())?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_experiment(experiment: &Experiment, dir: &Path, svg: bool) -> Result<()> {
    create_dir(dir)?;
    atomic_write(&dir.join("report.json"), to_json(&experiment.report).as_bytes())?;
    emit_scatter(&experiment.report, &dir.join("scatter.csv"), svg)?;
    if let Some(trace) = &experiment.trace {
        emit_trace(trace, &dir.join("trace.csv"), svg)?;
    }
    if let Some(model) = &experiment.model {
        atomic_write(&dir.join("model.json"), to_json(model).as_bytes())?;
    }
    Ok(())
}

/// 10th, 50th and 90th nearest-rank percentiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(p/100 · n)` of
/// the sorted sample (rank 1 for p = 0).
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

impl Percentiles {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        Self {
            p10: nearest_rank(&v, 10.0),
            p50: nearest_rank(&v, 50.0),
            p90: nearest_rank(&v, 90.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub mae: Percentiles,
    pub rmse: Percentiles,
    pub r2: Percentiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model_descriptor: String,
    pub seeds: Vec<u64>,
    pub aggregate: SweepAggregate,
    /// One report per seed, ascending by seed.
    pub reports: Vec<EvalReport>,
}

/// Run the experiment once per distinct seed (in parallel) and aggregate.
/// When seeds fail, the error names the lowest one.
pub fn sweep_on_records(
    records: &[AnthropometricRecord],
    config: &ExperimentConfig,
    seeds: &[u64],
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    config.validate()?;
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();

    let reports = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ExperimentConfig {
                seed,
                ..config.clone()
            };
            run_on_records(records, &cfg)
                .map(|e| e.report)
                .map_err(|e| Error::Seed {
                    seed,
                    source: Box::new(e),
                })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let aggregate = SweepAggregate {
        mae: Percentiles::of(reports.iter().map(|r| r.mae)),
        rmse: Percentiles::of(reports.iter().map(|r| r.rmse)),
        r2: Percentiles::of(reports.iter().map(|r| r.r2)),
    };
    Ok(SweepResult {
        model_descriptor: config.descriptor(),
        seeds,
        aggregate,
        reports,
    })
}

pub fn sweep_seeds(config: &ExperimentConfig, seeds: &[u64]) -> Result<SweepResult> {
    let records = load_records(config)?;
    let result = sweep_on_records(&records, config, seeds)?;
    if let Some(dir) = &config.output_dir {
        create_dir(dir)
            .and_then(|_| atomic_write(&dir.join("sweep.json"), to_json(&result).as_bytes()))
            .map_err(|e| e.at(Stage::Write))?;
    }
    Ok(result)
}

/// Re-evaluate a stored model on the test side of the split for `seed`.
pub fn evaluate_model(
    model: &ModelFile,
    records: &[AnthropometricRecord],
    target: &str,
    ratio: f64,
    seed: u64,
) -> Result<EvalReport> {
    let split = dataset::split(records, ratio, seed).map_err(|e| e.at(Stage::Split))?;
    let test: Vec<AnthropometricRecord> = split.test_indices.iter().map(|&i| records[i].clone()).collect();
    let design = build_design(&test, model.feature_names(), target).map_err(|e| e.at(Stage::Features))?;
    let predicted = model.predict_rows(&design.x).map_err(|e| e.at(Stage::Evaluate))?;
    let kind = match model {
        ModelFile::Mlp(_) => "mlp",
        ModelFile::Linear(_) => "linear",
    };
    let descriptor = format!("{kind}({})->{target}", model.feature_names().join(","));
    EvalReport::from_pairs(descriptor, seed, &design.y, &predicted).map_err(|e| e.at(Stage::Evaluate))
}

/// Seeds used by the report bundle's sweep.
pub const REPORT_SWEEP_SEEDS: std::ops::Range<u64> = 0..200;

/// Write the full artifact bundle under `out`: `summary.json`, one
/// sub-directory per model kind and `sweep.json` for OLS over
/// [`REPORT_SWEEP_SEEDS`].
pub fn write_report_bundle(base: &ExperimentConfig, out: &Path) -> Result<()> {
    let records = load_records(base)?;
    create_dir(out)?;
    let summary = dataset::summarize(&records)?;
    atomic_write(&out.join("summary.json"), to_json(&summary).as_bytes())?;

    for kind in ModelKind::ALL {
        let cfg = ExperimentConfig {
            model: kind,
            ..base.clone()
        };
        let experiment = run_on_records(&records, &cfg)?;
        write_experiment(&experiment, &out.join(kind.name()), base.svg).map_err(|e| e.at(Stage::Write))?;
    }

    let sweep_cfg = ExperimentConfig {
        model: ModelKind::Ols,
        ..base.clone()
    };
    let seeds: Vec<u64> = REPORT_SWEEP_SEEDS.collect();
    let sweep = sweep_on_records(&records, &sweep_cfg, &seeds)?;
    atomic_write(&out.join("sweep.json"), to_json(&sweep).as_bytes()).map_err(|e| e.at(Stage::Write))
}

/// Parse seed lists such as `0..199` (inclusive), `3,5,8` or `7`.
pub fn parse_seeds(list: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seed list `{list}`"));
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
