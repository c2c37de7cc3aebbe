use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bodyfat_core::dataset::{self, Units};
use bodyfat_core::error::{Error, Result};
use bodyfat_core::formulas::{self, BfPercent, BodyDensity};
use bodyfat_core::harness::{self, ExperimentConfig, ModelFile, ModelKind};
use bodyfat_core::neural::Activation;

/// Body-fat estimators and a reproducible regression benchmark.
#[derive(Parser, Debug)]
#[command(name = "bodyfat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cohort mean and SD per field, as JSON.
    Summarize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "imperial")]
        units: Units,
        /// Also write the JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split, fit on the training side, evaluate on the test side and write artifacts.
    Fit(ExperimentArgs),
    /// Evaluate a stored model on the test side of a seeded split.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "imperial")]
        units: Units,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value = "bodyfat")]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Predict body fat from a model file or a closed-form formula.
    Predict {
        #[arg(long, conflicts_with = "formula", required_unless_present = "formula")]
        model_file: Option<PathBuf>,
        /// navy (waist, neck, height in cm), bmi (weight kg, height m) or siri (density).
        #[arg(long)]
        formula: Option<Formula>,
        /// A CSV file with named columns, or inline `name=value,...` pairs (metric units).
        #[arg(long)]
        input: String,
        /// Clamp reported body fat to [0, 75] %.
        #[arg(long)]
        clamp: bool,
    },
    /// Run one experiment per seed and report percentile bands.
    Sweep {
        /// Inclusive range `a..b` or comma list.
        #[arg(long, default_value = "0..199")]
        seeds: String,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Write the whole artifact bundle (summary, every model, OLS sweep).
    Report {
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Formula {
    Navy,
    Bmi,
    Siri,
}

/// Experiment settings. Each flag overrides the matching key of `--config`.
#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// Flat JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    units: Option<Units>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// Comma-separated feature names.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    min_delta: Option<f64>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    /// Hidden layer widths, e.g. `16,8`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    activation: Option<Activation>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $key:ident) => {
                if let Some(v) = &self.$flag {
                    cfg.$key = v.clone();
                }
            };
        }
        set!(data => data_path);
        set!(units => units);
        set!(model => model);
        set!(features => features);
        set!(target => target);
        set!(seed => seed);
        set!(ratio => split_ratio);
        set!(tolerance => tolerance);
        set!(batch_size => batch_size);
        set!(patience => patience);
        set!(min_delta => min_delta);
        set!(holdout_fraction => holdout_fraction);
        set!(hidden => hidden);
        set!(activation => activation);
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        if self.learning_rate.is_some() {
            cfg.learning_rate = self.learning_rate;
        }
        if self.max_epochs.is_some() {
            cfg.max_epochs = self.max_epochs;
        }
        cfg.svg |= self.svg;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    print!("{}", harness::to_json(value));
}

/// Named inputs from `a=1,b=2` or from a CSV file with a header row.
fn read_inputs(input: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = Path::new(input);
    if path.is_file() {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse { row: 0, column: String::new(), message: e.to_string() })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { row: i + 1, column: String::new(), message: e.to_string() })?;
            let row = rec
                .iter()
                .zip(&header)
                .map(|(cell, col)| {
                    cell.parse::<f64>().map_err(|_| Error::Parse {
                        row: i + 1,
                        column: col.clone(),
                        message: format!("`{cell}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        return Ok((header, rows));
    }
    let mut names = Vec::new();
    let mut values = Vec::new();
    for pair in input.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("`{pair}` is neither a file nor name=value")))?;
        names.push(k.trim().to_string());
        values.push(v.trim().parse::<f64>().map_err(|_| Error::Parse {
            row: 1,
            column: k.trim().to_string(),
            message: format!("`{}` is not a number", v.trim()),
        })?);
    }
    Ok((names, vec![values]))
}

fn column(names: &[String], wanted: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == wanted)
        .ok_or_else(|| Error::Config(format!("input lacks `{wanted}` (have: {})", names.join(", "))))
}

fn predict(model_file: Option<&Path>, formula: Option<Formula>, input: &str, clamp: bool) -> Result<()> {
    let (names, rows) = read_inputs(input)?;
    let estimate: Box<dyn Fn(&[f64]) -> Result<f64>> = match (model_file, formula) {
        (Some(path), _) => {
            let model = ModelFile::load(path)?;
            let idx = model
                .feature_names()
                .iter()
                .map(|f| column(&names, f))
                .collect::<Result<Vec<_>>>()?;
            Box::new(move |row: &[f64]| {
                let x: Vec<f64> = idx.iter().map(|&i| row[i]).collect();
                model.predict(&x)
            })
        }
        (None, Some(Formula::Navy)) => {
            let (w, n, h) = (column(&names, "waist")?, column(&names, "neck")?, column(&names, "height")?);
            Box::new(move |row: &[f64]| formulas::navy_bf_male(row[w], row[n], row[h]).map(BfPercent::value))
        }
        (None, Some(Formula::Siri)) => {
            let d = column(&names, "density")?;
            Box::new(move |row: &[f64]| BodyDensity::new(row[d]).map(|d| formulas::siri_bf(d).value()))
        }
        (None, Some(Formula::Bmi)) => {
            let (w, h) = (column(&names, "weight")?, column(&names, "height")?);
            return rows.iter().try_for_each(|row| {
                println!("{}", formulas::bmi(row[w], row[h])?);
                Ok(())
            });
        }
        (None, None) => return Err(Error::Config("give --model-file or --formula".into())),
    };
    for row in &rows {
        println!("{}", BfPercent::new(estimate(row)?).reported(clamp).value());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Summarize { data, units, out } => {
            let records = dataset::load_csv(&data, units)?;
            let summary = dataset::summarize(&records)?;
            if let Some(out) = out {
                harness::atomic_write(&out, harness::to_json(&summary).as_bytes())?;
            }
            print_json(&summary);
        }
        Command::Fit(args) => {
            let cfg = args.resolve()?;
            let experiment = harness::run_experiment(&cfg)?;
            let r = &experiment.report;
            println!(
                "{}: n={} mae={} rmse={} r2={}",
                r.model_descriptor, r.n, r.mae, r.rmse, r.r2
            );
        }
        Command::Evaluate { model_file, data, units, seed, ratio, target, out, svg } => {
            let model = ModelFile::load(&model_file)?;
            let records = dataset::load_csv(&data, units)?;
            let report = harness::evaluate_model(&model, &records, &target, ratio, seed)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                harness::atomic_write(&dir.join("report.json"), harness::to_json(&report).as_bytes())?;
                harness::emit_scatter(&report, &dir.join("scatter.csv"), svg)?;
            }
            print_json(&report);
        }
        Command::Predict { model_file, formula, input, clamp } => {
            predict(model_file.as_deref(), formula, &input, clamp)?;
        }
        Command::Sweep { seeds, experiment } => {
            let cfg = experiment.resolve()?;
            let seeds = harness::parse_seeds(&seeds)?;
            let result = harness::sweep_seeds(&cfg, &seeds)?;
            println!("{} over {} seeds", result.model_descriptor, result.seeds.len());
            print_json(&result.aggregate);
        }
        Command::Report { experiment } => {
            let cfg = experiment.resolve()?;
            let out = cfg
                .output_dir
                .clone()
                .ok_or_else(|| Error::Config("report needs --out".into()))?;
            harness::write_report_bundle(&cfg, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
