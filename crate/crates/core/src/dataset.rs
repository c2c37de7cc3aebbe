//! Anthropometric records: CSV ingestion, cohort summaries, seeded
//! train/test splits and design-matrix extraction.
//!
//! The canonical CSV has 16 columns:
//!
//! ```text
//! case_id,density,bodyfat,age,weight,height,neck,chest,abdomen,hip,thigh,knee,ankle,biceps,forearm,wrist
//! ```
//!
//! In memory everything is metric: weight in kg, lengths in cm. With
//! [`Units::Imperial`] the file's `weight` is read as pounds and `height` as
//! inches. Circumferences are always centimetres, as in the classic
//! underwater-weighing dataset.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{SplitMix64, Stream};

pub const KG_PER_LB: f64 = 0.45359237;
pub const CM_PER_IN: f64 = 2.54;

/// Column order of the canonical CSV.
pub const CSV_HEADER: [&str; 16] = [
    "case_id", "density", "bodyfat", "age", "weight", "height", "neck", "chest", "abdomen", "hip",
    "thigh", "knee", "ankle", "biceps", "forearm", "wrist",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Metric,
    #[default]
    Imperial,
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metric" => Ok(Units::Metric),
            "imperial" => Ok(Units::Imperial),
            other => Err(Error::Config(format!(
                "unknown units `{other}` (expected metric or imperial)"
            ))),
        }
    }
}

/// Numeric fields of a record, in schema order (`case_id` excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Density,
    Bodyfat,
    Age,
    Weight,
    Height,
    Neck,
    Chest,
    Abdomen,
    Hip,
    Thigh,
    Knee,
    Ankle,
    Biceps,
    Forearm,
    Wrist,
}

impl Field {
    pub const ALL: [Field; 15] = [
        Field::Density,
        Field::Bodyfat,
        Field::Age,
        Field::Weight,
        Field::Height,
        Field::Neck,
        Field::Chest,
        Field::Abdomen,
        Field::Hip,
        Field::Thigh,
        Field::Knee,
        Field::Ankle,
        Field::Biceps,
        Field::Forearm,
        Field::Wrist,
    ];

    pub fn name(self) -> &'static str {
        CSV_HEADER[self as usize + 1]
    }

    pub fn parse(name: &str) -> Result<Field> {
        Field::ALL
            .iter()
            .copied()
            .find(|f| f.name() == name)
            .ok_or_else(|| {
                let valid: Vec<&str> = Field::ALL.iter().map(|f| f.name()).collect();
                Error::Config(format!(
                    "unknown field `{name}`; valid fields: {}",
                    valid.join(", ")
                ))
            })
    }

    fn is_circumference(self) -> bool {
        matches!(
            self,
            Field::Neck
                | Field::Chest
                | Field::Abdomen
                | Field::Hip
                | Field::Thigh
                | Field::Knee
                | Field::Ankle
                | Field::Biceps
                | Field::Forearm
                | Field::Wrist
        )
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One subject. Weight in kg, height and circumferences in cm, density in g/cm³.
#[derive(Debug, Clone, PartialEq)]
pub struct AnthropometricRecord {
    pub case_id: u32,
    pub density: f64,
    pub bodyfat: f64,
    pub age: f64,
    pub weight: f64,
    pub height: f64,
    pub neck: f64,
    pub chest: f64,
    pub abdomen: f64,
    pub hip: f64,
    pub thigh: f64,
    pub knee: f64,
    pub ankle: f64,
    pub biceps: f64,
    pub forearm: f64,
    pub wrist: f64,
}

impl AnthropometricRecord {
    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::Density => self.density,
            Field::Bodyfat => self.bodyfat,
            Field::Age => self.age,
            Field::Weight => self.weight,
            Field::Height => self.height,
            Field::Neck => self.neck,
            Field::Chest => self.chest,
            Field::Abdomen => self.abdomen,
            Field::Hip => self.hip,
            Field::Thigh => self.thigh,
            Field::Knee => self.knee,
            Field::Ankle => self.ankle,
            Field::Biceps => self.biceps,
            Field::Forearm => self.forearm,
            Field::Wrist => self.wrist,
        }
    }

    pub fn get_mut(&mut self, field: Field) -> &mut f64 {
        match field {
            Field::Density => &mut self.density,
            Field::Bodyfat => &mut self.bodyfat,
            Field::Age => &mut self.age,
            Field::Weight => &mut self.weight,
            Field::Height => &mut self.height,
            Field::Neck => &mut self.neck,
            Field::Chest => &mut self.chest,
            Field::Abdomen => &mut self.abdomen,
            Field::Hip => &mut self.hip,
            Field::Thigh => &mut self.thigh,
            Field::Knee => &mut self.knee,
            Field::Ankle => &mut self.ankle,
            Field::Biceps => &mut self.biceps,
            Field::Forearm => &mut self.forearm,
            Field::Wrist => &mut self.wrist,
        }
    }

    /// Record with every numeric field zeroed except the ones set by the caller.
    /// Mostly useful for tests and examples.
    pub fn with_fields(case_id: u32, values: &[(Field, f64)]) -> Self {
        let mut r = AnthropometricRecord {
            case_id,
            density: 0.0,
            bodyfat: 0.0,
            age: 0.0,
            weight: 0.0,
            height: 0.0,
            neck: 0.0,
            chest: 0.0,
            abdomen: 0.0,
            hip: 0.0,
            thigh: 0.0,
            knee: 0.0,
            ankle: 0.0,
            biceps: 0.0,
            forearm: 0.0,
            wrist: 0.0,
        };
        for &(f, v) in values {
            *r.get_mut(f) = v;
        }
        r
    }

    fn check_invariants(&self) -> std::result::Result<(), (Field, String)> {
        for f in Field::ALL {
            let v = self.get(f);
            if !v.is_finite() {
                return Err((f, format!("non-finite value {v}")));
            }
            if (f == Field::Weight || f.is_circumference()) && v <= 0.0 {
                return Err((f, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=75.0).contains(&self.bodyfat) {
            return Err((
                Field::Bodyfat,
                format!("{} is outside [0, 75] %", self.bodyfat),
            ));
        }
        Ok(())
    }
}

/// Load records from a canonical CSV file.
pub fn load_csv(path: impl AsRef<Path>, units: Units) -> Result<Vec<AnthropometricRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, units)
}

/// Parse canonical CSV from any reader. Records keep file order.
pub fn read_csv<R: Read>(reader: R, units: Units) -> Result<Vec<AnthropometricRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    let mut positions = [0usize; 16];
    for (slot, name) in positions.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                row: 0,
                column: name.to_string(),
                message: "missing column".into(),
            })?;
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let cell = |col: usize| -> Result<&str> {
            row.get(positions[col]).ok_or_else(|| Error::Parse {
                row: row_no,
                column: CSV_HEADER[col].to_string(),
                message: "missing cell".into(),
            })
        };

        let id_text = cell(0)?;
        let case_id: u32 = id_text
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| Error::Parse {
                row: row_no,
                column: "case_id".into(),
                message: format!("`{id_text}` is not a positive integer"),
            })?;
        if !seen.insert(case_id) {
            return Err(Error::Parse {
                row: row_no,
                column: "case_id".into(),
                message: format!("duplicate case_id {case_id}"),
            });
        }

        let mut rec = AnthropometricRecord::with_fields(case_id, &[]);
        for f in Field::ALL {
            let text = cell(f as usize + 1)?;
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: f.name().into(),
                message: format!("`{text}` is not a number"),
            })?;
            *rec.get_mut(f) = v;
        }
        if units == Units::Imperial {
            rec.weight *= KG_PER_LB;
            rec.height *= CM_PER_IN;
        }
        rec.check_invariants().map_err(|(f, message)| Error::Parse {
            row: row_no,
            column: f.name().into(),
            message,
        })?;
        records.push(rec);
    }
    Ok(records)
}

/// Write records as canonical CSV in the requested units. Floats use the
/// shortest representation that round-trips.
pub fn write_csv<W: Write>(records: &[AnthropometricRecord], units: Units, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| Error::io("<csv writer>", std::io::Error::other(e));
    wtr.write_record(CSV_HEADER).map_err(to_io)?;
    for r in records {
        let mut row = Vec::with_capacity(16);
        row.push(r.case_id.to_string());
        for f in Field::ALL {
            let v = match (units, f) {
                (Units::Imperial, Field::Weight) => r.weight / KG_PER_LB,
                (Units::Imperial, Field::Height) => r.height / CM_PER_IN,
                _ => r.get(f),
            };
            row.push(v.to_string());
        }
        wtr.write_record(&row).map_err(to_io)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))
}

/// Known data-quality problems that are kept in the data but reported.
pub fn anomalies(records: &[AnthropometricRecord]) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        if r.bodyfat <= 0.0 {
            out.push(format!(
                "case {}: body fat {}% is not physiological",
                r.case_id, r.bodyfat
            ));
        }
        if r.height < 100.0 {
            out.push(format!(
                "case {}: height {:.2} cm is implausibly small",
                r.case_id, r.height
            ));
        }
        if r.density > 0.0 {
            if let Ok(d) = crate::formulas::BodyDensity::new(r.density) {
                let siri = crate::formulas::siri_bf(d).value();
                if (siri - r.bodyfat).abs() > 2.0 {
                    out.push(format!(
                        "case {}: body fat {}% disagrees with Siri's equation on density {} ({siri:.1}%)",
                        r.case_id, r.bodyfat, r.density
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean: f64,
    pub sd: f64,
}

/// Per-field mean and sample standard deviation of a cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSummary {
    pub n: usize,
    pub fields: Vec<(Field, FieldStats)>,
    pub warnings: Vec<String>,
}

impl CohortSummary {
    pub fn stats(&self, field: Field) -> FieldStats {
        self.fields
            .iter()
            .find(|(f, _)| *f == field)
            .map(|(_, s)| *s)
            .expect("every field is summarized")
    }
}

struct FieldMap<'a>(&'a [(Field, FieldStats)]);

impl Serialize for FieldMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (f, st) in self.0 {
            map.serialize_entry(f.name(), st)?;
        }
        map.end()
    }
}

impl Serialize for CohortSummary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CohortSummary", 3)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("fields", &FieldMap(&self.fields))?;
        st.serialize_field("warnings", &self.warnings)?;
        st.end()
    }
}

/// Mean and sample SD (n − 1 denominator; 0 for a single value).
pub(crate) fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn summarize(records: &[AnthropometricRecord]) -> Result<CohortSummary> {
    if records.is_empty() {
        return Err(Error::domain("records", "cannot summarize an empty cohort"));
    }
    let fields = Field::ALL
        .iter()
        .map(|&f| {
            let (mean, sd) = mean_sd(records.iter().map(move |r| r.get(f)));
            (f, FieldStats { mean, sd })
        })
        .collect();
    Ok(CohortSummary {
        n: records.len(),
        fields,
        warnings: anomalies(records),
    })
}

/// Seeded partition of record indices into train and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub ratio: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Shuffle `0..n` with the split stream of `seed` and cut after `floor(ratio · n)`.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::domain("ratio", format!("{ratio} is not in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::domain(
            "records",
            format!("need at least 2 records to split, got {n}"),
        ));
    }
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::domain(
            "ratio",
            format!("ratio {ratio} leaves an empty side for {n} records"),
        ));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::stream(seed, Stream::Split).shuffle(&mut idx);
    let test_indices = idx.split_off(n_train);
    Ok(DatasetSplit {
        seed,
        ratio,
        train_indices: idx,
        test_indices,
    })
}

pub fn split(records: &[AnthropometricRecord], ratio: f64, seed: u64) -> Result<DatasetSplit> {
    split_indices(records.len(), ratio, seed)
}

/// Feature matrix and aligned target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl Design {
    pub fn new(feature_names: Vec<String>, x: Matrix, y: Vec<f64>) -> Self {
        assert_eq!(feature_names.len(), x.cols());
        assert_eq!(x.rows(), y.len());
        Self {
            feature_names,
            x,
            y,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Design {
        Design {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Extract the named feature columns and target, rows in record order.
pub fn select_features<S: AsRef<str>>(
    records: &[AnthropometricRecord],
    feature_names: &[S],
    target_name: &str,
) -> Result<Design> {
    if feature_names.is_empty() {
        return Err(Error::Config("feature list is empty".into()));
    }
    let fields = feature_names
        .iter()
        .map(|n| Field::parse(n.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let target = Field::parse(target_name)?;
    let mut data = Vec::with_capacity(records.len() * fields.len());
    for r in records {
        data.extend(fields.iter().map(|&f| r.get(f)));
    }
    Ok(Design {
        feature_names: fields.iter().map(|f| f.name().to_string()).collect(),
        x: Matrix::from_row_major(records.len(), fields.len(), data),
        y: records.iter().map(|r| r.get(target)).collect(),
    })
}
