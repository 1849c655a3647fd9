//! Ingestion of index-test predictions and reference labels.
//!
//! CSV inputs are comma separated with a mandatory header row. Prediction
//! files carry `study_id,value[,processing_time]` (the value column may also
//! be headed `score`); reference files carry `study_id,label[,verification_note]`.
//! JSON inputs are arrays of objects using the same field names.
//!
//! Row numbers in errors count the header as row 1, so the first data row is
//! row 2. JSON errors number records from 1.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guess the format from a file extension (`.json` or anything else as CSV).
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Run-level declaration of what the prediction `value` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    Scores,
    Binary,
}

impl fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionKind::Scores => f.write_str("scores"),
            PredictionKind::Binary => f.write_str("binary"),
        }
    }
}

/// Output of the index test for one study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Binary(bool),
    Score(f64),
}

impl Prediction {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Prediction::Binary(b) => f64::from(u8::from(b)),
            Prediction::Score(s) => s,
        }
    }

    pub fn as_binary(&self) -> Option<bool> {
        match *self {
            Prediction::Binary(b) => Some(b),
            Prediction::Score(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub study_id: String,
    pub value: Prediction,
    /// Seconds spent on the study, when the index test reported it.
    pub processing_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRecord {
    pub study_id: String,
    pub label: bool,
    pub verification_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedOutcome {
    pub study_id: String,
    pub predicted: Prediction,
    pub actual: bool,
}

/// Result of joining predictions to reference labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JoinReport {
    /// Pairs in prediction-file order.
    pub pairs: Vec<PairedOutcome>,
    /// Prediction ids with no reference label.
    pub unmatched_predictions: Vec<String>,
    /// Reference ids with no prediction.
    pub unmatched_reference: Vec<String>,
}

fn read_utf8(mut source: impl Read) -> Result<String> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|e| Error::Utf8(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Utf8(e.to_string()))
}

/// Header lookup for a CSV file: column name -> index.
struct Header {
    columns: HashMap<String, usize>,
}

impl Header {
    fn parse(record: &csv::StringRecord) -> Result<Header> {
        let mut columns = HashMap::new();
        for (i, name) in record.iter().enumerate() {
            let name = name.trim().trim_start_matches('\u{feff}').to_string();
            if columns.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateColumn(name));
            }
        }
        Ok(Header { columns })
    }

    fn require(&self, names: &[&str]) -> Result<usize> {
        names
            .iter()
            .find_map(|n| self.columns.get(*n).copied())
            .ok_or_else(|| Error::MissingColumn(names[0].to_string()))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }
}

fn csv_rows(text: &str) -> Result<(Header, Vec<(usize, csv::StringRecord)>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => Header::parse(&r.map_err(|e| csv_error(1, e))?)?,
        None => return Err(Error::MissingColumn("study_id".into())),
    };
    let width = header.columns.len();
    let mut rows = Vec::new();
    for (i, r) in records.enumerate() {
        let row = i + 2;
        let record = r.map_err(|e| csv_error(row, e))?;
        if record.len() != width {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {width} fields, found {}", record.len()),
            });
        }
        rows.push((row, record));
    }
    Ok((header, rows))
}

fn csv_error(row: usize, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Utf8 { .. } => Error::Utf8(format!("row {row}")),
        _ => Error::MalformedRow { row, reason: e.to_string() },
    }
}

fn parse_study_id(row: usize, raw: &str) -> Result<String> {
    let id = raw.trim();
    if id.is_empty() {
        return Err(Error::MalformedRow { row, reason: "empty study_id".into() });
    }
    Ok(id.to_string())
}

fn parse_number(row: usize, field: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::MalformedRow { row, reason: format!("{field} `{}` is not a number", raw.trim()) })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow { row, reason: format!("{field} must be finite") });
    }
    Ok(v)
}

fn parse_binary(row: usize, field: &str, v: f64) -> Result<bool> {
    if v == 0.0 {
        Ok(false)
    } else if v == 1.0 {
        Ok(true)
    } else {
        Err(Error::MalformedRow { row, reason: format!("{field} {v} is not 0 or 1") })
    }
}

fn make_prediction(row: usize, v: f64, kind: PredictionKind) -> Result<Prediction> {
    match kind {
        PredictionKind::Binary => parse_binary(row, "value", v).map(Prediction::Binary),
        PredictionKind::Scores => {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ScoreOutOfRange { row, value: v });
            }
            Ok(Prediction::Score(v))
        }
    }
}

fn check_time(row: usize, t: Option<f64>) -> Result<Option<f64>> {
    match t {
        Some(t) if !(t >= 0.0 && t.is_finite()) => Err(Error::MalformedRow {
            row,
            reason: format!("processing_time {t} must be a non-negative number of seconds"),
        }),
        other => Ok(other),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrediction {
    study_id: String,
    #[serde(alias = "score")]
    value: f64,
    #[serde(default)]
    processing_time: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    study_id: String,
    label: f64,
    #[serde(default)]
    verification_note: Option<String>,
}

fn json_records<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<(usize, T)>> {
    let values: Vec<serde_json::Value> = serde_json::from_str(text)?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v)
                .map(|r| (i + 1, r))
                .map_err(|e| Error::MalformedRow { row: i + 1, reason: e.to_string() })
        })
        .collect()
}

/// Parse index-test predictions.
pub fn load_predictions(source: impl Read, format: Format, kind: PredictionKind) -> Result<Vec<PredictionRecord>> {
    let text = read_utf8(source)?;
    match format {
        Format::Csv => {
            let (header, rows) = csv_rows(&text)?;
            let id_col = header.require(&["study_id"])?;
            let value_col = header.require(&["value", "score"])?;
            let time_col = header.optional("processing_time");
            rows.into_iter()
                .map(|(row, rec)| {
                    let study_id = parse_study_id(row, &rec[id_col])?;
                    let v = parse_number(row, "value", &rec[value_col])?;
                    let processing_time = match time_col.map(|c| rec[c].trim()) {
                        None | Some("") => None,
                        Some(raw) => Some(parse_number(row, "processing_time", raw)?),
                    };
                    Ok(PredictionRecord {
                        study_id,
                        value: make_prediction(row, v, kind)?,
                        processing_time: check_time(row, processing_time)?,
                    })
                })
                .collect()
        }
        Format::Json => json_records::<RawPrediction>(&text)?
            .into_iter()
            .map(|(row, raw)| {
                Ok(PredictionRecord {
                    study_id: parse_study_id(row, &raw.study_id)?,
                    value: make_prediction(row, raw.value, kind)?,
                    processing_time: check_time(row, raw.processing_time)?,
                })
            })
            .collect(),
    }
}

/// Parse reference labels.
pub fn load_reference(source: impl Read, format: Format) -> Result<Vec<ReferenceRecord>> {
    let text = read_utf8(source)?;
    match format {
        Format::Csv => {
            let (header, rows) = csv_rows(&text)?;
            let id_col = header.require(&["study_id"])?;
            let label_col = header.require(&["label"])?;
            let note_col = header.optional("verification_note");
            rows.into_iter()
                .map(|(row, rec)| {
                    let label = parse_number(row, "label", &rec[label_col])?;
                    Ok(ReferenceRecord {
                        study_id: parse_study_id(row, &rec[id_col])?,
                        label: parse_binary(row, "label", label)?,
                        verification_note: note_col.map(|c| rec[c].to_string()).filter(|s| !s.is_empty()),
                    })
                })
                .collect()
        }
        Format::Json => json_records::<RawReference>(&text)?
            .into_iter()
            .map(|(row, raw)| {
                Ok(ReferenceRecord {
                    study_id: parse_study_id(row, &raw.study_id)?,
                    label: parse_binary(row, "label", raw.label)?,
                    verification_note: raw.verification_note,
                })
            })
            .collect(),
    }
}

fn format_value(p: &Prediction) -> serde_json::Value {
    match *p {
        Prediction::Binary(b) => serde_json::Value::from(u8::from(b)),
        Prediction::Score(s) => serde_json::Value::from(s),
    }
}

/// Serialize predictions in the same schema [`load_predictions`] accepts.
pub fn write_predictions(records: &[PredictionRecord], format: Format) -> Result<String> {
    let with_time = records.iter().any(|r| r.processing_time.is_some());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["study_id", "value"];
            if with_time {
                header.push("processing_time");
            }
            write_csv_row(&mut w, &header)?;
            for r in records {
                let mut row = vec![r.study_id.clone(), format_value(&r.value).to_string()];
                if with_time {
                    row.push(r.processing_time.map(|t| t.to_string()).unwrap_or_default());
                }
                write_csv_row(&mut w, &row)?;
            }
            finish_csv(w)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = records
                .iter()
                .map(|r| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("study_id".into(), r.study_id.clone().into());
                    obj.insert("value".into(), format_value(&r.value));
                    if let Some(t) = r.processing_time {
                        obj.insert("processing_time".into(), t.into());
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            Ok(serde_json::to_string_pretty(&items)?)
        }
    }
}

/// Serialize reference labels in the same schema [`load_reference`] accepts.
pub fn write_reference(records: &[ReferenceRecord], format: Format) -> Result<String> {
    let with_note = records.iter().any(|r| r.verification_note.is_some());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["study_id", "label"];
            if with_note {
                header.push("verification_note");
            }
            write_csv_row(&mut w, &header)?;
            for r in records {
                let mut row = vec![r.study_id.clone(), u8::from(r.label).to_string()];
                if with_note {
                    row.push(r.verification_note.clone().unwrap_or_default());
                }
                write_csv_row(&mut w, &row)?;
            }
            finish_csv(w)
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = records
                .iter()
                .map(|r| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("study_id".into(), r.study_id.clone().into());
                    obj.insert("label".into(), u8::from(r.label).into());
                    if let Some(n) = &r.verification_note {
                        obj.insert("verification_note".into(), n.clone().into());
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            Ok(serde_json::to_string_pretty(&items)?)
        }
    }
}

fn write_csv_row<I, T>(w: &mut csv::Writer<Vec<u8>>, row: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Utf8(e.to_string()))
}

fn ensure_unique<'a>(side: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateStudyId { side, id: id.to_string() });
        }
    }
    Ok(())
}

/// Inner-join predictions and reference labels on `study_id`.
pub fn join_records(preds: &[PredictionRecord], refs: &[ReferenceRecord]) -> Result<JoinReport> {
    ensure_unique("prediction", preds.iter().map(|p| p.study_id.as_str()))?;
    ensure_unique("reference", refs.iter().map(|r| r.study_id.as_str()))?;

    let labels: HashMap<&str, bool> = refs.iter().map(|r| (r.study_id.as_str(), r.label)).collect();
    let mut report = JoinReport::default();
    for p in preds {
        match labels.get(p.study_id.as_str()) {
            Some(&actual) => {
                report.pairs.push(PairedOutcome { study_id: p.study_id.clone(), predicted: p.value, actual })
            }
            None => report.unmatched_predictions.push(p.study_id.clone()),
        }
    }
    let predicted: HashSet<&str> = preds.iter().map(|p| p.study_id.as_str()).collect();
    report.unmatched_reference =
        refs.iter().filter(|r| !predicted.contains(r.study_id.as_str())).map(|r| r.study_id.clone()).collect();
    Ok(report)
}
