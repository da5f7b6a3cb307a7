//! Dataset and model files.
//!
//! Datasets are CSV with an epoch column followed by one column per feature,
//! or JSON lines of `{"epoch": ..., "counts": [...]}`. Models are versioned JSON.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PlmmError, Result};
use crate::link::{LinkParameters, SubModel};
use crate::mm::{CountVector, MixtureModel, TemporalDataset};

/// Current model file schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("jsonl") => DatasetFormat::Jsonl,
            _ => DatasetFormat::Csv,
        }
    }
}

/// A dataset together with its feature names and epoch tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub features: Vec<String>,
    /// One token per epoch, in ascending order.
    pub epoch_ids: Vec<String>,
    pub dataset: TemporalDataset,
}

impl DatasetFile {
    /// Default names `f1..fD` and epoch tokens `1..T`.
    pub fn with_default_names(dataset: TemporalDataset) -> Self {
        Self {
            features: (1..=dataset.dim()).map(|j| format!("f{j}")).collect(),
            epoch_ids: (1..=dataset.num_epochs()).map(|t| t.to_string()).collect(),
            dataset,
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> PlmmError {
    PlmmError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Sort key of an epoch token: plain integers, or a shared prefix with an integer suffix.
fn epoch_order(tokens: &[String]) -> std::result::Result<Vec<(String, u64)>, String> {
    let split = |t: &str| {
        let cut = t.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (prefix, digits) = t.split_at(cut);
        digits.parse::<u64>().ok().map(|n| (prefix.to_string(), n))
    };
    let keys: Vec<(String, u64)> = tokens
        .iter()
        .map(|t| split(t).ok_or_else(|| format!("epoch token {t:?} has no numeric suffix")))
        .collect::<std::result::Result<_, _>>()?;
    if let Some(first) = keys.first() {
        if let Some(other) = keys.iter().find(|k| k.0 != first.0) {
            return Err(format!(
                "epoch tokens mix prefixes {:?} and {:?}; ordering is ambiguous",
                first.0, other.0
            ));
        }
    }
    Ok(keys)
}

/// Groups rows by epoch token in ascending order.
fn group_rows(
    path: &Path,
    rows: Vec<(usize, String, Vec<u32>)>,
) -> Result<(Vec<String>, TemporalDataset)> {
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let mut by_token: BTreeMap<String, Vec<CountVector>> = BTreeMap::new();
    let mut first_line: BTreeMap<String, usize> = BTreeMap::new();
    for (line, token, counts) in rows {
        first_line.entry(token.clone()).or_insert(line);
        by_token
            .entry(token)
            .or_default()
            .push(CountVector::new(counts).map_err(|e| parse_err(path, line, e.to_string()))?);
    }
    let tokens: Vec<String> = by_token.keys().cloned().collect();
    let keys = epoch_order(&tokens).map_err(|m| parse_err(path, first_line[&tokens[0]], m))?;
    let mut order: Vec<usize> = (0..tokens.len()).collect();
    order.sort_by_key(|&i| keys[i].1);
    if let Some(w) = order.windows(2).find(|w| keys[w[0]].1 == keys[w[1]].1) {
        return Err(parse_err(
            path,
            first_line[&tokens[w[1]]],
            format!(
                "epoch tokens {:?} and {:?} have the same rank",
                tokens[w[0]], tokens[w[1]]
            ),
        ));
    }
    let ids: Vec<String> = order.iter().map(|&i| tokens[i].clone()).collect();
    let epochs = ids
        .iter()
        .map(|t| by_token.remove(t).expect("token present"))
        .collect();
    Ok((ids, TemporalDataset::new(epochs)?))
}

fn parse_count(path: &Path, line: usize, field: &str) -> Result<u32> {
    let v: i64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("count {field:?} is not an integer")))?;
    if v < 0 {
        return Err(parse_err(path, line, format!("negative count {v}")));
    }
    u32::try_from(v).map_err(|_| parse_err(path, line, format!("count {v} is too large")))
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<DatasetFile> {
    match format {
        DatasetFormat::Csv => load_csv(path),
        DatasetFormat::Jsonl => load_jsonl(path),
    }
}

fn load_csv(path: &Path) -> Result<DatasetFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => PlmmError::Io(io),
            other => parse_err(path, 1, format!("{other:?}")),
        })?;
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if header.len() < 3 {
        return Err(parse_err(
            path,
            1,
            "header needs an epoch column and at least two features",
        ));
    }
    let features: Vec<String> = header
        .iter()
        .skip(1)
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let token = record[0].trim().to_string();
        if token.is_empty() {
            return Err(parse_err(path, line, "empty epoch identifier"));
        }
        let counts = record
            .iter()
            .skip(1)
            .map(|f| parse_count(path, line, f))
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, token, counts));
    }
    let (epoch_ids, dataset) = group_rows(path, rows)?;
    Ok(DatasetFile {
        features,
        epoch_ids,
        dataset,
    })
}

#[derive(Deserialize)]
struct JsonRow {
    epoch: serde_json::Value,
    counts: Vec<i64>,
}

fn load_jsonl(path: &Path) -> Result<DatasetFile> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let row: JsonRow =
            serde_json::from_str(&text).map_err(|e| parse_err(path, line_no, e.to_string()))?;
        let token = match row.epoch {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("epoch must be a string or integer, got {other}"),
                ))
            }
        };
        if *dim.get_or_insert(row.counts.len()) != row.counts.len() {
            return Err(parse_err(
                path,
                line_no,
                format!(
                    "expected {} counts, found {}",
                    dim.unwrap_or(0),
                    row.counts.len()
                ),
            ));
        }
        let counts = row
            .counts
            .iter()
            .map(|c| parse_count(path, line_no, &c.to_string()))
            .collect::<Result<Vec<_>>>()?;
        rows.push((line_no, token, counts));
    }
    let (epoch_ids, dataset) = group_rows(path, rows)?;
    Ok(DatasetFile {
        features: (1..=dataset.dim()).map(|j| format!("f{j}")).collect(),
        epoch_ids,
        dataset,
    })
}

fn check_names(file: &DatasetFile) -> Result<()> {
    if file.features.len() != file.dataset.dim() {
        return Err(PlmmError::DimensionMismatch {
            expected: file.dataset.dim(),
            found: file.features.len(),
        });
    }
    if file.epoch_ids.len() != file.dataset.num_epochs() {
        return Err(PlmmError::DimensionMismatch {
            expected: file.dataset.num_epochs(),
            found: file.epoch_ids.len(),
        });
    }
    Ok(())
}

pub fn save_dataset(path: &Path, file: &DatasetFile, format: DatasetFormat) -> Result<()> {
    check_names(file)?;
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        DatasetFormat::Csv => {
            write!(out, "epoch")?;
            for f in &file.features {
                write!(out, ",{f}")?;
            }
            writeln!(out)?;
            for (id, epoch) in file.epoch_ids.iter().zip(file.dataset.epochs()) {
                for x in epoch {
                    write!(out, "{id}")?;
                    for c in x.counts() {
                        write!(out, ",{c}")?;
                    }
                    writeln!(out)?;
                }
            }
        }
        DatasetFormat::Jsonl => {
            for (id, epoch) in file.epoch_ids.iter().zip(file.dataset.epochs()) {
                for x in epoch {
                    let row = serde_json::json!({ "epoch": id, "counts": x.counts() });
                    writeln!(out, "{row}")?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub delta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
}

/// On-disk form of one epoch's model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub schema_version: u32,
    pub k: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub submodel: Option<SubModel>,
    pub links: Option<LinkRecord>,
}

impl ModelRecord {
    pub fn new(
        model: &MixtureModel<f64>,
        submodel: Option<SubModel>,
        links: Option<&LinkParameters<f64>>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            k: model.k(),
            dim: model.dim(),
            weights: model.weights().to_vec(),
            components: model.components().to_vec(),
            submodel,
            links: links.map(|l| LinkRecord {
                delta: l.delta().to_vec(),
                gamma: l.gamma().to_vec(),
            }),
        }
    }

    /// Validates the record and rebuilds the typed values.
    pub fn into_parts(
        self,
    ) -> Result<(
        MixtureModel<f64>,
        Option<SubModel>,
        Option<LinkParameters<f64>>,
    )> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(PlmmError::Schema(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let model = MixtureModel::new(self.weights, self.components)?;
        if model.k() != self.k || model.dim() != self.dim {
            return Err(PlmmError::Schema(format!(
                "declared shape {}x{} does not match parameters {}x{}",
                self.k,
                self.dim,
                model.k(),
                model.dim()
            )));
        }
        let links = match (self.submodel, self.links) {
            (Some(sm), Some(rec)) => {
                let links = LinkParameters::new(rec.delta, rec.gamma)?;
                if links.k() != model.k() || links.dim() != model.dim() {
                    return Err(PlmmError::Schema(
                        "link shape does not match the model".into(),
                    ));
                }
                links.validate(sm)?;
                Some(links)
            }
            (None, None) => None,
            _ => {
                return Err(PlmmError::Schema(
                    "submodel and links must be given together".into(),
                ))
            }
        };
        Ok((model, self.submodel, links))
    }
}

/// Parses a model record, rejecting files without a schema version.
pub fn model_from_json(
    text: &str,
) -> Result<(
    MixtureModel<f64>,
    Option<SubModel>,
    Option<LinkParameters<f64>>,
)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("schema_version").is_none() {
        return Err(PlmmError::Schema(format!(
            "missing schema_version; files written before versioning must be migrated by adding \"schema_version\": {SCHEMA_VERSION}"
        )));
    }
    let record: ModelRecord = serde_json::from_value(value)?;
    record.into_parts()
}

pub fn save_model(
    path: &Path,
    model: &MixtureModel<f64>,
    submodel: Option<SubModel>,
    links: Option<&LinkParameters<f64>>,
) -> Result<()> {
    let record = ModelRecord::new(model, submodel, links);
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(
    path: &Path,
) -> Result<(
    MixtureModel<f64>,
    Option<SubModel>,
    Option<LinkParameters<f64>>,
)> {
    model_from_json(&std::fs::read_to_string(path)?)
}
