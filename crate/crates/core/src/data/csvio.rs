use std::io::{Read, Write};
use std::path::Path;

use super::{LabeledDataset, UnlabeledDataset};
use crate::nn::Matrix;
use crate::{Error, Result};

/// Which columns of a CSV file to read.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvSchema {
    /// Outcome column (`0`/`1`); `None` loads an unlabeled set.
    pub label_column: Option<String>,
    /// Feature columns in order; `None` takes every non-label column.
    pub feature_columns: Option<Vec<String>>,
}

impl CsvSchema {
    pub fn labeled(label: &str) -> Self {
        Self {
            label_column: Some(label.to_owned()),
            feature_columns: None,
        }
    }

    pub fn unlabeled() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Labeled(LabeledDataset),
    Unlabeled(UnlabeledDataset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadReport {
    pub raw_rows: usize,
    pub kept_rows: usize,
    /// Rows with at least one empty cell.
    pub dropped_rows: usize,
}

/// Reads a header-first, comma-separated file. Rows with missing values are
/// dropped and counted; anything else that fails to parse is an error
/// carrying its line number.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<(Loaded, LoadReport)> {
    read_csv(std::fs::File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<(Loaded, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("unknown column '{name}'")))
    };
    let label_idx = schema.label_column.as_deref().map(find).transpose()?;
    let feature_idx: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_>>()?,
        None => (0..header.len())
            .filter(|&i| Some(i) != label_idx)
            .collect(),
    };
    if feature_idx.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    let names: Vec<String> = feature_idx.iter().map(|&i| header[i].clone()).collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut report = LoadReport {
        raw_rows: 0,
        kept_rows: 0,
        dropped_rows: 0,
    };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        report.raw_rows += 1;
        let cell = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        let used = feature_idx.iter().chain(label_idx.iter());
        if used.clone().any(|&i| cell(i).is_empty()) {
            report.dropped_rows += 1;
            continue;
        }
        for &i in &feature_idx {
            let v: f64 = cell(i).parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column '{}': cannot parse '{}' as a number",
                    header[i],
                    cell(i)
                ),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column '{}': non-finite value", header[i]),
                });
            }
            data.push(v);
        }
        if let Some(li) = label_idx {
            let y = match cell(li) {
                "0" | "0.0" => 0,
                "1" | "1.0" => 1,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("label '{other}' is not 0 or 1"),
                    })
                }
            };
            labels.push(y);
        }
        report.kept_rows += 1;
    }
    let features = Matrix::from_vec(report.kept_rows, names.len(), data)?;
    let loaded = if label_idx.is_some() {
        Loaded::Labeled(LabeledDataset::new(features, labels, names)?)
    } else {
        Loaded::Unlabeled(UnlabeledDataset::new(features, names)?)
    };
    Ok((loaded, report))
}

/// Writes features followed by the label column. Numbers use the shortest
/// representation that parses back to the identical value.
pub fn write_labeled_csv<W: Write>(
    writer: W,
    data: &LabeledDataset,
    label_column: &str,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = data.feature_names.clone();
    header.push(label_column.to_owned());
    w.write_record(&header)?;
    for (r, y) in data.features.iter_rows().zip(&data.labels) {
        let mut rec: Vec<String> = r.iter().map(f64::to_string).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_unlabeled_csv<W: Write>(writer: W, data: &UnlabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&data.feature_names)?;
    for r in data.features.iter_rows() {
        w.write_record(r.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}
