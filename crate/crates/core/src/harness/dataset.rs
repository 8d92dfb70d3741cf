use std::path::Path;

use thiserror::Error;

use crate::data::{DataError, Dataset, Matrix};

/// Label column of the embedded datasets and the default for external CSVs.
pub const DEFAULT_LABEL_COLUMN: &str = "class";

const EMBEDDED: [(&str, &str); 3] = [
    ("iris", include_str!("../../data/iris.csv")),
    ("wine", include_str!("../../data/wine.csv")),
    ("breast", include_str!("../../data/breast.csv")),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("`{0}` is neither an embedded dataset (iris, wine, breast) nor a readable file")]
    Unknown(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("no label column `{0}` in the header")]
    NoLabelColumn(String),
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("line {line}: empty label")]
    MissingLabel { line: u64 },
    #[error(transparent)]
    Data(#[from] DataError),
}

pub fn embedded_names() -> impl Iterator<Item = &'static str> {
    EMBEDDED.iter().map(|(n, _)| *n)
}

/// An embedded dataset by name, or a CSV file whose label column is `class`.
pub fn load_dataset(name_or_path: &str) -> Result<Dataset, DatasetError> {
    load_dataset_with(name_or_path, DEFAULT_LABEL_COLUMN)
}

pub fn load_dataset_with(name_or_path: &str, label_column: &str) -> Result<Dataset, DatasetError> {
    if let Some((name, text)) = EMBEDDED.iter().find(|(n, _)| *n == name_or_path) {
        return parse_csv(name, text.as_bytes(), DEFAULT_LABEL_COLUMN);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(DatasetError::Unknown(name_or_path.to_string()));
    }
    let bytes = std::fs::read(path).map_err(|e| DatasetError::Io {
        path: name_or_path.to_string(),
        message: e.to_string(),
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name_or_path);
    parse_csv(name, &bytes, label_column)
}

/// Header row required; every column except the label must be numeric.
/// Class indices follow first appearance.
pub fn parse_csv(name: &str, bytes: &[u8], label_column: &str) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let csv_err = |e: csv::Error| DatasetError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    let label = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DatasetError::NoLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut x = Matrix::zeros(0, feature_names.len());
    let mut y = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut row = Vec::with_capacity(feature_names.len());
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        row.clear();
        for (i, cell) in record.iter().enumerate() {
            if i == label {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DatasetError::NonNumeric {
                line,
                column: header[i].to_string(),
                value: cell.to_string(),
            })?;
            row.push(v);
        }
        let class = &record[label];
        if class.is_empty() {
            return Err(DatasetError::MissingLabel { line });
        }
        let c = match class_names.iter().position(|n| n == class) {
            Some(c) => c,
            None => {
                class_names.push(class.to_string());
                class_names.len() - 1
            }
        };
        x.push_row(&row);
        y.push(c);
    }
    Ok(Dataset::new(name, x, y, feature_names, class_names)?)
}
