use std::collections::HashSet;
use std::path::Path;

use super::Dataset;
use crate::engine::Tensor;
use crate::error::{Error, Result};

/// Reads a headered numeric CSV; `label_column` holds non-negative integer
/// class labels and every other column is a feature.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut seen = HashSet::new();
    if let Some(dup) = headers.iter().find(|h| !seen.insert(*h)) {
        return Err(Error::format(path, format!("duplicate column name {dup:?}")));
    }
    let label_index = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::format(path, format!("label column {label_column:?} not found")))?;
    let width = headers.len() - 1;
    if width == 0 {
        return Err(Error::format(path, "no feature columns"));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {}: {e}", r + 1)))?;
        for (c, cell) in record.iter().enumerate() {
            if c == label_index {
                let label = cell.parse::<usize>().map_err(|_| {
                    Error::format(path, format!("row {}: label {cell:?} is not a non-negative integer", r + 1))
                })?;
                labels.push(label);
            } else {
                let v = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::format(path, format!("row {}, column {:?}: {cell:?} is not a number", r + 1, &headers[c]))
                    })?;
                data.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    let class_count = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(Tensor::new(vec![labels.len(), width], data)?, labels, class_count, "csv")
}

/// Writes `f0..f{D-1},label`. Values use Rust's shortest round-trip formatting.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dataset.input_dim()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (i, &y) in dataset.labels().iter().enumerate() {
        let mut row: Vec<String> = dataset.inputs().row(i).iter().map(|v| v.to_string()).collect();
        row.push(y.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
