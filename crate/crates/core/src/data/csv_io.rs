use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{DataError, Table};

pub const DEFAULT_LABEL_COLUMN: &str = "Label";

/// Loads a headed CSV file, splitting `label_column` off as the label vector.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Table, DataError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(DataError::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    read_csv(file, label_column)
}

/// Parses CSV from any reader. Row order is preserved.
pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<Table, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        if record.len() != header.len() {
            return Err(DataError::Csv(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let col = j + 1;
            let value = parse_cell(cell, row, col)?;
            if j == label_idx {
                labels.push(match value {
                    v if v == 0.0 => 0,
                    v if v == 1.0 => 1,
                    _ => return Err(DataError::InvalidLabel { row, value: cell.to_string() }),
                });
            } else {
                flat.push(value);
            }
        }
    }
    let features = Array2::from_shape_vec((labels.len(), names.len()), flat)
        .map_err(|e| DataError::ShapeMismatch(e.to_string()))?;
    Table::new(names, features, labels)
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64, DataError> {
    if cell.is_empty() {
        return Err(DataError::MissingValue { row, col });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_nan() => Err(DataError::MissingValue { row, col }),
        Ok(v) if v.is_infinite() => Err(DataError::NonFiniteCell { row, col }),
        Ok(v) => Ok(v),
        Err(_) => Err(DataError::NonNumericCell { row, col, value: cell.to_string() }),
    }
}

/// Writes `t` with the label as the last column. Values use the shortest
/// decimal form that parses back to the same `f64`.
pub fn write_csv(t: &Table, path: impl AsRef<Path>, label_column: &str) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut w = std::io::BufWriter::new(file);
    write_csv_to(t, &mut w, label_column)?;
    w.flush().map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

pub fn write_csv_to<W: Write>(t: &Table, writer: W, label_column: &str) -> Result<(), DataError> {
    if t.feature_names().iter().any(|n| n == label_column) {
        return Err(DataError::DuplicateName(label_column.to_string()));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    let mut header: Vec<&str> = t.feature_names().iter().map(String::as_str).collect();
    header.push(label_column);
    wtr.write_record(&header).map_err(csv_err)?;
    let mut fields = Vec::with_capacity(header.len());
    for (row, &label) in t.features().rows().into_iter().zip(t.labels()) {
        fields.clear();
        fields.extend(row.iter().map(|v| format!("{v:?}")));
        fields.push(label.to_string());
        wtr.write_record(&fields).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| DataError::Csv(e.to_string()))
}
