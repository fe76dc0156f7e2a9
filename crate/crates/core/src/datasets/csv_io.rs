use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Dataset;
use crate::numerics::{Matrix, SeededRng};
use crate::Error;

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    /// Column holding integer class labels.
    pub label_col: Option<usize>,
    /// Seeded uniform subsample size.
    pub max_rows: Option<usize>,
}

/// Canonical decimal rendering: shortest string that parses back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Reads a numeric CSV. A first row that does not parse as numbers is
/// treated as a header and skipped.
pub fn load_csv(path: &Path, opts: &CsvOptions, rng: &mut SeededRng) -> Result<Dataset, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let data_err = |row: usize, column: usize, message: String| Error::Data {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut width: Option<usize> = None;
    for (line, record) in reader.records().enumerate() {
        let row_no = line + 1;
        let record = record.map_err(|e| data_err(row_no, 0, e.to_string()))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if line == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(data_err(
                    row_no,
                    record.len().min(w) + 1,
                    format!("expected {w} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        if let Some(lc) = opts.label_col {
            if lc >= record.len() {
                return Err(data_err(
                    row_no,
                    lc + 1,
                    format!("label column {lc} out of range for {} columns", record.len()),
                ));
            }
        }
        let mut feats = Vec::with_capacity(record.len());
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == opts.label_col {
                let label = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| *v >= 0.0 && v.fract() == 0.0)
                    .ok_or_else(|| data_err(row_no, c + 1, format!("invalid label {cell:?}")))?;
                labels.push(label as usize);
            } else {
                let v = cell
                    .parse::<f64>()
                    .map_err(|_| data_err(row_no, c + 1, format!("non-numeric cell {cell:?}")))?;
                if !v.is_finite() {
                    return Err(data_err(row_no, c + 1, format!("non-finite cell {cell:?}")));
                }
                feats.push(v);
            }
        }
        rows.push(feats);
    }

    if rows.is_empty() {
        return Err(data_err(0, 0, "no data rows".into()));
    }

    let keep: Vec<usize> = match opts.max_rows {
        Some(n) if n < rows.len() => {
            let mut idx = rng.permutation(rows.len());
            idx.truncate(n);
            idx.sort_unstable();
            idx
        }
        _ => (0..rows.len()).collect(),
    };
    let selected: Vec<Vec<f64>> = keep.iter().map(|&i| std::mem::take(&mut rows[i])).collect();
    let features = Matrix::from_rows(&selected)?;
    let labels = opts
        .label_col
        .map(|_| keep.iter().map(|&i| labels[i]).collect::<Vec<_>>());
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(name, features, labels)
}

/// Writes the dataset with the label (if any) as the first column, LF line endings.
pub fn write_csv(path: &Path, ds: &Dataset) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for i in 0..ds.len() {
        let mut line = String::new();
        if let Some(labels) = &ds.labels {
            line.push_str(&labels[i].to_string());
            line.push(',');
        }
        let row = ds.features.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_f64(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}
