//! CSV ingestion and emission.
//!
//! Input files carry a header row and one observation per row; missing
//! responses are encoded as an empty field or the literal `NA`. Raw values
//! are split into a `(DenseMatrix, ObservationMask)` pair at this boundary,
//! so matrices never carry missing markers internally. All numeric output
//! uses the shortest round-trip representation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::matrix::{DenseMatrix, ObservationMask};

/// A parsed CSV: values in row-major order, `None` marking missing fields.
#[derive(Debug, Clone)]
pub struct RawMatrix {
    pub headers: Vec<String>,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Option<f64>>,
}

fn csv_err(path: &Path, msg: String) -> CoreError {
    CoreError::Csv {
        path: path.display().to_string(),
        msg,
    }
}

/// Read a CSV with a mandatory header row.
pub fn read_csv_matrix(path: &Path) -> Result<RawMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e.to_string()))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e.to_string()))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let cols = headers.len();
    if cols == 0 {
        return Err(csv_err(path, "no columns found in header row".into()));
    }

    let mut values = Vec::new();
    let mut rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e.to_string()))?;
        let line = idx + 2; // 1-based, after the header
        if record.len() != cols {
            return Err(csv_err(
                path,
                format!(
                    "line {line}: expected {cols} fields, found {}",
                    record.len()
                ),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() || field == "NA" {
                values.push(None);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    csv_err(
                        path,
                        format!("line {line}, column {}: cannot parse '{field}'", j + 1),
                    )
                })?;
                if !v.is_finite() {
                    return Err(csv_err(
                        path,
                        format!("line {line}, column {}: non-finite value {v}", j + 1),
                    ));
                }
                values.push(Some(v));
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(csv_err(path, "no data rows after the header".into()));
    }
    Ok(RawMatrix {
        headers,
        rows,
        cols,
        values,
    })
}

/// Convert raw response values to a dense matrix plus mask: missing fields
/// become unobserved zeros.
pub fn split_missing(raw: &RawMatrix) -> Result<(DenseMatrix, ObservationMask)> {
    let mut data = Vec::with_capacity(raw.values.len());
    let mut observed = Vec::with_capacity(raw.values.len());
    for v in &raw.values {
        match v {
            Some(x) => {
                data.push(*x);
                observed.push(true);
            }
            None => {
                data.push(0.0);
                observed.push(false);
            }
        }
    }
    let m = DenseMatrix::from_vec(raw.rows, raw.cols, data)?;
    let mask = ObservationMask::new(raw.rows, raw.cols, observed)?;
    Ok((m, mask))
}

/// Convert raw values to a dense matrix, rejecting any missing field (for
/// design matrices, which must be complete).
pub fn to_dense(raw: &RawMatrix, path: &Path) -> Result<DenseMatrix> {
    let mut data = Vec::with_capacity(raw.values.len());
    for (idx, v) in raw.values.iter().enumerate() {
        match v {
            Some(x) => data.push(*x),
            None => {
                return Err(csv_err(
                    path,
                    format!(
                        "line {}, column {}: missing values are only allowed in responses",
                        idx / raw.cols + 2,
                        idx % raw.cols + 1
                    ),
                ));
            }
        }
    }
    DenseMatrix::from_vec(raw.rows, raw.cols, data)
}

fn io_err(path: &Path, source: std::io::Error) -> CoreError {
    CoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write a matrix as CSV with `prefix0..prefixN` headers and full-precision
/// (shortest round-trip) values.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix, prefix: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let header: Vec<String> = (0..m.cols()).map(|j| format!("{prefix}{j}")).collect();
    writeln!(w, "{}", header.join(",")).map_err(|e| io_err(path, e))?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(",")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Write a single named column.
pub fn write_vector_csv(path: &Path, name: &str, values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{name}").map_err(|e| io_err(path, e))?;
    for v in values {
        writeln!(w, "{v}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Write rows of pre-formatted fields under a header.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.join(",")).map_err(|e| io_err(path, e))?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("rrr_core_io_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn reads_missing_markers() {
        let path = write_temp("y.csv", "a,b\n1.0,2.0\nNA,3.5\n4.0,\n");
        let raw = read_csv_matrix(&path).unwrap();
        assert_eq!(raw.rows, 3);
        assert_eq!(raw.cols, 2);
        assert_eq!(raw.values[2], None);
        assert_eq!(raw.values[5], None);
        let (m, mask) = split_missing(&raw).unwrap();
        assert_eq!(m[(1, 0)], 0.0);
        assert!(!mask.is_observed(1, 0));
        assert!(mask.is_observed(0, 1));
        assert_eq!(mask.observed_count(), 4);
    }

    #[test]
    fn design_matrices_must_be_complete() {
        let path = write_temp("x.csv", "a,b\n1.0,NA\n");
        let raw = read_csv_matrix(&path).unwrap();
        let err = to_dense(&raw, &path).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let path = write_temp("bad.csv", "a,b\n1.0,2.0\n3.0,zebra\n");
        let err = read_csv_matrix(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("zebra"), "{msg}");

        let ragged = write_temp("ragged.csv", "a,b\n1.0\n");
        assert!(read_csv_matrix(&ragged).is_err());
    }

    #[test]
    fn round_trips_full_precision() {
        let m = DenseMatrix::from_vec(2, 2, vec![0.1, 1.0 / 3.0, -2.5e-17, 7.0]).unwrap();
        let dir = std::env::temp_dir().join("rrr_core_io_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        write_matrix_csv(&path, &m, "c").unwrap();
        let raw = read_csv_matrix(&path).unwrap();
        let back = to_dense(&raw, &path).unwrap();
        assert_eq!(m.data(), back.data());
        assert_eq!(raw.headers, vec!["c0", "c1"]);
    }
}
