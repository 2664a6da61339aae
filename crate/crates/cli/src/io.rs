//! CSV ingestion and emission.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! written and read back is bit-identical.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::CliError;

/// A numeric table and its header row, if the file had one.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub values: Array2<f64>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// The single column of a one-column table, or an error naming `path`.
    pub fn into_vector(self, path: &Path) -> Result<Array1<f64>, CliError> {
        if self.cols() != 1 {
            return Err(CliError::Shape(format!(
                "{}: expected a single column, found {}",
                path.display(),
                self.cols()
            )));
        }
        Ok(self.values.column(0).to_owned())
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok()
}

/// Parse CSV text. A first row in which no cell is numeric is taken as a header.
pub fn parse_csv(text: &str, origin: &str) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut header = None;
    let mut width = None;
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Csv {
            path: origin.to_owned(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if k == 0 && record.iter().all(|c| parse_cell(c).is_none()) {
            header = Some(record.iter().map(str::to_owned).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CliError::RaggedRows {
                path: origin.to_owned(),
                line,
                expected,
                got: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| CliError::NonNumericCell {
                path: origin.to_owned(),
                line,
                column: col + 1,
                cell: cell.to_owned(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Shape(format!("{origin}: no data rows")));
    }
    let values = Array2::from_shape_vec((rows, width.unwrap_or(0)), data)
        .map_err(|e| CliError::Shape(format!("{origin}: {e}")))?;
    log::debug!(
        "{origin}: {} rows x {} columns",
        values.nrows(),
        values.ncols()
    );
    Ok(Table { header, values })
}

pub fn load_csv(path: &Path) -> Result<Table, CliError> {
    let text = read_text(path)?;
    parse_csv(&text, &path.display().to_string())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Collects rows in memory and writes them in one go.
#[derive(Debug, Default)]
pub struct CsvOut {
    buf: String,
}

impl CsvOut {
    pub fn with_header(cols: &[&str]) -> Self {
        let mut out = Self::default();
        out.row(cols);
        out
    }

    pub fn row<D: Display>(&mut self, cells: &[D]) {
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(&c.to_string());
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.buf.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)
}

pub fn matrix_to_csv(values: &Array2<f64>) -> String {
    let mut out = CsvOut::default();
    for row in values.rows() {
        out.row(&row.to_vec());
    }
    out.buf
}
