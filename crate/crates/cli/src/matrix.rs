//! CSV matrices and comma-separated vectors of complex literals.

use std::io::Read;

use wirtinger_core::tensor::{parse_complex, ComplexScalar, ComplexTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixError {
    pub line: Option<u64>,
    pub message: String,
}

impl std::fmt::Display for MatrixError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Reads a square complex matrix: one row per line, comma-separated
/// literals, no header.
pub fn read_square_matrix(reader: impl Read) -> Result<ComplexTensor, MatrixError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<ComplexScalar>> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| MatrixError {
            line: e.position().map(|p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                parse_complex(field).map_err(|e| MatrixError {
                    line,
                    message: format!("column {}: {e}", col + 1),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(MatrixError {
                    line,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(MatrixError {
            line: None,
            message: "matrix file is empty".into(),
        });
    }
    if rows[0].len() != n {
        return Err(MatrixError {
            line: None,
            message: format!(
                "matrix must be square, got {n} rows and {} columns",
                rows[0].len()
            ),
        });
    }
    ComplexTensor::matrix(rows).map_err(|e| MatrixError {
        line: None,
        message: e.to_string(),
    })
}

/// Parses `a, b, c` into a vector.
pub fn parse_vector(text: &str) -> Result<ComplexTensor, wirtinger_core::Error> {
    let entries = text
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(parse_complex)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComplexTensor::vector(entries))
}
