use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::ScoreMatrix;

/// Parses a score matrix from CSV: a header row `c0,c1,...` followed by one
/// row per entity. Row numbers in errors count the header as row 1.
pub fn parse_score_matrix(text: &str) -> Result<ScoreMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let width = reader
        .headers()
        .map_err(|e| Error::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .len();
    if width == 0 {
        return Err(Error::Csv {
            row: 1,
            message: "empty header".into(),
        });
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Csv {
            row,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(Error::Csv {
                row,
                message: format!("ragged row: {} fields, header has {width}", record.len()),
            });
        }
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                row,
                message: format!("non-numeric cell '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    row,
                    message: format!("non-finite cell '{cell}'"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    ScoreMatrix::new(rows, width, data)
}

pub fn load_score_matrix(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_score_matrix(&text)
}

/// Formats a matrix as CSV with LF line endings and a `c0,c1,...` header.
pub fn score_matrix_to_csv(m: &ScoreMatrix) -> String {
    let mut out = (0..m.cols()).map(|c| format!("c{c}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn save_score_matrix(m: &ScoreMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, score_matrix_to_csv(m)).map_err(|e| Error::io(path, e))
}
