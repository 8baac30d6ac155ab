//! Plain-text numeric data loader: whitespace- or comma-separated columns,
//! `#` comments, blank lines ignored, every row must have the same width.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: usize,
    /// Row-major values, `rows() * columns` entries.
    pub values: Vec<f64>,
}

impl Table {
    pub fn rows(&self) -> usize {
        if self.columns == 0 {
            0
        } else {
            self.values.len() / self.columns
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.columns..(r + 1) * self.columns]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.row(r)[c]).collect()
    }
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut columns = 0usize;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let fields: Vec<&str> = line
            .split(|ch: char| ch.is_whitespace() || ch == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        if columns == 0 {
            columns = fields.len();
        } else if fields.len() != columns {
            return Err(Error::Parameter(format!(
                "line {}: expected {columns} columns, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Parameter(format!("line {}: bad number {f:?}", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parameter(format!("line {}: non-finite value {f:?}", lineno + 1)));
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::Parameter("no data rows found".into()));
    }
    Ok(Table { columns, values })
}

pub fn load_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parameter(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text)
}
