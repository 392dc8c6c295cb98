use std::io::{Read, Write};
use std::path::Path;

use super::CliError;

/// A numeric CSV table held column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Splits off the response column; the remaining columns become the
    /// column-major design in their original order.
    pub fn split_response(&self, response: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<String>), CliError> {
        let r = self
            .column_index(response)
            .ok_or_else(|| CliError::csv(format!("response column '{response}' not found")))?;
        let mut x = Vec::with_capacity(self.rows() * (self.names.len() - 1));
        let mut names = Vec::with_capacity(self.names.len() - 1);
        for (c, col) in self.columns.iter().enumerate() {
            if c != r {
                x.extend_from_slice(col);
                names.push(self.names[c].clone());
            }
        }
        if names.is_empty() {
            return Err(CliError::csv("no predictor columns besides the response"));
        }
        Ok((self.columns[r].clone(), x, names))
    }
}

/// Parses comma-separated text with a header row. Every cell must be a
/// finite number; empty and NA cells are rejected.
pub fn parse_csv(reader: impl Read) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::csv(format!("header: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(CliError::csv("header has an empty column name"));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(CliError::csv(format!("duplicate column name '{dup}'")));
    }
    let mut columns = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(format!("row {}: {e}", i + 2)))?;
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::csv(format!("row {}, column '{}': '{}' is not a number", i + 2, names[c], cell))
            })?;
            if !v.is_finite() {
                return Err(CliError::csv(format!("row {}, column '{}': non-finite value", i + 2, names[c])));
            }
            columns[c].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(CliError::csv("no data rows"));
    }
    Ok(Table { names, columns })
}

pub fn read_csv(path: &Path) -> Result<(Table, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::csv(format!("{}: {e}", path.display())))?;
    Ok((parse_csv(bytes.as_slice())?, bytes))
}

/// Writes the table with shortest round-trip float formatting.
pub fn write_csv(table: &Table, out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::io(e.to_string());
    w.write_record(&table.names).map_err(io)?;
    for i in 0..table.rows() {
        w.write_record(table.columns.iter().map(|c| format!("{:?}", c[i]))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(e.to_string()))
}
