//! Rectangular string tables written and read as RFC-4180 CSV.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses a numeric column; empty cells become NaN.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::Parse { source_name: "table".into(), line: 1, detail: format!("missing column '{name}'") })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = r[c].trim();
                if cell.is_empty() {
                    return Ok(f64::NAN);
                }
                cell.parse().map_err(|_| Error::Parse {
                    source_name: "table".into(),
                    line: i + 2,
                    detail: format!("'{cell}' in column '{name}' is not a number"),
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if !self.header.is_empty() {
            w.write_record(&self.header).expect("in-memory write");
        }
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn from_csv(text: &str, source_name: &str) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let perr = |line: usize, detail: String| Error::Parse { source_name: source_name.into(), line, detail };
        let header = rd.headers().map_err(|e| perr(1, e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| perr(i + 2, e.to_string()))?;
            rows.push(rec.iter().map(String::from).collect());
        }
        Ok(Table { header, rows })
    }
}

/// Full-precision float formatting shared by all tables.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}
