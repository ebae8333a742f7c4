//! Self-describing CSV tables: provenance and units travel with the data.

use serde::Serialize;
use std::fmt::Write;

/// Where an artifact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            tool: "evac".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            seed,
        }
    }
}

/// A CSV table with `#`-prefixed metadata lines ahead of the header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    columns: Vec<(String, String)>,
    notes: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    /// `columns` pairs each column name with its unit ("1" for dimensionless).
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: {} {}", prov.tool, prov.version);
        let _ = writeln!(out, "# config_hash: {}", prov.config_hash);
        let _ = writeln!(out, "# seed: {}", prov.seed);
        let units: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
        let _ = writeln!(out, "# units: {}", units.join(" "));
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        let _ = writeln!(out, "{}", names.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Shortest round-tripping decimal; non-finite values as empty cells.
fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_metadata_then_rows() {
        let mut t = CsvTable::new(&[("d", "km"), ("F", "1")]).note("lambda_mix: 1");
        t.push(vec![0.0, 0.0]);
        t.push(vec![0.5, f64::NAN]);
        let s = t.render(&Provenance::new("abc", 7));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "# config_hash: abc");
        assert_eq!(lines[2], "# seed: 7");
        assert_eq!(lines[3], "# units: d[km] F[1]");
        assert_eq!(lines[4], "# lambda_mix: 1");
        assert_eq!(&lines[5..], &["d,F", "0,0", "0.5,"]);
    }

    #[test]
    #[should_panic]
    fn ragged_rows_rejected() {
        CsvTable::new(&[("a", "1")]).push(vec![1.0, 2.0]);
    }
}
