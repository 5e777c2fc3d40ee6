//! Pairwise "strictly wider" percentages between methods.

use std::io::Write;

use serde::Serialize;

use crate::analyze::Report;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonMatrix {
    pub methods: Vec<String>,
    /// `cells[r][c]`: percent of cells where method `r` is strictly wider
    /// than method `c`. `None` on the diagonal.
    pub cells: Vec<Vec<Option<f64>>>,
    pub cell_count: usize,
}

impl ComparisonMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.methods.iter().position(|m| m == row)?;
        let c = self.methods.iter().position(|m| m == col)?;
        self.cells[r][c]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["method".to_string()];
        header.extend(self.methods.iter().cloned());
        w.write_record(&header)
            .map_err(|e| CliError::input(e.to_string()))?;
        for (name, row) in self.methods.iter().zip(&self.cells) {
            let mut record = vec![name.clone()];
            record.extend(
                row.iter()
                    .map(|c| c.map(|v| format!("{v:.1}")).unwrap_or_default()),
            );
            w.write_record(&record)
                .map_err(|e| CliError::input(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::io("<output>", e))
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let width = self
            .methods
            .iter()
            .map(|m| m.len())
            .max()
            .unwrap_or(0)
            .max(6);
        write!(out, "{:width$}", "")?;
        for m in &self.methods {
            write!(out, "  {m:>width$}")?;
        }
        writeln!(out)?;
        for (name, row) in self.methods.iter().zip(&self.cells) {
            write!(out, "{name:width$}")?;
            for c in row {
                match c {
                    Some(v) => write!(out, "  {:>width$}", format!("{v:.1}"))?,
                    None => write!(out, "  {:>width$}", "")?,
                }
            }
            writeln!(out)?;
        }
        writeln!(out, "({} group x category cells)", self.cell_count)
    }
}

/// Requires at least two reports over the same groups and categories.
pub fn compare_methods(reports: &[Report]) -> Result<ComparisonMatrix> {
    if reports.len() < 2 {
        return Err(CliError::input("comparison needs at least two reports"));
    }
    let base = &reports[0];
    for r in &reports[1..] {
        let same = r.rows.len() == base.rows.len()
            && r.rows
                .iter()
                .zip(&base.rows)
                .all(|(a, b)| a.group == b.group && a.category == b.category && a.count == b.count);
        if !same {
            return Err(CliError::input(format!(
                "reports for {} and {} cover different datasets",
                base.method, r.method
            )));
        }
    }
    let total = base.rows.len();
    if total == 0 {
        return Err(CliError::input("reports have no rows"));
    }
    let cells = reports
        .iter()
        .enumerate()
        .map(|(i, a)| {
            reports
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    (i != k).then(|| {
                        let wider = a
                            .rows
                            .iter()
                            .zip(&b.rows)
                            .filter(|(x, y)| x.length() > y.length())
                            .count();
                        100.0 * wider as f64 / total as f64
                    })
                })
                .collect()
        })
        .collect();
    Ok(ComparisonMatrix {
        methods: reports.iter().map(|r| r.method.to_string()).collect(),
        cells,
        cell_count: total,
    })
}
