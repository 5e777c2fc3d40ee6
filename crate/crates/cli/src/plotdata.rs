//! Plot-ready CSV: one row per group, category and method.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analyze::Report;
use crate::error::{CliError, Result};

#[derive(Serialize)]
struct PlotRow<'a> {
    group: &'a str,
    category: &'a str,
    theta_hat: f64,
    se: f64,
    method: &'a str,
    lo: usize,
    hi: usize,
}

pub fn write_plotdata<W: Write>(reports: &[Report], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let method = r.method.name();
        for row in &r.rows {
            w.serialize(PlotRow {
                group: &row.group,
                category: &row.category,
                theta_hat: row.theta_hat,
                se: row.se,
                method,
                lo: row.lo,
                hi: row.hi,
            })
            .map_err(|e| CliError::input(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| CliError::io("<plotdata>", e))
}

pub fn emit_plotdata(reports: &[Report], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_plotdata(reports, &mut out)?;
    out.flush().map_err(|e| CliError::io(path, e))
}
