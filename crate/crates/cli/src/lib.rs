//! Command-line front end for rank confidence sets: count-table ingestion,
//! category grouping, per-group analysis, method comparison and plot data.

pub mod analyze;
pub mod app;
pub mod compare;
pub mod dataset;
pub mod error;
pub mod group;
pub mod plotdata;

pub use analyze::{analyze, analyze_many, AnalyzeOptions, Report, ReportRow, Targets};
pub use compare::{compare_methods, ComparisonMatrix};
pub use dataset::{ingest, read_csv, read_json, write_csv, write_json, Dataset, Format, Group};
pub use error::{CliError, Result};
pub use group::{group_small, GroupSpec};
pub use plotdata::{emit_plotdata, write_plotdata};
