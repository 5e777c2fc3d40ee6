//! Count tables keyed by group and category, read from CSV or JSON.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ranksets::MultinomialSample;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CSV_HEADER: [&str; 3] = ["group", "category", "count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guess from the file extension; CSV when there is none.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::input(format!("unknown input format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub sample: MultinomialSample,
}

/// Named samples in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub source: String,
    groups: Vec<Group>,
}

impl Dataset {
    pub fn new(source: impl Into<String>, groups: Vec<Group>) -> Result<Self> {
        let mut seen = HashMap::new();
        for g in &groups {
            if seen.insert(g.name.as_str(), ()).is_some() {
                return Err(CliError::input(format!("duplicate group {:?}", g.name)));
            }
        }
        Ok(Self {
            source: source.into(),
            groups,
        })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn get(&self, name: &str) -> Option<&MultinomialSample> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .map(|g| &g.sample)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Applies `f` to every sample, keeping names and order.
    pub fn try_map<F>(&self, mut f: F) -> Result<Dataset>
    where
        F: FnMut(&Group) -> Result<MultinomialSample>,
    {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                Ok(Group {
                    name: g.name.clone(),
                    sample: f(g)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.source.clone(), groups)
    }
}

struct Row {
    group: String,
    category: String,
    count: u64,
    line: u64,
}

pub fn ingest(path: &Path, format: Option<Format>, drop_zero: bool) -> Result<Dataset> {
    let format = format.unwrap_or_else(|| Format::from_path(path));
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let source = path.display().to_string();
    match format {
        Format::Csv => read_csv(file, source, drop_zero),
        Format::Json => read_json(file, source, drop_zero),
    }
}

fn parse_count(raw: &str, line: u64) -> Result<u64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i128>() {
        if v < 0 {
            return Err(CliError::Parse {
                line,
                message: format!("negative count {v}"),
            });
        }
    }
    raw.parse::<u64>().map_err(|_| CliError::Parse {
        line,
        message: format!("count {raw:?} is not a non-negative integer"),
    })
}

/// Fields are trimmed of surrounding whitespace, quoted or not.
pub fn read_csv<R: Read>(reader: R, source: impl Into<String>, drop_zero: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        CliError::Parse {
            line,
            message: e.to_string(),
        }
    };
    let header = rdr.headers().map_err(csv_err)?.clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names.is_empty() || names.iter().all(|h| h.is_empty()) {
        return Err(CliError::Parse {
            line: 1,
            message: "missing header `group,category,count`".into(),
        });
    }
    if names != CSV_HEADER {
        return Err(CliError::Parse {
            line: 1,
            message: format!(
                "expected header `group,category,count`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let (group, category) = (&record[0], &record[1]);
        if group.is_empty() || category.is_empty() {
            return Err(CliError::Parse {
                line,
                message: "empty group or category".into(),
            });
        }
        rows.push(Row {
            group: group.to_string(),
            category: category.to_string(),
            count: parse_count(&record[2], line)?,
            line,
        });
    }
    assemble(source.into(), rows, drop_zero, "line")
}

#[derive(Deserialize)]
struct JsonRecord {
    group: String,
    category: String,
    count: serde_json::Number,
}

/// JSON input is an array of `{"group", "category", "count"}` objects;
/// errors name the 1-based record index.
pub fn read_json<R: Read>(
    reader: R,
    source: impl Into<String>,
    drop_zero: bool,
) -> Result<Dataset> {
    let records: Vec<JsonRecord> =
        serde_json::from_reader(reader).map_err(|e| CliError::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.into_iter().enumerate() {
        let index = i as u64 + 1;
        let count = match (r.count.as_u64(), r.count.as_i64()) {
            (Some(c), _) => c,
            (None, Some(c)) if c < 0 => {
                return Err(CliError::input(format!(
                    "record {index}: negative count {c}"
                )));
            }
            _ => {
                return Err(CliError::input(format!(
                    "record {index}: count {} is not a non-negative integer",
                    r.count
                )));
            }
        };
        if r.group.is_empty() || r.category.is_empty() {
            return Err(CliError::input(format!(
                "record {index}: empty group or category"
            )));
        }
        rows.push(Row {
            group: r.group,
            category: r.category,
            count,
            line: index,
        });
    }
    assemble(source.into(), rows, drop_zero, "record")
}

fn assemble(source: String, rows: Vec<Row>, drop_zero: bool, unit: &str) -> Result<Dataset> {
    if rows.is_empty() {
        return Err(CliError::input(format!("{source}: no data rows")));
    }
    let mut first_seen: HashMap<(&str, &str), u64> = HashMap::new();
    for r in &rows {
        if let Some(prev) = first_seen.insert((&r.group, &r.category), r.line) {
            let message = format!(
                "duplicate category {:?} in group {:?} (first at {unit} {prev})",
                r.category, r.group
            );
            return Err(if unit == "line" {
                CliError::Parse {
                    line: r.line,
                    message,
                }
            } else {
                CliError::input(format!("{unit} {}: {message}", r.line))
            });
        }
    }

    let mut order: Vec<&str> = Vec::new();
    let mut members: HashMap<&str, (Vec<String>, Vec<u64>)> = HashMap::new();
    for r in &rows {
        if drop_zero && r.count == 0 {
            continue;
        }
        let entry = members.entry(&r.group).or_insert_with(|| {
            order.push(&r.group);
            (Vec::new(), Vec::new())
        });
        entry.0.push(r.category.clone());
        entry.1.push(r.count);
    }
    let groups = order
        .into_iter()
        .map(|name| {
            let (labels, counts) = members.remove(name).expect("group recorded");
            let sample = MultinomialSample::new(labels, counts)
                .map_err(|e| CliError::input(format!("group {name:?}: {e}")))?;
            Ok(Group {
                name: name.to_string(),
                sample,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if groups.is_empty() {
        return Err(CliError::input(format!("{source}: every count is zero")));
    }
    Dataset::new(source, groups)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    group: &'a str,
    category: &'a str,
    count: u64,
}

/// Writes `dataset` in the CSV input schema.
pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for g in dataset.groups() {
        for (category, &count) in g.sample.labels().iter().zip(g.sample.counts()) {
            w.serialize(CsvRow {
                group: &g.name,
                category,
                count,
            })
            .map_err(|e| CliError::input(e.to_string()))?;
        }
    }
    w.flush()
        .map_err(|e| CliError::io(dataset.source.clone(), e))
}

/// Writes `dataset` as a JSON array of records.
pub fn write_json<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let rows: Vec<CsvRow> = dataset
        .groups()
        .iter()
        .flat_map(|g| {
            g.sample
                .labels()
                .iter()
                .zip(g.sample.counts())
                .map(move |(category, &count)| CsvRow {
                    group: &g.name,
                    category,
                    count,
                })
        })
        .collect();
    serde_json::to_writer_pretty(out, &rows).map_err(|e| CliError::input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_counts_kept_unless_dropped() {
        let text = "group,category,count\ng,a,3\ng,b,0\ng,c,1\n";
        assert_eq!(
            read_csv(text.as_bytes(), "t", false).unwrap().groups()[0]
                .sample
                .p(),
            3
        );
        assert_eq!(
            read_csv(text.as_bytes(), "t", true).unwrap().groups()[0]
                .sample
                .p(),
            2
        );
    }

    #[test]
    fn header_is_required() {
        let err = read_csv("g,a,3\ng,b,1\n".as_bytes(), "t", false).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn json_negative_count_names_record() {
        let text =
            r#"[{"group":"g","category":"a","count":2},{"group":"g","category":"b","count":-1}]"#;
        let err = read_json(text.as_bytes(), "t", false)
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("record 2") && err.contains("negative"),
            "{err}"
        );
    }
}
