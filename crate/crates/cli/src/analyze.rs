//! Per-group rank confidence sets for one or more methods.

use std::fmt;
use std::str::FromStr;

use ranksets::method::{marginal_intervals, rank_cs_with};
use ranksets::{
    compute_ranks, BootstrapConfig, BootstrapDraws, FamilyKind, Method, MultinomialSample,
    RankInterval,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{CliError, Result};

/// Which targets `J0` each run uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Targets {
    /// One run per category with `J0 = {j}`.
    Marginal,
    /// One run with `J0 = J`.
    Simultaneous,
    /// One run for the named category only.
    Single(String),
}

impl FromStr for Targets {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix("single:") {
            if name.is_empty() {
                return Err(CliError::input("single: needs a category name"));
            }
            return Ok(Targets::Single(name.to_string()));
        }
        match s.to_ascii_lowercase().as_str() {
            "marginal" => Ok(Targets::Marginal),
            "simultaneous" | "all" => Ok(Targets::Simultaneous),
            other => Err(CliError::input(format!(
                "unknown target spec {other:?} (marginal, simultaneous, all or single:<name>)"
            ))),
        }
    }
}

impl fmt::Display for Targets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Targets::Marginal => f.write_str("marginal"),
            Targets::Simultaneous => f.write_str("simultaneous"),
            Targets::Single(name) => write!(f, "single:{name}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub kind: FamilyKind,
    pub alpha: f64,
    pub targets: Targets,
    pub boot: BootstrapConfig,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            kind: FamilyKind::TwoSided,
            alpha: 0.05,
            targets: Targets::Marginal,
            boot: BootstrapConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub group: String,
    pub category: String,
    pub count: u64,
    pub theta_hat: f64,
    pub se: f64,
    /// `compute_ranks` of the estimates: ties share the best rank.
    pub rank: usize,
    pub lo: usize,
    pub hi: usize,
}

impl ReportRow {
    pub fn interval(&self) -> RankInterval {
        RankInterval {
            lo: self.lo,
            hi: self.hi,
        }
    }

    pub fn length(&self) -> usize {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub method: Method,
    pub kind: FamilyKind,
    pub alpha: f64,
    pub targets: String,
    pub rows: Vec<ReportRow>,
}

pub fn standard_error(theta_hat: f64, n: u64) -> f64 {
    (theta_hat * (1.0 - theta_hat) / n as f64).sqrt()
}

fn group_rows(
    group: &str,
    sample: &MultinomialSample,
    methods: &[Method],
    options: &AnalyzeOptions,
) -> Result<Vec<Vec<ReportRow>>> {
    let p = sample.p();
    let categories: Vec<usize> = match &options.targets {
        Targets::Single(name) => vec![sample.index_of(name).ok_or_else(|| {
            CliError::input(format!("unknown category {name:?} in group {group:?}"))
        })?],
        _ => (0..p).collect(),
    };
    // One resampling run per group, shared by every bootstrap method.
    let draws = if methods.iter().any(|m| m.uses_bootstrap()) {
        Some(BootstrapDraws::generate(
            sample,
            options.boot.samples,
            options.boot.seed,
        )?)
    } else {
        None
    };
    let theta = sample.theta_hat();
    let ranks = compute_ranks(&theta);

    methods
        .iter()
        .map(|&method| {
            let intervals: Vec<RankInterval> = match options.targets {
                Targets::Simultaneous => {
                    let set = rank_cs_with(
                        sample,
                        &categories,
                        options.kind,
                        options.alpha,
                        method,
                        draws.as_ref(),
                    )?;
                    categories
                        .iter()
                        .map(|&j| set.interval(j).expect("target present"))
                        .collect()
                }
                _ => marginal_intervals(
                    sample,
                    &categories,
                    options.kind,
                    options.alpha,
                    method,
                    draws.as_ref(),
                )?,
            };
            Ok(categories
                .iter()
                .zip(intervals)
                .map(|(&j, iv)| ReportRow {
                    group: group.to_string(),
                    category: sample.labels()[j].clone(),
                    count: sample.counts()[j],
                    theta_hat: theta[j],
                    se: standard_error(theta[j], sample.n()),
                    rank: ranks[j].rank,
                    lo: iv.lo,
                    hi: iv.hi,
                })
                .collect())
        })
        .collect()
}

/// One report per method, rows in dataset order. Groups run in parallel.
pub fn analyze_many(
    dataset: &Dataset,
    methods: &[Method],
    options: &AnalyzeOptions,
) -> Result<Vec<Report>> {
    if methods.is_empty() {
        return Err(CliError::input("no methods given"));
    }
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(CliError::input(format!(
            "alpha {} outside (0, 1)",
            options.alpha
        )));
    }
    for m in methods {
        if !m.supports(options.kind) {
            return Err(CliError::input(format!(
                "{m} supports --kind two_sided only"
            )));
        }
    }
    let per_group: Vec<Vec<Vec<ReportRow>>> = dataset
        .groups()
        .par_iter()
        .map(|g| group_rows(&g.name, &g.sample, methods, options))
        .collect::<Result<_>>()?;

    Ok(methods
        .iter()
        .enumerate()
        .map(|(m, &method)| Report {
            method,
            kind: options.kind,
            alpha: options.alpha,
            targets: options.targets.to_string(),
            rows: per_group
                .iter()
                .flat_map(|g| g[m].iter().cloned())
                .collect(),
        })
        .collect())
}

pub fn analyze(dataset: &Dataset, method: Method, options: &AnalyzeOptions) -> Result<Report> {
    Ok(analyze_many(dataset, &[method], options)?
        .pop()
        .expect("one report"))
}
