//! Merging small categories into "Other".

use std::str::FromStr;

use ranksets::MultinomialSample;

use crate::error::{CliError, Result};

pub const OTHER: &str = "Other";

/// Which categories to merge: those with share below a threshold, or an
/// explicit list of names.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupSpec {
    Threshold(f64),
    Names(Vec<String>),
}

impl FromStr for GroupSpec {
    type Err = CliError;

    /// A number is a share threshold; anything else is a comma-separated
    /// list of category names.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(t) = s.parse::<f64>() {
            return Ok(GroupSpec::Threshold(t));
        }
        Ok(GroupSpec::Names(
            s.split(',')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .map(String::from)
                .collect(),
        ))
    }
}

/// Merges the selected categories into a single "Other" category appended
/// at the end, or folded into an existing "Other". `n` is unchanged.
pub fn group_small(sample: &MultinomialSample, spec: &GroupSpec) -> Result<MultinomialSample> {
    let p = sample.p();
    let selected: Vec<bool> = match spec {
        GroupSpec::Threshold(t) => {
            if !(*t > 0.0 && *t < 1.0) {
                return Err(CliError::input(format!(
                    "grouping threshold {t} outside (0, 1)"
                )));
            }
            sample.theta_hat().iter().map(|&share| share < *t).collect()
        }
        GroupSpec::Names(names) => {
            let mut selected = vec![false; p];
            for name in names {
                let j = sample.index_of(name).ok_or_else(|| {
                    CliError::input(format!("cannot group unknown category {name:?}"))
                })?;
                selected[j] = true;
            }
            selected
        }
    };
    if !selected.contains(&true) {
        return Ok(sample.clone());
    }
    if selected.iter().all(|&s| s) {
        return Err(CliError::input("grouping would merge every category"));
    }

    let merged: u64 = sample
        .counts()
        .iter()
        .zip(&selected)
        .filter(|(_, &s)| s)
        .map(|(&c, _)| c)
        .sum();
    let mut labels = Vec::with_capacity(p);
    let mut counts = Vec::with_capacity(p);
    let mut folded = false;
    for ((label, &count), &s) in sample.labels().iter().zip(sample.counts()).zip(&selected) {
        if s {
            continue;
        }
        labels.push(label.clone());
        if label == OTHER {
            counts.push(count + merged);
            folded = true;
        } else {
            counts.push(count);
        }
    }
    if !folded {
        labels.push(OTHER.to_string());
        counts.push(merged);
    }
    MultinomialSample::new(labels, counts)
        .map_err(|e| CliError::input(format!("after grouping: {e}")))
}
