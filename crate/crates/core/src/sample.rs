//! Multinomial count data and probability vectors on the simplex.

use std::collections::HashSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum(theta) - 1|` accepted by [`ProbabilityVector::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Observed category counts from `n` independent draws.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultinomialSample {
    labels: Vec<String>,
    counts: Vec<u64>,
    n: u64,
}

impl MultinomialSample {
    /// Builds a sample; `n` is the sum of the counts.
    ///
    /// Requires at least two categories, unique labels and a positive total.
    pub fn new(labels: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::InvalidSample(format!(
                "{} labels for {} counts",
                labels.len(),
                counts.len()
            )));
        }
        if counts.len() < 2 {
            return Err(Error::InvalidSample(format!(
                "need at least 2 categories, got {}",
                counts.len()
            )));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidSample(format!("duplicate label {label:?}")));
            }
        }
        let n = counts.iter().try_fold(0u64, |acc, &c| acc.checked_add(c));
        let n = n.ok_or_else(|| Error::InvalidSample("total count overflows u64".into()))?;
        if n == 0 {
            return Err(Error::InvalidSample("total count is zero".into()));
        }
        Ok(Self { labels, counts, n })
    }

    /// Sample with labels `"1"`, `"2"`, ... .
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let labels = (1..=counts.len()).map(|i| i.to_string()).collect();
        Self::new(labels, counts)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of categories.
    pub fn p(&self) -> usize {
        self.counts.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Empirical frequencies `X / n`.
    pub fn theta_hat(&self) -> ProbabilityVector {
        let n = self.n as f64;
        ProbabilityVector {
            theta: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    theta: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        if let Some(bad) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidProbability(format!(
                "component {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidProbability(format!(
                "components sum to {sum}"
            )));
        }
        Ok(Self { theta })
    }

    /// `theta_j = 1/p` for all `j`, bit-identical across components.
    pub fn uniform(p: usize) -> Result<Self> {
        let share = 1.0 / p as f64;
        Self::new(vec![share; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.theta
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_totals_and_theta_hat() {
        let s = MultinomialSample::from_counts(vec![3, 1, 0]).unwrap();
        assert_eq!(s.n(), 4);
        assert_eq!(s.p(), 3);
        assert_eq!(s.theta_hat().as_slice(), &[0.75, 0.25, 0.0]);
        assert_eq!(s.index_of("2"), Some(1));
    }

    #[test]
    fn sample_rejects_bad_input() {
        assert!(MultinomialSample::from_counts(vec![5]).is_err());
        assert!(MultinomialSample::from_counts(vec![0, 0]).is_err());
        let dup = MultinomialSample::new(vec!["a".into(), "a".into()], vec![1, 2]);
        assert!(matches!(dup, Err(Error::InvalidSample(msg)) if msg.contains("\"a\"")));
        assert!(MultinomialSample::new(vec!["a".into()], vec![1, 2]).is_err());
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        let u = ProbabilityVector::uniform(7).unwrap();
        assert!(u.iter().all(|&t| t == u[0]));
    }
}
