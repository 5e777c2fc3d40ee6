//! Sets of categories that may be among the best (or worst) `tau`, read off
//! a simultaneous one-sided rank confidence set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boot::BootstrapConfig;
use crate::error::{Error, Result};
use crate::method::{rank_cs, Method};
use crate::rank::{FamilyKind, RankSet};
use crate::sample::MultinomialSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Best,
    Worst,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Best => "best",
            Direction::Worst => "worst",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "best" => Ok(Direction::Best),
            "worst" => Ok(Direction::Worst),
            other => Err(Error::InvalidArgument(format!(
                "unknown direction {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauBestSet {
    pub tau: usize,
    pub direction: Direction,
    /// Category indices, ascending.
    pub members: Vec<usize>,
}

impl TauBestSet {
    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }
}

fn check_tau(tau: usize, p: usize) -> Result<()> {
    if (1..=p).contains(&tau) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau {tau} outside 1..={p}")))
    }
}

/// Categories whose rank interval contains `tau` (best) or `p - tau + 1`
/// (worst).
pub fn project(set: &RankSet, tau: usize, direction: Direction) -> Result<TauBestSet> {
    let p = set.p();
    check_tau(tau, p)?;
    let rank = match direction {
        Direction::Best => tau,
        Direction::Worst => p - tau + 1,
    };
    let members = set
        .iter()
        .filter(|(_, i)| i.contains(rank))
        .map(|(j, _)| j)
        .collect();
    Ok(TauBestSet {
        tau,
        direction,
        members,
    })
}

fn tau_set(
    sample: &MultinomialSample,
    tau: usize,
    alpha: f64,
    method: Method,
    config: &BootstrapConfig,
    direction: Direction,
) -> Result<(TauBestSet, RankSet)> {
    let p = sample.p();
    check_tau(tau, p)?;
    let kind = match direction {
        Direction::Best => FamilyKind::Lower,
        Direction::Worst => FamilyKind::Upper,
    };
    let all: Vec<usize> = (0..p).collect();
    let set = rank_cs(sample, &all, kind, alpha, method, config)?;
    Ok((project(&set, tau, direction)?, set))
}

/// Categories that may have rank at most `tau`, together with the lower
/// bound rank set it was projected from.
pub fn tau_best(
    sample: &MultinomialSample,
    tau: usize,
    alpha: f64,
    method: Method,
    config: &BootstrapConfig,
) -> Result<(TauBestSet, RankSet)> {
    tau_set(sample, tau, alpha, method, config, Direction::Best)
}

/// Categories that may be among the `tau` worst.
pub fn tau_worst(
    sample: &MultinomialSample,
    tau: usize,
    alpha: f64,
    method: Method,
    config: &BootstrapConfig,
) -> Result<(TauBestSet, RankSet)> {
    tau_set(sample, tau, alpha, method, config, Direction::Worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(counts: &[u64]) -> MultinomialSample {
        MultinomialSample::from_counts(counts.to_vec()).unwrap()
    }

    #[test]
    fn single_dominant_category() {
        let s = sample(&[100, 0, 0]);
        let config = BootstrapConfig::default();
        let (best, set) = tau_best(&s, 1, 0.05, Method::ExactHolm, &config).unwrap();
        assert_eq!(best.members, vec![0]);
        let lows: Vec<usize> = set.iter().map(|(_, i)| i.lo).collect();
        assert_eq!(lows, vec![1, 2, 2]);

        let (worst, _) = tau_worst(&s, 1, 0.05, Method::ExactHolm, &config).unwrap();
        assert_eq!(worst.members, vec![1, 2]);
    }

    #[test]
    fn tau_equal_p_takes_everything() {
        let s = sample(&[50, 30, 15, 5]);
        let config = BootstrapConfig::default();
        for method in [Method::ExactBonf, Method::ExactHolm, Method::Cp] {
            let (best, _) = tau_best(&s, 4, 0.05, method, &config).unwrap();
            assert_eq!(best.members, vec![0, 1, 2, 3]);
            let (worst, _) = tau_worst(&s, 4, 0.05, method, &config).unwrap();
            assert_eq!(worst.members, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn equal_counts_take_everything() {
        let s = sample(&[20, 20, 20]);
        let config = BootstrapConfig::default();
        let (best, _) = tau_best(&s, 1, 0.05, Method::ExactHolm, &config).unwrap();
        assert_eq!(best.members, vec![0, 1, 2]);
        let (worst, _) = tau_worst(&s, 1, 0.05, Method::ExactHolm, &config).unwrap();
        assert_eq!(worst.members, vec![0, 1, 2]);
    }

    #[test]
    fn tau_out_of_range() {
        let s = sample(&[1, 2]);
        let config = BootstrapConfig::default();
        assert!(tau_best(&s, 0, 0.05, Method::ExactHolm, &config).is_err());
        assert!(tau_best(&s, 3, 0.05, Method::ExactHolm, &config).is_err());
    }
}
