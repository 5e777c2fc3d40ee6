//! Clopper-Pearson intervals combined into a simultaneous box for `theta`,
//! and rank confidence sets read off from non-overlapping intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::{rankset_from_rejections, FamilyKind, IndexFamily, PairwiseRejections, RankSet};
use crate::sample::MultinomialSample;
use crate::special::inv_reg_inc_beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Exact two-sided binomial interval for `x` successes in `n` trials at
/// confidence `level`.
pub fn clopper_pearson(x: u64, n: u64, level: f64) -> Result<ProbInterval> {
    if n == 0 || x > n {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= x <= n, n >= 1 (x = {x}, n = {n})"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level {level} outside (0, 1)"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    let (xf, nf) = (x as f64, n as f64);
    let lo = if x == 0 {
        0.0
    } else {
        inv_reg_inc_beta(tail, xf, nf - xf + 1.0)
    };
    let hi = if x == n {
        1.0
    } else {
        inv_reg_inc_beta(1.0 - tail, xf + 1.0, nf - xf)
    };
    Ok(ProbInterval { lo, hi })
}

/// Per-category intervals with joint coverage `1 - alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub alpha: f64,
    pub intervals: Vec<ProbInterval>,
}

impl IntervalBox {
    /// Each marginal at level `1 - alpha / p`.
    pub fn bonferroni(sample: &MultinomialSample, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside (0, 1)"
            )));
        }
        let level = 1.0 - alpha / sample.p() as f64;
        let intervals = sample
            .counts()
            .iter()
            .map(|&x| clopper_pearson(x, sample.n(), level))
            .collect::<Result<_>>()?;
        Ok(Self { alpha, intervals })
    }

    /// Strict separation: `theta_j < theta_k` is claimed iff `hi_j < lo_k`.
    pub fn claims_smaller(&self, j: usize, k: usize) -> bool {
        self.intervals[j].hi < self.intervals[k].lo
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.intervals
            .iter()
            .zip(theta)
            .all(|(i, &t)| i.lo <= t && t <= i.hi)
    }
}

/// Rank confidence set from the Bonferroni box. One-sided kinds use the same
/// box and keep only the relevant bound.
pub fn cp_rank_cs(
    sample: &MultinomialSample,
    targets: &[usize],
    kind: FamilyKind,
    alpha: f64,
) -> Result<RankSet> {
    let boxed = IntervalBox::bonferroni(sample, alpha)?;
    cp_rank_cs_from_box(&boxed, targets, kind)
}

/// Same as [`cp_rank_cs`] for a box that has already been computed.
pub fn cp_rank_cs_from_box(
    boxed: &IntervalBox,
    targets: &[usize],
    kind: FamilyKind,
) -> Result<RankSet> {
    let family = IndexFamily::new(kind, targets, boxed.intervals.len())?;
    let rejected = family
        .pairs()
        .iter()
        .copied()
        .filter(|&(j, k)| boxed.claims_smaller(k, j));
    let rejections = PairwiseRejections::from_rejected(&family, rejected);
    rankset_from_rejections(&rejections, "CP", boxed.alpha)
}
