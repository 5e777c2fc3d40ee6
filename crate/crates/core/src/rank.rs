//! Ranks with ties, pairwise hypothesis families, and the construction of
//! rank confidence sets from pairwise rejections.
//!
//! Categories are indexed from 0 internally; ranks are 1-based, so the best
//! possible rank is 1 and the worst is `p`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank of one category together with the range of ranks it could take
/// under ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTriple {
    /// `1 + #{k : theta_k > theta_j}`.
    pub rank: usize,
    /// Best admissible rank. Equal to `rank`.
    pub lo: usize,
    /// Worst admissible rank, `p - #{k : theta_k < theta_j}`.
    pub hi: usize,
}

/// Ranks of every component of `theta`, comparing stored values exactly.
pub fn compute_ranks(theta: &[f64]) -> Vec<RankTriple> {
    let p = theta.len();
    let mut sorted: Vec<f64> = theta.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    theta
        .iter()
        .map(|&t| {
            let greater = sorted.partition_point(|&s| s > t);
            let at_least = sorted.partition_point(|&s| s >= t);
            let smaller = p - at_least;
            RankTriple {
                rank: 1 + greater,
                lo: 1 + greater,
                hi: p - smaller,
            }
        })
        .collect()
}

/// Which bounds on the ranks are wanted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Lower confidence bounds on the ranks; the upper end is always `p`.
    Lower,
    /// Upper confidence bounds on the ranks; the lower end is always 1.
    Upper,
    TwoSided,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Lower => "lower",
            FamilyKind::Upper => "upper",
            FamilyKind::TwoSided => "two_sided",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lower" => Ok(FamilyKind::Lower),
            "upper" => Ok(FamilyKind::Upper),
            "two_sided" | "twosided" | "both" => Ok(FamilyKind::TwoSided),
            other => Err(Error::InvalidArgument(format!(
                "unknown family kind {other:?}"
            ))),
        }
    }
}

/// The set of ordered pairs `(j, k)` for which `H_{j,k}: theta_j <= theta_k`
/// is tested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexFamily {
    kind: FamilyKind,
    p: usize,
    targets: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl IndexFamily {
    /// `lower` pairs every category with each target as `(j, target)`,
    /// `upper` as `(target, k)`, and `two_sided` takes the union.
    pub fn new(kind: FamilyKind, targets: &[usize], p: usize) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyTargets);
        }
        if let Some(&index) = targets.iter().find(|&&t| t >= p) {
            return Err(Error::CategoryOutOfRange { index, p });
        }
        let targets: Vec<usize> = targets
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut pairs = Vec::new();
        let mut seen = BTreeSet::new();
        if matches!(kind, FamilyKind::Lower | FamilyKind::TwoSided) {
            for j in 0..p {
                for &k in &targets {
                    if j != k && seen.insert((j, k)) {
                        pairs.push((j, k));
                    }
                }
            }
        }
        if matches!(kind, FamilyKind::Upper | FamilyKind::TwoSided) {
            for &j in &targets {
                for k in 0..p {
                    if j != k && seen.insert((j, k)) {
                        pairs.push((j, k));
                    }
                }
            }
        }
        Ok(Self {
            kind,
            p,
            targets,
            pairs,
        })
    }

    /// Family for a single category.
    pub fn marginal(kind: FamilyKind, target: usize, p: usize) -> Result<Self> {
        Self::new(kind, &[target], p)
    }

    /// Family with every category as a target.
    pub fn simultaneous(kind: FamilyKind, p: usize) -> Result<Self> {
        let all: Vec<usize> = (0..p).collect();
        Self::new(kind, &all, p)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Target categories, sorted and deduplicated.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.pairs.contains(&pair)
    }

    pub fn is_target(&self, j: usize) -> bool {
        self.targets.binary_search(&j).is_ok()
    }
}

/// Categories claimed to be strictly better (`rej_minus`) or strictly worse
/// (`rej_plus`) than each target category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseRejections {
    kind: FamilyKind,
    p: usize,
    rej_minus: BTreeMap<usize, BTreeSet<usize>>,
    rej_plus: BTreeMap<usize, BTreeSet<usize>>,
}

impl PairwiseRejections {
    /// No claims for any target.
    pub fn empty(family: &IndexFamily) -> Self {
        let blank: BTreeMap<usize, BTreeSet<usize>> = family
            .targets()
            .iter()
            .map(|&j| (j, BTreeSet::new()))
            .collect();
        Self {
            kind: family.kind(),
            p: family.p(),
            rej_minus: blank.clone(),
            rej_plus: blank,
        }
    }

    /// Collects rejected hypotheses. `(j, k)` in `rejected` means `H_{j,k}`
    /// was rejected, i.e. `theta_j > theta_k` is claimed.
    ///
    /// Lower families only record claims against targets (`rej_minus`),
    /// upper families only claims in favour of targets (`rej_plus`).
    pub fn from_rejected<I>(family: &IndexFamily, rejected: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut out = Self::empty(family);
        for (j, k) in rejected {
            debug_assert!(family.contains((j, k)), "({j},{k}) is not in the family");
            let lower = matches!(family.kind(), FamilyKind::Lower | FamilyKind::TwoSided);
            let upper = matches!(family.kind(), FamilyKind::Upper | FamilyKind::TwoSided);
            if lower && family.is_target(k) {
                out.claim_smaller(k, j);
            }
            if upper && family.is_target(j) {
                out.claim_larger(j, k);
            }
        }
        out
    }

    /// Records `theta_target < theta_other`.
    pub fn claim_smaller(&mut self, target: usize, other: usize) {
        assert_ne!(target, other);
        self.rej_minus.entry(target).or_default().insert(other);
    }

    /// Records `theta_target > theta_other`.
    pub fn claim_larger(&mut self, target: usize, other: usize) {
        assert_ne!(target, other);
        self.rej_plus.entry(target).or_default().insert(other);
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.rej_minus.keys().copied()
    }

    pub fn rej_minus(&self, j: usize) -> Option<&BTreeSet<usize>> {
        self.rej_minus.get(&j)
    }

    pub fn rej_plus(&self, j: usize) -> Option<&BTreeSet<usize>> {
        self.rej_plus.get(&j)
    }
}

/// The integer interval `{lo, ..., hi}` of ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankInterval {
    pub lo: usize,
    pub hi: usize,
}

impl RankInterval {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn full(p: usize) -> Self {
        Self { lo: 1, hi: p }
    }

    /// `hi - lo`; zero for a singleton.
    pub fn length(&self) -> usize {
        self.hi - self.lo
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.lo <= rank && rank <= self.hi
    }

    /// Whether the whole admissible range `[lo, hi]` of `truth` lies inside.
    pub fn covers(&self, truth: &RankTriple) -> bool {
        self.lo <= truth.lo && truth.hi <= self.hi
    }

    pub fn is_subset_of(&self, other: &RankInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

impl fmt::Display for RankInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{{{}}}", self.lo)
        } else {
            write!(f, "{{{},...,{}}}", self.lo, self.hi)
        }
    }
}

/// Confidence set for the ranks of the target categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSet {
    pub method: String,
    pub alpha: f64,
    pub kind: FamilyKind,
    p: usize,
    intervals: BTreeMap<usize, RankInterval>,
}

impl RankSet {
    /// Assembles a set from intervals computed separately, e.g. one marginal
    /// run per category.
    pub fn from_intervals(
        method: impl Into<String>,
        alpha: f64,
        kind: FamilyKind,
        p: usize,
        intervals: BTreeMap<usize, RankInterval>,
    ) -> Result<Self> {
        if let Some((&j, _)) = intervals
            .iter()
            .find(|(&j, i)| j >= p || i.lo < 1 || i.hi > p || i.lo > i.hi)
        {
            return Err(Error::CategoryOutOfRange { index: j, p });
        }
        Ok(Self {
            method: method.into(),
            alpha,
            kind,
            p,
            intervals,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn interval(&self, j: usize) -> Option<RankInterval> {
        self.intervals.get(&j).copied()
    }

    /// `(category, interval)` pairs in category order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, RankInterval)> + '_ {
        self.intervals.iter().map(|(&j, &i)| (j, i))
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.intervals.keys().copied()
    }

    /// Joint coverage of the admissible rank ranges of every target.
    pub fn covers(&self, truth: &[RankTriple]) -> bool {
        self.iter().all(|(j, interval)| interval.covers(&truth[j]))
    }
}

/// Turns pairwise claims into rank intervals
/// `{|rej_minus_j| + 1, ..., p - |rej_plus_j|}`.
pub fn rankset_from_rejections(
    rejections: &PairwiseRejections,
    method: impl Into<String>,
    alpha: f64,
) -> Result<RankSet> {
    let p = rejections.p();
    let mut intervals = BTreeMap::new();
    for j in rejections.targets() {
        let minus = rejections.rej_minus(j).map_or(0, BTreeSet::len);
        let plus = rejections.rej_plus(j).map_or(0, BTreeSet::len);
        let lo = minus + 1;
        let hi = p - plus;
        let conflicting = match (rejections.rej_minus(j), rejections.rej_plus(j)) {
            (Some(m), Some(pl)) => !m.is_disjoint(pl),
            _ => false,
        };
        if lo > hi || conflicting {
            return Err(Error::InconsistentRejections {
                category: j,
                lo,
                hi,
            });
        }
        intervals.insert(j, RankInterval::new(lo, hi));
    }
    Ok(RankSet {
        method: method.into(),
        alpha,
        kind: rejections.kind(),
        p,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranks(theta: &[f64]) -> Vec<usize> {
        compute_ranks(theta).iter().map(|r| r.rank).collect()
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(ranks(&[0.4, 0.1, 0.1, 0.2, 0.2]), vec![1, 4, 4, 2, 2]);

        let tied = compute_ranks(&[0.5, 0.5]);
        assert!(tied.iter().all(|r| r.lo == 1 && r.hi == 2 && r.rank == 1));

        let all = compute_ranks(&[0.2; 5]);
        assert!(all.iter().all(|r| r.lo == 1 && r.hi == 5));
    }

    #[test]
    fn upper_rank_of_tied_pair() {
        let r = compute_ranks(&[0.4, 0.1, 0.1, 0.2, 0.2]);
        assert_eq!(r[1].hi, 5);
        assert_eq!(r[3].hi, 3);
        assert_eq!(r[0].hi, 1);
    }

    #[test]
    fn family_pairs_follow_definitions() {
        let lower = IndexFamily::new(FamilyKind::Lower, &[0], 3).unwrap();
        assert_eq!(lower.pairs(), &[(1, 0), (2, 0)]);

        let two = IndexFamily::new(FamilyKind::TwoSided, &[0], 3).unwrap();
        assert_eq!(two.pairs(), &[(1, 0), (2, 0), (0, 1), (0, 2)]);

        let upper = IndexFamily::new(FamilyKind::Upper, &[2], 3).unwrap();
        assert_eq!(upper.pairs(), &[(2, 0), (2, 1)]);

        let full = IndexFamily::simultaneous(FamilyKind::TwoSided, 7).unwrap();
        assert_eq!(full.len(), 42);
        let set: BTreeSet<_> = full.pairs().iter().collect();
        assert_eq!(set.len(), 42);
        assert!(full.pairs().iter().all(|(j, k)| j != k));
    }

    #[test]
    fn family_rejects_empty_or_out_of_range_targets() {
        assert_eq!(
            IndexFamily::new(FamilyKind::Lower, &[], 3),
            Err(Error::EmptyTargets)
        );
        assert!(matches!(
            IndexFamily::new(FamilyKind::Lower, &[3], 3),
            Err(Error::CategoryOutOfRange { index: 3, p: 3 })
        ));
    }

    #[test]
    fn interval_formula() {
        let family = IndexFamily::marginal(FamilyKind::TwoSided, 0, 5).unwrap();
        // H_{1,0}, H_{2,0} rejected: two better categories; H_{0,4}: one worse.
        let rej = PairwiseRejections::from_rejected(&family, [(1, 0), (2, 0), (0, 4)]);
        let set = rankset_from_rejections(&rej, "t", 0.05).unwrap();
        assert_eq!(set.interval(0), Some(RankInterval::new(3, 4)));
    }

    #[test]
    fn no_rejections_give_full_interval() {
        let family = IndexFamily::simultaneous(FamilyKind::TwoSided, 4).unwrap();
        let set = rankset_from_rejections(&PairwiseRejections::empty(&family), "t", 0.05).unwrap();
        assert!(set.iter().all(|(_, i)| i == RankInterval::full(4)));
    }

    #[test]
    fn all_rejected_in_favour_gives_rank_one() {
        let family = IndexFamily::marginal(FamilyKind::Upper, 0, 4).unwrap();
        let rej = PairwiseRejections::from_rejected(&family, [(0, 1), (0, 2), (0, 3)]);
        let set = rankset_from_rejections(&rej, "t", 0.05).unwrap();
        assert_eq!(set.interval(0), Some(RankInterval::new(1, 1)));
    }

    #[test]
    fn lower_family_ignores_claims_in_favour() {
        let family = IndexFamily::simultaneous(FamilyKind::Lower, 3).unwrap();
        let rej = PairwiseRejections::from_rejected(&family, [(0, 1), (0, 2)]);
        let set = rankset_from_rejections(&rej, "t", 0.05).unwrap();
        assert_eq!(set.interval(0), Some(RankInterval::new(1, 3)));
        assert_eq!(set.interval(1), Some(RankInterval::new(2, 3)));
        assert_eq!(set.interval(2), Some(RankInterval::new(2, 3)));
    }

    #[test]
    fn conflicting_claims_are_an_error() {
        let family = IndexFamily::marginal(FamilyKind::TwoSided, 0, 2).unwrap();
        let rej = PairwiseRejections::from_rejected(&family, [(0, 1), (1, 0)]);
        let err = rankset_from_rejections(&rej, "t", 0.9).unwrap_err();
        assert!(err.is_invariant_violation());
    }

    #[test]
    fn interval_display() {
        assert_eq!(RankInterval::new(4, 4).to_string(), "{4}");
        assert_eq!(RankInterval::new(1, 7).to_string(), "{1,...,7}");
    }
}
