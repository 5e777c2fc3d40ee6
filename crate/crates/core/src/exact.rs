//! Exact conditional binomial tests of `H_{j,k}: theta_j <= theta_k` and the
//! finite-sample rank confidence sets built from them.
//!
//! Conditional on `S = X_j + X_k = s`, `X_j` is `Bin(s, theta_j / (theta_j +
//! theta_k))`, so `H_{j,k}` reduces to a one-sided test of a binomial
//! proportion at 1/2. Inference uses the non-randomized p-value
//! `P(Bin(s, 1/2) >= X_j)`; the randomization constants are exposed through
//! [`test_constants`] only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::{rankset_from_rejections, FamilyKind, IndexFamily, PairwiseRejections, RankSet};
use crate::sample::MultinomialSample;
use crate::special::fair_binomial_upper_tail;

/// `2^{-s} sum_{i=x_j}^{s} C(s, i)` with `s = x_j + x_k`. Equals 1 when both
/// counts are zero.
pub fn conditional_pvalue(x_j: u64, x_k: u64) -> f64 {
    fair_binomial_upper_tail(x_j, x_j + x_k)
}

/// Cutoff and randomization probability of the level-`beta` conditional test
/// given `S = s`: reject when `X_j > cutoff`, reject with probability
/// `gamma` when `X_j == cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConstants {
    pub cutoff: u64,
    pub gamma: f64,
}

pub fn test_constants(s: u64, beta: f64) -> Result<TestConstants> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level {beta} outside (0, 1)"
        )));
    }
    // tail(c) is non-increasing in c and tail(s + 1) = 0 <= beta, so the
    // smallest c with tail(c + 1) <= beta exists.
    let mut cutoff = 0;
    while fair_binomial_upper_tail(cutoff + 1, s) > beta {
        cutoff += 1;
    }
    let above = fair_binomial_upper_tail(cutoff + 1, s);
    let at = fair_binomial_upper_tail(cutoff, s) - above;
    let gamma = ((beta - above) / at).clamp(0.0, 1.0);
    Ok(TestConstants { cutoff, gamma })
}

/// One entry of a [`PairwisePValueTable`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPValue {
    pub pair: (usize, usize),
    /// Conditioning statistic `X_j + X_k`; zero when the table was built
    /// from raw p-values.
    pub s: u64,
    pub p_value: f64,
}

/// p-values for every hypothesis of an [`IndexFamily`], in family order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwisePValueTable {
    family: IndexFamily,
    entries: Vec<PairPValue>,
}

impl PairwisePValueTable {
    pub fn from_sample(sample: &MultinomialSample, family: &IndexFamily) -> Result<Self> {
        if family.p() != sample.p() {
            return Err(Error::InvalidArgument(format!(
                "family over {} categories for a sample with {}",
                family.p(),
                sample.p()
            )));
        }
        let counts = sample.counts();
        let entries = family
            .pairs()
            .iter()
            .map(|&(j, k)| PairPValue {
                pair: (j, k),
                s: counts[j] + counts[k],
                p_value: conditional_pvalue(counts[j], counts[k]),
            })
            .collect();
        Ok(Self {
            family: family.clone(),
            entries,
        })
    }

    /// Table from externally computed p-values, one per family pair.
    pub fn from_values(family: &IndexFamily, p_values: &[f64]) -> Result<Self> {
        if p_values.len() != family.len() {
            return Err(Error::InvalidArgument(format!(
                "{} p-values for a family of {} hypotheses",
                p_values.len(),
                family.len()
            )));
        }
        if let Some(bad) = p_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "p-value {bad} outside [0, 1]"
            )));
        }
        let entries = family
            .pairs()
            .iter()
            .zip(p_values)
            .map(|(&pair, &p_value)| PairPValue {
                pair,
                s: 0,
                p_value,
            })
            .collect();
        Ok(Self {
            family: family.clone(),
            entries,
        })
    }

    pub fn family(&self) -> &IndexFamily {
        &self.family
    }

    pub fn entries(&self) -> &[PairPValue] {
        &self.entries
    }

    pub fn get(&self, pair: (usize, usize)) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.pair == pair)
            .map(|e| e.p_value)
    }
}

/// Familywise error control across the hypotheses of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Bonferroni,
    Holm,
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::Bonferroni => "bonferroni",
            Correction::Holm => "holm",
        })
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bonferroni" | "bonf" => Ok(Correction::Bonferroni),
            "holm" => Ok(Correction::Holm),
            other => Err(Error::InvalidArgument(format!(
                "unknown correction {other:?}"
            ))),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )))
    }
}

/// Rejects `H_{j,k}` iff its p-value is at most `alpha / |I|`.
pub fn bonferroni_reject(table: &PairwisePValueTable, alpha: f64) -> Result<PairwiseRejections> {
    check_alpha(alpha)?;
    let threshold = alpha / table.entries.len().max(1) as f64;
    let rejected = table
        .entries
        .iter()
        .filter(|e| e.p_value <= threshold)
        .map(|e| e.pair);
    Ok(PairwiseRejections::from_rejected(&table.family, rejected))
}

/// Holm's step-down procedure: walk the p-values in increasing order and
/// reject while the `l`-th smallest is at most `alpha / (|I| + 1 - l)`.
pub fn holm_reject(table: &PairwisePValueTable, alpha: f64) -> Result<PairwiseRejections> {
    check_alpha(alpha)?;
    let m = table.entries.len();
    let mut order: Vec<usize> = (0..m).collect();
    // Stable: ties keep family order.
    order.sort_by(|&a, &b| {
        table.entries[a]
            .p_value
            .total_cmp(&table.entries[b].p_value)
    });
    let rejected_count = order
        .iter()
        .enumerate()
        .take_while(|&(l, &idx)| table.entries[idx].p_value <= alpha / (m - l) as f64)
        .count();
    let rejected = order[..rejected_count]
        .iter()
        .map(|&idx| table.entries[idx].pair);
    Ok(PairwiseRejections::from_rejected(&table.family, rejected))
}

pub fn reject(
    table: &PairwisePValueTable,
    alpha: f64,
    correction: Correction,
) -> Result<PairwiseRejections> {
    match correction {
        Correction::Bonferroni => bonferroni_reject(table, alpha),
        Correction::Holm => holm_reject(table, alpha),
    }
}

/// Finite-sample confidence set for the ranks of `targets`.
pub fn exact_rank_cs(
    sample: &MultinomialSample,
    targets: &[usize],
    kind: FamilyKind,
    alpha: f64,
    correction: Correction,
) -> Result<RankSet> {
    let family = IndexFamily::new(kind, targets, sample.p())?;
    let table = PairwisePValueTable::from_sample(sample, &family)?;
    let rejections = reject(&table, alpha, correction)?;
    let method = match correction {
        Correction::Bonferroni => "exactBonf",
        Correction::Holm => "exactHolm",
    };
    rankset_from_rejections(&rejections, method, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::RankInterval;

    #[test]
    fn pvalue_examples() {
        assert_eq!(conditional_pvalue(0, 5), 1.0);
        assert_eq!(conditional_pvalue(3, 0), 0.125);
        assert_eq!(conditional_pvalue(8, 2), 0.0546875);
        assert_eq!(conditional_pvalue(0, 0), 1.0);
    }

    #[test]
    fn constants_examples() {
        let c = test_constants(0, 0.05).unwrap();
        assert_eq!(c.cutoff, 0);
        assert!((c.gamma - 0.05).abs() < 1e-15);

        let c = test_constants(10, 0.05).unwrap();
        assert_eq!(c.cutoff, 8);
        assert!((c.gamma - (0.05 * 1024.0 - 11.0) / 45.0).abs() < 1e-12);

        let c = test_constants(1, 0.5).unwrap();
        assert_eq!(c.cutoff, 0);
        assert_eq!(c.gamma, 0.0);

        assert!(test_constants(5, 0.0).is_err());
        assert!(test_constants(5, 1.0).is_err());
    }

    fn three_pair_table(p_values: &[f64]) -> PairwisePValueTable {
        let family = IndexFamily::marginal(FamilyKind::Upper, 0, 4).unwrap();
        PairwisePValueTable::from_values(&family, p_values).unwrap()
    }

    fn rejected_count(rej: &PairwiseRejections) -> usize {
        rej.rej_plus(0).map_or(0, |s| s.len())
    }

    #[test]
    fn bonferroni_examples() {
        let t = three_pair_table(&[0.001, 0.02, 0.04]);
        let rej = bonferroni_reject(&t, 0.05).unwrap();
        assert_eq!(
            rej.rej_plus(0).unwrap().iter().copied().collect::<Vec<_>>(),
            vec![1]
        );

        let t = three_pair_table(&[1.0, 1.0, 1.0]);
        assert_eq!(rejected_count(&bonferroni_reject(&t, 0.05).unwrap()), 0);

        let family = IndexFamily::marginal(FamilyKind::Upper, 0, 2).unwrap();
        let t = PairwisePValueTable::from_values(&family, &[0.04]).unwrap();
        assert_eq!(rejected_count(&bonferroni_reject(&t, 0.05).unwrap()), 1);
    }

    #[test]
    fn holm_examples() {
        let t = three_pair_table(&[0.001, 0.02, 0.04]);
        assert_eq!(rejected_count(&holm_reject(&t, 0.05).unwrap()), 3);

        let t = three_pair_table(&[0.001, 0.03, 0.04]);
        let rej = holm_reject(&t, 0.05).unwrap();
        assert_eq!(
            rej.rej_plus(0).unwrap().iter().copied().collect::<Vec<_>>(),
            vec![1]
        );

        let thr = 0.05 / 3.0;
        let t = three_pair_table(&[thr, thr, thr]);
        assert_eq!(rejected_count(&holm_reject(&t, 0.05).unwrap()), 3);
    }

    #[test]
    fn holm_order_does_not_depend_on_input_order() {
        let t = three_pair_table(&[0.04, 0.001, 0.02]);
        assert_eq!(rejected_count(&holm_reject(&t, 0.05).unwrap()), 3);
    }

    #[test]
    fn identical_counts_reject_nothing() {
        let s = MultinomialSample::from_counts(vec![10, 10, 10]).unwrap();
        for correction in [Correction::Bonferroni, Correction::Holm] {
            let set =
                exact_rank_cs(&s, &[0, 1, 2], FamilyKind::TwoSided, 0.05, correction).unwrap();
            assert!(set.iter().all(|(_, i)| i == RankInterval::full(3)));
        }
    }

    #[test]
    fn dominant_category_is_ranked_first() {
        let s = MultinomialSample::from_counts(vec![100, 0, 0]).unwrap();
        assert_eq!(conditional_pvalue(100, 0), 2f64.powi(-100));
        let set = exact_rank_cs(&s, &[0], FamilyKind::TwoSided, 0.05, Correction::Holm).unwrap();
        assert_eq!(set.interval(0), Some(RankInterval::new(1, 1)));
        let sim =
            exact_rank_cs(&s, &[0, 1, 2], FamilyKind::TwoSided, 0.05, Correction::Holm).unwrap();
        assert_eq!(sim.interval(0), Some(RankInterval::new(1, 1)));
        assert_eq!(sim.interval(1), Some(RankInterval::new(2, 3)));
    }

    #[test]
    fn invalid_alpha() {
        let s = MultinomialSample::from_counts(vec![1, 2]).unwrap();
        assert!(exact_rank_cs(&s, &[0], FamilyKind::TwoSided, 0.0, Correction::Holm).is_err());
        assert!(exact_rank_cs(&s, &[0], FamilyKind::TwoSided, 1.0, Correction::Holm).is_err());
    }
}
