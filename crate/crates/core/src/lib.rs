//! Confidence sets for the ranks of multinomial success probabilities.
//!
//! Procedures: exact conditional binomial tests with Bonferroni or Holm
//! correction, Clopper-Pearson boxes, the (studentized) multinomial
//! bootstrap on pairwise differences, and the naive rank bootstrap.

pub mod boot;
pub mod cp;
pub mod error;
pub mod exact;
pub mod method;
pub mod projections;
pub mod rank;
pub mod sample;
pub mod sim;
pub mod special;

pub use boot::{
    boot_rank_cs, bootstrap_quantile, difference_cs, naive_rank_cs, resample, studentized_max_stat,
    BootstrapConfig, BootstrapDraws, DifferenceCS, Shape, Statistic,
};
pub use cp::{clopper_pearson, cp_rank_cs, IntervalBox};
pub use error::{Error, Result};
pub use exact::{
    conditional_pvalue, exact_rank_cs, test_constants, Correction, PairwisePValueTable,
};
pub use method::{rank_cs, scoped_rank_cs, Method, Scope};
pub use projections::{tau_best, tau_worst, Direction, TauBestSet};
pub use rank::{
    compute_ranks, rankset_from_rejections, FamilyKind, IndexFamily, PairwiseRejections,
    RankInterval, RankSet, RankTriple,
};
pub use sample::{MultinomialSample, ProbabilityVector};
