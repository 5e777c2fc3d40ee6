//! One entry point for every rank confidence set procedure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boot::{boot_rank_cs_with, naive_rank_cs_with, BootstrapConfig, BootstrapDraws};
use crate::cp::{cp_rank_cs_from_box, IntervalBox};
use crate::error::{Error, Result};
use crate::exact::{exact_rank_cs, Correction};
use crate::rank::{FamilyKind, RankInterval, RankSet};
use crate::sample::MultinomialSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exactBonf")]
    ExactBonf,
    #[serde(rename = "exactHolm")]
    ExactHolm,
    #[serde(rename = "CP")]
    Cp,
    #[serde(rename = "boot")]
    Boot,
    #[serde(rename = "bootStud")]
    BootStud,
    #[serde(rename = "naive")]
    Naive,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ExactBonf,
        Method::ExactHolm,
        Method::Cp,
        Method::Boot,
        Method::BootStud,
        Method::Naive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ExactBonf => "exactBonf",
            Method::ExactHolm => "exactHolm",
            Method::Cp => "CP",
            Method::Boot => "boot",
            Method::BootStud => "bootStud",
            Method::Naive => "naive",
        }
    }

    pub fn uses_bootstrap(self) -> bool {
        matches!(self, Method::Boot | Method::BootStud | Method::Naive)
    }

    /// The naive bootstrap only produces two-sided sets.
    pub fn supports(self, kind: FamilyKind) -> bool {
        self != Method::Naive || kind == FamilyKind::TwoSided
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-'))
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "exactbonf" | "bonferroni" => Ok(Method::ExactBonf),
            "exactholm" | "holm" => Ok(Method::ExactHolm),
            "cp" | "clopperpearson" => Ok(Method::Cp),
            "boot" => Ok(Method::Boot),
            "bootstud" => Ok(Method::BootStud),
            "naive" => Ok(Method::Naive),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// Whether each category gets its own confidence set or all share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Marginal,
    Simultaneous,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Marginal => "marginal",
            Scope::Simultaneous => "simultaneous",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "marginal" => Ok(Scope::Marginal),
            "simultaneous" | "joint" => Ok(Scope::Simultaneous),
            other => Err(Error::InvalidArgument(format!("unknown scope {other:?}"))),
        }
    }
}

/// Rank confidence set for `targets`. Bootstrap methods draw from
/// `config.seed`; the other methods ignore `config`.
pub fn rank_cs(
    sample: &MultinomialSample,
    targets: &[usize],
    kind: FamilyKind,
    alpha: f64,
    method: Method,
    config: &BootstrapConfig,
) -> Result<RankSet> {
    let draws = draws_for(sample, method, config)?;
    rank_cs_with(sample, targets, kind, alpha, method, draws.as_ref())
}

fn draws_for(
    sample: &MultinomialSample,
    method: Method,
    config: &BootstrapConfig,
) -> Result<Option<BootstrapDraws>> {
    if method.uses_bootstrap() {
        BootstrapDraws::generate(sample, config.samples, config.seed).map(Some)
    } else {
        Ok(None)
    }
}

/// Like [`rank_cs`] with bootstrap draws supplied by the caller, so several
/// methods and target sets can share one resampling run.
pub fn rank_cs_with(
    sample: &MultinomialSample,
    targets: &[usize],
    kind: FamilyKind,
    alpha: f64,
    method: Method,
    draws: Option<&BootstrapDraws>,
) -> Result<RankSet> {
    if !method.supports(kind) {
        return Err(Error::InvalidArgument(format!(
            "{method} supports two_sided sets only"
        )));
    }
    let need_draws =
        || draws.ok_or_else(|| Error::InvalidArgument(format!("{method} needs bootstrap draws")));
    match method {
        Method::ExactBonf => exact_rank_cs(sample, targets, kind, alpha, Correction::Bonferroni),
        Method::ExactHolm => exact_rank_cs(sample, targets, kind, alpha, Correction::Holm),
        Method::Cp => cp_rank_cs_from_box(&IntervalBox::bonferroni(sample, alpha)?, targets, kind),
        Method::Boot => boot_rank_cs_with(need_draws()?, sample, targets, kind, alpha, false),
        Method::BootStud => boot_rank_cs_with(need_draws()?, sample, targets, kind, alpha, true),
        Method::Naive => naive_rank_cs_with(need_draws()?, sample, targets, alpha),
    }
}

/// Marginal sets (one run per category with `J0 = {j}`) or a simultaneous
/// set (`J0 = J`), covering every category.
pub fn scoped_rank_cs_with(
    sample: &MultinomialSample,
    scope: Scope,
    kind: FamilyKind,
    alpha: f64,
    method: Method,
    draws: Option<&BootstrapDraws>,
) -> Result<RankSet> {
    let p = sample.p();
    match scope {
        Scope::Simultaneous => {
            let all: Vec<usize> = (0..p).collect();
            rank_cs_with(sample, &all, kind, alpha, method, draws)
        }
        Scope::Marginal => {
            let all: Vec<usize> = (0..p).collect();
            let intervals = marginal_intervals(sample, &all, kind, alpha, method, draws)?;
            RankSet::from_intervals(
                method.name(),
                alpha,
                kind,
                p,
                all.into_iter().zip(intervals).collect(),
            )
        }
    }
}

/// Marginal interval of each category in `categories`, each from its own
/// run with `J0 = {j}`.
pub fn marginal_intervals(
    sample: &MultinomialSample,
    categories: &[usize],
    kind: FamilyKind,
    alpha: f64,
    method: Method,
    draws: Option<&BootstrapDraws>,
) -> Result<Vec<RankInterval>> {
    // The CP box does not depend on the targets.
    let boxed = match method {
        Method::Cp => Some(IntervalBox::bonferroni(sample, alpha)?),
        _ => None,
    };
    categories
        .iter()
        .map(|&j| {
            let set = match &boxed {
                Some(b) => cp_rank_cs_from_box(b, &[j], kind)?,
                None => rank_cs_with(sample, &[j], kind, alpha, method, draws)?,
            };
            Ok(set.interval(j).expect("target present"))
        })
        .collect()
}

pub fn scoped_rank_cs(
    sample: &MultinomialSample,
    scope: Scope,
    kind: FamilyKind,
    alpha: f64,
    method: Method,
    config: &BootstrapConfig,
) -> Result<RankSet> {
    let draws = draws_for(sample, method, config)?;
    scoped_rank_cs_with(sample, scope, kind, alpha, method, draws.as_ref())
}
