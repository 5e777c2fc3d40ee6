//! Multinomial bootstrap: simultaneous confidence sets for pairwise
//! differences `theta_j - theta_k`, the rank confidence sets they induce,
//! and the naive rank-quantile bootstrap.
//!
//! All statistics are evaluated on integer counts. With `x` the data counts
//! and `x*` a bootstrap draw, the studentized ratio for a pair is
//!
//! ```text
//! ((x*_j - x*_k) - (x_j - x_k)) * sqrt(n) / sqrt((x*_j + x*_k) n - (x*_j - x*_k)^2)
//! ```
//!
//! which is `(diff* - diff) / (sigma* / sqrt(n))` on the frequency scale.
//! A zero numerator or a zero denominator is then detected exactly: `0/0`
//! is 0 and `c/0` is `sign(c) * inf`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::{
    rankset_from_rejections, FamilyKind, IndexFamily, PairwiseRejections, RankInterval, RankSet,
};
use crate::sample::{MultinomialSample, ProbabilityVector};

/// Draws per RNG stream when generating bootstrap samples in parallel.
const DRAWS_PER_STREAM: usize = 128;

/// Absorbs representation error in `level * B` before rounding to an order
/// statistic index.
const INDEX_SLACK: f64 = 1e-9;

/// Draws `Multinomial(n, theta)` counts into `out` by sequential binomial
/// conditionals.
pub fn resample_counts<R: Rng + ?Sized>(theta: &[f64], n: u64, rng: &mut R, out: &mut [u64]) {
    debug_assert_eq!(theta.len(), out.len());
    out.iter_mut().for_each(|c| *c = 0);
    let Some(last) = theta.iter().rposition(|&t| t > 0.0) else {
        return;
    };
    let mut remaining_mass: f64 = theta[..=last].iter().sum();
    let mut remaining = n;
    for j in 0..last {
        if remaining == 0 {
            return;
        }
        let t = theta[j];
        if t > 0.0 {
            let q = (t / remaining_mass).clamp(0.0, 1.0);
            let x = if q >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, q)
                    .expect("q in [0, 1)")
                    .sample(rng)
            };
            out[j] = x;
            remaining -= x;
        }
        remaining_mass -= t;
    }
    out[last] = remaining;
}

/// One bootstrap draw from `Multinomial(n, theta_hat)`.
pub fn resample<R: Rng + ?Sized>(
    theta_hat: &ProbabilityVector,
    n: u64,
    rng: &mut R,
) -> Result<MultinomialSample> {
    let mut counts = vec![0; theta_hat.len()];
    resample_counts(theta_hat, n, rng, &mut counts);
    MultinomialSample::from_counts(counts)
}

/// `B` bootstrap count vectors drawn from the empirical distribution of a
/// sample. Stream `i` of the seeded generator produces draws
/// `128 i .. 128 (i + 1)`, so the draws do not depend on thread scheduling.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    p: usize,
    n: u64,
    counts: Vec<u64>,
}

impl BootstrapDraws {
    pub fn generate(sample: &MultinomialSample, b: usize, seed: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidArgument(
                "number of bootstrap samples must be positive".into(),
            ));
        }
        let p = sample.p();
        let n = sample.n();
        let theta = sample.theta_hat();
        let mut counts = vec![0u64; b * p];
        counts
            .par_chunks_mut(DRAWS_PER_STREAM * p)
            .enumerate()
            .for_each(|(stream, chunk)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream as u64);
                for draw in chunk.chunks_mut(p) {
                    resample_counts(&theta, n, &mut rng, draw);
                }
            });
        Ok(Self { p, n, counts })
    }

    pub fn len(&self) -> usize {
        self.counts.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn draw(&self, i: usize) -> &[u64] {
        &self.counts[i * self.p..(i + 1) * self.p]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u64]> + '_ {
        self.counts.chunks(self.p)
    }
}

/// Direction of the max statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// `max (diff* - diff) / scale`; calibrates lower bounds on differences.
    Lower,
    /// `max (diff - diff*) / scale`; calibrates upper bounds.
    Upper,
    /// `max |diff* - diff| / scale`.
    Symm,
}

/// Shape of a simultaneous confidence set for differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Lower,
    Upper,
    Symm,
    /// Lower and upper bounds each at level `1 - alpha/2`.
    Equi,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Lower => "lower",
            Shape::Upper => "upper",
            Shape::Symm => "symm",
            Shape::Equi => "equi",
        })
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Shape::Lower),
            "upper" => Ok(Shape::Upper),
            "symm" | "symmetric" => Ok(Shape::Symm),
            "equi" | "equi-tailed" => Ok(Shape::Equi),
            other => Err(Error::InvalidArgument(format!("unknown shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap samples `B`.
    pub samples: usize,
    pub seed: u64,
    pub studentize: bool,
    pub shape: Shape,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            studentize: true,
            shape: Shape::Symm,
        }
    }
}

/// `n^2 sigma_hat^2 = (x_j + x_k) n - (x_j - x_k)^2`, exact in integers.
fn scaled_variance(xj: u64, xk: u64, n: u64) -> i128 {
    let sum = (xj + xk) as i128;
    let diff = xj as i128 - xk as i128;
    sum * n as i128 - diff * diff
}

/// Per-pair quantities of the data that stay fixed across draws.
#[derive(Debug, Clone, Copy)]
struct PairBase {
    j: usize,
    k: usize,
    diff: i64,
}

fn pair_bases(counts: &[u64], pairs: &[(usize, usize)]) -> Vec<PairBase> {
    pairs
        .iter()
        .map(|&(j, k)| PairBase {
            j,
            k,
            diff: counts[j] as i64 - counts[k] as i64,
        })
        .collect()
}

#[inline]
fn signed_ratio(num: i64, denom_sq: i128, root_n: f64, studentize: bool) -> f64 {
    if !studentize {
        return num as f64 / root_n;
    }
    if denom_sq == 0 {
        return match num.signum() {
            0 => 0.0,
            1 => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
    }
    num as f64 * root_n / (denom_sq as f64).sqrt()
}

fn max_stat_counts(
    draw: &[u64],
    bases: &[PairBase],
    n: u64,
    statistic: Statistic,
    studentize: bool,
) -> f64 {
    let root_n = (n as f64).sqrt();
    let mut best = f64::NEG_INFINITY;
    for b in bases {
        let (xj, xk) = (draw[b.j], draw[b.k]);
        let num = (xj as i64 - xk as i64) - b.diff;
        let num = match statistic {
            Statistic::Lower => num,
            Statistic::Upper => -num,
            Statistic::Symm => num.abs(),
        };
        let denom_sq = if studentize {
            scaled_variance(xj, xk, n)
        } else {
            0
        };
        let value = signed_ratio(num, denom_sq, root_n, studentize);
        if value > best {
            best = value;
        }
    }
    best
}

/// Max statistic of one bootstrap sample relative to the data sample.
/// The non-studentized variant uses the scale `1/sqrt(n)` in place of
/// `sigma*_{j,k}/sqrt(n)`.
pub fn studentized_max_stat(
    boot: &MultinomialSample,
    data: &MultinomialSample,
    pairs: &[(usize, usize)],
    statistic: Statistic,
    studentize: bool,
) -> Result<f64> {
    if boot.p() != data.p() || boot.n() != data.n() {
        return Err(Error::InvalidArgument(
            "bootstrap sample does not match the data".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty pair list".into()));
    }
    let bases = pair_bases(data.counts(), pairs);
    Ok(max_stat_counts(
        boot.counts(),
        &bases,
        data.n(),
        statistic,
        studentize,
    ))
}

/// `inf{x : F_B(x) >= level}` for the empirical distribution of `values`,
/// i.e. the `ceil(level * B)`-th order statistic. Infinite values are legal.
pub fn bootstrap_quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no bootstrap values".into()));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {level} outside (0, 1]"
        )));
    }
    let b = values.len();
    let rank = ((level * b as f64 - INDEX_SLACK).ceil() as usize).clamp(1, b);
    let mut scratch = values.to_vec();
    let (_, value, _) = scratch.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    Ok(*value)
}

fn critical_value(
    draws: &BootstrapDraws,
    bases: &[PairBase],
    statistic: Statistic,
    studentize: bool,
    level: f64,
) -> Result<f64> {
    let values: Vec<f64> = draws
        .iter()
        .map(|d| max_stat_counts(d, bases, draws.n, statistic, studentize))
        .collect();
    bootstrap_quantile(&values, level)
}

/// Interval for one pairwise difference. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DiffInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    pub fn entirely_above_zero(&self) -> bool {
        self.lo > 0.0
    }

    pub fn entirely_below_zero(&self) -> bool {
        self.hi < 0.0
    }
}

/// Simultaneous confidence set for `(theta_j - theta_k : (j, k) in I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceCS {
    pub shape: Shape,
    pub studentized: bool,
    pub pairs: Vec<(usize, usize)>,
    /// `theta_hat_j - theta_hat_k`.
    pub estimates: Vec<f64>,
    /// `sigma_hat_{j,k}`; 1 for the non-studentized variant.
    pub sigma: Vec<f64>,
    /// Critical value for the lower bounds, if the shape has one.
    pub lower_critical: Option<f64>,
    /// Critical value for the upper bounds, if the shape has one.
    pub upper_critical: Option<f64>,
    pub intervals: Vec<DiffInterval>,
}

impl DifferenceCS {
    /// Whether every true difference lies in its interval.
    pub fn covers(&self, theta: &[f64]) -> bool {
        self.pairs
            .iter()
            .zip(&self.intervals)
            .all(|(&(j, k), interval)| interval.contains(theta[j] - theta[k]))
    }
}

/// `c * sigma / sqrt(n)`, with `inf * 0 = 0` when the pair has zero scale.
fn half_width(critical: f64, sigma: f64, n: u64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        critical * sigma / (n as f64).sqrt()
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

/// Simultaneous confidence set for differences from precomputed draws.
pub fn difference_cs_with(
    draws: &BootstrapDraws,
    sample: &MultinomialSample,
    shape: Shape,
    studentize: bool,
    alpha: f64,
    pairs: &[(usize, usize)],
) -> Result<DifferenceCS> {
    check_alpha(alpha)?;
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty pair list".into()));
    }
    if let Some(&(j, k)) = pairs
        .iter()
        .find(|&&(j, k)| j >= sample.p() || k >= sample.p() || j == k)
    {
        return Err(Error::InvalidArgument(format!("invalid pair ({j}, {k})")));
    }
    let counts = sample.counts();
    let n = sample.n();
    let bases = pair_bases(counts, pairs);
    let estimates: Vec<f64> = bases.iter().map(|b| b.diff as f64 / n as f64).collect();
    let sigma: Vec<f64> = pairs
        .iter()
        .map(|&(j, k)| {
            if studentize {
                (scaled_variance(counts[j], counts[k], n) as f64).sqrt() / n as f64
            } else {
                1.0
            }
        })
        .collect();

    let crit = |statistic, level| critical_value(draws, &bases, statistic, studentize, level);
    let (lower_critical, upper_critical) = match shape {
        Shape::Lower => (Some(crit(Statistic::Lower, 1.0 - alpha)?), None),
        Shape::Upper => (None, Some(crit(Statistic::Upper, 1.0 - alpha)?)),
        Shape::Symm => {
            let c = crit(Statistic::Symm, 1.0 - alpha)?;
            (Some(c), Some(c))
        }
        Shape::Equi => (
            Some(crit(Statistic::Lower, 1.0 - alpha / 2.0)?),
            Some(crit(Statistic::Upper, 1.0 - alpha / 2.0)?),
        ),
    };

    let intervals = estimates
        .iter()
        .zip(&sigma)
        .map(|(&est, &sig)| DiffInterval {
            lo: lower_critical.map_or(f64::NEG_INFINITY, |c| est - half_width(c, sig, n)),
            hi: upper_critical.map_or(f64::INFINITY, |c| est + half_width(c, sig, n)),
        })
        .collect();

    Ok(DifferenceCS {
        shape,
        studentized: studentize,
        pairs: pairs.to_vec(),
        estimates,
        sigma,
        lower_critical,
        upper_critical,
        intervals,
    })
}

pub fn difference_cs(
    sample: &MultinomialSample,
    config: &BootstrapConfig,
    alpha: f64,
    pairs: &[(usize, usize)],
) -> Result<DifferenceCS> {
    let draws = BootstrapDraws::generate(sample, config.samples, config.seed)?;
    difference_cs_with(
        &draws,
        sample,
        config.shape,
        config.studentize,
        alpha,
        pairs,
    )
}

fn boot_method_name(studentize: bool) -> &'static str {
    if studentize {
        "bootStud"
    } else {
        "boot"
    }
}

/// Bootstrap rank confidence set from precomputed draws.
///
/// One-sided kinds reject `H_{j,k}` when the lower-shape interval for
/// `theta_j - theta_k` over the family lies above zero. The two-sided kind
/// uses the symmetric shape over the upper family and reads off both signs.
pub fn boot_rank_cs_with(
    draws: &BootstrapDraws,
    sample: &MultinomialSample,
    targets: &[usize],
    kind: FamilyKind,
    alpha: f64,
    studentize: bool,
) -> Result<RankSet> {
    let p = sample.p();
    let rejections = match kind {
        FamilyKind::Lower | FamilyKind::Upper => {
            let family = IndexFamily::new(kind, targets, p)?;
            let cs = difference_cs_with(
                draws,
                sample,
                Shape::Lower,
                studentize,
                alpha,
                family.pairs(),
            )?;
            let rejected = cs
                .pairs
                .iter()
                .zip(&cs.intervals)
                .filter(|(_, i)| i.entirely_above_zero())
                .map(|(&pair, _)| pair);
            PairwiseRejections::from_rejected(&family, rejected)
        }
        FamilyKind::TwoSided => {
            let upper = IndexFamily::new(FamilyKind::Upper, targets, p)?;
            let cs =
                difference_cs_with(draws, sample, Shape::Symm, studentize, alpha, upper.pairs())?;
            let mut rej =
                PairwiseRejections::empty(&IndexFamily::new(FamilyKind::TwoSided, targets, p)?);
            for (&(j, k), interval) in cs.pairs.iter().zip(&cs.intervals) {
                if interval.entirely_below_zero() {
                    rej.claim_smaller(j, k);
                } else if interval.entirely_above_zero() {
                    rej.claim_larger(j, k);
                }
            }
            rej
        }
    };
    rankset_from_rejections(&rejections, boot_method_name(studentize), alpha)
}

pub fn boot_rank_cs(
    sample: &MultinomialSample,
    targets: &[usize],
    kind: FamilyKind,
    alpha: f64,
    config: &BootstrapConfig,
) -> Result<RankSet> {
    let draws = BootstrapDraws::generate(sample, config.samples, config.seed)?;
    boot_rank_cs_with(&draws, sample, targets, kind, alpha, config.studentize)
}

/// Order statistics used by the naive bootstrap: the lower end is the
/// `floor(alpha/2 * B) + 1`-th, the upper end the `ceil((1 - alpha/2) B)`-th.
fn naive_order_indices(b: usize, alpha: f64) -> (usize, usize) {
    let lower = ((alpha / 2.0 * b as f64 + INDEX_SLACK).floor() as usize + 1).min(b);
    let upper = (((1.0 - alpha / 2.0) * b as f64 - INDEX_SLACK).ceil() as usize).clamp(1, b);
    (lower, upper)
}

/// Rank of `j` within a count vector: one plus the number of strictly
/// larger counts.
fn count_rank(counts: &[u64], j: usize) -> usize {
    let x = counts[j];
    1 + counts.iter().filter(|&&c| c > x).count()
}

/// Naive bootstrap from precomputed draws: empirical quantiles of the
/// resampled estimated ranks.
pub fn naive_rank_cs_with(
    draws: &BootstrapDraws,
    sample: &MultinomialSample,
    targets: &[usize],
    alpha: f64,
) -> Result<RankSet> {
    check_alpha(alpha)?;
    let p = sample.p();
    let family = IndexFamily::new(FamilyKind::TwoSided, targets, p)?;
    let b = draws.len();
    let (lower_index, upper_index) = naive_order_indices(b, alpha);

    let mut rej = PairwiseRejections::empty(&family);
    for &j in family.targets() {
        let mut histogram = vec![0usize; p + 1];
        for draw in draws.iter() {
            histogram[count_rank(draw, j)] += 1;
        }
        let order_stat = |index: usize| {
            let mut cumulative = 0;
            for (rank, &count) in histogram.iter().enumerate() {
                cumulative += count;
                if cumulative >= index {
                    return rank;
                }
            }
            p
        };
        let interval = RankInterval::new(order_stat(lower_index), order_stat(upper_index));
        // Encode the interval as claims so it flows through the common
        // construction: lo - 1 categories above, p - hi below.
        let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        for &k in &others[..interval.lo - 1] {
            rej.claim_smaller(j, k);
        }
        for &k in others[interval.lo - 1..].iter().take(p - interval.hi) {
            rej.claim_larger(j, k);
        }
    }
    rankset_from_rejections(&rej, "naive", alpha)
}

pub fn naive_rank_cs(
    sample: &MultinomialSample,
    targets: &[usize],
    alpha: f64,
    config: &BootstrapConfig,
) -> Result<RankSet> {
    let draws = BootstrapDraws::generate(sample, config.samples, config.seed)?;
    naive_rank_cs_with(&draws, sample, targets, alpha)
}
