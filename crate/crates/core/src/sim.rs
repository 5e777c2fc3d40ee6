//! Monte Carlo coverage studies for the rank confidence set procedures.
//!
//! Every replication draws one data set and runs all configured methods on
//! it, so method comparisons are paired. Replication seeds are hashed from
//! the master seed and the replication index, which makes reports
//! independent of the thread count.

use std::fmt;
use std::io::Write;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boot::{difference_cs_with, resample_counts, BootstrapDraws, Shape};
use crate::error::{Error, Result};
use crate::method::{marginal_intervals, rank_cs_with, Method};
use crate::rank::{compute_ranks, FamilyKind, IndexFamily, RankTriple};
use crate::sample::{MultinomialSample, ProbabilityVector};

/// Respondent count of the reference survey sample.
pub const AES_N: u64 = 234;

/// Category counts of the reference sample; divided by [`AES_N`] they give
/// `(0.372, 0.321, 0.179, 0.090, 0.026, 0.009, 0.004)` to three decimals.
pub const AES_COUNTS: [u64; 7] = [87, 75, 42, 21, 6, 2, 1];

pub fn aes_theta_hat() -> Vec<f64> {
    AES_COUNTS
        .iter()
        .map(|&c| c as f64 / AES_N as f64)
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of a study seeded with `master`.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(master) ^ rep.wrapping_mul(0xd605_bbb5_8c8a_bbf5))
}

fn bootstrap_seed(rep_seed: u64) -> u64 {
    splitmix64(rep_seed ^ 0x5851_f42d_4c95_7f2d)
}

/// How the true probabilities are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum ThetaDesign {
    /// `(1 - kappa) / p + kappa * theta_hat_AES`; `n = round(tau * 234)`.
    Aes {
        kappa: f64,
        tau: f64,
    },
    /// `(pi, pi, 1 - 2 pi)`.
    Erratic {
        pi: f64,
    },
    Uniform {
        p: usize,
    },
    Fixed {
        theta: Vec<f64>,
    },
}

impl ThetaDesign {
    pub fn theta(&self) -> Result<ProbabilityVector> {
        match self {
            ThetaDesign::Aes { kappa, .. } => {
                if !(0.0..=1.0).contains(kappa) {
                    return Err(Error::InvalidArgument(format!(
                        "kappa {kappa} outside [0, 1]"
                    )));
                }
                let p = AES_COUNTS.len() as f64;
                let theta = aes_theta_hat()
                    .into_iter()
                    .map(|t| (1.0 - kappa) / p + kappa * t)
                    .collect();
                ProbabilityVector::new(theta)
            }
            ThetaDesign::Erratic { pi } => {
                if !(*pi > 0.0 && *pi <= 1.0 / 3.0) {
                    return Err(Error::InvalidArgument(format!("pi {pi} outside (0, 1/3]")));
                }
                ProbabilityVector::new(vec![*pi, *pi, 1.0 - 2.0 * pi])
            }
            ThetaDesign::Uniform { p } => ProbabilityVector::uniform(*p),
            ThetaDesign::Fixed { theta } => ProbabilityVector::new(theta.clone()),
        }
    }

    /// Sample size implied by the design, if it fixes one, and the unrounded
    /// value it came from.
    pub fn implied_n(&self) -> Option<(u64, f64)> {
        match self {
            ThetaDesign::Aes { tau, .. } => {
                let exact = tau * AES_N as f64;
                Some((exact.round() as u64, exact))
            }
            _ => None,
        }
    }
}

impl fmt::Display for ThetaDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaDesign::Aes { kappa, tau } => write!(f, "aes(kappa={kappa},tau={tau})"),
            ThetaDesign::Erratic { pi } => write!(f, "erratic(pi={pi})"),
            ThetaDesign::Uniform { p } => write!(f, "uniform(p={p})"),
            ThetaDesign::Fixed { theta } => write!(f, "fixed(p={})", theta.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub name: String,
    pub theta: ThetaDesign,
    /// Required unless the design implies a sample size.
    pub n: Option<u64>,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub reps: usize,
    pub boot_samples: usize,
    pub master_seed: u64,
    /// Categories to evaluate (0-based); `None` means all. Each gets a
    /// marginal two-sided set.
    pub categories: Option<Vec<usize>>,
}

impl SimDesign {
    pub fn new(name: impl Into<String>, theta: ThetaDesign, methods: Vec<Method>) -> Self {
        Self {
            name: name.into(),
            theta,
            n: None,
            methods,
            alpha: 0.05,
            reps: 1000,
            boot_samples: 1000,
            master_seed: 0,
            categories: None,
        }
    }

    /// The sample size and, when it had to be rounded, the unrounded value.
    pub fn sample_size(&self) -> Result<(u64, Option<f64>)> {
        let (n, exact) = match (self.n, self.theta.implied_n()) {
            (Some(n), _) => (n, None),
            (None, Some((n, exact))) => (n, Some(exact)),
            (None, None) => {
                return Err(Error::InvalidArgument(format!(
                    "design {} needs a sample size",
                    self.name
                )))
            }
        };
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample size must be positive".into(),
            ));
        }
        Ok((n, exact.filter(|e| e.fract() != 0.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub design: String,
    pub method: Method,
    /// 1-based category number.
    pub category: usize,
    pub coverage: f64,
    pub coverage_se: f64,
    pub avg_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub design: String,
    pub n: u64,
    /// Set when `tau * 234` was not an integer and got rounded.
    pub n_rounded_from: Option<f64>,
    pub reps: usize,
    pub rows: Vec<SimRow>,
}

impl SimReport {
    pub fn row(&self, method: Method, category: usize) -> Option<&SimRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.category == category)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_rows_csv(&self.rows, out)
    }
}

pub fn write_rows_csv<W: Write>(rows: &[SimRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "design,method,category,coverage,coverage_se,avg_length"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.design, r.method, r.category, r.coverage, r.coverage_se, r.avg_length
        )?;
    }
    Ok(())
}

/// `sqrt(f (1 - f) / reps)`.
pub fn binomial_se(f: f64, reps: usize) -> f64 {
    (f * (1.0 - f) / reps as f64).sqrt()
}

/// Coverage and summed length per (method, category).
#[derive(Debug, Clone, Default)]
struct Tally {
    covered: Vec<u64>,
    length: Vec<u64>,
}

impl Tally {
    fn zeros(cells: usize) -> Self {
        Self {
            covered: vec![0; cells],
            length: vec![0; cells],
        }
    }

    fn merge(mut self, other: &Tally) -> Self {
        for (a, b) in self.covered.iter_mut().zip(&other.covered) {
            *a += b;
        }
        for (a, b) in self.length.iter_mut().zip(&other.length) {
            *a += b;
        }
        self
    }
}

/// Draws the data set of one replication.
fn draw_sample(theta: &ProbabilityVector, n: u64, rep_seed: u64) -> Result<MultinomialSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    let mut counts = vec![0; theta.len()];
    resample_counts(theta, n, &mut rng, &mut counts);
    MultinomialSample::from_counts(counts)
}

fn run_replication(
    sample: &MultinomialSample,
    truth: &[RankTriple],
    methods: &[Method],
    categories: &[usize],
    alpha: f64,
    draws: Option<&BootstrapDraws>,
) -> Result<Tally> {
    let mut tally = Tally::zeros(methods.len() * categories.len());
    for (mi, &method) in methods.iter().enumerate() {
        let intervals = marginal_intervals(
            sample,
            categories,
            FamilyKind::TwoSided,
            alpha,
            method,
            draws,
        )?;
        for (ci, (&j, interval)) in categories.iter().zip(intervals).enumerate() {
            let cell = mi * categories.len() + ci;
            tally.covered[cell] += interval.covers(&truth[j]) as u64;
            tally.length[cell] += interval.length() as u64;
        }
    }
    Ok(tally)
}

fn check_common(alpha: f64, reps: usize, methods: &[Method], boot_samples: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    if methods.iter().any(|m| m.uses_bootstrap()) && boot_samples == 0 {
        return Err(Error::InvalidArgument(
            "bootstrap methods need boot_samples > 0".into(),
        ));
    }
    Ok(())
}

/// Runs all replications of a design. Deterministic given the design.
pub fn run_design(design: &SimDesign) -> Result<SimReport> {
    check_common(
        design.alpha,
        design.reps,
        &design.methods,
        design.boot_samples,
    )?;
    let theta = design.theta.theta()?;
    let p = theta.len();
    let (n, n_rounded_from) = design.sample_size()?;
    let categories: Vec<usize> = match &design.categories {
        Some(c) => c.clone(),
        None => (0..p).collect(),
    };
    if let Some(&j) = categories.iter().find(|&&j| j >= p) {
        return Err(Error::CategoryOutOfRange { index: j, p });
    }
    let truth = compute_ranks(&theta);
    let any_boot = design.methods.iter().any(|m| m.uses_bootstrap());

    let tallies = (0..design.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(design.master_seed, rep as u64);
            let sample = draw_sample(&theta, n, seed)?;
            let draws = if any_boot {
                Some(BootstrapDraws::generate(
                    &sample,
                    design.boot_samples,
                    bootstrap_seed(seed),
                )?)
            } else {
                None
            };
            run_replication(
                &sample,
                &truth,
                &design.methods,
                &categories,
                design.alpha,
                draws.as_ref(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let total = tallies.iter().fold(
        Tally::zeros(design.methods.len() * categories.len()),
        Tally::merge,
    );

    let reps = design.reps;
    let mut rows = Vec::new();
    for (mi, &method) in design.methods.iter().enumerate() {
        for (ci, &j) in categories.iter().enumerate() {
            let cell = mi * categories.len() + ci;
            let coverage = total.covered[cell] as f64 / reps as f64;
            rows.push(SimRow {
                design: design.name.clone(),
                method,
                category: j + 1,
                coverage,
                coverage_se: binomial_se(coverage, reps),
                avg_length: total.length[cell] as f64 / reps as f64,
            });
        }
    }
    Ok(SimReport {
        design: design.name.clone(),
        n,
        n_rounded_from,
        reps,
        rows,
    })
}

/// Settings shared by the grid studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub alpha: f64,
    pub reps: usize,
    pub boot_samples: usize,
    pub master_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            reps: 1000,
            boot_samples: 1000,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErraticRow {
    pub pi: f64,
    pub n: u64,
    /// Joint coverage of the differences involving category 1 by the
    /// studentized symmetric set.
    pub diff_coverage_stud: f64,
    /// Same for the non-studentized set.
    pub diff_coverage: f64,
    /// Rank coverage of category 1.
    pub rank_coverage_boot: f64,
    pub rank_coverage_boot_stud: f64,
    pub rank_coverage_exact_bonf: f64,
}

/// Coverage in the `(pi, pi, 1 - 2 pi)` design over a grid of `pi` and `n`.
pub fn erratic_coverage_curves(
    pi_grid: &[f64],
    n_grid: &[u64],
    config: &StudyConfig,
) -> Result<Vec<ErraticRow>> {
    let methods = [Method::Boot, Method::BootStud, Method::ExactBonf];
    check_common(config.alpha, config.reps, &methods, config.boot_samples)?;
    if let Some(&n) = n_grid.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidArgument(format!("sample size {n} below 2")));
    }
    let family = IndexFamily::new(FamilyKind::TwoSided, &[0], 3)?;
    let mut rows = Vec::new();
    for (gi, &pi) in pi_grid.iter().enumerate() {
        let theta = ThetaDesign::Erratic { pi }.theta()?;
        let truth = compute_ranks(&theta);
        for (ni, &n) in n_grid.iter().enumerate() {
            let cell_seed = replication_seed(config.master_seed, ((gi as u64) << 32) | ni as u64);
            let per_rep = (0..config.reps)
                .into_par_iter()
                .map(|rep| {
                    let seed = replication_seed(cell_seed, rep as u64);
                    let sample = draw_sample(&theta, n, seed)?;
                    let draws = BootstrapDraws::generate(
                        &sample,
                        config.boot_samples,
                        bootstrap_seed(seed),
                    )?;
                    let mut hits = [0u64; 5];
                    for (slot, studentize) in [(0, true), (1, false)] {
                        let cs = difference_cs_with(
                            &draws,
                            &sample,
                            Shape::Symm,
                            studentize,
                            config.alpha,
                            family.pairs(),
                        )?;
                        hits[slot] = cs.covers(&theta) as u64;
                    }
                    for (slot, method) in methods.iter().enumerate() {
                        let set = rank_cs_with(
                            &sample,
                            &[0],
                            FamilyKind::TwoSided,
                            config.alpha,
                            *method,
                            Some(&draws),
                        )?;
                        hits[2 + slot] = set.covers(&truth) as u64;
                    }
                    Ok(hits)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sums = [0u64; 5];
            for hits in &per_rep {
                for (s, h) in sums.iter_mut().zip(hits) {
                    *s += h;
                }
            }
            let freq = |i: usize| sums[i] as f64 / config.reps as f64;
            rows.push(ErraticRow {
                pi,
                n,
                diff_coverage_stud: freq(0),
                diff_coverage: freq(1),
                rank_coverage_boot: freq(2),
                rank_coverage_boot_stud: freq(3),
                rank_coverage_exact_bonf: freq(4),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargePRow {
    pub p: usize,
    pub n: u64,
    pub method: Method,
    /// Rank coverage of category 1.
    pub coverage: f64,
    pub coverage_se: f64,
    pub avg_length: f64,
    /// Coverage more than three nominal standard errors below `1 - alpha`.
    pub under_coverage: bool,
}

/// Coverage for uniform probabilities as the number of categories grows.
pub fn large_p_study(
    p_grid: &[usize],
    n_grid: &[u64],
    methods: &[Method],
    config: &StudyConfig,
) -> Result<Vec<LargePRow>> {
    let mut rows = Vec::new();
    let nominal = 1.0 - config.alpha;
    let threshold = nominal - 3.0 * binomial_se(nominal, config.reps);
    for (pi, &p) in p_grid.iter().enumerate() {
        if p < 2 {
            return Err(Error::InvalidArgument(format!("p = {p} below 2")));
        }
        for (ni, &n) in n_grid.iter().enumerate() {
            let mut design = SimDesign::new(
                format!("uniform(p={p},n={n})"),
                ThetaDesign::Uniform { p },
                methods.to_vec(),
            );
            design.n = Some(n);
            design.alpha = config.alpha;
            design.reps = config.reps;
            design.boot_samples = config.boot_samples;
            design.master_seed =
                replication_seed(config.master_seed, ((pi as u64) << 32) | ni as u64);
            design.categories = Some(vec![0]);
            let report = run_design(&design)?;
            rows.extend(report.rows.into_iter().map(|r| LargePRow {
                p,
                n,
                method: r.method,
                coverage: r.coverage,
                coverage_se: r.coverage_se,
                avg_length: r.avg_length,
                under_coverage: r.coverage < threshold,
            }));
        }
    }
    Ok(rows)
}
