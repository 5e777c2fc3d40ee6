use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

use ranksets::boot::{resample_counts, BootstrapDraws};
use ranksets::exact::{holm_reject, PairwisePValueTable};
use ranksets::special::fair_binomial_upper_tail;
use ranksets::{
    boot_rank_cs, bootstrap_quantile, clopper_pearson, compute_ranks, conditional_pvalue,
    cp_rank_cs, exact_rank_cs, naive_rank_cs, tau_best, tau_worst, BootstrapConfig, Correction,
    FamilyKind, IndexFamily, Method, MultinomialSample, RankInterval,
};

fn brute_ranks(theta: &[f64]) -> Vec<(usize, usize, usize)> {
    theta
        .iter()
        .map(|&t| {
            let greater = theta.iter().filter(|&&o| o > t).count();
            let smaller = theta.iter().filter(|&&o| o < t).count();
            (1 + greater, 1 + greater, theta.len() - smaller)
        })
        .collect()
}

fn rational_tail(x: u64, s: u64) -> f64 {
    let mut binom = BigInt::one();
    let mut total = BigInt::zero();
    for i in 0..=s {
        if i >= x {
            total += &binom;
        }
        binom = binom * BigInt::from(s - i) / BigInt::from(i + 1);
    }
    BigRational::new(total, BigInt::one() << s)
        .to_f64()
        .unwrap()
}

fn kind_strategy() -> impl Strategy<Value = FamilyKind> {
    prop_oneof![
        Just(FamilyKind::Lower),
        Just(FamilyKind::Upper),
        Just(FamilyKind::TwoSided)
    ]
}

fn counts_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..80, 2..9).prop_filter("n > 0", |c| c.iter().sum::<u64>() > 0)
}

fn sample(counts: Vec<u64>) -> MultinomialSample {
    MultinomialSample::from_counts(counts).unwrap()
}

#[test]
fn ranks_match_brute_force_on_large_vector() {
    let mut state = 12345u64;
    let theta: Vec<f64> = (0..1000)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            // Coarse grid so that ties are frequent.
            ((state >> 40) % 200) as f64 / 200.0
        })
        .collect();
    let got: Vec<_> = compute_ranks(&theta)
        .iter()
        .map(|r| (r.rank, r.lo, r.hi))
        .collect();
    assert_eq!(got, brute_ranks(&theta));
}

#[test]
fn large_trial_tails_match_rationals() {
    for s in [65u64, 100, 257, 600] {
        for x in (0..=s).step_by(7) {
            let exact = rational_tail(x, s);
            let got = fair_binomial_upper_tail(x, s);
            if exact > 1e-300 {
                assert!(
                    ((got - exact) / exact).abs() < 1e-12,
                    "s={s} x={x}: {got} vs {exact}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ranks_match_brute_force(theta in prop::collection::vec(0u8..6, 1..30)) {
        let theta: Vec<f64> = theta.into_iter().map(|t| t as f64 / 10.0).collect();
        let got: Vec<_> = compute_ranks(&theta).iter().map(|r| (r.rank, r.lo, r.hi)).collect();
        prop_assert_eq!(got, brute_ranks(&theta));
    }

    #[test]
    fn reversed_pvalues_sum_to_at_least_one(xj in 0u64..400, xk in 0u64..400) {
        prop_assert!(conditional_pvalue(xj, xk) + conditional_pvalue(xk, xj) >= 1.0 - 1e-12);
    }

    #[test]
    fn pvalue_in_unit_interval_and_monotone(xj in 0u64..300, xk in 0u64..300) {
        let p = conditional_pvalue(xj, xk);
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!(conditional_pvalue(xj + 1, xk) <= p);
    }

    #[test]
    fn intervals_are_well_formed(counts in counts_strategy(), kind in kind_strategy(), alpha in 0.01f64..0.3) {
        let s = sample(counts);
        let p = s.p();
        let all: Vec<usize> = (0..p).collect();
        for correction in [Correction::Bonferroni, Correction::Holm] {
            let set = exact_rank_cs(&s, &all, kind, alpha, correction).unwrap();
            for (_, i) in set.iter() {
                prop_assert!(1 <= i.lo && i.lo <= i.hi && i.hi <= p);
                match kind {
                    FamilyKind::Lower => prop_assert_eq!(i.hi, p),
                    FamilyKind::Upper => prop_assert_eq!(i.lo, 1),
                    FamilyKind::TwoSided => {}
                }
            }
        }
    }

    #[test]
    fn holm_within_bonferroni(counts in counts_strategy(), kind in kind_strategy(), alpha in 0.01f64..0.3) {
        let s = sample(counts);
        let all: Vec<usize> = (0..s.p()).collect();
        let holm = exact_rank_cs(&s, &all, kind, alpha, Correction::Holm).unwrap();
        let bonf = exact_rank_cs(&s, &all, kind, alpha, Correction::Bonferroni).unwrap();
        for (j, i) in holm.iter() {
            prop_assert!(i.is_subset_of(&bonf.interval(j).unwrap()));
        }
    }

    #[test]
    fn smaller_alpha_gives_wider_sets(counts in counts_strategy(), a in 0.01f64..0.2, b in 0.01f64..0.2) {
        let (small, large) = if a < b { (a, b) } else { (b, a) };
        let s = sample(counts);
        let all: Vec<usize> = (0..s.p()).collect();
        for correction in [Correction::Bonferroni, Correction::Holm] {
            let wide = exact_rank_cs(&s, &all, FamilyKind::TwoSided, small, correction).unwrap();
            let narrow = exact_rank_cs(&s, &all, FamilyKind::TwoSided, large, correction).unwrap();
            for (j, i) in narrow.iter() {
                prop_assert!(i.is_subset_of(&wide.interval(j).unwrap()));
            }
        }
    }

    #[test]
    fn holm_rejections_respect_stepdown(values in prop::collection::vec(0.0f64..0.05, 6), alpha in 0.01f64..0.2) {
        let family = IndexFamily::new(FamilyKind::TwoSided, &[0], 4).unwrap();
        let table = PairwisePValueTable::from_values(&family, &values).unwrap();
        let rej = holm_reject(&table, alpha).unwrap();
        // Reference step-down on sorted p-values.
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let expected = sorted
            .iter()
            .enumerate()
            .take_while(|(l, &p)| p <= alpha / (m - l) as f64)
            .count();
        let got = rej.rej_minus(0).unwrap().len() + rej.rej_plus(0).unwrap().len();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn clopper_pearson_inverts_binomial_tails(n in 1u64..200, frac in 0.0f64..=1.0, level in 0.5f64..0.999) {
        let x = ((n as f64) * frac).round() as u64;
        let i = clopper_pearson(x, n, level).unwrap();
        let tail = (1.0 - level) / 2.0;
        // lo: P(Bin(n, lo) >= x) = tail; hi: P(Bin(n, hi) <= x) = tail.
        if x > 0 {
            let upper = 1.0 - Binomial::new(i.lo, n).unwrap().cdf(x - 1);
            prop_assert!((upper - tail).abs() < 1e-8, "lo {} gives {}", i.lo, upper);
        } else {
            prop_assert_eq!(i.lo, 0.0);
        }
        if x < n {
            let lower = Binomial::new(i.hi, n).unwrap().cdf(x);
            prop_assert!((lower - tail).abs() < 1e-8, "hi {} gives {}", i.hi, lower);
        } else {
            prop_assert_eq!(i.hi, 1.0);
        }
        prop_assert!(i.lo <= x as f64 / n as f64 && x as f64 / n as f64 <= i.hi);
    }

    #[test]
    fn cp_sets_are_valid_intervals(counts in counts_strategy(), kind in kind_strategy()) {
        let s = sample(counts);
        let all: Vec<usize> = (0..s.p()).collect();
        let set = cp_rank_cs(&s, &all, kind, 0.05).unwrap();
        prop_assert!(set.iter().all(|(_, i)| 1 <= i.lo && i.lo <= i.hi && i.hi <= s.p()));
    }

    #[test]
    fn tau_sets_are_monotone(counts in counts_strategy()) {
        let s = sample(counts);
        let config = BootstrapConfig::default();
        for method in [Method::ExactBonf, Method::ExactHolm, Method::Cp] {
            let mut prev_best: Vec<usize> = Vec::new();
            let mut prev_worst: Vec<usize> = Vec::new();
            for tau in 1..=s.p() {
                let (best, _) = tau_best(&s, tau, 0.05, method, &config).unwrap();
                let (worst, _) = tau_worst(&s, tau, 0.05, method, &config).unwrap();
                prop_assert!(prev_best.iter().all(|j| best.contains(*j)));
                prop_assert!(prev_worst.iter().all(|j| worst.contains(*j)));
                prev_best = best.members;
                prev_worst = worst.members;
            }
            prop_assert_eq!(prev_best.len(), s.p());
        }
    }

    #[test]
    fn resampled_counts_sum_to_n(theta in prop::collection::vec(0u32..20, 2..10), n in 1u64..500, seed: u64) {
        prop_assume!(theta.iter().any(|&t| t > 0));
        let total: u32 = theta.iter().sum();
        let theta: Vec<f64> = theta.iter().map(|&t| t as f64 / total as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![0; theta.len()];
        resample_counts(&theta, n, &mut rng, &mut out);
        prop_assert_eq!(out.iter().sum::<u64>(), n);
        for (t, c) in theta.iter().zip(&out) {
            if *t == 0.0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn quantile_is_order_statistic(values in prop::collection::vec(prop_oneof![
        4 => -100.0f64..100.0,
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
    ], 1..60), level in 0.01f64..=1.0) {
        let q = bootstrap_quantile(&values, level).unwrap();
        // Smallest value whose empirical CDF reaches the level.
        let b = values.len() as f64;
        let cdf = |x: f64| values.iter().filter(|&&v| v <= x).count() as f64 / b;
        prop_assert!(cdf(q) >= level - 1e-9);
        let below = values.iter().copied().filter(|&v| v < q).fold(f64::NEG_INFINITY, f64::max);
        if values.iter().any(|&v| v < q) {
            prop_assert!(cdf(below) < level - 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bootstrap_is_deterministic(counts in counts_strategy(), seed: u64) {
        let s = sample(counts);
        let all: Vec<usize> = (0..s.p()).collect();
        let config = BootstrapConfig { samples: 300, seed, ..Default::default() };
        let a = boot_rank_cs(&s, &all, FamilyKind::TwoSided, 0.05, &config).unwrap();
        let b = boot_rank_cs(&s, &all, FamilyKind::TwoSided, 0.05, &config).unwrap();
        prop_assert_eq!(a, b);
        let a = naive_rank_cs(&s, &all, 0.05, &config).unwrap();
        let b = naive_rank_cs(&s, &all, 0.05, &config).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(
            BootstrapDraws::generate(&s, 300, seed).unwrap(),
            BootstrapDraws::generate(&s, 300, seed).unwrap()
        );
    }

    #[test]
    fn bootstrap_intervals_are_well_formed(counts in counts_strategy(), kind in kind_strategy(), stud: bool) {
        let s = sample(counts);
        let all: Vec<usize> = (0..s.p()).collect();
        let config = BootstrapConfig { samples: 300, seed: 3, studentize: stud, ..Default::default() };
        let set = boot_rank_cs(&s, &all, kind, 0.05, &config).unwrap();
        for (_, i) in set.iter() {
            prop_assert!(1 <= i.lo && i.lo <= i.hi && i.hi <= s.p());
        }
    }

    #[test]
    fn unstudentized_critical_value_is_finite(counts in counts_strategy()) {
        let s = sample(counts);
        let pairs = IndexFamily::simultaneous(FamilyKind::TwoSided, s.p()).unwrap();
        let config = BootstrapConfig { samples: 200, seed: 1, studentize: false, ..Default::default() };
        let cs = ranksets::difference_cs(&s, &config, 0.05, pairs.pairs()).unwrap();
        prop_assert!(cs.lower_critical.unwrap().is_finite());
    }
}

#[test]
fn equal_counts_give_full_sets_for_every_method() {
    let s = sample(vec![15, 15, 15, 15]);
    let config = BootstrapConfig {
        samples: 500,
        ..Default::default()
    };
    for method in Method::ALL {
        let set = ranksets::rank_cs(
            &s,
            &[0, 1, 2, 3],
            FamilyKind::TwoSided,
            0.05,
            method,
            &config,
        )
        .unwrap();
        assert!(
            set.iter()
                .all(|(_, i)| i == RankInterval::full(4) || method == Method::Naive),
            "{method}"
        );
    }
}

#[test]
fn pvalue_monotone_on_full_grid() {
    for xk in 0u64..300 {
        let mut prev = conditional_pvalue(0, xk);
        for xj in 1u64..300 {
            let p = conditional_pvalue(xj, xk);
            assert!(p <= prev, "xj={xj} xk={xk}: {p} > {prev}");
            prev = p;
        }
    }
}

/// Size-β test constants by scanning every cutoff with exact integer tails:
/// the cutoff `c` satisfies tail(c + 1) <= β < tail(c) and the randomization
/// fills the gap, γ·P(X = c) = β − tail(c + 1).
fn constants_by_search(s: u64, beta: f64) -> (u64, f64) {
    let pmf: Vec<u128> = (0..=s)
        .scan(1u128, |c, k| {
            let out = *c;
            *c = *c * (s - k) as u128 / (k + 1) as u128;
            Some(out)
        })
        .collect();
    let scale = 2f64.powi(s as i32);
    let tail = |c: u64| -> f64 { pmf[c.min(s + 1) as usize..].iter().sum::<u128>() as f64 / scale };
    for c in 0..=s {
        let above = if c == s { 0.0 } else { tail(c + 1) };
        if above <= beta && beta < tail(c) {
            return (c, (beta - above) / (pmf[c as usize] as f64 / scale));
        }
    }
    unreachable!("tail(0) = 1 > beta")
}

#[test]
fn test_constants_match_exhaustive_search() {
    for s in 1u64..=50 {
        for beta in [0.001, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9] {
            let got = ranksets::test_constants(s, beta).unwrap();
            let (cutoff, gamma) = constants_by_search(s, beta);
            assert_eq!(got.cutoff, cutoff, "s={s} beta={beta}");
            assert!((got.gamma - gamma).abs() < 1e-9, "s={s} beta={beta}: {} vs {gamma}", got.gamma);
        }
    }
    assert_eq!(constants_by_search(1, 0.5), (0, 0.0));
}
