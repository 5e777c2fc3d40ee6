//! Special functions: fair-coin binomial tails, log-gamma, and the
//! regularized incomplete beta function with its inverse.

use std::sync::OnceLock;

/// Largest number of trials handled by the exact integer tail table.
pub const EXACT_TAIL_MAX_TRIALS: u64 = 64;

/// `tails[s][x] = sum_{i=x}^{s} C(s, i)` for `s <= 64`.
fn exact_tail_table() -> &'static Vec<Vec<u128>> {
    static TABLE: OnceLock<Vec<Vec<u128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let max = EXACT_TAIL_MAX_TRIALS as usize;
        let mut row: Vec<u128> = vec![1];
        let mut tails = Vec::with_capacity(max + 1);
        for s in 0..=max {
            if s > 0 {
                let mut next = vec![1u128; s + 1];
                for i in 1..s {
                    next[i] = row[i - 1] + row[i];
                }
                row = next;
            }
            let mut tail = vec![0u128; s + 2];
            for i in (0..=s).rev() {
                tail[i] = tail[i + 1] + row[i];
            }
            tails.push(tail);
        }
        tails
    })
}

/// `P(Bin(s, 1/2) >= x)`.
///
/// Exact up to rounding of the final division for `s <= 64`; beyond that
/// the terms are accumulated relative to the largest one with compensated
/// summation. Results too small for `f64` are clamped to
/// `f64::MIN_POSITIVE` so the value stays in `(0, 1]`.
pub fn fair_binomial_upper_tail(x: u64, s: u64) -> f64 {
    if x == 0 {
        return 1.0;
    }
    if x > s {
        return 0.0;
    }
    if s <= EXACT_TAIL_MAX_TRIALS {
        let numerator = exact_tail_table()[s as usize][x as usize];
        // Scaling by a power of two is exact.
        return numerator as f64 * 0.5f64.powi(s as i32);
    }
    if 2 * x <= s {
        // Below the mode the tail is close to 1; take the complement of the
        // small mirrored tail so rounding stays monotone.
        return (1.0 - large_fair_tail(s - x + 1, s)).max(f64::MIN_POSITIVE);
    }
    large_fair_tail(x, s).max(f64::MIN_POSITIVE)
}

/// `C(s, m) 2^{-s}` as `(mantissa, binary exponent)`.
fn scaled_central_term(s: u64, m: u64) -> (f64, i64) {
    const RESCALE: i64 = 512;
    let k = m.min(s - m);
    let mut value = 1.0f64;
    let mut exponent: i64 = -(s as i64);
    for i in 1..=k {
        value *= (s - k + i) as f64 / i as f64;
        if value > 2f64.powi(RESCALE as i32) {
            value *= 2f64.powi(-RESCALE as i32);
            exponent += RESCALE;
        }
    }
    (value, exponent)
}

fn large_fair_tail(x: u64, s: u64) -> f64 {
    // Largest term of the tail sits at the mode s/2, or at x if x is past it.
    let m = x.max(s / 2);
    let mut sum = 1.0f64;
    let mut compensation = 0.0f64;
    let mut add = |term: f64| {
        let t = sum + term;
        if sum.abs() >= term.abs() {
            compensation += (sum - t) + term;
        } else {
            compensation += (term - t) + sum;
        }
        sum = t;
    };

    let mut term = 1.0f64;
    for i in (m + 1)..=s {
        term *= (s - i + 1) as f64 / i as f64;
        if term < 1e-20 {
            break;
        }
        add(term);
    }
    term = 1.0;
    let mut i = m;
    while i > x {
        i -= 1;
        term *= (i + 1) as f64 / (s - i) as f64;
        add(term);
    }
    let relative = sum + compensation;

    let (mantissa, exponent) = scaled_central_term(s, m);
    let half = exponent / 2;
    let rest = exponent - half;
    let value =
        mantissa * relative * 2f64.powi(half.max(-1100) as i32) * 2f64.powi(rest.max(-1100) as i32);
    value.min(1.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFICIENTS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFICIENTS[0];
    for (i, &c) in LANCZOS_COEFFICIENTS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const BETA_CF_MAX_ITER: usize = 500;
const BETA_CF_EPS: f64 = 1e-16;
const BETA_CF_TINY: f64 = 1e-300;

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(
        a > 0.0 && b > 0.0,
        "reg_inc_beta needs a, b > 0 (got {a}, {b})"
    );
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_continued_fraction(b, a, 1.0 - x)
    } else {
        beta_continued_fraction(a, b, x)
    }
}

/// Modified Lentz evaluation, valid for `x < (a + 1) / (a + b + 2)`.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let ln_prefix = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let prefix = ln_prefix.exp() / a;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| {
        if v.abs() < BETA_CF_TINY {
            BETA_CF_TINY
        } else {
            v
        }
    };

    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut f = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + even * d);
        c = clamp(1.0 + even / c);
        f *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + odd * d);
        c = clamp(1.0 + odd / c);
        let delta = d * c;
        f *= delta;

        if (delta - 1.0).abs() < BETA_CF_EPS {
            break;
        }
    }
    prefix * f
}

/// Quantile of the Beta(a, b) distribution by bisection on
/// [`reg_inc_beta`]. The bracket is narrowed until it is below `1e-15` wide.
pub fn inv_reg_inc_beta(prob: f64, a: f64, b: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&prob),
        "probability {prob} outside [0, 1]"
    );
    if prob == 0.0 {
        return 0.0;
    }
    if prob == 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reg_inc_beta(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_small_cases() {
        assert_eq!(fair_binomial_upper_tail(0, 5), 1.0);
        assert_eq!(fair_binomial_upper_tail(3, 3), 0.125);
        assert_eq!(fair_binomial_upper_tail(8, 10), 56.0 / 1024.0);
        assert_eq!(fair_binomial_upper_tail(0, 0), 1.0);
    }

    #[test]
    fn large_path_agrees_with_table_at_the_boundary() {
        // Force the large-s path on s <= 64 and compare with the exact table.
        for s in [20u64, 41, 64] {
            for x in 1..=s {
                let exact = fair_binomial_upper_tail(x, s);
                let approx = large_fair_tail(x, s);
                assert!(
                    ((exact - approx) / exact).abs() < 1e-13,
                    "s={s} x={x}: {exact} vs {approx}"
                );
            }
        }
    }

    #[test]
    fn tail_is_monotone_in_x_for_large_s() {
        let s = 500;
        let mut prev = 1.0;
        for x in 0..=s {
            let t = fair_binomial_upper_tail(x, s);
            assert!(t <= prev && t > 0.0);
            prev = t;
        }
    }

    #[test]
    fn ln_gamma_at_integers() {
        let mut fact = 1.0f64;
        for k in 1..30 {
            fact *= k as f64;
            let got = ln_gamma(k as f64 + 1.0);
            assert!(
                (got - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0),
                "k={k}"
            );
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_identities() {
        assert!((reg_inc_beta(1.0, 1.0, 0.3) - 0.3).abs() < 1e-14);
        // I_x(a, 1) = x^a
        assert!((reg_inc_beta(3.0, 1.0, 0.6) - 0.216).abs() < 1e-14);
        // symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
        let l = reg_inc_beta(2.5, 7.0, 0.2);
        let r = 1.0 - reg_inc_beta(7.0, 2.5, 0.8);
        assert!((l - r).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trips() {
        for &(a, b) in &[(1.0, 10.0), (5.0, 6.0), (6.0, 5.0), (0.7, 40.0)] {
            for &q in &[0.001, 0.025, 0.5, 0.975] {
                let x = inv_reg_inc_beta(q, a, b);
                assert!(
                    (reg_inc_beta(a, b, x) - q).abs() < 1e-10,
                    "a={a} b={b} q={q}"
                );
            }
        }
    }
}
