//! Binomial tail probabilities that stay accurate for N up to 10⁹ with small means.
//!
//! The pmf at one anchor point is evaluated with Loader's saddle-point form
//! (Stirling-error and deviance terms, no factorial cancellation); the remaining
//! terms follow from the ratio recurrence, summed away from the mode until a
//! geometric bound on the remainder drops below `TAIL_EPS` of the running sum.

use std::f64::consts::PI;

const TAIL_EPS: f64 = 1e-17;

/// ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)] for n = 1..=15.
#[allow(clippy::excessive_precision)]
const STIRLING_ERROR_SMALL: [f64; 15] = [
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
];

fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    const S5: f64 = 691.0 / 360360.0;
    if n <= 15.0 {
        // callers pass integers >= 1
        return STIRLING_ERROR_SMALL[n as usize - 1];
    }
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - (S4 - S5 / nn) / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation near `x = np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let d = x - np;
        let mut v = d / (x + np);
        let mut s = d * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let prev = s;
            s += ej / (2 * j + 1) as f64;
            if s == prev {
                break;
            }
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// ln P(T = k) for T ~ Binomial(n, q).
pub(crate) fn ln_pmf(n: u64, q: f64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    if k == 0 {
        return nf * (-q).ln_1p();
    }
    if k == n {
        return nf * q.ln();
    }
    let kf = k as f64;
    let rest = (n - k) as f64;
    let lc = stirling_error(nf)
        - stirling_error(kf)
        - stirling_error(rest)
        - deviance(kf, nf * q)
        - deviance(rest, nf * (1.0 - q));
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `P(T > m)` for `T ~ Binomial(n, q)` with mass `C(n,t) q^t (1-q)^(n-t)`.
pub fn binomial_survival(n: u64, q: f64, m: u64) -> f64 {
    if m >= n {
        return 0.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let odds = q / (1.0 - q);
    let mode = (((n + 1) as f64 * q).floor() as u64).min(n);
    if m >= mode {
        // upper tail: terms decrease for t > mode
        let mut t = m + 1;
        let mut term = ln_pmf(n, q, t).exp();
        let mut sum = term;
        while t < n && term > 0.0 {
            let ratio = (n - t) as f64 / (t + 1) as f64 * odds;
            term *= ratio;
            sum += term;
            t += 1;
            if ratio < 1.0 && term * ratio / (1.0 - ratio) <= TAIL_EPS * sum {
                break;
            }
        }
        sum.min(1.0)
    } else {
        // lower tail: terms decrease for t < mode
        let mut t = m;
        let mut term = ln_pmf(n, q, t).exp();
        let mut cdf = term;
        while t > 0 && term > 0.0 {
            let ratio = t as f64 / (n - t + 1) as f64 / odds;
            term *= ratio;
            cdf += term;
            t -= 1;
            if ratio < 1.0 && term * ratio / (1.0 - ratio) <= TAIL_EPS * cdf {
                break;
            }
        }
        (1.0 - cdf).clamp(0.0, 1.0)
    }
}

/// Smallest `m` with `P(T > m) <= tail`.
pub fn binomial_upper_quantile(n: u64, q: f64, tail: f64) -> u64 {
    let (mut lo, mut hi) = (0u64, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if binomial_survival(n, q, mid) <= tail {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `P(T > m)` by direct summation of `C(n,t)` built as an f64 product; only usable
    /// for small `n`.
    fn brute_survival(n: u64, q: f64, m: u64) -> f64 {
        let mut total = 0.0;
        for t in (m + 1)..=n {
            let mut c = 1.0;
            for i in 0..t {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            total += c * q.powi(t as i32) * (1.0 - q).powi((n - t) as i32);
        }
        total
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn hand_examples() {
        assert!((binomial_survival(2, 0.5, 0) - 0.75).abs() < 1e-15);
        assert!((binomial_survival(4, 0.25, 1) - 0.26171875).abs() < 1e-15);
        assert_eq!(binomial_survival(4, 0.25, 4), 0.0);
        assert_eq!(binomial_survival(4, 0.25, 10), 0.0);
    }

    /// Reference values from 60-digit arbitrary-precision summation.
    #[test]
    #[allow(clippy::excessive_precision)]
    fn high_precision_reference() {
        let d31 = 1e-3 / 29791.0;
        let cases: &[(u64, f64, u64, f64)] = &[
            (100, 0.3, 30, 0.45087639923120945998),
            (100, 0.3, 10, 0.99999844443406832195),
            (100, 0.3, 50, 9.0346861957206242756e-6),
            (1_000_000, 1e-5, 10, 0.41696024980597200099),
            (1_000_000, 1e-5, 50, 3.6170172884059267345e-20),
            (887_503_681, d31, 29, 0.5090529882141033254),
            (887_503_681, d31, 60, 3.5859312465183281531e-7),
            (887_503_681, d31, 100, 1.3167552775242075067e-24),
            (887_503_681, d31, 5, 0.99999997310051666015),
            (1000, 0.3, 300, 0.48440648018587973809),
            (1000, 0.3, 450, 6.3509457172991958891e-24),
        ];
        for &(n, q, m, want) in cases {
            let got = binomial_survival(n, q, m);
            assert!(
                rel_err(got, want) < 1e-10,
                "n={n} q={q} m={m}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn tail_decay_sanity() {
        for n in [1_000u64, 1_000_000] {
            let q = 5.0 / n as f64;
            let m = (10.0 * n as f64 * q).ceil() as u64;
            assert!(binomial_survival(n, q, m) < 1e-6);
        }
    }

    #[test]
    fn quantile_is_smallest_crossing() {
        let (n, q) = (729, 1e-3 / 27.0);
        for k in 1..=16 {
            let tail = 10f64.powi(-k);
            let m = binomial_upper_quantile(n, q, tail);
            assert!(binomial_survival(n, q, m) <= tail);
            if m > 0 {
                assert!(binomial_survival(n, q, m - 1) > tail);
            }
        }
        assert_eq!(binomial_upper_quantile(10, 0.5, 0.0), 10);
    }

    proptest! {
        #[test]
        fn matches_brute_force_small_n(n in 1u64..60, q in 0.01f64..0.99, m in 0u64..60) {
            let got = binomial_survival(n, q, m);
            let want = brute_survival(n, q, m);
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300) + 1e-15,
                "n={} q={} m={} got={} want={}", n, q, m, got, want);
        }

        #[test]
        fn survival_monotone_and_normalized(n in 1u64..3000, q in 1e-6f64..0.999) {
            let mut prev = 1.0;
            let mut mass = 0.0;
            for m in 0..=n {
                let s = binomial_survival(n, q, m);
                let pmf = ln_pmf(n, q, m).exp();
                prop_assert!(s <= prev + 1e-15);
                prop_assert!(((prev - s) - pmf).abs() < 1e-12, "m={} diff={} pmf={}", m, prev - s, pmf);
                mass += pmf;
                prev = s;
            }
            prop_assert!((mass - 1.0).abs() < 1e-9);
            prop_assert_eq!(binomial_survival(n, q, n), 0.0);
        }
    }
}
