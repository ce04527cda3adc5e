//! Exact binomial tails, used to check simulated counts against analytic probabilities.

use crate::num::Real;

use super::beta::betainc_unchecked;

/// One-sided standard-normal tail beyond four standard deviations, Φ(-4).
pub const FOUR_SIGMA_TAIL: f64 = 3.167_124_183_311_992e-5;

/// `P(X ≤ k)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf<T: Real>(k: u64, n: u64, p: T) -> T {
    if k >= n {
        return T::one();
    }
    if p <= T::zero() {
        return T::one();
    }
    if p >= T::one() {
        return T::zero();
    }
    betainc_unchecked(T::count(n - k), T::count(k + 1), T::one() - p)
}

/// `P(X ≥ k)` for `X ~ Binomial(n, p)`.
pub fn binomial_sf<T: Real>(k: u64, n: u64, p: T) -> T {
    if k == 0 {
        return T::one();
    }
    if k > n || p <= T::zero() {
        return T::zero();
    }
    if p >= T::one() {
        return T::one();
    }
    betainc_unchecked(T::count(k), T::count(n - k + 1), p)
}

/// True when `count` is not in either exact binomial tail of mass below `tail`.
///
/// With `tail = FOUR_SIGMA_TAIL` this is the exact counterpart of a ±4σ band,
/// and stays meaningful for outcomes whose expected count is tiny.
pub fn within_binomial_band(count: u64, n: u64, p: f64, tail: f64) -> bool {
    binomial_cdf(count, n, p) >= tail && binomial_sf(count, n, p) >= tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_cdf(k: u64, n: u64, p: f64) -> f64 {
        let mut total = 0.0;
        let mut coef = 1.0f64;
        for i in 0..=n {
            if i > 0 {
                coef *= (n - i + 1) as f64 / i as f64;
            }
            if i <= k {
                total += coef * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32);
            }
        }
        total
    }

    #[test]
    fn tails_match_direct_summation() {
        for &(n, p) in &[(10u64, 0.3f64), (25, 0.5), (40, 0.05)] {
            for k in 0..=n {
                let cdf: f64 = binomial_cdf(k, n, p);
                assert!((cdf - brute_cdf(k, n, p)).abs() < 1e-12, "n={n} k={k}");
                let sf: f64 = binomial_sf(k, n, p);
                let expect = if k == 0 { 1.0 } else { 1.0 - brute_cdf(k - 1, n, p) };
                assert!((sf - expect).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn band_accepts_mean_and_rejects_far_tails() {
        let n = 1_000_000;
        assert!(within_binomial_band(250_000, n, 0.25, FOUR_SIGMA_TAIL));
        // σ ≈ 433; 5σ away must be rejected, 3σ accepted.
        assert!(!within_binomial_band(250_000 + 5 * 433, n, 0.25, FOUR_SIGMA_TAIL));
        assert!(within_binomial_band(250_000 - 3 * 433, n, 0.25, FOUR_SIGMA_TAIL));
        // Rare outcome: one hit when one hundredth is expected is plausible.
        assert!(within_binomial_band(1, n, 1e-8, FOUR_SIGMA_TAIL));
        assert!(!within_binomial_band(5, n, 1e-8, FOUR_SIGMA_TAIL));
    }
}
