//! Closed-form perturbation probabilities shared by the samplers and the analytic oracle.

use crate::num::Real;

/// Probability that binary randomized response reports the true bit.
/// A zero budget gives a fair coin.
pub fn rr_keep<T: Real>(eps: T) -> T {
    T::one() / (T::one() + (-eps).exp())
}

/// GRR probability of reporting the true category out of `d`.
pub fn grr_keep<T: Real>(eps: T, d: usize) -> T {
    let e = eps.exp();
    e / (e + T::count(d as u64 - 1))
}

/// GRR probability of reporting one specific other category.
pub fn grr_other<T: Real>(eps: T, d: usize) -> T {
    T::one() / (eps.exp() + T::count(d as u64 - 1))
}

/// OUE: a set bit stays set with probability one half.
pub fn oue_keep<T: Real>() -> T {
    T::lit(0.5)
}

/// OUE: an unset bit becomes set with probability `1 / (e^ε + 1)`.
pub fn oue_raise<T: Real>(eps: T) -> T {
    T::one() / (eps.exp() + T::one())
}

pub fn laplace_cdf<T: Real>(x: T, scale: T) -> T {
    let half = T::lit(0.5);
    if x < T::zero() {
        half * (x / scale).exp()
    } else {
        T::one() - half * (-x / scale).exp()
    }
}

/// THE noise scale: the one-hot encoding has L1 sensitivity 2.
pub fn the_scale<T: Real>(eps: T) -> T {
    T::lit(2.0) / eps
}

/// THE: probability a position appears in the support set, given its encoded bit.
pub fn the_bit_on<T: Real>(encoded: bool, eps: T, theta: T) -> T {
    let centre = if encoded { T::one() } else { T::zero() };
    T::one() - laplace_cdf(theta - centre, the_scale(eps))
}

/// Boundary point `j` of `points` evenly spaced points on `[-1, 1]`.
pub fn boundary_point<T: Real>(points: usize, j: usize) -> T {
    T::lit(-1.0) + T::lit(2.0) * T::count(j as u64) / T::count(points as u64 - 1)
}

/// Snaps `v` onto the boundary grid: returns the lower adjacent index and the
/// probability of moving to the upper one. Unbiased: the expected point is `v`.
pub fn level_weights<T: Real>(v: T, points: usize) -> (usize, T) {
    let span = T::count(points as u64 - 1);
    let t = (v + T::one()) * span / T::lit(2.0);
    let t = t.max(T::zero()).min(span);
    let lo = t.floor().to_usize().unwrap_or(0).min(points - 2);
    (lo, t - T::count(lo as u64))
}

/// Constants of the padding-and-sampling mechanisms.
///
/// Unary: the sampled key's position reports the value sign with probability
/// `a·p⁺`, its negation with `a·(1-p⁺)`, and 0 otherwise; every other position
/// reports ±1 with `b/2` each. GRR: the key survives with `key_keep`, then the
/// sign survives with `p⁺`; otherwise another key is reported with a fair sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PckvParams<T> {
    pub a: T,
    pub b: T,
    pub p_plus: T,
    pub key_keep: T,
}

impl<T: Real> PckvParams<T> {
    pub fn new(key_budget: T, value_budget: T, extended_domain: usize) -> Self {
        Self {
            a: T::lit(0.5),
            b: oue_raise(key_budget),
            p_plus: rr_keep(value_budget),
            key_keep: grr_keep(key_budget, extended_domain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let ln3 = 3f64.ln();
        assert!((rr_keep(ln3) - 0.75).abs() < 1e-15);
        assert!((grr_keep(ln3, 4) - 0.5).abs() < 1e-15);
        assert!((grr_other(ln3, 4) - 1.0 / 6.0).abs() < 1e-15);
        assert!((oue_raise(ln3) - 0.25).abs() < 1e-15);
        assert_eq!(rr_keep(0.0f64), 0.5);
        assert!((the_scale(0.5f64) - 4.0).abs() < 1e-15);
        // d = 2 GRR coincides with RR.
        assert!((grr_keep(0.9f64, 2) - rr_keep(0.9f64)).abs() < 1e-15);
    }

    #[test]
    fn level_weights_are_unbiased() {
        for points in [2usize, 4, 8] {
            for i in 0..=40 {
                let v = -1.0 + i as f64 / 20.0;
                let (lo, up) = level_weights(v, points);
                let mean = (1.0 - up) * boundary_point::<f64>(points, lo) + up * boundary_point::<f64>(points, lo + 1);
                assert!((mean - v).abs() < 1e-12, "points={points} v={v}");
            }
        }
        assert_eq!(level_weights(0.5f64, 2), (0, 0.75));
    }
}
