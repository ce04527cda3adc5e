//! Exact (Clopper–Pearson) binomial confidence bounds.

use crate::error::{Error, Result};
use crate::num::Real;

use super::beta::beta_quantile;

/// One-sided Clopper–Pearson bounds computed from Beta quantiles.
#[derive(Clone, Copy, Debug)]
pub struct ClopperPearson<T> {
    tolerance: T,
}

impl<T: Real> Default for ClopperPearson<T> {
    fn default() -> Self {
        Self { tolerance: T::lit(1e-12) }
    }
}

impl<T: Real> ClopperPearson<T> {
    pub fn with_tolerance(tolerance: T) -> Self {
        Self { tolerance }
    }

    /// Upper bound on the success probability at one-sided level `level`:
    /// the `1 - level` quantile of Beta(y + 1, n - y).
    pub fn upper(&self, successes: u64, trials: u64, level: T) -> Result<T> {
        check(successes, trials, level)?;
        if successes == trials {
            return Ok(T::one());
        }
        let n = T::count(trials);
        if successes == 0 {
            return Ok(T::one() - level.powf(n.recip()));
        }
        let y = T::count(successes);
        beta_quantile(T::one() - level, y + T::one(), n - y, self.tolerance)
    }

    /// Lower bound: the `level` quantile of Beta(y, n - y + 1).
    pub fn lower(&self, successes: u64, trials: u64, level: T) -> Result<T> {
        check(successes, trials, level)?;
        if successes == 0 {
            return Ok(T::zero());
        }
        let n = T::count(trials);
        if successes == trials {
            return Ok(level.powf(n.recip()));
        }
        let y = T::count(successes);
        beta_quantile(level, y, n - y + T::one(), self.tolerance)
    }
}

fn check<T: Real>(successes: u64, trials: u64, level: T) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain("Clopper-Pearson bound needs at least one trial"));
    }
    if successes > trials {
        return Err(Error::domain(format!("{successes} successes exceed {trials} trials")));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::domain(format!("confidence level {level} outside (0, 1)")));
    }
    Ok(())
}

pub fn cp_upper(successes: u64, trials: u64, level: f64) -> Result<f64> {
    ClopperPearson::<f64>::default().upper(successes, trials, level)
}

pub fn cp_lower(successes: u64, trials: u64, level: f64) -> Result<f64> {
    ClopperPearson::<f64>::default().lower(successes, trials, level)
}
