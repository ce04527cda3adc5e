//! Clopper–Pearson lower bounds on the per-outcome log-likelihood ratio.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::ClopperPearson;

use super::histogram::OutputHistogram;

/// Which confidence bounds enter the per-outcome ratio, and at what level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// `ln(lower(y_num) / upper(y_den))` with α split over every one-sided
    /// bound taken (`4·|I|` of them), so the maximum is a lower bound with
    /// confidence `1 - α` jointly over all outcomes.
    #[default]
    Conservative,
    /// `ln(lower(y_num) / upper(y_den))` with each bound at `α/2`. Valid per
    /// outcome only; the maximum over many outcomes overshoots more often than α.
    PerOutcome,
    /// `ln(upper(y_num) / lower(y_den))` with each bound at `α/2`. This ratio
    /// can exceed the true ε; it is kept for comparison only.
    Optimistic,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Conservative, Mode::PerOutcome, Mode::Optimistic];

    /// Level of each one-sided Clopper–Pearson bound for an intersection of `outcomes`.
    pub fn bound_level(self, alpha: f64, outcomes: usize) -> f64 {
        match self {
            Mode::Conservative => alpha / (4 * outcomes.max(1)) as f64,
            Mode::PerOutcome | Mode::Optimistic => alpha / 2.0,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Conservative => "conservative",
            Mode::PerOutcome => "per-outcome",
            Mode::Optimistic => "optimistic",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "conservative" => Ok(Mode::Conservative),
            "per-outcome" => Ok(Mode::PerOutcome),
            "optimistic" => Ok(Mode::Optimistic),
            _ => Err(Error::config(format!("unknown estimation mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// First histogram in the numerator.
    Forward,
    /// Second histogram in the numerator.
    Backward,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeBound {
    pub encoding: Vec<u8>,
    pub epsilon: f64,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub eps_lb: f64,
    pub per_outcome: Vec<OutcomeBound>,
    /// Certified ε of the audited configuration, when known.
    pub theoretical_eps: Option<f64>,
    /// Group sizes.
    pub n: (u64, u64),
    pub alpha: f64,
    pub mode: Mode,
    /// Level of each one-sided bound actually used.
    pub bound_level: f64,
    pub intersection_size: usize,
    pub seed: Option<u64>,
}

impl AuditReport {
    pub fn with_theoretical(mut self, eps: f64) -> Self {
        self.theoretical_eps = Some(eps);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// The outcome and direction attaining `eps_lb`.
    pub fn argmax(&self) -> Option<&OutcomeBound> {
        self.per_outcome.iter().max_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
    }
}

/// Outcomes observed at least once in both histograms.
pub fn intersect<'a>(o1: &'a OutputHistogram, o2: &'a OutputHistogram) -> Vec<&'a [u8]> {
    o1.iter().filter(|(k, _)| o2.count(k) > 0).map(|(k, _)| k).collect()
}

/// Largest per-outcome log-ratio bound between the two histograms, in both
/// directions, with Clopper–Pearson bounds at the level `mode` prescribes.
/// Negative bounds are clamped to zero.
///
/// Groups may differ in size (separated histograms carry their own effective
/// totals); each count is bounded against its own total.
pub fn estimate_eps_lb(o1: &OutputHistogram, o2: &OutputHistogram, alpha: f64, mode: Mode) -> Result<AuditReport> {
    estimate_with(&ClopperPearson::default(), o1, o2, alpha, mode)
}

pub fn estimate_with(
    cp: &ClopperPearson<f64>,
    o1: &OutputHistogram,
    o2: &OutputHistogram,
    alpha: f64,
    mode: Mode,
) -> Result<AuditReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let (n1, n2) = (o1.total(), o2.total());
    let common = intersect(o1, o2);
    if common.is_empty() {
        return Err(Error::NoOverlap);
    }
    let level = mode.bound_level(alpha, common.len());
    let mut per_outcome = Vec::with_capacity(2 * common.len());
    for key in &common {
        let (y1, y2) = (o1.count(key), o2.count(key));
        for (direction, (yn, nn), (yd, nd)) in
            [(Direction::Forward, (y1, n1), (y2, n2)), (Direction::Backward, (y2, n2), (y1, n1))]
        {
            let (num, den) = match mode {
                Mode::Conservative | Mode::PerOutcome => (cp.lower(yn, nn, level)?, cp.upper(yd, nd, level)?),
                Mode::Optimistic => (cp.upper(yn, nn, level)?, cp.lower(yd, nd, level)?),
            };
            let eps = (num.ln() - den.ln()).max(0.0);
            per_outcome.push(OutcomeBound { encoding: key.to_vec(), epsilon: eps, direction });
        }
    }
    let eps_lb = per_outcome.iter().map(|b| b.epsilon).fold(0.0, f64::max);
    Ok(AuditReport {
        eps_lb,
        per_outcome,
        theoretical_eps: None,
        n: (n1, n2),
        alpha,
        mode,
        bound_level: level,
        intersection_size: common.len(),
        seed: None,
    })
}
