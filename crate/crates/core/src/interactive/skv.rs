//! Segmentation auditing of the interactive mechanisms.
//!
//! A perturbation group holds values from one bucket of the value range, split
//! into a squad at the bucket's upper boundary and a squad at its midpoint. An
//! imitator group of the same size holds the collector's current mean for the
//! bucket (the midpoint before any estimate exists). Each round, every squad is
//! audited against the imitator histogram scaled to the squad's share and the
//! per-squad bounds are summed.

use crate::audit::{estimate_eps_lb, simulate_group, AuditReport, HistogramMeta, Mode, OutputHistogram, View};
use crate::error::{Error, Result};
use crate::mechanisms::{theoretical_epsilon, KvPair, MechanismConfig};
use crate::rng::SeedTree;

use super::iterate::check_interactive;
use super::mean::{estimate_mean, MeanEstimate};

const SQUAD_LANES: [u64; 2] = [10, 11];
const IMITATOR_LANE: u64 = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkvConfig {
    /// Share of the perturbation group in the boundary squad.
    pub split: f64,
    /// Audited bucket (`None`: the topmost).
    pub bucket: Option<usize>,
}

impl Default for SkvConfig {
    fn default() -> Self {
        Self { split: 0.5, bucket: None }
    }
}

impl SkvConfig {
    /// `[low, high]` of the audited bucket: the value range is cut into `L/2`
    /// equal buckets.
    pub fn bucket_bounds(&self, boundary_points: usize) -> Result<(f64, f64)> {
        let buckets = boundary_points / 2;
        if buckets == 0 {
            return Err(Error::config("at least two boundary points are needed for bucketing"));
        }
        let b = self.bucket.unwrap_or(buckets - 1);
        if b >= buckets {
            return Err(Error::config(format!("bucket {b} outside 0..{buckets}")));
        }
        let width = 2.0 / buckets as f64;
        Ok((-1.0 + width * b as f64, -1.0 + width * (b + 1) as f64))
    }

    /// Squad values `(v1, v2)`: bucket boundary and bucket midpoint.
    pub fn squad_values(&self, boundary_points: usize) -> Result<(f64, f64)> {
        let (lo, hi) = self.bucket_bounds(boundary_points)?;
        Ok((hi, 0.5 * (lo + hi)))
    }

    pub fn squad_sizes(&self, n: u64) -> Result<(u64, u64)> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::config(format!("squad split {} outside (0, 1)", self.split)));
        }
        let first = (self.split * n as f64).round() as u64;
        if first == 0 || first >= n {
            return Err(Error::config(format!("split {} of {n} users leaves an empty squad", self.split)));
        }
        Ok((first, n - first))
    }
}

/// One round of the segmentation audit.
#[derive(Clone, Debug)]
pub struct SkvRound {
    pub iteration: usize,
    /// Value held by the imitator group this round.
    pub imitator_value: f64,
    /// Collector estimate from the perturbation group after this round.
    pub estimate: MeanEstimate,
    /// Per-squad reports (boundary squad first).
    pub squads: [AuditReport; 2],
    /// Sum of the per-squad bounds.
    pub eps_lb: f64,
    /// Sum of the per-squad certified ε for this round's budgets.
    pub certified: f64,
}

/// Scales `hist` to `total` reports, preserving its shape.
fn scale_to(hist: &OutputHistogram, total: u64) -> Result<OutputHistogram> {
    let factor = total as f64 / hist.total() as f64;
    OutputHistogram::from_expected(
        HistogramMeta { group: "imitator-scaled".into(), ..hist.meta.clone() },
        hist.iter().map(|(k, c)| (k.to_vec(), c as f64 * factor)),
        total,
    )
}

pub fn skv_audit(
    cfg: &MechanismConfig,
    skv: &SkvConfig,
    n: u64,
    alpha: f64,
    mode: Mode,
    seeds: &SeedTree,
) -> Result<Vec<SkvRound>> {
    check_interactive(cfg)?;
    let points = cfg.boundary_points;
    let (lo, hi) = skv.bucket_bounds(points)?;
    let (v1, v2) = skv.squad_values(points)?;
    let sizes = skv.squad_sizes(n)?;
    let key = cfg.audited_key;
    let squad_pairs = [KvPair::new(key, v1)?, KvPair::new(key, v2)?];

    let mut feedback = 0.0;
    let mut imitator_value = v2;
    let mut rounds = Vec::with_capacity(cfg.rounds());
    for t in 0..cfg.rounds() {
        let round = cfg.round(t, feedback);
        let mut combined = OutputHistogram::new(HistogramMeta::new("perturbation", cfg.mechanism, t));
        let mut squad_hists = Vec::with_capacity(2);
        for ((lane, kv), size) in SQUAD_LANES.iter().zip(&squad_pairs).zip([sizes.0, sizes.1]) {
            let h = simulate_group(cfg, &round, size, seeds, *lane, t as u64, &[View::Whole], |_| Some(*kv))?.remove(0);
            combined.merge(&h);
            squad_hists.push(h);
        }
        let imitator_pair = KvPair::new(key, imitator_value)?;
        let imitator =
            simulate_group(cfg, &round, n, seeds, IMITATOR_LANE, t as u64, &[View::Whole], |_| Some(imitator_pair))?
                .remove(0);

        let mut reports = Vec::with_capacity(2);
        let mut certified = 0.0;
        for (h, kv) in squad_hists.iter().zip(&squad_pairs) {
            let scaled = scale_to(&imitator, h.total())?;
            reports.push(estimate_eps_lb(h, &scaled, alpha, mode)?.with_seed(seeds.root()));
            let c = theoretical_epsilon::<f64>(cfg, Some(kv), Some(&imitator_pair), &round)?;
            certified += c.epsilon;
        }
        let estimate = estimate_mean(&combined, round.value_budget, points)?;
        let squads: [AuditReport; 2] = reports.try_into().expect("two squads");
        let eps_lb = squads.iter().map(|r| r.eps_lb).sum();
        rounds.push(SkvRound { iteration: t, imitator_value, estimate, squads, eps_lb, certified });

        feedback = estimate.mean;
        // The imitators track the collector's mean, kept inside the audited bucket.
        if !estimate.degenerate {
            imitator_value = estimate.mean.clamp(lo, hi);
        }
    }
    Ok(rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Mechanism;

    #[test]
    fn bucket_geometry() {
        let s = SkvConfig::default();
        assert_eq!(s.bucket_bounds(4).unwrap(), (0.0, 1.0));
        assert_eq!(s.squad_values(4).unwrap(), (1.0, 0.5));
        assert_eq!(s.bucket_bounds(2).unwrap(), (-1.0, 1.0));
        let low = SkvConfig { bucket: Some(0), ..s };
        assert_eq!(low.squad_values(8).unwrap(), (-0.5, -0.75));
        assert!(SkvConfig { bucket: Some(4), ..s }.bucket_bounds(8).is_err());
        assert!(SkvConfig { split: 1.0, ..s }.squad_sizes(10).is_err());
        assert!(s.squad_sizes(1).is_err());
    }

    #[test]
    fn trace_length_matches_rounds() {
        let cfg = MechanismConfig::new(Mechanism::CppUeStar, 3.2).with_iterations(3);
        let r = skv_audit(&cfg, &SkvConfig::default(), 20_000, 0.05, Mode::Conservative, &SeedTree::new(3)).unwrap();
        assert_eq!(r.len(), 3);
        for round in &r {
            assert!(round.eps_lb >= 0.0);
        }
    }
}
