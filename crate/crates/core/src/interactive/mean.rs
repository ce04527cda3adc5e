//! Collector-side mean estimation from one round's reports.

use crate::audit::OutputHistogram;
use crate::error::Result;
use crate::mechanisms::params;
use crate::mechanisms::PerturbedRecord;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    /// Estimated mean in `[-1, 1]`.
    pub mean: f64,
    /// Reports carrying key bit 1.
    pub reports: u64,
    /// Set when the estimate fell back to 0 (no usable reports).
    pub degenerate: bool,
}

impl MeanEstimate {
    fn fallback(reports: u64) -> Self {
        Self { mean: 0.0, reports, degenerate: true }
    }
}

/// Debiased mean of the audited key from the key-bit-1 reports in `hist`.
///
/// Boundary-point frequencies are recovered by inverting the value
/// perturbation (`(f - q) / (p - q)` per point), negative entries are clamped
/// to zero and the rest renormalized before taking the weighted mean.
pub fn estimate_mean(hist: &OutputHistogram, value_budget: f64, boundary_points: usize) -> Result<MeanEstimate> {
    let points = boundary_points;
    let mut counts = vec![0f64; points];
    let mut reports = 0u64;
    let mut unary = None;
    for (record, c) in hist.records()? {
        match record {
            PerturbedRecord::KeyedLevel { key: true, level: Some(j) } if (j as usize) < points => {
                counts[j as usize] += c as f64;
                reports += c;
                unary = Some(false);
            }
            PerturbedRecord::KeyedBits { key: true, bits } if bits.len() == points => {
                for (j, b) in bits.iter().enumerate() {
                    if *b {
                        counts[j] += c as f64;
                    }
                }
                reports += c;
                unary = Some(true);
            }
            _ => {}
        }
    }
    let Some(unary) = unary else {
        return Ok(MeanEstimate::fallback(0));
    };
    let (p, q) = if unary {
        (params::oue_keep::<f64>(), params::oue_raise(value_budget))
    } else {
        (params::grr_keep(value_budget, points), params::grr_other(value_budget, points))
    };
    let freq: Vec<f64> = counts.iter().map(|&c| ((c / reports as f64 - q) / (p - q)).max(0.0)).collect();
    let mass: f64 = freq.iter().sum();
    if mass.is_nan() || mass <= 0.0 {
        return Ok(MeanEstimate::fallback(reports));
    }
    let mean = freq
        .iter()
        .enumerate()
        .map(|(j, f)| f / mass * params::boundary_point::<f64>(points, j))
        .sum::<f64>()
        .clamp(-1.0, 1.0);
    Ok(MeanEstimate { mean, reports, degenerate: false })
}
