//! Separating the mean-substitution component out of a mixed output histogram.
//!
//! A group with ownership `w` produces a mixture `w·D_owned + (1-w)·D_mean`.
//! Stage one estimates `D_owned` from a population where everyone holds the
//! pair; stage two subtracts a scaled copy of it from the mixture.

use std::collections::BTreeMap;

use crate::audit::{
    estimate_eps_lb, simulate_group, AuditReport, HistogramMeta, InputPairSpec, Mode, OutputHistogram, View,
};
use crate::error::{Error, Result};
use crate::mechanisms::{KvPair, MechanismConfig, Round};
use crate::rng::SeedTree;

use super::iterate::{check_interactive, run_iterations, IterationTrace};

const STAGE_ONE_LABEL: u64 = 0x0005_7471;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationConfig {
    /// Stage-one repetitions averaged together.
    pub repeats: usize,
    /// Ownership probability of the mixed population.
    pub ownership: f64,
    /// Lower end of the scaling bracket (`e^{-ε2}`); the upper end is 1.
    pub min_scale: f64,
    /// Bisection tolerance on the scaling factor.
    pub tolerance: f64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self { repeats: 10, ownership: 0.5, min_scale: 1.0, tolerance: 1e-9 }
    }
}

impl SeparationConfig {
    /// Bracket `[e^{-ε2}, 1]` for a round spending `value_budget` on the value.
    pub fn for_value_budget(value_budget: f64) -> Self {
        Self { min_scale: (-value_budget).exp(), ..Self::default() }
    }

    pub fn with_ownership(mut self, w: f64) -> Self {
        self.ownership = w;
        self
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::config("separation needs at least one stage-one repeat"));
        }
        if !(0.0..=1.0).contains(&self.ownership) {
            return Err(Error::config(format!("ownership {} outside [0, 1]", self.ownership)));
        }
        if !(self.min_scale > 0.0 && self.min_scale <= 1.0) {
            return Err(Error::config(format!("scaling bracket [{}, 1] is empty", self.min_scale)));
        }
        Ok(())
    }
}

/// Averages `repeats` independent all-owner collections of `kv` in `round`.
/// Mean counts are rounded half-to-even and renormalized to `n`.
pub fn stage1_collect(
    cfg: &MechanismConfig,
    kv: &KvPair,
    n: u64,
    round: &Round,
    repeats: usize,
    seeds: &SeedTree,
) -> Result<OutputHistogram> {
    if repeats < 1 || n == 0 {
        return Err(Error::config("stage one needs at least one repeat and one user"));
    }
    let mut sums: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    for r in 0..repeats {
        let tree = seeds.child(STAGE_ONE_LABEL).child(r as u64);
        let h = simulate_group(cfg, round, n, &tree, 0, 0, &[View::Whole], |_| Some(*kv))?.remove(0);
        for (k, c) in h.iter() {
            *sums.entry(k.to_vec()).or_default() += c;
        }
    }
    let meta = HistogramMeta::new("stage1", cfg.mechanism, 0);
    OutputHistogram::from_expected(meta, sums.into_iter().map(|(k, s)| (k, s as f64 / repeats as f64)), n)
}

/// Mean-substitution component recovered from a mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct Separated {
    pub histogram: OutputHistogram,
    /// Scaling factor applied to the owned component.
    pub scale: f64,
    /// Effective sample size `round(N·(1 - w·s))`.
    pub n_eff: u64,
}

/// `D_mean = (D_mixed - w·s·D_owned) / (1 - w·s)` with `s` the largest value in
/// the configured bracket keeping every cell non-negative.
pub fn stage2_separate(mixed: &OutputHistogram, owned: &OutputHistogram, sep: &SeparationConfig) -> Result<Separated> {
    sep.validate()?;
    let w = sep.ownership;
    if w >= 1.0 {
        return Err(Error::Separation("ownership 1 leaves no mean-substitution component".into()));
    }
    let (nm, no) = (mixed.total(), owned.total());
    if nm == 0 || no == 0 {
        return Err(Error::Separation("empty histogram".into()));
    }
    let dm = |k: &[u8]| mixed.count(k) as f64 / nm as f64;
    // Only cells present in the owned histogram can go negative.
    let slack = |s: f64| owned.iter().map(|(k, c)| dm(k) - w * s * c as f64 / no as f64).fold(f64::INFINITY, f64::min);
    let floor = -1e-9;
    let scale = if slack(1.0) >= 0.0 {
        1.0
    } else if slack(sep.min_scale) < floor {
        return Err(Error::Separation(format!(
            "negative residue {:.3e} even at the smallest scaling factor {:.6}",
            slack(sep.min_scale),
            sep.min_scale
        )));
    } else {
        let (mut lo, mut hi) = (sep.min_scale, 1.0);
        while hi - lo > sep.tolerance {
            let mid = 0.5 * (lo + hi);
            if slack(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let ws = w * scale;
    if ws >= 1.0 {
        return Err(Error::Separation("w·s reaches 1; separation undefined".into()));
    }
    let n_eff = (nm as f64 * (1.0 - ws)).round() as u64;
    if n_eff == 0 {
        return Err(Error::Separation("no effective samples remain after separation".into()));
    }
    let mut keys: Vec<&[u8]> = mixed.iter().map(|(k, _)| k).collect();
    keys.extend(owned.iter().map(|(k, _)| k).filter(|k| mixed.count(k) == 0));
    let expected = keys.into_iter().map(|k| {
        let residue = (dm(k) - ws * owned.count(k) as f64 / no as f64).max(0.0);
        (k.to_vec(), residue / (1.0 - ws) * n_eff as f64)
    });
    let meta = HistogramMeta { group: format!("{}-separated", mixed.meta.group), ..mixed.meta.clone() };
    let histogram = OutputHistogram::from_expected(meta, expected, n_eff)
        .map_err(|e| Error::Separation(format!("separated histogram is empty: {e}")))?;
    Ok(Separated { histogram, scale, n_eff })
}

/// Result of the mean-substitution audit for one round.
#[derive(Clone, Debug)]
pub struct MeanRound {
    pub separated: [Separated; 2],
    pub report: AuditReport,
}

/// Separates both groups' mixtures round by round and audits the recovered
/// components against each other. `owned[g][t]` is group `g`'s stage-one
/// histogram for round `t`.
pub fn audit_mean_eps(
    traces: &[IterationTrace; 2],
    owned: &[Vec<OutputHistogram>; 2],
    sep: &SeparationConfig,
    alpha: f64,
    mode: Mode,
) -> Result<Vec<MeanRound>> {
    let rounds = traces[0].len();
    if traces[1].len() != rounds || owned.iter().any(|o| o.len() != rounds) {
        return Err(Error::config("traces and stage-one histograms must cover the same rounds"));
    }
    (0..rounds)
        .map(|t| {
            let sep_t = SeparationConfig { min_scale: (-traces[0].steps[t].round.value_budget).exp(), ..*sep };
            let a = stage2_separate(&traces[0].steps[t].histogram, &owned[0][t], &sep_t)?;
            let b = stage2_separate(&traces[1].steps[t].histogram, &owned[1][t], &sep_t)?;
            let report = estimate_eps_lb(&a.histogram, &b.histogram, alpha, mode)?;
            Ok(MeanRound { separated: [a, b], report })
        })
        .collect()
}

/// Runs the interactive mechanism for both groups, collects stage-one
/// histograms for every round and audits the separated components.
pub fn audit_mean(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    alpha: f64,
    mode: Mode,
    repeats: usize,
    seeds: &SeedTree,
) -> Result<(Vec<MeanRound>, [IterationTrace; 2])> {
    check_interactive(cfg)?;
    let traces = run_iterations(cfg, spec, n, seeds)?;
    let mut owned: [Vec<OutputHistogram>; 2] = [Vec::new(), Vec::new()];
    for (g, kv) in [spec.kv1, spec.kv2].iter().enumerate() {
        for step in &traces[g].steps {
            let tree = seeds.child(g as u64).child(step.iteration as u64);
            owned[g].push(stage1_collect(cfg, kv, n, &step.round, repeats, &tree)?);
        }
    }
    let sep = SeparationConfig::default().with_ownership(cfg.ownership).with_repeats(repeats);
    Ok((audit_mean_eps(&traces, &owned, &sep, alpha, mode)?, traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(cells: &[(&str, u64)]) -> OutputHistogram {
        OutputHistogram::from_counts(cells.iter().map(|&(k, c)| (k.as_bytes().to_vec(), c)))
    }

    #[test]
    fn full_ownership_is_rejected() {
        let h = hist(&[("a", 10)]);
        let sep = SeparationConfig::for_value_budget(0.5).with_ownership(1.0);
        assert!(matches!(stage2_separate(&h, &h, &sep), Err(Error::Separation(_))));
    }

    #[test]
    fn exact_half_mixture_recovers_component() {
        // owned = (0.6, 0.4), mean = (0.2, 0.8): mixed = (0.4, 0.6).
        let owned = hist(&[("a", 600), ("b", 400)]);
        let mixed = hist(&[("a", 400), ("b", 600)]);
        let sep = SeparationConfig::for_value_budget(0.5);
        let s = stage2_separate(&mixed, &owned, &sep).unwrap();
        assert_eq!(s.scale, 1.0);
        assert_eq!(s.n_eff, 500);
        assert_eq!(s.histogram.count(b"a"), 100);
        assert_eq!(s.histogram.count(b"b"), 400);
    }

    #[test]
    fn infeasible_cell_shrinks_scale() {
        // At s = 1 cell a goes negative: 0.25 - 0.5·0.6 < 0.
        let owned = hist(&[("a", 600), ("b", 400)]);
        let mixed = hist(&[("a", 250), ("b", 750)]);
        let sep = SeparationConfig::for_value_budget(1.0);
        let s = stage2_separate(&mixed, &owned, &sep).unwrap();
        assert!((s.scale - 0.25 / 0.3).abs() < 1e-8, "{}", s.scale);
        assert!(s.histogram.count(b"a") <= 1);
        assert_eq!(s.histogram.total(), s.n_eff);
    }

    #[test]
    fn unresolvable_negativity_is_an_error() {
        let owned = hist(&[("a", 600), ("b", 400)]);
        let mixed = hist(&[("b", 1000)]);
        let sep = SeparationConfig::for_value_budget(0.1);
        assert!(matches!(stage2_separate(&mixed, &owned, &sep), Err(Error::Separation(_))));
    }
}
