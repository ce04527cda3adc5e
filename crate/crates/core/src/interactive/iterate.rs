//! Multi-round key-value perturbation with collector mean feedback.

use crate::audit::{estimate_eps_lb, owns, simulate_group, AuditReport, InputPairSpec, Mode, OutputHistogram, View};
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismConfig, Round};
use crate::rng::SeedTree;

use super::mean::{estimate_mean, MeanEstimate};

/// One round of one group.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationStep {
    pub iteration: usize,
    /// Budgets in force and the mean fed back to non-owners.
    pub round: Round,
    pub histogram: OutputHistogram,
    /// The collector's estimate after this round (feedback for the next one).
    pub estimate: MeanEstimate,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub steps: Vec<IterationStep>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Mean estimates after each round.
    pub fn means(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.estimate.mean).collect()
    }
}

pub(crate) fn check_interactive(cfg: &MechanismConfig) -> Result<()> {
    cfg.validate()?;
    if !cfg.mechanism.is_interactive() {
        return Err(Error::config(format!("{} is not an interactive mechanism", cfg.mechanism)));
    }
    Ok(())
}

/// Runs every round for one group of `n` users holding `kv` with the
/// configured ownership probability. Ownership is drawn once per user.
/// Round 0 feeds back the mean 0; later rounds feed back the previous estimate.
pub fn run_group(
    cfg: &MechanismConfig,
    kv: &crate::mechanisms::KvPair,
    n: u64,
    seeds: &SeedTree,
    lane: u64,
) -> Result<IterationTrace> {
    check_interactive(cfg)?;
    if n == 0 {
        return Err(Error::config("group size must be at least 1"));
    }
    let w = cfg.ownership;
    let mut mean = 0.0;
    let mut trace = IterationTrace::default();
    for t in 0..cfg.rounds() {
        let round = cfg.round(t, mean);
        let histogram = simulate_group(cfg, &round, n, seeds, lane, t as u64, &[View::Whole], |u| {
            owns(seeds, lane, u, w).then_some(*kv)
        })?
        .remove(0);
        let estimate = estimate_mean(&histogram, round.value_budget, cfg.boundary_points)?;
        mean = estimate.mean;
        trace.steps.push(IterationStep { iteration: t, round, histogram, estimate });
    }
    Ok(trace)
}

/// Traces of both audit groups, each with its own collector mean.
pub fn run_iterations(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    seeds: &SeedTree,
) -> Result<[IterationTrace; 2]> {
    Ok([run_group(cfg, &spec.kv1, n, seeds, 0)?, run_group(cfg, &spec.kv2, n, seeds, 1)?])
}

/// Per-round whole-record audit of the two groups.
#[derive(Clone, Debug)]
pub struct IterationAudit {
    pub traces: [IterationTrace; 2],
    pub reports: Vec<AuditReport>,
}

pub fn audit_iterations(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    alpha: f64,
    mode: Mode,
    seeds: &SeedTree,
) -> Result<IterationAudit> {
    let traces = run_iterations(cfg, spec, n, seeds)?;
    let reports = traces[0]
        .steps
        .iter()
        .zip(&traces[1].steps)
        .map(|(a, b)| Ok(estimate_eps_lb(&a.histogram, &b.histogram, alpha, mode)?.with_seed(seeds.root())))
        .collect::<Result<_>>()?;
    Ok(IterationAudit { traces, reports })
}
