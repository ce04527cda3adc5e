//! Executing grid points.

use std::time::Instant;

use kvaudit::audit::{collect, estimate_eps_lb, Auditor, InputPairSpec};
use kvaudit::interactive::{audit_iterations, audit_mean, skv_audit, IterationTrace};
use kvaudit::mechanisms::{mixture_epsilon, theoretical_epsilon, KvPair, MechanismConfig, Round};
use kvaudit::rng::SeedTree;
use rayon::prelude::*;

use crate::error::Result;
use crate::preset::{GridPoint, Preset, Procedure};
use crate::table::{ResultRow, TraceRow};

/// Rows produced by one grid point or a whole experiment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    /// Per-group, per-round collector state of interactive runs.
    pub traces: Vec<TraceRow>,
}

/// Certified ε between the audited inputs in `round`. Mechanisms the oracle
/// cannot enumerate report their configured ε.
pub fn certified_epsilon(cfg: &MechanismConfig, spec: &InputPairSpec, round: &Round) -> Result<f64> {
    match theoretical_epsilon::<f64>(cfg, Some(&spec.kv1), Some(&spec.kv2), round) {
        Ok(c) => Ok(c.epsilon),
        Err(kvaudit::Error::Unsupported(_)) => Ok(cfg.epsilon),
        Err(e) => Err(e.into()),
    }
}

/// Exact ε between the two audited populations of an interactive round: each
/// group mixes owners of its pair with non-owners reporting its own mean.
fn population_epsilon(cfg: &MechanismConfig, spec: &InputPairSpec, rounds: [Round; 2]) -> Result<f64> {
    let w = cfg.ownership;
    let side = |kv: &KvPair, round: Round| [(w, Some(*kv), round), (1.0 - w, None, round)];
    let (a, b) = (side(&spec.kv1, rounds[0]), side(&spec.kv2, rounds[1]));
    let a: Vec<_> = a.iter().map(|(w, kv, r)| (*w, kv.as_ref(), *r)).collect();
    let b: Vec<_> = b.iter().map(|(w, kv, r)| (*w, kv.as_ref(), *r)).collect();
    Ok(mixture_epsilon::<f64>(cfg, &a, &b)?.epsilon)
}

impl GridPoint {
    fn row(&self, iteration: usize, eps_lb: f64, certified: f64, n: u64) -> ResultRow {
        ResultRow {
            preset: self.preset.clone(),
            mechanism: self.mechanism.clone(),
            auditor: self.procedure.to_string(),
            epsilon: self.cfg.epsilon,
            iteration,
            eps_lb,
            eps_theoretical_certified: certified,
            n,
            alpha: self.alpha,
            mode: self.mode.to_string(),
            seed: self.seed,
            wall_time_ms: 0,
        }
    }

    fn trace_rows(&self, traces: &[IterationTrace], groups: &[&str]) -> Vec<TraceRow> {
        let mut rows = Vec::new();
        for (trace, group) in traces.iter().zip(groups) {
            for step in &trace.steps {
                rows.push(TraceRow {
                    preset: self.preset.clone(),
                    mechanism: self.mechanism.clone(),
                    auditor: self.procedure.to_string(),
                    epsilon: self.cfg.epsilon,
                    seed: self.seed,
                    group: group.to_string(),
                    iteration: step.iteration + 1,
                    key_budget: step.round.key_budget,
                    value_budget: step.round.value_budget,
                    mean_feedback: step.round.mean,
                    mean_estimate: step.estimate.mean,
                });
            }
        }
        rows
    }

    /// Runs the point. `timing` fills `wall_time_ms`; otherwise it is 0 so
    /// reruns are byte-identical.
    pub fn run(&self, timing: bool) -> Result<Outcome> {
        let start = Instant::now();
        let seeds = SeedTree::new(self.seed);
        let cfg = &self.cfg;
        let mut out = Outcome::default();
        match self.procedure {
            Procedure::Hkv if cfg.mechanism.is_interactive() => {
                let audit = audit_iterations(cfg, &self.spec, self.n, self.alpha, self.mode, &seeds)?;
                for (t, report) in audit.reports.iter().enumerate() {
                    let rounds = [audit.traces[0].steps[t].round, audit.traces[1].steps[t].round];
                    let certified = population_epsilon(cfg, &self.spec, rounds)?;
                    out.rows.push(self.row(t + 1, report.eps_lb, certified, self.n));
                }
                out.traces = self.trace_rows(&audit.traces, &["group1", "group2"]);
            }
            Procedure::Hkv | Procedure::Vkv => {
                let auditor = if self.procedure == Procedure::Hkv { Auditor::Hkv } else { Auditor::Vkv };
                let round = cfg.first_round();
                let (o1, o2) = collect(cfg, &self.spec, self.n, &round, &seeds, auditor)?;
                let report = estimate_eps_lb(&o1, &o2, self.alpha, self.mode)?;
                let certified = certified_epsilon(cfg, &self.spec, &round)?;
                out.rows.push(self.row(1, report.eps_lb, certified, self.n));
            }
            Procedure::Mean => {
                let (rounds, traces) =
                    audit_mean(cfg, &self.spec, self.n, self.alpha, self.mode, self.repeats, &seeds)?;
                for (t, r) in rounds.iter().enumerate() {
                    let certified = certified_epsilon(cfg, &self.spec, &traces[0].steps[t].round)?;
                    out.rows.push(self.row(t + 1, r.report.eps_lb, certified, self.n));
                }
                out.traces = self.trace_rows(&traces, &["group1", "group2"]);
            }
            Procedure::Skv => {
                let rounds = skv_audit(cfg, &self.skv, self.n, self.alpha, self.mode, &seeds)?;
                let mut feedback = 0.0;
                for r in &rounds {
                    out.rows.push(self.row(r.iteration + 1, r.eps_lb, r.certified, self.n));
                    let round = cfg.round(r.iteration, feedback);
                    out.traces.push(TraceRow {
                        preset: self.preset.clone(),
                        mechanism: self.mechanism.clone(),
                        auditor: self.procedure.to_string(),
                        epsilon: cfg.epsilon,
                        seed: self.seed,
                        group: "perturbation".into(),
                        iteration: r.iteration + 1,
                        key_budget: round.key_budget,
                        value_budget: round.value_budget,
                        mean_feedback: round.mean,
                        mean_estimate: r.estimate.mean,
                    });
                    feedback = r.estimate.mean;
                }
            }
        }
        if timing {
            let ms = start.elapsed().as_millis() as u64;
            for row in &mut out.rows {
                row.wall_time_ms = ms;
            }
        }
        Ok(out)
    }
}

/// Validates the whole grid, then runs its points in parallel. Rows come back
/// in grid order whatever the thread count.
pub fn run_experiment(preset: &Preset, timing: bool) -> Result<Outcome> {
    let grid = preset.grid()?;
    let parts: Vec<Outcome> = grid.par_iter().map(|p| p.run(timing)).collect::<Result<_>>()?;
    let mut out = Outcome::default();
    for part in parts {
        out.rows.extend(part.rows);
        out.traces.extend(part.traces);
    }
    Ok(out)
}
