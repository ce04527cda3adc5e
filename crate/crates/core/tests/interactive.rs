//! Multi-round runs, mean separation and segmentation audits.

use kvaudit::audit::{canonical_encode, construct_inputs, HistogramMeta, Mode, OutputHistogram, Target};
use kvaudit::interactive::{audit_mean, run_group, skv_audit, stage2_separate, SeparationConfig, SkvConfig};
use kvaudit::mechanisms::{output_domain, transition_probability, KvPair, Mechanism, MechanismConfig, Round};
use kvaudit::rng::SeedTree;
use rand::Rng;

#[test]
fn mean_feedback_converges() {
    for m in [Mechanism::CppGrrStar, Mechanism::CppUeStar] {
        let cfg = MechanismConfig::new(m, 50.0).with_ownership(1.0);
        let kv = KvPair::new(0, 0.5).unwrap();
        let trace = run_group(&cfg, &kv, 100_000, &SeedTree::new(2), 0).unwrap();
        assert_eq!(trace.len(), cfg.iterations);
        for mean in &trace.means()[1..] {
            assert!((mean - 0.5).abs() < 1e-2, "{m}: {:?}", trace.means());
        }
        assert_eq!(trace.steps[0].round.mean, 0.0);
        assert_eq!(trace.steps[1].round.mean, trace.steps[0].estimate.mean);
        assert_eq!(trace.steps[1].round.key_budget, 0.0);
    }
}

/// Draws `n` outcomes of the `parts`-weighted mixture of exact output distributions.
fn sample_mixture(
    cfg: &MechanismConfig,
    parts: &[(f64, Option<KvPair>)],
    round: &Round,
    n: u64,
    seed: u64,
) -> (OutputHistogram, Vec<(Vec<u8>, f64, f64)>) {
    let domain = output_domain(cfg).unwrap();
    let cells: Vec<(Vec<u8>, f64, f64)> = domain
        .iter()
        .map(|o| {
            let p = |kv: &Option<KvPair>| transition_probability::<f64>(cfg, kv.as_ref(), round, o).unwrap();
            let mix: f64 = parts.iter().map(|(w, kv)| w * p(kv)).sum();
            (canonical_encode(o), mix, p(&parts[0].1))
        })
        .collect();
    let mut cdf = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for c in &cells {
        acc += c.1;
        cdf.push(acc);
    }
    let mut rng = SeedTree::new(seed).user_rng(0, 0, 0);
    let mut counts = vec![0u64; cells.len()];
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cdf.partition_point(|&c| c < u).min(cells.len() - 1);
        counts[i] += 1;
    }
    let hist = OutputHistogram::from_counts(
        cells.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(cell, &c)| (cell.0.clone(), c)),
    );
    (hist, cells)
}

#[test]
fn separation_recovers_mean_component() {
    let n = 200_000u64;
    for m in [Mechanism::CppGrrStar, Mechanism::CppUeStar] {
        let cfg = MechanismConfig::new(m, 1.6);
        let kv = KvPair::new(0, 1.0).unwrap();
        let round = cfg.round(1, 0.3);
        // The owned component comes first so `cells.2` below is the owned probability.
        let (mixed, cells) = sample_mixture(&cfg, &[(0.5, Some(kv)), (0.5, None)], &round, n, 3);
        let owned = OutputHistogram::from_expected(
            HistogramMeta::new("owned", m, 1),
            cells.iter().map(|c| (c.0.clone(), c.2 * n as f64)),
            n,
        )
        .unwrap();
        let sep = SeparationConfig::for_value_budget(round.value_budget);
        let s = stage2_separate(&mixed, &owned, &sep).unwrap();
        assert!(s.scale > sep.min_scale);
        for (key, p_mix, p_owned) in &cells {
            let expected = n as f64 * (p_mix - 0.5 * p_owned);
            let sd = (n as f64 * p_mix * (1.0 - p_mix)).sqrt();
            let got = s.histogram.count(key) as f64 * n as f64 * 0.5 / s.n_eff as f64;
            assert!((got - expected).abs() <= 4.0 * sd + 2.0, "{m}: expected {expected} got {got} sd {sd}");
        }
    }
}

#[test]
fn mean_audit_shapes() {
    let cfg = MechanismConfig::new(Mechanism::CppGrrStar, 1.6).with_iterations(3);
    let spec = construct_inputs(&cfg, Target::Value).unwrap();
    let (rounds, traces) = audit_mean(&cfg, &spec, 50_000, 0.05, Mode::Conservative, 3, &SeedTree::new(4)).unwrap();
    assert_eq!(rounds.len(), 3);
    assert_eq!(traces[0].len(), 3);
    for r in &rounds {
        assert!(r.report.eps_lb >= 0.0);
        assert!(r.separated.iter().all(|s| s.n_eff <= 50_000));
    }
}

#[test]
fn skv_rounds_stay_within_certified() {
    let cfg = MechanismConfig::new(Mechanism::CppGrrStar, 3.2).with_boundary_points(2).with_iterations(2);
    let rounds = skv_audit(&cfg, &SkvConfig::default(), 100_000, 0.05, Mode::Conservative, &SeedTree::new(8)).unwrap();
    assert_eq!(rounds.len(), 2);
    for r in &rounds {
        assert!(r.eps_lb <= r.certified + 1e-9);
        assert!(r.squads.iter().all(|s| s.eps_lb >= 0.0));
    }
}
