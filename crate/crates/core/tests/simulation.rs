//! Simulated output frequencies against the analytic oracle, determinism and
//! the Clopper–Pearson bounds against closed forms.

use kvaudit::audit::{collect, construct_inputs, estimate_eps_lb, Auditor, Mode, OutputHistogram, Target};
use kvaudit::mechanisms::{transition_probability, Mechanism, MechanismConfig};
use kvaudit::rng::SeedTree;
use kvaudit::stats::{cp_lower, cp_upper, within_binomial_band, FOUR_SIGMA_TAIL};
use kvaudit::{ClopperPearson32, ClopperPearson64};

fn configs() -> Vec<(MechanismConfig, Target)> {
    vec![
        (MechanismConfig::new(Mechanism::Rr, 1.2), Target::Key),
        (MechanismConfig::new(Mechanism::Grr, 1.2).with_domain_size(5), Target::Key),
        (MechanismConfig::new(Mechanism::Oue, 1.2).with_domain_size(4), Target::Key),
        (MechanismConfig::new(Mechanism::The, 1.2).with_domain_size(3), Target::Key),
        (MechanismConfig::new(Mechanism::CppUe, 2.0), Target::Value),
        (MechanismConfig::new(Mechanism::CppGrr, 2.0).with_boundary_points(4), Target::Key),
        (MechanismConfig::new(Mechanism::PckvUe, 2.0).with_domain_size(2).with_padding(2), Target::Value),
        (MechanismConfig::new(Mechanism::PckvGrr, 2.0).with_domain_size(3).with_padding(2), Target::Value),
    ]
}

#[test]
fn simulated_frequencies_match_oracle() {
    let n = 200_000;
    for (cfg, target) in configs() {
        let spec = construct_inputs(&cfg, target).unwrap();
        let round = cfg.first_round();
        let (o1, o2) = collect(&cfg, &spec, n, &round, &SeedTree::new(11), Auditor::Hkv).unwrap();
        let w = if cfg.mechanism.family() == kvaudit::mechanisms::Family::Frequency { 1.0 } else { cfg.ownership };
        for (hist, kv) in [(&o1, &spec.kv1), (&o2, &spec.kv2)] {
            assert_eq!(hist.total(), n);
            let mut mass = 0.0;
            for (record, count) in hist.records().unwrap() {
                let owned: f64 = transition_probability(&cfg, Some(kv), &round, &record).unwrap();
                let other: f64 =
                    if w < 1.0 { transition_probability(&cfg, None, &round, &record).unwrap() } else { 0.0 };
                let p = w * owned + (1.0 - w) * other;
                mass += p;
                assert!(
                    within_binomial_band(count, n, p, FOUR_SIGMA_TAIL),
                    "{}: {record} count {count} p {p}",
                    cfg.mechanism
                );
            }
            assert!(mass <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = MechanismConfig::new(Mechanism::PckvUe, 3.0);
    let spec = construct_inputs(&cfg, Target::Value).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| collect(&cfg, &spec, 70_000, &cfg.first_round(), &SeedTree::new(5), Auditor::Hkv).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a, b);
    let other = collect(&cfg, &spec, 70_000, &cfg.first_round(), &SeedTree::new(6), Auditor::Hkv).unwrap();
    assert_ne!(a.0, other.0);
}

#[test]
fn sidecar_files_round_trip() {
    let cfg = MechanismConfig::new(Mechanism::CppUe, 2.0);
    let spec = construct_inputs(&cfg, Target::Value).unwrap();
    let (o1, _) = collect(&cfg, &spec, 5_000, &cfg.first_round(), &SeedTree::new(1), Auditor::Hkv).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("group1.kvah");
    o1.save(&path).unwrap();
    let back = OutputHistogram::load(&path).unwrap();
    assert_eq!(back.total(), o1.total());
    assert!(o1.iter().all(|(k, c)| back.count(k) == c));
    assert!(OutputHistogram::load(&dir.path().join("missing")).is_err());
}

#[test]
fn clopper_pearson_closed_forms() {
    for n in [1u64, 10, 100, 1000] {
        for level in [0.025, 0.005] {
            let up = cp_upper(0, n, level).unwrap();
            assert!((up - (1.0 - level.powf(1.0 / n as f64))).abs() < 1e-13);
            let lo = cp_lower(n, n, level).unwrap();
            assert!((lo - level.powf(1.0 / n as f64)).abs() < 1e-13);
            assert_eq!(cp_upper(n, n, level).unwrap(), 1.0);
            assert_eq!(cp_lower(0, n, level).unwrap(), 0.0);
        }
    }
    assert!((cp_upper(50, 100, 0.025).unwrap() - 0.601_678_870_496_699).abs() < 1e-12);
    let single = ClopperPearson32::default().upper(50, 100, 0.025).unwrap();
    let double = ClopperPearson64::default().upper(50, 100, 0.025).unwrap();
    assert!((single as f64 - double).abs() < 1e-5);
}

#[test]
fn frozen_estimator_example() {
    let o1 = OutputHistogram::from_counts([(b"a".to_vec(), 900u64), (b"b".to_vec(), 100)]);
    let o2 = OutputHistogram::from_counts([(b"a".to_vec(), 100u64), (b"b".to_vec(), 900)]);
    let cases = [
        (Mode::PerOutcome, 1.989_706_313_703_716_4),
        (Mode::Optimistic, 2.414_079_652_502_180_4),
        (Mode::Conservative, 1.936_500_892_305_846_4),
    ];
    for (mode, want) in cases {
        let r = estimate_eps_lb(&o1, &o2, 0.05, mode).unwrap();
        assert!((r.eps_lb - want).abs() < 1e-9, "{mode}: {}", r.eps_lb);
        assert_eq!(r.intersection_size, 2);
    }
}

#[test]
fn clopper_pearson_coverage() {
    // Exact coverage of the 95% two-sided interval for a few true proportions.
    use kvaudit::stats::binomial_cdf;
    let n = 60;
    for p in [0.05, 0.3, 0.5, 0.85] {
        let mut covered = 0.0;
        for y in 0..=n {
            let lo = cp_lower(y, n, 0.025).unwrap();
            let up = cp_upper(y, n, 0.025).unwrap();
            if lo <= p && p <= up {
                let prob = binomial_cdf::<f64>(y, n, p) - if y == 0 { 0.0 } else { binomial_cdf::<f64>(y - 1, n, p) };
                covered += prob;
            }
        }
        assert!(covered >= 0.95 - 1e-12, "p {p}: coverage {covered}");
    }
}
