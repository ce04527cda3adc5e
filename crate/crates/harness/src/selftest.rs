//! Quick built-in checks of the bound computations and the mechanism oracle,
//! plus the certified-ε table.

use kvaudit::audit::{construct_inputs, estimate_eps_lb, Mode, OutputHistogram};
use kvaudit::mechanisms::{output_domain, theoretical_epsilon, transition_probability, Mechanism, MechanismConfig};
use kvaudit::stats::{cp_lower, cp_upper, within_binomial_band, FOUR_SIGMA_TAIL};

use crate::error::{HarnessError, Result};
use crate::preset::{Preset, PRESET_NAMES};
use crate::table::fmt_g;

/// One named check and whether it passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

/// Runs every check; the caller decides how to report them.
pub fn run_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let up = cp_upper(0, 100, 0.025)?;
    let want = 1.0 - 0.025f64.powf(0.01);
    checks.push(check("cp upper at y=0", (up - want).abs() < 1e-12, format!("{up} vs {want}")));
    let lo = cp_lower(100, 100, 0.025)?;
    let want = 0.025f64.powf(0.01);
    checks.push(check("cp lower at y=N", (lo - want).abs() < 1e-12, format!("{lo} vs {want}")));
    let mid = cp_upper(50, 100, 0.025)?;
    checks.push(check("cp upper at y=50 of 100", (mid - 0.601_678_870_496_699).abs() < 1e-9, format!("{mid}")));

    let o1 = OutputHistogram::from_counts([(b"a".to_vec(), 900u64), (b"b".to_vec(), 100)]);
    let o2 = OutputHistogram::from_counts([(b"a".to_vec(), 100u64), (b"b".to_vec(), 900)]);
    for (mode, want) in [(Mode::PerOutcome, 1.989_706_313_703_716_4), (Mode::Optimistic, 2.414_079_652_502_180_4)] {
        let got = estimate_eps_lb(&o1, &o2, 0.05, mode)?.eps_lb;
        checks.push(check(&format!("eps_lb example ({mode})"), (got - want).abs() < 1e-9, format!("{got}")));
    }

    for m in Mechanism::ALL {
        let cfg = MechanismConfig::new(m, 1.0);
        let spec = construct_inputs(&cfg, Preset::for_mechanism(m).target)?;
        let domain = output_domain(&cfg)?;
        let round = cfg.first_round();
        let mut total = 0.0;
        for o in &domain {
            total += transition_probability::<f64>(&cfg, Some(&spec.kv1), &round, o)?;
        }
        checks.push(check(&format!("{m} probabilities sum to 1"), (total - 1.0).abs() < 1e-9, format!("{total}")));
        if m != Mechanism::The {
            let eps = theoretical_epsilon::<f64>(&cfg, Some(&spec.kv1), Some(&spec.kv2), &round)?.epsilon;
            checks.push(check(&format!("{m} certified within budget"), eps <= cfg.epsilon + 1e-9, fmt_g(eps)));
        }
    }

    // Binary RR at ε = ln 3 keeps the bit with probability 3/4.
    let cfg = MechanismConfig::new(Mechanism::Rr, 3f64.ln());
    let spec = construct_inputs(&cfg, kvaudit::audit::Target::Key)?;
    let n = 100_000;
    let (h, _) = kvaudit::audit::hkv_collect(&cfg, &spec, n, &cfg.first_round(), &kvaudit::rng::SeedTree::new(7))?;
    let mut ok = true;
    for (record, count) in h.records()? {
        let p = transition_probability::<f64>(&cfg, Some(&spec.kv1), &cfg.first_round(), &record)?;
        ok &= within_binomial_band(count, n, p, FOUR_SIGMA_TAIL);
    }
    checks.push(check("rr simulation within 4 sigma", ok, format!("{n} users")));
    Ok(checks)
}

/// Fails with a statistical error when any check fails.
pub fn selftest() -> Result<Vec<Check>> {
    let checks = run_checks()?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(HarnessError::SelfTest(failed.join(", ")))
    }
}

/// Certified ε of the audited input pair for every grid point of `preset`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub preset: String,
    pub mechanism: String,
    pub target: String,
    pub epsilon: f64,
    /// `None` when the output domain cannot be enumerated.
    pub certified: Option<f64>,
    pub outputs: Option<usize>,
}

pub fn oracle_table(presets: &[Preset]) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for preset in presets {
        let mut seen = std::collections::HashSet::new();
        for point in preset.grid()? {
            if !seen.insert((point.mechanism.clone(), point.cfg.epsilon.to_bits())) {
                continue;
            }
            let certified = match theoretical_epsilon::<f64>(
                &point.cfg,
                Some(&point.spec.kv1),
                Some(&point.spec.kv2),
                &point.cfg.first_round(),
            ) {
                Ok(c) => Some(c),
                Err(kvaudit::Error::Unsupported(_)) => None,
                Err(e) => return Err(e.into()),
            };
            rows.push(OracleRow {
                preset: preset.name.clone(),
                mechanism: point.mechanism,
                target: preset.target.to_string(),
                epsilon: point.cfg.epsilon,
                certified: certified.as_ref().map(|c| c.epsilon),
                outputs: certified.map(|c| c.outputs),
            });
        }
    }
    Ok(rows)
}

/// All presets with their default settings.
pub fn all_presets() -> Result<Vec<Preset>> {
    PRESET_NAMES.iter().map(|n| Preset::named(n)).collect()
}
