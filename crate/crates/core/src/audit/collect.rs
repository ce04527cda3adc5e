//! Parallel simulation of user groups into output histograms.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanisms::{perturb, Family, KvPair, Mechanism, MechanismConfig, PerturbedRecord, Round};
use crate::rng::SeedTree;

use super::encode::encode_into;
use super::histogram::{HistogramMeta, OutputHistogram};
use super::inputs::InputPairSpec;

/// Users simulated per work unit. Fixed so chunking never depends on the thread count.
pub const CHUNK_USERS: u64 = 1 << 14;

/// Iteration slot reserved for ownership draws, which stay fixed across rounds.
const OWNERSHIP_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Auditor {
    /// Whole records are histogram units.
    Hkv,
    /// Two designated positions of vector outputs are histogram units.
    Vkv,
}

impl fmt::Display for Auditor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Auditor::Hkv => "hkv",
            Auditor::Vkv => "vkv",
        })
    }
}

impl FromStr for Auditor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hkv" => Ok(Auditor::Hkv),
            "vkv" => Ok(Auditor::Vkv),
            _ => Err(Error::config(format!("unknown auditor `{s}`"))),
        }
    }
}

/// How each simulated record is turned into a histogram unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    Whole,
    /// Symbols at two vector positions; non-vector records pass through unchanged.
    Pair(usize, usize),
}

impl View {
    pub fn for_auditor(auditor: Auditor, cfg: &MechanismConfig, spec: &InputPairSpec) -> View {
        match auditor {
            Auditor::Hkv => View::Whole,
            Auditor::Vkv => {
                let (a, b) = vkv_positions(cfg, spec);
                View::Pair(a, b)
            }
        }
    }

    pub fn apply(&self, record: &PerturbedRecord) -> Result<PerturbedRecord> {
        match *self {
            View::Whole => Ok(record.clone()),
            View::Pair(a, b) => extract_pair(record, a, b),
        }
    }
}

/// Positions read by the vertical auditor: the two audited keys of a padded
/// vector or support set, or the first and last boundary bits of a CPP value vector.
pub fn vkv_positions(cfg: &MechanismConfig, spec: &InputPairSpec) -> (usize, usize) {
    match cfg.mechanism {
        Mechanism::CppUe | Mechanism::CppUeStar => (0, cfg.boundary_points - 1),
        _ => (spec.kv1.key, spec.kv2.key),
    }
}

pub fn extract_pair(record: &PerturbedRecord, first: usize, second: usize) -> Result<PerturbedRecord> {
    fn pick<T: Copy>(v: &[T], first: usize, second: usize) -> Result<(T, T)> {
        match (v.get(first), v.get(second)) {
            (Some(&a), Some(&b)) => Ok((a, b)),
            _ => Err(Error::domain(format!("positions ({first}, {second}) outside vector of length {}", v.len()))),
        }
    }
    Ok(match record {
        PerturbedRecord::SignedVector(v) => {
            let (a, b) = pick(v, first, second)?;
            PerturbedRecord::SymbolPair(a, b)
        }
        PerturbedRecord::KeyedBits { bits, .. } | PerturbedRecord::SupportSet(bits) => {
            let (a, b) = pick(bits, first, second)?;
            PerturbedRecord::SymbolPair(a as i8, b as i8)
        }
        other => other.clone(),
    })
}

/// The vertical extraction for `record` under the audit `spec`.
pub fn vkv_extract(record: &PerturbedRecord, cfg: &MechanismConfig, spec: &InputPairSpec) -> Result<PerturbedRecord> {
    let (a, b) = vkv_positions(cfg, spec);
    extract_pair(record, a, b)
}

/// Whether `user` of `lane` holds its group's pair. The draw comes from a
/// dedicated stream, so it is the same in every round of a run.
pub fn owns(seeds: &SeedTree, lane: u64, user: u64, ownership: f64) -> bool {
    if ownership >= 1.0 {
        return true;
    }
    let u = (seeds.key(lane, OWNERSHIP_STREAM, user) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u < ownership
}

/// Simulates `n` users of one group and returns one histogram per view.
///
/// `input(user)` gives the pair the user holds (`None`: nothing relevant).
/// Each user draws from the stream `(lane, iteration, user)` of `seeds`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_group<I>(
    cfg: &MechanismConfig,
    round: &Round,
    n: u64,
    seeds: &SeedTree,
    lane: u64,
    iteration: u64,
    views: &[View],
    input: I,
) -> Result<Vec<OutputHistogram>>
where
    I: Fn(u64) -> Option<KvPair> + Sync,
{
    let chunks = n.div_ceil(CHUNK_USERS);
    let empty = || vec![OutputHistogram::default(); views.len()];
    let mut hists = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut local = empty();
            let mut buf = Vec::with_capacity(32);
            for user in chunk * CHUNK_USERS..((chunk + 1) * CHUNK_USERS).min(n) {
                let mut rng = seeds.user_rng(lane, iteration, user);
                let held = input(user);
                let record = perturb(cfg, held.as_ref(), round, &mut rng)?;
                for (view, h) in views.iter().zip(local.iter_mut()) {
                    buf.clear();
                    match view {
                        View::Whole => encode_into(&record, &mut buf),
                        v => encode_into(&v.apply(&record)?, &mut buf),
                    }
                    h.add_encoded(&buf, 1);
                }
            }
            Ok(local)
        })
        .try_reduce(empty, |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
            Ok(a)
        })?;
    for h in &mut hists {
        h.meta = HistogramMeta::new(format!("lane{lane}"), cfg.mechanism, iteration as usize);
    }
    Ok(hists)
}

/// Ownership probability in force for `cfg`: frequency oracles have no notion of
/// a non-owner, so their users always hold the input.
pub fn effective_ownership(cfg: &MechanismConfig) -> f64 {
    match cfg.mechanism.family() {
        Family::Frequency => 1.0,
        _ => cfg.ownership,
    }
}

/// Both groups for every requested auditor, all views cut from the same records.
pub fn collect_views(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    round: &Round,
    seeds: &SeedTree,
    auditors: &[Auditor],
) -> Result<Vec<(OutputHistogram, OutputHistogram)>> {
    if n == 0 {
        return Err(Error::config("group size must be at least 1"));
    }
    let views: Vec<View> = auditors.iter().map(|&a| View::for_auditor(a, cfg, spec)).collect();
    let w = effective_ownership(cfg);
    let mut groups = Vec::with_capacity(2);
    for (lane, kv) in [(0u64, spec.kv1), (1, spec.kv2)] {
        let hists = simulate_group(cfg, round, n, seeds, lane, 0, &views, |u| owns(seeds, lane, u, w).then_some(kv))?;
        groups.push(hists);
    }
    let second = groups.pop().expect("two groups");
    let first = groups.pop().expect("two groups");
    Ok(first
        .into_iter()
        .zip(second)
        .map(|(mut a, mut b)| {
            a.meta.group = "group1".into();
            b.meta.group = "group2".into();
            (a, b)
        })
        .collect())
}

/// Collects both groups with one auditor.
pub fn collect(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    round: &Round,
    seeds: &SeedTree,
    auditor: Auditor,
) -> Result<(OutputHistogram, OutputHistogram)> {
    Ok(collect_views(cfg, spec, n, round, seeds, &[auditor])?.remove(0))
}

/// Whole-record histograms of both groups.
pub fn hkv_collect(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    round: &Round,
    seeds: &SeedTree,
) -> Result<(OutputHistogram, OutputHistogram)> {
    collect(cfg, spec, n, round, seeds, Auditor::Hkv)
}

/// Two-position histograms of both groups.
pub fn vkv_collect(
    cfg: &MechanismConfig,
    spec: &InputPairSpec,
    n: u64,
    round: &Round,
    seeds: &SeedTree,
) -> Result<(OutputHistogram, OutputHistogram)> {
    collect(cfg, spec, n, round, seeds, Auditor::Vkv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::{canonical_encode, construct_inputs, Target};

    #[test]
    fn extraction() {
        let v = PerturbedRecord::SignedVector(vec![-1, 0, 1, 0]);
        assert_eq!(extract_pair(&v, 0, 2).unwrap(), PerturbedRecord::SymbolPair(-1, 1));
        let b = PerturbedRecord::KeyedBits { key: true, bits: vec![true, false, false, false] };
        assert_eq!(extract_pair(&b, 0, 3).unwrap(), PerturbedRecord::SymbolPair(1, 0));
        let g = PerturbedRecord::KeyValue { key: 2, positive: true };
        assert_eq!(extract_pair(&g, 0, 1).unwrap(), g);
        assert!(extract_pair(&v, 0, 9).is_err());
    }

    #[test]
    fn noise_free_cpp_grr_concentrates() {
        let cfg = MechanismConfig::new(Mechanism::CppGrr, 100.0).with_ownership(1.0);
        let spec = construct_inputs(&cfg, Target::Value).unwrap();
        let (h1, h2) = hkv_collect(&cfg, &spec, 5000, &cfg.first_round(), &SeedTree::new(1)).unwrap();
        assert_eq!(h1.total(), 5000);
        assert_eq!(h1.count_record(&PerturbedRecord::KeyedLevel { key: true, level: Some(1) }), 5000);
        assert_eq!(h2.count_record(&PerturbedRecord::KeyedLevel { key: true, level: Some(0) }), 5000);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = MechanismConfig::new(Mechanism::PckvUe, 1.0).with_padding(2);
        let spec = construct_inputs(&cfg, Target::Value).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| hkv_collect(&cfg, &spec, 40_000, &cfg.first_round(), &SeedTree::new(9)).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn cpp_grr_support_is_three_outcomes() {
        let cfg = MechanismConfig::new(Mechanism::CppGrr, 1.0);
        let spec = construct_inputs(&cfg, Target::Value).unwrap();
        let (h1, _) = hkv_collect(&cfg, &spec, 20_000, &cfg.first_round(), &SeedTree::new(2)).unwrap();
        let allowed: Vec<Vec<u8>> =
            crate::mechanisms::output_domain(&cfg).unwrap().iter().map(canonical_encode).collect();
        assert!(h1.iter().all(|(k, _)| allowed.iter().any(|a| a == k)));
        assert_eq!(h1.support_len(), 3);
    }
}
