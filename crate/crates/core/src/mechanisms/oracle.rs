//! Exact transition probabilities, output-domain enumeration and certified ε.

use crate::error::{Error, Result};
use crate::num::Real;

use super::params::{self, PckvParams};
use super::{Family, KvPair, Mechanism, MechanismConfig, PerturbedRecord, Round};

/// Largest output domain `output_domain` will materialize.
pub const MAX_ENUMERABLE: u128 = 1 << 22;

/// Number of distinct outputs of the configured mechanism (saturating).
pub fn output_domain_size(cfg: &MechanismConfig) -> u128 {
    let pow = |base: u128, exp: usize| -> u128 { (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base)) };
    let d = cfg.domain_size;
    let points = cfg.boundary_points;
    let dd = cfg.extended_domain();
    match cfg.mechanism {
        Mechanism::Rr | Mechanism::Grr => d as u128,
        Mechanism::Oue | Mechanism::The => pow(2, d),
        Mechanism::CppGrr | Mechanism::CppGrrStar => points as u128 + 1,
        Mechanism::CppUe | Mechanism::CppUeStar => pow(2, points).saturating_add(1),
        Mechanism::PckvUe => pow(3, dd),
        Mechanism::PckvGrr => 2 * dd as u128,
    }
}

fn bit_vectors(len: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << len).map(move |m| (0..len).map(|i| m >> i & 1 == 1).collect())
}

/// Every output the configured mechanism can produce, in a fixed order.
pub fn output_domain(cfg: &MechanismConfig) -> Result<Vec<PerturbedRecord>> {
    let size = output_domain_size(cfg);
    if size > MAX_ENUMERABLE {
        return Err(Error::Unsupported(format!(
            "{} output domain has {size} elements, more than {MAX_ENUMERABLE}",
            cfg.mechanism
        )));
    }
    let points = cfg.boundary_points;
    let dd = cfg.extended_domain();
    Ok(match cfg.mechanism {
        Mechanism::Rr | Mechanism::Grr => (0..cfg.domain_size as u32).map(PerturbedRecord::Category).collect(),
        Mechanism::Oue | Mechanism::The => bit_vectors(cfg.domain_size).map(PerturbedRecord::SupportSet).collect(),
        Mechanism::CppGrr | Mechanism::CppGrrStar => {
            std::iter::once(PerturbedRecord::KeyedLevel { key: false, level: None })
                .chain((0..points as u32).map(|j| PerturbedRecord::KeyedLevel { key: true, level: Some(j) }))
                .collect()
        }
        Mechanism::CppUe | Mechanism::CppUeStar => {
            std::iter::once(PerturbedRecord::KeyedBits { key: false, bits: vec![false; points] })
                .chain(bit_vectors(points).map(|bits| PerturbedRecord::KeyedBits { key: true, bits }))
                .collect()
        }
        Mechanism::PckvUe => (0..size)
            .map(|mut m| {
                PerturbedRecord::SignedVector(
                    (0..dd)
                        .map(|_| {
                            let s = (m % 3) as i8 - 1;
                            m /= 3;
                            s
                        })
                        .collect(),
                )
            })
            .collect(),
        Mechanism::PckvGrr => (0..dd as u32)
            .flat_map(|key| [false, true].map(|positive| PerturbedRecord::KeyValue { key, positive }))
            .collect(),
    })
}

fn outside(cfg: &MechanismConfig, output: &PerturbedRecord) -> Error {
    Error::domain(format!("{output:?} is not an output of {}", cfg.mechanism))
}

/// Exact probability that `input` produces `output` under `cfg` in `round`.
///
/// `input = None` is a user holding no pair (CPP non-owner, PCKV all-dummy).
/// Frequency mechanisms read only the key and always use `cfg.epsilon`.
pub fn transition_probability<T: Real>(
    cfg: &MechanismConfig,
    input: Option<&KvPair>,
    round: &Round,
    output: &PerturbedRecord,
) -> Result<T> {
    match cfg.mechanism.family() {
        Family::Frequency => frequency(cfg, input, output),
        Family::Cpp => cpp(cfg, input, round, output),
        Family::Pckv => pckv(cfg, input, output),
    }
}

fn frequency<T: Real>(cfg: &MechanismConfig, input: Option<&KvPair>, output: &PerturbedRecord) -> Result<T> {
    let d = cfg.domain_size;
    let x = match input {
        Some(p) if p.key < d => p.key,
        _ => return Err(Error::domain(format!("{} needs an item in 0..{d}", cfg.mechanism))),
    };
    let eps = T::lit(cfg.epsilon);
    match (cfg.mechanism, output) {
        (Mechanism::Rr | Mechanism::Grr, PerturbedRecord::Category(y)) if (*y as usize) < d => {
            Ok(if *y as usize == x { params::grr_keep(eps, d) } else { params::grr_other(eps, d) })
        }
        (Mechanism::Oue, PerturbedRecord::SupportSet(bits)) if bits.len() == d => {
            let raise = params::oue_raise(eps);
            Ok(product(bits, |i| if i == x { params::oue_keep() } else { raise }))
        }
        (Mechanism::The, PerturbedRecord::SupportSet(bits)) if bits.len() == d => {
            let theta = T::lit(cfg.threshold);
            let on = params::the_bit_on(true, eps, theta);
            let off = params::the_bit_on(false, eps, theta);
            Ok(product(bits, |i| if i == x { on } else { off }))
        }
        _ => Err(outside(cfg, output)),
    }
}

/// Π_i P(bit_i), given each position's probability of being set.
fn product<T: Real>(bits: &[bool], p_on: impl Fn(usize) -> T) -> T {
    bits.iter().enumerate().fold(T::one(), |acc, (i, &b)| acc * if b { p_on(i) } else { T::one() - p_on(i) })
}

fn cpp<T: Real>(cfg: &MechanismConfig, input: Option<&KvPair>, round: &Round, output: &PerturbedRecord) -> Result<T> {
    let points = cfg.boundary_points;
    if round.value_budget.is_nan() || round.value_budget <= 0.0 {
        return Err(Error::config("value budget must be positive"));
    }
    if !(-1.0..=1.0).contains(&round.mean) {
        return Err(Error::domain(format!("mean feedback {} outside [-1, 1]", round.mean)));
    }
    let owner = input.is_some_and(|p| p.key == cfg.audited_key);
    let value = match input {
        Some(p) if owner => p.value,
        _ => round.mean,
    };
    let keep = params::rr_keep(T::lit(round.key_budget));
    let key_on = if owner { keep } else { T::one() - keep };
    let eps2 = T::lit(round.value_budget);
    let (lo, up) = params::level_weights(T::lit(value), points);
    let level_mass = [(lo, T::one() - up), (lo + 1, up)];
    match (cfg.mechanism, output) {
        (Mechanism::CppGrr | Mechanism::CppGrrStar, PerturbedRecord::KeyedLevel { key: false, level: None })
        | (Mechanism::CppUe | Mechanism::CppUeStar, PerturbedRecord::KeyedBits { key: false, .. })
            if output.is_well_formed() && vector_fits(output, points) =>
        {
            Ok(T::one() - key_on)
        }
        (Mechanism::CppGrr | Mechanism::CppGrrStar, PerturbedRecord::KeyedLevel { key: true, level: Some(y) })
            if (*y as usize) < points =>
        {
            let y = *y as usize;
            let p = params::grr_keep(eps2, points);
            let q = params::grr_other(eps2, points);
            let value_part = level_mass.iter().fold(T::zero(), |acc, &(j, w)| acc + w * if j == y { p } else { q });
            Ok(key_on * value_part)
        }
        (Mechanism::CppUe | Mechanism::CppUeStar, PerturbedRecord::KeyedBits { key: true, bits })
            if bits.len() == points =>
        {
            let raise = params::oue_raise(eps2);
            let value_part = level_mass.iter().fold(T::zero(), |acc, &(j, w)| {
                acc + w * product(bits, |i| if i == j { params::oue_keep() } else { raise })
            });
            Ok(key_on * value_part)
        }
        _ => Err(outside(cfg, output)),
    }
}

fn vector_fits(output: &PerturbedRecord, points: usize) -> bool {
    match output {
        PerturbedRecord::KeyedBits { bits, .. } => bits.len() == points,
        _ => true,
    }
}

fn pckv<T: Real>(cfg: &MechanismConfig, input: Option<&KvPair>, output: &PerturbedRecord) -> Result<T> {
    let d = cfg.domain_size;
    let l = cfg.padding;
    let dd = d + l;
    if let Some(p) = input {
        if p.key >= d {
            return Err(Error::domain(format!("key {} outside 0..{d}", p.key)));
        }
    }
    let par = PckvParams::<T>::new(T::lit(cfg.key_budget), T::lit(cfg.value_budget), dd);
    let half = T::lit(0.5);
    // (slot weight, sampled key, P(sign = +1)).
    let real = input.map(|p| (p.key, (T::one() + T::lit(p.value)) * half));
    let held = usize::from(real.is_some());
    let slot = T::one() / T::count(l as u64);
    let slots = real.into_iter().chain((0..l - held).map(|j| (d + j, half))).map(|(k, plus)| (slot, k, plus));

    let given = |k: usize, s: i8| -> Result<T> {
        match (cfg.mechanism, output) {
            (Mechanism::PckvUe, PerturbedRecord::SignedVector(v)) if v.len() == dd => {
                v.iter().enumerate().try_fold(T::one(), |acc, (i, &sym)| {
                    let p = match (i == k, sym) {
                        (true, 0) => T::one() - par.a,
                        (true, x) if x == s => par.a * par.p_plus,
                        (true, x) if x == -s => par.a * (T::one() - par.p_plus),
                        (false, 0) => T::one() - par.b,
                        (false, 1 | -1) => par.b * half,
                        _ => return Err(outside(cfg, output)),
                    };
                    Ok(acc * p)
                })
            }
            (Mechanism::PckvGrr, PerturbedRecord::KeyValue { key, positive }) if (*key as usize) < dd => {
                let same_sign = (*positive) == (s > 0);
                Ok(if *key as usize == k {
                    par.key_keep * if same_sign { par.p_plus } else { T::one() - par.p_plus }
                } else {
                    (T::one() - par.key_keep) / T::count(dd as u64 - 1) * half
                })
            }
            _ => Err(outside(cfg, output)),
        }
    };
    slots.into_iter().try_fold(T::zero(), |acc, (w, k, plus)| {
        Ok(acc + w * (plus * given(k, 1)? + (T::one() - plus) * given(k, -1)?))
    })
}

/// Largest absolute log-likelihood ratio between two inputs over the output domain.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedEpsilon<T> {
    pub epsilon: T,
    /// Output attaining the maximum, if any output was comparable.
    pub argmax: Option<PerturbedRecord>,
    /// Size of the enumerated output domain.
    pub outputs: usize,
    /// Outputs excluded because one side has probability zero.
    pub zero_outputs: usize,
}

/// Brute-force ε between `kv1` and `kv2` over the whole output domain.
pub fn theoretical_epsilon<T: Real>(
    cfg: &MechanismConfig,
    kv1: Option<&KvPair>,
    kv2: Option<&KvPair>,
    round: &Round,
) -> Result<CertifiedEpsilon<T>> {
    mixture_epsilon(cfg, &[(1.0, kv1, *round)], &[(1.0, kv2, *round)])
}

/// One weighted population component: a share of users, their input and the
/// round they report in.
pub type Component<'a> = (f64, Option<&'a KvPair>, Round);

/// Brute-force ε between two populations, each a weighted mixture of inputs
/// reporting in possibly different rounds. Weights on each side must sum to 1.
pub fn mixture_epsilon<T: Real>(
    cfg: &MechanismConfig,
    side1: &[Component<'_>],
    side2: &[Component<'_>],
) -> Result<CertifiedEpsilon<T>> {
    if cfg.mechanism == Mechanism::The {
        return Err(Error::Unsupported("THE has continuous noise; its ε comes from configuration".into()));
    }
    for side in [side1, side2] {
        let total: f64 = side.iter().map(|c| c.0).sum();
        if side.is_empty() || side.iter().any(|c| c.0.is_nan() || c.0 < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::config("mixture weights must be non-negative and sum to 1"));
        }
    }
    let mix = |side: &[Component<'_>], o: &PerturbedRecord| -> Result<T> {
        side.iter().filter(|c| c.0 > 0.0).try_fold(T::zero(), |acc, (w, input, round)| {
            Ok(acc + T::lit(*w) * transition_probability::<T>(cfg, *input, round, o)?)
        })
    };
    let domain = output_domain(cfg)?;
    let mut best = CertifiedEpsilon { epsilon: T::zero(), argmax: None, outputs: domain.len(), zero_outputs: 0 };
    for o in domain {
        let p1 = mix(side1, &o)?;
        let p2 = mix(side2, &o)?;
        if p1 <= T::zero() || p2 <= T::zero() {
            best.zero_outputs += 1;
            continue;
        }
        let r = (p1.ln() - p2.ln()).abs();
        if best.argmax.is_none() || r > best.epsilon {
            best.epsilon = r;
            best.argmax = Some(o);
        }
    }
    Ok(best)
}
