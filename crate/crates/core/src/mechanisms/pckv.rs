//! Padding-and-sampling key-value perturbation.

use rand::Rng;

use crate::error::{Error, Result};

use super::params::PckvParams;
use super::primitives::{coin, discretize_value, fair_sign, other_index};
use super::{KvPair, Mechanism, MechanismConfig, PerturbedRecord};

/// One pair drawn after padding. `value` is `None` for a dummy slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampled {
    pub key: usize,
    pub value: Option<f64>,
}

/// Pads `pairs` to length `padding` with dummy keys `d, d+1, ...` and samples one
/// slot uniformly.
pub fn pad_and_sample<R: Rng + ?Sized>(pairs: &[KvPair], d: usize, padding: usize, rng: &mut R) -> Result<Sampled> {
    if padding == 0 {
        return Err(Error::config("padding length must be at least 1"));
    }
    if pairs.len() > padding {
        return Err(Error::Padding { pairs: pairs.len(), padding });
    }
    if let Some(p) = pairs.iter().find(|p| p.key >= d || !(-1.0..=1.0).contains(&p.value)) {
        return Err(Error::domain(format!("pair {p} outside key domain 0..{d} or value range")));
    }
    let slot = rng.random_range(0..padding);
    Ok(match pairs.get(slot) {
        Some(p) => Sampled { key: p.key, value: Some(p.value) },
        None => Sampled { key: d + slot - pairs.len(), value: None },
    })
}

/// Perturbs a sampled pair. The value is first discretized to a sign (a dummy
/// gets a fair sign), then key and sign are perturbed jointly.
pub fn pckv_perturb<R: Rng + ?Sized>(sampled: &Sampled, cfg: &MechanismConfig, rng: &mut R) -> Result<PerturbedRecord> {
    let dd = cfg.extended_domain();
    if sampled.key >= dd {
        return Err(Error::domain(format!("sampled key {} outside extended domain 0..{dd}", sampled.key)));
    }
    let sign = match sampled.value {
        Some(v) => discretize_value(v, rng)?,
        None => fair_sign(rng),
    };
    let p = PckvParams::new(cfg.key_budget, cfg.value_budget, dd);
    match cfg.mechanism {
        Mechanism::PckvUe => {
            let vector = (0..dd)
                .map(|i| {
                    let u = rng.random::<f64>();
                    if i == sampled.key {
                        if u < p.a * p.p_plus {
                            sign
                        } else if u < p.a {
                            -sign
                        } else {
                            0
                        }
                    } else if u < p.b / 2.0 {
                        1
                    } else if u < p.b {
                        -1
                    } else {
                        0
                    }
                })
                .collect();
            Ok(PerturbedRecord::SignedVector(vector))
        }
        Mechanism::PckvGrr => {
            let (key, sign) = if coin(p.key_keep, rng) {
                (sampled.key, if coin(p.p_plus, rng) { sign } else { -sign })
            } else {
                (other_index(sampled.key, dd, rng), fair_sign(rng))
            };
            Ok(PerturbedRecord::KeyValue { key: key as u32, positive: sign > 0 })
        }
        m => Err(Error::config(format!("{m} is not a padding-and-sampling mechanism"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    #[test]
    fn padding_overflow_is_reported() {
        let mut rng = SmallRng::seed_from_u64(0);
        let pairs = [KvPair::new(0, 0.1).unwrap(), KvPair::new(1, 0.2).unwrap()];
        assert!(matches!(pad_and_sample(&pairs, 4, 1, &mut rng), Err(Error::Padding { pairs: 2, padding: 1 })));
    }

    #[test]
    fn sampling_is_uniform_over_slots() {
        let mut rng = SmallRng::seed_from_u64(5);
        let pairs = [KvPair::new(2, 0.5).unwrap()];
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            let s = pad_and_sample(&pairs, 4, 3, &mut rng).unwrap();
            match s.value {
                Some(_) => {
                    assert_eq!(s.key, 2);
                    counts[0] += 1
                }
                None => counts[s.key - 3] += 1,
            }
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 4.0 * (30_000.0f64 * 2.0 / 9.0).sqrt(), "{counts:?}");
        }
    }

    #[test]
    fn absent_user_samples_dummies() {
        let mut rng = SmallRng::seed_from_u64(6);
        for _ in 0..100 {
            let s = pad_and_sample(&[], 4, 2, &mut rng).unwrap();
            assert!(s.key == 4 || s.key == 5);
            assert!(s.value.is_none());
        }
    }

    #[test]
    fn huge_budget_reports_truth() {
        let cfg = MechanismConfig::new(Mechanism::PckvUe, 200.0);
        let mut rng = SmallRng::seed_from_u64(7);
        let s = Sampled { key: 1, value: Some(1.0) };
        let mut seen = [0u32; 3];
        for _ in 0..1000 {
            let PerturbedRecord::SignedVector(v) = pckv_perturb(&s, &cfg, &mut rng).unwrap() else { panic!() };
            assert!(v.iter().enumerate().all(|(i, &x)| i == 1 || x == 0));
            seen[(v[1] + 1) as usize] += 1;
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1] > 400 && seen[2] > 400);
    }
}
