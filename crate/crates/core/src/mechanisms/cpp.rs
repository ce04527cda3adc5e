//! Key-bit plus value perturbation on a single audited key.

use rand::Rng;

use crate::error::{Error, Result};

use super::params;
use super::primitives::{coin, grr_index, gvpp_discretize};
use super::{KvPair, Mechanism, MechanismConfig, PerturbedRecord, Round};

/// Perturbs one user's report on `key_index`.
///
/// An owner of `key_index` encodes key bit 1 and its value; anyone else encodes
/// key bit 0 with the round's mean as a stand-in value. The key bit goes through
/// randomized response at the round's key budget (a zero budget makes it a fair
/// coin). A reported key bit of 0 carries no value payload; otherwise the value
/// is snapped onto the boundary grid and perturbed with GRR or OUE at the value budget.
pub fn cpp_perturb<R: Rng + ?Sized>(
    pair: Option<&KvPair>,
    key_index: usize,
    round: &Round,
    cfg: &MechanismConfig,
    rng: &mut R,
) -> Result<PerturbedRecord> {
    let points = cfg.boundary_points;
    if points < 2 || !points.is_multiple_of(2) {
        return Err(Error::config(format!("boundary point count must be even and >= 2, got {points}")));
    }
    let unary = match cfg.mechanism {
        Mechanism::CppUe | Mechanism::CppUeStar => true,
        Mechanism::CppGrr | Mechanism::CppGrrStar => false,
        m => return Err(Error::config(format!("{m} is not a key-bit mechanism"))),
    };
    if round.value_budget.is_nan() || round.value_budget <= 0.0 || round.key_budget < 0.0 {
        return Err(Error::config("round budgets must be non-negative with a positive value budget"));
    }
    if !(-1.0..=1.0).contains(&round.mean) {
        return Err(Error::domain(format!("mean feedback {} outside [-1, 1]", round.mean)));
    }
    let owner = pair.is_some_and(|p| p.key == key_index);
    let value = match pair {
        Some(p) if owner => {
            if !(-1.0..=1.0).contains(&p.value) {
                return Err(Error::domain(format!("value {} outside [-1, 1]", p.value)));
            }
            p.value
        }
        _ => round.mean,
    };
    let key = if coin(params::rr_keep(round.key_budget), rng) { owner } else { !owner };
    if !key {
        return Ok(if unary {
            PerturbedRecord::KeyedBits { key, bits: vec![false; points] }
        } else {
            PerturbedRecord::KeyedLevel { key, level: None }
        });
    }
    let level = gvpp_discretize(value, points, rng);
    let eps = round.value_budget;
    Ok(if unary {
        let raise = params::oue_raise(eps);
        let bits = (0..points).map(|i| coin(if i == level { 0.5 } else { raise }, rng)).collect();
        PerturbedRecord::KeyedBits { key, bits }
    } else {
        let out = grr_index(level, points, params::grr_keep(eps, points), rng);
        PerturbedRecord::KeyedLevel { key, level: Some(out as u32) }
    })
}
