//! Audited LDP perturbation mechanisms and their analytic transition probabilities.

mod config;
mod cpp;
pub mod oracle;
pub mod params;
mod pckv;
mod primitives;
mod record;

pub use config::{Family, KvPair, Mechanism, MechanismConfig, Round};
pub use cpp::cpp_perturb;
pub use oracle::{
    mixture_epsilon, output_domain, theoretical_epsilon, transition_probability, CertifiedEpsilon, Component,
};
pub use pckv::{pad_and_sample, pckv_perturb, Sampled};
pub use primitives::{
    boundary_point, discretize_value, grr_perturb, gvpp_discretize, laplace_noise, level_weights, oue_perturb,
    rr_perturb, the_perturb,
};
pub use record::PerturbedRecord;

use rand::Rng;

use crate::error::{Error, Result};

/// Runs the configured mechanism once for a user holding `input` (`None`: the
/// user holds no pair relevant to the audit).
///
/// `round` carries the per-iteration budgets and the collector's mean feedback.
pub fn perturb<R: Rng + ?Sized>(
    cfg: &MechanismConfig,
    input: Option<&KvPair>,
    round: &Round,
    rng: &mut R,
) -> Result<PerturbedRecord> {
    use Mechanism::*;
    let item =
        || input.map(|p| p.key).ok_or_else(|| Error::domain(format!("{} requires an input item", cfg.mechanism)));
    match cfg.mechanism {
        Rr => {
            let x = item()?;
            Ok(PerturbedRecord::Category(rr_perturb(x == 1, cfg.epsilon, rng)? as u32))
        }
        Grr => Ok(PerturbedRecord::Category(grr_perturb(item()?, cfg.domain_size, cfg.epsilon, rng)? as u32)),
        Oue => {
            let x = item()?;
            let mut bits = vec![false; cfg.domain_size];
            *bits.get_mut(x).ok_or_else(|| Error::domain(format!("item {x} outside domain")))? = true;
            Ok(PerturbedRecord::SupportSet(oue_perturb(&bits, cfg.epsilon, rng)?))
        }
        The => Ok(PerturbedRecord::SupportSet(the_perturb(item()?, cfg.domain_size, cfg.epsilon, cfg.threshold, rng)?)),
        CppUe | CppGrr | CppUeStar | CppGrrStar => cpp_perturb(input, cfg.audited_key, round, cfg, rng),
        PckvUe | PckvGrr => {
            let held: &[KvPair] = match input {
                Some(p) => std::slice::from_ref(p),
                None => &[],
            };
            let sampled = pad_and_sample(held, cfg.domain_size, cfg.padding, rng)?;
            pckv_perturb(&sampled, cfg, rng)
        }
    }
}
