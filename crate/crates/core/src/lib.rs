//! Empirical privacy auditing of local-differential-privacy key-value mechanisms.
//!
//! Two simulated user groups run a mechanism on neighbouring inputs; the output
//! histograms are compared outcome by outcome and Clopper–Pearson bounds turn
//! the observed frequency ratios into a certified lower bound `eps_lb` on the
//! mechanism's privacy loss.

pub mod audit;
pub mod error;
pub mod interactive;
pub mod mechanisms;
pub mod num;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use num::Real;

/// Clopper–Pearson bounds in double precision (the default everywhere).
pub type ClopperPearson64 = stats::ClopperPearson<f64>;
/// Clopper–Pearson bounds in single precision.
pub type ClopperPearson32 = stats::ClopperPearson<f32>;
/// Certified ε from the double-precision oracle.
pub type CertifiedEpsilon64 = mechanisms::CertifiedEpsilon<f64>;
/// Certified ε from the single-precision oracle.
pub type CertifiedEpsilon32 = mechanisms::CertifiedEpsilon<f32>;
/// PCKV perturbation constants in double precision.
pub type PckvParams64 = mechanisms::params::PckvParams<f64>;
