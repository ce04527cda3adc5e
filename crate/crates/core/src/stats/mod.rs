//! Special functions and exact binomial interval estimates.

mod beta;
mod binomial;
mod clopper_pearson;

pub use beta::{beta_quantile, betainc, ln_beta, ln_gamma};
pub use binomial::{binomial_cdf, binomial_sf, within_binomial_band, FOUR_SIGMA_TAIL};
pub use clopper_pearson::{cp_lower, cp_upper, ClopperPearson};
