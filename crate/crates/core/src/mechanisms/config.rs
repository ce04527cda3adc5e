use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One user's datum: a key index and a value in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KvPair {
    pub key: usize,
    pub value: f64,
}

impl KvPair {
    pub fn new(key: usize, value: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::domain(format!("value {value} outside [-1, 1]")));
        }
        Ok(Self { key, value })
    }
}

impl fmt::Display for KvPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.key, self.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    /// Binary randomized response.
    Rr,
    /// Generalized randomized response over `d` categories.
    Grr,
    /// Optimized unary encoding.
    Oue,
    /// Thresholded histogram encoding (Laplace noise).
    The,
    /// Single-round key-value perturbation, unary-encoded value.
    CppUe,
    /// Single-round key-value perturbation, GRR value.
    CppGrr,
    /// Padding-and-sampling with unary encoding.
    PckvUe,
    /// Padding-and-sampling with GRR.
    PckvGrr,
    /// Multi-round `CppUe` with collector mean feedback.
    CppUeStar,
    /// Multi-round `CppGrr` with collector mean feedback.
    CppGrrStar,
}

/// Mechanism families differ in how inputs and ownership are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Plain frequency oracles: the key is the reported item, the value is ignored.
    Frequency,
    /// Key-bit plus value perturbation on one audited key.
    Cpp,
    /// Padding and sampling over an extended key domain.
    Pckv,
}

impl Mechanism {
    pub const ALL: [Mechanism; 10] = [
        Mechanism::Rr,
        Mechanism::Grr,
        Mechanism::Oue,
        Mechanism::The,
        Mechanism::CppUe,
        Mechanism::CppGrr,
        Mechanism::PckvUe,
        Mechanism::PckvGrr,
        Mechanism::CppUeStar,
        Mechanism::CppGrrStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Rr => "rr",
            Mechanism::Grr => "grr",
            Mechanism::Oue => "oue",
            Mechanism::The => "the",
            Mechanism::CppUe => "cpp-ue",
            Mechanism::CppGrr => "cpp-grr",
            Mechanism::PckvUe => "pckv-ue",
            Mechanism::PckvGrr => "pckv-grr",
            Mechanism::CppUeStar => "cpp-ue*",
            Mechanism::CppGrrStar => "cpp-grr*",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Mechanism::Rr | Mechanism::Grr | Mechanism::Oue | Mechanism::The => Family::Frequency,
            Mechanism::CppUe | Mechanism::CppGrr | Mechanism::CppUeStar | Mechanism::CppGrrStar => Family::Cpp,
            Mechanism::PckvUe | Mechanism::PckvGrr => Family::Pckv,
        }
    }

    pub fn is_interactive(self) -> bool {
        matches!(self, Mechanism::CppUeStar | Mechanism::CppGrrStar)
    }

    /// Whether the value (or item) is unary-encoded into a vector.
    pub fn is_unary(self) -> bool {
        matches!(self, Mechanism::Oue | Mechanism::The | Mechanism::CppUe | Mechanism::CppUeStar | Mechanism::PckvUe)
    }

    /// Value primitive chosen by the generalized value perturbation rule:
    /// GRR over the boundary points when `value_budget ≥ ln(L/2)`, unary encoding otherwise.
    pub fn gvpp(value_budget: f64, boundary_points: usize) -> Mechanism {
        if value_budget >= (boundary_points as f64 / 2.0).ln() {
            Mechanism::CppGrr
        } else {
            Mechanism::CppUe
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let norm = norm.strip_suffix("-star").map(|b| format!("{b}*")).unwrap_or(norm);
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::config(format!("unknown mechanism `{s}`")))
    }
}

/// Parameters of one audited mechanism instance.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanismConfig {
    pub mechanism: Mechanism,
    /// Claimed total privacy budget.
    pub epsilon: f64,
    /// Key budget (first round for interactive mechanisms).
    pub key_budget: f64,
    /// Value budget (per round for interactive mechanisms).
    pub value_budget: f64,
    /// Key (or item) domain size `d`.
    pub domain_size: usize,
    /// Padding length `l` (PCKV).
    pub padding: usize,
    /// Number of value boundary points `L` (CPP).
    pub boundary_points: usize,
    /// Round count `c` (interactive CPP).
    pub iterations: usize,
    /// Probability that a simulated user holds the audited pair.
    pub ownership: f64,
    /// Support threshold θ (THE).
    pub threshold: f64,
    /// Key index the CPP user reports on.
    pub audited_key: usize,
}

/// Budgets and mean feedback in force for one perturbation round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Round {
    pub key_budget: f64,
    pub value_budget: f64,
    /// Collector's current mean for the audited key; used by non-owners.
    pub mean: f64,
}

impl MechanismConfig {
    /// Defaults: budget split evenly between key and value, `d = 4` (`2` for RR),
    /// `l = 1`, `L = 2` for GRR-valued and `4` for unary-valued CPP, `c = 5` for
    /// the interactive variants, ownership `1/2` for key-value mechanisms, θ = 2/3.
    pub fn new(mechanism: Mechanism, epsilon: f64) -> Self {
        let family = mechanism.family();
        let iterations = if mechanism.is_interactive() { 5 } else { 1 };
        let mut cfg = Self {
            mechanism,
            epsilon,
            key_budget: 0.0,
            value_budget: 0.0,
            domain_size: if mechanism == Mechanism::Rr { 2 } else { 4 },
            padding: 1,
            boundary_points: if mechanism.is_unary() { 4 } else { 2 },
            iterations,
            ownership: if family == Family::Frequency { 1.0 } else { 0.5 },
            threshold: 2.0 / 3.0,
            audited_key: 0,
        };
        cfg.split_budget();
        cfg
    }

    /// Recomputes key/value budgets from `epsilon` with the default even split.
    pub fn split_budget(&mut self) {
        match self.mechanism.family() {
            Family::Frequency => {
                self.key_budget = self.epsilon;
                self.value_budget = 0.0;
            }
            _ => {
                self.key_budget = self.epsilon / 2.0;
                self.value_budget = self.epsilon / (2.0 * self.iterations as f64);
            }
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self.split_budget();
        self
    }

    pub fn with_domain_size(mut self, d: usize) -> Self {
        self.domain_size = d;
        self
    }

    pub fn with_padding(mut self, l: usize) -> Self {
        self.padding = l;
        self
    }

    pub fn with_boundary_points(mut self, points: usize) -> Self {
        self.boundary_points = points;
        self
    }

    pub fn with_iterations(mut self, c: usize) -> Self {
        self.iterations = c;
        self.split_budget();
        self
    }

    pub fn with_ownership(mut self, w: f64) -> Self {
        self.ownership = w;
        self
    }

    pub fn with_threshold(mut self, theta: f64) -> Self {
        self.threshold = theta;
        self
    }

    pub fn with_audited_key(mut self, key: usize) -> Self {
        self.audited_key = key;
        self
    }

    pub fn with_budgets(mut self, key_budget: f64, value_budget: f64) -> Self {
        self.key_budget = key_budget;
        self.value_budget = value_budget;
        self
    }

    /// Size of the key domain seen by the perturbation (padding extends it for PCKV).
    pub fn extended_domain(&self) -> usize {
        match self.mechanism.family() {
            Family::Pckv => self.domain_size + self.padding,
            _ => self.domain_size,
        }
    }

    /// Length of vector-valued outputs, if the mechanism produces one.
    pub fn vector_len(&self) -> Option<usize> {
        match self.mechanism {
            Mechanism::Oue | Mechanism::The => Some(self.domain_size),
            Mechanism::CppUe | Mechanism::CppUeStar => Some(self.boundary_points),
            Mechanism::PckvUe => Some(self.domain_size + self.padding),
            _ => None,
        }
    }

    /// Number of rounds actually run (1 for single-round mechanisms).
    pub fn rounds(&self) -> usize {
        if self.mechanism.is_interactive() {
            self.iterations
        } else {
            1
        }
    }

    /// Budgets for round `iteration` (0-based). Interactive mechanisms spend the
    /// key budget only in the first round.
    pub fn round(&self, iteration: usize, mean: f64) -> Round {
        let key_budget = if self.mechanism.is_interactive() && iteration > 0 { 0.0 } else { self.key_budget };
        Round { key_budget, value_budget: self.value_budget, mean }
    }

    /// The single round of a non-interactive mechanism (mean feedback 0).
    pub fn first_round(&self) -> Round {
        self.round(0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.mechanism;
        let fail = |msg: String| Err(Error::Config(format!("{m}: {msg}")));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive and finite, got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.ownership) {
            return fail(format!("ownership probability {} outside [0, 1]", self.ownership));
        }
        if self.domain_size < 2 {
            return fail(format!("domain size must be at least 2, got {}", self.domain_size));
        }
        match m.family() {
            Family::Frequency => {
                if m == Mechanism::Rr && self.domain_size != 2 {
                    return fail("binary randomized response has a domain of size 2".into());
                }
                if m == Mechanism::The && !(self.threshold > 0.5 && self.threshold < 1.0) {
                    return fail(format!("threshold {} outside (0.5, 1)", self.threshold));
                }
            }
            Family::Cpp | Family::Pckv => {
                if !(self.key_budget > 0.0 && self.value_budget > 0.0) {
                    return fail("key and value budgets must be positive".into());
                }
                let spent = self.key_budget + self.value_budget * self.rounds() as f64;
                if spent > self.epsilon * (1.0 + 1e-12) {
                    return fail(format!("budget split spends {spent} > epsilon {}", self.epsilon));
                }
            }
        }
        match m.family() {
            Family::Cpp => {
                if self.boundary_points < 2 || !self.boundary_points.is_multiple_of(2) {
                    return fail(format!(
                        "boundary point count must be even and at least 2, got {}",
                        self.boundary_points
                    ));
                }
                if self.audited_key >= self.domain_size {
                    return fail(format!("audited key {} outside domain", self.audited_key));
                }
                if self.iterations < 1 {
                    return fail("at least one iteration is required".into());
                }
            }
            Family::Pckv => {
                if self.padding < 1 {
                    return fail("padding length must be at least 1".into());
                }
            }
            Family::Frequency => {}
        }
        Ok(())
    }
}
