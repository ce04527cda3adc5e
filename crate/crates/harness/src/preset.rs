//! Named experiment presets and their expansion into grid points.

use std::fmt;
use std::str::FromStr;

use kvaudit::audit::{construct_inputs, InputPairSpec, Mode, Target, View};
use kvaudit::interactive::SkvConfig;
use kvaudit::mechanisms::{perturb, Family, Mechanism, MechanismConfig};
use kvaudit::rng::SeedTree;

use crate::error::{HarnessError, Result};

/// Privacy-loss grid used by every preset unless overridden.
pub const DEFAULT_EPSILONS: [f64; 8] = [0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 4.0, 6.0];
/// Users per group at desk scale.
pub const DEFAULT_N: u64 = 1_000_000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Longest UE vector the whole-record auditor accepts without `--force`.
pub const HKV_MAX_POSITIONS: usize = 16;

/// How the two groups' outputs are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Procedure {
    /// Whole perturbed records (per round for interactive mechanisms).
    Hkv,
    /// The two audited positions of vector outputs.
    Vkv,
    /// Mean-substitution component, separated from the owners' reports.
    Mean,
    /// Squads of one value bucket against an imitator group.
    Skv,
}

impl Procedure {
    pub fn name(self) -> &'static str {
        match self {
            Procedure::Hkv => "hkv",
            Procedure::Vkv => "vkv",
            Procedure::Mean => "mean",
            Procedure::Skv => "skv",
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Procedure {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hkv" => Ok(Procedure::Hkv),
            "vkv" => Ok(Procedure::Vkv),
            "mean" => Ok(Procedure::Mean),
            "skv" => Ok(Procedure::Skv),
            _ => Err(HarnessError::config(format!("unknown auditor `{s}` (hkv, vkv, mean, skv)"))),
        }
    }
}

/// Structural parameters of one mechanism instance in a preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Variant {
    /// Appended to the mechanism name in the CSV when set.
    pub label: Option<String>,
    /// Vector length: item domain for frequency mechanisms, boundary points for CPP.
    pub bits: Option<usize>,
    /// Key domain size of key-value mechanisms.
    pub nkey: Option<usize>,
    /// PCKV padding length.
    pub pad: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: String,
    pub mechanism: Mechanism,
    pub procedure: Procedure,
    pub target: Target,
    pub epsilons: Vec<f64>,
    pub n: u64,
    pub alpha: f64,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    /// Round count for interactive mechanisms (mechanism default when unset).
    pub iterations: Option<usize>,
    /// Ownership probability (mechanism default when unset).
    pub ownership: Option<f64>,
    /// Stage-one repeats of the mean audit.
    pub repeats: usize,
    pub skv: SkvConfig,
    /// Lifts the HKV vector-length guard.
    pub force: bool,
}

/// Every preset name accepted by [`Preset::named`].
pub const PRESET_NAMES: [&str; 16] = [
    "rr-key",
    "grr",
    "oue",
    "oue-vkv",
    "the",
    "cpp-key",
    "cpp-ue-hkv",
    "cpp-ue-vkv",
    "cpp-grr",
    "pckv-ue-hkv",
    "pckv-ue-vkv",
    "pckv-grr",
    "pckv-ue-padding",
    "cpp-ue-star-mean",
    "cpp-grr-star",
    "skv",
];

impl Preset {
    /// A single-mechanism preset with the default grid.
    pub fn new(name: &str, mechanism: Mechanism, procedure: Procedure, target: Target) -> Self {
        Self {
            name: name.into(),
            mechanism,
            procedure,
            target,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            n: DEFAULT_N,
            alpha: DEFAULT_ALPHA,
            mode: Mode::Conservative,
            seeds: vec![0],
            variants: vec![Variant::default()],
            iterations: None,
            ownership: None,
            repeats: 10,
            skv: SkvConfig::default(),
            force: false,
        }
    }

    /// Ad-hoc preset for one mechanism: key target for frequency oracles, value
    /// target otherwise; mean audit for interactive mechanisms.
    pub fn for_mechanism(mechanism: Mechanism) -> Self {
        let target = if mechanism.family() == Family::Frequency { Target::Key } else { Target::Value };
        let procedure = if mechanism.is_interactive() { Procedure::Mean } else { Procedure::Hkv };
        Self::new("audit", mechanism, procedure, target)
    }

    pub fn named(name: &str) -> Result<Self> {
        use Mechanism::*;
        use Procedure::*;
        let p = match name {
            "rr-key" => Self::new(name, Rr, Hkv, Target::Key),
            "grr" => Self::new(name, Grr, Hkv, Target::Key),
            "oue" => Self::new(name, Oue, Hkv, Target::Key),
            "oue-vkv" => Self::new(name, Oue, Vkv, Target::Key),
            "the" => Self::new(name, The, Hkv, Target::Key),
            "cpp-key" => Self::new(name, CppGrr, Hkv, Target::Key),
            "cpp-ue-hkv" => Self::new(name, CppUe, Hkv, Target::Value),
            "cpp-ue-vkv" => Self::new(name, CppUe, Vkv, Target::Value),
            "cpp-grr" => Self::new(name, CppGrr, Hkv, Target::Value),
            "pckv-ue-hkv" => Self::new(name, PckvUe, Hkv, Target::Value),
            "pckv-ue-vkv" => Self::new(name, PckvUe, Vkv, Target::Value),
            "pckv-grr" => Self::new(name, PckvGrr, Hkv, Target::Value),
            "pckv-ue-padding" => Self {
                epsilons: vec![6.0],
                variants: [(4, 1), (3, 2), (2, 3)]
                    .into_iter()
                    .map(|(nkey, pad)| Variant {
                        label: Some(format!("nkey={nkey}/l={pad}")),
                        nkey: Some(nkey),
                        pad: Some(pad),
                        ..Variant::default()
                    })
                    .collect(),
                ..Self::new(name, PckvUe, Hkv, Target::Value)
            },
            "cpp-ue-star-mean" => Self::new(name, CppUeStar, Mean, Target::Value),
            "cpp-grr-star" => Self::new(name, CppGrrStar, Hkv, Target::Value),
            "skv" => Self::new(name, CppUeStar, Skv, Target::Value),
            _ => {
                return Err(HarnessError::config(format!(
                    "unknown preset `{name}`; available: {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Ok(p)
    }

    /// Mechanism configuration of `variant` at `epsilon`.
    pub fn config(&self, variant: &Variant, epsilon: f64) -> Result<MechanismConfig> {
        let m = self.mechanism;
        let mut cfg = MechanismConfig::new(m, epsilon);
        if let Some(c) = self.iterations {
            if !m.is_interactive() && c != 1 {
                return Err(HarnessError::config(format!("{m} is single-round; iterations must be 1")));
            }
            cfg = cfg.with_iterations(c);
        }
        if let Some(bits) = variant.bits {
            cfg = match m.family() {
                Family::Frequency => cfg.with_domain_size(bits),
                Family::Cpp => cfg.with_boundary_points(bits),
                Family::Pckv => {
                    return Err(HarnessError::config("PCKV vector length is nkey + pad; set those instead of bits"))
                }
            };
        }
        if let Some(nkey) = variant.nkey {
            if m.family() == Family::Frequency {
                return Err(HarnessError::config(format!("{m} has no key domain; use bits for its item domain")));
            }
            cfg = cfg.with_domain_size(nkey);
        }
        if let Some(pad) = variant.pad {
            if m.family() != Family::Pckv {
                return Err(HarnessError::config(format!("{m} does not pad")));
            }
            cfg = cfg.with_padding(pad);
        }
        if let Some(w) = self.ownership {
            cfg = cfg.with_ownership(w);
        }
        Ok(cfg)
    }

    /// Every (variant, ε, seed) combination, validated before anything runs.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        if self.epsilons.is_empty() || self.seeds.is_empty() || self.variants.is_empty() {
            return Err(HarnessError::config(format!("preset {} has an empty grid", self.name)));
        }
        if self.n == 0 {
            return Err(HarnessError::config("N must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        let mut points = Vec::new();
        for variant in &self.variants {
            for &epsilon in &self.epsilons {
                let cfg = self.config(variant, epsilon)?;
                let spec = self.check(&cfg)?;
                let mechanism = match &variant.label {
                    Some(l) => format!("{}/{l}", self.mechanism),
                    None => self.mechanism.to_string(),
                };
                for &seed in &self.seeds {
                    points.push(GridPoint {
                        preset: self.name.clone(),
                        mechanism: mechanism.clone(),
                        cfg: cfg.clone(),
                        spec,
                        procedure: self.procedure,
                        n: self.n,
                        alpha: self.alpha,
                        mode: self.mode,
                        seed,
                        repeats: self.repeats,
                        skv: self.skv,
                    });
                }
            }
        }
        Ok(points)
    }

    fn check(&self, cfg: &MechanismConfig) -> Result<InputPairSpec> {
        cfg.validate()?;
        let spec = construct_inputs(cfg, self.target)?;
        let m = cfg.mechanism;
        match self.procedure {
            Procedure::Mean | Procedure::Skv if !m.is_interactive() => {
                return Err(HarnessError::config(format!(
                    "the {} auditor needs an interactive mechanism, not {m}",
                    self.procedure
                )))
            }
            Procedure::Vkv if m.is_interactive() => {
                return Err(HarnessError::config(
                    "the vkv auditor is single-round; use hkv, mean or skv for interactive mechanisms",
                ))
            }
            Procedure::Mean if cfg.ownership >= 1.0 => {
                return Err(HarnessError::config("the mean auditor needs ownership below 1"))
            }
            Procedure::Mean if self.repeats == 0 => {
                return Err(HarnessError::config("the mean auditor needs at least one stage-one repeat"))
            }
            Procedure::Skv => {
                self.skv.squad_sizes(self.n)?;
                self.skv.squad_values(cfg.boundary_points)?;
            }
            Procedure::Hkv => {
                if let Some(len) = cfg.vector_len().filter(|&l| l > HKV_MAX_POSITIONS && !self.force) {
                    return Err(HarnessError::config(format!(
                        "whole-record auditing of a {len}-position vector spreads the reports over too many \
                         outcomes; use the vkv auditor or pass --force"
                    )));
                }
            }
            _ => {}
        }
        if self.procedure == Procedure::Vkv {
            // One draw through the view catches outputs it cannot cut.
            let mut rng = SeedTree::new(0).user_rng(0, 0, 0);
            let record = perturb(cfg, Some(&spec.kv1), &cfg.first_round(), &mut rng)?;
            View::for_auditor(kvaudit::audit::Auditor::Vkv, cfg, &spec).apply(&record)?;
        }
        Ok(spec)
    }
}

/// One mechanism instance at one ε and one seed.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub preset: String,
    /// Mechanism column of the CSV.
    pub mechanism: String,
    pub cfg: MechanismConfig,
    pub spec: InputPairSpec,
    pub procedure: Procedure,
    pub n: u64,
    pub alpha: f64,
    pub mode: Mode,
    pub seed: u64,
    pub repeats: usize,
    pub skv: SkvConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_expands() {
        for name in PRESET_NAMES {
            let p = Preset::named(name).unwrap();
            let grid = p.grid().unwrap();
            assert_eq!(grid.len(), p.variants.len() * p.epsilons.len() * p.seeds.len(), "{name}");
        }
    }

    #[test]
    fn hkv_guard_and_force() {
        let mut p = Preset::named("cpp-ue-hkv").unwrap();
        p.variants[0].bits = Some(32);
        assert!(matches!(p.grid(), Err(HarnessError::Config(_))));
        p.force = true;
        assert!(p.grid().is_ok());
        p.procedure = Procedure::Vkv;
        p.force = false;
        assert!(p.grid().is_ok());
    }

    #[test]
    fn mismatched_parameters_are_config_errors() {
        let mut p = Preset::named("oue").unwrap();
        p.variants[0].pad = Some(2);
        assert!(matches!(p.grid(), Err(HarnessError::Config(_))));
        let mut p = Preset::named("rr-key").unwrap();
        p.procedure = Procedure::Mean;
        assert!(matches!(p.grid(), Err(HarnessError::Config(_))));
        assert!(Preset::named("nope").is_err());
    }
}
