//! Neighbouring-input construction.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mechanisms::{Family, KvPair, MechanismConfig};

/// Component whose leakage is audited.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Key,
    Value,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Key => "key",
            Target::Value => "value",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "key" => Ok(Target::Key),
            "value" => Ok(Target::Value),
            _ => Err(Error::config(format!("unknown audit target `{s}`"))),
        }
    }
}

/// The two inputs held by the two simulated groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputPairSpec {
    pub kv1: KvPair,
    pub kv2: KvPair,
    pub target: Target,
    pub rationale: &'static str,
}

impl InputPairSpec {
    pub fn input(&self, group: usize) -> &KvPair {
        if group == 0 {
            &self.kv1
        } else {
            &self.kv2
        }
    }
}

/// Boundary inputs for the audited component.
///
/// Value audits use the extreme values `1` and `-1`. For the key-bit family
/// both pairs sit on the reported key, so only the value differs; a key audit
/// moves the second pair to another key. Padding-and-sampling inputs always
/// use different keys, which makes a separate key audit meaningless there.
/// Keys are fixed rather than drawn: every mechanism here treats keys
/// symmetrically, so the choice does not change the output distributions.
pub fn construct_inputs(cfg: &MechanismConfig, target: Target) -> Result<InputPairSpec> {
    let d = cfg.domain_size;
    if d < 2 {
        return Err(Error::config("input construction needs at least two keys"));
    }
    let pair = |k, v| KvPair::new(k, v);
    match (cfg.mechanism.family(), target) {
        (Family::Frequency, Target::Key) => {
            Ok(InputPairSpec { kv1: pair(0, 0.0)?, kv2: pair(1, 0.0)?, target, rationale: "distinct items" })
        }
        (Family::Frequency, Target::Value) => {
            Err(Error::config(format!("{} has no value component to audit", cfg.mechanism)))
        }
        (Family::Cpp, Target::Value) => {
            let k = cfg.audited_key;
            Ok(InputPairSpec { kv1: pair(k, 1.0)?, kv2: pair(k, -1.0)?, target, rationale: "same key, extreme values" })
        }
        (Family::Cpp, Target::Key) => {
            let k = cfg.audited_key;
            Ok(InputPairSpec {
                kv1: pair(k, 1.0)?,
                kv2: pair((k + 1) % d, 1.0)?,
                target,
                rationale: "audited key against another key, equal values",
            })
        }
        (Family::Pckv, Target::Value) => Ok(InputPairSpec {
            kv1: pair(0, 1.0)?,
            kv2: pair(1, -1.0)?,
            target,
            rationale: "different keys, extreme values",
        }),
        (Family::Pckv, Target::Key) => {
            Err(Error::config(format!("{} inputs always differ in key; audit the value target", cfg.mechanism)))
        }
    }
}
