use std::fmt;

/// Output of one mechanism invocation (or of a vertical extraction from one).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerturbedRecord {
    /// GRR / RR category index.
    Category(u32),
    /// OUE / THE support set over the item domain.
    SupportSet(Vec<bool>),
    /// CPP with GRR value: key bit and boundary-point index (absent when the key bit is 0).
    KeyedLevel { key: bool, level: Option<u32> },
    /// CPP with unary value: key bit and the perturbed one-hot boundary vector.
    KeyedBits { key: bool, bits: Vec<bool> },
    /// PCKV-GRR: reported key and value sign.
    KeyValue { key: u32, positive: bool },
    /// PCKV-UE: per-position symbol in {-1, 0, +1}.
    SignedVector(Vec<i8>),
    /// Two symbols extracted from a vector output.
    SymbolPair(i8, i8),
}

impl PerturbedRecord {
    pub fn is_well_formed(&self) -> bool {
        match self {
            PerturbedRecord::KeyedLevel { key, level } => *key == level.is_some(),
            PerturbedRecord::KeyedBits { key, bits } => *key || bits.iter().all(|b| !b),
            PerturbedRecord::SignedVector(v) => v.iter().all(|s| (-1..=1).contains(s)),
            PerturbedRecord::SymbolPair(a, b) => (-1..=1).contains(a) && (-1..=1).contains(b),
            _ => true,
        }
    }

    /// Reported key bit for CPP records.
    pub fn key_bit(&self) -> Option<bool> {
        match self {
            PerturbedRecord::KeyedLevel { key, .. } | PerturbedRecord::KeyedBits { key, .. } => Some(*key),
            _ => None,
        }
    }
}

fn bits(f: &mut fmt::Formatter<'_>, bits: &[bool]) -> fmt::Result {
    for &b in bits {
        f.write_str(if b { "1" } else { "0" })?;
    }
    Ok(())
}

impl fmt::Display for PerturbedRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbedRecord::Category(c) => write!(f, "{c}"),
            PerturbedRecord::SupportSet(b) => bits(f, b),
            PerturbedRecord::KeyedLevel { key: false, .. } => f.write_str("<0,0>"),
            PerturbedRecord::KeyedLevel { level, .. } => write!(f, "<1,L{}>", level.unwrap_or(0)),
            PerturbedRecord::KeyedBits { key, bits: b } => {
                write!(f, "<{},", *key as u8)?;
                bits(f, b)?;
                f.write_str(">")
            }
            PerturbedRecord::KeyValue { key, positive } => write!(f, "<{key},{}>", if *positive { "+1" } else { "-1" }),
            PerturbedRecord::SignedVector(v) => {
                for s in v {
                    f.write_str(match s {
                        1 => "+",
                        -1 => "-",
                        _ => "0",
                    })?;
                }
                Ok(())
            }
            PerturbedRecord::SymbolPair(a, b) => write!(f, "({a},{b})"),
        }
    }
}
