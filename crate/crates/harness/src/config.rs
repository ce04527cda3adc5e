//! Key-value config files and command-line overrides.
//!
//! A config file holds one `key = value` per line; blank lines and text after
//! `#` are ignored. Keys match the long flag names (`eps`, `n`, `alpha`,
//! `seed`, ...). Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use kvaudit::audit::{Mode, Target};
use kvaudit::mechanisms::Mechanism;

use crate::error::{HarnessError, Result};
use crate::preset::{Preset, Procedure};

/// Optional settings layered over a preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub mechanism: Option<Mechanism>,
    pub auditor: Option<Procedure>,
    pub target: Option<Target>,
    pub eps: Option<Vec<f64>>,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub mode: Option<Mode>,
    pub bits: Option<usize>,
    pub nkey: Option<usize>,
    pub pad: Option<usize>,
    pub iters: Option<usize>,
    pub ownership: Option<f64>,
    pub repeats: Option<usize>,
    pub split: Option<f64>,
    pub bucket: Option<usize>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub threads: Option<usize>,
    pub force: Option<bool>,
    pub no_timing: Option<bool>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut o = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("line {}: expected `key = value`", i + 1)))?;
            o.set(key.trim(), value.trim()).map_err(|e| match e {
                HarnessError::Config(msg) => HarnessError::Config(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(o)
    }

    /// Sets one setting from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('_', "-").as_str() {
            "mechanism" => self.mechanism = Some(value.parse()?),
            "auditor" => self.auditor = Some(value.parse()?),
            "target" => self.target = Some(value.parse()?),
            "eps" | "epsilon" => self.eps = Some(parse_list(value, parse_real)?),
            "n" => self.n = Some(parse_count(value)?),
            "alpha" => self.alpha = Some(parse_real(value)?),
            "seed" | "seeds" => self.seeds = Some(parse_seeds(value)?),
            "mode" => self.mode = Some(value.parse()?),
            "bits" => self.bits = Some(parse_count(value)? as usize),
            "nkey" => self.nkey = Some(parse_count(value)? as usize),
            "pad" => self.pad = Some(parse_count(value)? as usize),
            "iters" => self.iters = Some(parse_count(value)? as usize),
            "ownership" => self.ownership = Some(parse_real(value)?),
            "repeats" => self.repeats = Some(parse_count(value)? as usize),
            "split" => self.split = Some(parse_real(value)?),
            "bucket" => self.bucket = Some(parse_count(value)? as usize),
            "out" => self.out = Some(value.into()),
            "trace" => self.trace = Some(value.into()),
            "threads" => self.threads = Some(parse_count(value)? as usize),
            "force" => self.force = Some(parse_bool(value)?),
            "no-timing" => self.no_timing = Some(parse_bool(value)?),
            _ => return Err(HarnessError::config(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// `other`'s settings win where both are set.
    pub fn merge(self, other: Overrides) -> Overrides {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            mechanism, auditor, target, eps, n, alpha, seeds, mode, bits, nkey, pad, iters, ownership, repeats, split,
            bucket, out, trace, threads, force, no_timing
        )
    }

    /// Applies the experiment settings to `preset`. Structural overrides
    /// (`bits`, `nkey`, `pad`) apply to every variant.
    pub fn apply(&self, mut preset: Preset) -> Result<Preset> {
        if let Some(m) = self.mechanism {
            if m != preset.mechanism {
                if preset.name != "audit" {
                    return Err(HarnessError::config(format!(
                        "preset {} audits {}; run `audit --mechanism {m}` for another mechanism",
                        preset.name, preset.mechanism
                    )));
                }
                preset = Preset::for_mechanism(m);
            }
        }
        if let Some(a) = self.auditor {
            preset.procedure = a;
        }
        if let Some(t) = self.target {
            preset.target = t;
        }
        if let Some(eps) = &self.eps {
            preset.epsilons = eps.clone();
        }
        if let Some(n) = self.n {
            preset.n = n;
        }
        if let Some(alpha) = self.alpha {
            preset.alpha = alpha;
        }
        if let Some(seeds) = &self.seeds {
            preset.seeds = seeds.clone();
        }
        if let Some(mode) = self.mode {
            preset.mode = mode;
        }
        for v in &mut preset.variants {
            v.bits = self.bits.or(v.bits);
            v.nkey = self.nkey.or(v.nkey);
            v.pad = self.pad.or(v.pad);
        }
        if self.bits.is_some() || self.nkey.is_some() || self.pad.is_some() {
            preset.variants.dedup_by(|a, b| (a.bits, a.nkey, a.pad) == (b.bits, b.nkey, b.pad));
            if preset.variants.len() == 1 {
                preset.variants[0].label = None;
            }
        }
        if self.iters.is_some() {
            preset.iterations = self.iters;
        }
        if self.ownership.is_some() {
            preset.ownership = self.ownership;
        }
        if let Some(r) = self.repeats {
            preset.repeats = r;
        }
        if let Some(s) = self.split {
            preset.skv.split = s;
        }
        if self.bucket.is_some() {
            preset.skv.bucket = self.bucket;
        }
        if let Some(f) = self.force {
            preset.force = f;
        }
        Ok(preset)
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    match s.to_ascii_lowercase().as_str() {
        "ln3" | "ln(3)" => return Ok(3f64.ln()),
        _ => {}
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| HarnessError::config(format!("`{s}` is not a finite number")))
}

/// Non-negative integer; scientific notation such as `1e6` is accepted.
fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as u64),
        _ => Err(HarnessError::config(format!("`{s}` is not a non-negative integer"))),
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(HarnessError::config(format!("`{s}` is not a boolean"))),
    }
}

fn parse_list<T>(s: &str, item: fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = s.split(',').filter(|p| !p.trim().is_empty()).map(item).collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(HarnessError::config("empty list"));
    }
    Ok(items)
}

/// A comma list of seeds and half-open ranges `a..b`.
fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse_count(a)?, parse_count(b)?);
                if a >= b {
                    return Err(HarnessError::config(format!("empty seed range `{part}`")));
                }
                seeds.extend(a..b);
            }
            None => seeds.push(parse_count(part)?),
        }
    }
    if seeds.is_empty() {
        return Err(HarnessError::config("empty seed list"));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let o = Overrides::parse(
            "# comment\nmechanism = oue\neps = 0.4, 0.8  # two points\nn = 1e5\nseed = 0..3,7\nmode = per-outcome\n\nforce = yes\n",
        )
        .unwrap();
        assert_eq!(o.mechanism, Some(Mechanism::Oue));
        assert_eq!(o.eps, Some(vec![0.4, 0.8]));
        assert_eq!(o.n, Some(100_000));
        assert_eq!(o.seeds, Some(vec![0, 1, 2, 7]));
        assert_eq!(o.mode, Some(Mode::PerOutcome));
        assert_eq!(o.force, Some(true));
    }

    #[test]
    fn bad_lines_are_config_errors() {
        for text in ["eps 0.4", "colour = red", "n = 1.5", "seed = 4..2", "eps = inf", "eps = "] {
            assert!(matches!(Overrides::parse(text), Err(HarnessError::Config(_))), "{text}");
        }
        assert!(matches!(Overrides::parse("mechanism = nope"), Err(HarnessError::Audit(_))));
    }

    #[test]
    fn later_layer_wins() {
        let file = Overrides::parse("n = 100\nalpha = 0.1").unwrap();
        let flags = Overrides { n: Some(5), ..Overrides::default() };
        let merged = file.merge(flags);
        assert_eq!(merged.n, Some(5));
        assert_eq!(merged.alpha, Some(0.1));
    }

    #[test]
    fn structural_overrides_collapse_variants() {
        let p = Preset::named("pckv-ue-padding").unwrap();
        let o = Overrides { nkey: Some(2), pad: Some(3), ..Overrides::default() };
        let p = o.apply(p).unwrap();
        assert_eq!(p.variants.len(), 1);
        assert_eq!(p.variants[0].label, None);
    }
}
