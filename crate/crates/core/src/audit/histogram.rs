//! Output histograms keyed by canonical record encoding, plus the binary sidecar format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mechanisms::{Mechanism, PerturbedRecord};

use super::encode::{canonical_decode, canonical_encode};

const MAGIC: &[u8; 4] = b"KVAH";
const VERSION: u8 = 1;

/// Descriptive labels carried alongside the counts (not persisted in the sidecar).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HistogramMeta {
    pub group: String,
    pub mechanism: Option<Mechanism>,
    pub iteration: usize,
}

impl HistogramMeta {
    pub fn new(group: impl Into<String>, mechanism: Mechanism, iteration: usize) -> Self {
        Self { group: group.into(), mechanism: Some(mechanism), iteration }
    }
}

/// Counts per distinct output. Only outcomes with a positive count are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutputHistogram {
    counts: BTreeMap<Vec<u8>, u64>,
    total: u64,
    pub meta: HistogramMeta,
}

impl OutputHistogram {
    pub fn new(meta: HistogramMeta) -> Self {
        Self { counts: BTreeMap::new(), total: 0, meta }
    }

    pub fn from_counts<I, K>(counts: I) -> Self
    where
        I: IntoIterator<Item = (K, u64)>,
        K: Into<Vec<u8>>,
    {
        let mut h = Self::default();
        for (k, c) in counts {
            h.add_encoded(&k.into(), c);
        }
        h
    }

    /// Integer histogram closest to the expected (fractional) counts: each cell
    /// is rounded half-to-even, then cells are nudged by one in order of
    /// rounding remainder (ties by encoding) until the total equals `total`.
    pub fn from_expected<I>(meta: HistogramMeta, expected: I, total: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, f64)>,
    {
        let cells: Vec<(Vec<u8>, f64)> = expected.into_iter().filter(|(_, x)| *x > 0.0).collect();
        if cells.iter().any(|(_, x)| !x.is_finite()) {
            return Err(Error::Format("non-finite expected count".into()));
        }
        if cells.is_empty() && total > 0 {
            return Err(Error::Format("cannot distribute a positive total over an empty histogram".into()));
        }
        let mut rounded: Vec<u64> = cells.iter().map(|(_, x)| x.round_ties_even() as u64).collect();
        let remainder = |i: usize, r: &[u64]| cells[i].1 - r[i] as f64;
        let mut sum: u64 = rounded.iter().sum();
        while sum != total {
            let mut order: Vec<usize> = (0..cells.len()).collect();
            if sum < total {
                order.sort_by(|&a, &b| remainder(b, &rounded).total_cmp(&remainder(a, &rounded)).then(a.cmp(&b)));
                for i in order.into_iter().take((total - sum) as usize) {
                    rounded[i] += 1;
                    sum += 1;
                }
            } else {
                order.retain(|&i| rounded[i] > 0);
                order.sort_by(|&a, &b| remainder(a, &rounded).total_cmp(&remainder(b, &rounded)).then(a.cmp(&b)));
                for i in order.into_iter().take((sum - total) as usize) {
                    rounded[i] -= 1;
                    sum -= 1;
                }
            }
        }
        let mut h = Self::new(meta);
        for ((k, _), c) in cells.into_iter().zip(rounded) {
            h.add_encoded(&k, c);
        }
        Ok(h)
    }

    pub fn add_encoded(&mut self, encoding: &[u8], count: u64) {
        if count == 0 {
            return;
        }
        match self.counts.get_mut(encoding) {
            Some(c) => *c += count,
            None => {
                self.counts.insert(encoding.to_vec(), count);
            }
        }
        self.total += count;
    }

    pub fn add_record(&mut self, record: &PerturbedRecord) {
        self.add_encoded(&canonical_encode(record), 1);
    }

    pub fn count(&self, encoding: &[u8]) -> u64 {
        self.counts.get(encoding).copied().unwrap_or(0)
    }

    pub fn count_record(&self, record: &PerturbedRecord) -> u64 {
        self.count(&canonical_encode(record))
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct outcomes observed.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Outcomes in ascending encoding order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], u64)> {
        self.counts.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    /// Decoded outcomes with their counts.
    pub fn records(&self) -> Result<Vec<(PerturbedRecord, u64)>> {
        self.iter().map(|(k, c)| Ok((canonical_decode(k)?, c))).collect()
    }

    /// Adds `other`'s counts into `self`. Merging is commutative and associative.
    pub fn merge(&mut self, other: &OutputHistogram) {
        for (k, c) in other.iter() {
            self.add_encoded(k, c);
        }
    }

    /// Applies `f` to every outcome, summing counts of outcomes that collide.
    pub fn map_records<F>(&self, meta: HistogramMeta, mut f: F) -> Result<OutputHistogram>
    where
        F: FnMut(&PerturbedRecord) -> Result<PerturbedRecord>,
    {
        let mut out = OutputHistogram::new(meta);
        for (k, c) in self.iter() {
            out.add_encoded(&canonical_encode(&f(&canonical_decode(k)?)?), c);
        }
        Ok(out)
    }

    /// Keeps only outcomes satisfying `keep`.
    pub fn filter_records<F>(&self, mut keep: F) -> Result<OutputHistogram>
    where
        F: FnMut(&PerturbedRecord) -> bool,
    {
        let mut out = OutputHistogram::new(self.meta.clone());
        for (k, c) in self.iter() {
            if keep(&canonical_decode(k)?) {
                out.add_encoded(k, c);
            }
        }
        Ok(out)
    }

    /// Checks that every key decodes and the total matches the counts.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0u64;
        for (k, c) in self.iter() {
            canonical_decode(k)?;
            sum += c;
        }
        if sum != self.total {
            return Err(Error::Format(format!("total {} does not match count sum {sum}", self.total)));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION])?;
        w.write_all(&(self.counts.len() as u64).to_le_bytes())?;
        for (k, &c) in &self.counts {
            w.write_all(&(k.len() as u32).to_le_bytes())?;
            w.write_all(k)?;
            w.write_all(&c.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let fmt = |e: std::io::Error| Error::Format(format!("sidecar read failed: {e}"));
        let mut head = [0u8; 13];
        r.read_exact(&mut head).map_err(fmt)?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("bad sidecar magic".into()));
        }
        if head[4] != VERSION {
            return Err(Error::Format(format!("unsupported sidecar version {}", head[4])));
        }
        let entries = u64::from_le_bytes(head[5..13].try_into().expect("8 bytes"));
        let mut h = OutputHistogram::default();
        let mut prev: Option<Vec<u8>> = None;
        for _ in 0..entries {
            let mut len = [0u8; 4];
            r.read_exact(&mut len).map_err(fmt)?;
            let mut key = vec![0u8; u32::from_le_bytes(len) as usize];
            r.read_exact(&mut key).map_err(fmt)?;
            let mut count = [0u8; 8];
            r.read_exact(&mut count).map_err(fmt)?;
            let count = u64::from_le_bytes(count);
            canonical_decode(&key)?;
            if count == 0 || prev.as_ref().is_some_and(|p| *p >= key) {
                return Err(Error::Format("sidecar entries must be sorted, distinct and positive".into()));
            }
            h.add_encoded(&key, count);
            prev = Some(key);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(fmt)? != 0 {
            return Err(Error::Format("trailing bytes after sidecar entries".into()));
        }
        Ok(h)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let file = File::create(path).map_err(io)?;
        self.write_to(BufWriter::new(file)).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::read_from(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(c: u32) -> Vec<u8> {
        canonical_encode(&PerturbedRecord::Category(c))
    }

    #[test]
    fn totals_track_counts() {
        let mut h = OutputHistogram::from_counts([(cat(0), 3), (cat(1), 0), (cat(0), 2)]);
        assert_eq!(h.total(), 5);
        assert_eq!(h.support_len(), 1);
        h.merge(&OutputHistogram::from_counts([(cat(2), 4)]));
        assert_eq!(h.total(), 9);
        h.validate().unwrap();
    }

    #[test]
    fn expected_counts_renormalize() {
        // 2.5 -> 2 and 3.5 -> 4 (half-to-even), 1.5 -> 2: sum 8, one too many.
        let cells = vec![(cat(0), 2.5), (cat(1), 3.5), (cat(2), 1.5), (cat(3), 0.0)];
        let h = OutputHistogram::from_expected(HistogramMeta::default(), cells, 7).unwrap();
        assert_eq!(h.total(), 7);
        assert_eq!(h.support_len(), 3);
        let h =
            OutputHistogram::from_expected(HistogramMeta::default(), vec![(cat(0), 0.4), (cat(1), 0.4)], 3).unwrap();
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn sidecar_round_trip_and_corruption() {
        let h = OutputHistogram::from_counts([(cat(5), 10), (cat(1), 7)]);
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"KVAH");
        assert_eq!(OutputHistogram::read_from(buf.as_slice()).unwrap(), h);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(OutputHistogram::read_from(bad.as_slice()).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(OutputHistogram::read_from(long.as_slice()).is_err());
        assert!(OutputHistogram::read_from(&buf[..buf.len() - 1]).is_err());
    }
}
