//! Canonical byte encoding of perturbed records.
//!
//! One tag byte, then the payload. Ternary symbols take 2 bits each and binary
//! vectors 1 bit each, packed least-significant first; indices and lengths are
//! 4-byte little-endian. Decoding rejects anything `encode` cannot produce
//! (trailing bytes, non-zero padding bits, the unused ternary code), so the map
//! is a bijection onto its image.

use crate::error::{Error, Result};
use crate::mechanisms::PerturbedRecord;

const SIGNED_VECTOR: u8 = 0x01;
const KEYED_BITS: u8 = 0x02;
const KEYED_LEVEL: u8 = 0x03;
const KEY_VALUE: u8 = 0x04;
const SUPPORT_SET: u8 = 0x05;
const CATEGORY: u8 = 0x06;
const SYMBOL_PAIR: u8 = 0x07;

pub fn canonical_encode(record: &PerturbedRecord) -> Vec<u8> {
    let mut out = Vec::with_capacity(16);
    encode_into(record, &mut out);
    out
}

/// Appends the encoding of `record` to `out`.
pub fn encode_into(record: &PerturbedRecord, out: &mut Vec<u8>) {
    match record {
        PerturbedRecord::SignedVector(v) => {
            out.push(SIGNED_VECTOR);
            put_u32(out, v.len());
            pack(out, v.iter().map(|&s| ternary_code(s)), 2);
        }
        PerturbedRecord::KeyedBits { key, bits } => {
            out.push(KEYED_BITS);
            out.push(*key as u8);
            put_u32(out, bits.len());
            pack(out, bits.iter().map(|&b| b as u8), 1);
        }
        PerturbedRecord::KeyedLevel { key, level } => {
            out.push(KEYED_LEVEL);
            out.push(*key as u8);
            if let Some(l) = level {
                out.extend_from_slice(&l.to_le_bytes());
            }
        }
        PerturbedRecord::KeyValue { key, positive } => {
            out.push(KEY_VALUE);
            out.extend_from_slice(&key.to_le_bytes());
            out.push(*positive as u8);
        }
        PerturbedRecord::SupportSet(bits) => {
            out.push(SUPPORT_SET);
            put_u32(out, bits.len());
            pack(out, bits.iter().map(|&b| b as u8), 1);
        }
        PerturbedRecord::Category(c) => {
            out.push(CATEGORY);
            out.extend_from_slice(&c.to_le_bytes());
        }
        PerturbedRecord::SymbolPair(a, b) => {
            out.push(SYMBOL_PAIR);
            out.push(ternary_code(*a) | ternary_code(*b) << 2);
        }
    }
}

fn ternary_code(s: i8) -> u8 {
    match s {
        0 => 0,
        1 => 1,
        _ => 2,
    }
}

fn ternary_symbol(code: u8) -> Result<i8> {
    match code {
        0 => Ok(0),
        1 => Ok(1),
        2 => Ok(-1),
        _ => Err(Error::Format(format!("invalid ternary code {code}"))),
    }
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&u32::try_from(n).expect("vector length fits in u32").to_le_bytes());
}

fn pack(out: &mut Vec<u8>, codes: impl Iterator<Item = u8>, width: u32) {
    let per_byte = 8 / width;
    let mut byte = 0u8;
    let mut filled = 0;
    for c in codes {
        byte |= c << (filled * width);
        filled += 1;
        if filled == per_byte {
            out.push(byte);
            byte = 0;
            filled = 0;
        }
    }
    if filled > 0 {
        out.push(byte);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Format("truncated record encoding".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool> {
        match self.byte()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Format(format!("invalid flag byte {b}"))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn unpack(&mut self, len: usize, width: u32) -> Result<Vec<u8>> {
        let per_byte = (8 / width) as usize;
        let bytes = self.take(len.div_ceil(per_byte))?;
        let mask = (1u8 << width) - 1;
        let codes: Vec<u8> = (0..len).map(|i| bytes[i / per_byte] >> ((i % per_byte) as u32 * width) & mask).collect();
        if !len.is_multiple_of(per_byte) {
            let used = (len % per_byte) as u32 * width;
            if bytes[bytes.len() - 1] >> used != 0 {
                return Err(Error::Format("non-zero padding bits".into()));
            }
        }
        Ok(codes)
    }

    fn finish(self) -> Result<()> {
        if self.bytes.is_empty() {
            Ok(())
        } else {
            Err(Error::Format(format!("{} trailing bytes", self.bytes.len())))
        }
    }
}

pub fn canonical_decode(bytes: &[u8]) -> Result<PerturbedRecord> {
    let mut r = Reader { bytes };
    let record = match r.byte()? {
        SIGNED_VECTOR => {
            let len = r.u32()? as usize;
            let v = r.unpack(len, 2)?.into_iter().map(ternary_symbol).collect::<Result<_>>()?;
            PerturbedRecord::SignedVector(v)
        }
        KEYED_BITS => {
            let key = r.flag()?;
            let len = r.u32()? as usize;
            let bits = r.unpack(len, 1)?.into_iter().map(|c| c == 1).collect();
            PerturbedRecord::KeyedBits { key, bits }
        }
        KEYED_LEVEL => {
            let key = r.flag()?;
            let level = if key { Some(r.u32()?) } else { None };
            PerturbedRecord::KeyedLevel { key, level }
        }
        KEY_VALUE => {
            let key = r.u32()?;
            PerturbedRecord::KeyValue { key, positive: r.flag()? }
        }
        SUPPORT_SET => {
            let len = r.u32()? as usize;
            PerturbedRecord::SupportSet(r.unpack(len, 1)?.into_iter().map(|c| c == 1).collect())
        }
        CATEGORY => PerturbedRecord::Category(r.u32()?),
        SYMBOL_PAIR => {
            let b = r.byte()?;
            if b >> 4 != 0 {
                return Err(Error::Format("non-zero padding bits".into()));
            }
            PerturbedRecord::SymbolPair(ternary_symbol(b & 3)?, ternary_symbol(b >> 2 & 3)?)
        }
        tag => return Err(Error::Format(format!("unknown record tag {tag:#04x}"))),
    };
    r.finish()?;
    if !record.is_well_formed() {
        return Err(Error::Format(format!("ill-formed record {record:?}")));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        assert_eq!(canonical_encode(&PerturbedRecord::Category(258)), [CATEGORY, 2, 1, 0, 0]);
        assert_eq!(
            canonical_encode(&PerturbedRecord::SignedVector(vec![1, 0, -1])),
            [SIGNED_VECTOR, 3, 0, 0, 0, 0b10_00_01]
        );
        assert_eq!(
            canonical_encode(&PerturbedRecord::KeyedBits { key: true, bits: vec![true, false, false, true] }),
            [KEYED_BITS, 1, 4, 0, 0, 0, 0b1001]
        );
        assert_eq!(canonical_encode(&PerturbedRecord::KeyedLevel { key: false, level: None }), [KEYED_LEVEL, 0]);
    }

    #[test]
    fn mirrored_vectors_differ() {
        let a = canonical_encode(&PerturbedRecord::SignedVector(vec![1, 0, -1]));
        let b = canonical_encode(&PerturbedRecord::SignedVector(vec![-1, 0, 1]));
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_non_canonical_bytes() {
        assert!(canonical_decode(&[SIGNED_VECTOR, 1, 0, 0, 0, 0b11]).is_err());
        assert!(canonical_decode(&[SUPPORT_SET, 2, 0, 0, 0, 0b100]).is_err());
        assert!(canonical_decode(&[CATEGORY, 0, 0, 0, 0, 9]).is_err());
        assert!(canonical_decode(&[KEYED_BITS, 0, 1, 0, 0, 0, 1]).is_err());
        assert!(canonical_decode(&[0x42]).is_err());
        assert!(canonical_decode(&[]).is_err());
    }
}
