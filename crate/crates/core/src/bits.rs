//! Packed bitstrings.
//!
//! [`BitString`] is the common currency of the crate: basis labels of the
//! sparse simulator, hidden-bit strings, BB84 descriptors, commitments and
//! proofs are all bitstrings. Bit `i` lives in word `i / 64` at position
//! `i % 64`; bits past `len` are always zero so that derived equality and
//! hashing are sound.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit character {0:?}")]
pub struct ParseBitsError(pub char);

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self { len, words: vec![u64::MAX; words_for(len)] };
        b.mask_tail();
        b
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self { len: 0, words: Vec::with_capacity(words_for(bits)) }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut b = Self { len, words: (0..words_for(len)).map(|_| rng.gen()).collect() };
        b.mask_tail();
        b
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::new();
        for bit in bits {
            out.push(bit);
        }
        out
    }

    /// Little-end first: bit `i` of the result is bit `i` of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut b = Self { len, words: if len == 0 { vec![] } else { vec![value] } };
        b.mask_tail();
        b
    }

    pub fn from_u128(value: u128, len: usize) -> Self {
        assert!(len <= 128);
        let mut b = Self::zeros(len);
        for i in 0..len {
            b.set(i, (value >> i) & 1 == 1);
        }
        b
    }

    /// Inverse of [`BitString::from_u64`]; panics if longer than 64 bits.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn to_u128(&self) -> u128 {
        assert!(self.len <= 128);
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len & 63 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            let i = self.len - 1;
            self.words[i >> 6] |= 1u64 << (i & 63);
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        if self.len & 63 == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        let mut off = 0;
        while off < other.len {
            let w = (other.len - off).min(64);
            self.push_bits(w, other.get_bits(off, w));
            off += w;
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        assert!(start <= end && end <= self.len, "slice {start}..{end} out of range for length {}", self.len);
        let mut out = BitString::with_capacity(end - start);
        let mut off = start;
        while off < end {
            let w = (end - off).min(64);
            out.push_bits(w, self.get_bits(off, w));
            off += w;
        }
        out
    }

    /// Reads `width ≤ 64` bits starting at `start` as an integer (bit `start` is the low bit).
    #[inline]
    pub fn get_bits(&self, start: usize, width: usize) -> u64 {
        assert!(width <= 64 && start + width <= self.len);
        if width == 0 {
            return 0;
        }
        let w = start >> 6;
        let off = start & 63;
        let mut v = self.words[w] >> off;
        if off + width > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        if width == 64 {
            v
        } else {
            v & ((1u64 << width) - 1)
        }
    }

    /// Overwrites `width ≤ 64` bits starting at `start` with the low bits of `value`.
    #[inline]
    pub fn set_bits(&mut self, start: usize, width: usize, value: u64) {
        assert!(width <= 64 && start + width <= self.len);
        if width == 0 {
            return;
        }
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        let value = value & mask;
        let w = start >> 6;
        let off = start & 63;
        self.words[w] = (self.words[w] & !(mask << off)) | (value << off);
        if off + width > 64 {
            let spill = off + width - 64;
            let hi_mask = (1u64 << spill) - 1;
            self.words[w + 1] = (self.words[w + 1] & !hi_mask) | (value >> (64 - off));
        }
    }

    /// Appends the low `width` bits of `value`.
    pub fn push_bits(&mut self, width: usize, value: u64) {
        let start = self.len;
        self.len += width;
        self.words.resize(words_for(self.len), 0);
        self.set_bits(start, width, value);
    }

    /// Copies `src` into `self[offset..offset + src.len()]`.
    pub fn write_at(&mut self, offset: usize, src: &BitString) {
        assert!(offset + src.len <= self.len);
        let mut off = 0;
        while off < src.len {
            let w = (src.len - off).min(64);
            self.set_bits(offset + off, w, src.get_bits(off, w));
            off += w;
        }
    }

    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len, other.len, "xor of bitstrings with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn and(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len);
        BitString {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn not(&self) -> BitString {
        let mut out = BitString { len: self.len, words: self.words.iter().map(|w| !w).collect() };
        out.mask_tail();
        out
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u32, |acc, w| acc ^ (w.count_ones() & 1)) == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| (self.words[i >> 6] >> (i & 63)) & 1 == 1)
    }

    pub fn ones_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packs bits little-endian into bytes (bit `i` → byte `i/8`, bit `i%8`).
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(nbytes);
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<BitString> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut words = vec![0u64; words_for(len)];
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words[i] = u64::from_le_bytes(buf);
        }
        let b = BitString { len, words };
        let mut check = b.clone();
        check.mask_tail();
        (check == b).then_some(b)
    }

    fn mask_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
        self.words.truncate(words_for(self.len));
    }
}

impl Ord for BitString {
    /// Lexicographic order on the bit sequence, shorter prefix first.
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.len.min(other.len);
        let full = common >> 6;
        for w in 0..=full.min(self.words.len().saturating_sub(1)) {
            if w >= other.words.len() {
                break;
            }
            let bits_here = if w < full { 64 } else { common & 63 };
            if bits_here == 0 {
                break;
            }
            let mask = if bits_here == 64 { u64::MAX } else { (1u64 << bits_here) - 1 };
            let diff = (self.words[w] ^ other.words[w]) & mask;
            if diff != 0 {
                let pos = diff.trailing_zeros();
                return if (self.words[w] >> pos) & 1 == 0 { Ordering::Less } else { Ordering::Greater };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                '_' | ' ' => {}
                other => return Err(ParseBitsError(other)),
            }
        }
        Ok(out)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        BitString::from_bools(iter)
    }
}

/// Shorthand used throughout tests: `bits("0110")`.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("invalid bit literal")
}
