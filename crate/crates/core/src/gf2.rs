//! Bit strings over GF(2) and the parity code used for error correction and
//! privacy amplification.
//!
//! Position `i` of a string (0-based, left to right) is the `i`-th key bit.
//! When a string of length `n` names a computational basis state, position 0
//! is the most significant bit: `j ↦ Σ j_i 2^{n−1−i}`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default limit on `n − r − 1` for solution enumeration and on `r` for
/// coset enumeration.
pub const DEFAULT_ENUM_CAP: usize = 20;

/// Environment variable overriding [`DEFAULT_ENUM_CAP`].
pub const ENUM_CAP_ENV: &str = "BB84_ENUM_CAP";

/// The enumeration cap, read once from [`ENUM_CAP_ENV`].
pub fn enumeration_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(ENUM_CAP_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_ENUM_CAP)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("bit string must be non-empty")]
    Empty,
    #[error("invalid bit character {0:?}")]
    Parse(char),
    #[error("invalid parity code: {0}")]
    Code(String),
    #[error("enumeration of 2^{exponent} items exceeds cap 2^{cap}")]
    Capacity { exponent: usize, cap: usize },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            s.set(i, true);
        }
        s
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// The length-`len` string whose big-endian value is `index`.
    pub fn from_index(index: usize, len: usize) -> Self {
        let mut s = Self::zeros(len);
        for i in 0..len {
            let shift = len - 1 - i;
            s.set(i, shift < usize::BITS as usize && (index >> shift) & 1 == 1);
        }
        s
    }

    /// Big-endian basis index. Panics for strings longer than `usize::BITS`.
    pub fn to_index(&self) -> usize {
        assert!(self.len <= usize::BITS as usize, "string of length {} has no usize index", self.len);
        (0..self.len).fold(0usize, |acc, i| (acc << 1) | usize::from(self.get(i)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Positions holding a one.
    pub fn ones_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::Length(self.len, other.len));
        }
        Ok(BitString { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect() })
    }

    fn xor_assign(&mut self, other: &BitString) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn first_one(&self) -> Option<usize> {
        self.words.iter().enumerate().find(|(_, &w)| w != 0).map(|(k, w)| k * 64 + w.trailing_zeros() as usize)
    }

    /// Lexicographic comparison of the bit sequences.
    fn lex_cmp(&self, other: &BitString) -> std::cmp::Ordering {
        (0..self.len.min(other.len))
            .map(|i| self.get(i).cmp(&other.get(i)))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.len.cmp(&other.len))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Gf2Error::Parse(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if bits.is_empty() {
            return Err(Gf2Error::Empty);
        }
        Ok(Self::from_bools(&bits))
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `x · v = Σ x_i v_i mod 2`.
pub fn dot(x: &BitString, v: &BitString) -> Result<u8, Gf2Error> {
    if x.len != v.len {
        return Err(Gf2Error::Length(x.len, v.len));
    }
    let ones: u32 = x.words.iter().zip(&v.words).map(|(a, b)| (a & b).count_ones()).sum();
    Ok((ones & 1) as u8)
}

/// Rank over GF(2) by elimination.
pub fn rank(vs: &[BitString]) -> Result<usize, Gf2Error> {
    if let Some(first) = vs.first() {
        if let Some(bad) = vs.iter().find(|v| v.len != first.len) {
            return Err(Gf2Error::Length(first.len, bad.len));
        }
    }
    let mut basis: Vec<(usize, BitString)> = Vec::new();
    for v in vs {
        let mut r = v.clone();
        for (pivot, b) in &basis {
            if r.get(*pivot) {
                r.xor_assign(b);
            }
        }
        if let Some(p) = r.first_one() {
            // keep the basis reduced at every pivot
            for (_, b) in basis.iter_mut() {
                if b.get(p) {
                    b.xor_assign(&r);
                }
            }
            basis.push((p, r));
        }
    }
    Ok(basis.len())
}

pub fn is_independent(vs: &[BitString]) -> Result<bool, Gf2Error> {
    Ok(rank(vs)? == vs.len())
}

/// Privacy-amplification string `v` plus the public error-correction
/// equations `v_i · x = b_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParityCode", into = "RawParityCode")]
pub struct ParityCode {
    v: BitString,
    ecc_strings: Vec<BitString>,
    ecc_bits: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct RawParityCode {
    v: BitString,
    #[serde(default)]
    ecc_strings: Vec<BitString>,
    #[serde(default)]
    ecc_bits: Vec<u8>,
}

impl TryFrom<RawParityCode> for ParityCode {
    type Error = Gf2Error;
    fn try_from(raw: RawParityCode) -> Result<Self, Self::Error> {
        ParityCode::new(raw.v, raw.ecc_strings, raw.ecc_bits)
    }
}

impl From<ParityCode> for RawParityCode {
    fn from(c: ParityCode) -> Self {
        RawParityCode { v: c.v, ecc_strings: c.ecc_strings, ecc_bits: c.ecc_bits }
    }
}

impl ParityCode {
    pub fn new(v: BitString, ecc_strings: Vec<BitString>, ecc_bits: Vec<u8>) -> Result<Self, Gf2Error> {
        let n = v.len();
        if n == 0 {
            return Err(Gf2Error::Empty);
        }
        if ecc_strings.len() != ecc_bits.len() {
            return Err(Gf2Error::Code(format!(
                "{} error-correction strings but {} parity bits",
                ecc_strings.len(),
                ecc_bits.len()
            )));
        }
        if let Some(bad) = ecc_bits.iter().find(|&&b| b > 1) {
            return Err(Gf2Error::Code(format!("parity bit {bad} is not 0 or 1")));
        }
        if let Some(bad) = ecc_strings.iter().find(|s| s.len() != n) {
            return Err(Gf2Error::Length(n, bad.len()));
        }
        if v.is_zero() {
            return Err(Gf2Error::Code("privacy-amplification string v is all zeros".into()));
        }
        if ecc_strings.len() >= n {
            return Err(Gf2Error::Code(format!("r = {} must be below n = {n}", ecc_strings.len())));
        }
        let mut all = vec![v.clone()];
        all.extend(ecc_strings.iter().cloned());
        if !is_independent(&all)? {
            return Err(Gf2Error::Code("v, v_1, ..., v_r are linearly dependent".into()));
        }
        Ok(Self { v, ecc_strings, ecc_bits })
    }

    /// A code with no error-correction equations.
    pub fn privacy_only(v: BitString) -> Result<Self, Gf2Error> {
        Self::new(v, Vec::new(), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn r(&self) -> usize {
        self.ecc_strings.len()
    }

    pub fn v(&self) -> &BitString {
        &self.v
    }

    pub fn ecc_strings(&self) -> &[BitString] {
        &self.ecc_strings
    }

    pub fn ecc_bits(&self) -> &[u8] {
        &self.ecc_bits
    }

    /// Bits of the coset label `s` with index `k`, position 0 most significant.
    pub fn coset_label(&self, k: usize) -> Vec<u8> {
        let r = self.r();
        (0..r).map(|i| ((k >> (r - 1 - i)) & 1) as u8).collect()
    }

    /// `v ⊕ v_s` with `v_s = Σ s_i v_i` for the coset label of index `k`.
    pub fn coset_string(&self, k: usize) -> BitString {
        let mut out = self.v.clone();
        for (i, s_i) in self.coset_label(k).into_iter().enumerate() {
            if s_i == 1 {
                out.xor_assign(&self.ecc_strings[i]);
            }
        }
        out
    }

    /// `s · b`.
    pub fn coset_sign_bit(&self, k: usize) -> u8 {
        self.coset_label(k).iter().zip(&self.ecc_bits).fold(0, |acc, (s, b)| acc ^ (s & b))
    }

    /// Whether `x` satisfies every error-correction equation.
    pub fn satisfies_ecc(&self, x: &BitString) -> Result<bool, Gf2Error> {
        for (vi, &bi) in self.ecc_strings.iter().zip(&self.ecc_bits) {
            if dot(x, vi)? != bi {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// All `x` with `x · v = key_bit` and `x · v_i = b_i`, in lexicographic order.
pub fn enumerate_solutions(code: &ParityCode, key_bit: u8) -> Result<Vec<BitString>, Gf2Error> {
    enumerate_solutions_with_cap(code, key_bit, enumeration_cap())
}

pub fn enumerate_solutions_with_cap(code: &ParityCode, key_bit: u8, cap: usize) -> Result<Vec<BitString>, Gf2Error> {
    let n = code.n();
    let free_count = n - code.r() - 1;
    if free_count > cap {
        return Err(Gf2Error::Capacity { exponent: free_count, cap });
    }

    // Reduced row echelon form of [v; v_1 .. v_r | key_bit; b_1 .. b_r].
    let mut rows: Vec<(BitString, u8)> = std::iter::once((code.v.clone(), key_bit & 1))
        .chain(code.ecc_strings.iter().cloned().zip(code.ecc_bits.iter().copied()))
        .collect();
    let mut pivots = Vec::with_capacity(rows.len());
    for k in 0..rows.len() {
        let p = rows[k].0.first_one().expect("rows are independent");
        let (pivot_row, pivot_rhs) = rows[k].clone();
        for (other, (bits, rhs)) in rows.iter_mut().enumerate() {
            if other != k && bits.get(p) {
                bits.xor_assign(&pivot_row);
                *rhs ^= pivot_rhs;
            }
        }
        pivots.push(p);
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    debug_assert_eq!(free.len(), free_count);

    let mut out = Vec::with_capacity(1 << free_count);
    for assignment in 0..(1usize << free_count) {
        let mut x = BitString::zeros(n);
        for (t, &col) in free.iter().enumerate() {
            x.set(col, (assignment >> (free_count - 1 - t)) & 1 == 1);
        }
        for ((bits, rhs), &p) in rows.iter().zip(&pivots) {
            // Pivot columns of other rows are zero in this row, so only free
            // columns contribute.
            let mut val = *rhs;
            for &col in &free {
                if bits.get(col) && x.get(col) {
                    val ^= 1;
                }
            }
            x.set(p, val == 1);
        }
        out.push(x);
    }
    out.sort_by(|a, b| a.lex_cmp(b));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosetWeight {
    /// Coset label, one bit per error-correction equation.
    pub s: Vec<u8>,
    /// Hamming weight of `v ⊕ v_s`.
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosetWeights {
    pub entries: Vec<CosetWeight>,
    /// `n̂ = min_s n̂_s`.
    pub min_weight: usize,
    /// `n̂ / n`.
    pub alpha: f64,
}

pub fn coset_weights(code: &ParityCode) -> Result<CosetWeights, Gf2Error> {
    coset_weights_with_cap(code, enumeration_cap())
}

pub fn coset_weights_with_cap(code: &ParityCode, cap: usize) -> Result<CosetWeights, Gf2Error> {
    let r = code.r();
    if r > cap {
        return Err(Gf2Error::Capacity { exponent: r, cap });
    }
    let entries: Vec<CosetWeight> = (0..(1usize << r))
        .map(|k| CosetWeight { s: code.coset_label(k), weight: code.coset_string(k).weight() })
        .collect();
    let min_weight = entries.iter().map(|e| e.weight).min().expect("at least one coset");
    Ok(CosetWeights { alpha: min_weight as f64 / code.n() as f64, min_weight, entries })
}
