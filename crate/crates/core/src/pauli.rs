//! Pauli strings, distributions over them, and brute-force readout oracles.
//!
//! Symbols are encoded `0 = I`, `1 = X`, `2 = Y`, `3 = Z`, so that the product
//! of two single-qubit Paulis (up to phase) is the bitwise xor of their codes.
//! Strings of up to [`PACKED_MAX`] qubits are packed two bits per symbol into a
//! `u128`; longer strings fall back to one byte per symbol.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spam::SpamParams;

/// Largest qubit count stored in packed form.
pub const PACKED_MAX: usize = 64;

/// Largest qubit count accepted by [`exact_readout_distribution`].
pub const ORACLE_MAX_QUBITS: usize = 12;

const SYMBOL_CHARS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Whether single-qubit Paulis `a` and `b` anticommute.
///
/// Two Paulis anticommute exactly when both are non-identity and distinct.
#[inline]
pub fn anticommutes(a: u8, b: u8) -> bool {
    debug_assert!(a < 4 && b < 4);
    a != 0 && b != 0 && a != b
}

/// Collapse each 2-bit lane of `x` to one bit: bit `j` of the result is set
/// iff lane `j` (bits `2j`, `2j+1`) of `x` is nonzero.
#[inline]
pub(crate) fn nonzero_lanes(x: u128) -> u64 {
    let mut v = (x | (x >> 1)) & 0x5555_5555_5555_5555_5555_5555_5555_5555;
    v = (v | (v >> 1)) & 0x3333_3333_3333_3333_3333_3333_3333_3333;
    v = (v | (v >> 2)) & 0x0f0f_0f0f_0f0f_0f0f_0f0f_0f0f_0f0f_0f0f;
    v = (v | (v >> 4)) & 0x00ff_00ff_00ff_00ff_00ff_00ff_00ff_00ff;
    v = (v | (v >> 8)) & 0x0000_ffff_0000_ffff_0000_ffff_0000_ffff;
    v = (v | (v >> 16)) & 0x0000_0000_ffff_ffff_0000_0000_ffff_ffff;
    v = (v | (v >> 32)) & 0x0000_0000_0000_0000_ffff_ffff_ffff_ffff;
    v as u64
}

/// Bit mask of coordinates where packed strings `a` and `b` anticommute.
#[inline]
pub(crate) fn anticommute_mask(a: u128, b: u128) -> u64 {
    nonzero_lanes(a) & nonzero_lanes(b) & nonzero_lanes(a ^ b)
}

#[inline]
pub(crate) fn low_bits(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Symbols {
    Packed(u128),
    Unpacked(Box<[u8]>),
}

/// An n-qubit Pauli operator, up to phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    symbols: Symbols,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        if n <= PACKED_MAX {
            PauliString {
                n,
                symbols: Symbols::Packed(0),
            }
        } else {
            PauliString {
                n,
                symbols: Symbols::Unpacked(vec![0u8; n].into_boxed_slice()),
            }
        }
    }

    pub fn from_symbols(symbols: &[u8]) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s > 3) {
            return Err(Error::InvalidSymbol(char::from(b'0' + bad.min(9))));
        }
        let n = symbols.len();
        let symbols = if n <= PACKED_MAX {
            let mut word = 0u128;
            for (j, &s) in symbols.iter().enumerate() {
                word |= (s as u128) << (2 * j);
            }
            Symbols::Packed(word)
        } else {
            Symbols::Unpacked(symbols.to_vec().into_boxed_slice())
        };
        Ok(PauliString { n, symbols })
    }

    /// Build from a packed word. Lanes at or beyond `n` must be zero.
    pub fn from_packed(n: usize, word: u128) -> Result<Self> {
        if n > PACKED_MAX {
            return Err(Error::TooLarge {
                what: "packed qubit count",
                value: n,
                limit: PACKED_MAX,
            });
        }
        if n < PACKED_MAX && word >> (2 * n) != 0 {
            return Err(Error::param("packed word has symbols beyond n"));
        }
        Ok(PauliString {
            n,
            symbols: Symbols::Packed(word),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn symbol(&self, j: usize) -> u8 {
        assert!(
            j < self.n,
            "symbol index {j} out of range for length {}",
            self.n
        );
        match &self.symbols {
            Symbols::Packed(w) => ((w >> (2 * j)) & 3) as u8,
            Symbols::Unpacked(v) => v[j],
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.n).map(move |j| self.symbol(j))
    }

    pub fn to_symbols(&self) -> Vec<u8> {
        self.symbols().collect()
    }

    pub fn packed(&self) -> Option<u128> {
        match self.symbols {
            Symbols::Packed(w) => Some(w),
            Symbols::Unpacked(_) => None,
        }
    }

    /// Number of non-identity symbols.
    pub fn weight(&self) -> usize {
        match &self.symbols {
            Symbols::Packed(w) => nonzero_lanes(*w).count_ones() as usize,
            Symbols::Unpacked(v) => v.iter().filter(|&&s| s != 0).count(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// True when no symbol is the identity (a valid probe basis).
    pub fn is_fully_nontrivial(&self) -> bool {
        self.weight() == self.n
    }

    /// Coordinatewise product up to phase.
    pub fn xor(&self, other: &PauliString) -> Result<PauliString> {
        Error::check_len(self.n, other.n)?;
        let symbols = match (&self.symbols, &other.symbols) {
            (Symbols::Packed(a), Symbols::Packed(b)) => Symbols::Packed(a ^ b),
            (Symbols::Unpacked(a), Symbols::Unpacked(b)) => {
                Symbols::Unpacked(a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect())
            }
            _ => unreachable!("representation is determined by length"),
        };
        Ok(PauliString { n: self.n, symbols })
    }

    /// The first `k` symbols.
    pub fn prefix(&self, k: usize) -> Result<PauliString> {
        if k > self.n {
            return Err(Error::param(format!(
                "prefix {k} longer than string {}",
                self.n
            )));
        }
        match &self.symbols {
            Symbols::Packed(w) => {
                let mask = if k == PACKED_MAX {
                    u128::MAX
                } else {
                    (1u128 << (2 * k)) - 1
                };
                Ok(PauliString {
                    n: k,
                    symbols: Symbols::Packed(w & mask),
                })
            }
            Symbols::Unpacked(v) => PauliString::from_symbols(&v[..k]),
        }
    }

    /// Append one symbol.
    pub fn extended(&self, s: u8) -> Result<PauliString> {
        if s > 3 {
            return Err(Error::InvalidSymbol(char::from(b'0' + s.min(9))));
        }
        match &self.symbols {
            Symbols::Packed(w) if self.n < PACKED_MAX => Ok(PauliString {
                n: self.n + 1,
                symbols: Symbols::Packed(w | ((s as u128) << (2 * self.n))),
            }),
            _ => {
                let mut v = self.to_symbols();
                v.push(s);
                PauliString::from_symbols(&v)
            }
        }
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.symbols().cmp(other.symbols()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.symbols() {
            write!(f, "{}", SYMBOL_CHARS[s as usize])?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| match c {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(Error::InvalidSymbol(other)),
            })
            .collect::<Result<Vec<u8>>>()?;
        PauliString::from_symbols(&symbols)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A measured bit string of length at most 64.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Readout {
    n: usize,
    bits: u64,
}

impl Readout {
    pub fn new(n: usize, bits: u64) -> Result<Self> {
        if n > 64 {
            return Err(Error::TooLarge {
                what: "readout length",
                value: n,
                limit: 64,
            });
        }
        if bits & !low_bits(n) != 0 {
            return Err(Error::param("readout has bits beyond its length"));
        }
        Ok(Readout { n, bits })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let word = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j));
        Readout::new(bits.len(), word)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, j: usize) -> bool {
        assert!(j < self.n);
        (self.bits >> j) & 1 == 1
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub(crate) fn with_flips(self, mask: u64) -> Readout {
        Readout {
            n: self.n,
            bits: self.bits ^ (mask & low_bits(self.n)),
        }
    }
}

impl Ord for Readout {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            (0..self.n)
                .map(|j| self.bit(j))
                .cmp((0..other.n).map(|j| other.bit(j)))
        })
    }
}

impl PartialOrd for Readout {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n {
            f.write_str(if self.bit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Readout({self})")
    }
}

impl FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid readout character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Readout::from_bits(&bits)
    }
}

/// Tolerance within which a distribution's mass is silently renormalized.
pub const NORMALIZE_TOLERANCE: f64 = 1e-9;

/// A sparse probability distribution over n-qubit Pauli strings.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRateDistribution {
    n: usize,
    entries: BTreeMap<PauliString, f64>,
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    pauli: PauliString,
    p: f64,
}

impl ErrorRateDistribution {
    /// Validate and build a distribution. Duplicate strings are rejected; a
    /// total mass within [`NORMALIZE_TOLERANCE`] of 1 is renormalized.
    pub fn new(n: usize, entries: impl IntoIterator<Item = (PauliString, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (pauli, p) in entries {
            if pauli.len() != n {
                return Err(Error::InvalidDistribution(format!(
                    "string {pauli} has length {}, expected {n}",
                    pauli.len()
                )));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} of {pauli} outside [0, 1]"
                )));
            }
            if map.insert(pauli.clone(), p).is_some() {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate string {pauli}"
                )));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > NORMALIZE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        for p in map.values_mut() {
            *p /= total;
        }
        Ok(ErrorRateDistribution { n, entries: map })
    }

    /// Parse `[("IXZ", 0.5), ...]`-style pairs.
    pub fn from_strs<'a>(entries: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let parsed = entries
            .into_iter()
            .map(|(s, p)| Ok((s.parse::<PauliString>()?, p)))
            .collect::<Result<Vec<_>>>()?;
        let n = parsed
            .first()
            .map(|(s, _)| s.len())
            .ok_or_else(|| Error::InvalidDistribution("empty support".into()))?;
        ErrorRateDistribution::new(n, parsed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn prob(&self, c: &PauliString) -> f64 {
        self.entries.get(c).copied().unwrap_or(0.0)
    }

    /// Entries in canonical (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    /// The B-altered distribution: `result(C) = self(B ⊕ C)`.
    pub fn altered(&self, b: &PauliString) -> Result<ErrorRateDistribution> {
        Error::check_len(self.n, b.len())?;
        let entries = self
            .entries
            .iter()
            .map(|(c, &p)| Ok((c.xor(b)?, p)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(ErrorRateDistribution { n: self.n, entries })
    }

    /// Total mass of strings whose first `prefix.len()` symbols equal `prefix`.
    pub fn prefix_mass(&self, prefix: &PauliString) -> Result<f64> {
        if prefix.len() > self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: prefix.len(),
            });
        }
        let mut total = 0.0;
        for (c, p) in self.iter() {
            if &c.prefix(prefix.len())? == prefix {
                total += p;
            }
        }
        Ok(total)
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<EntryRecord> = self
            .iter()
            .map(|(pauli, p)| EntryRecord {
                pauli: pauli.clone(),
                p,
            })
            .collect();
        Ok(serde_json::to_string(&records)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<EntryRecord> = serde_json::from_str(text)?;
        let n = records
            .first()
            .map(|r| r.pauli.len())
            .ok_or_else(|| Error::InvalidDistribution("empty support".into()))?;
        ErrorRateDistribution::new(n, records.into_iter().map(|r| (r.pauli, r.p)))
    }
}

impl Serialize for ErrorRateDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.entries.len()))?;
        for (pauli, &p) in &self.entries {
            seq.serialize_element(&EntryRecord {
                pauli: pauli.clone(),
                p,
            })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ErrorRateDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<EntryRecord>::deserialize(d)?;
        let n = records
            .first()
            .map(|r| r.pauli.len())
            .ok_or_else(|| serde::de::Error::custom("empty support"))?;
        ErrorRateDistribution::new(n, records.into_iter().map(|r| (r.pauli, r.p)))
            .map_err(serde::de::Error::custom)
    }
}

/// `π^{⊕B}`: free-function form of [`ErrorRateDistribution::altered`].
pub fn altered_distribution(
    pi: &ErrorRateDistribution,
    b: &PauliString,
) -> Result<ErrorRateDistribution> {
    pi.altered(b)
}

/// Exact law of the probe readout, by enumeration over all `2^n` readouts.
///
/// Each coordinate reads 1 with probability `δ/2` when the applied Pauli is the
/// identity there and `2/3 − δ/6` otherwise, independently given the error.
pub fn exact_readout_distribution(
    pi: &ErrorRateDistribution,
    spam: &SpamParams,
) -> Result<BTreeMap<Readout, f64>> {
    let n = pi.n();
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::TooLarge {
            what: "oracle qubit count",
            value: n,
            limit: ORACLE_MAX_QUBITS,
        });
    }
    let p_trivial = spam.p_one_given_trivial();
    let p_nontrivial = spam.p_one_given_nontrivial();
    let mut out = BTreeMap::new();
    for bits in 0..(1u64 << n) {
        let r = Readout::new(n, bits)?;
        let mut total = 0.0;
        for (c, mass) in pi.iter() {
            let mut pr = mass;
            for j in 0..n {
                let p1 = if c.symbol(j) == 0 {
                    p_trivial
                } else {
                    p_nontrivial
                };
                pr *= if r.bit(j) { p1 } else { 1.0 - p1 };
            }
            total += pr;
        }
        out.insert(r, total);
    }
    Ok(out)
}
