//! Probe simulation under SPAM noise and readout post-processing.
//!
//! A probe picks a basis `A ∈ {X,Y,Z}^n`, sends the matching +1 eigenstate
//! through the Pauli channel and measures back in the same basis. Given the
//! applied error `C`, readout coordinates are independent: bit `j` is 1 with
//! probability `δ/2` when `C_j = I` and `2/3 − δ/6` otherwise, where
//! `δ = 1 − r_prep·r_meas`. The simulator samples those bits directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::individual::WeightHistogram;
use crate::pauli::{
    anticommute_mask, anticommutes, low_bits, ErrorRateDistribution, PauliString, Readout,
};
use crate::rng::{RecordStream, GENERATOR_NAME};

/// Largest SPAM rate the recovery pipeline accepts.
pub const MAX_RECOVERY_DELTA: f64 = 0.99;

/// Depolarizing retention parameters for preparation and measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpamParams {
    pub r_prep: f64,
    pub r_meas: f64,
}

impl SpamParams {
    pub fn new(r_prep: f64, r_meas: f64) -> Result<Self> {
        for (name, v) in [("r_prep", r_prep), ("r_meas", r_meas)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(SpamParams { r_prep, r_meas })
    }

    pub fn noiseless() -> Self {
        SpamParams {
            r_prep: 1.0,
            r_meas: 1.0,
        }
    }

    /// Overall retention `r = r_prep · r_meas`.
    pub fn retention(&self) -> f64 {
        self.r_prep * self.r_meas
    }

    /// Overall SPAM rate `δ = 1 − r`.
    pub fn delta(&self) -> f64 {
        1.0 - self.retention()
    }

    /// `Pr[R_j = 1 | C_j = I] = δ/2`.
    pub fn p_one_given_trivial(&self) -> f64 {
        self.delta() / 2.0
    }

    /// `Pr[R_j = 1 | C_j ≠ I] = 2/3 − δ/6`.
    pub fn p_one_given_nontrivial(&self) -> f64 {
        2.0 / 3.0 - self.delta() / 6.0
    }

    pub fn check_recoverable(&self) -> Result<()> {
        if self.delta() > MAX_RECOVERY_DELTA {
            return Err(Error::param(format!(
                "SPAM rate δ = {} exceeds {MAX_RECOVERY_DELTA}",
                self.delta()
            )));
        }
        Ok(())
    }
}

/// Per-coordinate probability of reading 1, applying the two depolarizing
/// stages one after the other instead of through the combined retention.
///
/// The noiseless readout is 1 with probability 0 (`C_j = I`) or 2/3
/// (`C_j ≠ I`); each stage keeps the bit law with probability `r` and replaces
/// it by a fair coin otherwise.
pub fn staged_p_one(r_prep: f64, r_meas: f64, nontrivial: bool) -> f64 {
    let clean = if nontrivial { 2.0 / 3.0 } else { 0.0 };
    let after_prep = r_prep * clean + (1.0 - r_prep) * 0.5;
    r_meas * after_prep + (1.0 - r_meas) * 0.5
}

/// One probe: the preparation/measurement basis string and the readout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbeRecord {
    basis: PauliString,
    readout: Readout,
}

impl ProbeRecord {
    pub fn new(basis: PauliString, readout: Readout) -> Result<Self> {
        Error::check_len(basis.len(), readout.len())?;
        if basis.packed().is_none() {
            return Err(Error::TooLarge {
                what: "probe qubit count",
                value: basis.len(),
                limit: 64,
            });
        }
        if !basis.is_fully_nontrivial() {
            return Err(Error::param(format!("probe basis {basis} contains I")));
        }
        Ok(ProbeRecord { basis, readout })
    }

    pub fn basis(&self) -> &PauliString {
        &self.basis
    }

    pub fn readout(&self) -> Readout {
        self.readout
    }

    fn packed_basis(&self) -> u128 {
        self.basis.packed().expect("probe bases are packed")
    }

    /// Flip readout bit `j` whenever `A_j` and `B_j` anticommute.
    pub fn alter(&self, b: &PauliString) -> Result<Readout> {
        Error::check_len(self.basis.len(), b.len())?;
        let b = b.packed().expect("same length as a packed basis");
        Ok(self
            .readout
            .with_flips(anticommute_mask(self.packed_basis(), b)))
    }

    /// Hamming weight of the altered readout restricted to the first
    /// `b_prefix.len()` coordinates.
    pub fn altered_weight(&self, b_prefix: &PauliString) -> Result<usize> {
        let k = b_prefix.len();
        if k > self.basis.len() {
            return Err(Error::param(format!(
                "prefix length {k} exceeds record length {}",
                self.basis.len()
            )));
        }
        let b = b_prefix.packed().expect("prefix no longer than 64");
        Ok(self.weight_with_packed_prefix(b, k))
    }

    #[inline]
    fn weight_with_packed_prefix(&self, b: u128, k: usize) -> usize {
        let flips = anticommute_mask(self.packed_basis(), b);
        ((self.readout.bits() ^ flips) & low_bits(k)).count_ones() as usize
    }
}

/// Free-function form of [`ProbeRecord::alter`].
pub fn alter_readout(record: &ProbeRecord, b: &PauliString) -> Result<Readout> {
    record.alter(b)
}

/// Free-function form of [`ProbeRecord::altered_weight`] with an explicit `k`.
pub fn altered_weight(record: &ProbeRecord, b_prefix: &PauliString, k: usize) -> Result<usize> {
    if b_prefix.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: b_prefix.len(),
        });
    }
    record.altered_weight(b_prefix)
}

/// An immutable set of probe records sharing `n` and SPAM parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBatch {
    pub n: usize,
    pub spam: SpamParams,
    pub seed: u64,
    pub generator: String,
    records: Vec<ProbeRecord>,
}

impl ProbeBatch {
    pub fn from_records(
        n: usize,
        spam: SpamParams,
        seed: u64,
        generator: impl Into<String>,
        records: Vec<ProbeRecord>,
    ) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::param(format!(
                "batch qubit count {n} outside 1..=64"
            )));
        }
        for r in &records {
            Error::check_len(n, r.basis.len())?;
        }
        Ok(ProbeBatch {
            n,
            spam,
            seed,
            generator: generator.into(),
            records,
        })
    }

    pub fn records(&self) -> &[ProbeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Histogram of altered prefix weights over every record.
    pub fn altered_histogram(&self, b_prefix: &PauliString) -> Result<WeightHistogram> {
        let k = b_prefix.len();
        if k > self.n {
            return Err(Error::param(format!(
                "prefix length {k} exceeds n = {}",
                self.n
            )));
        }
        let b = b_prefix.packed().expect("prefix no longer than 64");
        let counts = self
            .records
            .par_chunks(4096)
            .map(|chunk| {
                let mut c = vec![0u64; k + 1];
                for r in chunk {
                    c[r.weight_with_packed_prefix(b, k)] += 1;
                }
                c
            })
            .reduce(
                || vec![0u64; k + 1],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        WeightHistogram::from_counts(counts)
    }
}

/// Draw `m` probes of the Pauli channel `pi` under SPAM, reproducibly.
pub fn simulate_batch(
    pi: &ErrorRateDistribution,
    spam: &SpamParams,
    m: usize,
    seed: u64,
) -> Result<ProbeBatch> {
    let n = pi.n();
    if n == 0 || n > 64 {
        return Err(Error::param(format!(
            "batch qubit count {n} outside 1..=64"
        )));
    }
    if m == 0 {
        return Err(Error::param("batch size m must be at least 1"));
    }
    let support: Vec<u128> = pi.iter().map(|(c, _)| c.packed().unwrap()).collect();
    let mut cumulative: Vec<f64> = pi
        .iter()
        .scan(0.0, |acc, (_, p)| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().unwrap() = f64::INFINITY;

    // Readout noise of both SPAM stages folds into one flip with probability δ/2.
    let p_flip = spam.p_one_given_trivial();

    let records = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RecordStream::new(seed, i);
            let u = rng.uniform();
            let c = support[cumulative.partition_point(|&t| t <= u)];
            let mut basis = 0u128;
            let mut bits = 0u64;
            for j in 0..n {
                let aj = rng.below(3) as u8 + 1;
                basis |= (aj as u128) << (2 * j);
                let cj = ((c >> (2 * j)) & 3) as u8;
                if anticommutes(aj, cj) ^ rng.bernoulli(p_flip) {
                    bits |= 1 << j;
                }
            }
            ProbeRecord {
                basis: PauliString::from_packed(n, basis).unwrap(),
                readout: Readout::new(n, bits).unwrap(),
            }
        })
        .collect();

    Ok(ProbeBatch {
        n,
        spam: *spam,
        seed,
        generator: GENERATOR_NAME.to_string(),
        records,
    })
}
