//! Agreement statistics: Cohen's kappa over a KxK table and the
//! Dice–Sørensen coefficient over binary masks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::{self, Verdict};
use crate::{Error, Result};

/// Square contingency table of counts. Rows are the second rater's
/// categories, columns the first rater's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct AgreementTable {
    counts: Vec<Vec<u64>>,
}

impl AgreementTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k < 2 {
            return Err(Error::InvalidArgument("agreement table needs at least 2 categories".into()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(Error::LengthMismatch { left: k, right: row.len() });
        }
        if counts.iter().flatten().all(|&c| c == 0) {
            return Err(Error::InvalidArgument("agreement table is empty".into()));
        }
        Ok(AgreementTable { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn categories(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> AgreementTable {
        let k = self.categories();
        let counts = (0..k).map(|i| (0..k).map(|j| self.counts[j][i]).collect()).collect();
        AgreementTable { counts }
    }
}

impl TryFrom<Vec<Vec<u64>>> for AgreementTable {
    type Error = Error;

    fn try_from(counts: Vec<Vec<u64>>) -> Result<Self> {
        AgreementTable::new(counts)
    }
}

impl From<AgreementTable> for Vec<Vec<u64>> {
    fn from(t: AgreementTable) -> Self {
        t.counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// Negative kappa is banded as unsuitable.
    pub verdict: Verdict,
}

/// Cohen's kappa, `(P0 - Pe) / (1 - Pe)`.
pub fn cohen_kappa(table: &AgreementTable) -> Result<KappaResult> {
    let k = table.categories();
    let total = table.total() as u128;
    let diagonal: u128 = (0..k).map(|i| table.counts[i][i] as u128).sum();
    let row = |i: usize| table.counts[i].iter().map(|&c| c as u128).sum::<u128>();
    let col = |j: usize| table.counts.iter().map(|r| r[j] as u128).sum::<u128>();
    // chance agreement scaled by total^2
    let chance: u128 = (0..k).map(|i| row(i) * col(i)).sum();
    let t2 = total * total;
    if chance == t2 {
        return Err(Error::Undefined("kappa", "expected agreement is 1 (both raters use a single category)".into()));
    }
    // kappa = (total * diag - chance) / (total^2 - chance), kept in integers
    let numerator = (total * diagonal) as i128 - chance as i128;
    let kappa = numerator as f64 / (t2 - chance) as f64;
    Ok(KappaResult {
        kappa,
        observed_agreement: diagonal as f64 / total as f64,
        expected_agreement: chance as f64 / t2 as f64,
        verdict: metrics::verdict(kappa.clamp(0.0, 1.0))?,
    })
}

/// Fixed-length sequence of 0/1 elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BinaryMask {
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn from_bools(bits: Vec<bool>) -> Self {
        BinaryMask { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Parse the run-length text form: the declared length followed by
    /// `start:length` runs of ones (0-based, ascending, non-overlapping),
    /// separated by whitespace. Example: `10 2:3 7:1`.
    pub fn from_rle(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let len: usize = tokens
            .next()
            .ok_or_else(|| Error::MalformedMask("missing declared length".into()))?
            .parse()
            .map_err(|_| Error::MalformedMask("declared length is not an integer".into()))?;
        let mut bits = vec![false; len];
        let mut next_free = 0usize;
        for token in tokens {
            let (start, run) = token
                .split_once(':')
                .ok_or_else(|| Error::MalformedMask(format!("run `{token}` is not start:length")))?;
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::MalformedMask(format!("run `{token}` has a non-integer field")))
            };
            let (start, run) = (parse(start)?, parse(run)?);
            if run == 0 {
                return Err(Error::MalformedMask(format!("run `{token}` is empty")));
            }
            if start < next_free {
                return Err(Error::MalformedMask(format!("run `{token}` overlaps or is out of order")));
            }
            let end = start
                .checked_add(run)
                .filter(|&e| e <= len)
                .ok_or_else(|| Error::MalformedMask(format!("run `{token}` exceeds length {len}")))?;
            bits[start..end].iter_mut().for_each(|b| *b = true);
            next_free = end;
        }
        Ok(BinaryMask { bits })
    }

    /// Canonical run-length text: maximal runs, ascending.
    pub fn to_rle(&self) -> String {
        let mut out = self.bits.len().to_string();
        let mut i = 0;
        while i < self.bits.len() {
            if self.bits[i] {
                let start = i;
                while i < self.bits.len() && self.bits[i] {
                    i += 1;
                }
                let _ = write!(out, " {start}:{}", i - start);
            } else {
                i += 1;
            }
        }
        out
    }
}

impl TryFrom<Vec<u8>> for BinaryMask {
    type Error = Error;

    fn try_from(v: Vec<u8>) -> Result<Self> {
        let bits = v
            .into_iter()
            .enumerate()
            .map(|(i, b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::MalformedMask(format!("element {i} is {other}, expected 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        Ok(BinaryMask { bits })
    }
}

impl From<BinaryMask> for Vec<u8> {
    fn from(m: BinaryMask) -> Self {
        m.bits.into_iter().map(u8::from).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiceResult {
    pub dsc: f64,
    pub intersection: usize,
    pub size_a: usize,
    pub size_b: usize,
    /// Both masks had no positive elements; `dsc` is reported as 1.
    pub empty: bool,
    pub verdict: Verdict,
}

/// Dice–Sørensen coefficient `2|A ∩ B| / (|A| + |B|)`.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<DiceResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let intersection = a.bits.iter().zip(&b.bits).filter(|(x, y)| **x && **y).count();
    let (size_a, size_b) = (a.count_ones(), b.count_ones());
    let empty = size_a + size_b == 0;
    let dsc = if empty { 1.0 } else { (2 * intersection) as f64 / (size_a + size_b) as f64 };
    Ok(DiceResult { dsc, intersection, size_a, size_b, empty, verdict: metrics::verdict(dsc)? })
}
