//! Digit streams from detection events and the statistical battery run on
//! them.
//!
//! Packed binary stream layout:
//!
//! ```text
//! byte 0       base (2 or 3)
//! bytes 1..9   digit count, u64 little-endian
//! bytes 9..    digits, MSB first, 1 bit each (base 2) or 2 bits each
//!              (base 3), last byte zero-padded
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::simulator::TrialOutcome;

/// Finite-sample tolerance used by the normality check.
pub const BOREL_BOUND_FORMULA: &str = "sqrt(log2(n) / n)";

/// Expected probabilities must sum to one within this tolerance.
const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitSequence {
    base: u8,
    digits: Vec<u8>,
}

impl DigitSequence {
    pub fn new(base: u8, digits: Vec<u8>) -> Result<Self> {
        if !(base == 2 || base == 3) {
            return Err(Error::InvalidArgument(format!(
                "base must be 2 or 3, got {base}"
            )));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= base) {
            return Err(Error::Data(format!(
                "digit {d} out of range for base {base}"
            )));
        }
        Ok(Self { base, digits })
    }

    pub fn base(&self) -> u8 {
        self.base
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Occurrences of each digit value.
    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.base as usize];
        for &d in &self.digits {
            c[d as usize] += 1;
        }
        c
    }

    /// One character per digit, newline-terminated.
    pub fn to_text(&self) -> String {
        let mut s: String = self.digits.iter().map(|&d| char::from(b'0' + d)).collect();
        s.push('\n');
        s
    }

    pub fn from_text(text: &str, base: u8) -> Result<Self> {
        let line = text.strip_suffix('\n').unwrap_or(text);
        let line = line.strip_suffix('\r').unwrap_or(line);
        let digits = line
            .bytes()
            .map(|b| match b {
                b'0'..=b'9' => Ok(b - b'0'),
                _ => Err(Error::Data(format!(
                    "unexpected character {:?} in digit stream",
                    b as char
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, digits)
    }

    fn bits_per_digit(&self) -> usize {
        if self.base == 2 {
            1
        } else {
            2
        }
    }

    pub fn to_packed(&self) -> Vec<u8> {
        let width = self.bits_per_digit();
        let mut out = vec![self.base];
        out.extend((self.digits.len() as u64).to_le_bytes());
        let mut packed = vec![0u8; (self.digits.len() * width).div_ceil(8)];
        for (i, &d) in self.digits.iter().enumerate() {
            let bit = i * width;
            packed[bit / 8] |= d << (8 - width - bit % 8);
        }
        out.extend(packed);
        out
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 9 {
            return Err(Error::Data(
                "packed stream is shorter than its header".into(),
            ));
        }
        let base = bytes[0];
        let count = u64::from_le_bytes(bytes[1..9].try_into().expect("eight bytes")) as usize;
        let probe = Self::new(base, Vec::new())?;
        let width = probe.bits_per_digit();
        let body = &bytes[9..];
        if body.len() != (count * width).div_ceil(8) {
            return Err(Error::Data(format!(
                "packed stream declares {count} digits but carries {} bytes",
                body.len()
            )));
        }
        let mask = (1u8 << width) - 1;
        let digits: Vec<u8> = (0..count)
            .map(|i| {
                let bit = i * width;
                (body[bit / 8] >> (8 - width - bit % 8)) & mask
            })
            .collect();
        let used = count * width;
        if !used.is_multiple_of(8) && body[used / 8] & (0xFFu8 >> (used % 8)) != 0 {
            return Err(Error::Data("packed stream padding is not zero".into()));
        }
        Self::new(base, digits)
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn write_packed(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_packed())?;
        Ok(())
    }

    pub fn read_packed(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_packed(&std::fs::read(path)?)
    }
}

/// Digits of the heralded, detected trials; `mapping[k]` is the digit for
/// a click in mode `k`.
pub fn digits_from_trials(
    outcomes: &[TrialOutcome],
    mapping: &[u8],
    base: u8,
) -> Result<DigitSequence> {
    let digits = outcomes
        .iter()
        .filter(|o| o.herald_fired)
        .filter_map(|o| o.detected_mode)
        .map(|k| {
            mapping
                .get(k)
                .copied()
                .ok_or_else(|| Error::Data(format!("no digit mapped to mode {k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    DigitSequence::new(base, digits)
}

/// Mode `k` maps to digit `k`.
pub fn identity_mapping(modes: usize) -> Vec<u8> {
    (0..modes as u8).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub significance: f64,
    pub pass: bool,
}

fn check_distribution(expected: &[f64], len: usize) -> Result<()> {
    if expected.len() != len {
        return Err(Error::Config(format!(
            "expected {len} probabilities, got {}",
            expected.len()
        )));
    }
    if expected.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Config(format!(
            "expected probabilities must be positive, got {expected:?}"
        )));
    }
    let sum: f64 = expected.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::Config(format!(
            "expected probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Pearson goodness-of-fit of raw category counts.
pub fn chi_square_counts(
    counts: &[u64],
    expected: &[f64],
    significance: f64,
) -> Result<ChiSquareResult> {
    check_distribution(expected, counts.len())?;
    if counts.len() < 2 {
        return Err(Error::Config(
            "chi-square needs at least two categories".into(),
        ));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Precondition(
            "chi-square needs a non-empty sample".into(),
        ));
    }
    let n = n as f64;
    let statistic: f64 = counts
        .iter()
        .zip(expected)
        .map(|(&c, &p)| {
            let e = n * p;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dof = counts.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let p_value = dist.sf(statistic);
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
        significance,
        pass: p_value >= significance,
    })
}

/// Digit frequencies against `expected`, `dof = base - 1`.
pub fn chi_square_frequency(
    seq: &DigitSequence,
    expected: &[f64],
    significance: f64,
) -> Result<ChiSquareResult> {
    chi_square_counts(&seq.counts(), expected, significance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorelRow {
    pub block: usize,
    pub word: String,
    pub frequency: f64,
    pub expected: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BorelReport {
    pub digits: usize,
    pub max_block: usize,
    pub bound_formula: String,
    pub bound: f64,
    /// Digit probabilities the word frequencies were compared against;
    /// `None` for the uniform test.
    pub weights: Option<Vec<f64>>,
    pub rows: Vec<BorelRow>,
    pub pass: bool,
}

/// Word frequencies over non-overlapping blocks against `base^-m`.
pub fn borel_normality(seq: &DigitSequence, max_block: usize) -> Result<BorelReport> {
    borel_core(seq, max_block, None)
}

/// As [`borel_normality`], with a word's expected frequency being the
/// product of its digits' probabilities.
pub fn borel_normality_weighted(
    seq: &DigitSequence,
    max_block: usize,
    probabilities: &[f64],
) -> Result<BorelReport> {
    check_distribution(probabilities, seq.base as usize)?;
    borel_core(seq, max_block, Some(probabilities))
}

fn borel_core(
    seq: &DigitSequence,
    max_block: usize,
    weights: Option<&[f64]>,
) -> Result<BorelReport> {
    if max_block < 1 {
        return Err(Error::InvalidArgument(
            "max_block must be at least 1".into(),
        ));
    }
    let base = seq.base as usize;
    let n = seq.len();
    let minimum = u32::try_from(2 * max_block)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| Error::InvalidArgument(format!("max_block {max_block} is too large")))?;
    if n < minimum {
        return Err(Error::Precondition(format!(
            "normality test with max_block {max_block} needs at least {minimum} digits, got {n}"
        )));
    }
    let bound = ((n as f64).log2() / n as f64).sqrt();
    let mut rows = Vec::new();
    for m in 1..=max_block {
        let words = base.pow(m as u32);
        let mut counts = vec![0u64; words];
        let blocks = seq.digits.chunks_exact(m);
        let total = blocks.len() as f64;
        for block in blocks {
            let index = block.iter().fold(0usize, |acc, &d| acc * base + d as usize);
            counts[index] += 1;
        }
        for (index, &count) in counts.iter().enumerate() {
            let word: Vec<u8> = (0..m)
                .rev()
                .map(|k| ((index / base.pow(k as u32)) % base) as u8)
                .collect();
            let expected = match weights {
                Some(p) => word.iter().map(|&d| p[d as usize]).product(),
                None => 1.0 / words as f64,
            };
            let frequency = count as f64 / total;
            rows.push(BorelRow {
                block: m,
                word: word.iter().map(|&d| char::from(b'0' + d)).collect(),
                frequency,
                expected,
                deviation: (frequency - expected).abs(),
            });
        }
    }
    let pass = rows.iter().all(|r| r.deviation <= bound);
    Ok(BorelReport {
        digits: n,
        max_block,
        bound_formula: BOREL_BOUND_FORMULA.into(),
        bound,
        weights: weights.map(<[f64]>::to_vec),
        rows,
        pass,
    })
}

/// Ternary-to-binary conversion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitScheme {
    /// `0 -> 0`, `2 -> 1`, `1` dropped.
    #[default]
    Outer,
    /// Two-bit binary code of each digit: `0 -> 00`, `1 -> 01`, `2 -> 10`.
    Split,
}

pub fn to_bits(seq: &DigitSequence, scheme: BitScheme) -> Result<DigitSequence> {
    if seq.base != 3 {
        return Err(Error::InvalidArgument(format!(
            "to_bits needs a ternary sequence, got base {}",
            seq.base
        )));
    }
    let bits = match scheme {
        BitScheme::Outer => seq
            .digits
            .iter()
            .filter(|&&d| d != 1)
            .map(|&d| d / 2)
            .collect(),
        BitScheme::Split => seq.digits.iter().flat_map(|&d| [d >> 1, d & 1]).collect(),
    };
    DigitSequence::new(2, bits)
}

/// Non-overlapping pairs: `01 -> 0`, `10 -> 1`, equal pairs discarded.
pub fn von_neumann_extract(bits: &DigitSequence) -> Result<DigitSequence> {
    if bits.base != 2 {
        return Err(Error::InvalidArgument(format!(
            "extractor needs bits, got base {}",
            bits.base
        )));
    }
    let out = bits
        .digits
        .chunks_exact(2)
        .filter(|p| p[0] != p[1])
        .map(|p| p[0])
        .collect();
    DigitSequence::new(2, out)
}
