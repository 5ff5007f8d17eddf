//! Single-photon propagation, outcome probabilities and heralded sampling.
//!
//! Trial `i` of a run draws from its own SplitMix64 substream whose state
//! is `base + 2 i gamma`, where `base` is derived from the run seed and
//! `gamma` is the SplitMix increment. The substreams partition one
//! SplitMix64 sequence, so the result depends only on `(seed, i)` and not
//! on how trials are spread over threads.

use std::io::{Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{derive_seed, RealizedCircuit};
use crate::error::{Error, Result};
use crate::matrix::StateVector;

/// Inputs must be normalized to this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SAMPLING_STREAM: u64 = 0x5A4D_504C_4553;
const CHUNK: usize = 1 << 14;

fn check_input(rc: &RealizedCircuit, input: &StateVector) -> Result<()> {
    if input.dim() != rc.modes() {
        return Err(Error::InvalidArgument(format!(
            "input has {} modes, circuit has {}",
            input.dim(),
            rc.modes()
        )));
    }
    if !input.is_normalized(NORMALIZATION_TOLERANCE) {
        return Err(Error::InvalidArgument(format!(
            "input is not normalized (norm^2 = {})",
            input.norm_sqr()
        )));
    }
    Ok(())
}

/// Output amplitudes `sqrt(survival) * U * input`.
pub fn propagate(rc: &RealizedCircuit, input: &StateVector) -> Result<StateVector> {
    check_input(rc, input)?;
    Ok(rc.unitary().apply(input)?.scale(rc.survival.sqrt()))
}

/// Per-mode click probabilities and the probability that nothing clicks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    pub modes: Vec<f64>,
    pub loss: f64,
}

impl OutcomeProbabilities {
    /// Mode probabilities followed by the loss probability.
    pub fn categories(&self) -> Vec<f64> {
        let mut v = self.modes.clone();
        v.push(self.loss);
        v
    }

    /// Mode probabilities given that some detector clicked.
    pub fn conditional_on_detection(&self) -> Vec<f64> {
        let detected: f64 = self.modes.iter().sum();
        self.modes.iter().map(|p| p / detected).collect()
    }
}

pub fn outcome_probs(rc: &RealizedCircuit, input: &StateVector) -> Result<OutcomeProbabilities> {
    let out = propagate(rc, input)?;
    let modes: Vec<f64> = out
        .intensities()
        .iter()
        .zip(&rc.detector_efficiency)
        .map(|(i, eta)| i * eta)
        .collect();
    let loss = (1.0 - modes.iter().sum::<f64>()).max(0.0);
    Ok(OutcomeProbabilities { modes, loss })
}

/// Result of one heralded trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub herald_fired: bool,
    /// `None` when the photon was lost or missed by its detector.
    pub detected_mode: Option<usize>,
}

/// Aggregate click counts of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub trials: u64,
    pub herald_count: u64,
    pub per_mode: Vec<u64>,
    pub loss_count: u64,
}

impl CountsTable {
    pub fn zeros(modes: usize) -> Self {
        Self {
            trials: 0,
            herald_count: 0,
            per_mode: vec![0; modes],
            loss_count: 0,
        }
    }

    pub fn modes(&self) -> usize {
        self.per_mode.len()
    }

    pub fn detected(&self) -> u64 {
        self.per_mode.iter().sum()
    }

    /// Mode counts followed by the loss count.
    pub fn categories(&self) -> Vec<u64> {
        let mut v = self.per_mode.clone();
        v.push(self.loss_count);
        v
    }

    pub fn record(&mut self, outcome: TrialOutcome) {
        self.trials += 1;
        if outcome.herald_fired {
            self.herald_count += 1;
            match outcome.detected_mode {
                Some(k) => self.per_mode[k] += 1,
                None => self.loss_count += 1,
            }
        }
    }

    fn merge(mut self, other: CountsTable) -> CountsTable {
        self.trials += other.trials;
        self.herald_count += other.herald_count;
        self.loss_count += other.loss_count;
        for (a, b) in self.per_mode.iter_mut().zip(other.per_mode) {
            *a += b;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.herald_count != self.detected() + self.loss_count || self.herald_count > self.trials
        {
            return Err(Error::Data(format!(
                "inconsistent counts: trials {}, herald {}, detected {}, lost {}",
                self.trials,
                self.herald_count,
                self.detected(),
                self.loss_count
            )));
        }
        Ok(())
    }

    /// CSV with header `trial_total,herald,mode_0,...,mode_{N-1},lost`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["trial_total".to_string(), "herald".to_string()];
        header.extend((0..self.modes()).map(|k| format!("mode_{k}")));
        header.push("lost".into());
        w.write_record(&header)?;
        let mut row = vec![self.trials, self.herald_count];
        row.extend(&self.per_mode);
        row.push(self.loss_count);
        w.write_record(row.iter().map(u64::to_string))?;
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let n = header
            .len()
            .checked_sub(3)
            .ok_or_else(|| Error::Data("counts CSV has too few columns".into()))?;
        let expected: Vec<String> = ["trial_total".to_string(), "herald".to_string()]
            .into_iter()
            .chain((0..n).map(|k| format!("mode_{k}")))
            .chain(["lost".to_string()])
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Data(format!(
                "unexpected counts CSV header {header:?}"
            )));
        }
        let mut records = r.records();
        let record = records
            .next()
            .ok_or_else(|| Error::Data("counts CSV has no data row".into()))??;
        if records.next().is_some() {
            return Err(Error::Data(
                "counts CSV must have exactly one data row".into(),
            ));
        }
        let values = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Data(format!("bad count {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = CountsTable {
            trials: values[0],
            herald_count: values[1],
            per_mode: values[2..2 + n].to_vec(),
            loss_count: values[2 + n],
        };
        table.validate()?;
        Ok(table)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn unit_interval(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws every trial from precomputed probabilities.
struct TrialSampler {
    base: u64,
    herald: f64,
    cumulative: Vec<f64>,
}

impl TrialSampler {
    fn new(rc: &RealizedCircuit, input: &StateVector, seed: u64) -> Result<Self> {
        let probs = outcome_probs(rc, input)?;
        let cumulative = probs
            .modes
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            base: derive_seed(seed, SAMPLING_STREAM),
            herald: rc.herald_efficiency,
            cumulative,
        })
    }

    fn trial(&self, i: u64) -> TrialOutcome {
        let mut rng = SplitMix64::seed_from_u64(
            self.base
                .wrapping_add(i.wrapping_mul(2).wrapping_mul(GAMMA)),
        );
        let herald_fired = unit_interval(rng.next_u64()) < self.herald;
        let u = unit_interval(rng.next_u64());
        let detected_mode = if herald_fired {
            self.cumulative.iter().position(|&c| u < c)
        } else {
            None
        };
        TrialOutcome {
            herald_fired,
            detected_mode,
        }
    }
}

/// Individual outcomes of `n` trials, in trial order.
pub fn sample_outcomes(
    rc: &RealizedCircuit,
    input: &StateVector,
    n: u64,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    let sampler = TrialSampler::new(rc, input, seed)?;
    Ok((0..n).into_par_iter().map(|i| sampler.trial(i)).collect())
}

/// Counts of `n` heralded trials.
pub fn sample_trials(
    rc: &RealizedCircuit,
    input: &StateVector,
    n: u64,
    seed: u64,
) -> Result<CountsTable> {
    let sampler = TrialSampler::new(rc, input, seed)?;
    let modes = rc.modes();
    let chunks = n.div_ceil(CHUNK as u64);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut table = CountsTable::zeros(modes);
            let end = ((c + 1) * CHUNK as u64).min(n);
            for i in c * CHUNK as u64..end {
                table.record(sampler.trial(i));
            }
            table
        })
        .reduce(|| CountsTable::zeros(modes), CountsTable::merge))
}

/// Fringe diagnostics of a two-arm interferometer with the device in one arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    /// `|<psi|M psi>|`.
    pub raw: f64,
    /// `2 |<psi|M psi>| / (1 + ||M psi||^2)`, the loss-normalized contrast.
    pub contrast: f64,
}

pub fn interference_visibility(
    rc_composed: &RealizedCircuit,
    input: &StateVector,
) -> Result<Visibility> {
    if !input.is_normalized(NORMALIZATION_TOLERANCE) {
        return Err(Error::Precondition(format!(
            "interference input must be normalized (norm^2 = {})",
            input.norm_sqr()
        )));
    }
    let out = propagate(rc_composed, input)?;
    let overlap = input.inner(&out).norm();
    Ok(Visibility {
        raw: overlap,
        contrast: 2.0 * overlap / (1.0 + out.norm_sqr()),
    })
}
