//! Maximum-likelihood estimation of systematic gate offsets from counts.
//!
//! The forward model builds the candidate device (nominal plan plus
//! candidate offsets, no jitter), runs it in each dataset's topology and
//! compares the heralded click and loss counts with the resulting outcome
//! probabilities.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_arrangement, perturb, ArrangementSpec, ErrorModel, RealizedCircuit};
use crate::error::{Error, Result};
use crate::matrix::StateVector;
use crate::mesh::{CircuitPlan, GateSpec};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::simulator::{outcome_probs, CountsTable};

/// Model probabilities are floored here inside the log-likelihood.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Fisher eigenvalues below this mark a direction the data cannot fix.
pub const FLAT_CURVATURE: f64 = 1e-8;

/// Two-sided 95% normal quantile used for the half-widths.
pub const CONFIDENCE_Z: f64 = 1.959_963_984_540_054;

const RANDOM_STARTS: usize = 4;
const DIFFERENCE_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleKind {
    Theta,
    Phi,
    /// One entry of a phase layer, 0-based mode.
    Phase(usize),
}

/// An offset to estimate, with its search interval in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParameter {
    pub gate: usize,
    pub kind: AngleKind,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParameter {
    pub fn new(gate: usize, kind: AngleKind, half_range: f64) -> Self {
        Self {
            gate,
            kind,
            lower: -half_range,
            upper: half_range,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Single,
    Arrangement(ArrangementSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub input: StateVector,
    pub topology: Topology,
    pub counts: CountsTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProblem {
    pub nominal: CircuitPlan,
    /// Loss, detection and any known systematic offsets; its jitter is
    /// ignored.
    pub base_model: ErrorModel,
    pub datasets: Vec<Dataset>,
    pub free_parameters: Vec<FreeParameter>,
}

impl CalibrationProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.nominal.modes();
        for (k, p) in self.free_parameters.iter().enumerate() {
            let gate = self.nominal.gates().get(p.gate).ok_or_else(|| {
                Error::Config(format!(
                    "free parameter {k} refers to missing gate {}",
                    p.gate
                ))
            })?;
            let fits = match (gate, p.kind) {
                (GateSpec::BeamSplitter { .. }, AngleKind::Theta | AngleKind::Phi) => true,
                (GateSpec::PhaseDiagonal { .. }, AngleKind::Phase(m)) => m < n,
                _ => false,
            };
            if !fits {
                return Err(Error::Config(format!(
                    "free parameter {k} ({:?}) does not exist on gate {}",
                    p.kind, p.gate
                )));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return Err(Error::Config(format!(
                    "free parameter {k} has invalid bounds"
                )));
            }
        }
        for (k, d) in self.datasets.iter().enumerate() {
            if d.input.dim() != n || d.counts.modes() != n {
                return Err(Error::Config(format!(
                    "dataset {k} does not match the {n}-mode plan"
                )));
            }
            d.counts.validate()?;
            if let Topology::Arrangement(spec) = &d.topology {
                spec.validate()?;
            }
        }
        self.base_model.validate(&self.nominal)
    }

    fn lower(&self) -> Vec<f64> {
        self.free_parameters.iter().map(|p| p.lower).collect()
    }

    fn upper(&self) -> Vec<f64> {
        self.free_parameters.iter().map(|p| p.upper).collect()
    }

    /// Jitter-free model with the candidate offsets added to the base ones.
    pub fn candidate_model(&self, params: &[f64]) -> ErrorModel {
        let mut model = self.base_model.systematic_only();
        for (p, &x) in self.free_parameters.iter().zip(params) {
            let entry = model.systematic.entry(p.gate).or_default();
            match p.kind {
                AngleKind::Theta => entry.theta += x,
                AngleKind::Phi => entry.phi += x,
                AngleKind::Phase(m) => {
                    let phases = entry
                        .phases
                        .get_or_insert_with(|| vec![0.0; self.nominal.modes()]);
                    phases[m] += x;
                }
            }
        }
        model
    }

    fn device(&self, model: &ErrorModel, topology: &Topology) -> Result<RealizedCircuit> {
        match topology {
            Topology::Single => perturb(&self.nominal, model, 0),
            Topology::Arrangement(spec) => build_arrangement(&self.nominal, model, spec, 0),
        }
    }

    /// Mode-then-loss probabilities of every dataset under `params`.
    fn probabilities(&self, params: &[f64]) -> Result<Vec<Vec<f64>>> {
        let model = self.candidate_model(params);
        self.datasets
            .iter()
            .map(|d| Ok(outcome_probs(&self.device(&model, &d.topology)?, &d.input)?.categories()))
            .collect()
    }

    fn check_bounds(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.free_parameters.len() {
            return Err(Error::DimensionMismatch {
                expected: self.free_parameters.len(),
                actual: params.len(),
            });
        }
        for (p, &x) in self.free_parameters.iter().zip(params) {
            if !(p.lower..=p.upper).contains(&x) {
                return Err(Error::InvalidArgument(format!(
                    "candidate {x} for gate {} lies outside [{}, {}]",
                    p.gate, p.lower, p.upper
                )));
            }
        }
        Ok(())
    }
}

/// Multinomial negative log-likelihood of all datasets, heralded trials
/// only, with the loss bucket as a category.
pub fn negative_log_likelihood(problem: &CalibrationProblem, params: &[f64]) -> Result<f64> {
    problem.check_bounds(params)?;
    let probs = problem.probabilities(params)?;
    Ok(problem
        .datasets
        .iter()
        .zip(probs)
        .map(|(d, p)| {
            d.counts
                .categories()
                .iter()
                .zip(p)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, p)| -(c as f64) * p.max(PROBABILITY_FLOOR).ln())
                .sum::<f64>()
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub parameters: Vec<FreeParameter>,
    pub estimates: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// 95% half-widths from the Fisher information; `None` where the data
    /// leave the parameter undetermined.
    pub half_widths: Vec<Option<f64>>,
    pub unbounded: Vec<bool>,
    pub probability_floor: f64,
    pub starts: usize,
}

/// Expected Fisher information of the heralded counts at `params`, from
/// central differences of the outcome probabilities.
pub fn fisher_information(problem: &CalibrationProblem, params: &[f64]) -> Result<DMatrix<f64>> {
    let k = params.len();
    let lower = problem.lower();
    let upper = problem.upper();
    let base = problem.probabilities(params)?;
    let mut grads = Vec::with_capacity(k);
    for i in 0..k {
        let mut plus = params.to_vec();
        let mut minus = params.to_vec();
        plus[i] = (plus[i] + DIFFERENCE_STEP).min(upper[i]);
        minus[i] = (minus[i] - DIFFERENCE_STEP).max(lower[i]);
        let width = plus[i] - minus[i];
        let (pp, pm) = (
            problem.probabilities(&plus)?,
            problem.probabilities(&minus)?,
        );
        let g: Vec<Vec<f64>> = pp
            .iter()
            .zip(&pm)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) / width).collect())
            .collect();
        grads.push(g);
    }
    let mut fisher = DMatrix::zeros(k, k);
    for (d, dataset) in problem.datasets.iter().enumerate() {
        let heralded = dataset.counts.herald_count as f64;
        for (c, &p) in base[d].iter().enumerate() {
            if p <= PROBABILITY_FLOOR {
                continue;
            }
            for i in 0..k {
                for j in 0..k {
                    fisher[(i, j)] += heralded * grads[i][d][c] * grads[j][d][c] / p;
                }
            }
        }
    }
    Ok(fisher)
}

/// Half-widths from the pseudo-inverse of `fisher`; parameters touched by
/// a flat direction are reported as unbounded.
fn half_widths(fisher: &DMatrix<f64>) -> (Vec<Option<f64>>, Vec<bool>) {
    let k = fisher.nrows();
    let eig = fisher.clone().symmetric_eigen();
    let mut unbounded = vec![false; k];
    let mut cov = DMatrix::<f64>::zeros(k, k);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        if lambda < FLAT_CURVATURE {
            for i in 0..k {
                if v[i].abs() > 1e-6 {
                    unbounded[i] = true;
                }
            }
        } else {
            cov += (v * v.transpose()) / lambda;
        }
    }
    let widths = (0..k)
        .map(|i| (!unbounded[i]).then(|| CONFIDENCE_Z * cov[(i, i)].max(0.0).sqrt()))
        .collect();
    (widths, unbounded)
}

/// Multi-start Nelder-Mead fit of the free parameters.
///
/// Start 0 is the nominal point (zero offsets, clamped into the bounds);
/// the others are drawn uniformly from the middle half of each interval.
pub fn fit_systematic(problem: &CalibrationProblem, seed: u64) -> Result<CalibrationResult> {
    problem.validate()?;
    if problem.datasets.is_empty() || problem.free_parameters.is_empty() {
        return Err(Error::Config(
            "calibration needs at least one dataset and one free parameter".into(),
        ));
    }
    let lower = problem.lower();
    let upper = problem.upper();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| 0f64.clamp(*lo, *hi))
        .collect::<Vec<_>>()];
    for _ in 0..RANDOM_STARTS {
        starts.push(
            lower
                .iter()
                .zip(&upper)
                .map(|(lo, hi)| {
                    let mid = 0.5 * (lo + hi);
                    mid + 0.5 * (hi - lo) * (rng.random::<f64>() - 0.5)
                })
                .collect(),
        );
    }
    let steps: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(lo, hi)| 0.1 * (hi - lo))
        .collect();
    let objective = |x: &[f64]| negative_log_likelihood(problem, x).unwrap_or(f64::INFINITY);
    let options = NelderMeadOptions::default();
    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| nelder_mead(objective, s, &steps, &lower, &upper, &options))
        .collect();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r.clone())
        .expect("at least one start");
    let (widths, unbounded) = half_widths(&fisher_information(problem, &best.x)?);
    Ok(CalibrationResult {
        parameters: problem.free_parameters.clone(),
        estimates: best.x,
        objective_value: best.value,
        iterations,
        converged: best.converged,
        half_widths: widths,
        unbounded,
        probability_floor: PROBABILITY_FLOOR,
        starts: starts.len(),
    })
}

/// `nominal` with every fitted offset subtracted, so a device carrying
/// those offsets realizes the nominal settings.
pub fn corrected_plan(nominal: &CircuitPlan, result: &CalibrationResult) -> Result<CircuitPlan> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let mut gates = nominal.gates().to_vec();
    for (p, &x) in result.parameters.iter().zip(&result.estimates) {
        match (gates.get_mut(p.gate), p.kind) {
            (Some(GateSpec::BeamSplitter { theta, .. }), AngleKind::Theta) => *theta -= x,
            (Some(GateSpec::BeamSplitter { phi, .. }), AngleKind::Phi) => *phi -= x,
            (Some(GateSpec::PhaseDiagonal { phases }), AngleKind::Phase(m)) if m < phases.len() => {
                phases[m] -= x
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "fitted parameter {:?} on gate {} does not exist in the plan",
                    p.kind, p.gate
                )))
            }
        }
    }
    CircuitPlan::new(nominal.modes(), gates)
}
