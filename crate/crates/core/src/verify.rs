//! Certification battery: undo test, sharpness, detector coverage,
//! self-adjointness and error-amplification scans.

use serde::{Deserialize, Serialize};

use crate::circuit::{
    build_arrangement, derive_seed, ArrangementSpec, ArrangementStyle, ErrorModel, GateDelta,
    RealizedCircuit,
};
use crate::error::{Error, Result};
use crate::matrix::{identity_deviation, unitarity_deviation, ComplexMatrix, StateVector};
use crate::mesh::CircuitPlan;
use crate::simulator::{interference_visibility, propagate, sample_trials, CountsTable};

pub const SCHEMA_VERSION: u32 = 1;

/// Pass/fail limits. Every report carries the values it was judged with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub max_identity_deviation: f64,
    pub min_recovery_fidelity: f64,
    pub max_unitarity_deviation: f64,
    pub min_visibility_raw: f64,
    /// Allowed total-variation distance between the clicks behind the
    /// composed device and `|input|^2`, on top of a 3-sigma sampling term.
    pub max_click_mismatch: f64,
    pub max_sharpness_offdiag: f64,
    pub min_clicks_per_mode: u64,
    pub max_self_adjoint_deviation: f64,
    /// Sample trials through the composed device.
    pub statistical_checks: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_identity_deviation: 1e-3,
            min_recovery_fidelity: 0.999,
            max_unitarity_deviation: 1e-8,
            min_visibility_raw: 0.999,
            max_click_mismatch: 1e-3,
            max_sharpness_offdiag: 1e-6,
            min_clicks_per_mode: 10,
            max_self_adjoint_deviation: 1e-3,
            statistical_checks: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

/// One metric judged against one threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::AtMost,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::AtLeast,
            pass: value >= threshold,
        }
    }
}

/// Outcome of a certification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub trials: u64,
    pub unitarity_deviation: f64,
    pub identity_deviation: f64,
    pub recovery_fidelity: f64,
    pub survival: f64,
    pub visibility_raw: f64,
    pub visibility_contrast: f64,
    pub click_mismatch: Option<f64>,
    pub counts: Option<CountsTable>,
    pub sharpness_offdiag_max: Option<f64>,
    pub coverage_pass: Option<bool>,
    pub coverage_counts: Option<Vec<u64>>,
    pub self_adjoint_deviation: Option<f64>,
    pub thresholds: Thresholds,
    pub verdicts: Vec<Verdict>,
    /// Per-gate parameter deltas of every device in the composed test, in
    /// simulation mode.
    pub deltas: Vec<GateDelta>,
}

impl CertificationReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failed(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.pass).collect()
    }

    pub fn attach_sharpness(&mut self, result: &SharpnessResult) {
        self.sharpness_offdiag_max = Some(result.gram_offdiag_max);
        self.verdicts.push(Verdict::at_most(
            "sharpness_offdiag_max",
            result.gram_offdiag_max,
            result.threshold,
        ));
    }

    pub fn attach_coverage(&mut self, result: &CoverageResult) {
        self.coverage_pass = Some(result.pass);
        self.coverage_counts = Some(result.per_mode_counts.clone());
        let min = result.per_mode_counts.iter().copied().min().unwrap_or(0);
        let mut v = Verdict::at_least("coverage_min_clicks", min as f64, result.min_clicks as f64);
        v.pass = result.pass;
        self.verdicts.push(v);
    }

    pub fn attach_self_adjoint(&mut self, result: &SelfAdjointResult) {
        self.self_adjoint_deviation = Some(result.deviation);
        self.verdicts.push(Verdict::at_most(
            "self_adjoint_deviation",
            result.deviation,
            result.tolerance,
        ));
    }
}

fn check_modes(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Device `fwd` followed by device `mirror`.
pub fn compose_pair(fwd: &RealizedCircuit, mirror: &RealizedCircuit) -> Result<RealizedCircuit> {
    let mut deltas = fwd.deltas.clone();
    deltas.extend(mirror.deltas.iter().cloned());
    Ok(RealizedCircuit {
        plan: fwd.plan.then(&mirror.plan)?,
        survival: fwd.survival * mirror.survival,
        detector_efficiency: mirror.detector_efficiency.clone(),
        herald_efficiency: fwd.herald_efficiency,
        deltas,
    })
}

/// Sends `input` through `fwd` and then `mirror` and checks that it comes
/// back unchanged.
pub fn inversion_test(
    fwd: &RealizedCircuit,
    mirror: &RealizedCircuit,
    input: &StateVector,
    n: u64,
    seed: u64,
    thresholds: &Thresholds,
) -> Result<CertificationReport> {
    check_modes(fwd.modes(), mirror.modes())?;
    check_modes(fwd.modes(), input.dim())?;
    if thresholds.statistical_checks && n == 0 {
        return Err(Error::Config(
            "statistical checks need at least one trial".into(),
        ));
    }
    let composed = compose_pair(fwd, mirror)?;
    let u = composed.unitary();
    let out = propagate(&composed, input)?;
    let overlap = input.inner(&out).norm_sqr();
    let recovery_fidelity = if out.norm_sqr() > 0.0 {
        overlap / out.norm_sqr()
    } else {
        0.0
    };
    let visibility = interference_visibility(&composed, input)?;

    let mut report = CertificationReport {
        schema_version: SCHEMA_VERSION,
        seed,
        trials: n,
        unitarity_deviation: unitarity_deviation(&u),
        identity_deviation: identity_deviation(&u),
        recovery_fidelity,
        survival: composed.survival,
        visibility_raw: visibility.raw,
        visibility_contrast: visibility.contrast,
        click_mismatch: None,
        counts: None,
        sharpness_offdiag_max: None,
        coverage_pass: None,
        coverage_counts: None,
        self_adjoint_deviation: None,
        thresholds: thresholds.clone(),
        verdicts: Vec::new(),
        deltas: composed.deltas.clone(),
    };
    report.verdicts = vec![
        Verdict::at_most(
            "identity_deviation",
            report.identity_deviation,
            thresholds.max_identity_deviation,
        ),
        Verdict::at_least(
            "recovery_fidelity",
            report.recovery_fidelity,
            thresholds.min_recovery_fidelity,
        ),
        Verdict::at_most(
            "unitarity_deviation",
            report.unitarity_deviation,
            thresholds.max_unitarity_deviation,
        ),
        Verdict::at_least(
            "visibility_raw",
            report.visibility_raw,
            thresholds.min_visibility_raw,
        ),
    ];

    if thresholds.statistical_checks {
        let counts = sample_trials(&composed, input, n, seed)?;
        let detected = counts.detected();
        let expected = input.intensities();
        let (mismatch, tolerance) = if detected == 0 {
            (1.0, thresholds.max_click_mismatch)
        } else {
            let d = detected as f64;
            let tv = 0.5
                * counts
                    .per_mode
                    .iter()
                    .zip(&expected)
                    .map(|(&c, q)| (c as f64 / d - q).abs())
                    .sum::<f64>();
            let spread: f64 = expected.iter().map(|q| q * (1.0 - q)).sum();
            (
                tv,
                thresholds.max_click_mismatch + 3.0 * (spread / d).sqrt(),
            )
        };
        report.click_mismatch = Some(mismatch);
        report.counts = Some(counts);
        report
            .verdicts
            .push(Verdict::at_most("click_mismatch", mismatch, tolerance));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessResult {
    pub gram_offdiag_max: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Largest `|<M e_i, M e_j>|` over `i != j`.
pub fn sharpness_of_matrix(m: &ComplexMatrix, threshold: f64) -> SharpnessResult {
    let gram = m.dagger().product(m);
    let mut worst: f64 = 0.0;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            if i != j {
                worst = worst.max(gram[(i, j)].norm());
            }
        }
    }
    SharpnessResult {
        gram_offdiag_max: worst,
        threshold,
        pass: worst <= threshold,
    }
}

/// Whether orthogonal inputs stay orthogonal through the device.
pub fn sharpness_test(rc: &RealizedCircuit, threshold: f64) -> SharpnessResult {
    sharpness_of_matrix(&rc.unitary(), threshold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub per_mode_fired: Vec<bool>,
    pub per_mode_counts: Vec<u64>,
    pub min_clicks: u64,
    pub pass: bool,
}

/// Every detector must click at least `min_clicks` times and no single
/// detector may take every click.
pub fn detector_coverage_test(
    rc: &RealizedCircuit,
    input: &StateVector,
    n: u64,
    seed: u64,
    min_clicks: u64,
) -> Result<CoverageResult> {
    if n == 0 {
        return Err(Error::Precondition(
            "coverage test needs at least one trial".into(),
        ));
    }
    let counts = sample_trials(rc, input, n, seed)?;
    let detected = counts.detected();
    let pass = detected > 0
        && counts
            .per_mode
            .iter()
            .all(|&c| c >= min_clicks.max(1) && c < detected);
    Ok(CoverageResult {
        per_mode_fired: counts.per_mode.iter().map(|&c| c > 0).collect(),
        per_mode_counts: counts.per_mode,
        min_clicks,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfAdjointResult {
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `U^2 = e^{i a} I` for the unitary part of `rc`.
pub fn self_adjoint_test(rc: &RealizedCircuit, tolerance: f64) -> SelfAdjointResult {
    let u = rc.unitary();
    let deviation = identity_deviation(&u.product(&u));
    SelfAdjointResult {
        deviation,
        tolerance,
        pass: deviation <= tolerance,
    }
}

/// Whether a plan's matrix equals its own adjoint within `tol`.
pub fn is_hermitian(plan: &CircuitPlan, tol: f64) -> bool {
    let u = crate::mesh::reconstruct(plan);
    u.distance(&u.dagger()) <= tol
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationRow {
    pub style: ArrangementStyle,
    pub copies: usize,
    pub identity_deviation: f64,
}

/// Identity deviation of each arrangement, sorted by copy count.
pub fn amplification_scan(
    nominal: &CircuitPlan,
    model: &ErrorModel,
    specs: &[ArrangementSpec],
    seed: u64,
) -> Result<Vec<AmplificationRow>> {
    let mut rows = specs
        .iter()
        .map(|spec| {
            let rc = build_arrangement(nominal, model, spec, seed)?;
            Ok(AmplificationRow {
                style: spec.style.clone(),
                copies: spec.copies,
                identity_deviation: identity_deviation(&rc.unitary()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.copies);
    Ok(rows)
}

/// [`amplification_scan`] averaged over `repetitions` derived seeds.
pub fn amplification_scan_mean(
    nominal: &CircuitPlan,
    model: &ErrorModel,
    specs: &[ArrangementSpec],
    seed: u64,
    repetitions: u64,
) -> Result<Vec<AmplificationRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument(
            "need at least one repetition".into(),
        ));
    }
    let mut total = amplification_scan(nominal, model, specs, derive_seed(seed, 0))?;
    for r in 1..repetitions {
        let next = amplification_scan(nominal, model, specs, derive_seed(seed, r))?;
        for (acc, row) in total.iter_mut().zip(next) {
            acc.identity_deviation += row.identity_deviation;
        }
    }
    for row in &mut total {
        row.identity_deviation /= repetitions as f64;
    }
    Ok(total)
}
