//! Fabrication errors, mirrors, and multi-copy arrangements.
//!
//! A nominal [`CircuitPlan`] becomes a [`RealizedCircuit`] by adding
//! per-gate systematic offsets and zero-mean Gaussian jitter (truncated at
//! four standard deviations). Loss never enters the plan: every
//! transmission factor is folded into one scalar survival probability, so
//! the realized plan stays exactly unitary.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::mesh::{invert_plan, reconstruct, CircuitPlan, GateSpec};

/// Jitter samples beyond this many standard deviations are redrawn.
pub const JITTER_TRUNCATION: f64 = 4.0;

/// Systematic error of one gate of the nominal plan.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateOffset {
    /// Added to a coupler's `theta`.
    pub theta: f64,
    /// Added to a coupler's `phi`.
    pub phi: f64,
    /// Added entry-wise to a phase diagonal; must have one entry per mode.
    pub phases: Option<Vec<f64>>,
}

impl GateOffset {
    pub fn theta(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }

    pub fn phi(phi: f64) -> Self {
        Self {
            phi,
            ..Self::default()
        }
    }
}

/// How a fabricated device deviates from its netlist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModel {
    /// Systematic offsets keyed by gate position in the nominal plan.
    pub systematic: BTreeMap<usize, GateOffset>,
    pub jitter_sigma_theta: f64,
    /// Also applied to every entry of a phase diagonal.
    pub jitter_sigma_phi: f64,
    /// Survival probability of one pass through the whole device.
    pub transmission: f64,
    /// Extra survival factors for individual gates.
    pub component_transmission: BTreeMap<usize, f64>,
    /// Per-mode detection probability; empty means ideal detectors and a
    /// single value applies to every mode.
    pub detector_efficiency: Vec<f64>,
    pub herald_efficiency: f64,
    /// Extra phases `[upper, lower]` picked up in the couplers at the given
    /// positions, inserted as a phase layer right after the coupler.
    pub coupler_phases: BTreeMap<usize, [f64; 2]>,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            systematic: BTreeMap::new(),
            jitter_sigma_theta: 0.0,
            jitter_sigma_phi: 0.0,
            transmission: 1.0,
            component_transmission: BTreeMap::new(),
            detector_efficiency: Vec::new(),
            herald_efficiency: 1.0,
            coupler_phases: BTreeMap::new(),
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {p}"
        )))
    }
}

impl ErrorModel {
    /// A model with no errors at all.
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn with_jitter(sigma_theta: f64, sigma_phi: f64) -> Self {
        Self {
            jitter_sigma_theta: sigma_theta,
            jitter_sigma_phi: sigma_phi,
            ..Self::default()
        }
    }

    pub fn with_systematic(mut self, gate: usize, offset: GateOffset) -> Self {
        self.systematic.insert(gate, offset);
        self
    }

    /// The same model with jitter switched off.
    pub fn systematic_only(&self) -> Self {
        Self {
            jitter_sigma_theta: 0.0,
            jitter_sigma_phi: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self, plan: &CircuitPlan) -> Result<()> {
        for (name, s) in [
            ("jitter_sigma_theta", self.jitter_sigma_theta),
            ("jitter_sigma_phi", self.jitter_sigma_phi),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {s}"
                )));
            }
        }
        check_probability("transmission", self.transmission)?;
        check_probability("herald_efficiency", self.herald_efficiency)?;
        for &p in &self.detector_efficiency {
            check_probability("detector_efficiency", p)?;
        }
        if self.detector_efficiency.len() > 1 && self.detector_efficiency.len() != plan.modes() {
            return Err(Error::DimensionMismatch {
                expected: plan.modes(),
                actual: self.detector_efficiency.len(),
            });
        }
        for (&gate, &t) in &self.component_transmission {
            self.check_position(plan, gate)?;
            check_probability("component_transmission", t)?;
        }
        for (&gate, offset) in &self.systematic {
            self.check_position(plan, gate)?;
            let finite = offset.theta.is_finite()
                && offset.phi.is_finite()
                && offset.phases.iter().flatten().all(|p| p.is_finite());
            if !finite {
                return Err(Error::InvalidArgument(format!(
                    "systematic offset of gate {gate} is not finite"
                )));
            }
            match (&plan.gates()[gate], &offset.phases) {
                (GateSpec::BeamSplitter { .. }, Some(_)) => {
                    return Err(Error::InvalidArgument(format!(
                        "gate {gate} is a coupler; phase-layer offsets do not apply"
                    )))
                }
                (GateSpec::PhaseDiagonal { .. }, _) if offset.theta != 0.0 || offset.phi != 0.0 => {
                    return Err(Error::InvalidArgument(format!(
                        "gate {gate} is a phase layer; use `phases` for its offsets"
                    )))
                }
                (GateSpec::PhaseDiagonal { phases }, Some(d)) if d.len() != phases.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: phases.len(),
                        actual: d.len(),
                    })
                }
                _ => {}
            }
        }
        for (&gate, phases) in &self.coupler_phases {
            self.check_position(plan, gate)?;
            if !plan.gates()[gate].is_beam_splitter() {
                return Err(Error::InvalidArgument(format!(
                    "coupler phases given for non-coupler gate {gate}"
                )));
            }
            if phases.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidArgument(
                    "coupler phases must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    fn check_position(&self, plan: &CircuitPlan, gate: usize) -> Result<()> {
        if gate < plan.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "gate position {gate} does not exist in a plan of {} gates",
                plan.len()
            )))
        }
    }

    /// Per-mode detector efficiencies for an `n`-mode device.
    pub fn detector_efficiencies(&self, n: usize) -> Vec<f64> {
        match self.detector_efficiency.as_slice() {
            [] => vec![1.0; n],
            [single] => vec![*single; n],
            many => many.to_vec(),
        }
    }

    /// Survival probability of one pass through a device built from `plan`.
    pub fn survival(&self) -> f64 {
        self.transmission * self.component_transmission.values().product::<f64>()
    }
}

/// Which physical device a parameter delta belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRole {
    Forward,
    Mirror,
}

/// Realized-minus-nominal parameters of one gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDelta {
    pub role: DeviceRole,
    pub copy: usize,
    pub gate: usize,
    pub theta: f64,
    pub phi: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub phases: Vec<f64>,
}

/// A fabricated device: concrete perturbed netlist plus loss and detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedCircuit {
    pub plan: CircuitPlan,
    /// Probability that the photon survives the device.
    pub survival: f64,
    pub detector_efficiency: Vec<f64>,
    pub herald_efficiency: f64,
    /// Parameter deltas against the nominal plan, when known.
    pub deltas: Vec<GateDelta>,
}

impl RealizedCircuit {
    /// Lossless device with perfect detection and heralding.
    pub fn ideal(plan: CircuitPlan) -> Self {
        let n = plan.modes();
        Self {
            plan,
            survival: 1.0,
            detector_efficiency: vec![1.0; n],
            herald_efficiency: 1.0,
            deltas: Vec::new(),
        }
    }

    pub fn modes(&self) -> usize {
        self.plan.modes()
    }

    /// Unitary part of the transfer matrix.
    pub fn unitary(&self) -> ComplexMatrix {
        reconstruct(&self.plan)
    }

    /// Full amplitude transfer matrix, `sqrt(survival) * U`.
    pub fn transfer(&self) -> ComplexMatrix {
        self.unitary().scale(self.survival.sqrt().into())
    }
}

/// Deterministic child seed for stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    SplitMix64::seed_from_u64(seed ^ stream.wrapping_add(1).wrapping_mul(GOLDEN)).next_u64()
}

fn truncated_normal(rng: &mut impl Rng) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= JITTER_TRUNCATION {
            return z;
        }
    }
}

/// Applies systematic offsets and seeded jitter to every gate of `plan`.
///
/// A standard-normal draw is taken for every parameter regardless of the
/// sigmas, so two models that differ only in sigma see the same noise
/// pattern for the same seed.
pub fn perturb(plan: &CircuitPlan, model: &ErrorModel, seed: u64) -> Result<RealizedCircuit> {
    model.validate(plan)?;
    let n = plan.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::with_capacity(plan.len());
    let mut deltas = Vec::with_capacity(plan.len());
    let zero = GateOffset::default();

    for (pos, gate) in plan.gates().iter().enumerate() {
        let offset = model.systematic.get(&pos).unwrap_or(&zero);
        match gate {
            GateSpec::BeamSplitter { j, theta, phi } => {
                let dt = offset.theta + model.jitter_sigma_theta * truncated_normal(&mut rng);
                let dp = offset.phi + model.jitter_sigma_phi * truncated_normal(&mut rng);
                gates.push(GateSpec::beam_splitter(*j, theta + dt, phi + dp));
                deltas.push(GateDelta {
                    role: DeviceRole::Forward,
                    copy: 0,
                    gate: pos,
                    theta: dt,
                    phi: dp,
                    phases: Vec::new(),
                });
                if let Some([upper, lower]) = model.coupler_phases.get(&pos) {
                    let mut extra = vec![0.0; n];
                    extra[j - 1] = *upper;
                    extra[*j] = *lower;
                    gates.push(GateSpec::phase_diagonal(extra));
                }
            }
            GateSpec::PhaseDiagonal { phases } => {
                let dps: Vec<f64> = (0..phases.len())
                    .map(|k| {
                        let sys = offset.phases.as_ref().map_or(0.0, |v| v[k]);
                        sys + model.jitter_sigma_phi * truncated_normal(&mut rng)
                    })
                    .collect();
                gates.push(GateSpec::phase_diagonal(
                    phases.iter().zip(&dps).map(|(p, d)| p + d).collect(),
                ));
                deltas.push(GateDelta {
                    role: DeviceRole::Forward,
                    copy: 0,
                    gate: pos,
                    theta: 0.0,
                    phi: 0.0,
                    phases: dps,
                });
            }
        }
    }

    Ok(RealizedCircuit {
        plan: CircuitPlan::new(n, gates)?,
        survival: model.survival(),
        detector_efficiency: model.detector_efficiencies(n),
        herald_efficiency: model.herald_efficiency,
        deltas,
    })
}

/// Mirror device built with the realized parameters of `rc`, i.e. with
/// errors exactly opposite to the original's. Loss and detection are kept.
pub fn mirror_circuit(rc: &RealizedCircuit) -> RealizedCircuit {
    RealizedCircuit {
        plan: invert_plan(&rc.plan),
        survival: rc.survival,
        detector_efficiency: rc.detector_efficiency.clone(),
        herald_efficiency: rc.herald_efficiency,
        deltas: rc
            .deltas
            .iter()
            .map(|d| GateDelta {
                role: DeviceRole::Mirror,
                ..d.clone()
            })
            .collect(),
    }
}

/// Separately fabricated mirror: the same systematic errors as the forward
/// device, fresh jitter drawn from `seed`.
pub fn independent_mirror(
    nominal: &CircuitPlan,
    model: &ErrorModel,
    seed: u64,
) -> Result<RealizedCircuit> {
    Ok(mirror_circuit(&perturb(nominal, model, seed)?))
}

/// How the mirror devices of a test are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorMode {
    /// Mirror uses the forward device's realized parameters.
    #[default]
    Exact,
    /// Mirror is fabricated on its own and gets fresh jitter.
    Independent,
}

/// One device in an explicit ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Forward(usize),
    Mirror(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrangementStyle {
    /// `U_1 ... U_n` followed by the mirrors `U'_n^dagger ... U'_1^dagger`.
    MirrorsAtBack,
    /// `(U_1 U'_1^dagger) ... (U_n U'_n^dagger)`.
    Alternating,
    /// `copies` forward devices in a row, no mirrors; only meaningful for a
    /// self-adjoint target. `copies` must be even.
    EvenSelfAdjoint,
    /// Any ordering of the `copies` forward devices and their mirrors, in
    /// the order the photon meets them.
    ExplicitPermutation(Vec<Slot>),
}

/// A multi-copy test arrangement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrangementSpec {
    pub copies: usize,
    pub style: ArrangementStyle,
    /// Fresh jitter per copy, rather than identical copies.
    pub independent_errors: bool,
    #[serde(default)]
    pub mirror: MirrorMode,
}

impl ArrangementSpec {
    pub fn new(style: ArrangementStyle, copies: usize) -> Self {
        Self {
            copies,
            style,
            independent_errors: false,
            mirror: MirrorMode::Exact,
        }
    }

    pub fn independent(mut self) -> Self {
        self.independent_errors = true;
        self
    }

    pub fn with_mirror(mut self, mirror: MirrorMode) -> Self {
        self.mirror = mirror;
        self
    }

    pub fn uses_mirrors(&self) -> bool {
        !matches!(self.style, ArrangementStyle::EvenSelfAdjoint)
    }

    pub fn validate(&self) -> Result<()> {
        if self.copies < 1 {
            return Err(Error::InvalidArgument(
                "an arrangement needs at least one copy".into(),
            ));
        }
        match &self.style {
            ArrangementStyle::EvenSelfAdjoint if !self.copies.is_multiple_of(2) => {
                Err(Error::InvalidArgument(format!(
                    "self-adjoint arrangement needs an even number of copies, got {}",
                    self.copies
                )))
            }
            ArrangementStyle::ExplicitPermutation(slots) => {
                let mut seen_fwd = vec![false; self.copies];
                let mut seen_mir = vec![false; self.copies];
                for slot in slots {
                    let (seen, k) = match *slot {
                        Slot::Forward(k) => (&mut seen_fwd, k),
                        Slot::Mirror(k) => (&mut seen_mir, k),
                    };
                    if k >= self.copies || std::mem::replace(&mut seen[k], true) {
                        return Err(Error::InvalidArgument(format!(
                            "permutation slot {slot:?} is out of range or repeated"
                        )));
                    }
                }
                if seen_fwd.iter().chain(&seen_mir).all(|&s| s) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(
                        "permutation must list every forward copy and every mirror exactly once"
                            .into(),
                    ))
                }
            }
            _ => Ok(()),
        }
    }

    /// Devices in the order the photon meets them.
    fn order(&self) -> Vec<Slot> {
        let n = self.copies;
        match &self.style {
            ArrangementStyle::MirrorsAtBack => (0..n)
                .map(Slot::Forward)
                .chain((0..n).rev().map(Slot::Mirror))
                .collect(),
            ArrangementStyle::Alternating => (0..n)
                .flat_map(|k| [Slot::Forward(k), Slot::Mirror(k)])
                .collect(),
            ArrangementStyle::EvenSelfAdjoint => (0..n).map(Slot::Forward).collect(),
            ArrangementStyle::ExplicitPermutation(slots) => slots.clone(),
        }
    }
}

/// Chains devices per `spec`. With an empty `mirrors` slice, mirror slots
/// use [`mirror_circuit`] of the matching forward copy. Survival
/// probabilities multiply; detection is taken from the first forward copy.
pub fn compose_arrangement(
    fwd_copies: &[RealizedCircuit],
    mirrors: &[RealizedCircuit],
    spec: &ArrangementSpec,
) -> Result<RealizedCircuit> {
    spec.validate()?;
    if fwd_copies.len() != spec.copies {
        return Err(Error::InvalidArgument(format!(
            "arrangement expects {} forward copies, got {}",
            spec.copies,
            fwd_copies.len()
        )));
    }
    if spec.uses_mirrors() && !mirrors.is_empty() && mirrors.len() != spec.copies {
        return Err(Error::InvalidArgument(format!(
            "arrangement expects {} mirrors, got {}",
            spec.copies,
            mirrors.len()
        )));
    }
    let n = fwd_copies[0].modes();
    if let Some(bad) = fwd_copies.iter().chain(mirrors).find(|rc| rc.modes() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.modes(),
        });
    }
    let exact: Vec<RealizedCircuit> = if spec.uses_mirrors() && mirrors.is_empty() {
        fwd_copies.iter().map(mirror_circuit).collect()
    } else {
        Vec::new()
    };
    let mirrors = if exact.is_empty() { mirrors } else { &exact };

    let mut gates = Vec::new();
    let mut survival = 1.0;
    let mut deltas = Vec::new();
    for slot in spec.order() {
        let (rc, copy) = match slot {
            Slot::Forward(k) => (&fwd_copies[k], k),
            Slot::Mirror(k) => (&mirrors[k], k),
        };
        gates.extend(rc.plan.gates().iter().cloned());
        survival *= rc.survival;
        deltas.extend(rc.deltas.iter().map(|d| GateDelta { copy, ..d.clone() }));
    }
    Ok(RealizedCircuit {
        plan: CircuitPlan::new(n, gates)?,
        survival,
        detector_efficiency: fwd_copies[0].detector_efficiency.clone(),
        herald_efficiency: fwd_copies[0].herald_efficiency,
        deltas,
    })
}

/// Fabricates every device an arrangement needs and chains them.
///
/// Forward copy `k` draws its jitter from `derive_seed(seed, k)` when
/// `independent_errors` is set and from `seed` otherwise, so a one-copy
/// arrangement fabricates exactly `perturb(nominal, model, seed)`.
/// Independent mirrors use a disjoint range of streams.
pub fn build_arrangement(
    nominal: &CircuitPlan,
    model: &ErrorModel,
    spec: &ArrangementSpec,
    seed: u64,
) -> Result<RealizedCircuit> {
    const MIRROR_STREAMS: u64 = 1 << 32;
    spec.validate()?;
    let fwd = (0..spec.copies)
        .map(|k| {
            let s = if spec.independent_errors {
                derive_seed(seed, k as u64)
            } else {
                seed
            };
            perturb(nominal, model, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mirrors = match spec.mirror {
        MirrorMode::Independent if spec.uses_mirrors() => (0..spec.copies)
            .map(|k| {
                let stream = MIRROR_STREAMS + if spec.independent_errors { k as u64 } else { 0 };
                independent_mirror(nominal, model, derive_seed(seed, stream))
            })
            .collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    compose_arrangement(&fwd, &mirrors, spec)
}
