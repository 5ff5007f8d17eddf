//! Netlists of couplers and phase layers.
//!
//! A [`CircuitPlan`] lists gates in the order a photon meets them. The
//! matrix of a plan is the product with the *last* gate leftmost, so the
//! plan `[g1, g2, g3]` realizes `G3 * G2 * G1`.

mod clements;
mod format;
mod ux;

pub use clements::clements_decompose;
pub use format::{
    plan_from_json, plan_to_json, read_plan, read_unitary, write_plan, write_unitary,
};
pub use ux::{
    ux_chain_plan, ux_conjugated_plan, ux_matrix, ux_reference, UxReference, B12_THETA, B23_PHI,
    B23_THETA, B23_THETA_TABULATED,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{t_block, ComplexMatrix};

/// One element of a mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GateSpec {
    /// `T_{j,j+1}(theta, phi)`: couples modes `j` and `j+1`, counted from 1.
    #[serde(rename = "bs")]
    BeamSplitter { j: usize, theta: f64, phi: f64 },
    /// `diag(e^{i phi_1}, ..., e^{i phi_n})`.
    #[serde(rename = "pd")]
    PhaseDiagonal { phases: Vec<f64> },
}

impl GateSpec {
    pub fn beam_splitter(j: usize, theta: f64, phi: f64) -> Self {
        GateSpec::BeamSplitter { j, theta, phi }
    }

    pub fn phase_diagonal(phases: Vec<f64>) -> Self {
        GateSpec::PhaseDiagonal { phases }
    }

    pub fn is_beam_splitter(&self) -> bool {
        matches!(self, GateSpec::BeamSplitter { .. })
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            GateSpec::BeamSplitter { j, theta, phi } => {
                if *j < 1 || *j + 1 > n {
                    return Err(Error::InvalidArgument(format!(
                        "beam splitter index j={j} outside 1..={} for {n} modes",
                        n.saturating_sub(1)
                    )));
                }
                if !theta.is_finite() || !phi.is_finite() {
                    return Err(Error::InvalidArgument(
                        "beam splitter angles must be finite".into(),
                    ));
                }
            }
            GateSpec::PhaseDiagonal { phases } => {
                if phases.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: phases.len(),
                    });
                }
                if phases.iter().any(|p| !p.is_finite()) {
                    return Err(Error::InvalidArgument("phases must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Inverse gate sequence in application order.
    ///
    /// `T(theta, phi)^dagger = T(0, -phi) T(-theta, 0)`, so the inverse of a
    /// coupler is the pure coupler `T(-theta, 0)` followed by the port phase
    /// `T(0, -phi)`.
    pub fn inverse(&self) -> Vec<GateSpec> {
        match self {
            GateSpec::BeamSplitter { j, theta, phi } => vec![
                GateSpec::beam_splitter(*j, -theta, 0.0),
                GateSpec::beam_splitter(*j, 0.0, -phi),
            ],
            GateSpec::PhaseDiagonal { phases } => {
                vec![GateSpec::phase_diagonal(
                    phases.iter().map(|p| -p).collect(),
                )]
            }
        }
    }

    /// Full `n x n` matrix of this gate.
    pub fn matrix(&self, n: usize) -> Result<ComplexMatrix> {
        self.validate(n)?;
        let mut m = ComplexMatrix::identity(n);
        self.apply_left(&mut m);
        Ok(m)
    }

    /// `m <- G m`, touching only the rows the gate acts on.
    pub(crate) fn apply_left(&self, m: &mut ComplexMatrix) {
        match self {
            GateSpec::BeamSplitter { j, theta, phi } => {
                let blk = t_block(*theta, *phi).expect("validated angles");
                let (r0, r1) = (j - 1, *j);
                for c in 0..m.cols() {
                    let (a, b) = (m[(r0, c)], m[(r1, c)]);
                    m[(r0, c)] = blk[(0, 0)] * a + blk[(0, 1)] * b;
                    m[(r1, c)] = blk[(1, 0)] * a + blk[(1, 1)] * b;
                }
            }
            GateSpec::PhaseDiagonal { phases } => {
                for (r, &p) in phases.iter().enumerate() {
                    let e = Complex64::from_polar(1.0, p);
                    for c in 0..m.cols() {
                        m[(r, c)] *= e;
                    }
                }
            }
        }
    }
}

/// Ordered netlist over `n` modes; the first gate acts on the photon first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitPlan {
    n: usize,
    gates: Vec<GateSpec>,
}

impl CircuitPlan {
    pub fn new(n: usize, gates: Vec<GateSpec>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument(
                "a plan needs at least one mode".into(),
            ));
        }
        for g in &gates {
            g.validate(n)?;
        }
        Ok(Self { n, gates })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            gates: Vec::new(),
        }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn beam_splitter_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_beam_splitter()).count()
    }

    pub fn push(&mut self, gate: GateSpec) -> Result<()> {
        gate.validate(self.n)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Concatenates `other` after `self` (the photon traverses `self` first).
    pub fn then(&self, other: &CircuitPlan) -> Result<CircuitPlan> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Ok(CircuitPlan { n: self.n, gates })
    }
}

/// Transfer matrix of a plan: `G_k ... G_2 G_1` for gates `[G_1, ..., G_k]`.
pub fn reconstruct(plan: &CircuitPlan) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(plan.n);
    for g in &plan.gates {
        g.apply_left(&mut m);
    }
    m
}

/// Mirror netlist: gate order reversed, every angle and phase negated, each
/// coupler split into its pure-coupler and port-phase parts.
pub fn invert_plan(plan: &CircuitPlan) -> CircuitPlan {
    let gates = plan
        .gates
        .iter()
        .rev()
        .flat_map(GateSpec::inverse)
        .collect();
    CircuitPlan { n: plan.n, gates }
}
