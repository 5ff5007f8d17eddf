//! The three-mode `U_x` device and its two coupler factorizations.
//!
//! `U_x` diagonalizes `S_x`; its columns are the `S_x` eigenvectors. The
//! coupler settings below reproduce the explicit `B` matrices of the
//! factorization. The tabulated `theta = 2 pi / 3` for `B_{2,3}` does not
//! reproduce that matrix (it flips the sign of the block diagonal), so the
//! plans use `pi / 3`; [`B23_THETA_TABULATED`] is kept for comparison.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;

use super::{CircuitPlan, GateSpec};
use crate::matrix::ComplexMatrix;

/// `acos(sqrt(2/3))`, the `B_{1,2}` coupler angle.
pub const B12_THETA: f64 = 0.615_479_708_670_387_4;
pub const B12_PHI: f64 = -FRAC_PI_2;
pub const B23_THETA: f64 = PI / 3.0;
pub const B23_THETA_TABULATED: f64 = 2.0 * PI / 3.0;
pub const B23_PHI: f64 = PI;
pub const B12_PRIME_THETA: f64 = -B12_THETA;
pub const B12_PRIME_PHI: f64 = PI;

/// `U_x = 1/2 [[1, sqrt2, 1], [sqrt2, 0, -sqrt2], [1, -sqrt2, 1]]`.
pub fn ux_matrix() -> ComplexMatrix {
    let rows = [
        [1.0, SQRT_2, 1.0],
        [SQRT_2, 0.0, -SQRT_2],
        [1.0, -SQRT_2, 1.0],
    ];
    ComplexMatrix::from_fn(3, 3, |r, c| Complex64::new(rows[r][c] / 2.0, 0.0))
}

/// `U_x = B_{1,2}^{-1} B_{2,3} D B_{1,2}`, as a netlist.
pub fn ux_conjugated_plan() -> CircuitPlan {
    let b12 = GateSpec::beam_splitter(1, B12_THETA, B12_PHI);
    let mut gates = vec![
        b12.clone(),
        GateSpec::phase_diagonal(vec![0.0, PI, PI]),
        GateSpec::beam_splitter(2, B23_THETA, B23_PHI),
    ];
    gates.extend(b12.inverse());
    CircuitPlan::new(3, gates).expect("static plan is valid")
}

/// `U_x = D' B'_{1,2} B_{2,3} B_{1,2}` with the given `B_{2,3}` angle.
///
/// Gate positions: 0 = `B_{1,2}`, 1 = `B_{2,3}`, 2 = `B'_{1,2}`, 3 = `D'`.
pub fn ux_chain_plan(b23_theta: f64) -> CircuitPlan {
    CircuitPlan::new(
        3,
        vec![
            GateSpec::beam_splitter(1, B12_THETA, B12_PHI),
            GateSpec::beam_splitter(2, b23_theta, B23_PHI),
            GateSpec::beam_splitter(1, B12_PRIME_THETA, B12_PRIME_PHI),
            GateSpec::phase_diagonal(vec![0.0, FRAC_PI_2, PI]),
        ],
    )
    .expect("static plan is valid")
}

/// Closed-form `U_x` with both canonical netlists.
#[derive(Clone, Debug)]
pub struct UxReference {
    pub matrix: ComplexMatrix,
    /// `B^{-1} B D B` form.
    pub conjugated_plan: CircuitPlan,
    /// `D' B' B B` form; the default device netlist.
    pub chain_plan: CircuitPlan,
}

pub fn ux_reference() -> UxReference {
    UxReference {
        matrix: ux_matrix(),
        conjugated_plan: ux_conjugated_plan(),
        chain_plan: ux_chain_plan(B23_THETA),
    }
}
