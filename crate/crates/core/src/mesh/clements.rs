//! Rectangular-mesh decomposition of an arbitrary unitary.
//!
//! Anti-diagonals of `U` are nulled in turn: even-indexed passes multiply
//! from the right by `T^{-1}` on a pair of columns, odd-indexed passes
//! multiply from the left by `T` on a pair of rows. What remains is a
//! diagonal `D`. The left factors are then pushed through `D` using
//!
//! ```text
//! T(t, p)^{-1} diag(d1, d2) = diag(d1, e^{-ip} d1) T(-t, arg(d2 / d1))
//! ```
//!
//! which leaves `U = D' T_1 ... T_k` with a single trailing phase layer,
//! omitted when all its phases are zero.

use num_complex::Complex64;

use super::{CircuitPlan, GateSpec};
use crate::error::{Error, Result};
use crate::matrix::{t_block, unitarity_deviation, ComplexMatrix};

/// Largest accepted `||U^dagger U - I||_F`.
pub const UNITARITY_PRECONDITION: f64 = 1e-8;

/// Nulling targets below this magnitude emit an identity coupler.
const DEGENERATE: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coupler settings, 0-based upper mode `m` (couples `m` and `m + 1`).
#[derive(Clone, Copy, Debug)]
struct Rotation {
    m: usize,
    theta: f64,
    phi: f64,
}

/// Decomposes a unitary into at most `N(N-1)/2` couplers followed by at
/// most one phase diagonal, such that `reconstruct(plan) = u`.
pub fn clements_decompose(u: &ComplexMatrix) -> Result<CircuitPlan> {
    if !u.is_square() {
        return Err(Error::InvalidArgument(format!(
            "decomposition needs a square matrix, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let deviation = unitarity_deviation(u);
    if !(deviation <= UNITARITY_PRECONDITION) {
        return Err(Error::NotUnitary { deviation });
    }
    let n = u.rows();
    let mut work = u.clone();
    let mut right: Vec<Rotation> = Vec::new();
    let mut left: Vec<Rotation> = Vec::new();

    for pass in 0..n.saturating_sub(1) {
        if pass % 2 == 0 {
            for j in 0..=pass {
                let col = pass - j;
                let row = n - 1 - j;
                right.push(null_from_right(&mut work, row, col));
            }
        } else {
            for j in 1..=pass + 1 {
                let row = n + j - pass - 2;
                let col = j - 1;
                left.push(null_from_left(&mut work, row, col));
            }
        }
    }

    let mut diag: Vec<Complex64> = (0..n).map(|k| work[(k, k)]).collect();
    // Application order: right factors first (innermost), then the commuted
    // left factors from the last one recorded to the first.
    let mut gates: Vec<GateSpec> = right
        .iter()
        .map(|r| GateSpec::beam_splitter(r.m + 1, r.theta, r.phi))
        .collect();
    for rot in left.iter().rev() {
        let (d1, d2) = (diag[rot.m], diag[rot.m + 1]);
        let phi = (d2 / d1).arg();
        diag[rot.m + 1] = d1 * Complex64::from_polar(1.0, -rot.phi);
        gates.push(GateSpec::beam_splitter(rot.m + 1, -rot.theta, phi));
    }
    gates.retain(
        |g| !matches!(g, GateSpec::BeamSplitter { theta, phi, .. } if *theta == 0.0 && *phi == 0.0),
    );
    let phases: Vec<f64> = diag.iter().map(|d| d.arg()).collect();
    if phases.iter().any(|&p| p != 0.0) {
        gates.push(GateSpec::phase_diagonal(phases));
    }
    CircuitPlan::new(n, gates)
}

/// Zeroes `work[row, col]` with `work <- work T^{-1}` on columns `(col, col+1)`.
fn null_from_right(work: &mut ComplexMatrix, row: usize, col: usize) -> Rotation {
    let target = work[(row, col)];
    let partner = work[(row, col + 1)];
    let rot = if target.norm() < DEGENERATE {
        Rotation {
            m: col,
            theta: 0.0,
            phi: 0.0,
        }
    } else {
        Rotation {
            m: col,
            theta: target.norm().atan2(partner.norm()),
            phi: (I * partner * target.conj()).arg(),
        }
    };
    let inv = t_block(rot.theta, rot.phi).expect("finite angles").dagger();
    for r in 0..work.rows() {
        let (a, b) = (work[(r, col)], work[(r, col + 1)]);
        work[(r, col)] = a * inv[(0, 0)] + b * inv[(1, 0)];
        work[(r, col + 1)] = a * inv[(0, 1)] + b * inv[(1, 1)];
    }
    if rot.theta != 0.0 {
        work[(row, col)] = Complex64::new(0.0, 0.0);
    }
    rot
}

/// Zeroes `work[row, col]` with `work <- T work` on rows `(row-1, row)`.
fn null_from_left(work: &mut ComplexMatrix, row: usize, col: usize) -> Rotation {
    let m = row - 1;
    let target = work[(row, col)];
    let partner = work[(m, col)];
    let rot = if target.norm() < DEGENERATE {
        Rotation {
            m,
            theta: 0.0,
            phi: 0.0,
        }
    } else {
        Rotation {
            m,
            theta: target.norm().atan2(partner.norm()),
            phi: (-I * target.conj() * partner).arg(),
        }
    };
    let blk = t_block(rot.theta, rot.phi).expect("finite angles");
    for c in 0..work.cols() {
        let (a, b) = (work[(m, c)], work[(row, c)]);
        work[(m, c)] = blk[(0, 0)] * a + blk[(0, 1)] * b;
        work[(row, c)] = blk[(1, 0)] * a + blk[(1, 1)] * b;
    }
    if rot.theta != 0.0 {
        work[(row, col)] = Complex64::new(0.0, 0.0);
    }
    rot
}
