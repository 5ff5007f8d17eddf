//! Small dense complex matrices and state vectors.
//!
//! Meshes are tiny (a handful of modes), so everything here is a plain
//! row-major `Vec<Complex64>` with no attempt at blocking or sparsity.
//! Constructors for the mesh building blocks live here as well: the
//! two-mode coupler [`t_block`], its embedding into `n` modes
//! [`embed_t`], and the spin-1 observable [`spin1_observable`].

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for "equals" checks on matrices assembled from
/// closed-form constants.
pub const TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from nested rows. All rows must have equal, non-zero length
    /// and every entry must be finite.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidArgument("matrix must be at least 1x1".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                actual: bad.len(),
            });
        }
        let data: Vec<Complex64> = rows.into_iter().flatten().collect();
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (k, &z) in entries.iter().enumerate() {
            m[(k, k)] = z;
        }
        m
    }

    /// `diag(e^{i phi_1}, ..., e^{i phi_n})`.
    pub fn phase_diagonal(phases: &[f64]) -> Self {
        let entries: Vec<Complex64> = phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        Self::diagonal(&entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        Ok(self.product(rhs))
    }

    pub(crate) fn product(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: rhs.rows * rhs.cols,
            });
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance `||self - rhs||_F`; panics on shape mismatch.
    pub fn distance(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).sum()
    }

    /// `M v` for a state vector of matching dimension.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: v.dim(),
            });
        }
        let amplitudes = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(&v.amplitudes)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(StateVector { amplitudes })
    }

    /// Integer power of a square matrix (`m^0 = I`).
    pub fn pow(&self, exponent: u32) -> ComplexMatrix {
        assert!(self.is_square());
        (0..exponent).fold(ComplexMatrix::identity(self.rows), |acc, _| {
            self.product(&acc)
        })
    }

    /// Haar-random unitary from a complex Ginibre matrix via Gram-Schmidt.
    pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
        loop {
            let mut cols: Vec<Vec<Complex64>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                        })
                        .collect()
                })
                .collect();
            let mut degenerate = false;
            for k in 0..n {
                for j in 0..k {
                    let proj: Complex64 = cols[j]
                        .iter()
                        .zip(&cols[k])
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let (head, tail) = cols.split_at_mut(k);
                    for (x, q) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= proj * q;
                    }
                }
                let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-8 {
                    degenerate = true;
                    break;
                }
                cols[k].iter_mut().for_each(|z| *z /= norm);
            }
            if !degenerate {
                return ComplexMatrix::from_fn(n, n, |r, c| cols[c][r]);
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:>9.5}{:+.5}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Complex amplitudes over the modes of a mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument(
                "state vector must have at least one mode".into(),
            ));
        }
        if amplitudes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(
                "state amplitudes must be finite".into(),
            ));
        }
        Ok(Self { amplitudes })
    }

    /// Single photon in `mode` (0-based) of an `n`-mode mesh.
    pub fn basis(n: usize, mode: usize) -> Result<Self> {
        if mode >= n {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for {n} modes"
            )));
        }
        let mut amplitudes = vec![ZERO; n];
        amplitudes[mode] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: f64) -> StateVector {
        StateVector {
            amplitudes: self.amplitudes.iter().map(|z| z * factor).collect(),
        }
    }

    /// `|amplitude|^2` per mode.
    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "angles must be finite, got {values:?}"
        )))
    }
}

/// Two-mode coupler `[[cos t, i e^{i p} sin t], [i sin t, e^{i p} cos t]]`.
///
/// `cos t` is the reflectivity, `sin t` the transmittance, and `p` the phase
/// of a shifter on the second input port.
pub fn t_block(theta: f64, phi: f64) -> Result<ComplexMatrix> {
    check_finite(&[theta, phi])?;
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    Ok(ComplexMatrix {
        rows: 2,
        cols: 2,
        data: vec![Complex64::new(c, 0.0), I * e * s, I * s, e * c],
    })
}

/// `n x n` identity with [`t_block`] placed on modes `j, j+1` (1-based, as in
/// the usual `T_{j,j+1}` notation).
pub fn embed_t(n: usize, j: usize, theta: f64, phi: f64) -> Result<ComplexMatrix> {
    if n < 2 || j < 1 || j > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "coupler index j={j} must satisfy 1 <= j <= n-1 for n={n}"
        )));
    }
    let block = t_block(theta, phi)?;
    let mut m = ComplexMatrix::identity(n);
    let base = j - 1;
    for r in 0..2 {
        for c in 0..2 {
            m[(base + r, base + c)] = block[(r, c)];
        }
    }
    Ok(m)
}

/// Spin-1 observable `S(theta, phi)`; `S(0,0) = S_z`, `S(pi/2,0) = S_x`.
pub fn spin1_observable(theta: f64, phi: f64) -> Result<ComplexMatrix> {
    check_finite(&[theta, phi])?;
    let (s, c) = theta.sin_cos();
    let off = s / std::f64::consts::SQRT_2;
    let up = Complex64::from_polar(off, -phi);
    let down = Complex64::from_polar(off, phi);
    let cr = Complex64::new(c, 0.0);
    ComplexMatrix::from_rows(vec![
        vec![cr, up, ZERO],
        vec![down, ZERO, up],
        vec![ZERO, down, -cr],
    ])
}

/// Left-to-right product `ms[0] * ms[1] * ...`; an empty chain is `I_n`.
pub fn multiply_chain(ms: &[ComplexMatrix], n: usize) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(n);
    for m in ms {
        acc = acc.matmul(m)?;
    }
    Ok(acc)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

/// `||M^dagger M - I||_F`.
pub fn unitarity_deviation(m: &ComplexMatrix) -> f64 {
    let gram = m.dagger().product(m);
    gram.distance(&ComplexMatrix::identity(gram.rows()))
}

/// `min_alpha ||M - e^{i alpha} I||_F`, attained at `alpha = arg tr M`.
///
/// Global phase is invisible to photon counting, so this is the distance
/// that matters when asking whether a device composes to the identity.
pub fn identity_deviation(m: &ComplexMatrix) -> f64 {
    assert!(m.is_square(), "identity deviation needs a square matrix");
    let tr = m.trace();
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
    m.distance(&ComplexMatrix::identity(m.rows()).scale(phase))
}
