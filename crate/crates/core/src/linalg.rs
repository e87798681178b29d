//! Dense complex linear algebra: tensor products, partial traces, Hermitian
//! eigendecomposition and unitary evolution operators.
//!
//! Everything here works on small dense matrices (system dimensions up to a
//! few hundred). Storage is row-major `Vec<Complex64>`.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Largest Hilbert-space dimension a tensor product is allowed to produce.
pub const MAX_HILBERT_DIM: usize = 4096;

/// Relative tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tensor product dimension {0} exceeds maximum {MAX_HILBERT_DIM}")]
    DimensionOverflow(usize),
    #[error("matrix is not Hermitian: max |M - M^dag| = {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigensolver failed to converge after {sweeps} sweeps (off-norm {off:.3e})")]
    ConvergenceFailure { sweeps: usize, off: f64 },
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from a row-major slice of entries.
    pub fn from_slice(rows: usize, cols: usize, entries: &[C64]) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, data: entries.to_vec() })
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, a: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = k * other.cols;
                let out_row = i * other.cols;
                for j in 0..other.cols {
                    out.data[out_row + j] += a * other.data[row + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec: dimension mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            let row = i * self.cols;
            for j in 0..self.cols {
                acc += self.data[row + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// tr(self * other) without forming the product.
    pub fn trace_prod(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows, "trace_prod: inner dimensions differ");
        assert_eq!(self.rows, other.cols, "trace_prod: outer dimensions differ");
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    /// Max entry magnitude of (self - other).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from Hermiticity relative to the largest entry.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }
}

/// Kronecker product `a (x) b`, first factor varying slowest (probe first for
/// probe-system products).
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !a.all_finite() || !b.all_finite() {
        return Err(LinalgError::NonFinite);
    }
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    if rows.max(cols) > MAX_HILBERT_DIM {
        return Err(LinalgError::DimensionOverflow(rows.max(cols)));
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a[(ia, ja)];
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

/// Trace out the system factor of a (dim_probe * dim_sys) square matrix,
/// returning the dim_probe reduced matrix. The probe index varies slowest.
pub fn partial_trace_system(
    m: &ComplexMatrix,
    dim_probe: usize,
    dim_sys: usize,
) -> Result<ComplexMatrix, LinalgError> {
    let d = dim_probe * dim_sys;
    if m.rows() != d || m.cols() != d {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected {}x{} for probe {} x system {}, got {}x{}",
            d,
            d,
            dim_probe,
            dim_sys,
            m.rows(),
            m.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(dim_probe, dim_probe);
    for i in 0..dim_probe {
        for j in 0..dim_probe {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..dim_sys {
                acc += m[(i * dim_sys + s, j * dim_sys + s)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// the unitary of column eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    pub values: Vec<f64>,
    /// Columns are eigenvectors, phase-fixed so the largest-magnitude
    /// component of each column is real positive.
    pub vectors: ComplexMatrix,
}

impl Eigendecomposition {
    /// Reconstruct V diag(values) V^dag.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.values.len();
        let mut vd = self.vectors.clone();
        for j in 0..d {
            for i in 0..d {
                vd[(i, j)] *= C64::new(self.values[j], 0.0);
            }
        }
        vd.matmul(&self.vectors.adjoint())
    }

    /// V diag(e^{-i E t}) V^dag.
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        let d = self.values.len();
        let mut vd = self.vectors.clone();
        for j in 0..d {
            let ph = C64::from_polar(1.0, -self.values[j] * t);
            for i in 0..d {
                vd[(i, j)] *= ph;
            }
        }
        vd.matmul(&self.vectors.adjoint())
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization for Hermitian matrices.
///
/// Deterministic for a given input; converges quadratically. Residuals stay
/// near machine precision for the dimensions used here (<= 512).
fn jacobi_hermitian(m: &ComplexMatrix) -> Result<Eigendecomposition, LinalgError> {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.max_abs().max(1e-300);
    let tol = 1e-15 * scale;

    let mut last_off = 0.0;
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].norm());
            }
        }
        last_off = off;
        if off <= tol {
            return Ok(finish_jacobi(a, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let abs_apq = apq.norm();
                if abs_apq <= tol * 1e-2 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Zero a[p][q] with a unitary rotation in the (p, q) plane:
                // tan(2 theta) = 2 |apq| / (app - aqq), phase from arg(apq).
                let theta = 0.5 * (2.0 * abs_apq).atan2(app - aqq);
                let c = theta.cos();
                let s = theta.sin();
                let phase = apq / abs_apq;
                let s_ph = phase * s; // s e^{i phi}
                let s_ph_c = s_ph.conj();

                // Right-multiply columns p, q by the rotation.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * s_ph_c;
                    a[(i, q)] = -aip * s_ph + aiq * c;
                }
                // Left-multiply rows p, q by the adjoint rotation.
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c + aqj * s_ph;
                    a[(q, j)] = -apj * s_ph_c + aqj * c;
                }
                // Accumulate eigenvectors.
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * s_ph_c;
                    v[(i, q)] = -vip * s_ph + viq * c;
                }
                // Clean up the rotated pivot exactly.
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                let mean = 0.5 * (a[(p, p)].im + a[(q, q)].im);
                debug_assert!(mean.abs() <= 1e-10 * scale);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
        let _ = sweep;
    }
    Err(LinalgError::ConvergenceFailure { sweeps: JACOBI_MAX_SWEEPS, off: last_off })
}

fn finish_jacobi(a: ComplexMatrix, v: ComplexMatrix) -> Eigendecomposition {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        // Phase convention: largest-magnitude component real positive,
        // ties broken by lowest index.
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for i in 0..n {
            let mag = v[(i, old_j)].norm();
            if mag > best_mag + 1e-15 {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = v[(best, old_j)];
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            vectors[(i, new_j)] = v[(i, old_j)] * phase;
        }
    }
    Eigendecomposition { values, vectors }
}

/// Hermitian operator with a lazily computed, write-once eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    eigen: OnceLock<Eigendecomposition>,
}

impl HermitianOperator {
    /// Validates Hermiticity against [`HERMITICITY_TOL`] (relative to the
    /// largest entry).
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.all_finite() {
            return Err(LinalgError::NonFinite);
        }
        let scale = matrix.max_abs().max(1e-300);
        let dev = matrix.hermiticity_deviation();
        if dev > HERMITICITY_TOL * scale {
            return Err(LinalgError::NotHermitian { deviation: dev, tol: HERMITICITY_TOL * scale });
        }
        // Symmetrize so downstream arithmetic sees an exactly Hermitian matrix.
        let sym = ComplexMatrix::from_fn(matrix.rows(), matrix.cols(), |i, j| {
            (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5
        });
        Ok(Self { matrix: sym, eigen: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigendecomposition, computed once and cached (compute-then-publish).
    pub fn eigen(&self) -> Result<&Eigendecomposition, LinalgError> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = jacobi_hermitian(&self.matrix)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    /// e^{-i H t}.
    pub fn evolution(&self, t: f64) -> Result<ComplexMatrix, LinalgError> {
        Ok(self.eigen()?.evolution(t))
    }
}

/// Eigendecomposition entry point used throughout the crate.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<&Eigendecomposition, LinalgError> {
    h.eigen()
}

/// Unitary evolution operator U = e^{-i h t} for finite t.
pub fn evolve_unitary(h: &HermitianOperator, t: f64) -> Result<ComplexMatrix, LinalgError> {
    if !t.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    h.evolution(t)
}

/// Density operator: Hermitian, unit trace, positive semidefinite within
/// numerical tolerance.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        let op = HermitianOperator::new(matrix)
            .map_err(|e| LinalgError::InvalidDensity(e.to_string()))?;
        let tr = op.matrix().trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(LinalgError::InvalidDensity(format!(
                "trace {:.12}{:+.3e}i is not 1",
                tr.re, tr.im
            )));
        }
        let min_eig = op
            .eigen()
            .map_err(|e| LinalgError::InvalidDensity(e.to_string()))?
            .values
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -1e-10 {
            return Err(LinalgError::InvalidDensity(format!(
                "minimum eigenvalue {min_eig:.3e} below -1e-10"
            )));
        }
        Ok(Self { op })
    }

    /// Maximally mixed state 1/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0));
        Self::new(m).expect("maximally mixed state is valid")
    }

    /// Pure state |psi><psi| from a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self, LinalgError> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(LinalgError::InvalidDensity("zero or non-finite state vector".into()));
        }
        let d = psi.len();
        let m = ComplexMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm2);
        Self::new(m)
    }

    /// Thermal-like state from Boltzmann weights over given energies
    /// (dimensionless beta * energy products).
    pub fn from_weights(weights: &[f64]) -> Result<Self, LinalgError> {
        let z: f64 = weights.iter().sum();
        if z <= 0.0 {
            return Err(LinalgError::InvalidDensity("non-positive weight sum".into()));
        }
        Self::new(ComplexMatrix::diag_real(
            &weights.iter().map(|w| w / z).collect::<Vec<_>>(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn eigen(&self) -> Result<&Eigendecomposition, LinalgError> {
        self.op.eigen()
    }

    /// Expectation value tr[op rho].
    pub fn expect(&self, op: &ComplexMatrix) -> C64 {
        op.trace_prod(self.matrix())
    }
}

/// Pauli matrices and friends.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64 as C64;

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    pub(crate) fn random_hermitian(rng: &mut StdRng, dim: usize) -> HermitianOperator {
        let m = random_matrix(rng, dim, dim);
        let h = m.add(&m.adjoint()).scale(C64::new(0.5, 0.0));
        HermitianOperator::new(h).unwrap()
    }

    #[test]
    fn tensor_identity_cases() {
        let i2 = ComplexMatrix::identity(2);
        let i4 = tensor_product(&i2, &i2).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));

        let sz = pauli::sigma_z();
        let t = tensor_product(&sz, &i2).unwrap();
        let expect = ComplexMatrix::diag_real(&[1.0, 1.0, -1.0, -1.0]);
        assert!(t.max_abs_diff(&expect) == 0.0);
    }

    #[test]
    fn tensor_matches_index_oracle() {
        // Independent four-loop oracle for the Kronecker index layout.
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 3, 3);
        let t = tensor_product(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    for l in 0..3 {
                        let lhs = t[(3 * i + k, 3 * j + l)];
                        let rhs = a[(i, j)] * b[(k, l)];
                        assert!((lhs - rhs).norm() == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_overflow_rejected() {
        let big = ComplexMatrix::identity(100);
        let err = tensor_product(&big, &ComplexMatrix::identity(100)).unwrap_err();
        assert!(matches!(err, LinalgError::DimensionOverflow(10000)));
    }

    #[test]
    fn partial_trace_factorized_state() {
        let mut rng = StdRng::seed_from_u64(11);
        let rho_p = DensityOperator::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let h = random_hermitian(&mut rng, 3);
        // Build a unit-trace system state from |eigvec><eigvec|.
        let e = h.eigen().unwrap();
        let v0: Vec<C64> = (0..3).map(|i| e.vectors[(i, 0)]).collect();
        let rho_s = DensityOperator::pure(&v0).unwrap();
        let joint = tensor_product(rho_p.matrix(), rho_s.matrix()).unwrap();
        let reduced = partial_trace_system(&joint, 2, 3).unwrap();
        assert!(reduced.max_abs_diff(rho_p.matrix()) < 1e-14);
    }

    #[test]
    fn partial_trace_bell_state() {
        // (|00> + |11>)/sqrt(2) reduces to I/2; hand-computed.
        let psi = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        let rho = DensityOperator::pure(&psi).unwrap();
        let reduced = partial_trace_system(rho.matrix(), 2, 2).unwrap();
        let expect = ComplexMatrix::diag_real(&[0.5, 0.5]);
        assert!(reduced.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn eig_sigma_x() {
        let h = HermitianOperator::new(pauli::sigma_x()).unwrap();
        let e = h.eigen().unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_diagonal_permutation() {
        let h = HermitianOperator::new(ComplexMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        let e = h.eigen().unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        // Eigenvectors are permuted identity columns with positive pivots.
        for (j, src) in [(0usize, 1usize), (1, 2), (2, 0)] {
            for i in 0..3 {
                let expect = if i == src { 1.0 } else { 0.0 };
                assert!((e.vectors[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn eig_reconstruction_residual() {
        let mut rng = StdRng::seed_from_u64(3);
        for dim in [2usize, 5, 8, 16, 64] {
            let h = random_hermitian(&mut rng, dim);
            let e = h.eigen().unwrap();
            let scale = h.matrix().max_abs();
            let resid = e.reconstruct().max_abs_diff(h.matrix());
            assert!(resid <= 1e-10 * scale, "dim {dim}: residual {resid:.3e}");
            // Unitarity of the eigenvector matrix.
            let vtv = e.vectors.adjoint().matmul(&e.vectors);
            assert!(vtv.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-10);
        }
    }

    #[test]
    fn eigenvector_phase_deterministic() {
        let mut rng = StdRng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 6);
        let e1 = jacobi_hermitian(h.matrix()).unwrap();
        let e2 = jacobi_hermitian(h.matrix()).unwrap();
        assert!(e1.vectors.max_abs_diff(&e2.vectors) == 0.0);
        // Largest component of each column is real positive.
        for j in 0..6 {
            let mut best = 0;
            let mut best_mag = -1.0;
            for i in 0..6 {
                let m = e1.vectors[(i, j)].norm();
                if m > best_mag + 1e-15 {
                    best_mag = m;
                    best = i;
                }
            }
            let z = e1.vectors[(best, j)];
            assert!(z.im.abs() < 1e-14 && z.re > 0.0);
        }
    }

    #[test]
    fn evolve_trivial_cases() {
        let mut rng = StdRng::seed_from_u64(9);
        let h = random_hermitian(&mut rng, 4);
        let u0 = evolve_unitary(&h, 0.0).unwrap();
        assert!(u0.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);

        // Diagonal generator: h = lambda sigma_z / 2.
        let lambda = 1.7;
        let tau = 0.9;
        let hz =
            HermitianOperator::new(pauli::sigma_z().scale(C64::new(lambda / 2.0, 0.0))).unwrap();
        let u = evolve_unitary(&hz, tau).unwrap();
        assert!((u[(0, 0)] - C64::from_polar(1.0, -lambda * tau / 2.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - C64::from_polar(1.0, lambda * tau / 2.0)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn evolve_matches_taylor_oracle() {
        // Scaled-and-squared Taylor series as an independent oracle.
        let mut rng = StdRng::seed_from_u64(13);
        let h = random_hermitian(&mut rng, 5);
        let t = 0.7;
        let u = evolve_unitary(&h, t).unwrap();

        // exp(-i h t) = [exp(-i h t / 2^k)]^(2^k) with a 20-term series.
        let k = 10u32;
        let small = h.matrix().scale(C64::new(0.0, -t / f64::from(2u32.pow(k))));
        let mut term = ComplexMatrix::identity(5);
        let mut series = ComplexMatrix::identity(5);
        for n in 1..20 {
            term = term.matmul(&small).scale(C64::new(1.0 / n as f64, 0.0));
            series = series.add(&term);
        }
        let mut oracle = series;
        for _ in 0..k {
            oracle = oracle.matmul(&oracle);
        }
        assert!(u.max_abs_diff(&oracle) < 1e-8);

        let utu = u.adjoint().matmul(&u);
        assert!(utu.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-10);
    }

    #[test]
    fn density_validation() {
        // Non-unit trace rejected.
        let m = ComplexMatrix::diag_real(&[0.7, 0.7]);
        assert!(DensityOperator::new(m).is_err());
        // Negative eigenvalue rejected.
        let m = ComplexMatrix::diag_real(&[1.2, -0.2]);
        assert!(DensityOperator::new(m).is_err());
        // Valid mixed state accepted.
        let m = ComplexMatrix::diag_real(&[0.25, 0.75]);
        assert!(DensityOperator::new(m).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_unitarity_and_group_property(seed in 0u64..1000, dim in 2usize..7,
                                             t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let mut rng = StdRng::seed_from_u64(seed);
            let h = random_hermitian(&mut rng, dim);
            let u1 = evolve_unitary(&h, t1).unwrap();
            let u2 = evolve_unitary(&h, t2).unwrap();
            let u12 = evolve_unitary(&h, t1 + t2).unwrap();
            let id = ComplexMatrix::identity(dim);
            prop_assert!(u1.adjoint().matmul(&u1).max_abs_diff(&id) <= 1e-10);
            prop_assert!(u1.matmul(&u2).max_abs_diff(&u12) <= 1e-9);
        }

        #[test]
        fn prop_partial_trace_preserves_trace(seed in 0u64..1000, dp in 2usize..4, ds in 2usize..5) {
            let mut rng = StdRng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, dp * ds, dp * ds);
            let reduced = partial_trace_system(&m, dp, ds).unwrap();
            let d = (reduced.trace() - m.trace()).norm();
            prop_assert!(d <= 1e-12 * m.max_abs().max(1.0));
        }
    }
}
