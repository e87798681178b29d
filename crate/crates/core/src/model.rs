//! Probe control Hamiltonian, its eigenbasis, and the block decomposition of
//! a probe-system coupling in that basis.
//!
//! The coupling V_PS (which by convention includes the bare system
//! Hamiltonian) is split into blocks A0, A1 (Hermitian, attached to the probe
//! projectors) and B (attached to the probe flip operators):
//!
//! ```text
//! V_PS = |pi0><pi0| (x) A0 + |pi0><pi1| (x) B + |pi1><pi0| (x) B^dag + |pi1><pi1| (x) A1
//! ```

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{pauli, tensor_product, ComplexMatrix, HermitianOperator, LinalgError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("angle out of range: {0}")]
    AngleOutOfRange(String),
    #[error("coupling must act on probe (x) system with even dimension, got {0}")]
    BadJointDimension(usize),
    #[error("state amplitudes not normalized: |a0|^2 + |a1|^2 = {0}")]
    NotNormalized(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Control parameters of the probe bias Hamiltonian H_P = lambda/2 sigma_(theta,phi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeControl {
    pub lambda: f64,
    pub theta: f64,
    pub phi: f64,
}

impl ProbeControl {
    pub fn new(lambda: f64, theta: f64, phi: f64) -> Result<Self, ModelError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(ModelError::AngleOutOfRange(format!("lambda = {lambda}")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(ModelError::AngleOutOfRange(format!("theta = {theta}")));
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(ModelError::AngleOutOfRange(format!("phi = {phi}")));
        }
        Ok(Self { lambda, theta, phi })
    }

    /// Bias along +z.
    pub fn z_axis(lambda: f64) -> Self {
        Self { lambda, theta: 0.0, phi: 0.0 }
    }

    /// H_P = lambda/2 sigma_(theta,phi) as a 2x2 operator.
    pub fn hamiltonian(&self) -> HermitianOperator {
        let m = control_pauli(self.theta, self.phi).matrix().scale(C64::new(self.lambda / 2.0, 0.0));
        HermitianOperator::new(m).expect("scaled Pauli is Hermitian")
    }
}

/// sigma_(theta,phi) = sin(theta)cos(phi) sx + sin(theta)sin(phi) sy + cos(theta) sz.
pub fn control_pauli(theta: f64, phi: f64) -> HermitianOperator {
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    let m = pauli::sigma_x()
        .scale(C64::new(st * cp, 0.0))
        .add(&pauli::sigma_y().scale(C64::new(st * sp, 0.0)))
        .add(&pauli::sigma_z().scale(C64::new(ct, 0.0)));
    HermitianOperator::new(m).expect("Pauli combination is Hermitian")
}

/// Orthonormal eigenbasis of the control Pauli: pi0 has eigenvalue +1, pi1
/// eigenvalue -1, phases fixed by the eigensolver convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBasis {
    pub pi0: [C64; 2],
    pub pi1: [C64; 2],
}

impl ControlBasis {
    pub fn component(&self, k: usize, i: usize) -> C64 {
        match k {
            0 => self.pi0[i],
            _ => self.pi1[i],
        }
    }
}

/// Eigenbasis of sigma_(theta,phi) with the deterministic phase convention.
pub fn control_eigenbasis(theta: f64, phi: f64) -> ControlBasis {
    let sigma = control_pauli(theta, phi);
    let e = sigma.eigen().expect("2x2 Hermitian eigendecomposition cannot fail");
    // Eigenvalues come out ascending (-1, +1); pi0 is the +1 eigenvector.
    ControlBasis {
        pi0: [e.vectors[(0, 1)], e.vectors[(1, 1)]],
        pi1: [e.vectors[(0, 0)], e.vectors[(1, 0)]],
    }
}

/// The (A0, A1, B) block decomposition of a coupling in a probe basis.
#[derive(Debug, Clone)]
pub struct CouplingBlocks {
    pub a0: HermitianOperator,
    pub a1: HermitianOperator,
    pub b: ComplexMatrix,
}

impl CouplingBlocks {
    pub fn new(
        a0: HermitianOperator,
        a1: HermitianOperator,
        b: ComplexMatrix,
    ) -> Result<Self, ModelError> {
        let d = a0.dim();
        if a1.dim() != d || b.rows() != d || b.cols() != d {
            return Err(ModelError::BadJointDimension(d));
        }
        Ok(Self { a0, a1, b })
    }

    pub fn dim(&self) -> usize {
        self.a0.dim()
    }

    /// Reassemble the full coupling in the given probe basis:
    /// V = sum_{kl} |pi_k><pi_l| (x) block_kl in the computational basis.
    pub fn assemble(&self, basis: &ControlBasis) -> ComplexMatrix {
        let d = self.dim();
        let b_dag = self.b.adjoint();
        let blocks: [[&ComplexMatrix; 2]; 2] =
            [[self.a0.matrix(), &self.b], [&b_dag, self.a1.matrix()]];
        let mut v = ComplexMatrix::zeros(2 * d, 2 * d);
        for (k, row) in blocks.iter().enumerate() {
            for (l, block) in row.iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        let coeff = basis.component(k, i) * basis.component(l, j).conj();
                        if coeff.norm() == 0.0 {
                            continue;
                        }
                        for r in 0..d {
                            for c in 0..d {
                                v[(i * d + r, j * d + c)] += coeff * block[(r, c)];
                            }
                        }
                    }
                }
            }
        }
        v
    }
}

/// V_PS = I (x) h_s + v; the convention that the decomposed coupling already
/// contains the bare system Hamiltonian.
pub fn coupling_from_parts(
    h_s: &ComplexMatrix,
    v: &ComplexMatrix,
) -> Result<ComplexMatrix, ModelError> {
    let joint = tensor_product(&ComplexMatrix::identity(2), h_s)?;
    if joint.rows() != v.rows() || joint.cols() != v.cols() {
        return Err(ModelError::BadJointDimension(v.rows()));
    }
    Ok(joint.add(v))
}

/// Decompose a Hermitian coupling on probe (x) system (probe factor first)
/// into blocks in the given control basis.
pub fn decompose_coupling(
    v_ps: &ComplexMatrix,
    basis: &ControlBasis,
) -> Result<CouplingBlocks, ModelError> {
    if !v_ps.is_square() || v_ps.rows() % 2 != 0 {
        return Err(ModelError::BadJointDimension(v_ps.rows()));
    }
    let scale = v_ps.max_abs().max(1e-300);
    let dev = v_ps.hermiticity_deviation();
    if dev > 1e-12 * scale {
        return Err(ModelError::Linalg(LinalgError::NotHermitian {
            deviation: dev,
            tol: 1e-12 * scale,
        }));
    }
    let d = v_ps.rows() / 2;

    // block_kl = (<pi_k| (x) I) V (|pi_l> (x) I)
    let sandwich = |k: usize, l: usize| -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..2 {
            for j in 0..2 {
                let coeff = basis.component(k, i).conj() * basis.component(l, j);
                if coeff.norm() == 0.0 {
                    continue;
                }
                for r in 0..d {
                    for c in 0..d {
                        out[(r, c)] += coeff * v_ps[(i * d + r, j * d + c)];
                    }
                }
            }
        }
        out
    };

    let a0 = HermitianOperator::new(sandwich(0, 0))?;
    let a1 = HermitianOperator::new(sandwich(1, 1))?;
    let b = sandwich(0, 1);
    CouplingBlocks::new(a0, a1, b)
}

/// Rotate blocks computed in the z basis (theta = 0) into the control basis
/// at (theta, phi), combining the z blocks with control-eigenvector overlaps.
///
/// Dual path to [`decompose_coupling`]: it operates on the three z blocks
/// directly instead of sandwiching the full joint matrix, and must agree with
/// the direct decomposition at every angle.
pub fn rotate_blocks(
    blocks_z: &CouplingBlocks,
    theta: f64,
    phi: f64,
) -> Result<CouplingBlocks, ModelError> {
    let basis = control_eigenbasis(theta, phi);
    let (a0z, a1z, bz) = (blocks_z.a0.matrix(), blocks_z.a1.matrix(), &blocks_z.b);
    let bz_dag = bz.adjoint();

    // <pi_k| z_i> overlaps; z blocks live at (i, j) in the z basis.
    let combine = |k: usize, l: usize| -> ComplexMatrix {
        let w = |kk: usize, i: usize| basis.component(kk, i);
        let c00 = w(k, 0).conj() * w(l, 0);
        let c01 = w(k, 0).conj() * w(l, 1);
        let c10 = w(k, 1).conj() * w(l, 0);
        let c11 = w(k, 1).conj() * w(l, 1);
        a0z.scale(c00).add(&bz.scale(c01)).add(&bz_dag.scale(c10)).add(&a1z.scale(c11))
    };

    let a0 = HermitianOperator::new(combine(0, 0))?;
    let a1 = HermitianOperator::new(combine(1, 1))?;
    let b = combine(0, 1);
    CouplingBlocks::new(a0, a1, b)
}

/// Pure probe state expressed by its expansion coefficients in the control
/// basis: |state> = c0 |pi0> + c1 |pi1>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePureState {
    c0: C64,
    c1: C64,
}

impl ProbePureState {
    pub fn new(c0: C64, c1: C64) -> Result<Self, ModelError> {
        let n = c0.norm_sqr() + c1.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(ModelError::NotNormalized(n));
        }
        Ok(Self { c0, c1 })
    }

    pub fn pi0() -> Self {
        Self { c0: C64::new(1.0, 0.0), c1: C64::new(0.0, 0.0) }
    }

    pub fn pi1() -> Self {
        Self { c0: C64::new(0.0, 0.0), c1: C64::new(1.0, 0.0) }
    }

    /// (|pi0> + e^{i phase} |pi1>)/sqrt(2).
    pub fn equator(phase: f64) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self { c0: C64::new(r, 0.0), c1: C64::from_polar(r, phase) }
    }

    /// Ket coefficient on |pi_k>.
    pub fn c(&self, k: usize) -> C64 {
        if k == 0 {
            self.c0
        } else {
            self.c1
        }
    }

    /// Overlap <state|pi_k> (conjugate of the ket coefficient).
    pub fn a(&self, k: usize) -> C64 {
        self.c(k).conj()
    }

    /// <sigma_(theta,phi)> in this state: |c0|^2 - |c1|^2.
    pub fn sigma_expectation(&self) -> f64 {
        self.c0.norm_sqr() - self.c1.norm_sqr()
    }

    /// Orthogonal partner (|c1|, -|c0|-style).
    pub fn orthogonal(&self) -> Self {
        Self { c0: self.c1.conj(), c1: -self.c0.conj() }
    }

    /// Index of the control eigenstate this state equals (within tol on the
    /// overlap magnitude), if any.
    pub fn basis_membership(&self, tol: f64) -> Option<usize> {
        if self.c1.norm() <= tol {
            Some(0)
        } else if self.c0.norm() <= tol {
            Some(1)
        } else {
            None
        }
    }

    /// Expansion into the computational probe basis.
    pub fn ket_in_z(&self, basis: &ControlBasis) -> [C64; 2] {
        [
            self.c0 * basis.pi0[0] + self.c1 * basis.pi1[0],
            self.c0 * basis.pi0[1] + self.c1 * basis.pi1[1],
        ]
    }
}
