//! Validity constraints of the 1/lambda expansion: the matrix-element bound,
//! the resonance check over states reachable from rho_S within a few
//! interactions, and the order-dependent kappa-weighted sums.


use serde::Serialize;

use crate::linalg::{ComplexMatrix, DensityOperator, LinalgError};
use crate::model::CouplingBlocks;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValidityConfig {
    /// Minimal lhs/rhs ratio for a constraint to pass.
    pub margin: f64,
    /// Resonance window as a fraction of lambda.
    pub resonance_width_rel: f64,
    /// Support / matrix-element cutoff for reachability, relative to the
    /// largest element.
    pub reachability_cutoff: f64,
    /// How many interactions define "reachable".
    pub reach_steps: usize,
    /// Relative tolerance deciding eigenvalue degeneracy in kappa.
    pub degeneracy_tol: f64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self {
            margin: 10.0,
            resonance_width_rel: 1e-3,
            reachability_cutoff: 1e-12,
            reach_steps: 3,
            degeneracy_tol: 1e-9,
        }
    }
}

/// Constraint kernel: inverse level spacing, or tau for a degenerate pair.
pub fn kappa(e_j: f64, e_k: f64, tau: f64, degeneracy_tol: f64) -> f64 {
    let scale = e_j.abs().max(e_k.abs()).max(1.0);
    let gap = (e_j - e_k).abs();
    if gap <= degeneracy_tol * scale {
        tau
    } else {
        1.0 / gap
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / rhs; infinite when the rhs vanishes.
    pub ratio: f64,
    pub pass: bool,
}

impl ConstraintRow {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64, margin: f64) -> Self {
        let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / rhs };
        Self { name: name.into(), lhs, rhs, ratio, pass: ratio >= margin }
    }
}

/// A near-resonant pair: lambda close to |E_j^0 - E_k^1| with both states
/// reachable from the initial state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Resonance {
    pub j0: usize,
    pub k1: usize,
    pub gap: f64,
    pub detuning: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub lambda: f64,
    pub tau: f64,
    pub leading_order: u32,
    pub margin: f64,
    pub constraints: Vec<ConstraintRow>,
    pub resonances: Vec<Resonance>,
    /// max |<j_1|B|k_0>| over reachable pairs.
    pub matrix_element_bound: f64,
    pub pass: bool,
}

struct EigenFrames {
    e0: Vec<f64>,
    e1: Vec<f64>,
    b_eig: ComplexMatrix,
    rho0: ComplexMatrix,
    rho1: ComplexMatrix,
}

fn eigen_frames(blocks: &CouplingBlocks, rho: &DensityOperator) -> Result<EigenFrames, LinalgError> {
    let d0 = blocks.a0.eigen()?;
    let d1 = blocks.a1.eigen()?;
    let b_eig = d0.vectors.adjoint().matmul(&blocks.b).matmul(&d1.vectors);
    let rho0 = d0.vectors.adjoint().matmul(rho.matrix()).matmul(&d0.vectors);
    let rho1 = d1.vectors.adjoint().matmul(rho.matrix()).matmul(&d1.vectors);
    Ok(EigenFrames { e0: d0.values.clone(), e1: d1.values.clone(), b_eig, rho0, rho1 })
}

/// States reachable from the support of rho within `steps` applications of
/// the flip block, tracked separately in the A0 and A1 eigenbases.
fn reachable_sets(frames: &EigenFrames, cfg: &ValidityConfig) -> (Vec<bool>, Vec<bool>) {
    let d = frames.e0.len();
    let b_cut = cfg.reachability_cutoff * frames.b_eig.max_abs().max(1e-300);
    let mut r0: Vec<bool> = (0..d).map(|j| frames.rho0[(j, j)].re > cfg.reachability_cutoff).collect();
    let mut r1: Vec<bool> = (0..d).map(|k| frames.rho1[(k, k)].re > cfg.reachability_cutoff).collect();
    for _ in 0..cfg.reach_steps {
        let mut n0 = r0.clone();
        let mut n1 = r1.clone();
        for j in 0..d {
            for k in 0..d {
                if frames.b_eig[(j, k)].norm() > b_cut {
                    if r1[k] {
                        n0[j] = true;
                    }
                    if r0[j] {
                        n1[k] = true;
                    }
                }
            }
        }
        r0 = n0;
        r1 = n1;
    }
    (r0, r1)
}

/// sum_{jk} kappa_{jk} |<j|M|k><k|W|j>| in one eigenbasis.
fn kappa_sum(
    energies: &[f64],
    m: &ComplexMatrix,
    w: &ComplexMatrix,
    tau: f64,
    degeneracy_tol: f64,
) -> f64 {
    let d = energies.len();
    let mut acc = 0.0;
    for j in 0..d {
        for k in 0..d {
            let weight = (m[(j, k)] * w[(k, j)]).norm();
            if weight > 0.0 {
                acc += kappa(energies[j], energies[k], tau, degeneracy_tol) * weight;
            }
        }
    }
    acc
}

/// Evaluate the expansion-validity constraints at one (lambda, tau) for the
/// given leading order. Reports, never fails (beyond propagated linalg
/// errors on malformed blocks).
pub fn validity_report(
    blocks: &CouplingBlocks,
    rho_s: &DensityOperator,
    lambda: f64,
    tau: f64,
    leading_order: u32,
    cfg: &ValidityConfig,
) -> Result<ValidityReport, LinalgError> {
    let frames = eigen_frames(blocks, rho_s)?;
    let d = frames.e0.len();
    let (r0, r1) = reachable_sets(&frames, cfg);

    // (a) matrix-element bound over reachable pairs.
    let mut bound = 0.0f64;
    for j in 0..d {
        for k in 0..d {
            if r0[j] && r1[k] {
                bound = bound.max(frames.b_eig[(j, k)].norm());
            }
        }
    }

    // (b) resonances lambda ~ |E_j^0 - E_k^1| among reachable pairs.
    let width = cfg.resonance_width_rel * lambda;
    let mut resonances = Vec::new();
    for j in 0..d {
        for k in 0..d {
            if !(r0[j] && r1[k]) {
                continue;
            }
            let gap = (frames.e0[j] - frames.e1[k]).abs();
            let detuning = lambda - gap;
            if detuning.abs() < width && gap > 0.0 {
                resonances.push(Resonance { j0: j, k1: k, gap, detuning });
            }
        }
    }

    let mut constraints =
        vec![ConstraintRow::new("matrix-element bound", lambda, bound, cfg.margin)];

    // (c) kappa-weighted order constraint; both variants, worse ratio kept.
    let b = &blocks.b;
    let bd = b.adjoint();
    let bdb_eig = {
        let m = bd.matmul(b);
        let d0 = blocks.a0.eigen()?;
        d0.vectors.adjoint().matmul(&m).matmul(&d0.vectors)
    };
    let bbd_eig = {
        let m = b.matmul(&bd);
        let d1 = blocks.a1.eigen()?;
        d1.vectors.adjoint().matmul(&m).matmul(&d1.vectors)
    };

    let row = match leading_order {
        0 => {
            let rhs0 = kappa_sum(&frames.e0, &bdb_eig, &frames.rho0, tau, cfg.degeneracy_tol);
            let rhs1 = kappa_sum(&frames.e1, &bbd_eig, &frames.rho1, tau, cfg.degeneracy_tol);
            let a = ConstraintRow::new("order-0 kappa sum", lambda, rhs0, cfg.margin);
            let b_ = ConstraintRow::new("order-0 kappa sum (dagger variant)", lambda, rhs1, cfg.margin);
            if a.ratio <= b_.ratio {
                a
            } else {
                b_
            }
        }
        1 => {
            // lambda-independent: |tr(B rho)| must dominate the kappa sum.
            let lhs0 = b.trace_prod(rho_s.matrix()).norm();
            let lhs1 = bd.trace_prod(rho_s.matrix()).norm();
            let rhs0 = kappa_sum(&frames.e0, &bdb_eig, &frames.rho0, tau, cfg.degeneracy_tol);
            let rhs1 = kappa_sum(&frames.e1, &bbd_eig, &frames.rho1, tau, cfg.degeneracy_tol);
            let a = ConstraintRow::new("order-1 trace bound", lhs0, rhs0, cfg.margin);
            let b_ = ConstraintRow::new("order-1 trace bound (dagger variant)", lhs1, rhs1, cfg.margin);
            if a.ratio <= b_.ratio {
                a
            } else {
                b_
            }
        }
        _ => {
            // Weights <k| B^dag rho B |j> normalized by |tr(B^dag rho B)|.
            let d0 = blocks.a0.eigen()?;
            let d1 = blocks.a1.eigen()?;
            let sand0 = {
                let m = bd.matmul(rho_s.matrix()).matmul(b);
                d0.vectors.adjoint().matmul(&m).matmul(&d0.vectors)
            };
            let sand1 = {
                let m = b.matmul(rho_s.matrix()).matmul(&bd);
                d1.vectors.adjoint().matmul(&m).matmul(&d1.vectors)
            };
            let norm0 = sand0.trace().norm();
            let norm1 = sand1.trace().norm();
            let rhs0 = if norm0 == 0.0 {
                0.0
            } else {
                kappa_sum(&frames.e0, &bdb_eig, &sand0, tau, cfg.degeneracy_tol) / norm0
            };
            let rhs1 = if norm1 == 0.0 {
                0.0
            } else {
                kappa_sum(&frames.e1, &bbd_eig, &sand1, tau, cfg.degeneracy_tol) / norm1
            };
            let a = ConstraintRow::new("order-2 kappa sum", lambda, rhs0, cfg.margin);
            let b_ = ConstraintRow::new("order-2 kappa sum (dagger variant)", lambda, rhs1, cfg.margin);
            if a.ratio <= b_.ratio {
                a
            } else {
                b_
            }
        }
    };
    constraints.push(row);

    let pass = constraints.iter().all(|c| c.pass) && resonances.is_empty();
    Ok(ValidityReport {
        lambda,
        tau,
        leading_order,
        margin: cfg.margin,
        constraints,
        resonances,
        matrix_element_bound: bound,
        pass,
    })
}
