//! Exact joint probe-system evolution, transition probabilities, finite-shot
//! sampling, and deterministic parameter sweeps.
//!
//! Exact dense evolution is the ground truth for everything else in the
//! crate; no master-equation approximations enter anywhere.

pub mod dyson;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{tensor_product, ComplexMatrix, DensityOperator, HermitianOperator, LinalgError};
use crate::model::{control_eigenbasis, control_pauli, ModelError, ProbeControl, ProbePureState};

/// Tolerance beyond which a computed probability outside [0, 1] is an error
/// rather than roundoff.
pub const PROBABILITY_CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("computed probability {0} outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),
    #[error("shot probability {0} outside [0, 1]")]
    InvalidShotProbability(f64),
    #[error("Dyson order x + y = {got} exceeds cap {cap}")]
    DysonCapExceeded { got: u32, cap: u32 },
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One experimental setting: bias magnitude, evolution time, probe
/// preparation and measurement states, and a shot budget (0 = exact).
#[derive(Debug, Clone, Copy)]
pub struct ExperimentPoint {
    pub lambda: f64,
    pub tau: f64,
    pub preparation: ProbePureState,
    pub measurement: ProbePureState,
    pub shots: u64,
}

/// A fully specified probed system: joint coupling (including the bare system
/// Hamiltonian), initial system state, control basis angles, and the probe
/// preparation/measurement pair.
#[derive(Debug, Clone)]
pub struct ProbeExperiment {
    pub v_ps: ComplexMatrix,
    pub rho_s: DensityOperator,
    pub theta: f64,
    pub phi: f64,
    pub preparation: ProbePureState,
    pub measurement: ProbePureState,
}

impl ProbeExperiment {
    pub fn dim_sys(&self) -> usize {
        self.rho_s.dim()
    }

    fn check_dims(&self) -> Result<(), DynamicsError> {
        let d = self.dim_sys();
        if self.v_ps.rows() != 2 * d || self.v_ps.cols() != 2 * d {
            return Err(DynamicsError::DimensionMismatch(format!(
                "coupling is {}x{}, system dimension {}",
                self.v_ps.rows(),
                self.v_ps.cols(),
                d
            )));
        }
        Ok(())
    }

    /// Joint Hamiltonian lambda/2 sigma_(theta,phi) (x) I + V_PS.
    pub fn total_hamiltonian(&self, lambda: f64) -> Result<HermitianOperator, DynamicsError> {
        self.check_dims()?;
        let d = self.dim_sys();
        let probe = control_pauli(self.theta, self.phi)
            .matrix()
            .scale(C64::new(lambda / 2.0, 0.0));
        let h = tensor_product(&probe, &ComplexMatrix::identity(d))?.add(&self.v_ps);
        Ok(HermitianOperator::new(h)?)
    }

    /// Diagonalize once at fixed lambda for cheap probability evaluation over
    /// many evolution times.
    pub fn evolution_cache(&self, lambda: f64) -> Result<EvolutionCache, DynamicsError> {
        let d = self.dim_sys();
        let h = self.total_hamiltonian(lambda)?;
        let eig = h.eigen()?.clone();
        let basis = control_eigenbasis(self.theta, self.phi);
        let alpha = self.preparation.ket_in_z(&basis);
        let beta = self.measurement.ket_in_z(&basis);

        // Initial-state columns: V^dag (|alpha> (x) |w_i>) for each system
        // eigenvector of rho with non-negligible weight.
        let rho_eig = self.rho_s.eigen()?;
        let mut weights = Vec::new();
        let mut columns = Vec::new();
        for i in 0..d {
            let w = rho_eig.values[i];
            if w <= 1e-15 {
                continue;
            }
            let mut joint = vec![C64::new(0.0, 0.0); 2 * d];
            for p in 0..2 {
                for s in 0..d {
                    joint[p * d + s] = alpha[p] * rho_eig.vectors[(s, i)];
                }
            }
            let col = eig.vectors.adjoint().matvec(&joint);
            weights.push(w);
            columns.push(col);
        }

        // Measurement projector row: (<beta| (x) I) V, a d x 2d matrix.
        let mut proj = ComplexMatrix::zeros(d, 2 * d);
        for s in 0..d {
            for col in 0..2 * d {
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..2 {
                    acc += beta[p].conj() * eig.vectors[(p * d + s, col)];
                }
                proj[(s, col)] = acc;
            }
        }

        Ok(EvolutionCache { energies: eig.values, weights, columns, proj, dim_sys: d })
    }

    /// Exact transition probability at one (lambda, tau).
    pub fn probability(&self, lambda: f64, tau: f64) -> Result<f64, DynamicsError> {
        self.evolution_cache(lambda)?.probability(tau)
    }
}

/// Per-lambda diagonalization reused across evolution times.
pub struct EvolutionCache {
    energies: Vec<f64>,
    weights: Vec<f64>,
    columns: Vec<Vec<C64>>,
    proj: ComplexMatrix,
    dim_sys: usize,
}

impl EvolutionCache {
    /// p = sum_i w_i || (<beta| (x) I) e^{-i H tau} |alpha, v_i> ||^2.
    pub fn probability(&self, tau: f64) -> Result<f64, DynamicsError> {
        let n = self.energies.len();
        let phases: Vec<C64> =
            self.energies.iter().map(|&e| C64::from_polar(1.0, -e * tau)).collect();
        let mut p = 0.0;
        let mut phased = vec![C64::new(0.0, 0.0); n];
        for (w, col) in self.weights.iter().zip(&self.columns) {
            for k in 0..n {
                phased[k] = phases[k] * col[k];
            }
            let projected = self.proj.matvec(&phased);
            let norm2: f64 = projected.iter().map(|z| z.norm_sqr()).sum();
            p += w * norm2;
        }
        clamp_probability(p)
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }
}

fn clamp_probability(p: f64) -> Result<f64, DynamicsError> {
    if !(-PROBABILITY_CLAMP_TOL..=1.0 + PROBABILITY_CLAMP_TOL).contains(&p) {
        return Err(DynamicsError::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Transition probability p = tr[(|beta><beta| (x) I) U (|alpha><alpha| (x) rho) U^dag]
/// with U = exp(-i H_tot tau) and H_tot = H_P + V_PS.
///
/// The bias magnitude is taken from `point.lambda`; `control` supplies the
/// bias axis.
pub fn transition_probability(
    v_ps: &ComplexMatrix,
    rho_s: &DensityOperator,
    control: &ProbeControl,
    point: &ExperimentPoint,
) -> Result<f64, DynamicsError> {
    let exp = ProbeExperiment {
        v_ps: v_ps.clone(),
        rho_s: rho_s.clone(),
        theta: control.theta,
        phi: control.phi,
        preparation: point.preparation,
        measurement: point.measurement,
    };
    exp.probability(point.lambda, point.tau)
}

/// Binomial draw of successes among `n` shots at probability `p`,
/// deterministic for a given seed.
pub fn sample_shots(p: f64, n: u64, seed: u64) -> Result<u64, DynamicsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DynamicsError::InvalidShotProbability(p));
    }
    if n == 0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bin = Binomial::new(n, p).expect("validated probability");
    Ok(bin.sample(&mut rng))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-point RNG stream seed derived from (master seed, grid index), so sweep
/// results are independent of evaluation order and worker count.
pub fn point_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Rectangular or explicit (lambda, tau) sweep grid.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub points: Vec<(f64, f64)>,
}

impl SweepGrid {
    pub fn from_points(points: Vec<(f64, f64)>) -> Self {
        Self { points }
    }

    /// Cartesian product with lambda varying slowest (groups points sharing a
    /// diagonalization).
    pub fn product(lambdas: &[f64], taus: &[f64]) -> Self {
        let mut points = Vec::with_capacity(lambdas.len() * taus.len());
        for &l in lambdas {
            for &t in taus {
                points.push((l, t));
            }
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Evenly spaced inclusive grid.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Log-spaced inclusive grid.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// One sweep sample.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub tau: f64,
    pub p_exact: f64,
    /// Shot-estimated probability; None for exact (shots = 0) sweeps.
    pub p_sampled: Option<f64>,
    pub shots: u64,
    /// Binomial standard error sqrt(p_hat (1 - p_hat) / n).
    pub std_err: Option<f64>,
}

impl SweepPoint {
    /// Best available probability estimate.
    pub fn p(&self) -> f64 {
        self.p_sampled.unwrap_or(self.p_exact)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Run a sweep: exact probability everywhere, plus a deterministic binomial
/// estimate when `shots > 0`. Bit-identical output for any worker count.
pub fn run_sweep(
    experiment: &ProbeExperiment,
    grid: &SweepGrid,
    shots: u64,
    master_seed: u64,
) -> Result<SweepResult, DynamicsError> {
    if grid.is_empty() {
        return Err(DynamicsError::EmptyGrid);
    }
    // Group contiguous runs of equal lambda so each group shares one
    // diagonalization.
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &(l, _)) in grid.points.iter().enumerate() {
        match groups.last_mut() {
            Some((gl, _, end)) if gl.to_bits() == l.to_bits() => *end = i + 1,
            _ => groups.push((l, i, i + 1)),
        }
    }

    let results: Result<Vec<Vec<SweepPoint>>, DynamicsError> = groups
        .par_iter()
        .map(|&(lambda, start, end)| {
            let cache = experiment.evolution_cache(lambda)?;
            let mut out = Vec::with_capacity(end - start);
            for idx in start..end {
                let (_, tau) = grid.points[idx];
                let p_exact = cache.probability(tau)?;
                let (p_sampled, std_err) = if shots > 0 {
                    let k = sample_shots(p_exact, shots, point_seed(master_seed, idx as u64))?;
                    let p_hat = k as f64 / shots as f64;
                    (Some(p_hat), Some((p_hat * (1.0 - p_hat) / shots as f64).sqrt()))
                } else {
                    (None, None)
                };
                out.push(SweepPoint { lambda, tau, p_exact, p_sampled, shots, std_err });
            }
            Ok(out)
        })
        .collect();

    Ok(SweepResult { points: results?.into_iter().flatten().collect() })
}
