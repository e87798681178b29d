//! Single-molecule NMR demonstration: a dipole-coupled spin cluster in an
//! external field, probed by a tunable magnetic dipole, with shot-limited
//! sweeps and spectrum reconstruction.
//!
//! Physical units in this module are peV for energies, ns for times, nm for
//! distances and tesla for fields; the dimensionless core receives
//! pre-divided quantities (phases are E t / hbar).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{point_seed, sample_shots, DynamicsError, ProbeExperiment};
use crate::estimation::{
    build_tau_series, fit_oscillation, fourier_spectrum, EstimationError, SpectrumEstimate,
    TauSeries, Window,
};
use crate::linalg::{pauli, tensor_product, ComplexMatrix, DensityOperator, HermitianOperator, LinalgError};
use crate::model::{CouplingBlocks, ProbePureState};
use crate::perturbation::{validity_report, ValidityConfig, ValidityReport};

/// Unit conversions (CODATA values; energies peV, times ns).
pub mod units {
    /// hbar in peV ns.
    pub const HBAR_PEV_NS: f64 = 6.582119569e5;
    /// One peV in joules.
    pub const PEV_J: f64 = 1.602176634e-31;
    /// Nuclear magneton in J/T.
    pub const MU_N_J_PER_T: f64 = 5.0507837461e-27;
    /// Nuclear magneton in peV/T.
    pub const MU_N_PEV_PER_T: f64 = MU_N_J_PER_T / PEV_J;
    /// mu_0 / 4 pi in SI.
    pub const MU0_OVER_4PI: f64 = 1e-7;

    /// Dipole-dipole energy scale (mu0/4pi) m1 m2 / r^3 in peV, for moments
    /// in peV/T and separation in nm.
    pub fn dipole_energy_pev(m1_pev_per_t: f64, m2_pev_per_t: f64, r_nm: f64) -> f64 {
        MU0_OVER_4PI * m1_pev_per_t * m2_pev_per_t * PEV_J / (r_nm.powi(3) * 1e-27)
    }
}

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("spins {0} and {1} are coincident")]
    CoincidentSpins(usize, usize),
    #[error("probe position coincides with spin {0}")]
    ProbeOnSpin(usize),
    #[error("geometry needs between 1 and 8 spins, got {0}")]
    BadSpinCount(usize),
    #[error("probe axis must be a nonzero vector")]
    ZeroProbeAxis,
    #[error("invalid run configuration: {0}")]
    BadConfig(String),
    #[error("could not find a resonance-free bias window after {0} shifts")]
    NoCleanWindow(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Spin cluster, external field and probe placement.
#[derive(Debug, Clone, Serialize)]
pub struct SpinGeometry {
    /// Spin positions in nm.
    pub positions_nm: Vec<Vec3>,
    /// Magnetic moments in units of the nuclear magneton.
    pub moments_mu_n: Vec<f64>,
    /// External field in tesla.
    pub field_t: Vec3,
    /// Probe position in nm.
    pub probe_position_nm: Vec3,
    /// Unit vector along the probe's magnetic moment.
    pub probe_axis: Vec3,
    /// Probe moment in meV per tesla.
    pub probe_moment_mev_per_t: f64,
}

impl SpinGeometry {
    pub fn n_spins(&self) -> usize {
        self.positions_nm.len()
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        let n = self.n_spins();
        if n == 0 || n > 8 || self.moments_mu_n.len() != n {
            return Err(SpinError::BadSpinCount(n));
        }
        for i in 0..n {
            for j in 0..i {
                if norm(sub(self.positions_nm[i], self.positions_nm[j])) == 0.0 {
                    return Err(SpinError::CoincidentSpins(j, i));
                }
            }
            if norm(sub(self.probe_position_nm, self.positions_nm[i])) == 0.0 {
                return Err(SpinError::ProbeOnSpin(i));
            }
        }
        if norm(self.probe_axis) == 0.0 {
            return Err(SpinError::ZeroProbeAxis);
        }
        Ok(())
    }

    pub fn with_probe_position(&self, position_nm: Vec3) -> SpinGeometry {
        SpinGeometry { probe_position_nm: position_nm, ..self.clone() }
    }
}

/// Spin-1/2 operator component (sigma/2) of spin `k` in an `n`-spin register.
fn spin_component(n: usize, k: usize, axis: usize) -> ComplexMatrix {
    let s = match axis {
        0 => pauli::sigma_x(),
        1 => pauli::sigma_y(),
        _ => pauli::sigma_z(),
    }
    .scale(C64::new(0.5, 0.0));
    let mut out = ComplexMatrix::identity(1);
    for i in 0..n {
        let factor = if i == k { s.clone() } else { ComplexMatrix::identity(2) };
        out = tensor_product(&out, &factor).expect("spin register within dimension cap");
    }
    out
}

/// Projection of the vector spin operator onto a direction.
fn spin_along(n: usize, k: usize, dir: Vec3) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(1 << n, 1 << n);
    for (axis, &c) in dir.iter().enumerate() {
        if c != 0.0 {
            out = out.add(&spin_component(n, k, axis).scale(C64::new(c, 0.0)));
        }
    }
    out
}

/// Zeeman plus magnetic dipole-dipole Hamiltonian of the cluster, in peV.
pub fn build_spin_hamiltonian(geom: &SpinGeometry) -> Result<HermitianOperator, SpinError> {
    geom.validate()?;
    let n = geom.n_spins();
    let dim = 1 << n;
    let mut h = ComplexMatrix::zeros(dim, dim);

    // Zeeman: -sum_k mu_k B0 . S_k.
    for k in 0..n {
        let mu = geom.moments_mu_n[k] * units::MU_N_PEV_PER_T;
        let coupling = spin_along(n, k, geom.field_t);
        h = h.add(&coupling.scale(C64::new(-mu, 0.0)));
    }

    // Dipole-dipole: sum_{k<k'} (mu0 m_k m_k' / 4 pi r^3)
    //                  (S_k . S_k' - 3 (S_k . r_hat)(S_k' . r_hat)).
    for k in 0..n {
        for kp in 0..k {
            let r_vec = sub(geom.positions_nm[k], geom.positions_nm[kp]);
            let r = norm(r_vec);
            let r_hat = unit(r_vec);
            let pref = units::dipole_energy_pev(
                geom.moments_mu_n[k] * units::MU_N_PEV_PER_T,
                geom.moments_mu_n[kp] * units::MU_N_PEV_PER_T,
                r,
            );
            let mut term = ComplexMatrix::zeros(dim, dim);
            for axis in 0..3 {
                term = term
                    .add(&spin_component(n, k, axis).matmul(&spin_component(n, kp, axis)));
            }
            let proj =
                spin_along(n, k, r_hat).matmul(&spin_along(n, kp, r_hat)).scale(C64::new(3.0, 0.0));
            term = term.sub(&proj);
            h = h.add(&term.scale(C64::new(pref, 0.0)));
        }
    }
    Ok(HermitianOperator::new(h)?)
}

/// Probe-spin dipole coupling sigma_x (x) C, in peV. The system factor C is
/// returned too since it is the flip block of the control-basis
/// decomposition at theta = 0.
pub fn build_probe_coupling(geom: &SpinGeometry) -> Result<(ComplexMatrix, ComplexMatrix), SpinError> {
    geom.validate()?;
    let n = geom.n_spins();
    let dim = 1 << n;
    let n_hat = unit(geom.probe_axis);
    let mu_p = geom.probe_moment_mev_per_t * 1e9; // meV/T -> peV/T

    let mut c = ComplexMatrix::zeros(dim, dim);
    for k in 0..n {
        let r_vec = sub(geom.probe_position_nm, geom.positions_nm[k]);
        let r = norm(r_vec);
        let r_hat = unit(r_vec);
        let pref =
            units::dipole_energy_pev(mu_p, geom.moments_mu_n[k] * units::MU_N_PEV_PER_T, r);
        let direct = spin_along(n, k, n_hat);
        let projected =
            spin_along(n, k, r_hat).scale(C64::new(3.0 * dot(n_hat, r_hat), 0.0));
        c = c.add(&direct.sub(&projected).scale(C64::new(pref, 0.0)));
    }
    let v = tensor_product(&pauli::sigma_x(), &c)?;
    Ok((v, c))
}

/// Batch parameters for one reconstruction run.
#[derive(Debug, Clone, Serialize)]
pub struct NmrRunConfig {
    /// Total evolution-time budget in ns.
    pub total_time_ns: f64,
    /// tau step in ns.
    pub tau_step_ns: f64,
    /// Number of bias values per sweep.
    pub lambda_count: usize,
    /// Shots per (lambda, tau) point; 0 = exact probabilities.
    pub shots: u64,
    pub seed: u64,
    /// lambda must exceed the largest reachable coupling element by this
    /// factor.
    pub validity_margin: f64,
}

impl Default for NmrRunConfig {
    fn default() -> Self {
        Self {
            total_time_ns: 80_000.0,
            tau_step_ns: 100.0,
            lambda_count: 100,
            shots: 1_000_000,
            seed: 1,
            validity_margin: 1e3,
        }
    }
}

impl NmrRunConfig {
    fn validate(&self) -> Result<(), SpinError> {
        if self.tau_step_ns <= 0.0 || self.total_time_ns < self.tau_step_ns {
            return Err(SpinError::BadConfig("tau grid is empty or has nonpositive step".into()));
        }
        if self.lambda_count < 5 {
            return Err(SpinError::BadConfig("need at least 5 bias values".into()));
        }
        Ok(())
    }
}

/// Reconstruction output: the correlation-function series, its spectrum, the
/// diagonalization reference, and run diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct NmrOutput {
    pub lambdas_pev: Vec<f64>,
    pub taus_ns: Vec<f64>,
    /// Two-time correlation series (series taus in 1/peV core units).
    pub series: TauSeries,
    /// Reconstructed spectrum; bins in peV.
    pub spectrum: SpectrumEstimate,
    /// (gap in peV, weight) pairs from direct diagonalization.
    pub reference: Vec<(f64, f64)>,
    pub validity: ValidityReport,
    pub lambda_window_pev: (f64, f64),
    /// tau indices whose oscillation fit failed (kept as zeros in the series).
    pub failed_fits: Vec<usize>,
}

/// Reference spectrum from diagonalization: all signed gaps of the spin
/// Hamiltonian weighted by |<n|C|m>|^2 / dim (the correlation-function
/// weights for a maximally mixed initial state).
pub fn reference_spectrum(
    h_spin: &HermitianOperator,
    coupling: &ComplexMatrix,
) -> Result<Vec<(f64, f64)>, SpinError> {
    let eig = h_spin.eigen()?;
    let d = h_spin.dim();
    let c_eig = eig.vectors.adjoint().matmul(coupling).matmul(&eig.vectors);
    let mut out = Vec::new();
    for n in 0..d {
        for m in 0..d {
            let w = c_eig[(n, m)].norm_sqr() / d as f64;
            if w > 0.0 {
                out.push((eig.values[n] - eig.values[m], w));
            }
        }
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

/// Bias window selection: large enough for the validity margin, wide enough
/// to cover full oscillation periods at the shortest tau, and clear of
/// reachable resonances.
fn select_lambda_window(
    blocks: &CouplingBlocks,
    rho: &DensityOperator,
    cfg: &NmrRunConfig,
) -> Result<(f64, f64, ValidityReport), SpinError> {
    let e = blocks.a0.eigen()?;
    let b_eig = e.vectors.adjoint().matmul(&blocks.b).matmul(&e.vectors);
    let bound = b_eig.max_abs();
    let tau_min_core = cfg.tau_step_ns / units::HBAR_PEV_NS;
    let period = std::f64::consts::TAU / tau_min_core;
    let span = 1.25 * period;
    let mut lambda0 = (cfg.validity_margin * bound).max(period);

    let vcfg = ValidityConfig::default();
    for _shift in 0..32 {
        let mid = lambda0 + span / 2.0;
        let tau_probe = cfg.total_time_ns / units::HBAR_PEV_NS;
        let r = validity_report(blocks, rho, mid, tau_probe, 2, &vcfg)
            .map_err(SpinError::Linalg)?;
        // Raise the window until the kappa-sum constraint clears its margin
        // (near-degenerate dipolar gaps can dominate the matrix-element
        // bound), then dodge any residual resonance.
        if let Some(row) = r.constraints.iter().find(|c| c.name.starts_with("order") && !c.pass) {
            lambda0 = lambda0.max(vcfg.margin * row.rhs * 1.05);
            continue;
        }
        if r.resonances.is_empty() {
            return Ok((lambda0, lambda0 + span, r));
        }
        lambda0 += 4.0 * vcfg.resonance_width_rel * mid;
    }
    Err(SpinError::NoCleanWindow(32))
}

fn splitmix_unit(seed: u64) -> f64 {
    // Map a derived seed to [0, 1).
    (point_seed(seed, 0x5eed) >> 11) as f64 / (1u64 << 53) as f64
}

/// Run the full reconstruction: per-tau bias sweeps with finite shots,
/// known-frequency oscillation fits (prescaled by lambda^2), a tau-series of
/// the fitted complex amplitudes, and its Fourier spectrum, alongside the
/// diagonalization reference.
pub fn run_nmr_experiment(geom: &SpinGeometry, cfg: &NmrRunConfig) -> Result<NmrOutput, SpinError> {
    cfg.validate()?;
    let h_spin = build_spin_hamiltonian(geom)?;
    let (v_coupling, c_block) = build_probe_coupling(geom)?;
    let dim = h_spin.dim();
    let rho = DensityOperator::maximally_mixed(dim);

    // theta = 0 control: A0 = A1 = H_spin and B = C.
    let blocks = CouplingBlocks::new(h_spin.clone(), h_spin.clone(), c_block.clone())
        .map_err(|e| SpinError::BadConfig(e.to_string()))?;
    let (lambda_lo, lambda_hi, validity) = select_lambda_window(&blocks, &rho, cfg)?;

    // Jittered bias grid: a uniform lattice can sample cos(lambda tau) at a
    // rationally-degenerate set of phases for some tau, making the fit
    // design singular; deterministic jitter keeps it conditioned everywhere.
    let count = cfg.lambda_count;
    let step = (lambda_hi - lambda_lo) / count as f64;
    let lambdas: Vec<f64> = (0..count)
        .map(|i| lambda_lo + step * (i as f64 + 0.9 * splitmix_unit(cfg.seed ^ (i as u64 + 1))))
        .collect();

    let n_tau = (cfg.total_time_ns / cfg.tau_step_ns).floor() as usize;
    let taus_ns: Vec<f64> = (1..=n_tau).map(|k| k as f64 * cfg.tau_step_ns).collect();
    let taus_core: Vec<f64> = taus_ns.iter().map(|t| t / units::HBAR_PEV_NS).collect();

    let joint = tensor_product(&ComplexMatrix::identity(2), h_spin.matrix())
        .map_err(SpinError::Linalg)?
        .add(&v_coupling);
    let experiment = ProbeExperiment {
        v_ps: joint,
        rho_s: rho,
        theta: 0.0,
        phi: 0.0,
        preparation: ProbePureState::pi0(),
        measurement: ProbePureState::pi1(),
    };

    // Exact probabilities and shot estimates, lambda-major for cache reuse.
    let sampled: Result<Vec<Vec<f64>>, SpinError> = lambdas
        .par_iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let cache = experiment.evolution_cache(lambda)?;
            let mut row = Vec::with_capacity(n_tau);
            for (ti, &tau) in taus_core.iter().enumerate() {
                let p = cache.probability(tau)?;
                let value = if cfg.shots > 0 {
                    let idx = (li * n_tau + ti) as u64;
                    sample_shots(p, cfg.shots, point_seed(cfg.seed, idx))? as f64
                        / cfg.shots as f64
                } else {
                    p
                };
                row.push(value);
            }
            Ok(row)
        })
        .collect();
    let sampled = sampled?;

    // Per-tau oscillation fits on lambda^2-prescaled samples. q = 0 for the
    // orthogonal basis pair, and the fitted coefficient is then
    // -2 <e^{iA tau} C e^{-iA tau} C> independent of lambda.
    let mut fits = Vec::with_capacity(n_tau);
    let mut failed_fits = Vec::new();
    let zero_fit = || crate::estimation::OscillationFit {
        eta: 0.0,
        amplitude: 0.0,
        phase: 0.0,
        frequency: 0.0,
        residual_rms: 0.0,
        covariance: [[0.0; 3]; 3],
        eta_err: 0.0,
        amplitude_err: 0.0,
        phase_err: 0.0,
    };
    for (ti, &tau) in taus_core.iter().enumerate() {
        let mut values = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for (li, &lambda) in lambdas.iter().enumerate() {
            let p_hat = sampled[li][ti];
            values.push(lambda * lambda * p_hat);
            if cfg.shots > 0 {
                let var_p =
                    (p_hat * (1.0 - p_hat)).max(1.0 / cfg.shots as f64) / cfg.shots as f64;
                weights.push(1.0 / (lambda.powi(4) * var_p));
            }
        }
        let w = if cfg.shots > 0 { Some(weights.as_slice()) } else { None };
        match fit_oscillation(&lambdas, &values, w, tau, None) {
            Ok(f) => fits.push(f),
            Err(_) => {
                failed_fits.push(ti);
                fits.push(zero_fit());
            }
        }
    }

    // Fitted coefficient images -2 x (two-time correlation); undo the -2.
    let series = build_tau_series(&taus_core, &fits, "two-time correlation")?
        .scaled(C64::new(-0.5, 0.0));
    let spectrum = fourier_spectrum(&series, Window::Rectangular)?;
    let reference = reference_spectrum(&h_spin, &c_block)?;

    Ok(NmrOutput {
        lambdas_pev: lambdas,
        taus_ns,
        series,
        spectrum,
        reference,
        validity,
        lambda_window_pev: (lambda_lo, lambda_hi),
        failed_fits,
    })
}

/// Deterministic random geometry: spins uniform in a sphere with a minimum
/// pairwise separation, probe placed in a shell around the cluster, field
/// perpendicular to the probe axis. Instances whose spectral width would
/// alias at the configured tau step are rejected and retried.
pub fn random_geometry(
    seed: u64,
    n_spins: usize,
    cluster_radius_nm: f64,
    min_separation_nm: f64,
    probe_shell_nm: (f64, f64),
    tau_step_ns: f64,
) -> Result<SpinGeometry, SpinError> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let nyquist = std::f64::consts::PI * units::HBAR_PEV_NS / tau_step_ns;

    for _attempt in 0..128 {
        // Random start in the ball, then pairwise repulsion relaxation: the
        // separation floor can sit near the packing limit of the sphere,
        // where plain rejection never lands.
        let mut positions: Vec<Vec3> = (0..n_spins)
            .map(|_| loop {
                let p = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                if norm(p) <= 1.0 {
                    break [
                        p[0] * cluster_radius_nm,
                        p[1] * cluster_radius_nm,
                        p[2] * cluster_radius_nm,
                    ];
                }
            })
            .collect();
        for _ in 0..600 {
            let mut moved = false;
            for i in 0..n_spins {
                for j in 0..i {
                    let d = sub(positions[i], positions[j]);
                    let dist = norm(d);
                    if dist < min_separation_nm {
                        moved = true;
                        let dir = if dist > 1e-12 {
                            unit(d)
                        } else {
                            [1.0, 0.0, 0.0]
                        };
                        let push = 0.55 * (min_separation_nm - dist) * 1.1;
                        for k in 0..3 {
                            positions[i][k] += dir[k] * push;
                            positions[j][k] -= dir[k] * push;
                        }
                    }
                }
            }
            for p in &mut positions {
                let r = norm(*p);
                if r > cluster_radius_nm {
                    let s = cluster_radius_nm / r;
                    *p = [p[0] * s, p[1] * s, p[2] * s];
                }
            }
            if !moved {
                break;
            }
        }
        let packed = (0..n_spins).all(|i| {
            (0..i).all(|j| norm(sub(positions[i], positions[j])) >= 0.999 * min_separation_nm)
        });
        if !packed {
            continue;
        }

        let shell = rng.gen_range(probe_shell_nm.0..probe_shell_nm.1);
        let dir = loop {
            let d = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = norm(d);
            if n > 1e-3 && n <= 1.0 {
                break unit(d);
            }
        };
        let geom = SpinGeometry {
            positions_nm: positions,
            moments_mu_n: vec![1.0; n_spins],
            field_t: [0.0, 0.0, 1e-3],
            probe_position_nm: [dir[0] * shell, dir[1] * shell, dir[2] * shell],
            probe_axis: [1.0, 0.0, 0.0],
            probe_moment_mev_per_t: 0.3,
        };

        // Reject geometries whose gap spread would alias on the tau grid.
        let h = build_spin_hamiltonian(&geom)?;
        let eig = h.eigen()?;
        let width = eig.values.last().unwrap() - eig.values.first().unwrap();
        if width < 0.9 * nyquist {
            return Ok(geom);
        }
    }
    Err(SpinError::BadConfig("no geometry satisfied the sampling constraints".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::find_peaks;

    fn single_spin_geometry(field: Vec3) -> SpinGeometry {
        SpinGeometry {
            positions_nm: vec![[0.0, 0.0, 0.0]],
            moments_mu_n: vec![1.0],
            field_t: field,
            probe_position_nm: [0.8, 0.0, 0.0],
            probe_axis: [1.0, 0.0, 0.0],
            probe_moment_mev_per_t: 0.3,
        }
    }

    #[test]
    fn zeeman_splitting_matches_analytic() {
        let b = 1e-3;
        let geom = single_spin_geometry([0.0, 0.0, b]);
        let h = build_spin_hamiltonian(&geom).unwrap();
        let eig = h.eigen().unwrap();
        let gap = eig.values[1] - eig.values[0];
        let expected = units::MU_N_PEV_PER_T * b; // mu |B0| between S_z = +-1/2
        assert!(
            (gap - expected).abs() < 1e-12 * expected,
            "gap {gap} vs {expected}"
        );
        // ~31.5 peV at 1 mT.
        assert!((expected - 31.5).abs() < 0.2);
    }

    #[test]
    fn two_spin_dipolar_spectrum_matches_analytic() {
        // B0 = 0, separation r along z. In units of the dipolar prefactor D,
        // the eigenvalues are {-1/2, -1/2, 0, 1}.
        let r = 0.3;
        let geom = SpinGeometry {
            positions_nm: vec![[0.0, 0.0, 0.0], [0.0, 0.0, r]],
            moments_mu_n: vec![1.0, 1.0],
            field_t: [0.0, 0.0, 0.0],
            probe_position_nm: [1.0, 0.0, 0.0],
            probe_axis: [1.0, 0.0, 0.0],
            probe_moment_mev_per_t: 0.3,
        };
        let h = build_spin_hamiltonian(&geom).unwrap();
        let d = units::dipole_energy_pev(units::MU_N_PEV_PER_T, units::MU_N_PEV_PER_T, r);
        let mut expected = [-0.5 * d, -0.5 * d, 0.0, d];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let eig = h.eigen().unwrap();
        for (v, e) in eig.values.iter().zip(&expected) {
            assert!((v - e).abs() < 1e-12 * d.abs().max(1.0), "{v} vs {e}");
        }
    }

    #[test]
    fn typical_nuclear_gaps_are_tens_of_pev() {
        // mu ~ mu_N at a few angstroms: splittings of order 10 peV.
        let r = 0.12;
        let geom = SpinGeometry {
            positions_nm: vec![[0.0, 0.0, 0.0], [r, 0.0, 0.0], [0.0, r, 0.0]],
            moments_mu_n: vec![1.0, 1.0, 1.0],
            field_t: [0.0, 0.0, 0.0],
            probe_position_nm: [0.9, 0.4, 0.2],
            probe_axis: [0.0, 0.0, 1.0],
            probe_moment_mev_per_t: 0.3,
        };
        let h = build_spin_hamiltonian(&geom).unwrap();
        let eig = h.eigen().unwrap();
        let width = eig.values.last().unwrap() - eig.values.first().unwrap();
        assert!(width > 1.0 && width < 300.0, "width {width} peV");
    }

    #[test]
    fn doubling_distances_scales_couplings_by_eighth() {
        let geom = SpinGeometry {
            positions_nm: vec![[0.0, 0.0, 0.0], [0.1, 0.05, 0.0], [0.0, 0.1, 0.08]],
            moments_mu_n: vec![1.0, 0.8, 1.2],
            field_t: [0.0, 0.0, 0.0],
            probe_position_nm: [1.0, 1.0, 1.0],
            probe_axis: [1.0, 0.0, 0.0],
            probe_moment_mev_per_t: 0.3,
        };
        let mut doubled = geom.clone();
        for p in &mut doubled.positions_nm {
            *p = [2.0 * p[0], 2.0 * p[1], 2.0 * p[2]];
        }
        let h1 = build_spin_hamiltonian(&geom).unwrap();
        let h2 = build_spin_hamiltonian(&doubled).unwrap();
        let diff = h2.matrix().scale(C64::new(8.0, 0.0)).max_abs_diff(h1.matrix());
        assert!(diff < 1e-12 * h1.matrix().max_abs());
    }

    #[test]
    fn probe_coupling_edge_cases() {
        // Zero probe moment: zero coupling.
        let mut geom = single_spin_geometry([0.0, 0.0, 1e-3]);
        geom.probe_moment_mev_per_t = 0.0;
        let (v, c) = build_probe_coupling(&geom).unwrap();
        assert!(v.max_abs() == 0.0 && c.max_abs() == 0.0);

        // Probe axis perpendicular to the separation: only the direct term.
        let geom = SpinGeometry {
            positions_nm: vec![[0.0, 0.0, 0.0]],
            moments_mu_n: vec![1.0],
            field_t: [0.0, 0.0, 1e-3],
            probe_position_nm: [0.7, 0.0, 0.0],
            probe_axis: [0.0, 0.0, 1.0],
            probe_moment_mev_per_t: 0.3,
        };
        let (_, c) = build_probe_coupling(&geom).unwrap();
        let pref = units::dipole_energy_pev(0.3e9, units::MU_N_PEV_PER_T, 0.7);
        let expected = spin_component(1, 0, 2).scale(C64::new(pref, 0.0));
        assert!(c.max_abs_diff(&expected) < 1e-12 * pref.abs());
    }

    #[test]
    fn coincident_spins_rejected() {
        let geom = SpinGeometry {
            positions_nm: vec![[0.0; 3], [0.0; 3]],
            moments_mu_n: vec![1.0, 1.0],
            field_t: [0.0, 0.0, 1e-3],
            probe_position_nm: [1.0, 0.0, 0.0],
            probe_axis: [1.0, 0.0, 0.0],
            probe_moment_mev_per_t: 0.3,
        };
        assert!(matches!(
            build_spin_hamiltonian(&geom),
            Err(SpinError::CoincidentSpins(0, 1))
        ));
    }

    #[test]
    fn zero_coupling_gives_flat_spectrum() {
        let mut geom = random_geometry(3, 2, 0.02, 0.016, (0.5, 1.0), 100.0).unwrap();
        geom.probe_moment_mev_per_t = 0.0;
        let cfg = NmrRunConfig {
            total_time_ns: 3_000.0,
            shots: 0,
            lambda_count: 24,
            ..Default::default()
        };
        let out = run_nmr_experiment(&geom, &cfg).unwrap();
        let peaks = find_peaks(&out.spectrum, 5.0);
        assert!(peaks.is_empty(), "flat spectrum expected, got {peaks:?}");
    }

    #[test]
    fn noise_free_reconstruction_matches_reference_positions() {
        let geom = random_geometry(11, 2, 0.02, 0.016, (0.5, 1.0), 100.0).unwrap();
        let cfg = NmrRunConfig {
            total_time_ns: 8_000.0,
            shots: 0,
            lambda_count: 40,
            ..Default::default()
        };
        let out = run_nmr_experiment(&geom, &cfg).unwrap();
        assert!(out.failed_fits.is_empty());
        let peaks = find_peaks(&out.spectrum, 5.0);
        assert!(!peaks.is_empty());
        let max_ref = out.reference.iter().map(|r| r.1).fold(0.0, f64::max);
        for (gap, _) in out.reference.iter().filter(|r| r.0.abs() > 0.0 && r.1 > 0.05 * max_ref) {
            let hit = peaks
                .iter()
                .any(|p| (p.frequency - gap).abs() <= out.spectrum.resolution);
            assert!(hit, "reference gap {gap} peV has no reconstructed peak");
        }
    }
}
