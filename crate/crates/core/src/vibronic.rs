//! Spin-boson molecular-junction pipeline: polaron-transformed analytic
//! transition probabilities, reconstruction of the reorganization energy and
//! the decoherence function f(tau), spectral-density recovery and
//! thermometry, plus a truncated-Fock oracle.
//!
//! Units: energies in meV, times in ps (hbar = 0.6582... meV ps),
//! temperatures in kelvin.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::estimation::{
    find_peaks, fit_oscillation, fourier_spectrum, tau_series_from_values, EstimationError,
    OscillationFit, Window,
};
use crate::linalg::{tensor_product, ComplexMatrix, DensityOperator, HermitianOperator, LinalgError};
use crate::model::{CouplingBlocks, ProbePureState};

pub mod units {
    /// hbar in meV ps.
    pub const HBAR_MEV_PS: f64 = 0.6582119569;
    /// Boltzmann constant in meV per kelvin.
    pub const KB_MEV_PER_K: f64 = 0.08617333;
}

#[derive(Debug, Error)]
pub enum VibronicError {
    #[error("invalid model: {0}")]
    BadModel(String),
    #[error("no dominant spectral peak; thermometry refused")]
    NoDominantPeak,
    #[error("coth ratio {0} < 1: inconsistent with any temperature")]
    InconsistentCothRatio(f64),
    #[error("temperature out of bracket (0.1 K, 1e4 K)")]
    TemperatureOutOfRange,
    #[error("f(tau) series contains unrecoverable gaps")]
    GapsInSeries,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

/// Donor-acceptor pair tunneling through a set of vibrational modes.
#[derive(Debug, Clone, Serialize)]
pub struct VibronicModel {
    /// Mode frequencies omega_k in meV.
    pub mode_frequencies_mev: Vec<f64>,
    /// Donor couplings gamma_dk in meV.
    pub couplings_d_mev: Vec<f64>,
    /// Acceptor couplings gamma_ak in meV.
    pub couplings_a_mev: Vec<f64>,
    /// Tunneling energy V in meV.
    pub tunneling_mev: f64,
    /// Bias lambda in meV.
    pub bias_mev: f64,
    /// Temperature in kelvin.
    pub temperature_k: f64,
}

impl VibronicModel {
    pub fn validate(&self) -> Result<Vec<String>, VibronicError> {
        let k = self.mode_frequencies_mev.len();
        if self.couplings_d_mev.len() != k || self.couplings_a_mev.len() != k {
            return Err(VibronicError::BadModel("coupling arrays must match mode count".into()));
        }
        if self.mode_frequencies_mev.iter().any(|&w| w <= 0.0) {
            return Err(VibronicError::BadModel("mode frequencies must be positive".into()));
        }
        if self.tunneling_mev <= 0.0 {
            return Err(VibronicError::BadModel("tunneling energy must be positive".into()));
        }
        let mut warnings = Vec::new();
        if self.bias_mev < 10.0 * self.tunneling_mev {
            warnings.push(format!(
                "bias {} meV is not large against tunneling {} meV",
                self.bias_mev, self.tunneling_mev
            ));
        }
        Ok(warnings)
    }

    pub fn polaron(&self) -> PolaronModel {
        let u_d: Vec<f64> = self
            .couplings_d_mev
            .iter()
            .zip(&self.mode_frequencies_mev)
            .map(|(g, w)| g / w)
            .collect();
        let u_a: Vec<f64> = self
            .couplings_a_mev
            .iter()
            .zip(&self.mode_frequencies_mev)
            .map(|(g, w)| g / w)
            .collect();
        let e_r = self
            .mode_frequencies_mev
            .iter()
            .zip(u_d.iter().zip(&u_a))
            .map(|(w, (ud, ua))| w * (ud * ud - ua * ua))
            .sum();
        PolaronModel { displacement_d: u_d, displacement_a: u_a, reorganization_energy_mev: e_r }
    }

    /// Longest evolution time for which the expansion stays controlled,
    /// tau_max ~ hbar lambda / V^2.
    pub fn tau_max_ps(&self) -> f64 {
        units::HBAR_MEV_PS * self.bias_mev / (self.tunneling_mev * self.tunneling_mev)
    }
}

/// Displacement ratios and the reorganization energy of the polaron frame.
#[derive(Debug, Clone, Serialize)]
pub struct PolaronModel {
    pub displacement_d: Vec<f64>,
    pub displacement_a: Vec<f64>,
    /// E_r = sum_k omega_k (u_dk^2 - u_ak^2), the bias shift.
    pub reorganization_energy_mev: f64,
}

impl PolaronModel {
    /// u_dk - u_ak, the displacement entering every correlation function.
    pub fn xi(&self) -> Vec<f64> {
        self.displacement_d.iter().zip(&self.displacement_a).map(|(d, a)| d - a).collect()
    }
}

fn coth(x: f64) -> f64 {
    // T -> 0 (large x) limit is 1.
    if x > 350.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Decoherence exponent
/// f(tau) = -sum_j (u_dj - u_aj)^2 coth(omega_j / 2 kB T) (1 - cos(omega_j tau / hbar)).
/// Nonpositive, with f(0) = 0.
pub fn f_tau(model: &VibronicModel, tau_ps: f64) -> f64 {
    let pol = model.polaron();
    let kbt = units::KB_MEV_PER_K * model.temperature_k;
    let mut acc = 0.0;
    for (xi, &w) in pol.xi().iter().zip(&model.mode_frequencies_mev) {
        let thermal = if kbt <= 0.0 { 1.0 } else { coth(w / (2.0 * kbt)) };
        acc -= xi * xi * thermal * (1.0 - (w * tau_ps / units::HBAR_MEV_PS).cos());
    }
    acc
}

/// Oscillatory companion phase Phi(tau) = sum_j (u_dj - u_aj)^2 sin(omega_j tau / hbar),
/// produced by the displacement-operator commutators alongside f(tau).
pub fn phi_tau(model: &VibronicModel, tau_ps: f64) -> f64 {
    let pol = model.polaron();
    pol.xi()
        .iter()
        .zip(&model.mode_frequencies_mev)
        .map(|(xi, &w)| xi * xi * (w * tau_ps / units::HBAR_MEV_PS).sin())
        .sum()
}

/// Donor-to-acceptor transition probability in the polaron frame:
///
/// ```text
/// p_{a:d} = (V^2 / (lambda - E_r)^2) [2 - 2 e^{f(tau)} cos((lambda - E_r) tau / hbar - Phi(tau))]
/// ```
///
/// This is the second-order closed form evaluated exactly for the
/// displacement-operator coupling; it vanishes at tau = 0 and is bounded by
/// 4 V^2 / (lambda - E_r)^2. Beyond [`VibronicModel::tau_max_ps`] the
/// underlying expansion degrades.
pub fn analytic_probability(model: &VibronicModel, tau_ps: f64) -> f64 {
    let pol = model.polaron();
    let lp = model.bias_mev - pol.reorganization_energy_mev;
    let v = model.tunneling_mev;
    let phase = lp * tau_ps / units::HBAR_MEV_PS - phi_tau(model, tau_ps);
    let envelope = f_tau(model, tau_ps).exp();
    (v * v / (lp * lp)) * (2.0 - 2.0 * envelope * phase.cos())
}

/// Matrix element <m|D(xi)|n> of the displacement operator, via associated
/// Laguerre polynomials.
pub fn displacement_matrix_element(m: usize, n: usize, xi: C64) -> C64 {
    let x = xi.norm_sqr();
    let gaussian = (-x / 2.0).exp();
    let (lesser, diff) = if m >= n { (n, m - n) } else { (m, n - m) };
    // sqrt(lesser!/greater!) |arg|^{diff} as a stable product.
    let mut pref = C64::new(gaussian, 0.0);
    let arg = if m >= n { xi } else { -xi.conj() };
    for j in 1..=diff {
        pref *= arg / ((lesser + j) as f64).sqrt();
    }
    pref * laguerre(lesser, diff as f64, x)
}

/// Associated Laguerre polynomial L_n^{(a)}(x) by the standard three-term
/// recurrence.
fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * l - (kf + a) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Worst-case coupling matrix element: the largest
/// displacement matrix element over thermally occupied initial levels, times
/// V. The bias must dominate this scale.
pub fn coupling_element_bound(model: &VibronicModel, cutoff: usize) -> f64 {
    let pol = model.polaron();
    let kbt = units::KB_MEV_PER_K * model.temperature_k;
    let mut product = model.tunneling_mev;
    for (xi, &w) in pol.xi().iter().zip(&model.mode_frequencies_mev) {
        let mut max_el = 0.0f64;
        for n in 0..cutoff {
            let occupation = if kbt <= 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-(n as f64) * w / kbt).exp()
            };
            if occupation < 1e-6 {
                break;
            }
            for m in 0..cutoff {
                max_el = max_el.max(displacement_matrix_element(m, n, C64::new(*xi, 0.0)).norm());
            }
        }
        product *= max_el;
    }
    product
}

/// Truncated-Fock simulation of the polaron-frame model through the exact
/// dynamics machinery: A0 = A1 = sum_k omega_k n_k, B = V prod_k D(u_dk - u_ak),
/// thermal initial state, probe split by lambda - E_r.
pub struct FockOracle {
    pub blocks: CouplingBlocks,
    pub rho: DensityOperator,
    pub lambda_polaron_mev: f64,
    pub cutoff: usize,
}

impl FockOracle {
    pub fn build(model: &VibronicModel, cutoff: usize) -> Result<Self, VibronicError> {
        model.validate()?;
        let pol = model.polaron();
        let n_modes = model.mode_frequencies_mev.len();
        let dim = cutoff.pow(n_modes as u32);
        if dim > 2048 {
            return Err(VibronicError::BadModel(format!(
                "Fock dimension {dim} too large; lower the cutoff"
            )));
        }

        // Per-mode number operator and displacement matrix.
        let mut h = ComplexMatrix::zeros(dim, dim);
        let mut b = ComplexMatrix::identity(1);
        let mut rho = ComplexMatrix::identity(1);
        let kbt = units::KB_MEV_PER_K * model.temperature_k;
        for (k, &w) in model.mode_frequencies_mev.iter().enumerate() {
            let number = ComplexMatrix::from_fn(cutoff, cutoff, |i, j| {
                if i == j {
                    C64::new(i as f64 * w, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            // H += I (x) ... number ... (x) I
            let mut lifted = ComplexMatrix::identity(1);
            for kk in 0..n_modes {
                let factor =
                    if kk == k { number.clone() } else { ComplexMatrix::identity(cutoff) };
                lifted = tensor_product(&lifted, &factor)?;
            }
            h = h.add(&lifted);

            let xi = pol.xi()[k];
            let disp = ComplexMatrix::from_fn(cutoff, cutoff, |m, n| {
                displacement_matrix_element(m, n, C64::new(xi, 0.0))
            });
            b = tensor_product(&b, &disp)?;

            let weights: Vec<f64> = (0..cutoff)
                .map(|n| if kbt <= 0.0 { f64::from(u8::from(n == 0)) } else { (-(n as f64) * w / kbt).exp() })
                .collect();
            let z: f64 = weights.iter().sum();
            let thermal = ComplexMatrix::from_fn(cutoff, cutoff, |i, j| {
                if i == j {
                    C64::new(weights[i] / z, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            rho = tensor_product(&rho, &thermal)?;
        }
        let b = b.scale(C64::new(model.tunneling_mev, 0.0));

        let h_op = HermitianOperator::new(h)?;
        let blocks = CouplingBlocks::new(h_op.clone(), h_op, b)
            .map_err(|e| VibronicError::BadModel(e.to_string()))?;
        let rho = DensityOperator::new(rho)?;
        Ok(Self {
            blocks,
            rho,
            lambda_polaron_mev: model.bias_mev - pol.reorganization_energy_mev,
            cutoff,
        })
    }

    /// Exact donor-to-acceptor probabilities on a tau grid (ps).
    pub fn probabilities(&self, taus_ps: &[f64]) -> Result<Vec<f64>, VibronicError> {
        let basis = crate::model::control_eigenbasis(0.0, 0.0);
        let exp = crate::dynamics::ProbeExperiment {
            v_ps: self.blocks.assemble(&basis),
            rho_s: self.rho.clone(),
            theta: 0.0,
            phi: 0.0,
            preparation: ProbePureState::pi0(),
            measurement: ProbePureState::pi1(),
        };
        let cache = exp.evolution_cache(self.lambda_polaron_mev)?;
        let ps: Result<Vec<f64>, DynamicsError> = taus_ps
            .par_iter()
            .map(|&t| cache.probability(t / units::HBAR_MEV_PS))
            .collect();
        Ok(ps?)
    }
}

/// Reconstruction of the reorganization energy and f(tau) from sampled
/// probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct VibronicReconstruction {
    pub e_r_mev: f64,
    pub e_r_err_mev: f64,
    pub taus_ps: Vec<f64>,
    /// ln of the normalized oscillation amplitude; None where the amplitude
    /// sank below its own noise floor.
    pub f_values: Vec<Option<f64>>,
    /// Mode frequencies discovered from the amplitude envelope (meV).
    pub mode_frequencies_mev: Vec<f64>,
    pub fits: Vec<OscillationFit>,
}

/// Solve a small weighted least-squares problem by normal equations with
/// partial-pivot elimination.
fn solve_least_squares(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let k = rows.first()?.len();
    let mut ata = vec![vec![0.0f64; k + 1]; k];
    for ((row, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for r in 0..k {
            for c in 0..k {
                ata[r][c] += wi * row[r] * row[c];
            }
            ata[r][k] += wi * row[r] * yi;
        }
    }
    // Gaussian elimination.
    for col in 0..k {
        let pivot = (col..k).max_by(|&a, &b| {
            ata[a][col].abs().partial_cmp(&ata[b][col].abs()).unwrap()
        })?;
        ata.swap(col, pivot);
        if ata[col][col].abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / ata[col][col];
        for r in 0..k {
            if r == col {
                continue;
            }
            let factor = ata[r][col] * inv;
            for c in col..=k {
                let v = ata[col][c];
                ata[r][c] -= factor * v;
            }
        }
    }
    Some((0..k).map(|r| ata[r][k] / ata[r][r]).collect())
}

/// Recover E_r and f(tau) from a (lambda, tau) grid of probabilities.
///
/// Per tau, a known-frequency fit on lambda^2-prescaled samples yields an
/// amplitude and phase; the phase trend over tau is regressed as
/// phi(tau) = phi0 - E_r tau/hbar - sum_k c_k sin(omega_k tau/hbar), with the
/// mode frequencies discovered from the amplitude envelope, and the
/// amplitudes are converted to f = ln(D (lambda - E_r)^2 / 2 V^2).
pub fn reconstruct_f_and_er(
    lambdas_mev: &[f64],
    taus_ps: &[f64],
    p: &[Vec<f64>],
    sigma: Option<&[Vec<f64>]>,
    tunneling_mev: f64,
) -> Result<VibronicReconstruction, VibronicError> {
    let n_tau = taus_ps.len();
    if p.len() != lambdas_mev.len() || p.iter().any(|row| row.len() != n_tau) {
        return Err(VibronicError::BadModel("probability grid shape mismatch".into()));
    }

    let fit_pass = |prescale: &dyn Fn(f64) -> f64| -> Result<Vec<OscillationFit>, VibronicError> {
        let mut fits = Vec::with_capacity(n_tau);
        for (ti, &tau) in taus_ps.iter().enumerate() {
            let tau_core = tau / units::HBAR_MEV_PS;
            let mut values = Vec::with_capacity(lambdas_mev.len());
            let mut weights = Vec::with_capacity(lambdas_mev.len());
            for (li, &lambda) in lambdas_mev.iter().enumerate() {
                let scale = prescale(lambda);
                values.push(scale * p[li][ti]);
                if let Some(s) = sigma {
                    let var = (s[li][ti] * scale).powi(2).max(1e-300);
                    weights.push(1.0 / var);
                }
            }
            let w = sigma.map(|_| weights.as_slice());
            fits.push(fit_oscillation(lambdas_mev, &values, w, tau_core, None)?);
        }
        Ok(fits)
    };

    // Pass 1: lambda^2 prescale (E_r unknown).
    let fits1 = fit_pass(&|l| l * l)?;

    // Mode discovery from the amplitude envelope ln D(tau).
    let taus_core: Vec<f64> = taus_ps.iter().map(|t| t / units::HBAR_MEV_PS).collect();
    let ln_d: Vec<C64> = fits1
        .iter()
        .map(|f| C64::new(f.amplitude.max(1e-300).ln(), 0.0))
        .collect();
    let mean = ln_d.iter().map(|z| z.re).sum::<f64>() / n_tau as f64;
    let centered: Vec<C64> = ln_d.iter().map(|z| C64::new(z.re - mean, 0.0)).collect();
    let env_series = tau_series_from_values(&taus_core, &centered, "ln-envelope")?;
    let env_spec = fourier_spectrum(&env_series, Window::Rectangular)?;
    let mut modes: Vec<f64> = find_peaks(&env_spec, 5.0)
        .into_iter()
        .filter(|pk| pk.frequency > 0.0)
        .map(|pk| pk.frequency)
        .collect();
    modes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    modes.truncate(8);

    // Phase regression: unwrapped phase against {1, tau, sin(omega tau)}.
    // The amplitude prescale assumes the bias shift, so alternate regression
    // and re-prescaled fits until E_r settles; the leftover (lambda /
    // (lambda - E_r))^2 modulation otherwise biases the phases.
    let regress = |fits: &[OscillationFit]| -> Result<(f64, f64), VibronicError> {
        let series = crate::estimation::build_tau_series(&taus_core, fits, "phase")?;
        let mut rows = Vec::with_capacity(n_tau);
        let mut resp = Vec::with_capacity(n_tau);
        let mut wts = Vec::with_capacity(n_tau);
        for (ti, &tc) in taus_core.iter().enumerate() {
            let mut row = vec![1.0, tc];
            for &m in &modes {
                row.push((m * tc).sin());
            }
            rows.push(row);
            resp.push(series.unwrapped_phase[ti]);
            let perr = fits[ti].phase_err.max(1e-12);
            wts.push(1.0 / (perr * perr));
        }
        let coeffs = solve_least_squares(&rows, &resp, &wts)
            .ok_or_else(|| VibronicError::BadModel("phase regression singular".into()))?;
        let mut ss = 0.0;
        let mut tt = 0.0;
        let t_mean = taus_core.iter().sum::<f64>() / n_tau as f64;
        for (ti, row) in rows.iter().enumerate() {
            let pred: f64 = row.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
            ss += (resp[ti] - pred).powi(2);
            tt += (taus_core[ti] - t_mean).powi(2);
        }
        let err = (ss / (n_tau.saturating_sub(coeffs.len()).max(1) as f64) / tt).sqrt();
        Ok((-coeffs[1], err))
    };

    let (mut e_r_mev, mut e_r_err_mev) = regress(&fits1)?;
    let mut fits2 = fits1;
    for _ in 0..8 {
        fits2 = fit_pass(&|l| (l - e_r_mev) * (l - e_r_mev))?;
        let (next, err) = regress(&fits2)?;
        let delta = (next - e_r_mev).abs();
        e_r_mev = next;
        e_r_err_mev = err;
        if delta < 1e-11 * e_r_mev.abs().max(1.0) {
            break;
        }
    }
    let v2 = 2.0 * tunneling_mev * tunneling_mev;
    let f_values: Vec<Option<f64>> = fits2
        .iter()
        .map(|f| {
            if f.amplitude <= 3.0 * f.amplitude_err || f.amplitude <= 0.0 {
                None
            } else {
                Some((f.amplitude / v2).ln())
            }
        })
        .collect();

    Ok(VibronicReconstruction {
        e_r_mev,
        e_r_err_mev,
        taus_ps: taus_ps.to_vec(),
        f_values,
        mode_frequencies_mev: modes,
        fits: fits2,
    })
}

/// Spectral analysis of f(tau): the thermally weighted image f~(omega) at
/// the positive bins, mode peaks, and either the spectral density J(omega)
/// (temperature known) or the temperature (dominant-mode J known).
#[derive(Debug, Clone, Serialize)]
pub struct SpectralAnalysis {
    pub frequencies_mev: Vec<f64>,
    pub f_tilde: Vec<f64>,
    /// (omega, f~ value) at detected peaks.
    pub peaks: Vec<(f64, f64)>,
    /// (omega, J weight) when the temperature was supplied.
    pub spectral_density: Option<Vec<(f64, f64)>>,
    /// Recovered temperature when the dominant-mode J weight was supplied.
    pub temperature_k: Option<f64>,
}

pub enum ThermoInput {
    /// Temperature known: recover J(omega).
    KnownTemperature(f64),
    /// Spectral-density weight at the dominant mode known: recover T.
    KnownDominantWeight(f64),
}

pub fn spectral_density_and_thermometry(
    taus_ps: &[f64],
    f_values: &[f64],
    input: ThermoInput,
) -> Result<SpectralAnalysis, VibronicError> {
    if taus_ps.len() != f_values.len() {
        return Err(VibronicError::BadModel("f series shape mismatch".into()));
    }
    let taus_core: Vec<f64> = taus_ps.iter().map(|t| t / units::HBAR_MEV_PS).collect();
    let values: Vec<C64> = f_values.iter().map(|&f| C64::new(f, 0.0)).collect();
    let series = tau_series_from_values(&taus_core, &values, "f")?;
    let spec = fourier_spectrum(&series, Window::Rectangular)?;

    // f = -sum xi^2 coth (1 - cos omega tau): the cosine component at +omega
    // splits evenly between the +-omega bins.
    let mut frequencies = Vec::new();
    let mut f_tilde = Vec::new();
    for (i, &w) in spec.frequencies.iter().enumerate() {
        if w > 0.0 {
            frequencies.push(w);
            f_tilde.push(2.0 * spec.weights[i].re);
        }
    }

    let positive_peaks: Vec<(f64, f64)> = find_peaks(&spec, 5.0)
        .into_iter()
        .filter(|p| p.frequency > 0.0)
        .map(|p| (p.frequency, 2.0 * p.weight.re))
        .collect();
    if positive_peaks.is_empty() {
        return Err(VibronicError::NoDominantPeak);
    }

    let mut spectral_density = None;
    let mut temperature_k = None;
    match input {
        ThermoInput::KnownTemperature(t_k) => {
            let kbt = units::KB_MEV_PER_K * t_k;
            spectral_density = Some(
                positive_peaks
                    .iter()
                    .map(|&(w, ft)| (w, w * w * ft / coth(w / (2.0 * kbt))))
                    .collect(),
            );
        }
        ThermoInput::KnownDominantWeight(j0) => {
            let &(w0, ft0) = positive_peaks
                .iter()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .unwrap();
            let target = ft0 * w0 * w0 / j0;
            if target < 1.0 {
                return Err(VibronicError::InconsistentCothRatio(target));
            }
            // coth(w0 / 2 kB T) is monotone increasing in T; bisect.
            let f = |t: f64| coth(w0 / (2.0 * units::KB_MEV_PER_K * t)) - target;
            let (mut lo, mut hi) = (0.1, 1e4);
            if f(lo) > 0.0 || f(hi) < 0.0 {
                return Err(VibronicError::TemperatureOutOfRange);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            temperature_k = Some(0.5 * (lo + hi));
        }
    }

    Ok(SpectralAnalysis {
        frequencies_mev: frequencies,
        f_tilde,
        peaks: positive_peaks,
        spectral_density,
        temperature_k,
    })
}
