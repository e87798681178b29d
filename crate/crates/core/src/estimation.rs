//! Recovering oscillation parameters from p-vs-lambda data, assembling
//! tau-series of complex amplitudes, and turning them into energy spectra
//! and derived system properties.
//!
//! The oscillation frequency in lambda is exactly the evolution time tau, so
//! fits are linear least squares on the basis {1, cos(lambda tau),
//! sin(lambda tau)} rather than nonlinear frequency estimation.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("sample arrays have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("insufficient lambda coverage: span {span:.3e} < one oscillation period {needed:.3e}")]
    InsufficientLambdaCoverage { span: f64, needed: f64 },
    #[error("design matrix is ill-conditioned; widen the lambda span")]
    IllConditioned,
    #[error("tau grid is not uniform (step {0:.3e} vs {1:.3e})")]
    NonUniformGrid(f64, f64),
    #[error("need at least {needed} tau points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("need at least {0} fit windows for a convergence check")]
    TooFewWindows(usize),
    #[error("spectrum contains no usable peaks")]
    EmptySpectrum,
}

/// Result of fitting eta + D cos(lambda tau + phi) at known frequency tau.
#[derive(Debug, Clone, Serialize)]
pub struct OscillationFit {
    /// Constant offset (baseline-subtracted when one was supplied).
    pub eta: f64,
    /// Oscillation amplitude, >= 0.
    pub amplitude: f64,
    /// Phase in (-pi, pi].
    pub phase: f64,
    /// Oscillation frequency in lambda (the evolution time tau).
    pub frequency: f64,
    pub residual_rms: f64,
    /// Covariance of (eta, cos coefficient, sin coefficient).
    pub covariance: [[f64; 3]; 3],
    pub eta_err: f64,
    pub amplitude_err: f64,
    pub phase_err: f64,
}

impl OscillationFit {
    /// D e^{i phi}, the coefficient of e^{i lambda tau} in p - q.
    pub fn coefficient(&self) -> C64 {
        C64::from_polar(self.amplitude, self.phase)
    }

    /// Model value at the given lambda (excluding any subtracted baseline).
    pub fn evaluate(&self, lambda: f64) -> f64 {
        self.eta + self.amplitude * (lambda * self.frequency + self.phase).cos()
    }
}

/// Weighted linear least squares for eta + D cos(lambda f + phi) at fixed
/// frequency f. Weights are inverse variances; without weights the
/// covariance is scaled by the residual variance.
pub fn fit_oscillation_at_frequency(
    lambdas: &[f64],
    values: &[f64],
    weights: Option<&[f64]>,
    frequency: f64,
    baseline: Option<f64>,
) -> Result<OscillationFit, EstimationError> {
    let n = lambdas.len();
    if n != values.len() {
        return Err(EstimationError::LengthMismatch(n, values.len()));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(EstimationError::LengthMismatch(n, w.len()));
        }
    }
    if n < 5 {
        return Err(EstimationError::InsufficientSamples { needed: 5, got: n });
    }
    let span = lambdas.iter().cloned().fold(f64::MIN, f64::max)
        - lambdas.iter().cloned().fold(f64::MAX, f64::min);
    let needed = std::f64::consts::TAU / frequency.abs();
    if span < needed * (1.0 - 1e-9) {
        return Err(EstimationError::InsufficientLambdaCoverage { span, needed });
    }

    let q = baseline.unwrap_or(0.0);
    // Normal equations for the design [1, cos, sin].
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        let x = [1.0, (lambdas[i] * frequency).cos(), (lambdas[i] * frequency).sin()];
        let y = values[i] - q;
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += w * x[r] * x[c];
            }
            aty[r] += w * x[r] * y;
        }
    }

    let inv = invert3(&ata).ok_or(EstimationError::IllConditioned)?;
    let mut coef = [0.0f64; 3];
    for r in 0..3 {
        for c in 0..3 {
            coef[r] += inv[r][c] * aty[c];
        }
    }

    // Residuals.
    let mut ss = 0.0;
    let mut wsum = 0.0;
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        let x = [1.0, (lambdas[i] * frequency).cos(), (lambdas[i] * frequency).sin()];
        let fit = coef[0] * x[0] + coef[1] * x[1] + coef[2] * x[2];
        ss += w * (values[i] - q - fit).powi(2);
        wsum += w;
    }
    let residual_rms = (ss / wsum).sqrt();

    // Covariance of the linear coefficients: (X^T W X)^-1, scaled by the
    // residual variance when no explicit variances were given.
    let scale = if weights.is_some() {
        1.0
    } else {
        ss / (n.saturating_sub(3).max(1) as f64)
    };
    let mut cov = inv;
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }

    let (c0, cc, cs) = (coef[0], coef[1], coef[2]);
    let amplitude = cc.hypot(cs);
    let phase = (-cs).atan2(cc);
    // Delta method for D and phi.
    let (amplitude_err, phase_err) = if amplitude > 0.0 {
        let ga = [cc / amplitude, cs / amplitude];
        let gp = [cs / (amplitude * amplitude), -cc / (amplitude * amplitude)];
        let var = |g: [f64; 2]| {
            g[0] * g[0] * cov[1][1] + 2.0 * g[0] * g[1] * cov[1][2] + g[1] * g[1] * cov[2][2]
        };
        (var(ga).max(0.0).sqrt(), var(gp).max(0.0).sqrt())
    } else {
        (cov[1][1].max(cov[2][2]).sqrt(), std::f64::consts::PI)
    };

    Ok(OscillationFit {
        eta: c0,
        amplitude,
        phase,
        frequency,
        residual_rms,
        covariance: cov,
        eta_err: cov[0][0].max(0.0).sqrt(),
        amplitude_err,
        phase_err,
    })
}

/// Fit p-vs-lambda oscillations at the known frequency tau. Pass the
/// baseline q_{beta:alpha} to obtain eta relative to the expansion offset.
pub fn fit_oscillation(
    lambdas: &[f64],
    p_values: &[f64],
    weights: Option<&[f64]>,
    tau: f64,
    baseline: Option<f64>,
) -> Result<OscillationFit, EstimationError> {
    fit_oscillation_at_frequency(lambdas, p_values, weights, tau, baseline)
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m[0][0].abs().max(m[1][1].abs()).max(m[2][2].abs()).powi(3).max(1e-300);
    if det.abs() < 1e-12 * scale {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = match r {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c1, c2) = match c {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[c1][r1] * m[c2][r2] - m[c1][r2] * m[c2][r1];
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            out[r][c] = sign * minor * inv_det;
        }
    }
    Some(out)
}

/// One pair comparison inside a convergence check.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergencePair {
    pub amplitude_delta: f64,
    pub amplitude_allowed: f64,
    pub eta_delta: f64,
    pub eta_allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub pairs: Vec<ConvergencePair>,
    pub pass: bool,
}

/// Have the oscillation parameters converged across ascending lambda
/// windows? Successive estimates must agree within max(3 sigma, rel_tol).
pub fn convergence_check(
    fits: &[OscillationFit],
    rel_tol: f64,
) -> Result<ConvergenceReport, EstimationError> {
    if fits.len() < 3 {
        return Err(EstimationError::TooFewWindows(3));
    }
    let mut pairs = Vec::new();
    for w in fits.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let sigma_d = (a.amplitude_err.powi(2) + b.amplitude_err.powi(2)).sqrt();
        let amp_scale = a.amplitude.abs().max(b.amplitude.abs());
        let amplitude_allowed = (3.0 * sigma_d).max(rel_tol * amp_scale);
        let amplitude_delta = (a.amplitude - b.amplitude).abs();

        let sigma_e = (a.eta_err.powi(2) + b.eta_err.powi(2)).sqrt();
        let eta_scale = a.eta.abs().max(b.eta.abs()).max(amp_scale);
        let eta_allowed = (3.0 * sigma_e).max(rel_tol * eta_scale);
        let eta_delta = (a.eta - b.eta).abs();

        pairs.push(ConvergencePair {
            amplitude_delta,
            amplitude_allowed,
            eta_delta,
            eta_allowed,
            pass: amplitude_delta <= amplitude_allowed && eta_delta <= eta_allowed,
        });
    }
    let pass = pairs.iter().all(|p| p.pass);
    Ok(ConvergenceReport { pairs, pass })
}

/// Complex oscillation coefficients c(tau) = D e^{i phi} on a uniform tau
/// grid, with the lambda-constant offsets eta(tau) alongside.
#[derive(Debug, Clone, Serialize)]
pub struct TauSeries {
    pub taus: Vec<f64>,
    pub values: Vec<C64>,
    pub eta: Vec<f64>,
    /// Which measured quantity the series images.
    pub quantity: String,
    /// Phases unwrapped against neighbors (|delta phi| < pi per step).
    pub unwrapped_phase: Vec<f64>,
    /// False when some unwrapped step exceeded 0.9 pi, i.e. the grid is too
    /// coarse to trust branch continuity.
    pub phase_continuity_ok: bool,
}

impl TauSeries {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.taus.len() > 1 {
            self.taus[1] - self.taus[0]
        } else {
            0.0
        }
    }

    /// Rescale values by a complex factor (conversion from fitted
    /// coefficients to the physical row quantity).
    pub fn scaled(&self, factor: C64) -> TauSeries {
        let values: Vec<C64> = self.values.iter().map(|v| v * factor).collect();
        let mut out = self.clone();
        out.unwrapped_phase = unwrap_phases(&values).0;
        out.values = values;
        out
    }
}

fn unwrap_phases(values: &[C64]) -> (Vec<f64>, bool) {
    let mut phases = Vec::with_capacity(values.len());
    let mut ok = true;
    let mut prev: Option<f64> = None;
    for v in values {
        let mut ph = v.arg();
        if let Some(p) = prev {
            while ph - p > std::f64::consts::PI {
                ph -= std::f64::consts::TAU;
            }
            while p - ph > std::f64::consts::PI {
                ph += std::f64::consts::TAU;
            }
            if (ph - p).abs() > 0.9 * std::f64::consts::PI {
                ok = false;
            }
        }
        prev = Some(ph);
        phases.push(ph);
    }
    (phases, ok)
}

/// Assemble per-tau fits into a series of complex amplitudes.
pub fn build_tau_series(
    taus: &[f64],
    fits: &[OscillationFit],
    quantity: &str,
) -> Result<TauSeries, EstimationError> {
    if taus.len() != fits.len() {
        return Err(EstimationError::LengthMismatch(taus.len(), fits.len()));
    }
    if taus.is_empty() {
        return Err(EstimationError::TooFewPoints { needed: 1, got: 0 });
    }
    if taus.len() > 2 {
        let dt = taus[1] - taus[0];
        for w in taus.windows(2) {
            let step = w[1] - w[0];
            if (step - dt).abs() > 1e-12 * dt.abs().max(1.0) {
                return Err(EstimationError::NonUniformGrid(step, dt));
            }
        }
    }
    let values: Vec<C64> = fits.iter().map(|f| f.coefficient()).collect();
    let eta: Vec<f64> = fits.iter().map(|f| f.eta).collect();
    let (unwrapped_phase, phase_continuity_ok) = unwrap_phases(&values);
    Ok(TauSeries {
        taus: taus.to_vec(),
        values,
        eta,
        quantity: quantity.to_string(),
        unwrapped_phase,
        phase_continuity_ok,
    })
}

/// Build a series directly from complex values (noise-free pipelines and
/// tests).
pub fn tau_series_from_values(
    taus: &[f64],
    values: &[C64],
    quantity: &str,
) -> Result<TauSeries, EstimationError> {
    if taus.len() != values.len() {
        return Err(EstimationError::LengthMismatch(taus.len(), values.len()));
    }
    let (unwrapped_phase, phase_continuity_ok) = unwrap_phases(values);
    Ok(TauSeries {
        taus: taus.to_vec(),
        values: values.to_vec(),
        eta: vec![0.0; taus.len()],
        quantity: quantity.to_string(),
        unwrapped_phase,
        phase_continuity_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Window {
    Rectangular,
    Hann,
}

/// Discrete spectrum of a complex tau-series: signed frequency bins in
/// angular-frequency (energy, hbar = 1) units.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    pub frequencies: Vec<f64>,
    pub weights: Vec<C64>,
    /// Bin spacing 2 pi / (N delta tau).
    pub resolution: f64,
    pub window: Window,
}

impl SpectrumEstimate {
    /// |weight| at each bin.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.norm()).collect()
    }
}

/// DFT of c(tau): weight(omega_n) = (1/N) sum_k c_k w_k e^{-i omega_n tau_k}
/// with omega_n = 2 pi n / (N dtau), n in [-N/2, N/2). A tone c = w e^{i
/// omega tau} lands at +omega with weight w (exactly, when on-bin under the
/// rectangular window).
pub fn fourier_spectrum(series: &TauSeries, window: Window) -> Result<SpectrumEstimate, EstimationError> {
    let n = series.len();
    if n < 8 {
        return Err(EstimationError::TooFewPoints { needed: 8, got: n });
    }
    let dt = series.step();
    if dt <= 0.0 {
        return Err(EstimationError::NonUniformGrid(dt, dt));
    }

    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = series
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = match window {
                Window::Rectangular => 1.0,
                Window::Hann => {
                    0.5 * (1.0
                        - (std::f64::consts::TAU * k as f64 / (n as f64 - 1.0)).cos())
                }
            };
            rustfft::num_complex::Complex::new(v.re * w, v.im * w)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let resolution = std::f64::consts::TAU / (n as f64 * dt);
    let tau0 = series.taus[0];
    let mut frequencies = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // Ascending signed frequencies from -floor(n/2) upward.
    let lo = -((n / 2) as i64);
    for s in lo..lo + n as i64 {
        let fft_index = s.rem_euclid(n as i64) as usize;
        let omega = resolution * s as f64;
        let phase_ref = C64::from_polar(1.0, -omega * tau0);
        frequencies.push(omega);
        weights.push(C64::new(buf[fft_index].re, buf[fft_index].im) * phase_ref / n as f64);
    }
    Ok(SpectrumEstimate { frequencies, weights, resolution, window })
}

/// A detected spectral peak.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralPeak {
    pub frequency: f64,
    pub weight: C64,
    pub magnitude: f64,
}

/// Local maxima above five times the median magnitude (the noise floor).
pub fn find_peaks(spectrum: &SpectrumEstimate, threshold_factor: f64) -> Vec<SpectralPeak> {
    let mags = spectrum.magnitudes();
    let n = mags.len();
    if n < 3 {
        return Vec::new();
    }
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[n / 2];
    let floor = (threshold_factor * median).max(1e-12 * sorted[n - 1]);
    let mut peaks = Vec::new();
    for i in 0..n {
        let prev = if i == 0 { 0.0 } else { mags[i - 1] };
        let next = if i + 1 == n { 0.0 } else { mags[i + 1] };
        if mags[i] > floor && mags[i] >= prev && mags[i] > next {
            peaks.push(SpectralPeak {
                frequency: spectrum.frequencies[i],
                weight: spectrum.weights[i],
                magnitude: mags[i],
            });
        }
    }
    peaks
}

/// Full width at half maximum of the peak nearest `frequency`, by linear
/// interpolation of the magnitude profile. None when the peak has no
/// half-max crossing inside the spectrum.
pub fn peak_fwhm(spectrum: &SpectrumEstimate, frequency: f64) -> Option<f64> {
    let mags = spectrum.magnitudes();
    let n = mags.len();
    if n < 3 {
        return None;
    }
    // Nearest bin, then climb to the local maximum.
    let mut i = spectrum
        .frequencies
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - frequency).abs().partial_cmp(&(b.1 - frequency).abs()).unwrap()
        })?
        .0;
    while i + 1 < n && mags[i + 1] > mags[i] {
        i += 1;
    }
    while i > 0 && mags[i - 1] > mags[i] {
        i -= 1;
    }
    let half = mags[i] / 2.0;
    let df = spectrum.resolution;

    let mut right = None;
    for j in i..n - 1 {
        if mags[j] >= half && mags[j + 1] < half {
            let t = (mags[j] - half) / (mags[j] - mags[j + 1]);
            right = Some(spectrum.frequencies[j] + t * df);
            break;
        }
    }
    let mut left = None;
    for j in (1..=i).rev() {
        if mags[j] >= half && mags[j - 1] < half {
            let t = (mags[j] - half) / (mags[j] - mags[j - 1]);
            left = Some(spectrum.frequencies[j] - t * df);
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    }
}

/// Energy-level ladder reconstructed from same-operator gap frequencies.
#[derive(Debug, Clone, Serialize)]
pub struct LevelLadder {
    /// Levels with the lowest pinned at zero, ascending.
    pub levels: Vec<f64>,
    /// Whether every input frequency is explained by some level pair.
    pub complete: bool,
    /// Frequencies no level pair accounts for (within tolerance).
    pub unexplained: Vec<f64>,
}

/// Reconstruct a level ladder from pairwise-gap frequencies, anchored on the
/// largest gap: pairs (f_a, f_b) with f_a + f_b = f_max place interior
/// levels, checked for consistency against the full gap set (and its mirror
/// ambiguity resolved lexicographically).
pub fn assemble_levels_from_triplets(peak_frequencies: &[f64], tol: f64) -> LevelLadder {
    let mut freqs: Vec<f64> = peak_frequencies.iter().cloned().filter(|f| *f > tol).collect();
    freqs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if freqs.is_empty() {
        return LevelLadder { levels: vec![0.0], complete: true, unexplained: vec![] };
    }
    let fmax = freqs[0];
    if freqs.len() == 1 {
        return LevelLadder { levels: vec![0.0, fmax], complete: true, unexplained: vec![] };
    }

    let explained = |levels: &[f64], f: f64| {
        levels.iter().enumerate().any(|(i, &a)| {
            levels[..i].iter().any(|&b| ((a - b).abs() - f).abs() <= tol)
        })
    };

    // Candidate interior levels: frequencies pairing to the anchor. Either
    // member of a pair may be the level measured from the bottom.
    let mut candidates: Vec<f64> = Vec::new();
    for (i, &fa) in freqs.iter().enumerate() {
        for &fb in &freqs[i..] {
            if (fa + fb - fmax).abs() <= 2.0 * tol {
                candidates.push(fa);
                candidates.push(fb);
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (*a - *b).abs() <= tol);

    // Greedy: accept candidates whose implied gaps against the accepted set
    // are all present in the measured frequencies.
    let mut levels = vec![0.0, fmax];
    for &c in &candidates {
        if levels.iter().any(|&l| (l - c).abs() <= tol) {
            continue;
        }
        let consistent = levels
            .iter()
            .all(|&l| freqs.iter().any(|&f| ((l - c).abs() - f).abs() <= tol));
        if consistent {
            levels.push(c);
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Mirror ambiguity: {l} and {fmax - l} explain the same gap multiset;
    // emit the lexicographically smaller ladder.
    let mirrored: Vec<f64> = {
        let mut m: Vec<f64> = levels.iter().map(|&l| fmax - l).collect();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        m
    };
    let lex_less = mirrored
        .iter()
        .zip(&levels)
        .find_map(|(m, l)| {
            if (m - l).abs() > tol {
                Some(m < l)
            } else {
                None
            }
        })
        .unwrap_or(false);
    if lex_less {
        levels = mirrored;
    }

    let unexplained: Vec<f64> =
        freqs.iter().cloned().filter(|&f| !explained(&levels, f)).collect();
    LevelLadder { levels: levels.clone(), complete: unexplained.is_empty(), unexplained }
}

/// Diagonal elements of the system state in the A0 and A1 eigenbases,
/// extracted from a cross-operator spectrum (peaks at E_n^1 - E_m^0 with
/// weights <n_1|rho|m_0><m_0|n_1>).
#[derive(Debug, Clone, Serialize)]
pub struct DiagonalEstimate {
    pub diag0: Vec<f64>,
    pub diag1: Vec<f64>,
    /// Peak frequencies matching more than one level pair (degenerate gaps);
    /// reported, never guessed.
    pub ambiguous: Vec<f64>,
    /// No cross-peaks found: the initial state carries no usable coherence
    /// and the diagonals are unrecoverable from this spectrum.
    pub no_coherence: bool,
}

/// Group cross-operator peaks by level pair and sum their weights:
/// sum_m w(n, m) = <n_1|rho|n_1> and sum_n w(n, m) = <m_0|rho|m_0>.
pub fn extract_state_diagonal(
    peaks: &[SpectralPeak],
    ladder0: &[f64],
    ladder1: &[f64],
    tol: f64,
) -> DiagonalEstimate {
    let mut diag0 = vec![0.0; ladder0.len()];
    let mut diag1 = vec![0.0; ladder1.len()];
    let mut ambiguous = Vec::new();
    let mut matched_any = false;

    for peak in peaks {
        let mut hits = Vec::new();
        for (n, &e1) in ladder1.iter().enumerate() {
            for (m, &e0) in ladder0.iter().enumerate() {
                if (peak.frequency - (e1 - e0)).abs() <= tol {
                    hits.push((n, m));
                }
            }
        }
        match hits.len() {
            0 => {}
            1 => {
                let (n, m) = hits[0];
                diag1[n] += peak.weight.re;
                diag0[m] += peak.weight.re;
                matched_any = true;
            }
            _ => ambiguous.push(peak.frequency),
        }
    }

    DiagonalEstimate { diag0, diag1, ambiguous, no_coherence: !matched_any }
}

/// <H_E> = <A0> + <A1> from extracted diagonals and the operators'
/// eigenvalues.
pub fn mean_energy(diag0: &[f64], diag1: &[f64], e0: &[f64], e1: &[f64]) -> f64 {
    let s0: f64 = diag0.iter().zip(e0).map(|(d, e)| d * e).sum();
    let s1: f64 = diag1.iter().zip(e1).map(|(d, e)| d * e).sum();
    s0 + s1
}
