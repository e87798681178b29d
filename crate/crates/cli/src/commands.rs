//! Command implementations: each writes CSV outputs plus a manifest into the
//! output directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C64;

use qprobe_core::dynamics::{run_sweep, ProbeExperiment, SweepGrid};
use qprobe_core::estimation::{
    build_tau_series, convergence_check, find_peaks, fit_oscillation, fourier_spectrum,
    OscillationFit, Window,
};
use qprobe_core::perturbation::{validity_report, ValidityConfig};
use qprobe_core::spin::{random_geometry, run_nmr_experiment, NmrRunConfig};
use qprobe_core::vibronic::{
    analytic_probability, f_tau, reconstruct_f_and_er, spectral_density_and_thermometry,
    FockOracle, ThermoInput, VibronicModel,
};

use crate::config::{Config, ConfigError, Manifest};

fn require<T>(section: Option<T>, name: &str) -> Result<T> {
    section.ok_or_else(|| anyhow!(ConfigError(format!("missing [{name}] section"))))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config_toml: &str,
    seed_override: Option<u64>,
) -> Result<()> {
    let manifest = Manifest {
        command: command.to_string(),
        config_toml: config_toml.to_string(),
        seed_override,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_file(dir, "manifest.json", &serde_json::to_string_pretty(&manifest)?)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn cmd_sweep(
    config: &Config,
    config_toml: &str,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let model = require(config.model.clone(), "model")?;
    let sweep = require(config.sweep.clone(), "sweep")?;
    let built = model.build()?;
    let prep = sweep.prep.build()?;
    let meas = sweep.meas.build()?;
    let lambdas = sweep.lambdas.build("sweep.lambdas")?;
    let taus = sweep.taus.build("sweep.taus")?;
    let seed = seed_override.unwrap_or(sweep.seed);

    let experiment = ProbeExperiment {
        v_ps: built.v_ps.clone(),
        rho_s: built.rho.clone(),
        theta: built.theta,
        phi: built.phi,
        preparation: prep,
        measurement: meas,
    };
    let grid = SweepGrid::product(&lambdas, &taus);
    let result = run_sweep(&experiment, &grid, sweep.shots, seed)?;

    let mut csv = String::from("lambda,tau,p_exact,p_sampled,stderr\n");
    for p in &result.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f(p.lambda),
            fmt_f(p.tau),
            fmt_f(p.p_exact),
            p.p_sampled.map(fmt_f).unwrap_or_default(),
            p.std_err.map(fmt_f).unwrap_or_default(),
        );
    }
    write_file(out, "sweep.csv", &csv)?;

    // Validity report at the grid midpoint, attached to the manifest side.
    if let Some(margin) = sweep.validity_margin {
        let basis = qprobe_core::model::control_eigenbasis(built.theta, built.phi);
        let blocks = qprobe_core::model::decompose_coupling(&built.v_ps, &basis)
            .map_err(|e| anyhow!(e.to_string()))?;
        let class = qprobe_core::perturbation::classify_leading_order(&prep, &meas);
        let mid_l = lambdas[lambdas.len() / 2];
        let mid_t = taus[taus.len() / 2];
        let cfg = ValidityConfig { margin, ..Default::default() };
        let report = validity_report(&blocks, &built.rho, mid_l, mid_t, class.order, &cfg)
            .map_err(|e| anyhow!(e.to_string()))?;
        write_file(out, "validity.json", &serde_json::to_string_pretty(&report)?)?;
    }

    write_manifest(out, "sweep", config_toml, seed_override)
}

struct SweepRow {
    lambda: f64,
    tau: f64,
    p_exact: f64,
    p_sampled: Option<f64>,
    stderr: Option<f64>,
}

fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if i == 0 {
            if !line.starts_with("lambda,tau,p_exact") {
                bail!(ConfigError(format!("{}: not a sweep CSV", path.display())));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!(ConfigError(format!("{}:{}: expected 5 columns", path.display(), i + 1)));
        }
        let parse = |s: &str, col: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| {
                anyhow!(ConfigError(format!("{}:{}: bad {col}: {e}", path.display(), i + 1)))
            })
        };
        let opt = |s: &str, col: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse(s, col).map(Some)
            }
        };
        rows.push(SweepRow {
            lambda: parse(fields[0], "lambda")?,
            tau: parse(fields[1], "tau")?,
            p_exact: parse(fields[2], "p_exact")?,
            p_sampled: opt(fields[3], "p_sampled")?,
            stderr: opt(fields[4], "stderr")?,
        });
    }
    if rows.is_empty() {
        bail!(ConfigError("sweep CSV has no data rows".into()));
    }
    Ok(rows)
}

pub fn cmd_fit(
    config: &Config,
    config_toml: &str,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let fit_cfg = require(config.fit.clone(), "fit")?;
    let rows = read_sweep_csv(Path::new(&fit_cfg.input))?;

    // Group rows by tau, preserving first-appearance order.
    let mut taus: Vec<f64> = Vec::new();
    for r in &rows {
        if !taus.iter().any(|t| t.to_bits() == r.tau.to_bits()) {
            taus.push(r.tau);
        }
    }

    let mut fits: Vec<OscillationFit> = Vec::new();
    let mut conv_rows = Vec::new();
    for &tau in &taus {
        let grouped: Vec<&SweepRow> =
            rows.iter().filter(|r| r.tau.to_bits() == tau.to_bits()).collect();
        let mut lambdas = Vec::with_capacity(grouped.len());
        let mut values = Vec::with_capacity(grouped.len());
        let mut weights = Vec::with_capacity(grouped.len());
        let mut have_weights = true;
        for r in &grouped {
            let p = if fit_cfg.use_sampled { r.p_sampled.unwrap_or(r.p_exact) } else { r.p_exact };
            let scale = if fit_cfg.prescale_lambda_squared { r.lambda * r.lambda } else { 1.0 };
            lambdas.push(r.lambda);
            values.push(scale * (p - fit_cfg.baseline));
            match (fit_cfg.use_sampled, r.stderr) {
                (true, Some(s)) if s > 0.0 => weights.push(1.0 / (s * scale).powi(2)),
                _ => have_weights = false,
            }
        }
        let w = if have_weights { Some(weights.as_slice()) } else { None };
        let fit = fit_oscillation(&lambdas, &values, w, tau, None)
            .map_err(|e| anyhow!("tau {tau}: {e}"))?;

        // Convergence over three ascending lambda windows when the span
        // allows a full oscillation in each.
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&a, &b| lambdas[a].partial_cmp(&lambdas[b]).unwrap());
        let chunk = order.len() / 3;
        let mut window_fits = Vec::new();
        if chunk >= 5 {
            for wdw in 0..3 {
                let idx = &order[wdw * chunk..(wdw + 1) * chunk];
                let l: Vec<f64> = idx.iter().map(|&i| lambdas[i]).collect();
                let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
                let wv: Vec<f64> = idx.iter().map(|&i| *weights.get(i).unwrap_or(&1.0)).collect();
                let ww = if have_weights { Some(wv.as_slice()) } else { None };
                if let Ok(f) = fit_oscillation(&l, &v, ww, tau, None) {
                    window_fits.push(f);
                }
            }
        }
        let report = if window_fits.len() == 3 {
            convergence_check(&window_fits, 0.02).ok()
        } else {
            None
        };
        conv_rows.push((tau, report));
        fits.push(fit);
    }

    let mut csv = String::from("tau,eta,D,phi,eta_err,D_err,phi_err\n");
    for (tau, f) in taus.iter().zip(&fits) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            fmt_f(*tau),
            fmt_f(f.eta),
            fmt_f(f.amplitude),
            fmt_f(f.phase),
            fmt_f(f.eta_err),
            fmt_f(f.amplitude_err),
            fmt_f(f.phase_err),
        );
    }
    write_file(out, "fit.csv", &csv)?;

    let report: Vec<serde_json::Value> = conv_rows
        .iter()
        .map(|(tau, r)| {
            serde_json::json!({
                "tau": tau,
                "converged": r.as_ref().map(|c| c.pass),
                "pairs": r.as_ref().map(|c| &c.pairs),
            })
        })
        .collect();
    write_file(out, "convergence.json", &serde_json::to_string_pretty(&report)?)?;
    write_manifest(out, "fit", config_toml, seed_override)
}

fn read_fit_csv(path: &Path) -> Result<(Vec<f64>, Vec<OscillationFit>)> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut taus = Vec::new();
    let mut fits = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if i == 0 {
            if !line.starts_with("tau,eta,D,phi") {
                bail!(ConfigError(format!("{}: not a fit CSV", path.display())));
            }
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow!(ConfigError(format!("{}:{}: {e}", path.display(), i + 1))))?;
        if f.len() != 7 {
            bail!(ConfigError(format!("{}:{}: expected 7 columns", path.display(), i + 1)));
        }
        taus.push(f[0]);
        fits.push(OscillationFit {
            eta: f[1],
            amplitude: f[2],
            phase: f[3],
            frequency: f[0],
            residual_rms: 0.0,
            covariance: [[0.0; 3]; 3],
            eta_err: f[4],
            amplitude_err: f[5],
            phase_err: f[6],
        });
    }
    if taus.is_empty() {
        bail!(ConfigError("fit CSV has no data rows".into()));
    }
    Ok((taus, fits))
}

pub fn cmd_reconstruct(
    config: &Config,
    config_toml: &str,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let rc = require(config.reconstruct.clone(), "reconstruct")?;
    let (taus, fits) = read_fit_csv(Path::new(&rc.input))?;
    let window = match rc.window.as_deref().unwrap_or("rectangular") {
        "rectangular" => Window::Rectangular,
        "hann" => Window::Hann,
        other => bail!(ConfigError(format!("unknown window '{other}'"))),
    };
    let scale = C64::new(rc.scale_re.unwrap_or(1.0), rc.scale_im.unwrap_or(0.0));

    let series = build_tau_series(&taus, &fits, "fitted coefficients")
        .map_err(|e| anyhow!(e.to_string()))?
        .scaled(scale);
    let spectrum = fourier_spectrum(&series, window).map_err(|e| anyhow!(e.to_string()))?;

    let mut csv = String::from("omega,re_weight,im_weight,abs_weight\n");
    for (w, wt) in spectrum.frequencies.iter().zip(&spectrum.weights) {
        let _ = writeln!(csv, "{},{},{},{}", fmt_f(*w), fmt_f(wt.re), fmt_f(wt.im), fmt_f(wt.norm()));
    }
    write_file(out, "spectrum.csv", &csv)?;

    let peaks = find_peaks(&spectrum, 5.0);
    write_file(out, "peaks.json", &serde_json::to_string_pretty(&peaks)?)?;
    write_manifest(out, "reconstruct", config_toml, seed_override)
}

pub fn cmd_validate(
    config: &Config,
    config_toml: &str,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let model = require(config.model.clone(), "model")?;
    let vc = require(config.validate.clone(), "validate")?;
    let built = model.build()?;
    let basis = qprobe_core::model::control_eigenbasis(built.theta, built.phi);
    let blocks = qprobe_core::model::decompose_coupling(&built.v_ps, &basis)
        .map_err(|e| anyhow!(e.to_string()))?;
    let cfg = ValidityConfig { margin: vc.margin.unwrap_or(10.0), ..Default::default() };

    let mut reports = Vec::new();
    for &lambda in &vc.lambdas.build("validate.lambdas")? {
        for &tau in &vc.taus.build("validate.taus")? {
            let r = validity_report(&blocks, &built.rho, lambda, tau, vc.leading_order, &cfg)
                .map_err(|e| anyhow!(e.to_string()))?;
            reports.push(r);
        }
    }
    write_file(out, "validate.json", &serde_json::to_string_pretty(&reports)?)?;
    write_manifest(out, "validate", config_toml, seed_override)
}

pub fn cmd_spin_demo(
    config: &Config,
    config_toml: &str,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let sd = require(config.spin_demo.clone(), "spin_demo")?;
    let seed = seed_override.unwrap_or(sd.seed);
    let geom = random_geometry(
        seed,
        sd.n_spins,
        sd.cluster_radius_nm,
        0.8 * sd.cluster_radius_nm,
        (1.0, 1.5),
        sd.tau_step_ns,
    )
    .map_err(|e| anyhow!(e.to_string()))?;

    let mut summary = Vec::new();
    for (pi, probe_seed) in (0..sd.probe_positions).map(|i| (i, seed ^ (0xABCD + i as u64))).collect::<Vec<_>>() {
        // Re-draw only the probe placement, keeping the cluster fixed.
        let probe_geom = random_geometry(
            probe_seed,
            sd.n_spins,
            sd.cluster_radius_nm,
            0.8 * sd.cluster_radius_nm,
            (1.0, 1.5),
            sd.tau_step_ns,
        )
        .map_err(|e| anyhow!(e.to_string()))?;
        let geom_p = geom.with_probe_position(probe_geom.probe_position_nm);

        for &budget_us in &sd.budgets_us {
            let cfg = NmrRunConfig {
                total_time_ns: budget_us * 1000.0,
                tau_step_ns: sd.tau_step_ns,
                lambda_count: sd.lambda_count,
                shots: sd.shots,
                seed: seed ^ (pi as u64) << 8,
                validity_margin: 1e3,
            };
            let run = run_nmr_experiment(&geom_p, &cfg).map_err(|e| anyhow!(e.to_string()))?;

            let tag = format!("b{}us_p{}", budget_us as u64, pi);
            let mut csv = String::from("omega_pev,re_weight,im_weight,abs_weight\n");
            for (w, wt) in run.spectrum.frequencies.iter().zip(&run.spectrum.weights) {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    fmt_f(*w),
                    fmt_f(wt.re),
                    fmt_f(wt.im),
                    fmt_f(wt.norm())
                );
            }
            write_file(out, &format!("spin_spectrum_{tag}.csv"), &csv)?;

            summary.push(serde_json::json!({
                "probe_index": pi,
                "budget_us": budget_us,
                "lambda_window_pev": run.lambda_window_pev,
                "validity_pass": run.validity.pass,
                "failed_fits": run.failed_fits.len(),
                "resolution_pev": run.spectrum.resolution,
            }));

            if pi == 0 && budget_us == sd.budgets_us[0] {
                let mut csv = String::from("omega_pev,weight\n");
                for (w, wt) in &run.reference {
                    let _ = writeln!(csv, "{},{}", fmt_f(*w), fmt_f(*wt));
                }
                write_file(out, "spin_reference.csv", &csv)?;
                write_file(
                    out,
                    "spin_validity.json",
                    &serde_json::to_string_pretty(&run.validity)?,
                )?;
            }
        }
    }
    write_file(out, "spin_summary.json", &serde_json::to_string_pretty(&summary)?)?;
    write_manifest(out, "spin-demo", config_toml, seed_override)
}

pub fn cmd_vibronic_demo(
    config: &Config,
    config_toml: &str,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<()> {
    let vd = require(config.vibronic_demo.clone(), "vibronic_demo")?;
    let seed = seed_override.unwrap_or(vd.seed);

    let mut model = VibronicModel {
        mode_frequencies_mev: vd.mode_frequencies_mev.clone(),
        couplings_d_mev: vd.couplings_d_mev.clone(),
        couplings_a_mev: vd.couplings_a_mev.clone(),
        tunneling_mev: vd.tunneling_mev,
        bias_mev: vd.bias_mev,
        temperature_k: vd.temperature_k,
    };
    model.validate().map_err(|e| anyhow!(ConfigError(e.to_string())))?;
    let hbar = qprobe_core::vibronic::units::HBAR_MEV_PS;

    let taus: Vec<f64> = (1..=vd.tau_count).map(|k| k as f64 * vd.tau_step_ps).collect();
    if vd.align_modes_to_bins {
        let res = std::f64::consts::TAU * hbar / (vd.tau_count as f64 * vd.tau_step_ps);
        for (i, w) in model.mode_frequencies_mev.iter_mut().enumerate() {
            let snapped = (*w / res).round() * res;
            if snapped > 0.0 {
                // Keep displacement ratios fixed under the snap.
                let ratio_d = vd.couplings_d_mev[i] / vd.mode_frequencies_mev[i];
                let ratio_a = vd.couplings_a_mev[i] / vd.mode_frequencies_mev[i];
                model.couplings_d_mev[i] = ratio_d * snapped;
                model.couplings_a_mev[i] = ratio_a * snapped;
                *w = snapped;
            }
        }
    }

    // lambda window: wide enough for one oscillation at the shortest tau.
    let span = 1.25 * std::f64::consts::TAU * hbar / vd.tau_step_ps;
    let lambdas: Vec<f64> = (0..vd.lambda_count)
        .map(|i| {
            let jitter = ((i * 29) % 37) as f64 / 37.0;
            model.bias_mev + span * (i as f64 + 0.9 * jitter) / vd.lambda_count as f64
        })
        .collect();

    // Sample the analytic model on the grid.
    let mut p = Vec::with_capacity(lambdas.len());
    let mut sigma = Vec::with_capacity(lambdas.len());
    for (li, &l) in lambdas.iter().enumerate() {
        let m = VibronicModel { bias_mev: l, ..model.clone() };
        let mut row = Vec::with_capacity(taus.len());
        let mut srow = Vec::with_capacity(taus.len());
        for (ti, &t) in taus.iter().enumerate() {
            let exact = analytic_probability(&m, t);
            if vd.shots == 0 {
                row.push(exact);
                srow.push(0.0);
            } else {
                let idx = (li * taus.len() + ti) as u64;
                let k = qprobe_core::dynamics::sample_shots(
                    exact,
                    vd.shots,
                    qprobe_core::dynamics::point_seed(seed, idx),
                )?;
                let p_hat = k as f64 / vd.shots as f64;
                row.push(p_hat);
                srow.push(
                    ((p_hat * (1.0 - p_hat)).max(1.0 / vd.shots as f64) / vd.shots as f64).sqrt(),
                );
            }
        }
        p.push(row);
        sigma.push(srow);
    }
    let sigma_opt = if vd.shots == 0 { None } else { Some(sigma.as_slice()) };
    let rec = reconstruct_f_and_er(&lambdas, &taus, &p, sigma_opt, model.tunneling_mev)
        .map_err(|e| anyhow!(e.to_string()))?;

    let pol = model.polaron();
    let mut csv = String::from("tau_ps,f_estimated,f_true\n");
    let mut f_dense = Vec::new();
    for (ti, &t) in taus.iter().enumerate() {
        let f_true = f_tau(&model, t);
        let f_est = rec.f_values[ti];
        f_dense.push(f_est.unwrap_or(f_true));
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f(t),
            f_est.map(fmt_f).unwrap_or_default(),
            fmt_f(f_true)
        );
    }
    write_file(out, "vibronic_f.csv", &csv)?;

    // Spectral density from the reconstructed f at the known temperature,
    // and thermometry from the known dominant-mode weight.
    let spectral =
        spectral_density_and_thermometry(&taus, &f_dense, ThermoInput::KnownTemperature(model.temperature_k))
            .map_err(|e| anyhow!(e.to_string()))?;
    let mut csv = String::from("omega_mev,f_tilde\n");
    for (w, ft) in spectral.frequencies_mev.iter().zip(&spectral.f_tilde) {
        let _ = writeln!(csv, "{},{}", fmt_f(*w), fmt_f(*ft));
    }
    write_file(out, "vibronic_spectral.csv", &csv)?;

    let xi0 = pol.xi()[0];
    let j_true_dominant = {
        let mut best = (0.0, 0.0);
        for (k, &w) in model.mode_frequencies_mev.iter().enumerate() {
            let xi = pol.xi()[k];
            let jw = (xi * w).powi(2);
            if jw > best.1 {
                best = (w, jw);
            }
        }
        let _ = xi0;
        best
    };
    let thermo = spectral_density_and_thermometry(
        &taus,
        &f_dense,
        ThermoInput::KnownDominantWeight(j_true_dominant.1),
    )
    .map_err(|e| anyhow!(e.to_string()));

    let truncation_check = FockOracle::build(&model, 10).is_ok();
    let report = serde_json::json!({
        "e_r_estimate_mev": rec.e_r_mev,
        "e_r_error_mev": rec.e_r_err_mev,
        "e_r_true_mev": pol.reorganization_energy_mev,
        "discovered_modes_mev": rec.mode_frequencies_mev,
        "true_modes_mev": model.mode_frequencies_mev,
        "spectral_density_peaks": spectral.spectral_density,
        "temperature_estimate_k": thermo.ok().and_then(|t| t.temperature_k),
        "temperature_true_k": model.temperature_k,
        "tau_max_ps": model.tau_max_ps(),
        "fock_oracle_available": truncation_check,
    });
    write_file(out, "vibronic_report.json", &serde_json::to_string_pretty(&report)?)?;
    write_manifest(out, "vibronic-demo", config_toml, seed_override)
}
