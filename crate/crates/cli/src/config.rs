//! Config schema: human-writable TOML with strict key checking, plus the
//! reruns-from-manifest path. Matrices are flattened row-major [re, im]
//! pairs.

use num_complex::Complex64 as C64;
use qprobe_core::linalg::{ComplexMatrix, DensityOperator};
use qprobe_core::model::{coupling_from_parts, ProbePureState};
use qprobe_core::spin::SpinGeometry;
use qprobe_core::vibronic::{FockOracle, VibronicModel};
use serde::{Deserialize, Serialize};

/// Configuration error: schema violations and inconsistent inputs. Exits
/// with code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Option<ModelConfig>,
    pub sweep: Option<SweepConfig>,
    pub fit: Option<FitConfig>,
    pub reconstruct: Option<ReconstructConfig>,
    pub validate: Option<ValidateConfig>,
    pub spin_demo: Option<SpinDemoConfig>,
    pub vibronic_demo: Option<VibronicDemoConfig>,
}

/// Model source: explicit matrices, or one of the named builders.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "lowercase")]
pub enum ModelConfig {
    Explicit {
        dim: usize,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        phi: f64,
        /// Full probe (x) system coupling including the system Hamiltonian
        /// (2 dim x 2 dim), row-major [re, im] pairs.
        v_ps: Option<Vec<[f64; 2]>>,
        /// Alternative: bare system Hamiltonian (dim x dim) ...
        h_s: Option<Vec<[f64; 2]>>,
        /// ... plus interaction (2 dim x 2 dim); summed as I (x) h_s + v.
        v: Option<Vec<[f64; 2]>>,
        /// System state (dim x dim); maximally mixed when omitted.
        rho: Option<Vec<[f64; 2]>>,
    },
    Spin {
        positions_nm: Vec<[f64; 3]>,
        moments_mu_n: Vec<f64>,
        field_t: [f64; 3],
        probe_position_nm: [f64; 3],
        probe_axis: [f64; 3],
        probe_moment_mev_per_t: f64,
    },
    Vibronic {
        mode_frequencies_mev: Vec<f64>,
        couplings_d_mev: Vec<f64>,
        couplings_a_mev: Vec<f64>,
        tunneling_mev: f64,
        bias_mev: f64,
        temperature_k: f64,
        /// Fock levels per mode for the truncated representation.
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
}

fn default_cutoff() -> usize {
    10
}

/// A built model ready for sweeps: joint coupling, state and control angles.
pub struct BuiltModel {
    pub v_ps: ComplexMatrix,
    pub rho: DensityOperator,
    pub theta: f64,
    pub phi: f64,
}

fn parse_matrix(entries: &[[f64; 2]], rows: usize, cols: usize, name: &str) -> Result<ComplexMatrix, ConfigError> {
    let data: Vec<C64> = entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    ComplexMatrix::from_slice(rows, cols, &data)
        .map_err(|e| err(format!("{name}: {e}")))
}

impl ModelConfig {
    pub fn build(&self) -> Result<BuiltModel, ConfigError> {
        match self {
            ModelConfig::Explicit { dim, theta, phi, v_ps, h_s, v, rho } => {
                let d = *dim;
                if d == 0 {
                    return Err(err("model.dim must be positive"));
                }
                let v_ps = match (v_ps, h_s, v) {
                    (Some(vps), None, None) => parse_matrix(vps, 2 * d, 2 * d, "model.v_ps")?,
                    (None, Some(h), Some(vint)) => {
                        let h = parse_matrix(h, d, d, "model.h_s")?;
                        let vint = parse_matrix(vint, 2 * d, 2 * d, "model.v")?;
                        coupling_from_parts(&h, &vint).map_err(|e| err(e.to_string()))?
                    }
                    _ => {
                        return Err(err(
                            "explicit model needs either v_ps, or h_s together with v",
                        ))
                    }
                };
                let rho = match rho {
                    Some(r) => DensityOperator::new(parse_matrix(r, d, d, "model.rho")?)
                        .map_err(|e| err(format!("model.rho: {e}")))?,
                    None => DensityOperator::maximally_mixed(d),
                };
                Ok(BuiltModel { v_ps, rho, theta: *theta, phi: *phi })
            }
            ModelConfig::Spin {
                positions_nm,
                moments_mu_n,
                field_t,
                probe_position_nm,
                probe_axis,
                probe_moment_mev_per_t,
            } => {
                let geom = SpinGeometry {
                    positions_nm: positions_nm.clone(),
                    moments_mu_n: moments_mu_n.clone(),
                    field_t: *field_t,
                    probe_position_nm: *probe_position_nm,
                    probe_axis: *probe_axis,
                    probe_moment_mev_per_t: *probe_moment_mev_per_t,
                };
                let h = qprobe_core::spin::build_spin_hamiltonian(&geom)
                    .map_err(|e| err(e.to_string()))?;
                let (v, _) = qprobe_core::spin::build_probe_coupling(&geom)
                    .map_err(|e| err(e.to_string()))?;
                let v_ps = coupling_from_parts(h.matrix(), &v).map_err(|e| err(e.to_string()))?;
                let rho = DensityOperator::maximally_mixed(h.dim());
                Ok(BuiltModel { v_ps, rho, theta: 0.0, phi: 0.0 })
            }
            ModelConfig::Vibronic {
                mode_frequencies_mev,
                couplings_d_mev,
                couplings_a_mev,
                tunneling_mev,
                bias_mev,
                temperature_k,
                cutoff,
            } => {
                let model = VibronicModel {
                    mode_frequencies_mev: mode_frequencies_mev.clone(),
                    couplings_d_mev: couplings_d_mev.clone(),
                    couplings_a_mev: couplings_a_mev.clone(),
                    tunneling_mev: *tunneling_mev,
                    bias_mev: *bias_mev,
                    temperature_k: *temperature_k,
                };
                let oracle =
                    FockOracle::build(&model, *cutoff).map_err(|e| err(e.to_string()))?;
                let basis = qprobe_core::model::control_eigenbasis(0.0, 0.0);
                Ok(BuiltModel {
                    v_ps: oracle.blocks.assemble(&basis),
                    rho: oracle.rho.clone(),
                    theta: 0.0,
                    phi: 0.0,
                })
            }
        }
    }
}

/// Probe state: named or explicit control-basis amplitudes.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Amplitudes([f64; 4]),
}

impl StateSpec {
    pub fn build(&self) -> Result<ProbePureState, ConfigError> {
        match self {
            StateSpec::Named(name) => match name.as_str() {
                "pi0" => Ok(ProbePureState::pi0()),
                "pi1" => Ok(ProbePureState::pi1()),
                "plus" => Ok(ProbePureState::equator(0.0)),
                "minus" => Ok(ProbePureState::equator(std::f64::consts::PI)),
                other => Err(err(format!(
                    "unknown state '{other}' (expected pi0, pi1, plus, minus, or amplitudes)"
                ))),
            },
            StateSpec::Amplitudes([r0, i0, r1, i1]) => {
                let c0 = C64::new(*r0, *i0);
                let c1 = C64::new(*r1, *i1);
                let n = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
                if n == 0.0 {
                    return Err(err("state amplitudes are all zero"));
                }
                ProbePureState::new(c0 / n, c1 / n).map_err(|e| err(e.to_string()))
            }
        }
    }
}

/// Grid spec: explicit values or an evenly spaced range.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: Option<usize>,
    #[serde(default)]
    pub scale: Option<String>,
    pub values: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn build(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        if let Some(values) = &self.values {
            if values.is_empty() {
                return Err(err(format!("{name}: empty grid")));
            }
            return Ok(values.clone());
        }
        let (min, max, count) = match (self.min, self.max, self.count) {
            (Some(a), Some(b), Some(n)) if n > 0 => (a, b, n),
            _ => {
                return Err(err(format!(
                    "{name}: need values, or min/max/count with count > 0"
                )))
            }
        };
        match self.scale.as_deref().unwrap_or("linear") {
            "linear" => Ok(qprobe_core::dynamics::linspace(min, max, count)),
            "log" => {
                if min <= 0.0 {
                    return Err(err(format!("{name}: log scale needs positive min")));
                }
                Ok(qprobe_core::dynamics::logspace(min, max, count))
            }
            other => Err(err(format!("{name}: unknown scale '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub prep: StateSpec,
    pub meas: StateSpec,
    pub lambdas: GridSpec,
    pub taus: GridSpec,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    /// Also evaluate the validity report at the grid midpoint.
    #[serde(default)]
    pub validity_margin: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Input CSV produced by the sweep command.
    pub input: String,
    /// Baseline q to subtract before fitting.
    #[serde(default)]
    pub baseline: f64,
    /// Fit lambda^2-prescaled samples (amplitudes become lambda-free).
    #[serde(default)]
    pub prescale_lambda_squared: bool,
    /// Prefer sampled probabilities when present.
    #[serde(default = "default_true")]
    pub use_sampled: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Input CSV produced by the fit command.
    pub input: String,
    #[serde(default)]
    pub window: Option<String>,
    /// Complex factor mapping fitted coefficients to the physical quantity.
    #[serde(default)]
    pub scale_re: Option<f64>,
    #[serde(default)]
    pub scale_im: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub lambdas: GridSpec,
    pub taus: GridSpec,
    pub leading_order: u32,
    #[serde(default)]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpinDemoConfig {
    #[serde(default)]
    pub seed: u64,
    pub n_spins: usize,
    /// Evolution-time budgets in microseconds; one reconstruction each.
    pub budgets_us: Vec<f64>,
    #[serde(default = "default_tau_step")]
    pub tau_step_ns: f64,
    #[serde(default = "default_lambda_count")]
    pub lambda_count: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Number of random probe placements around the same cluster.
    #[serde(default = "default_positions")]
    pub probe_positions: usize,
    #[serde(default = "default_cluster_radius")]
    pub cluster_radius_nm: f64,
}

fn default_tau_step() -> f64 {
    100.0
}
fn default_lambda_count() -> usize {
    100
}
fn default_shots() -> u64 {
    1_000_000
}
fn default_positions() -> usize {
    4
}
fn default_cluster_radius() -> f64 {
    0.02
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VibronicDemoConfig {
    pub mode_frequencies_mev: Vec<f64>,
    pub couplings_d_mev: Vec<f64>,
    pub couplings_a_mev: Vec<f64>,
    pub tunneling_mev: f64,
    pub bias_mev: f64,
    pub temperature_k: f64,
    #[serde(default = "default_tau_count")]
    pub tau_count: usize,
    #[serde(default = "default_tau_step_ps")]
    pub tau_step_ps: f64,
    #[serde(default = "default_vib_lambda_count")]
    pub lambda_count: usize,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    /// Snap mode frequencies onto the tau grid's DFT bins before running.
    #[serde(default)]
    pub align_modes_to_bins: bool,
}

fn default_tau_count() -> usize {
    256
}
fn default_tau_step_ps() -> f64 {
    0.1
}
fn default_vib_lambda_count() -> usize {
    64
}

/// The manifest written next to every output set; rerunning from it
/// reproduces the outputs byte for byte.
#[derive(Debug, Deserialize, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_toml: String,
    pub seed_override: Option<u64>,
    pub version: String,
}

/// Load a config from TOML, or from a manifest JSON (reruns).
pub fn load_config(path: &std::path::Path) -> Result<(Config, String, Option<u64>), ConfigError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().and_then(|s| s.to_str()) == Some("json") {
        let manifest: Manifest = serde_json::from_str(&raw)
            .map_err(|e| err(format!("bad manifest {}: {e}", path.display())))?;
        let config = parse_toml(&manifest.config_toml)?;
        return Ok((config, manifest.config_toml, manifest.seed_override));
    }
    let config = parse_toml(&raw)?;
    Ok((config, raw, None))
}

fn parse_toml(raw: &str) -> Result<Config, ConfigError> {
    toml::from_str(raw).map_err(|e| err(e.to_string()))
}
