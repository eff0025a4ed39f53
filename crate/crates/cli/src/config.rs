use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use autores_core::duffing::CompareOptions;
use autores_core::model::{DuffingParams, ModelParams, MuSpec, DEFAULT_RHO_FLOOR};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Whole experiment description. Every section has defaults, so an empty file
/// is a valid configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub run: RunSection,
    pub scan: ScanSection,
    pub basin: BasinSection,
    pub threshold: ThresholdSection,
    pub lyapunov: LyapunovSection,
    pub freq: FreqSection,
    pub duffing: DuffingSection,
    pub demo_es: DemoEsSection,
    pub asymptotics: AsymptoticsSection,
    #[serde(skip_serializing)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub lambda: f64,
    pub nu: f64,
    pub mu: MuSpec,
    pub rho_floor: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { lambda: 1.0, nu: 0.0, mu: MuSpec::zero(), rho_floor: DEFAULT_RHO_FLOOR }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.lambda, self.nu, self.mu.clone())?.with_rho_floor(self.rho_floor)?)
    }
}

/// Initial condition of a slow-system run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Start {
    /// Truncated series of the root of `P` nearest to `psi0`.
    Series { psi0: f64 },
    State { rho: f64, psi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub tau0: f64,
    pub tau_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Step budget per integration; exhausting it exits with code 3.
    pub max_steps: usize,
    pub start: Start,
    /// Number of evenly spaced trajectory rows written by `simulate`.
    pub samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            tau0: 50.0,
            tau_max: 1000.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 20_000_000,
            start: Start::Series { psi0: PI },
            samples: 2001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_n: usize,
    pub nu_n: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { delta_min: -1.0, delta_max: 1.0, delta_n: 201, nu_n: 180 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinSection {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_n: usize,
    pub psi_min: f64,
    pub psi_max: f64,
    pub psi_n: usize,
}

impl Default for BasinSection {
    fn default() -> Self {
        BasinSection { rho_min: 0.1, rho_max: 10.0, rho_n: 21, psi_min: 0.0, psi_max: 2.0 * PI, psi_n: 24 }
    }
}

/// Root-branch sweep in δ at the model's λ and ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSection {
    pub delta_min: f64,
    pub delta_max: f64,
    pub n: usize,
    pub branch_psi0: f64,
    pub tau0: f64,
    pub d0: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection { delta_min: 0.0, delta_max: 1.0, n: 21, branch_psi0: 0.0, tau0: 100.0, d0: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSection {
    pub psi0: f64,
    pub d0: f64,
    pub angle: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection { psi0: PI, d0: 0.02, angle: 0.3, eta0: 1e3, eta1: 1e4, samples: 2000, rel_tol: 1e-12, abs_tol: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqSection {
    pub psi0: f64,
    pub h: Vec<f64>,
    /// Level used for the Richardson slope estimate.
    pub slope_h: f64,
}

impl Default for FreqSection {
    fn default() -> Self {
        FreqSection { psi0: PI, h: vec![1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2], slope_h: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuffingSection {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub t_max: f64,
    /// Initial data `(u(0), u′(0))`.
    pub data: Vec<[f64; 2]>,
    pub compare: CompareOptions,
}

impl Default for DuffingSection {
    fn default() -> Self {
        let p = DuffingParams::reference();
        DuffingSection {
            eps: p.eps,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            nu: p.nu,
            t_max: 2000.0,
            data: vec![[-2.0, 2.0], [1e-3, 0.0]],
            compare: CompareOptions::default(),
        }
    }
}

impl DuffingSection {
    pub fn params(&self) -> DuffingParams {
        DuffingParams { eps: self.eps, alpha: self.alpha, beta: self.beta, gamma: self.gamma, nu: self.nu }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemoEsSection {
    pub a0: f64,
    pub b0: f64,
    pub t0: f64,
    pub t1: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub samples: usize,
}

impl Default for DemoEsSection {
    fn default() -> Self {
        DemoEsSection { a0: 1.0, b0: 1.0, t0: 1.0, t1: 16.0, rel_tol: 1e-12, abs_tol: 1e-14, samples: 151 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticsSection {
    pub psi0: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub n: usize,
    pub mu_index_as_printed: bool,
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        AsymptoticsSection { psi0: PI, tau_min: 1e2, tau_max: 1e5, n: 61, mu_index_as_printed: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
}

pub fn load(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `--out-dir` beats `AUTORES_OUT_DIR`, which beats the config, which beats `./out`.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>, cfg: &OutputSection) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    cfg.directory.clone().unwrap_or_else(|| PathBuf::from("out"))
}
