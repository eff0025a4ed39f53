//! Right-hand sides of the three dynamical systems and the pump-amplitude law.
//!
//! The slow system for amplitude `ρ` and phase mismatch `ψ` is
//!
//! ```text
//! dρ/dτ = sin ψ − μ(τ) ρ sin(2ψ + ν)
//! dψ/dτ = ρ² − λτ − μ(τ) cos(2ψ + ν) + cos ψ / ρ
//! ```
//!
//! `ψ` is kept unwrapped everywhere so that phase slipping shows up as drift.

use serde::{Deserialize, Serialize};

use crate::integrator::OdeSystem;
use crate::{Error, Result};

/// Amplitude floor below which the phase equation is treated as singular.
pub const DEFAULT_RHO_FLOOR: f64 = 1e-8;

/// Pump amplitude law μ(τ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    /// μ(τ) = c (1 + bτ)^(-1/2).
    ClosedForm { c: f64, b: f64 },
    /// μ(τ) = μ₀ τ^(-1/2) + Σ_{k≥1} μ_k τ^(-(2k+1)/2), summed as written.
    Series { coeffs: Vec<f64> },
}

impl MuSpec {
    /// μ ≡ 0.
    pub fn zero() -> Self {
        MuSpec::Series { coeffs: vec![0.0] }
    }

    /// μ(τ) = μ₀ τ^(-1/2).
    pub fn leading(mu0: f64) -> Self {
        MuSpec::Series { coeffs: vec![mu0] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MuSpec::ClosedForm { c, b } => {
                if !c.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidParameter("closed-form mu needs finite c and b".into()));
                }
                if *b <= 0.0 {
                    return Err(Error::InvalidParameter(format!("closed-form mu needs b > 0, got {b}")));
                }
            }
            MuSpec::Series { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidParameter("series mu needs at least mu_0".into()));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter("series mu coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Evaluates μ(τ).
    ///
    /// The series form is singular at τ = 0 and needs τ > 0; the closed form is
    /// regular on τ ≥ 0, which the Duffing reduction relies on.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        match self {
            MuSpec::ClosedForm { c, b } => {
                if !(tau >= 0.0) {
                    return Err(Error::Domain(format!("mu(tau) needs tau >= 0, got {tau}")));
                }
                Ok(c / (1.0 + b * tau).sqrt())
            }
            MuSpec::Series { coeffs } => {
                if !(tau > 0.0) {
                    return Err(Error::Domain(format!("series mu(tau) needs tau > 0, got {tau}")));
                }
                let inv = 1.0 / tau;
                let mut pow = inv.sqrt();
                let mut sum = 0.0;
                for c in coeffs {
                    sum += c * pow;
                    pow *= inv;
                }
                Ok(sum)
            }
        }
    }

    /// Leading coefficient μ₀ = lim τ^(1/2) μ(τ).
    pub fn mu0(&self) -> f64 {
        match self {
            MuSpec::ClosedForm { c, b } => c / b.sqrt(),
            MuSpec::Series { coeffs } => coeffs.first().copied().unwrap_or(0.0),
        }
    }

    /// Asymptotic coefficient μ_k of τ^(-(2k+1)/2).
    ///
    /// For the closed form this is the binomial expansion of (1 + 1/(bτ))^(-1/2).
    pub fn coeff(&self, k: usize) -> f64 {
        match self {
            MuSpec::ClosedForm { c, b } => {
                let mut binom = 1.0;
                for j in 0..k {
                    binom *= (-0.5 - j as f64) / (j as f64 + 1.0);
                }
                c / b.sqrt() * binom / b.powi(k as i32)
            }
            MuSpec::Series { coeffs } => coeffs.get(k).copied().unwrap_or(0.0),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            MuSpec::ClosedForm { c, .. } => *c == 0.0,
            MuSpec::Series { coeffs } => coeffs.iter().all(|c| *c == 0.0),
        }
    }
}

/// Free-function form of [`MuSpec::eval`].
pub fn eval_mu(mu: &MuSpec, tau: f64) -> Result<f64> {
    mu.eval(tau)
}

/// Chirp rate, phase offset and pump law of the slow system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub nu: f64,
    pub mu: MuSpec,
    #[serde(default = "default_rho_floor")]
    pub rho_floor: f64,
}

fn default_rho_floor() -> f64 {
    DEFAULT_RHO_FLOOR
}

impl ModelParams {
    pub fn new(lambda: f64, nu: f64, mu: MuSpec) -> Result<Self> {
        let p = ModelParams { lambda, nu, mu, rho_floor: DEFAULT_RHO_FLOOR };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rho_floor(mut self, floor: f64) -> Result<Self> {
        self.rho_floor = floor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda == 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be finite and nonzero, got {}", self.lambda)));
        }
        if !(0.0..std::f64::consts::PI).contains(&self.nu) {
            return Err(Error::InvalidParameter(format!("nu must lie in [0, pi), got {}", self.nu)));
        }
        if !(self.rho_floor >= 0.0) {
            return Err(Error::InvalidParameter("rho_floor must be >= 0".into()));
        }
        self.mu.validate()
    }

    /// Bifurcation parameter δ = μ₀ λ^(1/2). Needs λ > 0.
    pub fn delta(&self) -> Result<f64> {
        if self.lambda <= 0.0 {
            return Err(Error::Precondition("delta = mu0 * lambda^(1/2) needs lambda > 0".into()));
        }
        Ok(self.mu.mu0() * self.lambda.sqrt())
    }
}

/// Point (ρ, ψ) of the slow system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub rho: f64,
    pub psi: f64,
}

impl ModelState {
    pub fn new(rho: f64, psi: f64) -> Self {
        ModelState { rho, psi }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.rho, self.psi]
    }

    pub fn from_array(y: [f64; 2]) -> Self {
        ModelState { rho: y[0], psi: y[1] }
    }
}

/// (dρ/dτ, dψ/dτ) of the slow system.
pub fn model_rhs(p: &ModelParams, tau: f64, s: ModelState) -> Result<[f64; 2]> {
    if !(s.rho > p.rho_floor) {
        return Err(Error::Singularity { t: tau, rho: s.rho, floor: p.rho_floor });
    }
    let mu = p.mu.eval(tau)?;
    let (sin_psi, cos_psi) = s.psi.sin_cos();
    let (sin_2, cos_2) = (2.0 * s.psi + p.nu).sin_cos();
    let drho = sin_psi - mu * s.rho * sin_2;
    let dpsi = s.rho * s.rho - p.lambda * tau - mu * cos_2 + cos_psi / s.rho;
    Ok([drho, dpsi])
}

/// The slow system as an [`OdeSystem`] over `[ρ, ψ]`.
#[derive(Debug, Clone)]
pub struct ModelSystem<'a> {
    pub params: &'a ModelParams,
}

impl<'a> ModelSystem<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        ModelSystem { params }
    }
}

impl OdeSystem<2> for ModelSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        model_rhs(self.params, t, ModelState::from_array(*y))
    }
}

/// Parameters of `u'' + (1 + εB(t))(u − γεu³) = εA(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuffingParams {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl DuffingParams {
    /// Reference parameters for the capture/escape comparison: ε = 10⁻², α = 0.25·10⁻⁴, β = 1, γ = 1/6, ν = 0.
    pub fn reference() -> Self {
        DuffingParams { eps: 1e-2, alpha: 0.25e-4, beta: 1.0, gamma: 1.0 / 6.0, nu: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 0.1) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 0.1), got {}", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.01) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 0.01), got {}", self.alpha)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !self.beta.is_finite() || !self.nu.is_finite() {
            return Err(Error::InvalidParameter("beta and nu must be finite".into()));
        }
        Ok(())
    }

    /// Drive phase φ(t) = t − αt².
    pub fn phase(&self, t: f64) -> f64 {
        t - self.alpha * t * t
    }
}

/// (du/dt, dv/dt) of the Duffing oscillator.
pub fn duffing_rhs(p: &DuffingParams, t: f64, y: [f64; 2]) -> Result<[f64; 2]> {
    let base = 1.0 + p.eps * t;
    if base <= 0.0 {
        return Err(Error::Domain(format!("1 + eps*t must be positive, got {base}")));
    }
    let [u, v] = y;
    let phi = p.phase(t);
    let a = phi.cos();
    let b = p.beta / base.sqrt() * (2.0 * phi + p.nu).cos();
    let dv = p.eps * a - (1.0 + p.eps * b) * (u - p.gamma * p.eps * u * u * u);
    Ok([v, dv])
}

#[derive(Debug, Clone, Copy)]
pub struct DuffingSystem<'a> {
    pub params: &'a DuffingParams,
}

impl OdeSystem<2> for DuffingSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        duffing_rhs(self.params, t, *y)
    }
}

/// Right-hand side of `a' = a b t^(-1/4) − a/t`, `b' = −b/(2t)`.
pub fn demo_es_rhs(t: f64, y: [f64; 2]) -> Result<[f64; 2]> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("demo system needs t > 0, got {t}")));
    }
    let [a, b] = y;
    Ok([a * b * t.powf(-0.25) - a / t, -0.5 * b / t])
}

/// Closed-form solution `a = a₀ t⁻¹ exp(4 b₀ t^(1/4))`, `b = b₀ t^(-1/2)`.
pub fn demo_es_exact(a0: f64, b0: f64, t: f64) -> Result<[f64; 2]> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("demo system needs t > 0, got {t}")));
    }
    Ok([a0 / t * (4.0 * b0 * t.powf(0.25)).exp(), b0 / t.sqrt()])
}

/// Linearisation of the demo system at the origin: diag(−1/t, −1/(2t)).
pub fn demo_es_linearization(t: f64) -> Result<[[f64; 2]; 2]> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("demo system needs t > 0, got {t}")));
    }
    Ok([[-1.0 / t, 0.0], [0.0, -0.5 / t]])
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DemoEsSystem;

impl OdeSystem<2> for DemoEsSystem {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        demo_es_rhs(t, *y)
    }
}
