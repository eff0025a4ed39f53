//! Power-series particular solutions
//!
//! ```text
//! ρ*(τ) = ρ₋₁ τ^(1/2) + ρ₀ + Σ_{k=1..3} ρ_k τ^(-k/2)
//! ψ*(τ) = ψ₀ + Σ_{k=1..3} ψ_k τ^(-k/2)
//! ```
//!
//! with coefficients from the linear chain `2ρ₋₁ρ_k = F_k`, `P′(ψ₀)ψ_k = G_k`.
//! The expansion stops at k = 3.
//!
//! Two readings of the printed recursion are exposed through
//! [`SeriesOptions::mu_index_as_printed`]: `G₂` carries the pump coefficient
//! printed as μ₂; matching powers of τ suggests μ₁ instead. `G₃` always uses μ₀.
//! With μ₁ = μ₂ = 0 (the usual test setting) the two agree.

use serde::Serialize;

use crate::equilibria::{PhaseParams, DEGENERACY_TOL};
use crate::integrator::{integrate, IntegrationConfig, StepLaw, Trajectory};
use crate::model::{model_rhs, ModelParams, ModelState};
use crate::{Error, Result};

/// Order of the first omitted term in the ρ-equation residual.
pub const RHO_RESIDUAL_ORDER: f64 = 2.0;
/// Order of the first omitted term in the ψ-equation residual.
pub const PSI_RESIDUAL_ORDER: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesOptions {
    pub mu_index_as_printed: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { mu_index_as_printed: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCoeffs {
    pub psi0: f64,
    pub rho_m1: f64,
    /// ρ₀..ρ₃.
    pub rho: [f64; 4],
    /// ψ₀..ψ₃ (ψ[0] = psi0).
    pub psi: [f64; 4],
    pub params: ModelParams,
    pub delta: f64,
    pub mu0: f64,
    /// Pump coefficient that entered G₂.
    pub mu_g2: f64,
    pub options: SeriesOptions,
    pub p_prime: f64,
}

/// Builds the k ≤ 3 coefficients for the root `psi0` of `P(·; δ, ν)`.
pub fn compute_coeffs(p: &ModelParams, psi0: f64) -> Result<SeriesCoeffs> {
    compute_coeffs_with(p, psi0, SeriesOptions::default())
}

pub fn compute_coeffs_with(p: &ModelParams, psi0: f64, options: SeriesOptions) -> Result<SeriesCoeffs> {
    p.validate()?;
    if p.lambda <= 0.0 {
        return Err(Error::Precondition(format!(
            "series construction needs lambda > 0 (rho_-1 = lambda^(1/2)), got {}",
            p.lambda
        )));
    }
    let lam = p.lambda;
    let sq = lam.sqrt();
    let mu0 = p.mu.mu0();
    let delta = mu0 * sq;
    let pp = PhaseParams { delta, nu: p.nu };
    if pp.p(psi0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("psi0 = {psi0} is not a root of P (P = {:e})", pp.p(psi0))));
    }
    let d1 = pp.dp(psi0);
    if d1.abs() <= DEGENERACY_TOL {
        return Err(Error::Degenerate { psi0, p_prime: d1 });
    }
    let d2 = pp.d2p(psi0);
    let d3 = pp.d3p(psi0);
    let (s2, c2) = (2.0 * psi0 + p.nu).sin_cos();
    let (s1, c1) = psi0.sin_cos();

    let rho_m1 = sq;
    let mu_g2 = if options.mu_index_as_printed { p.mu.coeff(2) } else { p.mu.coeff(1) };

    let g1 = -rho_m1 / 2.0;
    let psi1 = g1 / d1;
    let f2 = (delta * c2 - c1) / sq;
    let rho2 = f2 / (2.0 * rho_m1);
    let g2 = -d2 * psi1 * psi1 / 2.0 - mu_g2 * rho_m1 * s2;
    let psi2 = g2 / d1;
    let f3 = -psi1 * (2.0 * delta * s2 - s1) / sq;
    let rho3 = f3 / (2.0 * rho_m1);
    let g3 = -d2 * psi1 * psi2 - d3 * psi1.powi(3) / 6.0 - mu0 * rho2 * s2;
    let psi3 = g3 / d1;

    Ok(SeriesCoeffs {
        psi0,
        rho_m1,
        rho: [0.0, 0.0, rho2, rho3],
        psi: [psi0, psi1, psi2, psi3],
        params: p.clone(),
        delta,
        mu0,
        mu_g2,
        options,
        p_prime: d1,
    })
}

impl SeriesCoeffs {
    /// ρ* − ρ₋₁τ^(1/2), the part of ρ* below leading order.
    pub fn rho_tail(&self, tau: f64) -> f64 {
        let x = 1.0 / tau.sqrt();
        self.rho[0] + x * (self.rho[1] + x * (self.rho[2] + x * self.rho[3]))
    }

    /// (dρ*/dτ, dψ*/dτ) from term-wise differentiation.
    pub fn derivative(&self, tau: f64) -> (f64, f64) {
        let mut drho = 0.5 * self.rho_m1 / tau.sqrt();
        let mut dpsi = 0.0;
        for k in 1..4 {
            let pw = -(k as f64) / 2.0;
            let factor = pw * tau.powf(pw - 1.0);
            drho += self.rho[k] * factor;
            dpsi += self.psi[k] * factor;
        }
        (drho, dpsi)
    }
}

/// Partial sums of ρ* and ψ* through k = 3.
pub fn eval_series(c: &SeriesCoeffs, tau: f64) -> ModelState {
    let x = 1.0 / tau.sqrt();
    let rho = c.rho_m1 * tau.sqrt() + c.rho_tail(tau);
    let psi = c.psi[0] + x * (c.psi[1] + x * (c.psi[2] + x * c.psi[3]));
    ModelState { rho, psi }
}

/// Defects `(r_ρ, r_ψ)` of the slow system on the truncated series.
///
/// `ρ*² − λτ` is formed from the tail to avoid cancellation at large τ.
pub fn residual(c: &SeriesCoeffs, tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("residual needs tau > 0, got {tau}")));
    }
    let p = &c.params;
    let s = eval_series(c, tau);
    let (drho, dpsi) = c.derivative(tau);
    let mu = p.mu.eval(tau)?;
    let (sin_psi, cos_psi) = s.psi.sin_cos();
    let (sin_2, cos_2) = (2.0 * s.psi + p.nu).sin_cos();
    let lead = (p.lambda * tau).sqrt();
    let tail = c.rho_tail(tau);
    let sq_minus = tail * (2.0 * lead + tail);
    let r_rho = drho - (sin_psi - mu * s.rho * sin_2);
    let r_psi = dpsi - (sq_minus - mu * cos_2 + cos_psi / s.rho);
    Ok((r_rho, r_psi))
}

/// Particular solution obtained by integrating the slow system backwards from a
/// far horizon where the truncated series is accurate.
///
/// Only meaningful for stable roots: around a saddle the backward flow
/// amplifies the series error exponentially.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedParticular {
    pub coeffs: SeriesCoeffs,
    pub tau_lo: f64,
    pub tau_far: f64,
    /// Trajectory in reversed time s = −τ.
    reversed: Trajectory<2>,
}

impl RefinedParticular {
    pub fn state(&self, tau: f64) -> Result<ModelState> {
        if tau > self.tau_far {
            return Ok(eval_series(&self.coeffs, tau));
        }
        if tau < self.tau_lo {
            return Err(Error::Domain(format!("refined particular solution covers tau >= {}, got {tau}", self.tau_lo)));
        }
        Ok(ModelState::from_array(self.reversed.interpolate(-tau)?))
    }
}

/// Integration settings used for refined particular solutions.
pub fn refine_config(lambda: f64, p_prime: f64) -> IntegrationConfig {
    // Quarter of the local period 2π / ((4λτ)^(1/4) √|P′|), in reversed time.
    let coef = 0.25 * std::f64::consts::TAU / ((4.0 * lambda).powf(0.25) * p_prime.abs().sqrt());
    IntegrationConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        max_step_law: Some(StepLaw { coef, exponent: -0.25 }),
        max_steps: 50_000_000,
        ..Default::default()
    }
}

/// Backward-integrates from `tau_far` down to `tau_lo` starting on the series.
pub fn refine_particular(c: &SeriesCoeffs, tau_lo: f64, tau_far: f64) -> Result<RefinedParticular> {
    if !(tau_lo > 0.0 && tau_far > tau_lo) {
        return Err(Error::Precondition(format!("refinement needs 0 < tau_lo < tau_far, got {tau_lo}, {tau_far}")));
    }
    if c.p_prime <= 0.0 {
        return Err(Error::Precondition("backward refinement is only stable around P'(psi0) > 0".into()));
    }
    let params = c.params.clone();
    let reversed_rhs = move |s: f64, y: &[f64; 2]| -> Result<[f64; 2]> {
        let f = model_rhs(&params, -s, ModelState::from_array(*y))?;
        Ok([-f[0], -f[1]])
    };
    let start = eval_series(c, tau_far).to_array();
    // The ceiling law is evaluated at |s| = τ.
    let cfg = refine_config(c.params.lambda, c.p_prime);
    let traj = integrate(&reversed_rhs, -tau_far, start, -tau_lo, &cfg)?;
    if traj.hit_singularity() {
        return Err(Error::Precondition("backward refinement hit the amplitude floor".into()));
    }
    Ok(RefinedParticular { coeffs: c.clone(), tau_lo, tau_far, reversed: traj })
}

/// Reference solution for the scaled frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Series(SeriesCoeffs),
    Refined(RefinedParticular),
}

impl Reference {
    pub fn coeffs(&self) -> &SeriesCoeffs {
        match self {
            Reference::Series(c) => c,
            Reference::Refined(r) => &r.coeffs,
        }
    }

    pub fn state(&self, tau: f64) -> Result<ModelState> {
        match self {
            Reference::Series(c) => {
                if !(tau > 0.0) {
                    return Err(Error::Domain(format!("series needs tau > 0, got {tau}")));
                }
                Ok(eval_series(c, tau))
            }
            Reference::Refined(r) => r.state(tau),
        }
    }

    /// (dρ*/dτ, dψ*/dτ): term-wise for the series, from the vector field for a
    /// refined solution.
    pub fn derivative(&self, tau: f64) -> Result<(f64, f64)> {
        match self {
            Reference::Series(c) => Ok(c.derivative(tau)),
            Reference::Refined(r) => {
                let f = model_rhs(&r.coeffs.params, tau, r.state(tau)?)?;
                Ok((f[0], f[1]))
            }
        }
    }

    /// Refined reference for stable roots on `[tau_lo, tau_hi]`, series otherwise.
    ///
    /// The backward integration starts at `max(8·tau_hi, 4000)`.
    pub fn best_available(c: &SeriesCoeffs, tau_lo: f64, tau_hi: f64) -> Result<Self> {
        if c.p_prime > 0.0 {
            let far = (8.0 * tau_hi).max(4000.0);
            Ok(Reference::Refined(refine_particular(c, tau_lo, far)?))
        } else {
            Ok(Reference::Series(c.clone()))
        }
    }
}
