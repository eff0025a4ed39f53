//! Capture classification, basin sweeps and envelope fits.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::equilibria::{find_roots, EquilibriumPoint, PhaseParams, Stability};
use crate::integrator::{integrate, IntegrationConfig, Trajectory};
use crate::model::{ModelParams, ModelState, ModelSystem};
use crate::numeric::{circular_distance, power_law_fit, wrap_pm_pi};
use crate::stability::{perturbation_witness, ScaledFrame};
use crate::{Error, Result};

/// Operational thresholds of the capture classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureCriteria {
    pub phase_window: f64,
    pub amp_lo: f64,
    pub amp_hi: f64,
    pub drift_limit: f64,
    pub collapse_ratio: f64,
    /// Tail window is `[(1 − tail_fraction)·τ_max, τ_max]`.
    pub tail_fraction: f64,
    pub tail_samples: usize,
}

impl Default for CaptureCriteria {
    fn default() -> Self {
        CaptureCriteria {
            phase_window: FRAC_PI_2,
            amp_lo: 0.8,
            amp_hi: 1.2,
            drift_limit: 4.0 * PI,
            collapse_ratio: 0.3,
            tail_fraction: 0.5,
            tail_samples: 2000,
        }
    }
}

impl CaptureCriteria {
    pub fn validate(&self) -> Result<()> {
        let ok = self.phase_window > 0.0
            && self.phase_window <= PI
            && 0.0 < self.amp_lo
            && self.amp_lo < 1.0
            && self.amp_hi > 1.0
            && self.drift_limit > 0.0
            && self.collapse_ratio > 0.0
            && self.tail_fraction > 0.0
            && self.tail_fraction < 1.0
            && self.tail_samples >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("inconsistent capture criteria: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictKind {
    Captured { psi0_index: usize, psi0_value: f64 },
    Escaped,
    Undetermined,
}

impl VerdictKind {
    pub fn label(&self) -> &'static str {
        match self {
            VerdictKind::Captured { .. } => "captured",
            VerdictKind::Escaped => "escaped",
            VerdictKind::Undetermined => "undetermined",
        }
    }

    pub fn is_captured(&self) -> bool {
        matches!(self, VerdictKind::Captured { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureVerdict {
    pub kind: VerdictKind,
    pub final_tau: f64,
    /// Unwrapped `|ψ(τ_max) − ψ(start of tail)|`.
    pub max_drift: f64,
    /// Mean of `ρ²/(λτ)` over the tail window.
    pub tail_amp_ratio: f64,
    pub singular: bool,
}

/// Classifies with [`CaptureCriteria::default`].
pub fn classify_trajectory(traj: &Trajectory<2>, p: &ModelParams, roots: &[EquilibriumPoint]) -> Result<CaptureVerdict> {
    classify_with(traj, p, roots, &CaptureCriteria::default())
}

pub fn classify_with(traj: &Trajectory<2>, p: &ModelParams, roots: &[EquilibriumPoint], crit: &CaptureCriteria) -> Result<CaptureVerdict> {
    crit.validate()?;
    let tau0 = traj.t_start();
    let tau_max = traj.t_requested;
    if !(tau0 > 0.0 && tau_max >= 4.0 * tau0) {
        return Err(Error::Precondition(format!(
            "classification needs 0 < tau0 and tau_max >= 4 tau0, got tau0 = {tau0}, tau_max = {tau_max}"
        )));
    }
    if traj.hit_singularity() {
        return Ok(CaptureVerdict {
            kind: VerdictKind::Escaped,
            final_tau: traj.t_end(),
            max_drift: f64::NAN,
            tail_amp_ratio: f64::NAN,
            singular: true,
        });
    }
    if traj.t_end() < tau_max {
        return Err(Error::Precondition(format!("trajectory ends at {} before tau_max = {tau_max}", traj.t_end())));
    }
    let lo = (1.0 - crit.tail_fraction) * tau_max;
    let n = crit.tail_samples;
    let samples: Vec<(f64, ModelState)> = (0..n)
        .map(|i| {
            let tau = lo + (tau_max - lo) * i as f64 / (n - 1) as f64;
            traj.interpolate(tau).map(|y| (tau, ModelState::from_array(y)))
        })
        .collect::<Result<_>>()?;

    let ratios: Vec<f64> = samples.iter().map(|(tau, s)| s.rho * s.rho / (p.lambda * tau)).collect();
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_drift = (samples[n - 1].1.psi - samples[0].1.psi).abs();
    let amp_ok = ratios.iter().all(|r| (crit.amp_lo..=crit.amp_hi).contains(r));

    let locked = roots.iter().enumerate().find(|(_, root)| {
        root.stability == Stability::Stable && samples.iter().all(|(_, s)| circular_distance(s.psi, root.psi0) < crit.phase_window)
    });

    let kind = match locked {
        Some((idx, root)) if amp_ok => VerdictKind::Captured { psi0_index: idx, psi0_value: root.psi0 },
        _ if max_drift > crit.drift_limit || mean_ratio < crit.collapse_ratio => VerdictKind::Escaped,
        _ => VerdictKind::Undetermined,
    };
    Ok(CaptureVerdict { kind, final_tau: traj.t_end(), max_drift, tail_amp_ratio: mean_ratio, singular: false })
}

/// Default integration settings for capture runs.
pub fn capture_config() -> IntegrationConfig {
    IntegrationConfig { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 20_000_000, ..Default::default() }
}

/// Integrates the slow system from `(tau0, s0)` to `tau_max`.
pub fn simulate(p: &ModelParams, tau0: f64, s0: ModelState, tau_max: f64, cfg: &IntegrationConfig) -> Result<Trajectory<2>> {
    p.validate()?;
    if !(tau0 > 0.0) {
        return Err(Error::Domain(format!("simulation needs tau0 > 0, got {tau0}")));
    }
    integrate(&ModelSystem::new(p), tau0, s0.to_array(), tau_max, cfg)
}

/// Rectangle of initial data `(ρ₀, ψ₀)` with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_n: usize,
    pub psi_min: f64,
    pub psi_max: f64,
    pub psi_n: usize,
}

impl BasinGrid {
    pub fn validate(&self) -> Result<()> {
        if self.rho_n == 0 || self.psi_n == 0 {
            return Err(Error::InvalidParameter("basin grid must be non-empty".into()));
        }
        if !(self.rho_min > 0.0 && self.rho_max >= self.rho_min) || !(self.psi_max >= self.psi_min) {
            return Err(Error::InvalidParameter(format!("invalid basin bounds: {self:?}")));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Row-major node list: ρ outer, ψ inner.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        (0..self.rho_n)
            .flat_map(|i| {
                (0..self.psi_n).map(move |j| {
                    (Self::axis(self.rho_min, self.rho_max, self.rho_n, i), Self::axis(self.psi_min, self.psi_max, self.psi_n, j))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinRow {
    pub rho0: f64,
    pub psi0_init: f64,
    pub verdict: CaptureVerdict,
}

/// One verdict per grid node, in row-major order.
pub fn basin_scan(p: &ModelParams, tau0: f64, grid: &BasinGrid, tau_max: f64, cfg: &IntegrationConfig) -> Result<Vec<BasinRow>> {
    grid.validate()?;
    p.validate()?;
    if !(tau0 > 0.0 && tau_max >= 4.0 * tau0) {
        return Err(Error::Precondition(format!("basin scan needs tau_max >= 4 tau0, got {tau0}, {tau_max}")));
    }
    let roots = if p.lambda > 0.0 { find_roots(&PhaseParams::from_model(p)?) } else { Vec::new() };
    grid.nodes()
        .par_iter()
        .map(|&(rho0, psi0)| {
            let traj = simulate(p, tau0, ModelState::new(rho0, psi0), tau_max, cfg)?;
            Ok(BasinRow { rho0, psi0_init: psi0, verdict: classify_trajectory(&traj, p, &roots)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    /// Amplitude prefactor of `|ψ − ψ*| ≈ a τ^(decay_exponent)`.
    pub a: f64,
    /// Phase constant of the fitted oscillation at its first extremum.
    pub phi: f64,
    pub decay_exponent: f64,
    pub freq_exponent: f64,
    /// Prefactor of the local frequency law `ω(τ) ≈ C τ^(freq_exponent)`.
    pub freq_coefficient: f64,
    pub rms_residual: f64,
    pub n_extrema: usize,
    pub n_crossings: usize,
}

pub const MIN_EXTREMA: usize = 20;

/// Fits the decaying oscillation in `signal(τ)` sampled on increasing `taus`.
pub fn fit_envelope_signal(taus: &[f64], signal: &[f64]) -> Result<EnvelopeFit> {
    if taus.len() != signal.len() || taus.len() < 3 {
        return Err(Error::Precondition("envelope fit needs >= 3 paired samples".into()));
    }
    let mut ext_t = Vec::new();
    let mut ext_v = Vec::new();
    for i in 1..taus.len() - 1 {
        let (y0, y1, y2) = (signal[i - 1], signal[i], signal[i + 1]);
        let is_max = y1 > y0 && y1 >= y2 && y1 > 0.0;
        let is_min = y1 < y0 && y1 <= y2 && y1 < 0.0;
        if !(is_max || is_min) {
            continue;
        }
        // Parabola through three possibly unequal-spaced points.
        let (t0, t1, t2) = (taus[i - 1], taus[i], taus[i + 1]);
        let d01 = (y1 - y0) / (t1 - t0);
        let d12 = (y2 - y1) / (t2 - t1);
        let curv = (d12 - d01) / (t2 - t0);
        let (t, v) = if curv != 0.0 {
            let tv = 0.5 * (t0 + t1) - d01 / (2.0 * curv);
            let tv = tv.clamp(t0, t2);
            (tv, y1 + d01 * (tv - t1) + curv * (tv - t0) * (tv - t1))
        } else {
            (t1, y1)
        };
        ext_t.push(t);
        ext_v.push(v.abs());
    }
    if ext_t.len() < MIN_EXTREMA {
        return Err(Error::Precondition(format!("envelope fit needs >= {MIN_EXTREMA} extrema, found {}", ext_t.len())));
    }
    let decay = power_law_fit(&ext_t, &ext_v)?;

    let mut zc = Vec::new();
    for i in 0..taus.len() - 1 {
        let (a, b) = (signal[i], signal[i + 1]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            zc.push(taus[i] + (taus[i + 1] - taus[i]) * a / (a - b));
        }
    }
    if zc.len() < MIN_EXTREMA {
        return Err(Error::Precondition(format!("envelope fit needs >= {MIN_EXTREMA} zero crossings, found {}", zc.len())));
    }
    let mid: Vec<f64> = zc.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let omega: Vec<f64> = zc.windows(2).map(|w| PI / (w[1] - w[0])).collect();
    let freq = power_law_fit(&mid, &omega)?;
    let coef = freq.intercept.exp();
    let p1 = 1.0 + freq.slope;
    let phase_at = |t: f64| coef * t.powf(p1) / p1;
    let first = ext_t[0];
    let first_sign = {
        let k = taus.partition_point(|&t| t < first).min(taus.len() - 1);
        signal[k].signum()
    };
    let phi = wrap_pm_pi(first_sign * FRAC_PI_2 - phase_at(first));
    Ok(EnvelopeFit {
        a: decay.intercept.exp(),
        phi,
        decay_exponent: decay.slope,
        freq_exponent: freq.slope,
        freq_coefficient: coef,
        rms_residual: decay.rms,
        n_extrema: ext_t.len(),
        n_crossings: zc.len(),
    })
}

/// Sample grid resolving an oscillation of local frequency `c·τ^(1/4)` with
/// `per_period` points.
pub fn oscillation_grid(tau_lo: f64, tau_hi: f64, c: f64, per_period: f64) -> Vec<f64> {
    let mut out = vec![tau_lo];
    let mut t = tau_lo;
    while t < tau_hi {
        t += 2.0 * PI / (c * t.powf(0.25) * per_period);
        out.push(t.min(tau_hi));
    }
    out
}

/// Fits `ψ(τ) − ψ*(τ)` of a captured trajectory against the frame reference.
pub fn fit_envelope(traj: &Trajectory<2>, f: &ScaledFrame) -> Result<EnvelopeFit> {
    let (lo, hi) = (traj.t_start(), traj.t_end());
    if !(hi >= 10.0 * lo) {
        return Err(Error::Precondition(format!("envelope fit needs a trajectory spanning a decade, got [{lo}, {hi}]")));
    }
    let taus = oscillation_grid(lo, hi, 2.0 * f.omega_lambda(), 40.0);
    let mut signal = Vec::with_capacity(taus.len());
    for &t in &taus {
        let s = ModelState::from_array(traj.interpolate(t)?);
        signal.push(s.psi - f.reference.state(t)?.psi);
    }
    fit_envelope_signal(&taus, &signal)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSweep {
    pub nu: f64,
    pub lambda: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n: usize,
    /// Starting point of the tracked root branch.
    pub branch_psi0: f64,
    pub tau0: f64,
    pub d0: f64,
}

impl ThresholdSweep {
    pub fn new(nu: f64, branch_psi0: f64) -> Self {
        ThresholdSweep { nu, lambda: 1.0, delta_min: 0.0, delta_max: 1.0, n: 21, branch_psi0, tau0: 100.0, d0: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.delta_max > self.delta_min) || !(self.lambda > 0.0) || !(self.tau0 > 0.0) || !(self.d0 > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid threshold sweep: {self:?}")));
        }
        Ok(())
    }

    pub fn delta(&self, i: usize) -> f64 {
        self.delta_min + (self.delta_max - self.delta_min) * i as f64 / (self.n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub delta: f64,
    pub psi0: f64,
    pub p_prime: f64,
    pub algebraic: Stability,
    /// Start of the dynamic test for this row.
    pub tau0: f64,
    /// `None` when the root is degenerate and no dynamic test is run.
    pub dynamic: Option<Stability>,
    pub agree: Option<bool>,
}

/// Rows whose series onset lies beyond this are reported without a dynamic test.
pub const MAX_SWEEP_TAU0: f64 = 2e4;

/// Earliest start time, not below `tau0`, with `|ψ₁| τ^(-1/2) ≤ 0.1`.
///
/// Near the threshold `ψ₁ = −λ^(1/2)/(2P′)` is large and the particular
/// solution only settles near `ψ₀` at correspondingly late times.
pub fn series_onset(tau0: f64, lambda: f64, p_prime: f64) -> f64 {
    let psi1 = lambda.sqrt() / (2.0 * p_prime.abs());
    tau0.max((psi1 / 0.1).powi(2))
}

/// Follows one root branch across δ and compares the sign of `P′` with the
/// behaviour of a perturbed particular solution over `[τ₀, 4τ₀]`, with τ₀
/// raised to [`series_onset`].
pub fn threshold_sweep(cfg: &ThresholdSweep) -> Result<Vec<ThresholdRow>> {
    cfg.validate()?;
    let mut branch = Vec::with_capacity(cfg.n);
    let mut prev = cfg.branch_psi0;
    for i in 0..cfg.n {
        let delta = cfg.delta(i);
        let pp = PhaseParams::new(delta, cfg.nu)?;
        let roots = find_roots(&pp);
        let root = roots
            .into_iter()
            .min_by(|a, b| circular_distance(a.psi0, prev).total_cmp(&circular_distance(b.psi0, prev)))
            .ok_or_else(|| Error::RootSolve(format!("no roots at delta = {delta}")))?;
        prev = root.psi0;
        branch.push((delta, root));
    }
    branch
        .par_iter()
        .map(|(delta, root)| {
            let tau0 = series_onset(cfg.tau0, cfg.lambda, root.p_prime);
            let (dynamic, agree) = if root.stability == Stability::Degenerate || tau0 > MAX_SWEEP_TAU0 {
                (None, None)
            } else {
                let p = ModelParams::new(cfg.lambda, cfg.nu, crate::model::MuSpec::leading(delta / cfg.lambda.sqrt()))?;
                let w = perturbation_witness(&p, root, cfg.d0, 0.3, tau0, 4.0 * tau0)?;
                let dynamic = if w.stays_close {
                    Stability::Stable
                } else if w.grows {
                    Stability::Unstable
                } else {
                    Stability::Degenerate
                };
                (Some(dynamic), Some(dynamic == root.stability))
            };
            Ok(ThresholdRow { delta: *delta, psi0: root.psi0, p_prime: root.p_prime, algebraic: root.stability, tau0, dynamic, agree })
        })
        .collect()
}

/// Line fit of `ln d` against `ln η`; used for decay-rate diagnostics.
pub fn decay_rate(etas: &[f64], ds: &[f64]) -> Result<f64> {
    Ok(power_law_fit(etas, ds)?.slope)
}
