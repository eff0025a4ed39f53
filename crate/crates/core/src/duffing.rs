//! Bridge between the chirped Duffing oscillator and the slow system.
//!
//! The substitution `u ≈ κρ(τ) cos(ψ(τ) − φ(t))` with `τ = εt/(2κ)` maps the
//! oscillator onto the slow system with `λ = 8αε⁻²κ²` and a decaying pump
//! `μ(τ) = c (1 + 2κτ)^(-1/2)`. The prefactor `c` is selectable, see
//! [`MuPrefactor`].

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::integrator::{integrate, IntegrationConfig, Trajectory};
use crate::model::{DuffingParams, DuffingSystem, ModelParams, ModelState, ModelSystem, MuSpec};
use crate::numeric::wrap_pm_pi;
use crate::{Error, Result};

/// Default bound `c` in `t_max ≤ c/ε`.
pub const DEFAULT_HORIZON_FACTOR: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuPrefactor {
    /// `β √(2κ) / 4`.
    #[default]
    Printed,
    /// `κβ / 2`, from first-order averaging of the oscillator.
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionResult {
    pub kappa: f64,
    pub lambda: f64,
    pub mu: MuSpec,
    pub mu_prefactor: MuPrefactor,
    /// `dτ/dt = ε/(2κ)`.
    pub slow_time_scale: f64,
    pub delta_model: f64,
    pub delta_conclusion: f64,
    pub nu: f64,
}

impl ReductionResult {
    pub fn tau_of_t(&self, t: f64) -> f64 {
        self.slow_time_scale * t
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.lambda, self.nu, self.mu.clone())
    }

    /// Slow state matching `(u, u′)` at `t = 0`, where `φ = 0` and `φ′ = 1`.
    pub fn initial_slow_state(&self, u0: f64, v0: f64) -> ModelState {
        ModelState::new(u0.hypot(v0) / self.kappa, v0.atan2(u0))
    }
}

pub fn reduce(p: &DuffingParams) -> Result<ReductionResult> {
    reduce_with(p, MuPrefactor::Printed)
}

pub fn reduce_with(p: &DuffingParams, prefactor: MuPrefactor) -> Result<ReductionResult> {
    p.validate()?;
    let kappa = (4.0 / (3.0 * p.gamma)).cbrt();
    let lambda = 8.0 * p.alpha / (p.eps * p.eps) * kappa * kappa;
    let c = match prefactor {
        MuPrefactor::Printed => p.beta * (2.0 * kappa).sqrt() / 4.0,
        MuPrefactor::Averaged => kappa * p.beta / 2.0,
    };
    let mu = MuSpec::ClosedForm { c, b: 2.0 * kappa };
    let delta_model = mu.mu0() * lambda.sqrt();
    let delta_conclusion = 2.0 * p.beta / p.eps * p.alpha.sqrt() / (3.0 * p.gamma).sqrt();
    Ok(ReductionResult {
        kappa,
        lambda,
        mu,
        mu_prefactor: prefactor,
        slow_time_scale: p.eps / (2.0 * kappa),
        delta_model,
        delta_conclusion,
        nu: p.nu,
    })
}

/// `E = u²/2 − γεu⁴/4 + u′²/2`.
pub fn energy(p: &DuffingParams, u: f64, v: f64) -> f64 {
    0.5 * u * u - 0.25 * p.gamma * p.eps * u.powi(4) + 0.5 * v * v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observable {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub e: f64,
    /// `φ(t) + Φ(t)` with Φ the unwrapped angle of `(u, u′)`; NaN where undefined.
    pub delta: f64,
}

/// E(t) and Δ(t) on the given samples. Samples at the origin of the phase
/// plane carry `delta = NaN` and do not advance the unwrapping.
pub fn observables(times: &[f64], states: &[[f64; 2]], p: &DuffingParams) -> Result<Vec<Observable>> {
    if times.is_empty() || times.len() != states.len() {
        return Err(Error::Precondition("observables need a non-empty, paired sample list".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut last: Option<f64> = None;
    for (&t, &[u, v]) in times.iter().zip(states) {
        let delta = if u == 0.0 && v == 0.0 {
            f64::NAN
        } else {
            let raw = v.atan2(u);
            let phi_big = match last {
                None => raw,
                Some(prev) => prev + wrap_pm_pi(raw - prev),
            };
            last = Some(phi_big);
            p.phase(t) + phi_big
        };
        out.push(Observable { t, u, v, e: energy(p, u, v), delta });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub t_window: f64,
    pub env_full: f64,
    pub env_model: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareOptions {
    pub horizon_factor: f64,
    pub mu_prefactor: MuPrefactor,
    /// Output sampling step in t.
    pub sample_dt: f64,
    /// Envelope window width in fast periods.
    pub window_periods: f64,
    /// Comparison range `[lo/ε, hi/ε]`.
    pub window_lo: f64,
    pub window_hi: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            horizon_factor: DEFAULT_HORIZON_FACTOR,
            mu_prefactor: MuPrefactor::Printed,
            sample_dt: 0.05,
            window_periods: 3.0,
            window_lo: 0.2,
            window_hi: 1.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

impl CompareOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.horizon_factor > 0.0
            && self.sample_dt > 0.0
            && self.window_periods > 0.0
            && 0.0 <= self.window_lo
            && self.window_lo < self.window_hi
            && self.rel_tol > 0.0
            && self.abs_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid comparison options: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuffingReport {
    pub u0: f64,
    pub v0: f64,
    pub t_max: f64,
    pub captured: bool,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Mean of E over the last quarter of the run divided by its mean over the
    /// third quarter: about 1.4 for a captured run, near 1 for a bounded one.
    pub energy_growth_final_half: f64,
    /// Width of the range of Δ over the final half of the run.
    pub delta_band_final_half: f64,
    pub delta_final: f64,
    pub max_abs_delta: f64,
    /// `None` when the run is not captured.
    pub max_rel_env_err: Option<f64>,
    /// Same comparison with the other [`MuPrefactor`].
    pub alt_prefactor_env_err: Option<f64>,
    pub psi0_observed: Option<f64>,
    pub kappa: f64,
    pub lambda: f64,
    pub delta_model: f64,
    pub delta_conclusion: f64,
    pub mu_prefactor: MuPrefactor,
    pub model_singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuffingRun {
    pub report: DuffingReport,
    pub samples: Vec<Observable>,
    pub envelope: Vec<EnvelopeRow>,
}

fn sample_times(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt).round() as usize;
    (0..=n).map(|i| (t0 + dt * i as f64).min(t1)).collect()
}

fn full_run(p: &DuffingParams, u0: f64, v0: f64, t_max: f64, opts: &CompareOptions) -> Result<Trajectory<2>> {
    let cfg = IntegrationConfig {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        max_step: TAU / 8.0,
        max_steps: 50_000_000,
        ..Default::default()
    };
    integrate(&DuffingSystem { params: p }, 0.0, [u0, v0], t_max, &cfg)
}

/// Windowed envelope of the full run against `κρ` from the slow model, or
/// `None` if the slow run hits the amplitude floor.
fn envelope_rows(
    p: &DuffingParams,
    red: &ReductionResult,
    samples: &[Observable],
    u0: f64,
    v0: f64,
    t_max: f64,
    opts: &CompareOptions,
) -> Result<Option<Vec<EnvelopeRow>>> {
    let mp = red.model_params()?;
    let s0 = red.initial_slow_state(u0, v0);
    let mcfg = IntegrationConfig { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
    let slow = integrate(&ModelSystem::new(&mp), 0.0, s0.to_array(), red.tau_of_t(t_max), &mcfg)?;
    if slow.hit_singularity() {
        return Ok(None);
    }
    let width = opts.window_periods * TAU;
    let (a, b) = (opts.window_lo / p.eps, (opts.window_hi / p.eps).min(t_max));
    let mut rows = Vec::new();
    let mut start = a;
    while start + width <= b + 1e-9 {
        let mut env_full = 0.0f64;
        let mut env_model = 0.0f64;
        for o in samples.iter().filter(|o| o.t >= start && o.t <= start + width) {
            env_full = env_full.max(o.u.abs());
            env_model = env_model.max(red.kappa * slow.interpolate(red.tau_of_t(o.t))?[0]);
        }
        rows.push(EnvelopeRow { t_window: start + 0.5 * width, env_full, env_model, rel_err: (env_full - env_model).abs() / env_model });
        start += TAU;
    }
    Ok(Some(rows))
}

/// Full oscillator against the slow model from matched initial data.
pub fn compare_envelope(p: &DuffingParams, u0: f64, v0: f64, t_max: f64, opts: &CompareOptions) -> Result<DuffingRun> {
    opts.validate()?;
    let red = reduce_with(p, opts.mu_prefactor)?;
    if !(t_max > 0.0 && t_max <= opts.horizon_factor / p.eps) {
        return Err(Error::Precondition(format!(
            "t_max must lie in (0, {}/eps] = (0, {}], got {t_max}",
            opts.horizon_factor,
            opts.horizon_factor / p.eps
        )));
    }
    let full = full_run(p, u0, v0, t_max, opts)?;
    let times = sample_times(0.0, full.t_end(), opts.sample_dt);
    let states = full.sample(&times)?;
    let samples = observables(&times, &states, p)?;

    let half = 0.5 * t_max;
    let tail: Vec<f64> = samples.iter().filter(|o| o.t >= half && o.delta.is_finite()).map(|o| o.delta).collect();
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let band = hi - lo;
    let delta_final = samples.iter().rev().find(|o| o.delta.is_finite()).map_or(f64::NAN, |o| o.delta);
    let max_abs_delta = samples.iter().filter(|o| o.delta.is_finite()).fold(0.0f64, |m, o| m.max(o.delta.abs()));
    let e0 = energy(p, u0, v0);
    let e1 = samples.last().map_or(f64::NAN, |o| o.e);
    let mean_e = |a: f64, b: f64| {
        let (sum, n) = samples.iter().filter(|o| o.t >= a && o.t < b).fold((0.0, 0usize), |(s, n), o| (s + o.e, n + 1));
        sum / n as f64
    };
    let growth = mean_e(0.75 * t_max, t_max + 1.0) / mean_e(half, 0.75 * t_max);
    let growing = e1 > 10.0 * e0.max(1e-6);
    let captured = growing && band < TAU;

    let mut envelope = Vec::new();
    let mut max_rel = None;
    let mut alt_max_rel = None;
    let mut psi0_observed = None;
    let mut model_singular = false;
    if captured {
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        psi0_observed = Some(crate::numeric::wrap_0_2pi(mean));
        match envelope_rows(p, &red, &samples, u0, v0, t_max, opts)? {
            Some(rows) => {
                max_rel = rows.iter().map(|r| r.rel_err).reduce(f64::max);
                envelope = rows;
            }
            None => model_singular = true,
        }
        let other = match opts.mu_prefactor {
            MuPrefactor::Printed => MuPrefactor::Averaged,
            MuPrefactor::Averaged => MuPrefactor::Printed,
        };
        let alt = reduce_with(p, other)?;
        alt_max_rel = envelope_rows(p, &alt, &samples, u0, v0, t_max, opts)?.and_then(|rows| rows.iter().map(|r| r.rel_err).reduce(f64::max));
    }

    Ok(DuffingRun {
        report: DuffingReport {
            u0,
            v0,
            t_max,
            captured,
            energy_initial: e0,
            energy_final: e1,
            energy_growth_final_half: growth,
            delta_band_final_half: band,
            delta_final,
            max_abs_delta,
            max_rel_env_err: max_rel,
            alt_prefactor_env_err: alt_max_rel,
            psi0_observed,
            kappa: red.kappa,
            lambda: red.lambda,
            delta_model: red.delta_model,
            delta_conclusion: red.delta_conclusion,
            mu_prefactor: red.mu_prefactor,
            model_singular,
        },
        samples,
        envelope,
    })
}

/// Runs [`compare_envelope`] for each initial datum, in input order.
pub fn survey(p: &DuffingParams, data: &[(f64, f64)], t_max: f64, opts: &CompareOptions) -> Result<Vec<DuffingRun>> {
    data.par_iter().map(|&(u0, v0)| compare_envelope(p, u0, v0, t_max, opts)).collect()
}

/// Square grid of `n × n` initial data centred on `(u, v)` with half-width `r`.
pub fn grid_around(u: f64, v: f64, r: f64, n: usize) -> Vec<(f64, f64)> {
    let axis = |c: f64, i: usize| if n == 1 { c } else { c - r + 2.0 * r * i as f64 / (n - 1) as f64 };
    (0..n).flat_map(|i| (0..n).map(move |j| (axis(u, i), axis(v, j)))).collect()
}
