//! Linear and nonlinear stability of particular solutions.
//!
//! The scaled frame is
//!
//! ```text
//! ρ = ρ*(τ) + ω₀ τ^(-1/4) R,   ψ = ψ*(τ) + Ψ,   η = (4/5) τ^(5/4)
//! ```
//!
//! with `ω₀ = P′(ψ₀)^(1/2) (4λ)^(-1/4)`. In it the captured dynamics is
//! near-Hamiltonian; [`ScaledFrame::lyapunov_v`] is the explicit Lyapunov
//! function and [`frozen_frequency`] measures the period of the `η → ∞` flow.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

use crate::asymptotics::{eval_series, Reference, SeriesCoeffs};
use crate::equilibria::{EquilibriumPoint, PhaseParams, DEGENERACY_TOL};
use crate::integrator::{integrate, integrate_with_events, Direction, Event, IntegrationConfig, StepLaw, Termination, Trajectory};
use crate::model::{ModelParams, ModelState, ModelSystem};
use crate::{Error, Result};

pub const VARKAPPA: f64 = 0.8;

pub type Mat2 = [[f64; 2]; 2];

pub fn eta_of_tau(tau: f64) -> f64 {
    VARKAPPA * tau.powf(1.25)
}

pub fn tau_of_eta(eta: f64) -> f64 {
    (eta / VARKAPPA).powf(0.8)
}

/// Jacobian of the slow system along the truncated series.
pub fn linearization_matrix(p: &ModelParams, c: &SeriesCoeffs, tau: f64) -> Result<Mat2> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("linearization needs tau > 0, got {tau}")));
    }
    let s = eval_series(c, tau);
    let mu = p.mu.eval(tau)?;
    let (rho, psi) = (s.rho, s.psi);
    let (s2, c2) = (2.0 * psi + p.nu).sin_cos();
    let (s1, c1) = psi.sin_cos();
    Ok([
        [-mu * s2, c1 - 2.0 * rho * mu * c2],
        [2.0 * rho - c1 / (rho * rho), 2.0 * mu * s2 - s1 / rho],
    ])
}

/// Roots `x ± √y` of the characteristic polynomial, `x = tr/2`, `y = tr²/4 − det`.
pub fn eigenvalues(a: &Mat2) -> (Complex64, Complex64) {
    let x = 0.5 * (a[0][0] + a[1][1]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let y = x * x - det;
    let root = Complex64::new(y, 0.0).sqrt();
    (Complex64::new(x, 0.0) + root, Complex64::new(x, 0.0) - root)
}

/// Discriminant `y = tr²/4 − det` of a 2×2 matrix.
pub fn discriminant(a: &Mat2) -> f64 {
    let x = 0.5 * (a[0][0] + a[1][1]);
    x * x - (a[0][0] * a[1][1] - a[0][1] * a[1][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledPoint {
    pub r: f64,
    pub psi: f64,
    pub eta: f64,
    pub d: f64,
}

impl ScaledPoint {
    pub fn new(r: f64, psi: f64, eta: f64) -> Self {
        ScaledPoint { r, psi, eta, d: r.hypot(psi) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFrame {
    pub omega0: f64,
    pub varkappa: f64,
    pub lambda: f64,
    pub psi0: f64,
    pub phase: PhaseParams,
    pub params: ModelParams,
    pub reference: Reference,
}

impl ScaledFrame {
    /// Frame around a stable root using the truncated series.
    pub fn new(p: &ModelParams, c: &SeriesCoeffs) -> Result<Self> {
        Self::with_reference(p, Reference::Series(c.clone()))
    }

    pub fn with_reference(p: &ModelParams, reference: Reference) -> Result<Self> {
        let c = reference.coeffs();
        if c.p_prime <= 0.0 {
            return Err(Error::Precondition(format!(
                "scaled frame needs P'(psi0) > 0, got {} at psi0 = {}",
                c.p_prime, c.psi0
            )));
        }
        Self::build(p, reference)
    }

    /// Frame with `|P′|` in place of `P′`, usable as a distance gauge around
    /// unstable roots. H and V are meaningless there.
    pub fn for_distance(p: &ModelParams, reference: Reference) -> Result<Self> {
        let c = reference.coeffs();
        if c.p_prime.abs() <= DEGENERACY_TOL {
            return Err(Error::Degenerate { psi0: c.psi0, p_prime: c.p_prime });
        }
        Self::build(p, reference)
    }

    fn build(p: &ModelParams, reference: Reference) -> Result<Self> {
        p.validate()?;
        if p.lambda <= 0.0 {
            return Err(Error::Precondition(format!("scaled frame needs lambda > 0, got {}", p.lambda)));
        }
        let c = reference.coeffs();
        let omega0 = c.p_prime.abs().sqrt() * (4.0 * p.lambda).powf(-0.25);
        Ok(ScaledFrame {
            omega0,
            varkappa: VARKAPPA,
            lambda: p.lambda,
            psi0: c.psi0,
            phase: PhaseParams { delta: c.delta, nu: p.nu },
            params: p.clone(),
            reference,
        })
    }

    /// `ω₀λ^(1/2)`, half the frozen linear frequency.
    pub fn omega_lambda(&self) -> f64 {
        self.omega0 * self.lambda.sqrt()
    }

    pub fn to_scaled(&self, tau: f64, s: ModelState) -> Result<ScaledPoint> {
        let star = self.reference.state(tau)?;
        let r = (s.rho - star.rho) * tau.powf(0.25) / self.omega0;
        Ok(ScaledPoint::new(r, s.psi - star.psi, eta_of_tau(tau)))
    }

    /// Inverse of [`to_scaled`](Self::to_scaled); returns `(τ, state)`.
    pub fn from_scaled(&self, pt: &ScaledPoint) -> Result<(f64, ModelState)> {
        if !(pt.eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {}", pt.eta)));
        }
        let tau = tau_of_eta(pt.eta);
        let star = self.reference.state(tau)?;
        Ok((tau, ModelState::new(star.rho + self.omega0 * tau.powf(-0.25) * pt.r, star.psi + pt.psi)))
    }

    /// `∫₀^Ψ P(ψ₀ + φ) dφ`.
    pub fn int_p(&self, big_psi: f64) -> f64 {
        self.phase.integral_from(self.psi0, big_psi)
    }

    pub fn h0(&self, r: f64, big_psi: f64) -> f64 {
        self.omega_lambda() * r * r + self.int_p(big_psi) / self.omega0
    }

    /// Full time-dependent Hamiltonian of the scaled system.
    pub fn hamiltonian(&self, r: f64, big_psi: f64, eta: f64) -> Result<f64> {
        let k = self.varkappa;
        let w = self.omega0;
        let tau = tau_of_eta(eta);
        let star = self.reference.state(tau)?;
        let m = self.params.mu.eval(tau)?;
        let (rs, ps) = (star.rho, star.psi);
        let nu = self.params.nu;
        let c2 = (2.0 * ps + nu).cos();
        let c2p = (2.0 * ps + 2.0 * big_psi + nu).cos();
        let s2 = (2.0 * ps + nu).sin();
        let mut h = w * k.powf(0.4) * eta.powf(-0.4) * rs * r * r;
        h += ((ps + big_psi).cos() - ps.cos() + big_psi * ps.sin()) / w;
        h += w * w * k.powf(0.6) * eta.powf(-0.6) * r.powi(3) / 3.0;
        h -= r * big_psi / (5.0 * eta);
        h -= m * rs / (2.0 * w) * (c2p - c2 - 2.0 * big_psi * s2);
        h -= k.powf(0.2) * m * eta.powf(-0.2) * (c2p - c2) * r / 2.0;
        Ok(h)
    }

    pub fn lyapunov_v(&self, r: f64, big_psi: f64, eta: f64) -> Result<f64> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        let k = self.varkappa;
        let v1 = k.powf(0.6) * r * (2.0 * self.omega0 * self.omega0 * r * r / 3.0 + self.int_p(big_psi) / self.lambda.sqrt());
        let v2 = -r * big_psi / 10.0;
        let h = self.hamiltonian(r, big_psi, eta)?;
        Ok((h + v1 * eta.powf(-0.6) + v2 / eta) / self.omega_lambda())
    }

    /// Frozen vector field `(−∂_Ψ H₀, ∂_R H₀)`.
    pub fn frozen_rhs(&self, r: f64, big_psi: f64) -> [f64; 2] {
        [-self.phase.p(self.psi0 + big_psi) / self.omega0, 2.0 * self.omega_lambda() * r]
    }

    /// `ω(h) ≈ 2ω₀λ^(1/2) + h P‴(ψ₀) / (16 ω₀² λ^(1/2))`.
    pub fn omega_formula(&self, h: f64) -> f64 {
        2.0 * self.omega_lambda() + h * self.phase.d3p(self.psi0) / (16.0 * self.omega0 * self.omega0 * self.lambda.sqrt())
    }

    /// `dω/dh` at `h = 0` including the quadratic part of `P`:
    /// `P‴/(8P′) − 5P″²/(24P′²)`. Equals the slope of
    /// [`omega_formula`](Self::omega_formula) where `P″(ψ₀) = 0`.
    pub fn omega_slope_lindstedt(&self) -> f64 {
        let p1 = self.phase.dp(self.psi0);
        let p2 = self.phase.d2p(self.psi0);
        let p3 = self.phase.d3p(self.psi0);
        p3 / (8.0 * p1) - 5.0 * p2 * p2 / (24.0 * p1 * p1)
    }

    /// Period of the linearized frozen flow in η.
    pub fn linear_period(&self) -> f64 {
        TAU / (2.0 * self.omega_lambda())
    }
}

/// `∫₀^Ψ P(ψ₀ + φ; δ, ν) dφ` in closed form.
pub fn int_p(psi0: f64, delta: f64, nu: f64, big_psi: f64) -> f64 {
    PhaseParams { delta, nu }.integral_from(psi0, big_psi)
}

pub fn hamiltonian_h0(f: &ScaledFrame, r: f64, big_psi: f64) -> f64 {
    f.h0(r, big_psi)
}

pub fn lyapunov_v(f: &ScaledFrame, r: f64, big_psi: f64, eta: f64) -> Result<f64> {
    f.lyapunov_v(r, big_psi, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSample {
    pub eta: f64,
    pub r: f64,
    pub psi: f64,
    pub d: f64,
    pub v: f64,
    pub dv_deta: f64,
}

fn scaled_at(f: &ScaledFrame, traj: &Trajectory<2>, eta: f64) -> Result<ScaledPoint> {
    let tau = tau_of_eta(eta);
    f.to_scaled(tau, ModelState::from_array(traj.interpolate(tau)?))
}

/// V and its centered finite-difference derivative at each requested η along a
/// trajectory of the slow system (stored in τ).
pub fn dv_along(f: &ScaledFrame, traj: &Trajectory<2>, etas: &[f64], step: f64) -> Result<Vec<LyapunovSample>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {step}")));
    }
    etas.iter()
        .map(|&eta| {
            let v_at = |e: f64| -> Result<f64> {
                let pt = scaled_at(f, traj, e)?;
                f.lyapunov_v(pt.r, pt.psi, e)
            };
            let pt = scaled_at(f, traj, eta)?;
            let v = f.lyapunov_v(pt.r, pt.psi, eta)?;
            let dv = (v_at(eta + step)? - v_at(eta - step)?) / (2.0 * step);
            Ok(LyapunovSample { eta, r: pt.r, psi: pt.psi, d: pt.d, v, dv_deta: dv })
        })
        .collect()
}

/// Settings of a Lyapunov decay experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovCheck {
    pub params: ModelParams,
    pub psi0: f64,
    pub d0: f64,
    /// Polar angle of the initial offset in the (R, Ψ) plane.
    pub angle: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl LyapunovCheck {
    pub fn new(params: ModelParams, psi0: f64) -> Self {
        LyapunovCheck {
            params,
            psi0,
            d0: 0.02,
            angle: 0.3,
            eta0: 1e3,
            eta1: 1e4,
            samples: 2000,
            rel_tol: 1e-12,
            abs_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub samples: Vec<LyapunovSample>,
    pub frac_positive: f64,
    pub frac_decreasing: f64,
    pub frac_sandwich: f64,
    pub fd_step: f64,
}

/// Step ceiling `coef·τ^(-1/4)` resolving the scaled oscillation in τ.
pub fn oscillation_step_law(lambda: f64, p_prime: f64, per_period: f64) -> StepLaw {
    let coef = TAU / ((4.0 * lambda).powf(0.25) * p_prime.abs().sqrt()) / per_period;
    StepLaw { coef, exponent: -0.25 }
}

/// Integrates a perturbed particular solution and samples V, dV/dη.
///
/// The reference is the backward-refined particular solution, so that the
/// truncation error of the series does not swamp the `d²/(5η)` decay rate.
pub fn lyapunov_check(cfg: &LyapunovCheck) -> Result<LyapunovReport> {
    if !(cfg.eta1 > cfg.eta0 && cfg.eta0 > 0.0 && cfg.samples >= 2 && cfg.d0 > 0.0) {
        return Err(Error::Precondition("lyapunov check needs 0 < eta0 < eta1, d0 > 0, samples >= 2".into()));
    }
    let c = crate::asymptotics::compute_coeffs(&cfg.params, cfg.psi0)?;
    let tau0 = tau_of_eta(cfg.eta0);
    let tau1 = tau_of_eta(cfg.eta1);
    let reference = Reference::best_available(&c, 0.5 * tau0, tau1 * 1.01)?;
    let frame = ScaledFrame::with_reference(&cfg.params, reference)?;
    let start = ScaledPoint::new(cfg.d0 * cfg.angle.cos(), cfg.d0 * cfg.angle.sin(), cfg.eta0);
    let (_, s0) = frame.from_scaled(&start)?;
    let icfg = IntegrationConfig {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_step_law: Some(oscillation_step_law(cfg.params.lambda, c.p_prime, 40.0)),
        max_steps: 50_000_000,
        ..Default::default()
    };
    let sys = ModelSystem::new(&cfg.params);
    let step = 1e-3 * frame.linear_period();
    let traj = integrate(&sys, tau0, s0.to_array(), tau_of_eta(cfg.eta1 + 2.0 * step), &icfg)?;
    if traj.hit_singularity() {
        return Err(Error::Precondition("perturbed trajectory hit the amplitude floor".into()));
    }
    let lo = cfg.eta0 + step;
    let hi = cfg.eta1;
    let n = cfg.samples;
    let etas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let samples = dv_along(&frame, &traj, &etas, step)?;
    let nn = samples.len() as f64;
    let frac = |pred: &dyn Fn(&LyapunovSample) -> bool| samples.iter().filter(|s| pred(s)).count() as f64 / nn;
    let frac_positive = frac(&|s| s.v > 0.0);
    let frac_decreasing = frac(&|s| s.dv_deta < 0.0);
    let frac_sandwich = frac(&|s| 0.5 * s.d * s.d <= s.v && s.v <= 1.5 * s.d * s.d);
    Ok(LyapunovReport { samples, frac_positive, frac_decreasing, frac_sandwich, fd_step: step })
}

fn frozen_config() -> IntegrationConfig {
    IntegrationConfig { rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() }
}

/// First-return time of the frozen flow from `(√(h/(ω₀λ^(1/2))), 0)`, or `None`
/// when the orbit does not close within `periods` linear periods.
fn frozen_period(f: &ScaledFrame, h: f64, periods: f64) -> Result<Option<f64>> {
    let r0 = (h / f.omega_lambda()).sqrt();
    let ff = f.clone();
    let rhs = move |_t: f64, y: &[f64; 2]| -> Result<[f64; 2]> { Ok(ff.frozen_rhs(y[0], y[1])) };
    let mut cfg = frozen_config();
    cfg.max_step = f.linear_period() / 20.0;
    let ev = Event::new(|_t, y: &[f64; 2]| y[1], Direction::Rising, true);
    // Rotating orbits leave any bounded window; stop those early.
    let escape = Event::new(|_t, y: &[f64; 2]| y[1].abs() - 2.0 * TAU, Direction::Rising, true);
    let traj = integrate_with_events(&rhs, 0.0, [r0, 0.0], periods * f.linear_period(), &cfg, &[ev, escape])?;
    Ok(match traj.termination {
        Termination::Event { index: 0, t } => Some(t),
        _ => None,
    })
}

/// `2π / T(h)` for the closed level set `H₀ = h`.
pub fn frozen_frequency(f: &ScaledFrame, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("frozen orbit level must be positive, got {h}")));
    }
    match frozen_period(f, h, 200.0)? {
        Some(t) => Ok(TAU / t),
        None => Err(Error::Domain(format!("level h = {h} is not a closed orbit of the frozen flow"))),
    }
}

pub fn omega_formula(f: &ScaledFrame, h: f64) -> f64 {
    f.omega_formula(h)
}

/// Linear-response slope `dω/dh` at `h → 0` by Richardson extrapolation of
/// `(ω(h) − 2ω₀λ^(1/2))/h` over `h` and `2h`.
pub fn frozen_slope(f: &ScaledFrame, h: f64) -> Result<f64> {
    let w0 = 2.0 * f.omega_lambda();
    let s1 = (frozen_frequency(f, h)? - w0) / h;
    let s2 = (frozen_frequency(f, 2.0 * h)? - w0) / (2.0 * h);
    Ok(2.0 * s1 - s2)
}

/// Largest level with a closed frozen orbit, located by bisection on the
/// first-return success.
pub fn closed_orbit_bound(f: &ScaledFrame, rel_tol: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = f.omega_lambda().max(1.0 / f.omega0);
    let mut guard = 0;
    while frozen_period(f, hi, 50.0)?.is_some() {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::RootSolve("no upper bound for closed frozen orbits".into()));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if frozen_period(f, mid, 50.0)?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub h: f64,
    pub omega_num: f64,
    pub omega_formula: f64,
}

/// Frozen frequency against the formula over a list of levels.
pub fn frequency_table(f: &ScaledFrame, hs: &[f64]) -> Result<Vec<FrequencyRow>> {
    hs.par_iter()
        .map(|&h| Ok(FrequencyRow { h, omega_num: frozen_frequency(f, h)?, omega_formula: f.omega_formula(h) }))
        .collect()
}

/// Outcome of perturbing a particular solution by `d0` in the scaled frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub psi0: f64,
    pub p_prime: f64,
    pub d0: f64,
    pub max_d: f64,
    pub final_d: f64,
    pub singular: bool,
    pub stays_close: bool,
    pub grows: bool,
}

/// Perturbs the particular solution of `root` at `tau0` and tracks the scaled
/// distance to it up to `tau1`.
pub fn perturbation_witness(p: &ModelParams, root: &EquilibriumPoint, d0: f64, angle: f64, tau0: f64, tau1: f64) -> Result<Witness> {
    if !(tau1 > tau0 && tau0 > 0.0) {
        return Err(Error::Precondition(format!("witness needs 0 < tau0 < tau1, got {tau0}, {tau1}")));
    }
    let c = crate::asymptotics::compute_coeffs(p, root.psi0)?;
    let reference = Reference::best_available(&c, 0.5 * tau0, tau1 * 1.01)?;
    let frame = ScaledFrame::for_distance(p, reference)?;
    let start = ScaledPoint::new(d0 * angle.cos(), d0 * angle.sin(), eta_of_tau(tau0));
    let (_, s0) = frame.from_scaled(&start)?;
    let icfg = IntegrationConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        max_step_law: Some(oscillation_step_law(p.lambda, c.p_prime, 40.0)),
        ..Default::default()
    };
    let sys = ModelSystem::new(p);
    // Once far from the reference the question is settled; stop there.
    let far = 1e3 * d0;
    let fr = frame.clone();
    let stop = Event::new(
        move |tau, y: &[f64; 2]| fr.to_scaled(tau, ModelState::from_array(*y)).map(|q| q.d - far).unwrap_or(0.0),
        Direction::Rising,
        true,
    );
    let traj = integrate_with_events(&sys, tau0, s0.to_array(), tau1, &icfg, &[stop])?;
    let n = 4000;
    let t_end = traj.t_end();
    let mut max_d: f64 = 0.0;
    let mut final_d = 0.0;
    for i in 0..=n {
        let tau = tau0 + (t_end - tau0) * i as f64 / n as f64;
        let q = frame.to_scaled(tau, ModelState::from_array(traj.interpolate(tau)?))?;
        max_d = max_d.max(q.d);
        final_d = q.d;
    }
    let singular = traj.hit_singularity();
    if singular {
        max_d = f64::INFINITY;
    }
    Ok(Witness {
        psi0: root.psi0,
        p_prime: root.p_prime,
        d0,
        max_d,
        final_d,
        singular,
        stays_close: max_d < 2.0 * d0,
        grows: max_d >= 10.0 * d0,
    })
}
