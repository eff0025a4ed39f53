use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use autores_core::asymptotics::{compute_coeffs, compute_coeffs_with, eval_series, residual, SeriesOptions, PSI_RESIDUAL_ORDER, RHO_RESIDUAL_ORDER};
use autores_core::capture::{
    basin_scan, classify_trajectory, simulate as run_slow, threshold_sweep as sweep, BasinGrid, ThresholdSweep, VerdictKind,
};
use autores_core::duffing::survey;
use autores_core::equilibria::{bifurcation_scan as scan, ell, find_roots, region, threshold_delta, EquilibriumPoint, PhaseParams, ScanGrid};
use autores_core::integrator::{integrate, IntegrationConfig};
use autores_core::model::{demo_es_exact, demo_es_linearization, DemoEsSystem, ModelParams, ModelState};
use autores_core::numeric::{circular_distance, power_law_fit};
use autores_core::stability::{closed_orbit_bound, frozen_frequency, frozen_slope, lyapunov_check as check_v, LyapunovCheck, ScaledFrame};

use crate::config::{ExperimentConfig, Start};
use crate::error::CliError;
use crate::output::{num, opt_num, Outputs};

/// Largest circular distance at which a requested `psi0` is snapped to a root.
const SNAP_TOL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Equilibria,
    BifurcationScan,
    Simulate,
    Basin,
    LyapunovCheck,
    FreqCheck,
    ThresholdSweep,
    Duffing,
    DemoEs,
    Asymptotics,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Equilibria => "equilibria",
            Kind::BifurcationScan => "bifurcation-scan",
            Kind::Simulate => "simulate",
            Kind::Basin => "basin",
            Kind::LyapunovCheck => "lyapunov-check",
            Kind::FreqCheck => "freq-check",
            Kind::ThresholdSweep => "threshold-sweep",
            Kind::Duffing => "duffing",
            Kind::DemoEs => "demo-es",
            Kind::Asymptotics => "asymptotics",
        }
    }
}

/// Validates the sections used by `kind` and, unless `dry_run`, computes.
/// Returns `None` on a dry run.
pub fn run(kind: Kind, cfg: &ExperimentConfig, delta: Option<f64>, dry_run: bool) -> Result<Option<Outputs>, CliError> {
    let mut out = Outputs::default();
    let done = match kind {
        Kind::Equilibria => equilibria(cfg, delta, dry_run, &mut out)?,
        Kind::BifurcationScan => bifurcation_scan(cfg, dry_run, &mut out)?,
        Kind::Simulate => simulate(cfg, dry_run, &mut out)?,
        Kind::Basin => basin(cfg, dry_run, &mut out)?,
        Kind::LyapunovCheck => lyapunov_check(cfg, dry_run, &mut out)?,
        Kind::FreqCheck => freq_check(cfg, dry_run, &mut out)?,
        Kind::ThresholdSweep => threshold_sweep(cfg, dry_run, &mut out)?,
        Kind::Duffing => duffing(cfg, dry_run, &mut out)?,
        Kind::DemoEs => demo_es(cfg, dry_run, &mut out)?,
        Kind::Asymptotics => asymptotics(cfg, dry_run, &mut out)?,
    };
    Ok(done.then_some(out))
}

fn echo(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("config sections serialize")
}

fn phase_of(p: &ModelParams) -> Result<PhaseParams, CliError> {
    Ok(PhaseParams::from_model(p)?)
}

/// Root of `P` nearest to `psi0` on the circle.
fn snap_root(p: &ModelParams, psi0: f64) -> Result<EquilibriumPoint, CliError> {
    let roots = find_roots(&phase_of(p)?);
    let best = roots
        .into_iter()
        .min_by(|a, b| circular_distance(a.psi0, psi0).total_cmp(&circular_distance(b.psi0, psi0)))
        .ok_or_else(|| CliError::Precondition("phase equation has no roots".into()))?;
    if circular_distance(best.psi0, psi0) > SNAP_TOL {
        return Err(CliError::Precondition(format!("no root of P within {SNAP_TOL} of psi0 = {psi0} (nearest {})", best.psi0)));
    }
    Ok(best)
}

fn require(ok: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn equilibria(cfg: &ExperimentConfig, delta: Option<f64>, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let pp = match delta {
        Some(d) => PhaseParams::new(d, cfg.model.nu)?,
        None => phase_of(&cfg.model.params()?)?,
    };
    if dry {
        return Ok(false);
    }
    let roots = find_roots(&pp);
    let l = ell(&pp);
    let reg = region(&pp);
    out.say(format!("delta = {}  nu = {}  ell = {}  region = {}  roots = {}", num(pp.delta), num(pp.nu), num(l), reg.label(), roots.len()));
    out.say("psi0                 P'                   stability");
    for r in &roots {
        out.say(format!("{:<20} {:<20} {}", num(r.psi0), num(r.p_prime), r.stability.label()));
    }
    let params = json!({ "delta": pp.delta, "nu": pp.nu, "ell": l, "region": reg.label() });
    let rows = roots
        .iter()
        .map(|r| vec![num(r.psi0), num(r.p_prime), num(r.p_double_prime), num(r.p_triple_prime), r.stability.label().into()])
        .collect();
    out.csv("equilibria.csv", "equilibria", &params, &["psi0", "p_prime", "p_double_prime", "p_triple_prime", "stability"], rows)?;
    Ok(true)
}

fn bifurcation_scan(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let s = &cfg.scan;
    let grid = ScanGrid { delta_min: s.delta_min, delta_max: s.delta_max, delta_n: s.delta_n, nu_n: s.nu_n };
    grid.validate()?;
    if dry {
        return Ok(false);
    }
    let rows = scan(&grid)?;
    let mut cols = vec!["delta", "nu", "ell", "region", "n_roots"];
    cols.extend(["psi0_1", "psi0_2", "psi0_3", "psi0_4", "stab_1", "stab_2", "stab_3", "stab_4"]);
    let table = rows
        .iter()
        .map(|r| {
            let mut row = vec![num(r.delta), num(r.nu), num(r.ell), r.region.label().into(), r.roots.len().to_string()];
            row.extend((0..4).map(|k| r.roots.get(k).map(|e| num(e.psi0)).unwrap_or_default()));
            row.extend((0..4).map(|k| r.roots.get(k).map(|e| e.stability.label().to_string()).unwrap_or_default()));
            row
        })
        .collect();
    out.csv("bifurcation_scan.csv", "bifurcation-scan", &echo(json!({ "scan": s })), &cols, table)?;
    out.say(format!("{} grid points written", rows.len()));
    Ok(true)
}

fn integration_config(cfg: &ExperimentConfig) -> Result<IntegrationConfig, CliError> {
    let c = IntegrationConfig {
        rel_tol: cfg.run.rel_tol,
        abs_tol: cfg.run.abs_tol,
        max_steps: cfg.run.max_steps,
        ..Default::default()
    };
    c.validate()?;
    Ok(c)
}

fn check_window(tau0: f64, tau_max: f64) -> Result<(), CliError> {
    require(tau0 > 0.0 && tau0.is_finite(), format!("run.tau0 must be positive, got {tau0}"))?;
    if tau_max.is_nan() || tau_max < 4.0 * tau0 {
        return Err(CliError::Precondition(format!("classification needs tau_max >= 4 tau0, got tau0 = {tau0}, tau_max = {tau_max}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateResult {
    tau0: f64,
    start: ModelState,
    verdict: autores_core::capture::CaptureVerdict,
    roots: Vec<EquilibriumPoint>,
}

fn simulate(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let p = cfg.model.params()?;
    let icfg = integration_config(cfg)?;
    let r = &cfg.run;
    check_window(r.tau0, r.tau_max)?;
    require(r.samples >= 2, "run.samples must be >= 2")?;
    let s0 = match r.start {
        Start::Series { psi0 } => {
            let root = snap_root(&p, psi0)?;
            eval_series(&compute_coeffs(&p, root.psi0)?, r.tau0)
        }
        Start::State { rho, psi } => {
            require(rho.is_finite() && psi.is_finite() && rho > 0.0, "run.start needs finite rho > 0 and psi")?;
            ModelState::new(rho, psi)
        }
    };
    if dry {
        return Ok(false);
    }
    let roots = if p.lambda > 0.0 { find_roots(&phase_of(&p)?) } else { Vec::new() };
    let traj = run_slow(&p, r.tau0, s0, r.tau_max, &icfg)?;
    let verdict = classify_trajectory(&traj, &p, &roots)?;
    let (a, b) = (traj.t_start(), traj.t_end());
    let n = r.samples;
    let taus: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let states = traj.sample(&taus)?;
    let params = echo(json!({ "model": cfg.model, "run": cfg.run }));
    let rows = taus.iter().zip(&states).map(|(t, y)| vec![num(*t), num(y[0]), num(y[1])]).collect();
    out.csv("trajectory.csv", "simulate", &params, &["tau", "rho", "psi"], rows)?;
    out.say(format!("verdict: {}", verdict.kind.label()));
    out.json("verdict.json", "simulate", &params, &SimulateResult { tau0: r.tau0, start: s0, verdict, roots })?;
    Ok(true)
}

fn basin(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let p = cfg.model.params()?;
    let icfg = integration_config(cfg)?;
    check_window(cfg.run.tau0, cfg.run.tau_max)?;
    let b = &cfg.basin;
    let grid = BasinGrid { rho_min: b.rho_min, rho_max: b.rho_max, rho_n: b.rho_n, psi_min: b.psi_min, psi_max: b.psi_max, psi_n: b.psi_n };
    grid.validate()?;
    if dry {
        return Ok(false);
    }
    let rows = basin_scan(&p, cfg.run.tau0, &grid, cfg.run.tau_max, &icfg)?;
    let captured = rows.iter().filter(|r| r.verdict.kind.is_captured()).count();
    let table = rows
        .iter()
        .map(|r| {
            let locked = match r.verdict.kind {
                VerdictKind::Captured { psi0_value, .. } => num(psi0_value),
                _ => String::new(),
            };
            vec![num(r.rho0), num(r.psi0_init), r.verdict.kind.label().into(), locked, num(r.verdict.tail_amp_ratio), num(r.verdict.max_drift)]
        })
        .collect();
    let params = echo(json!({ "model": cfg.model, "run": cfg.run, "basin": b }));
    let cols = ["rho0", "psi0_init", "verdict", "psi0_locked", "tail_amp_ratio", "max_drift"];
    out.csv("basin.csv", "basin", &params, &cols, table)?;
    out.say(format!("{captured} of {} initial data captured", rows.len()));
    Ok(true)
}

#[derive(Serialize)]
struct LyapunovResult {
    psi0: f64,
    frac_positive: f64,
    frac_decreasing: f64,
    frac_sandwich: f64,
    fd_step: f64,
}

fn lyapunov_check(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let p = cfg.model.params()?;
    let l = &cfg.lyapunov;
    require(l.d0 > 0.0 && l.eta0 > 0.0 && l.eta1 > l.eta0 && l.samples >= 2, "lyapunov needs d0 > 0, 0 < eta0 < eta1, samples >= 2")?;
    require(l.rel_tol > 0.0 && l.abs_tol > 0.0, "lyapunov tolerances must be positive")?;
    let root = snap_root(&p, l.psi0)?;
    if dry {
        return Ok(false);
    }
    let check = LyapunovCheck {
        params: p,
        psi0: root.psi0,
        d0: l.d0,
        angle: l.angle,
        eta0: l.eta0,
        eta1: l.eta1,
        samples: l.samples,
        rel_tol: l.rel_tol,
        abs_tol: l.abs_tol,
    };
    let rep = check_v(&check)?;
    let params = echo(json!({ "model": cfg.model, "lyapunov": l }));
    let rows = rep.samples.iter().map(|s| vec![num(s.eta), num(s.r), num(s.psi), num(s.d), num(s.v), num(s.dv_deta)]).collect();
    out.csv("lyapunov.csv", "lyapunov-check", &params, &["eta", "R", "Psi", "d", "V", "dVdeta"], rows)?;
    let res = LyapunovResult {
        psi0: root.psi0,
        frac_positive: rep.frac_positive,
        frac_decreasing: rep.frac_decreasing,
        frac_sandwich: rep.frac_sandwich,
        fd_step: rep.fd_step,
    };
    out.say(format!(
        "V > 0: {}  dV/deta < 0: {}  0.5 d^2 <= V <= 1.5 d^2: {}",
        num(res.frac_positive),
        num(res.frac_decreasing),
        num(res.frac_sandwich)
    ));
    out.json("lyapunov.json", "lyapunov-check", &params, &res)?;
    Ok(true)
}

#[derive(Serialize)]
struct FreqResult {
    psi0: f64,
    omega0: f64,
    omega_limit: f64,
    slope_h: f64,
    slope_measured: f64,
    slope_formula: f64,
    slope_lindstedt: f64,
    closed_orbit_bound: f64,
}

fn freq_check(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let p = cfg.model.params()?;
    let f = &cfg.freq;
    require(!f.h.is_empty() && f.h.iter().all(|h| *h > 0.0 && h.is_finite()), "freq.h must be a non-empty list of positive levels")?;
    require(f.slope_h > 0.0, "freq.slope_h must be positive")?;
    let root = snap_root(&p, f.psi0)?;
    let frame = ScaledFrame::new(&p, &compute_coeffs(&p, root.psi0)?)?;
    if dry {
        return Ok(false);
    }
    let omega: Vec<Option<f64>> = f.h.par_iter().map(|&h| frozen_frequency(&frame, h).ok()).collect();
    let params = echo(json!({ "model": cfg.model, "freq": f }));
    let rows = f.h.iter().zip(&omega).map(|(&h, w)| vec![num(h), opt_num(*w), num(frame.omega_formula(h))]).collect();
    out.csv("freq.csv", "freq-check", &params, &["h", "omega_num", "omega_formula"], rows)?;
    let res = FreqResult {
        psi0: root.psi0,
        omega0: frame.omega0,
        omega_limit: 2.0 * frame.omega_lambda(),
        slope_h: f.slope_h,
        slope_measured: frozen_slope(&frame, f.slope_h)?,
        slope_formula: root.p_triple_prime / (16.0 * frame.omega0 * frame.omega0 * p.lambda.sqrt()),
        slope_lindstedt: frame.omega_slope_lindstedt(),
        closed_orbit_bound: closed_orbit_bound(&frame, 1e-6)?,
    };
    for (h, w) in f.h.iter().zip(&omega) {
        out.say(format!("h = {}  omega_num = {}  omega_formula = {}", num(*h), opt_num(*w), num(frame.omega_formula(*h))));
    }
    out.say(format!("limit 2 omega0 lambda^(1/2) = {}", num(res.omega_limit)));
    out.json("freq.json", "freq-check", &params, &res)?;
    Ok(true)
}

fn threshold_sweep(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let t = &cfg.threshold;
    require(cfg.model.lambda > 0.0, "threshold sweep needs lambda > 0")?;
    let sw = ThresholdSweep {
        nu: cfg.model.nu,
        lambda: cfg.model.lambda,
        delta_min: t.delta_min,
        delta_max: t.delta_max,
        n: t.n,
        branch_psi0: t.branch_psi0,
        tau0: t.tau0,
        d0: t.d0,
    };
    sw.validate()?;
    let td = threshold_delta(cfg.model.nu)?;
    if dry {
        return Ok(false);
    }
    let rows = sweep(&sw)?;
    let opt_label = |s: Option<autores_core::equilibria::Stability>| s.map(|s| s.label().to_string()).unwrap_or_default();
    let table = rows
        .iter()
        .map(|r| {
            vec![
                num(r.delta),
                num(r.p_prime),
                r.algebraic.label().into(),
                opt_label(r.dynamic),
                r.agree.map(|a| a.to_string()).unwrap_or_default(),
                num(r.psi0),
                num(r.tau0),
            ]
        })
        .collect();
    let params = echo(json!({ "model": { "lambda": cfg.model.lambda, "nu": cfg.model.nu }, "threshold": t }));
    out.csv("threshold.csv", "threshold-sweep", &params, &["delta", "p_prime", "algebraic", "dynamic", "agree", "psi0", "tau0"], table)?;
    let tested = rows.iter().filter(|r| r.agree.is_some()).count();
    let agree = rows.iter().filter(|r| r.agree == Some(true)).count();
    out.say(format!("threshold delta = {}; {agree} of {tested} tested rows agree", num(td)));
    Ok(true)
}

fn duffing(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let d = &cfg.duffing;
    let p = d.params();
    p.validate()?;
    d.compare.validate()?;
    require(!d.data.is_empty(), "duffing.data needs at least one initial datum")?;
    require(d.data.iter().flatten().all(|x| x.is_finite()), "duffing.data must be finite")?;
    if !(d.t_max > 0.0 && d.t_max <= d.compare.horizon_factor / p.eps) {
        return Err(CliError::Precondition(format!(
            "t_max must lie in (0, {}/eps] = (0, {}], got {}",
            d.compare.horizon_factor,
            d.compare.horizon_factor / p.eps,
            d.t_max
        )));
    }
    if dry {
        return Ok(false);
    }
    let data: Vec<(f64, f64)> = d.data.iter().map(|[u, v]| (*u, *v)).collect();
    let runs = survey(&p, &data, d.t_max, &d.compare)?;
    let params = echo(json!({ "duffing": d }));
    for (i, run) in runs.iter().enumerate() {
        let rows = run.samples.iter().map(|o| vec![num(o.t), num(o.u), num(o.v), num(o.e), num(o.delta)]).collect();
        out.csv(&format!("duffing_{i}.csv"), "duffing", &params, &["t", "u", "v", "E", "Delta"], rows)?;
        let env = run.envelope.iter().map(|r| vec![num(r.t_window), num(r.env_full), num(r.env_model), num(r.rel_err)]).collect();
        out.csv(&format!("duffing_envelope_{i}.csv"), "duffing", &params, &["t_window", "env_full", "env_model", "rel_err"], env)?;
        let r = &run.report;
        out.say(format!(
            "datum {i} ({}, {}): {}  band = {}  max envelope error = {}",
            num(r.u0),
            num(r.v0),
            if r.captured { "captured" } else { "not captured" },
            num(r.delta_band_final_half),
            opt_num(r.max_rel_env_err)
        ));
    }
    let reports: Vec<_> = runs.iter().map(|r| &r.report).collect();
    out.json("duffing.json", "duffing", &params, &reports)?;
    Ok(true)
}

#[derive(Serialize)]
struct DemoResult {
    t1: f64,
    final_state: [f64; 2],
    exact: [f64; 2],
    rel_err: [f64; 2],
    eigenvalues_negative: bool,
    growth_ratio: f64,
}

fn demo_es(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let d = &cfg.demo_es;
    require([d.a0, d.b0, d.t0, d.t1].iter().all(|x| x.is_finite()), "demo_es values must be finite")?;
    require(d.t0 > 0.0 && d.t1 > d.t0, "demo_es needs 0 < t0 < t1")?;
    require(d.samples >= 2, "demo_es.samples must be >= 2")?;
    let icfg = IntegrationConfig::with_tolerances(d.rel_tol, d.abs_tol);
    icfg.validate()?;
    if dry {
        return Ok(false);
    }
    let y0 = demo_es_exact(d.a0, d.b0, d.t0)?;
    let traj = integrate(&DemoEsSystem, d.t0, y0, d.t1, &icfg)?;
    let n = d.samples;
    let ts: Vec<f64> = (0..n).map(|i| d.t0 + (d.t1 - d.t0) * i as f64 / (n - 1) as f64).collect();
    let ys = traj.sample(&ts)?;
    let mut rows = Vec::with_capacity(n);
    let mut negative = true;
    for (&t, y) in ts.iter().zip(&ys) {
        let ex = demo_es_exact(d.a0, d.b0, t)?;
        let a = demo_es_linearization(t)?;
        negative &= a[0][0] < 0.0 && a[1][1] < 0.0 && a[0][1] == 0.0 && a[1][0] == 0.0;
        rows.push(vec![num(t), num(y[0]), num(y[1]), num(ex[0]), num(ex[1]), num(a[0][0]), num(a[1][1])]);
    }
    let params = echo(json!({ "demo_es": d }));
    out.csv("demo_es.csv", "demo-es", &params, &["t", "a", "b", "a_exact", "b_exact", "eig1", "eig2"], rows)?;
    let fin = traj.final_state();
    let exact = demo_es_exact(d.a0, d.b0, d.t1)?;
    let rel = |i: usize| ((fin[i] - exact[i]) / exact[i]).abs();
    let res = DemoResult {
        t1: d.t1,
        final_state: fin,
        exact,
        rel_err: [rel(0), rel(1)],
        eigenvalues_negative: negative,
        growth_ratio: fin[0] / y0[0],
    };
    out.say(format!(
        "t = {}: a = {} (exact {}), b = {} (exact {}); eigenvalues negative at all samples: {}",
        num(d.t1),
        num(fin[0]),
        num(exact[0]),
        num(fin[1]),
        num(exact[1]),
        negative
    ));
    out.json("demo_es.json", "demo-es", &params, &res)?;
    Ok(true)
}

#[derive(Serialize)]
struct AsymptoticsResult {
    psi0: f64,
    p_prime: f64,
    rho_slope: f64,
    psi_slope: f64,
    rho_expected: f64,
    psi_expected: f64,
}

fn asymptotics(cfg: &ExperimentConfig, dry: bool, out: &mut Outputs) -> Result<bool, CliError> {
    let p = cfg.model.params()?;
    let a = &cfg.asymptotics;
    require(a.tau_min > 0.0 && a.tau_max > a.tau_min && a.n >= 2, "asymptotics needs 0 < tau_min < tau_max and n >= 2")?;
    let root = snap_root(&p, a.psi0)?;
    let c = compute_coeffs_with(&p, root.psi0, SeriesOptions { mu_index_as_printed: a.mu_index_as_printed })?;
    if dry {
        return Ok(false);
    }
    let params = echo(json!({ "model": cfg.model, "asymptotics": a }));
    let coeffs = vec![vec![num(c.psi0), num(c.rho_m1), num(c.rho[2]), num(c.rho[3]), num(c.psi[1]), num(c.psi[2]), num(c.psi[3])]];
    out.csv("asymptotics_coeffs.csv", "asymptotics", &params, &["psi0", "rho_m1", "rho2", "rho3", "psi1", "psi2", "psi3"], coeffs)?;
    let taus: Vec<f64> = (0..a.n).map(|i| a.tau_min * (a.tau_max / a.tau_min).powf(i as f64 / (a.n - 1) as f64)).collect();
    let res: Vec<(f64, f64)> = taus.iter().map(|&t| residual(&c, t)).collect::<Result<_, _>>()?;
    let rows = taus.iter().zip(&res).map(|(t, (rr, rp))| vec![num(*t), num(*rr), num(*rp)]).collect();
    out.csv("asymptotics_residual.csv", "asymptotics", &params, &["tau", "r_rho", "r_psi"], rows)?;
    let abs = |k: usize| -> Vec<f64> { res.iter().map(|r| if k == 0 { r.0.abs() } else { r.1.abs() }).collect() };
    let result = AsymptoticsResult {
        psi0: c.psi0,
        p_prime: c.p_prime,
        rho_slope: power_law_fit(&taus, &abs(0))?.slope,
        psi_slope: power_law_fit(&taus, &abs(1))?.slope,
        rho_expected: -RHO_RESIDUAL_ORDER,
        psi_expected: -PSI_RESIDUAL_ORDER,
    };
    out.say(format!(
        "residual slopes over [{}, {}]: rho {} (expected {}), psi {} (expected {})",
        num(a.tau_min),
        num(a.tau_max),
        num(result.rho_slope),
        num(result.rho_expected),
        num(result.psi_slope),
        num(result.psi_expected)
    ));
    out.json("asymptotics.json", "asymptotics", &params, &result)?;
    Ok(true)
}
