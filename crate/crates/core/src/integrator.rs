//! Adaptive Dormand–Prince 5(4) integration with the free fourth-order dense
//! output and sign-change event location.
//!
//! A right-hand side may return [`Error::Singularity`]; the integrator then
//! shrinks the step and, if the signal persists, stops and returns the usable
//! part of the trajectory flagged with [`Termination::Singularity`].

use crate::numeric::brent;
use crate::{Error, Result};

/// `dy/dt = f(t, y)` on a fixed-size state.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

impl<F, const N: usize> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        self(t, y)
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size ceiling `coef · t^exponent`, applied on top of `max_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLaw {
    pub coef: f64,
    pub exponent: f64,
}

impl StepLaw {
    fn at(&self, t: f64) -> f64 {
        self.coef * t.abs().max(f64::MIN_POSITIVE).powf(self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_step_law: Option<StepLaw>,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_step_law: None,
            max_steps: 5_000_000,
            initial_step: None,
        }
    }
}

impl IntegrationConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegrationConfig { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidParameter("max_steps must be >= 1".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        Ok(())
    }

    fn step_ceiling(&self, t: f64) -> f64 {
        match self.max_step_law {
            Some(law) => self.max_step.min(law.at(t)),
            None => self.max_step,
        }
    }
}

/// Which sign changes of an event function count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

pub type EventFn<const N: usize> = Box<dyn Fn(f64, &[f64; N]) -> f64 + Send + Sync>;

/// Scalar event `g(t, y)` located at its sign changes.
pub struct Event<const N: usize> {
    pub func: EventFn<N>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<const N: usize> Event<N> {
    pub fn new(func: impl Fn(f64, &[f64; N]) -> f64 + Send + Sync + 'static, direction: Direction, terminal: bool) -> Self {
        Event { func: Box::new(func), direction, terminal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    Event { index: usize, t: f64 },
    Singularity { t: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Dense-output coefficients of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    c: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let c = &self.c;
            out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        out
    }
}

/// Samples at accepted step boundaries plus the dense interpolant between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    times: Vec<f64>,
    states: Vec<[f64; N]>,
    segments: Vec<Segment<N>>,
    pub t_requested: f64,
    pub termination: Termination,
    pub events: Vec<EventHit<N>>,
    pub stats: Stats,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl<const N: usize> Trajectory<N> {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[[f64; N]] {
        &self.states
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn final_state(&self) -> [f64; N] {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn hit_singularity(&self) -> bool {
        matches!(self.termination, Termination::Singularity { .. })
    }

    /// Dense-output value at `t`; stored samples are returned exactly.
    pub fn interpolate(&self, t: f64) -> Result<[f64; N]> {
        let (lo, hi) = (self.t_start(), self.t_end());
        if !(t >= lo && t <= hi) {
            return Err(Error::Domain(format!("t = {t} outside trajectory span [{lo}, {hi}]")));
        }
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => Ok(self.states[i]),
            Err(i) => Ok(self.segments[i - 1].eval(t)),
        }
    }

    /// Values at an increasing list of times.
    pub fn sample(&self, ts: &[f64]) -> Result<Vec<[f64; N]>> {
        ts.iter().map(|&t| self.interpolate(t)).collect()
    }
}

/// Free-function form of [`Trajectory::interpolate`].
pub fn interpolate<const N: usize>(traj: &Trajectory<N>, t: f64) -> Result<[f64; N]> {
    traj.interpolate(t)
}

/// Integrates `sys` from `(t0, y0)` to `t1 > t0`.
pub fn integrate<S, const N: usize>(sys: &S, t0: f64, y0: [f64; N], t1: f64, cfg: &IntegrationConfig) -> Result<Trajectory<N>>
where
    S: OdeSystem<N> + ?Sized,
{
    integrate_with_events(sys, t0, y0, t1, cfg, &[])
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y: &[f64; N], y_new: &[f64; N], cfg: &IntegrationConfig) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (err[i] / sc).powi(2);
    }
    (sum / N as f64).sqrt()
}

fn is_singularity(e: &Error) -> bool {
    matches!(e, Error::Singularity { .. })
}

fn initial_step<S, const N: usize>(sys: &S, t0: f64, y0: &[f64; N], f0: &[f64; N], cfg: &IntegrationConfig, span: f64) -> f64
where
    S: OdeSystem<N> + ?Sized,
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span).min(cfg.step_ceiling(t0));
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let d2 = match sys.rhs(t0 + h0, &y1) {
        Ok(f1) => {
            let mut s = 0.0;
            for i in 0..N {
                let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
                s += ((f1[i] - f0[i]) / sc).powi(2);
            }
            (s / N as f64).sqrt() / h0
        }
        Err(_) => return h0 * 1e-3,
    };
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
    (100.0 * h0).min(h1).min(span).min(cfg.step_ceiling(t0))
}

/// Integrates with event detection. Terminal events truncate the trajectory at
/// the located root.
pub fn integrate_with_events<S, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    cfg: &IntegrationConfig,
    events: &[Event<N>],
) -> Result<Trajectory<N>>
where
    S: OdeSystem<N> + ?Sized,
{
    cfg.validate()?;
    if !(t1 > t0) {
        return Err(Error::Precondition(format!("integration needs t1 > t0, got t0 = {t0}, t1 = {t1}")));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("initial state must be finite".into()));
    }

    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0],
        segments: Vec::new(),
        t_requested: t1,
        termination: Termination::Completed,
        events: Vec::new(),
        stats: Stats::default(),
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
    };

    let mut k1 = match sys.rhs(t0, &y0) {
        Ok(f) => f,
        Err(e) if is_singularity(&e) => {
            traj.termination = Termination::Singularity { t: t0 };
            return Ok(traj);
        }
        Err(e) => return Err(e),
    };
    traj.stats.rhs_evals += 1;

    let span = t1 - t0;
    let mut h = cfg.initial_step.unwrap_or_else(|| initial_step(sys, t0, &y0, &k1, cfg, span));
    let mut t = t0;
    let mut y = y0;
    let mut g_prev: Vec<f64> = events.iter().map(|ev| (ev.func)(t0, &y0)).collect();
    let mut last_rejected = false;
    let mut singular_retries = 0usize;
    let h_floor = |t: f64| 16.0 * f64::EPSILON * t.abs().max(1.0);

    loop {
        if traj.stats.accepted + traj.stats.rejected >= cfg.max_steps {
            return Err(Error::Budget { max_steps: cfg.max_steps, t });
        }
        h = h.min(cfg.step_ceiling(t));
        let last = t + h >= t1 || (t1 - (t + h)) < h_floor(t1);
        if last {
            h = t1 - t;
        }

        let stages = (|| -> Result<_> {
            let k2 = sys.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = sys.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = sys.rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = sys.rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = sys.rhs(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
            let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = sys.rhs(t + h, &y_new)?;
            Ok((k2, k3, k4, k5, k6, k7, y_new))
        })();

        let (_k2, k3, k4, k5, k6, k7, y_new) = match stages {
            Ok(v) => {
                traj.stats.rhs_evals += 6;
                singular_retries = 0;
                v
            }
            Err(e) if is_singularity(&e) => {
                singular_retries += 1;
                h *= 0.25;
                if h < h_floor(t) || singular_retries > 60 {
                    traj.termination = Termination::Singularity { t };
                    return Ok(traj);
                }
                traj.stats.rejected += 1;
                last_rejected = true;
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, cfg);
        if !en.is_finite() {
            h *= 0.1;
            traj.stats.rejected += 1;
            last_rejected = true;
            if h < h_floor(t) {
                return Err(Error::StepUnderflow { t, h });
            }
            continue;
        }

        if en <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            let mut c = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                c[0][i] = y[i];
                c[1][i] = ydiff;
                c[2][i] = bspl;
                c[3][i] = ydiff - h * k7[i] - bspl;
                c[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let seg = Segment { t0: t, h, c };
            traj.stats.accepted += 1;

            // Events: earliest terminal root inside (t, t_new].
            let mut terminal: Option<(f64, usize)> = None;
            let mut hits: Vec<EventHit<N>> = Vec::new();
            for (idx, ev) in events.iter().enumerate() {
                let g0 = g_prev[idx];
                let g1 = (ev.func)(t_new, &y_new);
                let crossed = match ev.direction {
                    Direction::Rising => g0 < 0.0 && g1 >= 0.0,
                    Direction::Falling => g0 > 0.0 && g1 <= 0.0,
                    Direction::Either => (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0),
                };
                g_prev[idx] = g1;
                if !crossed {
                    continue;
                }
                let te = if g1 == 0.0 {
                    t_new
                } else {
                    brent(|s| (ev.func)(s, &seg.eval(s)), t, t_new, 1e-15 * t_new.abs().max(1.0), 200)?
                };
                let ye = if te == t_new { y_new } else { seg.eval(te) };
                hits.push(EventHit { index: idx, t: te, y: ye });
                if ev.terminal && terminal.is_none_or(|(tt, _)| te < tt) {
                    terminal = Some((te, idx));
                }
            }
            hits.sort_by(|a, b| a.t.total_cmp(&b.t));

            traj.segments.push(seg);
            if let Some((te, idx)) = terminal {
                traj.events.extend(hits.into_iter().filter(|hit| hit.t <= te));
                let ye = if te == t_new { y_new } else { seg.eval(te) };
                if te > t {
                    traj.times.push(te);
                    traj.states.push(ye);
                } else {
                    traj.segments.pop();
                }
                traj.termination = Termination::Event { index: idx, t: te };
                return Ok(traj);
            }
            traj.events.extend(hits);
            traj.times.push(t_new);
            traj.states.push(y_new);

            if last {
                return Ok(traj);
            }
            t = t_new;
            y = y_new;
            k1 = k7;

            let mut fac = 0.9 * en.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            traj.stats.rejected += 1;
            let fac = (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
            last_rejected = true;
            if h < h_floor(t) {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
}
