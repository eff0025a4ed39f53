//! Algebra of the phase equation `P(ψ; δ, ν) = δ sin(2ψ + ν) − sin ψ = 0`.
//!
//! Roots of `P` are the limiting phases ψ₀ of the particular autoresonant
//! solutions; `P′(ψ₀) > 0` marks a stable one and `P′(ψ₀) < 0` an unstable one.
//! The curves `ℓ(δ, ν) = (4δ² − 1)³ − 27 δ² sin²ν = 0` separate the parameter
//! regions with two and four roots.
//!
//! Which region carries four roots is measured, not assumed: the scan in
//! [`bifurcation_scan`] reports the count next to the sign of `ℓ`. Measured
//! counts are four roots where `ℓ > 0` (e.g. `|δ| > 1/2` at `ν = 0`) and two
//! where `ℓ < 0`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::model::ModelParams;
use crate::numeric::{brent, circular_distance, wrap_0_2pi};
use crate::{Error, Result};

/// Default number of scan panels on `[0, 2π)`.
pub const DEFAULT_PANELS: usize = 1440;
/// |P′| at or below this is classified as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Refined roots satisfy |P| below this.
pub const ROOT_TOL: f64 = 1e-12;
/// Roots closer than this (on the circle) are merged.
pub const DEDUP_TOL: f64 = 1e-8;
/// |ℓ| below this places (δ, ν) on a bifurcation curve.
pub const GAMMA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseParams {
    pub delta: f64,
    pub nu: f64,
}

impl PhaseParams {
    pub fn new(delta: f64, nu: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be finite, got {delta}")));
        }
        if !(0.0..PI).contains(&nu) {
            return Err(Error::InvalidParameter(format!("nu must lie in [0, pi), got {nu}")));
        }
        Ok(PhaseParams { delta, nu })
    }

    /// δ = μ₀ λ^(1/2) from the model parameters.
    pub fn from_model(p: &ModelParams) -> Result<Self> {
        PhaseParams::new(p.delta()?, p.nu)
    }

    pub fn p(&self, psi: f64) -> f64 {
        self.delta * (2.0 * psi + self.nu).sin() - psi.sin()
    }

    pub fn dp(&self, psi: f64) -> f64 {
        2.0 * self.delta * (2.0 * psi + self.nu).cos() - psi.cos()
    }

    pub fn d2p(&self, psi: f64) -> f64 {
        -4.0 * self.delta * (2.0 * psi + self.nu).sin() + psi.sin()
    }

    pub fn d3p(&self, psi: f64) -> f64 {
        -8.0 * self.delta * (2.0 * psi + self.nu).cos() + psi.cos()
    }

    /// `∫₀^Ψ P(ψ₀ + φ) dφ` in closed form.
    pub fn integral_from(&self, psi0: f64, big_psi: f64) -> f64 {
        let a = 2.0 * psi0 + self.nu;
        -0.5 * self.delta * ((a + 2.0 * big_psi).cos() - a.cos()) + (psi0 + big_psi).cos() - psi0.cos()
    }
}

/// Derivative of order 0..=3 of `P` with respect to ψ.
///
/// # Panics
/// If `order > 3`.
pub fn p_eval(psi: f64, pp: &PhaseParams, order: usize) -> f64 {
    match order {
        0 => pp.p(psi),
        1 => pp.dp(psi),
        2 => pp.d2p(psi),
        3 => pp.d3p(psi),
        _ => panic!("p_eval supports derivative orders 0..=3, got {order}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
}

impl Stability {
    pub fn classify(p_prime: f64) -> Self {
        if p_prime > DEGENERACY_TOL {
            Stability::Stable
        } else if p_prime < -DEGENERACY_TOL {
            Stability::Unstable
        } else {
            Stability::Degenerate
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub psi0: f64,
    pub p_prime: f64,
    pub p_double_prime: f64,
    pub p_triple_prime: f64,
    pub stability: Stability,
}

impl EquilibriumPoint {
    pub fn at(pp: &PhaseParams, psi0: f64) -> Self {
        let psi0 = wrap_0_2pi(psi0);
        let p_prime = pp.dp(psi0);
        EquilibriumPoint {
            psi0,
            p_prime,
            p_double_prime: pp.d2p(psi0),
            p_triple_prime: pp.d3p(psi0),
            stability: Stability::classify(p_prime),
        }
    }
}

fn bisect_newton(pp: &PhaseParams, mut a: f64, mut b: f64) -> f64 {
    let mut fa = pp.p(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        if b - a <= 1e-11 {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = pp.p(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..8 {
        let d = pp.dp(x);
        if d == 0.0 {
            break;
        }
        let step = pp.p(x) / d;
        let nx = x - step;
        if nx < a - 1e-9 || nx > b + 1e-9 {
            break;
        }
        x = nx;
        if step.abs() < 1e-16 {
            break;
        }
    }
    x
}

/// All roots of `P(·; δ, ν)` on `[0, 2π)`, sorted, using the default panel count.
pub fn find_roots(pp: &PhaseParams) -> Vec<EquilibriumPoint> {
    find_roots_with(pp, DEFAULT_PANELS)
}

/// Root census with an explicit panel count.
///
/// Simple roots are bracketed by sign changes on a uniform scan; tangential
/// roots (on Γ±) are picked up as extrema of `P` with |P| below [`ROOT_TOL`]
/// and come out as [`Stability::Degenerate`].
pub fn find_roots_with(pp: &PhaseParams, panels: usize) -> Vec<EquilibriumPoint> {
    let panels = panels.max(8);
    let h = TAU / panels as f64;
    let grid: Vec<f64> = (0..=panels).map(|i| if i == panels { TAU } else { i as f64 * h }).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| pp.p(x)).collect();
    let dvals: Vec<f64> = grid.iter().map(|&x| pp.dp(x)).collect();

    let mut found: Vec<f64> = Vec::new();
    for i in 0..panels {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            found.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            found.push(bisect_newton(pp, a, b));
        }
        // Tangential zero: P' changes sign and the extremum touches zero.
        if dvals[i].signum() != dvals[i + 1].signum() {
            if let Ok(x) = brent(|s| pp.dp(s), a, b, 1e-15, 200) {
                if pp.p(x).abs() < ROOT_TOL {
                    found.push(x);
                }
            }
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    for r in found.into_iter().map(wrap_0_2pi) {
        if pp.p(r).abs() >= ROOT_TOL * 10.0 {
            continue;
        }
        if roots.iter().all(|&q| circular_distance(q, r) > DEDUP_TOL) {
            roots.push(r);
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.into_iter().map(|r| EquilibriumPoint::at(pp, r)).collect()
}

/// Bifurcation function ℓ(δ, ν) = (4δ² − 1)³ − 27 δ² sin²ν.
pub fn ell(pp: &PhaseParams) -> f64 {
    let d2 = pp.delta * pp.delta;
    (4.0 * d2 - 1.0).powi(3) - 27.0 * d2 * pp.nu.sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    OmegaMinus,
    OmegaPlus,
    GammaMinus,
    GammaPlus,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::OmegaMinus => "Omega-",
            Region::OmegaPlus => "Omega+",
            Region::GammaMinus => "Gamma-",
            Region::GammaPlus => "Gamma+",
        }
    }
}

pub fn region(pp: &PhaseParams) -> Region {
    let l = ell(pp);
    if l.abs() < GAMMA_TOL {
        // ℓ(0, ν) = −1, so δ = 0 never lands here.
        if pp.delta < 0.0 {
            Region::GammaMinus
        } else {
            Region::GammaPlus
        }
    } else if l < 0.0 {
        Region::OmegaMinus
    } else {
        Region::OmegaPlus
    }
}

/// Smallest δ > 0 on a bifurcation curve for the given ν; `−δ_ν` is its mirror.
pub fn threshold_delta(nu: f64) -> Result<f64> {
    if !(0.0..PI).contains(&nu) {
        return Err(Error::InvalidParameter(format!("nu must lie in [0, pi), got {nu}")));
    }
    if nu == 0.0 {
        return Ok(0.5);
    }
    let f = |d: f64| ell(&PhaseParams { delta: d, nu });
    brent(f, 0.5, 10.0, 1e-15, 300)
}

/// Grid of (δ, ν) for a parameter-plane scan. `nu_n` points cover `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGrid {
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_n: usize,
    pub nu_n: usize,
}

impl ScanGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_min.is_finite() && self.delta_max.is_finite() && self.delta_max >= self.delta_min) {
            return Err(Error::InvalidParameter("scan needs finite delta_min <= delta_max".into()));
        }
        if self.delta_n == 0 || self.nu_n == 0 {
            return Err(Error::InvalidParameter("scan resolutions must be >= 1".into()));
        }
        Ok(())
    }

    pub fn delta(&self, i: usize) -> f64 {
        if self.delta_n == 1 {
            self.delta_min
        } else {
            self.delta_min + (self.delta_max - self.delta_min) * i as f64 / (self.delta_n - 1) as f64
        }
    }

    pub fn nu(&self, j: usize) -> f64 {
        PI * j as f64 / self.nu_n as f64
    }
}

/// One row of the parameter-plane scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub delta: f64,
    pub nu: f64,
    pub ell: f64,
    pub region: Region,
    pub roots: Vec<EquilibriumPoint>,
}

/// Root census over a (δ, ν) grid, rows ordered δ-major.
///
/// Points are evaluated in parallel on the current rayon pool and collected in
/// index order, so the output does not depend on the worker count.
pub fn bifurcation_scan(grid: &ScanGrid) -> Result<Vec<ScanRow>> {
    grid.validate()?;
    let n = grid.delta_n * grid.nu_n;
    Ok((0..n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / grid.nu_n, k % grid.nu_n);
            let pp = PhaseParams { delta: grid.delta(i), nu: grid.nu(j) };
            ScanRow { delta: pp.delta, nu: pp.nu, ell: ell(&pp), region: region(&pp), roots: find_roots(&pp) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pp(delta: f64, nu: f64) -> PhaseParams {
        PhaseParams::new(delta, nu).unwrap()
    }

    #[test]
    fn p_eval_examples() {
        assert_eq!(p_eval(0.0, &pp(0.37, 0.0), 0), 0.0);
        for d in [-1.3, 0.0, 0.2, 1.0, 2.5] {
            assert_abs_diff_eq!(p_eval(0.0, &pp(d, 0.0), 1), 2.0 * d - 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(p_eval(PI, &pp(d, 0.0), 1), 2.0 * d + 1.0, epsilon = 1e-14);
        }
        let psi = (0.5f64).acos();
        assert_abs_diff_eq!(p_eval(psi, &pp(1.0, 0.0), 1), -1.5, epsilon = 1e-14);
    }

    #[test]
    #[should_panic]
    fn p_eval_rejects_order_four() {
        p_eval(0.0, &pp(1.0, 0.0), 4);
    }

    #[test]
    fn roots_at_delta_one() {
        let r: Vec<f64> = find_roots(&pp(1.0, 0.0)).iter().map(|e| e.psi0).collect();
        let want = [0.0, PI / 3.0, PI, 5.0 * PI / 3.0];
        assert_eq!(r.len(), 4);
        for (a, b) in r.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_roots_inside() {
        for (d, nu) in [(0.3, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, 2.9)] {
            let r = find_roots(&pp(d, nu));
            assert_eq!(r.len(), 2, "delta={d} nu={nu}");
            assert_abs_diff_eq!(r[0].psi0, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(r[1].psi0, PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn stability_labels_at_nu_zero() {
        let r = find_roots(&pp(1.0, 0.0));
        let s: Vec<Stability> = r.iter().map(|e| e.stability).collect();
        assert_eq!(s, [Stability::Stable, Stability::Unstable, Stability::Stable, Stability::Unstable]);
        let r = find_roots(&pp(0.3, 0.0));
        assert_eq!(r[0].stability, Stability::Unstable);
        assert_eq!(r[1].stability, Stability::Stable);
    }

    #[test]
    fn tangential_roots_are_degenerate() {
        let r = find_roots(&pp(0.5, 0.0));
        assert!(r.iter().any(|e| e.stability == Stability::Degenerate && e.psi0.abs() < 1e-6));
    }

    #[test]
    fn ell_examples() {
        assert_eq!(ell(&pp(0.5, 0.0)), 0.0);
        assert_eq!(ell(&pp(-0.5, 0.0)), 0.0);
        assert_eq!(region(&pp(0.5, 0.0)), Region::GammaPlus);
        assert_eq!(region(&pp(-0.5, 0.0)), Region::GammaMinus);
        assert_eq!(ell(&pp(0.0, PI / 3.0)), -1.0);
        assert_eq!(region(&pp(0.0, PI / 3.0)), Region::OmegaMinus);
        assert_abs_diff_eq!(ell(&pp(1.0, PI / 2.0)), 0.0, epsilon = 1e-12);
        assert_eq!(region(&pp(1.0, PI / 2.0)), Region::GammaPlus);
        assert_eq!(region(&pp(2.0, 0.3)), Region::OmegaPlus);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_delta(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(threshold_delta(PI / 2.0).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(threshold_delta(1e-4).unwrap(), 0.5, epsilon = 1e-2);
        assert!(threshold_delta(PI).is_err());
    }

    #[test]
    fn threshold_is_where_p_and_dp_vanish() {
        for nu in [0.3, 1.0, 2.0, 2.8] {
            let d = threshold_delta(nu).unwrap();
            let q = pp(d, nu);
            // Minimise |P| + |P'| over a fine grid: both vanish together somewhere.
            let best = (0..200_000)
                .map(|i| TAU * i as f64 / 200_000.0)
                .map(|x| q.p(x).abs() + q.dp(x).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-3, "nu={nu} best={best}");
        }
    }

    #[test]
    fn scan_order_and_census() {
        let g = ScanGrid { delta_min: -1.0, delta_max: 1.0, delta_n: 5, nu_n: 3 };
        let rows = bifurcation_scan(&g).unwrap();
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[0].delta, -1.0);
        assert_eq!(rows[1].nu, PI / 3.0);
        assert_eq!(rows[3].delta, -0.5);
    }

    #[test]
    fn invalid_params() {
        assert!(PhaseParams::new(f64::NAN, 0.0).is_err());
        assert!(PhaseParams::new(1.0, PI).is_err());
        let g = ScanGrid { delta_min: 1.0, delta_max: 0.0, delta_n: 5, nu_n: 3 };
        assert!(bifurcation_scan(&g).is_err());
    }
}
