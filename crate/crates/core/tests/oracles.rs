use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

use autores_core::asymptotics::{compute_coeffs, eval_series, residual};
use autores_core::equilibria::{ell, find_roots, threshold_delta, PhaseParams, Stability};
use autores_core::integrator::{integrate, IntegrationConfig};
use autores_core::model::{demo_es_exact, demo_es_linearization, demo_es_rhs, model_rhs, DemoEsSystem, ModelParams, ModelState, MuSpec};
use autores_core::stability::linearization_matrix;

fn p_of(delta: f64, nu: f64, psi: f64) -> f64 {
    delta * (2.0 * psi + nu).sin() - psi.sin()
}

/// Roots by dense sign-change sampling and plain bisection.
fn brute_roots(delta: f64, nu: f64) -> Vec<f64> {
    let n = 200_000;
    let mut out = Vec::new();
    for i in 0..n {
        let (mut a, mut b) = (TAU * i as f64 / n as f64, TAU * (i + 1) as f64 / n as f64);
        let (fa, fb) = (p_of(delta, nu, a), p_of(delta, nu, b));
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if p_of(delta, nu, a) * p_of(delta, nu, m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if out.len() > 1 && (out[0] + TAU - out[out.len() - 1]).abs() < 1e-9 {
        out.pop();
    }
    out
}

fn ell_by_hand(delta: f64, nu: f64) -> f64 {
    let d2 = delta * delta;
    (4.0 * d2 - 1.0).powi(3) - 27.0 * d2 * nu.sin() * nu.sin()
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn census_of_the_worked_example() {
    let roots: Vec<f64> = find_roots(&PhaseParams::new(1.0, 0.0).unwrap()).iter().map(|r| r.psi0).collect();
    let expected = [0.0, FRAC_PI_3, PI, 5.0 * FRAC_PI_3];
    assert_eq!(roots.len(), 4, "{roots:?}");
    for (r, e) in roots.iter().zip(expected) {
        assert!((r - e).abs() < 1e-10, "{r} vs {e}");
    }
    let two: Vec<f64> = find_roots(&PhaseParams::new(0.3, 0.0).unwrap()).iter().map(|r| r.psi0).collect();
    assert_eq!(two.len(), 2);
    assert!(two[0].abs() < 1e-10 && (two[1] - PI).abs() < 1e-10);
}

#[test]
fn census_matches_brute_force() {
    let cases = [(0.2, 0.4), (0.7, 0.0), (0.7, 1.3), (1.5, 2.9), (-0.8, 0.6), (-0.45, 2.0), (2.0, 0.1), (0.55, 0.05)];
    for (delta, nu) in cases {
        let lib: Vec<f64> = find_roots(&PhaseParams::new(delta, nu).unwrap()).iter().map(|r| r.psi0).collect();
        let oracle = brute_roots(delta, nu);
        assert_eq!(lib.len(), oracle.len(), "delta={delta} nu={nu}: {lib:?} vs {oracle:?}");
        for (a, b) in lib.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "delta={delta} nu={nu}: {a} vs {b}");
        }
    }
}

#[test]
fn stability_label_follows_slope_of_p() {
    for (delta, nu) in [(1.0, 0.0), (0.3, 1.0), (-1.2, 2.0)] {
        for r in find_roots(&PhaseParams::new(delta, nu).unwrap()) {
            let h = 1e-6;
            let fd = (p_of(delta, nu, r.psi0 + h) - p_of(delta, nu, r.psi0 - h)) / (2.0 * h);
            assert!((fd - r.p_prime).abs() < 1e-7);
            let want = if fd > 0.0 { Stability::Stable } else { Stability::Unstable };
            assert_eq!(r.stability, want);
        }
    }
}

#[test]
fn bifurcation_anchors() {
    assert_eq!(ell(&PhaseParams::new(0.5, 0.0).unwrap()), 0.0);
    assert_eq!(ell(&PhaseParams::new(-0.5, 0.0).unwrap()), 0.0);
    assert!((threshold_delta(0.0).unwrap() - 0.5).abs() < 1e-10);
    let hand = bisect(|d| ell_by_hand(d, FRAC_PI_2), 0.5, 3.0);
    assert!((hand - 1.0).abs() < 1e-12);
    assert!((threshold_delta(FRAC_PI_2).unwrap() - hand).abs() < 1e-8);
    for nu in [0.3, 1.0, 2.2, 3.0] {
        let hand = bisect(|d| ell_by_hand(d, nu), 0.5, 10.0);
        assert!((threshold_delta(nu).unwrap() - hand).abs() < 1e-10, "nu={nu}");
    }
}

#[test]
fn threshold_is_where_roots_coalesce() {
    for nu in [0.0, 0.7, FRAC_PI_2, 2.5] {
        let d = threshold_delta(nu).unwrap();
        assert_eq!(brute_roots(d - 1e-4, nu).len(), 2, "nu={nu}");
        assert_eq!(brute_roots(d + 1e-4, nu).len(), 4, "nu={nu}");
    }
}

#[test]
fn hand_series_coefficients() {
    let p = ModelParams::new(1.0, 0.0, MuSpec::zero()).unwrap();
    let c = compute_coeffs(&p, PI).unwrap();
    assert!((c.rho_m1 - 1.0).abs() < 1e-15);
    assert!((c.psi[1] + 0.5).abs() < 1e-14);
    assert!((c.rho[2] - 0.5).abs() < 1e-14);
    assert!(c.rho[3].abs() < 1e-14);
    assert!(c.psi[2].abs() < 1e-14);
    assert!((c.psi[3] + 1.0 / 48.0).abs() < 1e-14);
}

#[test]
fn residual_orders_on_hand_case() {
    let taus = log_grid(1e2, 1e5, 61);
    for psi0 in [0.0, PI] {
        let p = ModelParams::new(1.0, 0.0, MuSpec::zero()).unwrap();
        let c = compute_coeffs(&p, psi0).unwrap();
        let (rr, rp): (Vec<f64>, Vec<f64>) = taus.iter().map(|&t| residual(&c, t).unwrap()).unzip();
        let (sr, sp) = (slope(&taus, &rr), slope(&taus, &rp));
        assert!((sr + 2.0).abs() < 0.1, "psi0={psi0}: rho slope {sr}");
        assert!((sp + 1.5).abs() < 0.1, "psi0={psi0}: psi slope {sp}");
    }
}

#[test]
fn residual_orders_for_general_parameters() {
    // Higher-order terms bias the ψ fit at moderate τ; the asymptotic order is
    // read off far out, where the ρ defect is already at the rounding floor.
    let cases = [(2.0, 0.4, 0.3), (0.5, 1.1, 0.6), (1.3, 2.6, -0.4), (4.0, 0.0, 0.2)];
    for (lambda, nu, mu0) in cases {
        let p = ModelParams::new(lambda, nu, MuSpec::leading(mu0)).unwrap();
        let pp = PhaseParams::from_model(&p).unwrap();
        for root in find_roots(&pp) {
            let c = compute_coeffs(&p, root.psi0).unwrap();
            let near = log_grid(1e2, 1e5, 41);
            let rr: Vec<f64> = near.iter().map(|&t| residual(&c, t).unwrap().0).collect();
            let sr = slope(&near, &rr);
            assert!(sr < -1.9, "{lambda},{nu},{mu0} psi0={}: rho slope {sr}", root.psi0);
            let far = log_grid(1e6, 1e9, 41);
            let rp: Vec<f64> = far.iter().map(|&t| residual(&c, t).unwrap().1).collect();
            let sp = slope(&far, &rp);
            assert!((sp + 1.5).abs() < 0.1, "{lambda},{nu},{mu0} psi0={}: psi slope {sp}", root.psi0);
        }
    }
}

#[test]
fn linearization_matches_finite_differences() {
    let p = ModelParams::new(1.5, 0.8, MuSpec::leading(0.4)).unwrap();
    let pp = PhaseParams::from_model(&p).unwrap();
    for root in find_roots(&pp) {
        let c = compute_coeffs(&p, root.psi0).unwrap();
        for tau in [50.0, 400.0, 3000.0] {
            let s = eval_series(&c, tau);
            let a = linearization_matrix(&p, &c, tau).unwrap();
            let h = 1e-6;
            #[allow(clippy::needless_range_loop)]
            for j in 0..2 {
                let mut plus = s;
                let mut minus = s;
                if j == 0 {
                    plus.rho += h;
                    minus.rho -= h;
                } else {
                    plus.psi += h;
                    minus.psi -= h;
                }
                let fp = model_rhs(&p, tau, plus).unwrap();
                let fm = model_rhs(&p, tau, minus).unwrap();
                for i in 0..2 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    let scale = 1.0 + fd.abs();
                    assert!((fd - a[i][j]).abs() / scale < 1e-6, "tau={tau} ({i},{j}): {fd} vs {}", a[i][j]);
                }
            }
        }
    }
}

#[test]
fn demo_closed_form_solves_the_system() {
    let (a0, b0) = (1.0, 1.0);
    for t in [1.0, 2.5, 9.0, 16.0] {
        let h = 1e-5 * t;
        let yp = demo_es_exact(a0, b0, t + h).unwrap();
        let ym = demo_es_exact(a0, b0, t - h).unwrap();
        let f = demo_es_rhs(t, demo_es_exact(a0, b0, t).unwrap()).unwrap();
        for i in 0..2 {
            let fd = (yp[i] - ym[i]) / (2.0 * h);
            assert!((fd - f[i]).abs() < 1e-6 * (1.0 + f[i].abs()), "t={t} i={i}: {fd} vs {}", f[i]);
        }
    }
}

#[test]
fn demo_integration_grows_despite_negative_eigenvalues() {
    let y0 = demo_es_exact(1.0, 1.0, 1.0).unwrap();
    let cfg = IntegrationConfig::with_tolerances(1e-12, 1e-14);
    let traj = integrate(&DemoEsSystem, 1.0, y0, 16.0, &cfg).unwrap();
    let exact = demo_es_exact(1.0, 1.0, 16.0).unwrap();
    let got = traj.final_state();
    for i in 0..2 {
        assert!((got[i] - exact[i]).abs() / exact[i].abs() < 1e-6);
    }
    assert!(got[0] > y0[0]);
    for k in 1..=200 {
        let t = 1.0 + 15.0 * k as f64 / 200.0;
        let a = demo_es_linearization(t).unwrap();
        assert!(a[0][1] == 0.0 && a[1][0] == 0.0 && a[0][0] < 0.0 && a[1][1] < 0.0);
    }
}

#[test]
fn series_tracks_the_flow() {
    // Integrating forward from the series start stays within the truncation error.
    let p = ModelParams::new(1.0, 0.0, MuSpec::zero()).unwrap();
    let c = compute_coeffs(&p, PI).unwrap();
    let tau0 = 1e3;
    let s0 = eval_series(&c, tau0);
    let cfg = IntegrationConfig::with_tolerances(1e-12, 1e-14);
    let sys = autores_core::model::ModelSystem::new(&p);
    let traj = integrate(&sys, tau0, s0.to_array(), 4.0 * tau0, &cfg).unwrap();
    let end = ModelState::from_array(traj.final_state());
    let star = eval_series(&c, 4.0 * tau0);
    assert!((end.psi - star.psi).abs() < 1e-2, "{end:?} vs {star:?}");
    assert!((end.rho - star.rho).abs() / star.rho < 1e-3);
}

#[test]
fn demo_rhs_matches_analytic_derivative() {
    let (a0, b0) = (1.0, 1.0);
    for k in 0..=99 {
        let t = 1.0 + k as f64;
        let [a, b] = demo_es_exact(a0, b0, t).unwrap();
        let da = a * (b0 * t.powf(-0.75) - 1.0 / t);
        let db = -0.5 * b0 * t.powf(-1.5);
        let f = demo_es_rhs(t, [a, b]).unwrap();
        assert!((f[0] - da).abs() <= 1e-10 * da.abs(), "t={t}");
        assert!((f[1] - db).abs() <= 1e-10 * db.abs(), "t={t}");
    }
}

#[test]
fn tightening_tolerance_does_not_hurt_demo_accuracy() {
    let y0 = demo_es_exact(1.0, 1.0, 1.0).unwrap();
    for t1 in [4.0, 16.0, 64.0] {
        let exact = demo_es_exact(1.0, 1.0, t1).unwrap();
        let err = |rel: f64| {
            let traj = integrate(&DemoEsSystem, 1.0, y0, t1, &IntegrationConfig::with_tolerances(rel, 1e-16)).unwrap();
            let y = traj.final_state();
            ((y[0] - exact[0]) / exact[0]).abs().max(((y[1] - exact[1]) / exact[1]).abs())
        };
        let errs: Vec<f64> = (0..12).map(|k| err(1e-6 / 2f64.powi(k))).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0], "t1={t1}: {errs:?}");
        }
    }
}
