use std::f64::consts::{PI, TAU};

use autores_core::asymptotics::{compute_coeffs, eval_series, Reference};
use autores_core::capture::{basin_scan, capture_config, classify_trajectory, fit_envelope, simulate, BasinGrid, VerdictKind};
use autores_core::duffing::{compare_envelope, CompareOptions, MuPrefactor};
use autores_core::equilibria::{find_roots, PhaseParams, Stability};
use autores_core::integrator::{integrate, IntegrationConfig};
use autores_core::model::{DuffingParams, ModelParams, ModelState, ModelSystem, MuSpec};
use autores_core::stability::{
    closed_orbit_bound, frozen_frequency, frozen_slope, lyapunov_check, oscillation_step_law, perturbation_witness, LyapunovCheck,
    ScaledFrame, ScaledPoint,
};

fn pendulum() -> ModelParams {
    ModelParams::new(1.0, 0.0, MuSpec::zero()).unwrap()
}

#[test]
fn series_start_is_captured_and_small_start_escapes() {
    let p = pendulum();
    let roots = find_roots(&PhaseParams::from_model(&p).unwrap());
    let c = compute_coeffs(&p, PI).unwrap();
    let tau0 = 50.0;
    let traj = simulate(&p, tau0, eval_series(&c, tau0), 1000.0, &capture_config()).unwrap();
    let v = classify_trajectory(&traj, &p, &roots).unwrap();
    assert!(matches!(v.kind, VerdictKind::Captured { .. }), "{v:?}");
    if let VerdictKind::Captured { psi0_value, .. } = v.kind {
        assert!((psi0_value - PI).abs() < 1e-10);
    }

    let traj = simulate(&p, tau0, ModelState::new(0.05, 0.0), 1000.0, &capture_config()).unwrap();
    let v = classify_trajectory(&traj, &p, &roots).unwrap();
    assert_eq!(v.kind, VerdictKind::Escaped, "{v:?}");
}

#[test]
fn basin_rows_follow_grid_order() {
    let p = pendulum();
    let grid = BasinGrid { rho_min: 0.1, rho_max: 8.0, rho_n: 3, psi_min: 0.0, psi_max: PI, psi_n: 2 };
    let rows = basin_scan(&p, 10.0, &grid, 200.0, &capture_config()).unwrap();
    assert_eq!(rows.len(), 6);
    for (row, (rho, psi)) in rows.iter().zip(grid.nodes()) {
        assert_eq!((row.rho0, row.psi0_init), (rho, psi));
    }
}

#[test]
fn perturbations_stay_near_stable_and_leave_unstable_solutions() {
    let cases = [(0.0, 1.0), (0.3, 0.4), (1.2, 1.6), (2.4, 0.8), (0.7, 2.5)];
    for (nu, mu0) in cases {
        let p = ModelParams::new(1.0, nu, MuSpec::leading(mu0)).unwrap();
        for root in find_roots(&PhaseParams::from_model(&p).unwrap()) {
            if root.p_prime.abs() < 0.3 {
                continue;
            }
            let w = perturbation_witness(&p, &root, 1e-3, 0.3, 200.0, 800.0).unwrap();
            match root.stability {
                Stability::Stable => assert!(w.stays_close, "nu={nu} mu0={mu0} {w:?}"),
                Stability::Unstable => assert!(w.grows, "nu={nu} mu0={mu0} {w:?}"),
                Stability::Degenerate => unreachable!(),
            }
        }
    }
}

#[test]
fn lyapunov_function_decays_along_captured_trajectory() {
    for angle in [0.3, 1.2, 2.5] {
        let mut cfg = LyapunovCheck::new(pendulum(), PI);
        cfg.angle = angle;
        let rep = lyapunov_check(&cfg).unwrap();
        assert!(rep.frac_positive >= 0.99, "angle={angle} {}", rep.frac_positive);
        assert!(rep.frac_decreasing >= 0.99, "angle={angle} {}", rep.frac_decreasing);
        assert!(rep.frac_sandwich >= 0.99, "angle={angle} {}", rep.frac_sandwich);
    }
}

#[test]
fn lyapunov_check_refuses_unstable_root() {
    assert!(lyapunov_check(&LyapunovCheck::new(pendulum(), 0.0)).is_err());
}

#[test]
fn envelope_exponents_of_captured_oscillation() {
    let p = pendulum();
    let c = compute_coeffs(&p, PI).unwrap();
    let f = ScaledFrame::new(&p, &c).unwrap();
    let eta0 = autores_core::stability::eta_of_tau(100.0);
    let (tau0, s0) = f.from_scaled(&ScaledPoint::new(0.05, 0.0, eta0)).unwrap();
    let cfg = IntegrationConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-13,
        max_step_law: Some(oscillation_step_law(p.lambda, c.p_prime, 20.0)),
        ..Default::default()
    };
    let traj = integrate(&ModelSystem::new(&p), tau0, s0.to_array(), 1e4, &cfg).unwrap();
    let fit = fit_envelope(&traj, &f).unwrap();
    assert!((-0.15..=-0.10).contains(&fit.decay_exponent), "{fit:?}");
    assert!((0.23..=0.27).contains(&fit.freq_exponent), "{fit:?}");
    let want = 2.0 * f.omega_lambda();
    assert!((fit.freq_coefficient - want).abs() / want < 0.05, "{fit:?}");
}

#[test]
fn frozen_frequency_law() {
    let p = ModelParams::new(1.3, 0.7, MuSpec::leading(0.35)).unwrap();
    let root = find_roots(&PhaseParams::from_model(&p).unwrap()).into_iter().find(|r| r.stability == Stability::Stable).unwrap();
    let f = ScaledFrame::new(&p, &compute_coeffs(&p, root.psi0).unwrap()).unwrap();
    let w = frozen_frequency(&f, 1e-4).unwrap();
    assert!((w - 2.0 * f.omega_lambda()).abs() < 1e-3);
    let slope = frozen_slope(&f, 1e-3).unwrap();
    // Lindstedt slope of Ψ'' = −2λ^(1/2) P(ψ₀ + Ψ): the cubic term alone gives
    // P‴/(8P′); the quadratic term adds −5P″²/(24P′²).
    let (p1, p2, p3) = (root.p_prime, root.p_double_prime, root.p_triple_prime);
    let want = p3 / (8.0 * p1) - 5.0 * p2 * p2 / (24.0 * p1 * p1);
    assert!((slope - want).abs() / want.abs() < 0.02, "{slope} vs {want}");
    let cubic_only = p3 / (16.0 * f.omega0 * f.omega0 * p.lambda.sqrt());
    assert!((cubic_only - p3 / (8.0 * p1)).abs() < 1e-12);
    let bound = closed_orbit_bound(&f, 1e-6).unwrap();
    assert!(bound > 0.0 && frozen_frequency(&f, 0.5 * bound).is_ok());
    assert!(frozen_frequency(&f, 2.0 * bound).is_err());
}

#[test]
fn refined_reference_beats_series_on_residual_flow() {
    let p = pendulum();
    let c = compute_coeffs(&p, PI).unwrap();
    let r = Reference::best_available(&c, 100.0, 2000.0).unwrap();
    assert!(matches!(r, Reference::Refined(_)));
    let s0 = r.state(150.0).unwrap();
    let traj = integrate(&ModelSystem::new(&p), 150.0, s0.to_array(), 1500.0, &IntegrationConfig::with_tolerances(1e-12, 1e-14)).unwrap();
    let end = ModelState::from_array(traj.final_state());
    let refd = r.state(1500.0).unwrap();
    let series = eval_series(&c, 1500.0);
    assert!((end.psi - refd.psi).abs() < 1e-7);
    assert!((end.psi - refd.psi).abs() < (end.psi - series.psi).abs());
}

#[test]
fn duffing_dichotomy_at_reference_parameters() {
    let p = DuffingParams::reference();
    let opts = CompareOptions::default();
    let cap = compare_envelope(&p, -2.0, 2.0, 2000.0, &opts).unwrap().report;
    assert!(cap.captured, "{cap:?}");
    assert!(cap.delta_band_final_half < TAU);
    assert!(cap.max_rel_env_err.unwrap() < 0.15, "{cap:?}");
    let esc = compare_envelope(&p, 1e-3, 0.0, 2000.0, &opts).unwrap().report;
    assert!(!esc.captured, "{esc:?}");
    assert!(esc.max_abs_delta > 4.0 * PI);
    assert!(esc.energy_growth_final_half < 1.1, "{esc:?}");
    assert!(cap.energy_growth_final_half > 1.2, "{cap:?}");
}

#[test]
fn averaged_reduction_converges_with_eps() {
    // Errors of the averaged reduction shrink like ε over the full horizon.
    let errs: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&eps| {
            let p = DuffingParams { eps, alpha: 0.25 * eps * eps, ..DuffingParams::reference() };
            let opts = CompareOptions { mu_prefactor: MuPrefactor::Averaged, window_hi: 20.0, ..Default::default() };
            let r = compare_envelope(&p, -2.0, 2.0, 20.0 / eps, &opts).unwrap().report;
            assert!(r.captured, "eps={eps} {r:?}");
            r.max_rel_env_err.unwrap()
        })
        .collect();
    assert!(errs[1] < 0.1, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((1.5..3.0).contains(&ratio), "{errs:?}");
}
