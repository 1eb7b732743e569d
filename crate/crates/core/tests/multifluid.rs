use proptest::prelude::*;
use vmlimit_core::fields::init_em_state;
use vmlimit_core::multifluid::*;
use vmlimit_core::spectral::{ShrinkingNormParams, SpectralField};
use vmlimit_core::EmState;

fn uniform(d: usize, k: usize, weight: f64, xi: &[f64]) -> Phase {
    Phase { weight, rho: SpectralField::constant(d, k, &[1.0]), xi: SpectralField::constant(d, k, xi) }
}

fn two_stream(eps: f64, amp: f64) -> PhaseEnsemble {
    let mut phases = Vec::new();
    for (s, shift) in [(1.0, 0.0), (-1.0, 1.0)] {
        let mut rho = SpectralField::constant(2, 4, &[1.0]);
        rho.add_cos(0, &[1, 0], amp);
        rho.add_sin(0, &[0, 1], 0.5 * amp);
        let mut xi = SpectralField::constant(2, 4, &[0.4 * s, 0.1 * s]);
        xi.add_cos(0, &[0, 1], 0.05 + 0.02 * shift);
        xi.add_sin(1, &[1, 1], 0.03);
        phases.push(Phase { weight: 0.5, rho, xi });
    }
    PhaseEnsemble::new(eps, phases).unwrap()
}

fn em_for(ens: &PhaseEnsemble) -> EmState {
    let rho = ens.total_density();
    let phi = vmlimit_core::spectral::solve_poisson(&rho).unwrap();
    let e = vmlimit_core::spectral::gradient(&phi).unwrap().scaled(-1.0);
    init_em_state(&rho, &e, None, ens.eps, &vec![0.0; ens.dim()]).unwrap()
}

#[test]
fn velocity_examples() {
    let gate = ValidityGate::new(1.5);
    let xi = SpectralField::constant(2, 3, &[3.0, 4.0]);
    let v = relativistic_velocity(&xi, 0.1, &gate).unwrap();
    let s = 1.25f64.sqrt();
    assert!((v.mean()[0] - 3.0 / s).abs() < 1e-15 && (v.mean()[1] - 4.0 / s).abs() < 1e-15);
    assert!(relativistic_velocity(&xi, 0.0, &gate).unwrap().max_coeff_diff(&xi) < 1e-15);
    assert!(matches!(relativistic_velocity(&xi, 0.2, &gate), Err(SolverError::GateViolation { .. })));
}

proptest! {
    #[test]
    fn velocity_is_close_to_momentum(x in -1.0..1.0f64, y in -1.0..1.0f64, eps in 0.0..0.5f64) {
        let xi = SpectralField::constant(2, 2, &[x, y]);
        let v = relativistic_velocity(&xi, eps, &ValidityGate::new(1.2)).unwrap().mean();
        let n2 = x * x + y * y;
        let gap = ((v[0] - x).powi(2) + (v[1] - y).powi(2)).sqrt();
        prop_assert!(gap <= eps * n2 + 1e-15);
        prop_assert!((v[0] * v[0] + v[1] * v[1]).sqrt() <= 1.0 / eps.max(1e-300));
    }
}

#[test]
fn static_right_hand_side() {
    let ens = PhaseEnsemble::new(0.1, vec![uniform(2, 3, 1.0, &[0.0, 0.0])]).unwrap();
    let r = vm_rhs(&ens, &SpectralField::zeros(2, 3, 2), None).unwrap();
    assert_eq!(r[0].drho.max_abs_coeff(), 0.0);
    assert_eq!(r[0].dxi.max_abs_coeff(), 0.0);

    let eps = 0.2;
    let ens = PhaseEnsemble::new(eps, vec![uniform(2, 3, 1.0, &[0.6, -0.8])]).unwrap();
    let e = SpectralField::constant(2, 3, &[0.3, 0.2]);
    let b = SpectralField::constant(2, 3, &[0.5]);
    let r = vm_rhs(&ens, &e, Some(&b)).unwrap();
    let inv = 1.0 / (1.0 + eps * eps).sqrt();
    let (v0, v1) = (0.6 * inv, -0.8 * inv);
    assert!(r[0].drho.max_abs_coeff() < 1e-15);
    let m = r[0].dxi.mean();
    assert!((m[0] - (0.3 + eps * v1 * 0.5)).abs() < 1e-15);
    assert!((m[1] - (0.2 - eps * v0 * 0.5)).abs() < 1e-15);
}

#[test]
fn ensemble_validation() {
    assert!(PhaseEnsemble::new(0.1, vec![]).is_err());
    assert!(PhaseEnsemble::new(0.1, vec![uniform(2, 3, 0.7, &[0.0, 0.0])]).is_err());
    assert!(PhaseEnsemble::new(1.2, vec![uniform(2, 3, 1.0, &[0.0, 0.0])]).is_err());
    let mut p = uniform(2, 3, 1.0, &[0.0, 0.0]);
    p.rho = SpectralField::constant(2, 3, &[1.1]);
    assert!(PhaseEnsemble::new(0.1, vec![p]).is_err());
}

#[test]
fn zero_eps_reduces_to_vlasov_poisson() {
    let ens = two_stream(0.0, 0.1);
    let mut em = em_for(&ens);
    let gate = ValidityGate::new(1.5);
    let mut a = ens.clone();
    let mut b = ens;
    for _ in 0..10 {
        let (na, nem) = vm_step(&a, &em, 0.05, &gate).unwrap();
        a = na;
        em = nem;
        b = vp_step(&b, 0.05).unwrap();
    }
    assert!(a.max_coeff_diff(&b) <= 1e-10, "{}", a.max_coeff_diff(&b));
}

#[test]
fn plasma_oscillation_period() {
    let amp = 1e-3;
    let mut rho = SpectralField::constant(1, 4, &[1.0]);
    rho.add_cos(0, &[1], amp);
    let mut ens = PhaseEnsemble::new(0.0, vec![Phase { weight: 1.0, rho, xi: SpectralField::zeros(1, 4, 1) }]).unwrap();
    let dt = 0.01;
    let mut prev = ens.phases[0].rho.coeff(0, &[1]).re;
    let mut crossings = Vec::new();
    let mut t = 0.0;
    while crossings.len() < 3 && t < 20.0 {
        ens = vp_step(&ens, dt).unwrap();
        t += dt;
        let c = ens.phases[0].rho.coeff(0, &[1]).re;
        if prev.signum() != c.signum() {
            crossings.push(t - dt * c / (c - prev));
        }
        prev = c;
    }
    let period = crossings[2] - crossings[0];
    let target = std::f64::consts::TAU;
    assert!((period - target).abs() <= 0.01 * target, "{period}");
}

#[test]
fn vlasov_poisson_conserves_mean_current_and_mass() {
    let ens = two_stream(0.0, 0.2);
    let p0 = ens.momentum_mean();
    let masses: Vec<f64> = ens.phases.iter().map(|p| p.rho.mean()[0]).collect();
    let mut x = ens;
    for _ in 0..40 {
        x = vp_step(&x, 0.05).unwrap();
    }
    for (a, b) in x.momentum_mean().iter().zip(&p0) {
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
    for (p, m) in x.phases.iter().zip(&masses) {
        assert!((p.rho.mean()[0] - m).abs() <= 1e-14);
    }
}

#[test]
fn vlasov_maxwell_conserves_phase_mass_and_energy_to_step_order() {
    let ens = two_stream(0.2, 0.2);
    let em = em_for(&ens);
    let gate = ValidityGate::new(1.5);
    let masses: Vec<f64> = ens.phases.iter().map(|p| p.rho.mean()[0]).collect();
    let e0 = total_energy(&ens, &em);
    let (mut x, mut w) = (ens, em);
    for _ in 0..40 {
        let (nx, nw) = vm_step(&x, &w, 0.025, &gate).unwrap();
        x = nx;
        w = nw;
    }
    for (p, m) in x.phases.iter().zip(&masses) {
        assert!((p.rho.mean()[0] - m).abs() <= 1e-14);
    }
    assert!(((total_energy(&x, &w) - e0) / e0).abs() <= 1e-6);
    let (div, mean) = w.gauge_residual();
    assert!(div < 1e-12 && mean < 1e-14);
}

#[test]
fn moments_of_two_phases() {
    let c = [0.3, -0.4];
    let ens = PhaseEnsemble::new(
        0.0,
        vec![uniform(2, 3, 0.5, &c), uniform(2, 3, 0.5, &[-c[0], -c[1]])],
    )
    .unwrap();
    let m = moments(&ens, 1.0);
    assert!((m.m_alpha_sup - 0.5).abs() < 1e-15);
    assert!(m.current.max_abs_coeff() < 1e-15);
    assert!((m.fourth_moment_l1 - 0.0625).abs() < 1e-15);
    let one = measure_eval(&ens, |_| 1.0);
    assert!(one.max_coeff_diff(&ens.total_density()) < 1e-15);
    let first = measure_eval(&ens, |x| x[0]);
    assert!(first.max_abs_coeff() < 1e-15);
}

#[test]
fn kinetic_energy_has_the_classical_limit() {
    let ens = PhaseEnsemble::new(0.0, vec![uniform(2, 3, 1.0, &[0.3, 0.4])]).unwrap();
    assert!((kinetic_energy(&ens) - 0.125).abs() < 1e-15);
    let rel = ens.with_eps(1e-3);
    assert!((kinetic_energy(&rel) - 0.125).abs() < 1e-7);
    let eps: f64 = 0.5;
    let exact = ((1.0 + eps * eps * 0.25).sqrt() - 1.0) / (eps * eps);
    assert!((kinetic_energy(&ens.with_eps(eps)) - exact).abs() < 1e-15);
}

#[test]
fn successive_approximations_fix_stationary_data() {
    let ens = PhaseEnsemble::new(0.1, vec![uniform(2, 3, 1.0, &[0.0, 0.0])]).unwrap();
    let em = em_for(&ens);
    let params = ShrinkingNormParams::new(2.0, 0.4, 0.5).unwrap();
    let opts = CkOptions { n_max: 4, substeps: 4, ..CkOptions::default() };
    let r = ck_iterate(&ens, &em, &params, &opts).unwrap();
    assert!(!r.diverged);
    assert!(r.diffs_rho.iter().chain(&r.diffs_xi).all(|d| *d <= 1e-15));
    assert!((r.horizon - 0.2).abs() < 1e-15);
}

#[test]
fn successive_approximations_contract() {
    let ens = two_stream(0.2, 0.1);
    let em = em_for(&ens);
    let params = ShrinkingNormParams::new(2.0, 0.4, 0.5).unwrap();
    let opts = CkOptions { n_max: 6, substeps: 8, ..CkOptions::default() };
    let r = ck_iterate(&ens, &em, &params, &opts).unwrap();
    assert!(!r.diverged);
    assert!(r.contracts_on(3, 6), "{:?}", r.ratios);
}
