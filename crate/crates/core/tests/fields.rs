use num_complex::Complex64;
use vmlimit_core::fields::*;
use vmlimit_core::spectral::{curl, divergence};
use vmlimit_core::SpectralField;

fn transverse_state(eps: f64) -> EmState {
    let mut w = SpectralField::zeros(2, 4, 2);
    w.add_cos(0, &[0, 1], 0.8);
    w.add_sin(1, &[2, 0], -0.3);
    let mut a = SpectralField::zeros(2, 4, 2);
    a.add_sin(0, &[0, 3], 0.2);
    EmState { eps, phi: SpectralField::zeros(2, 4, 1), a, w, mean_b: vec![0.0] }
}

#[test]
fn phi_functions_at_zero_and_on_the_axis() {
    let p = phi_functions(Complex64::new(0.0, 0.0));
    for (v, e) in p.iter().zip([1.0, 1.0, 0.5, 1.0 / 6.0]) {
        assert!((v - e).norm() < 1e-15);
    }
    for z in [Complex64::new(0.0, 1e-7), Complex64::new(0.0, 0.3), Complex64::new(0.0, -40.0)] {
        let p = phi_functions(z);
        assert!((p[0] - z.exp()).norm() < 1e-14);
        if z.norm() < 1e-3 {
            assert!((p[1] - (1.0 + z / 2.0 + z * z / 6.0)).norm() < 1e-15);
            assert!((p[2] - (0.5 + z / 6.0)).norm() < 1e-14);
        } else {
            assert!((p[1] - (z.exp() - 1.0) / z).norm() < 1e-12);
            assert!((p[2] - (p[1] - 1.0) / z).norm() < 1e-12);
            assert!((p[3] - (p[2] - 0.5) / z).norm() < 1e-12);
        }
    }
}

#[test]
fn uniform_data_has_no_field() {
    let rho = SpectralField::constant(2, 4, &[1.0]);
    let s = init_em_state(&rho, &SpectralField::zeros(2, 4, 2), None, 0.1, &[0.0, 0.0]).unwrap();
    assert_eq!(s.phi.max_abs_coeff(), 0.0);
    assert_eq!(s.a.max_abs_coeff(), 0.0);
    assert_eq!(s.w.max_abs_coeff(), 0.0);
}

#[test]
fn electrostatic_data_has_no_transverse_part() {
    let mut rho = SpectralField::constant(2, 4, &[1.0]);
    rho.add_cos(0, &[1, 0], 1.0);
    let mut e = SpectralField::zeros(2, 4, 2);
    e.add_sin(0, &[1, 0], 1.0);
    let s = init_em_state(&rho, &e, None, 0.1, &[0.0, 0.0]).unwrap();
    let mut phi = SpectralField::zeros(2, 4, 1);
    phi.add_cos(0, &[1, 0], 1.0);
    assert!(s.phi.max_coeff_diff(&phi) < 1e-15);
    assert!(s.w.max_abs_coeff() < 1e-15);
    assert!(s.electric().max_coeff_diff(&e) < 1e-15);
    assert!((field_energy(&s) - 0.25).abs() < 1e-15);
}

#[test]
fn invalid_data_is_rejected() {
    let mut rho = SpectralField::constant(2, 4, &[1.0]);
    rho.add_cos(0, &[1, 0], 1.0);
    let zero_e = SpectralField::zeros(2, 4, 2);
    assert!(matches!(init_em_state(&rho, &zero_e, None, 0.1, &[0.0, 0.0]), Err(FieldsError::Validation(_))));
    let flat = SpectralField::constant(2, 4, &[1.0]);
    let biased = SpectralField::constant(2, 4, &[0.1, 0.0]);
    assert!(init_em_state(&flat, &biased, None, 0.1, &[0.0, 0.0]).is_err());
    assert!(init_em_state(&flat, &zero_e, None, 1.5, &[0.0, 0.0]).is_err());
    assert!(init_em_state(&flat, &zero_e, None, 0.1, &[0.2, 0.0]).is_err());
    let rho1 = SpectralField::constant(1, 4, &[1.0]);
    let b1 = SpectralField::zeros(1, 4, 1);
    assert!(init_em_state(&rho1, &SpectralField::zeros(1, 4, 1), Some(&b1), 0.1, &[0.0]).is_err());
    let mut e = SpectralField::zeros(2, 4, 2);
    e.add_cos(1, &[1, 0], 1.0);
    assert!(init_em_state(&flat, &e, None, 0.0, &[0.0, 0.0]).is_err());
    assert!(init_em_state(&flat, &e, None, 0.1, &[0.0, 0.0]).is_ok());
}

#[test]
fn prescribed_magnetic_field_is_reproduced() {
    let rho = SpectralField::constant(2, 4, &[1.0]);
    let mut b = SpectralField::constant(2, 4, &[0.4]);
    b.add_cos(0, &[1, 2], 0.5);
    let s = init_em_state(&rho, &SpectralField::zeros(2, 4, 2), Some(&b), 0.2, &[0.0, 0.0]).unwrap();
    assert!(s.magnetic().unwrap().max_coeff_diff(&b) < 1e-15);
    assert_eq!(s.mean_b, vec![0.4]);
    let (div, mean) = s.gauge_residual();
    assert!(div < 1e-15 && mean < 1e-15);
}

#[test]
fn free_waves_conserve_energy_and_compose() {
    let s = transverse_state(0.05);
    let e0 = field_energy(&s);
    let zero = SpectralField::zeros(2, 4, 2);
    let mut x = s.clone();
    for _ in 0..1000 {
        x = x.advance(0.013, &[(PhiWeights::EULER, &zero)]);
    }
    assert!((field_energy(&x) - e0).abs() <= 1e-12 * e0);
    let once = s.advance(0.3, &[]);
    let twice = s.advance(0.1, &[]).advance(0.2, &[]);
    assert!(once.a.max_coeff_diff(&twice.a) < 1e-13);
    assert!(once.w.max_coeff_diff(&twice.w) < 1e-13);
}

#[test]
fn free_wave_matches_closed_form() {
    let eps = 0.1;
    let s = transverse_state(eps);
    let t = 0.77;
    let out = s.advance(t, &[]);
    let k = 1.0;
    let om = k / eps;
    let w0 = s.w.coeff(0, &[0, 1]);
    let a0 = s.a.coeff(0, &[0, 1]);
    let a = a0 * (om * t).cos() + w0 / k * (om * t).sin();
    let w = w0 * (om * t).cos() - a0 * k * (om * t).sin();
    assert!((out.a.coeff(0, &[0, 1]) - a).norm() < 1e-14);
    assert!((out.w.coeff(0, &[0, 1]) - w).norm() < 1e-14);
}

#[test]
fn advance_keeps_coulomb_gauge() {
    let s = transverse_state(0.2);
    let mut j = SpectralField::constant(2, 4, &[0.1, -0.05]);
    j.add_cos(0, &[1, 0], 0.7);
    j.add_sin(1, &[1, 1], 0.4);
    let mut x = s;
    for _ in 0..50 {
        x = wave_step(&x, &j, 0.02).unwrap();
    }
    let (div, mean) = x.gauge_residual();
    assert!(div < 1e-13 && mean < 1e-15);
    assert!(divergence(&x.w.sub(&SpectralField::constant(2, 4, &x.w.mean()))).unwrap().max_abs_coeff() < 1e-13);
    assert!((x.w.mean()[0] - 0.1).abs() < 1e-14 && (x.w.mean()[1] + 0.05).abs() < 1e-14);
    let b = x.magnetic().unwrap();
    assert!(curl(&x.a).unwrap().max_coeff_diff(&b) < 1e-15);
}

#[test]
fn momentum_ledger_tracks_mean_current() {
    let s = transverse_state(0.2);
    let j = SpectralField::constant(2, 4, &[0.3, 0.1]);
    let mut ledger = MomentumLedger::new(&s);
    let mut x = s;
    for _ in 0..20 {
        x = wave_step(&x, &j, 0.05).unwrap();
        let m = j.mean();
        ledger.accumulate(&[(0.05, m.as_slice())]);
    }
    assert!(ledger.residual(&x) < 1e-14);
}

#[test]
fn bad_steps_are_rejected() {
    let s = transverse_state(0.2);
    let j = SpectralField::zeros(2, 4, 2);
    assert!(matches!(wave_step(&s, &j, 0.0), Err(FieldsError::InvalidStep(_))));
    assert!(wave_step(&s, &j, f64::NAN).is_err());
    assert!(wave_step(&s, &SpectralField::zeros(2, 3, 2), 0.1).is_err());
}
