use std::f64::consts::TAU;

use vmlimit_core::lagrangian::*;
use vmlimit_core::multifluid::{Phase, PhaseEnsemble};
use vmlimit_core::SpectralField;

fn torus_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn pendulum_potential() -> SpectralField {
    let mut phi = SpectralField::zeros(1, 2, 1);
    phi.add_cos(0, &[1], 1.0);
    phi
}

fn bumpy(weights: &[f64]) -> PhaseEnsemble {
    let phases = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut rho = SpectralField::constant(2, 3, &[1.0]);
            rho.add_cos(0, &[1, 0], 0.5);
            rho.add_sin(0, &[1, 1], 0.3);
            let s = if i == 0 { 1.0 } else { -1.0 };
            Phase { weight: w, rho, xi: SpectralField::constant(2, 3, &[0.2 * s, 0.1]) }
        })
        .collect();
    PhaseEnsemble::new(0.1, phases).unwrap()
}

#[test]
fn pendulum_energy_is_conserved() {
    let phi = pendulum_potential();
    let x0: Vec<f64> = (0..16).map(|i| i as f64 * TAU / 16.0).collect();
    let xi0: Vec<f64> = (0..16).map(|i| 0.1 * i as f64 - 0.8).collect();
    let mut c = ParticleCloud::from_samples(1, x0, xi0);
    let h = |x: f64, p: f64| 0.5 * p * p + x.cos();
    let e0: Vec<f64> = (0..16).map(|i| h(c.vp.x[i], c.vp.xi[i])).collect();
    for _ in 0..1000 {
        flow_vp_step(&mut c, &phi, 0.01);
    }
    for i in 0..16 {
        assert!((h(c.vp.x[i], c.vp.xi[i]) - e0[i]).abs() < 1e-9);
        assert!((0.0..TAU).contains(&c.vp.x[i]));
    }
}

#[test]
fn reversed_flow_returns_home() {
    let phi = pendulum_potential();
    let mut c = ParticleCloud::from_samples(1, vec![0.3, 2.0, 5.5], vec![1.2, -0.4, 0.0]);
    for _ in 0..100 {
        flow_vp_step(&mut c, &phi, 0.01);
    }
    for p in c.vp.xi.iter_mut() {
        *p = -*p;
    }
    for _ in 0..100 {
        flow_vp_step(&mut c, &phi, 0.01);
    }
    for i in 0..3 {
        assert!(torus_gap(c.vp.x[i], c.x0[i]) < 1e-8);
        assert!((c.vp.xi[i] + c.xi0[i]).abs() < 1e-8);
    }
}

#[test]
fn relativistic_streaming_is_subluminal() {
    let eps = 0.5;
    let mut c = ParticleCloud::from_samples(2, vec![0.0, 0.0, 1.0, 1.0], vec![100.0, 0.0, -3.0, 4.0]);
    let e = SpectralField::zeros(2, 2, 2);
    let dt = 0.05;
    for _ in 0..10 {
        let before = c.vm.x.clone();
        flow_vm_step(&mut c, &e, None, eps, dt);
        for i in 0..2 {
            let dx = torus_gap(c.vm.x[2 * i], before[2 * i]);
            let dy = torus_gap(c.vm.x[2 * i + 1], before[2 * i + 1]);
            assert!((dx * dx + dy * dy).sqrt() <= dt / eps + 1e-12);
        }
    }
    let inv = 1.0 / (1.0 + eps * eps * 25.0f64).sqrt();
    assert!(torus_gap(c.vm.x[2], 1.0 - 3.0 * inv * 0.5) < 1e-12);
}

#[test]
fn gyration_conserves_momentum_magnitude() {
    let e = SpectralField::zeros(3, 2, 3);
    let b = SpectralField::constant(3, 2, &[0.0, 0.0, 1.0]);
    let mut c = ParticleCloud::from_samples(3, vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 0.5]);
    let n0 = 1.25f64.sqrt();
    for _ in 0..1000 {
        flow_vm_step(&mut c, &e, Some(&b), 0.5, 0.01);
    }
    let n: f64 = c.vm.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((n - n0).abs() < 1e-10);
    assert!((c.vm.xi[2] - 0.5).abs() < 1e-15);
}

#[test]
fn relativistic_flow_converges_to_classical() {
    let phi = pendulum_potential();
    let mut e = SpectralField::zeros(1, 2, 1);
    e.add_sin(0, &[1], 1.0);
    let gap = |eps: f64| {
        let mut c = ParticleCloud::from_samples(1, vec![0.5, 3.0], vec![1.0, -0.7]);
        for _ in 0..100 {
            flow_vp_step(&mut c, &phi, 0.01);
            flow_vm_step(&mut c, &e, None, eps, 0.01);
        }
        (0..2).map(|i| torus_gap(c.vp.x[i], c.vm.x[i]) + (c.vp.xi[i] - c.vm.xi[i]).abs()).fold(0.0, f64::max)
    };
    let coarse = gap(0.1);
    let fine = gap(0.01);
    assert!(fine < 1e-3);
    let order = (coarse / fine).log10();
    assert!((1.8..=2.2).contains(&order), "{order}");
}

#[test]
fn sampling_is_deterministic() {
    let ens = bumpy(&[0.5, 0.5]);
    let a = sample_cloud(&ens, 200, 3).unwrap();
    let b = sample_cloud(&ens, 200, 3).unwrap();
    let c = sample_cloud(&ens, 200, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.x0, c.x0);
    assert!(a.weights.iter().all(|w| (w - 1.0 / 200.0).abs() < 1e-18));
}

#[test]
fn phases_are_drawn_with_their_weights() {
    let ens = bumpy(&[0.3, 0.7]);
    let n = 10_000;
    let c = sample_cloud(&ens, n, 11).unwrap();
    let frac = c.phase.iter().filter(|&&p| p == 0).count() as f64 / n as f64;
    let sigma = (0.3 * 0.7 / n as f64).sqrt();
    assert!((frac - 0.3).abs() < 4.0 * sigma, "{frac}");
    for i in 0..n {
        let s = if c.phase[i] == 0 { 0.2 } else { -0.2 };
        assert!((c.xi0[2 * i] - s).abs() < 1e-14);
    }
}

#[test]
fn density_score_decays_like_inverse_root_n() {
    let ens = bumpy(&[0.5, 0.5]);
    let score = |n: usize| -> f64 {
        (0..6)
            .map(|s| consistency_check(&sample_cloud(&ens, n, 100 + s).unwrap(), &ens, System::Vp, 2).density_score)
            .sum::<f64>()
            / 6.0
    };
    let ratio = score(400) / score(6400);
    assert!((2.5..=6.0).contains(&ratio), "{ratio}");
    let r = consistency_check(&sample_cloud(&ens, 400, 1).unwrap(), &ens, System::Vm, 2);
    assert!(r.max_residual < 1e-14);
}
