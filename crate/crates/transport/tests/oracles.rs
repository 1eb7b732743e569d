use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmlimit_core::{ParticleCloud, SpectralField};
use vmlimit_transport::*;

fn random_cloud(rng: &mut ChaCha8Rng, dim: usize, n: usize, spread: f64) -> EmpiricalMeasure {
    let x = (0..n * dim).map(|_| rng.random::<f64>() * TAU).collect();
    let xi = (0..n * dim).map(|_| spread * (rng.random::<f64>() - 0.5)).collect();
    EmpiricalMeasure::uniform(dim, x, xi).unwrap()
}

fn brute_force_sq(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    fn rec(k: usize, perm: &mut Vec<usize>, used: &mut Vec<bool>, acc: f64, a: &EmpiricalMeasure, b: &EmpiricalMeasure, best: &mut f64) {
        let n = a.len();
        if k == n {
            *best = best.min(acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(k + 1, perm, used, acc + ground_cost(a, k, b, j), a, b, best);
                perm.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, &mut Vec::new(), &mut vec![false; a.len()], 0.0, a, b, &mut best);
    best / a.len() as f64
}

#[test]
fn exact_matches_permutation_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..200 {
        let n = 1 + case % 8;
        let dim = 1 + case % 3;
        let a = random_cloud(&mut rng, dim, n, 2.0);
        let b = random_cloud(&mut rng, dim, n, 2.0);
        let exact = w2_exact(&a, &b).unwrap();
        let brute = brute_force_sq(&a, &b).sqrt();
        assert!((exact - brute).abs() <= 1e-12, "case {case}: {exact} vs {brute}");
    }
}

#[test]
fn assignment_is_a_permutation_on_degenerate_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [2usize, 5, 17, 64] {
        let cost: Vec<f64> = (0..n * n).map(|_| rng.random_range(0..3) as f64).collect();
        let mut sol = solve_assignment(n, &cost);
        sol.sort_unstable();
        assert_eq!(sol, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn flow_agrees_with_assignment_on_uniform_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.random_range(2..40);
        let a = random_cloud(&mut rng, 2, n, 1.0);
        let b = random_cloud(&mut rng, 2, n, 1.0);
        let exact = w2_exact(&a, &b).unwrap();
        let mut w: Vec<f64> = vec![1.0 / n as f64; n];
        w[0] += 1e-9;
        w[1] -= 1e-9;
        let x: Vec<f64> = (0..n).flat_map(|i| a.position(i).to_vec()).collect();
        let xi: Vec<f64> = (0..n).flat_map(|i| a.velocity(i).to_vec()).collect();
        let a2 = EmpiricalMeasure::new(2, x, xi, w).unwrap();
        let general = w2_exact(&a2, &b).unwrap();
        assert!((exact - general).abs() < 1e-6, "{exact} vs {general}");
    }
}

#[test]
fn general_weights_match_replicated_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let a = random_cloud(&mut rng, 1, 3, 1.0);
        let b = random_cloud(&mut rng, 1, 4, 1.0);
        let ca: Vec<usize> = (0..3).map(|_| rng.random_range(1..4)).collect();
        let total: usize = ca.iter().sum();
        let mut cb = vec![1usize; 4];
        let mut left = total - 4;
        while left > 0 {
            cb[rng.random_range(0..4)] += 1;
            left -= 1;
        }
        let expand = |m: &EmpiricalMeasure, c: &[usize]| {
            let idx: Vec<usize> = c.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat(i).take(k)).collect();
            m.select(&idx)
        };
        let weighted = |m: &EmpiricalMeasure, c: &[usize]| {
            let x: Vec<f64> = (0..m.len()).flat_map(|i| m.position(i).to_vec()).collect();
            let xi: Vec<f64> = (0..m.len()).flat_map(|i| m.velocity(i).to_vec()).collect();
            let w = c.iter().map(|&k| k as f64 / total as f64).collect();
            EmpiricalMeasure::new(1, x, xi, w).unwrap()
        };
        let oracle = brute_force_sq(&expand(&a, &ca), &expand(&b, &cb)).sqrt();
        let got = w2_exact(&weighted(&a, &ca), &weighted(&b, &cb)).unwrap();
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let n = rng.random_range(4..24);
        let a = random_cloud(&mut rng, 2, n, 1.0);
        let b = random_cloud(&mut rng, 2, n, 1.0);
        let c = random_cloud(&mut rng, 2, n, 1.0);
        let ab = w2_exact(&a, &b).unwrap();
        let ba = w2_exact(&b, &a).unwrap();
        let bc = w2_exact(&b, &c).unwrap();
        let ac = w2_exact(&a, &c).unwrap();
        assert_eq!(w2_exact(&a, &a).unwrap(), 0.0);
        assert!((ab - ba).abs() <= 1e-12);
        assert!(ac <= ab + bc + 1e-10);
    }
}

#[test]
fn common_translation_leaves_distance_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..20 {
        let a = random_cloud(&mut rng, 2, 30, 1.0);
        let b = random_cloud(&mut rng, 2, 30, 1.0);
        let s = [rng.random::<f64>() * 10.0 - 5.0, rng.random::<f64>() * 10.0 - 5.0];
        let before = w2_exact(&a, &b).unwrap();
        let after = w2_exact(&a.translated(&s, &[0.0, 0.0]), &b.translated(&s, &[0.0, 0.0])).unwrap();
        assert!((before - after).abs() <= 1e-12, "{before} vs {after}");
    }
}

#[test]
fn pairing_cost_dominates_optimal_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let a = random_cloud(&mut rng, 2, 50, 1.0);
        let b = random_cloud(&mut rng, 2, 50, 1.0);
        let w2 = w2_exact(&a, &b).unwrap();
        assert!(pairing_cost(&a, &b).unwrap() >= w2 * w2 - 1e-12);
    }
}

#[test]
fn single_points_at_distance_r() {
    for r in [0.1, 1.0, 3.0] {
        let a = EmpiricalMeasure::uniform(2, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let b = EmpiricalMeasure::uniform(2, vec![1.0 + r, 1.0], vec![0.0, 0.0]).unwrap();
        assert!((w2_exact(&a, &b).unwrap() - r).abs() < 1e-14);
    }
}

#[test]
fn size_limits_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let a = random_cloud(&mut rng, 1, 10, 1.0);
    let b = random_cloud(&mut rng, 1, 10, 1.0);
    let opts = ExactOptions { n_exact: 8, n_flow: 8 };
    assert!(matches!(w2_exact_with(&a, &b, &opts), Err(TransportError::Unsupported(_))));
    let c = random_cloud(&mut rng, 1, 9, 1.0);
    assert!(matches!(w2_exact_with(&a, &c, &opts), Err(TransportError::Unsupported(_))));
    assert!(w2_exact(&a, &c).is_ok());
}

#[test]
fn coupling_functional_by_hand() {
    let mut cloud = ParticleCloud::from_samples(2, vec![0.0; 4], vec![0.0; 4]);
    assert_eq!(coupling_q(&cloud), 0.0);
    cloud.vm.x = vec![1.0, 0.0, 0.0, 0.0];
    cloud.vm.xi = vec![0.0, 0.0, 0.0, 1.0];
    assert!((coupling_q(&cloud) - 0.5).abs() < 1e-15);
    cloud.vm.x = vec![TAU - 1.0, 0.0, 0.0, 0.0];
    assert!((coupling_q(&cloud) - 0.5).abs() < 1e-12);
}

#[test]
fn subsampled_distance_is_below_pairing() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 600;
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>() * TAU).collect();
    let xi: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut cloud = ParticleCloud::from_samples(2, x.clone(), xi.clone());
    cloud.vm.x = x.iter().map(|v| v + 0.05 * (rng.random::<f64>() - 0.5)).collect();
    cloud.vm.xi = xi.iter().map(|v| v + 0.05 * (rng.random::<f64>() - 0.5)).collect();
    let s = subsampled_w2(&cloud, 200, 10, 3).unwrap();
    assert!(s.w2_sq <= 2.0 * s.q_sub + 1e-14);
    assert!(s.std_err > 0.0);
    let again = subsampled_w2(&cloud, 200, 10, 3).unwrap();
    assert_eq!(s, again);
}

#[test]
fn sliced_identity_and_momentum_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let a = random_cloud(&mut rng, 2, 200, 1.0);
    assert_eq!(w2_sliced(&a, &a, 8, 1).unwrap(), 0.0);
    let s = [0.3, -0.4];
    let b = a.translated(&[0.0, 0.0], &s);
    let est = w2_sliced(&a, &b, 256, 1).unwrap();
    assert!((est - 0.5).abs() <= 0.02 * 0.5, "{est}");
    assert!(w2_sliced(&a, &b, 0, 1).is_err());
}

#[test]
fn sliced_tracks_exact_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut pairs = Vec::new();
    for _ in 0..50 {
        let a = random_cloud(&mut rng, 2, 512, 0.5);
        let shift = [rng.random::<f64>() * 1.5, rng.random::<f64>() * 1.5];
        let pert = rng.random::<f64>() * 0.3;
        let x: Vec<f64> = (0..512).flat_map(|i| a.position(i).to_vec()).map(|v| v + pert * (rng.random::<f64>() - 0.5)).collect();
        let xi: Vec<f64> = (0..512).flat_map(|i| a.velocity(i).to_vec()).enumerate().map(|(k, v)| v + shift[k % 2]).collect();
        let b = EmpiricalMeasure::uniform(2, x, xi).unwrap();
        let exact = w2_exact(&a, &b).unwrap();
        let est = w2_sliced(&a, &b, 64, 7).unwrap();
        assert!(est <= exact + 1e-12);
        pairs.push((exact, est));
    }
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let cov: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = pairs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let vy: f64 = pairs.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let r = cov / (vx * vy).sqrt();
    assert!(r >= 0.99, "correlation {r}");
}

fn random_density(rng: &mut ChaCha8Rng, cutoff: usize) -> SpectralField {
    let mut rho = SpectralField::constant(2, cutoff, &[1.0]);
    for _ in 0..6 {
        let k = [rng.random_range(-(cutoff as i64)..=cutoff as i64), rng.random_range(0..=cutoff as i64)];
        if k == [0, 0] {
            continue;
        }
        rho.add_cos(0, &k, 0.08 * (rng.random::<f64>() - 0.5));
        rho.add_sin(0, &k, 0.08 * (rng.random::<f64>() - 0.5));
    }
    rho
}

#[test]
fn loeper_identical_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let rho = random_density(&mut rng, 8);
    let r = loeper_check(&rho, &rho, 256, 1).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(r.pass);
}

#[test]
fn loeper_translation_closed_form() {
    let mut rho1 = SpectralField::constant(2, 8, &[1.0]);
    rho1.add_cos(0, &[1, 0], 0.4);
    rho1.add_cos(0, &[2, 1], 0.2);
    let s = [0.3, 0.1];
    let mut rho2 = SpectralField::constant(2, 8, &[1.0]);
    for (k, amp) in [([1i64, 0i64], 0.4), ([2, 1], 0.2)] {
        let ks = k[0] as f64 * s[0] + k[1] as f64 * s[1];
        rho2.add_cos(0, &k, amp * ks.cos());
        rho2.add_sin(0, &k, amp * ks.sin());
    }
    let oracle: f64 = [([1.0f64, 0.0f64], 0.4f64), ([2.0, 1.0], 0.2)]
        .iter()
        .map(|(k, amp)| {
            let k2 = k[0] * k[0] + k[1] * k[1];
            let ks = k[0] * s[0] + k[1] * s[1];
            2.0 * (amp / 2.0).powi(2) / k2 * 4.0 * (ks / 2.0).sin().powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let r = loeper_check(&rho1, &rho2, 1024, 2).unwrap();
    assert!((r.lhs - oracle).abs() < 1e-12, "{} vs {oracle}", r.lhs);
    assert!(r.pass && r.lhs < r.rhs);
}

#[test]
fn loeper_rejects_bad_densities() {
    let mut neg = SpectralField::constant(2, 4, &[1.0]);
    neg.add_cos(0, &[1, 0], 1.5);
    let ok = SpectralField::constant(2, 4, &[1.0]);
    assert!(matches!(loeper_check(&neg, &ok, 64, 1), Err(TransportError::InvalidDensity(_))));
    let heavy = SpectralField::constant(2, 4, &[1.5]);
    assert!(loeper_check(&heavy, &ok, 64, 1).is_err());
}

#[test]
fn sampling_matches_low_moments() {
    let mut rho = SpectralField::constant(1, 4, &[1.0]);
    rho.add_cos(0, &[1], 0.5);
    let n = 40_000;
    let x = sample_density(&rho, n, 3).unwrap();
    let m: f64 = x.iter().map(|v| v.cos()).sum::<f64>() / n as f64;
    assert!((m - 0.25).abs() < 4.0 * (0.5f64 / n as f64).sqrt(), "{m}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_is_symmetric(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cloud(&mut rng, 2, n, 1.0);
        let b = random_cloud(&mut rng, 2, n, 1.0);
        let ab = w2_exact(&a, &b).unwrap();
        let ba = w2_exact(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
    }

    #[test]
    fn torus_distance_is_bounded(a in -20.0f64..20.0, b in -20.0f64..20.0) {
        let d = circle_dist(a, b);
        prop_assert!((0.0..=std::f64::consts::PI + 1e-12).contains(&d));
        prop_assert!((d - circle_dist(b, a)).abs() < 1e-12);
    }

    #[test]
    fn sliced_never_exceeds_exact(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_cloud(&mut rng, 2, n, 1.0);
        let b = random_cloud(&mut rng, 2, n, 1.0);
        prop_assert!(w2_sliced(&a, &b, 8, seed).unwrap() <= w2_exact(&a, &b).unwrap() + 1e-12);
    }
}

#[test]
fn sparse_and_dense_assignments_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for n in [65usize, 120, 300] {
        let a = random_cloud(&mut rng, 2, n, 1.0);
        let b = random_cloud(&mut rng, 2, n, 1.0);
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = ground_cost(&a, i, &b, j);
            }
        }
        let total = |s: &[usize]| -> f64 { s.iter().enumerate().map(|(i, &j)| c[i * n + j]).sum() };
        let dense = total(&solve_assignment(n, &c));
        for k in [2, 8, 24] {
            let sparse = total(&solve_assignment_sparse(n, &c, k));
            assert!((dense - sparse).abs() <= 1e-10 * dense.max(1.0), "n = {n}, k = {k}");
        }
    }
}
