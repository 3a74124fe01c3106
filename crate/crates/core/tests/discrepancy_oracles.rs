use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use svgd_core::discrepancy::{ksd2_between, ksd2_to_target, mmd2, rkhs_norm_g, Estimator};
use svgd_core::targets::{gaussian_target, sample_uniform_ball};
use svgd_core::{KernelSpec, Particles, TargetModel};

fn std_normal(d: usize) -> TargetModel {
    gaussian_target(vec![0.0; d], vec![1.0; d]).unwrap()
}

fn normal_sample(m: usize, d: usize, seed: u64) -> Particles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    Particles::from_flat(d, data).unwrap()
}

#[test]
fn stein_identity_on_exact_samples() {
    let target = std_normal(5);
    let sample = normal_sample(10_000, 5, 2024);
    let r = ksd2_to_target(&sample, &target, &KernelSpec::rbf(1.0), Estimator::Ustat).unwrap();
    let se = r.std_err.unwrap();
    assert!(se > 0.0);
    assert!(r.value.abs() <= 3.0 * se, "ksd2 = {} with se {se}", r.value);
}

#[test]
fn two_point_between_is_a_composition_of_stein_inner() {
    let target = std_normal(2);
    let k = KernelSpec::rbf(1.0);
    let (o, e1) = (vec![0.0, 0.0], vec![1.0, 0.0]);
    let (go, ge) = (target.grad(&o), target.grad(&e1));
    let expected = k.stein_inner(&o, &go, &o, &go).unwrap() - 2.0 * k.stein_inner(&o, &go, &e1, &ge).unwrap()
        + k.stein_inner(&e1, &ge, &e1, &ge).unwrap();
    let a = Particles::from_rows(std::slice::from_ref(&o)).unwrap();
    let b = Particles::from_rows(&[e1]).unwrap();
    let got = ksd2_between(&a, &b, &target, &k).unwrap().value;
    assert!((got - expected).abs() < 1e-12);
    // By hand: the diagonal terms are d/h = 2 and ‖e1‖² + d/h = 3, and the
    // score term of the cross product cancels its trace term exactly.
    assert!((got - 5.0).abs() < 1e-12, "{got}");
}

/// `ksd2_between(A, B)` with `B` an i.i.d. reference sample from the target
/// differs from the V-statistic `ksd2_to_target(A)` by `BB − 2·AB`, where
/// `E[AB] = 0` and `E[BB] = E[κ(b, b)]/M` by the Stein identity.
#[test]
fn between_reference_sample_agrees_with_ksd_to_target() {
    let d = 2;
    let target = std_normal(d);
    let k = KernelSpec::rbf(1.0);
    let a = sample_uniform_ball(d, 1.5, 30, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = normal_sample(10_000, d, 77);
    let m = b.len() as f64;

    let between = ksd2_between(&a, &b, &target, &k).unwrap().value;
    let direct = ksd2_to_target(&a, &target, &k, Estimator::Vstat).unwrap().value;

    let ga: Vec<Vec<f64>> = a.rows().map(|x| target.grad(x)).collect();
    let mut diag = 0.0;
    let cross: Vec<f64> = b
        .rows()
        .map(|y| {
            let gy = target.grad(y);
            diag += k.stein_inner(y, &gy, y, &gy).unwrap();
            a.rows().zip(&ga).map(|(x, gx)| k.stein_inner(x, gx, y, &gy).unwrap()).sum::<f64>() / a.len() as f64
        })
        .collect();
    let c_mean = cross.iter().sum::<f64>() / m;
    let c_var = cross.iter().map(|c| (c - c_mean).powi(2)).sum::<f64>() / (m - 1.0);
    let bb = ksd2_to_target(&b, &target, &k, Estimator::Ustat).unwrap();
    let se = bb.std_err.unwrap() + 2.0 * (c_var / m).sqrt();

    let gap = between - direct - diag / (m * m);
    assert!(gap.abs() <= 3.0 * se, "gap {gap}, se {se}");
}

#[test]
fn zero_scores_leave_the_trace_double_sum() {
    // The standard normal score vanishes at the origin, so a cloud of points
    // at the origin sees only the mixed-partial trace term.
    let d = 3;
    let k = KernelSpec::imq(1.0);
    let p = Particles::zeros(4, d);
    let v = ksd2_to_target(&p, &std_normal(d), &k, Estimator::Vstat).unwrap().value;
    assert!((v - k.mixed_partial_trace(&[0.0; 3], &[0.0; 3]).unwrap()).abs() < 1e-12);
}

#[test]
fn mmd_two_point_brute_force() {
    let k = KernelSpec::rbf(1.0);
    let a = Particles::from_rows(&[vec![0.0], vec![0.5]]).unwrap();
    let b = Particles::from_rows(&[vec![1.0], vec![-1.0], vec![2.0]]).unwrap();
    let mean = |p: &Particles, q: &Particles| {
        let mut s = 0.0;
        for x in p.rows() {
            for y in q.rows() {
                s += (-0.5 * (x[0] - y[0]).powi(2)).exp();
            }
        }
        s / (p.len() * q.len()) as f64
    };
    let expected = mean(&a, &a) + mean(&b, &b) - 2.0 * mean(&a, &b);
    let got = mmd2(&a, &b, &k, Estimator::Vstat).unwrap().value;
    assert!((got - expected).abs() < 1e-14);
    let single = mmd2(
        &Particles::from_rows(&[vec![0.0]]).unwrap(),
        &Particles::from_rows(&[vec![1.0]]).unwrap(),
        &k,
        Estimator::Vstat,
    )
    .unwrap();
    assert!((single.value - 0.786_938_680_574_733).abs() < 1e-12);
}

#[test]
fn g_norm_of_origin_batch() {
    let target = std_normal(5);
    let batch = Particles::zeros(1, 5);
    let g = rkhs_norm_g(&batch, &target, &KernelSpec::rbf(1.0)).unwrap();
    assert!((g - 5f64.sqrt()).abs() < 1e-14);
}
