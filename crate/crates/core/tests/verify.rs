use eulerlike::algebra::{BilinearTensor, DenseMatrix};
use eulerlike::models::{make_l96, EulerLikeSystem};
use eulerlike::sde::{IntegratorConfig, NoiseStream, Scheme};
use eulerlike::verify::{
    div_trace_identity_check, energy_drift, identity_suite, norm_growth_check, projective_bracket_check,
    random_admissible_tensor, random_unit, rescale_check, shear_identity_residual, sphere_field, tangent_basis,
    volume_log_det, Suite, SuiteConfig,
};
use eulerlike::Matrix;

fn rk4(dt: f64) -> IntegratorConfig<f64> {
    IntegratorConfig::new(dt, Scheme::Rk4Deterministic).unwrap()
}

fn undamped(b: BilinearTensor<f64>) -> EulerLikeSystem<f64> {
    let n = b.dim();
    EulerLikeSystem::new(b, DenseMatrix::identity(n).scale(-1.0), Vec::new(), 0.0).unwrap()
}

#[test]
fn all_suites_pass_on_l96_and_random_tensors() {
    let mut systems = vec![make_l96(5, 0.01, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap(), make_l96(7, 0.1, &[1.0; 7]).unwrap()];
    for (n, seed) in [(3, 1), (4, 2), (6, 3)] {
        systems.push(undamped(random_admissible_tensor(n, seed).unwrap()));
    }
    let sc = SuiteConfig { points: 10, ..SuiteConfig::default() };
    for sys in &systems {
        let reports = identity_suite(sys, Suite::All, &sc).unwrap();
        assert_eq!(reports.len(), 8);
        for r in &reports {
            assert!(r.pass, "n = {}: {r:?}", sys.n());
            assert!(r.points_tested > 0);
        }
    }
}

#[test]
fn energy_violating_tensor_fails_energy_only_check() {
    // F_1 = x_1²: divergence and energy both broken
    let b = BilinearTensor::from_triplets(3, vec![(0, 0, 0, 1.0)]).unwrap();
    let sys = EulerLikeSystem::new_permissive(b, DenseMatrix::identity(3).scale(-1.0), Vec::new(), 0.0).unwrap();
    let sc = SuiteConfig { points: 5, ..SuiteConfig::default() };
    let reports = identity_suite(&sys, Suite::Energy, &sc).unwrap();
    assert_eq!(reports.len(), 1);
    assert!(!reports[0].pass);
    assert!(reports[0].worst_input.is_some());
}

#[test]
fn suites_are_deterministic_for_a_seed() {
    let sys = make_l96(5, 0.01, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let sc = SuiteConfig { points: 5, ..SuiteConfig::default() };
    assert_eq!(identity_suite(&sys, Suite::All, &sc).unwrap(), identity_suite(&sys, Suite::All, &sc).unwrap());
}

#[test]
fn flow_identities_reject_damped_input() {
    let sys = make_l96(5, 0.01, &[1.0; 5]).unwrap();
    let x = [1.0, 0.0, 0.5, 0.0, -1.0];
    assert!(shear_identity_residual(&sys, &x, 1.0, &rk4(1e-2)).is_err());
    assert!(rescale_check(&sys, &x, 2.0, 1.0, &rk4(1e-2)).is_err());
    let free = sys.with_eps(0.0).unwrap();
    assert!(rescale_check(&free, &x, -1.0, 1.0, &rk4(1e-2)).is_err());
    assert!(norm_growth_check(&free, &[0.0; 5], &[1.0], &rk4(1e-2)).is_err());
}

#[test]
fn shear_residual_shrinks_like_rk4() {
    let sys = make_l96(5, 0.0, &[1.0; 5]).unwrap();
    let x = [1.0, -0.5, 2.0, 0.3, -1.1];
    let r: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| shear_identity_residual(&sys, &x, 2.0, &rk4(dt)).unwrap())
        .collect();
    assert!(r[1] < r[0] / 8.0 && r[2] < r[1] / 8.0, "{r:?}");
}

#[test]
fn conservation_at_zero_damping() {
    let sys = make_l96(6, 0.0, &[1.0; 6]).unwrap();
    let x = [0.5, -1.0, 1.5, 0.2, -0.3, 0.9];
    assert!(energy_drift(&sys, &x, 20.0, &rk4(1e-3)).unwrap() < 1e-9);
    assert!(volume_log_det(&sys, &x, 20.0, &rk4(1e-3)).unwrap() < 1e-8);
    assert!(norm_growth_check(&sys, &x, &[0.5, 1.0, 5.0], &rk4(1e-3)).unwrap().pass);
}

#[test]
fn sphere_fields_are_tangent_and_identities_hold() {
    let mut s = NoiseStream::new(8, 0);
    for n in 2..=5 {
        let data: Vec<f64> = (0..n * n).map(|i| ((i * 7 + n) % 5) as f64 - 2.0).collect();
        let a = Matrix::from_row_major(n, n, data.clone()).unwrap();
        let b = Matrix::from_row_major(n, n, data.iter().rev().copied().collect()).unwrap();
        let v = random_unit(&mut s, n);
        let va = sphere_field(&a, &v);
        assert!(va.iter().zip(&v).map(|(p, q)| p * q).sum::<f64>().abs() < 1e-12);
        let basis = tangent_basis(&v);
        assert_eq!(basis.len(), n - 1);
        assert!(div_trace_identity_check(&a, &v).unwrap() < 1e-6);
        assert!(projective_bracket_check(&a, &b, &v).unwrap() < 1e-5);
    }
}
