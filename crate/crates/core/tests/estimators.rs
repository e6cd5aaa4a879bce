use eulerlike::estimators::{
    ensemble_benettin, ensemble_fk, ensemble_samples, ensemble_spectrum, ensemble_tightness, estimate_fi_plugin,
    estimate_top_benettin, fisher_from_exponents, lambda_sigma_analytic, tightness_diagnostic, EnsembleSpec,
    ExponentEstimate, Horizon, PluginOptions, SampleSet,
};
use eulerlike::models::{make_l96, make_ou, make_scalar_multiplicative};
use eulerlike::sde::{gauss_increments, IntegratorConfig, NoiseStream, Scheme};
use eulerlike::Error;

fn heun(dt: f64) -> IntegratorConfig<f64> {
    IntegratorConfig::new(dt, Scheme::HeunStratonovich).unwrap()
}

#[test]
fn scalar_oracle_exponent() {
    let sys = make_scalar_multiplicative(-0.3, 1.0);
    let horizon = Horizon::with_default_burn_in(1000.0).unwrap();
    let est = estimate_top_benettin(&sys, &[1.0], &[1.0], horizon, &heun(1e-3), &mut NoiseStream::new(1, 0)).unwrap();
    assert!(est.within(-0.3, 4.0), "{est:?}");
    assert!(est.std_error > 0.0 && est.std_error < 0.1);
}

#[test]
fn ou_spectrum_is_minus_eps() {
    let eps = 0.2;
    let sys = make_ou(3, eps).unwrap();
    let spec = EnsembleSpec { base_seed: 2, size: 2, x0_scale: 1.0 };
    let cfg = IntegratorConfig::new(1e-2, Scheme::Rk4Deterministic).unwrap();
    let s = ensemble_spectrum(&sys, &spec, Horizon::with_default_burn_in(100.0).unwrap(), 3, &cfg).unwrap();
    for e in &s.exponents {
        assert!((e.value + eps).abs() < 1e-10, "{e:?}");
    }
    assert!((s.sum.value - lambda_sigma_analytic(&sys).unwrap()).abs() < 1e-10);
}

#[test]
fn l96_spectrum_sums_to_eps_trace() {
    let sys = make_l96(5, 0.1, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let spec = EnsembleSpec { base_seed: 3, size: 2, x0_scale: 1.0 };
    let s = ensemble_spectrum(&sys, &spec, Horizon::with_default_burn_in(300.0).unwrap(), 5, &heun(1e-3)).unwrap();
    let target = lambda_sigma_analytic(&sys).unwrap();
    assert_eq!(target, -0.5);
    assert!(s.sum.within(target, 4.0), "{:?}", s.sum);
    // ordered spectrum
    for w in s.exponents.windows(2) {
        assert!(w[0].value >= w[1].value - 3.0 * (w[0].std_error + w[1].std_error));
    }
}

#[test]
fn benettin_and_fk_agree_on_l96() {
    let sys = make_l96(5, 0.1, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let horizon = Horizon::with_default_burn_in(500.0).unwrap();
    let b = ensemble_benettin(&sys, &EnsembleSpec { base_seed: 10, size: 2, x0_scale: 1.0 }, horizon, &heun(1e-3)).unwrap();
    let f = ensemble_fk(&sys, &EnsembleSpec { base_seed: 11, size: 2, x0_scale: 1.0 }, horizon, &heun(1e-3)).unwrap();
    assert!(b.pooled.agrees_with(&f.pooled, 4.0), "{:?} vs {:?}", b.pooled, f.pooled);
    assert_eq!(b.series.len(), 20);
}

#[test]
fn fk_refuses_multiplicative_noise() {
    let sys = make_scalar_multiplicative(-0.3, 1.0);
    let spec = EnsembleSpec { base_seed: 1, size: 1, x0_scale: 1.0 };
    let err = ensemble_fk(&sys, &spec, Horizon::with_default_burn_in(1.0).unwrap(), &heun(1e-2)).unwrap_err();
    match err {
        Error::Trajectory { source, .. } => assert!(matches!(*source, Error::Unsupported(_))),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fisher_identity_on_ou() {
    for n in 1..=4 {
        let sys = make_ou(n, 0.05).unwrap();
        let fi = fisher_from_exponents(&ExponentEstimate::analytic(-0.05), &sys).unwrap();
        assert_eq!(fi.value, n as f64);
        assert_eq!(fi.std_error, 0.0);
    }
}

#[test]
fn plugin_on_independent_gaussians_in_three_dimensions() {
    // N(0, diag(s²)): ½ Σ 1/s_i²
    let s = [0.5, 1.0, 2.0];
    let mut stream = NoiseStream::new(4, 0);
    let pts: Vec<Vec<f64>> = (0..200_000)
        .map(|_| {
            let z: Vec<f64> = gauss_increments(&mut stream, 3, 1.0);
            z.iter().zip(&s).map(|(a, b)| a * b).collect()
        })
        .collect();
    let samples = SampleSet::from_points(pts).unwrap();
    let dirs = [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let fi = estimate_fi_plugin(&samples, &dirs, &PluginOptions::default()).unwrap();
    let exact: f64 = 0.5 * s.iter().map(|v| 1.0 / (v * v)).sum::<f64>();
    assert!((fi / exact - 1.0).abs() < 0.1, "{fi} vs {exact}");
}

#[test]
fn ou_samples_have_stationary_variance() {
    let sys = make_ou(2, 0.5).unwrap();
    let spec = EnsembleSpec { base_seed: 5, size: 2, x0_scale: 1.0 };
    let set = ensemble_samples(&sys, &spec, Horizon::with_default_burn_in(4000.0).unwrap(), &heun(1e-2), 100).unwrap();
    assert_eq!(set.dim(), 2);
    assert!(set.times().windows(2).all(|w| w[1] > w[0]));
    let var = set.states().iter().map(|s| s.x[0] * s.x[0]).sum::<f64>() / set.len() as f64;
    assert!((var - 0.5).abs() < 0.05, "{var}");
    for s in set.states() {
        let nv: f64 = s.v.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((nv - 1.0).abs() < 1e-12);
    }
}

#[test]
fn tightness_of_ou_matches_gaussian_moment() {
    // E exp(γ x²) under N(0, ½) is (1 − γ)^{−1/2}
    let sys = make_ou(1, 1.0).unwrap();
    let spec = EnsembleSpec { base_seed: 6, size: 2, x0_scale: 0.7 };
    let t = ensemble_tightness(&sys, &spec, Horizon::with_default_burn_in(20_000.0).unwrap(), &heun(1e-2), 100, 0.2).unwrap();
    let exact = (1.0f64 - 0.2).powf(-0.5);
    assert!((t.value - exact).abs() < 4.0 * t.std_error + 1e-3, "{t:?} vs {exact}");
    assert!(!t.overflow);
    let pts = SampleSet::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
    assert!((tightness_diagnostic(&pts, 1.0).unwrap().value - (1.0 + 1f64.exp()) / 2.0).abs() < 1e-12);
}

#[test]
fn horizons_are_validated() {
    assert!(Horizon::with_default_burn_in(0.0).is_err());
    assert!(Horizon::new(10.0, 10.0).is_err());
    assert!(Horizon::new(10.0, -1.0).is_err());
    let sys = make_ou(2, 0.1).unwrap();
    let spec = EnsembleSpec { base_seed: 1, size: 0, x0_scale: 1.0 };
    assert!(ensemble_benettin(&sys, &spec, Horizon::with_default_burn_in(1.0).unwrap(), &heun(1e-2)).is_err());
}
