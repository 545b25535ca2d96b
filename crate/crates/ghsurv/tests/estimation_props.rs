//! Fitting behavior: large-sample consistency, determinism, Hessian oracle
//! agreement, and model-comparison ordering.

use ghsurv::estimation::nll_objective;
use ghsurv::{
    compare_models, fit_mle, five_point_hessian, BaselineFamily, FitConfig, HazardStructure,
    SurvivalDataset,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn exponential_sample(n: usize, seed: u64) -> SurvivalDataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln().max(f64::MIN_POSITIVE.ln())
        })
        .map(|t| t.max(1e-12))
        .collect();
    let status = vec![1u8; n];
    SurvivalDataset::new(times, status, DMatrix::zeros(n, 0), DMatrix::zeros(n, 0)).unwrap()
}

fn covariate_sample(n: usize, seed: u64) -> SurvivalDataset {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    let mut cov = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.random::<f64>() - 0.5;
        let u: f64 = rng.random();
        let t = (-(1.0 - u).ln() * (0.9 * z).exp()).max(1e-9);
        let c: f64 = 2.5 * rng.random::<f64>();
        times.push(t.min(c));
        status.push(u8::from(t <= c));
        cov.push(z);
    }
    let x = DMatrix::from_fn(n, 1, |r, _| cov[r]);
    SurvivalDataset::new(times, status, x.clone(), x).unwrap()
}

#[test]
fn exponential_shape_is_consistent() {
    // Exp(1) is Weibull with nu = 1; at n = 5000 the MLE sits within 0.05.
    let data = exponential_sample(5000, 11);
    let fit = fit_mle(
        &data,
        BaselineFamily::Weibull,
        HazardStructure::Gh,
        &FitConfig::default(),
    )
    .unwrap();
    assert!(fit.converged);
    let nu = fit.theta_hat.baseline.xi[1];
    assert!((nu - 1.0).abs() < 0.05, "nu = {nu}");
    let sigma = fit.theta_hat.baseline.xi[0];
    assert!((sigma - 1.0).abs() < 0.1, "sigma = {sigma}");
}

#[test]
fn refit_is_deterministic() {
    let data = covariate_sample(400, 29);
    let config = FitConfig::default();
    let a = fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Ph, &config).unwrap();
    let b = fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Ph, &config).unwrap();
    assert_eq!(a.free_hat, b.free_hat);
    assert_eq!(a.loglik.to_bits(), b.loglik.to_bits());
    assert_eq!(a.n_starts_used, b.n_starts_used);
}

#[test]
fn hessian_agrees_with_five_point_oracle() {
    // Eigenvalue ratios from the central-difference Hessian must match a
    // five-point-stencil evaluation to 1e-4 relative.
    let data = covariate_sample(500, 3);
    let fit = fit_mle(
        &data,
        BaselineFamily::Weibull,
        HazardStructure::Ph,
        &FitConfig::default(),
    )
    .unwrap();
    assert!(fit.converged);
    let obj = nll_objective(fit.family, fit.structure, &data);
    let oracle = five_point_hessian(&obj, &fit.free_hat).unwrap();

    let ratios = |h: &[Vec<f64>]| -> Vec<f64> {
        let k = h.len();
        let m = nalgebra::DMatrix::from_fn(k, k, |i, j| h[i][j]);
        let mut mods: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().map(|v| v.abs()).collect();
        mods.sort_by(|a, b| b.total_cmp(a));
        let max = mods[0];
        mods.iter().map(|v| v / max).collect()
    };
    let a = ratios(&fit.hessian_fitting);
    let b = ratios(&oracle);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!(
            (x - y).abs() <= 1e-4 * y.abs().max(1e-12),
            "eigen ratio {x} vs oracle {y}"
        );
    }
}

#[test]
fn nested_structures_cannot_fit_better() {
    let data = covariate_sample(350, 17);
    let config = FitConfig::default();
    let gh = fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Gh, &config).unwrap();
    let ph = fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Ph, &config).unwrap();
    let ah = fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Ah, &config).unwrap();
    // PH and AH are constrained GH models; the GH optimum dominates both up
    // to optimizer slack.
    assert!(gh.loglik >= ph.loglik - 1e-4);
    assert!(gh.loglik >= ah.loglik - 1e-4);
}

#[test]
fn compare_models_sorts_by_aic() {
    let data = covariate_sample(350, 17);
    let config = FitConfig::default();
    let fits = vec![
        fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Gh, &config).unwrap(),
        fit_mle(&data, BaselineFamily::Weibull, HazardStructure::Aft, &config).unwrap(),
        fit_mle(&data, BaselineFamily::Pgw, HazardStructure::Ph, &config).unwrap(),
    ];
    let refs: Vec<&_> = fits.iter().collect();
    let order = compare_models(&refs).unwrap();
    for w in order.windows(2) {
        assert!(fits[w[0]].aic <= fits[w[1]].aic + 1e-12);
    }
}

#[test]
fn degenerate_data_is_rejected() {
    let mut data = exponential_sample(50, 5);
    data.status = vec![0; 50];
    let err = fit_mle(
        &data,
        BaselineFamily::Weibull,
        HazardStructure::Gh,
        &FitConfig::default(),
    );
    assert!(err.is_err());
}

#[test]
fn aft_requires_identical_designs() {
    let data = {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let n = 60;
        let times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
        let status = vec![1u8; n];
        let x = DMatrix::from_fn(n, 1, |r, _| r as f64 / n as f64);
        let xt = DMatrix::from_fn(n, 1, |r, _| (r as f64 / n as f64) * 2.0);
        SurvivalDataset::new(times, status, x, xt).unwrap()
    };
    assert!(fit_mle(
        &data,
        BaselineFamily::Weibull,
        HazardStructure::Aft,
        &FitConfig::default(),
    )
    .is_err());
}
