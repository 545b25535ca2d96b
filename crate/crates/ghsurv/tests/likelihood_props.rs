//! The censored log-likelihood against a density-form oracle computed
//! directly from the baseline functions, plus the exact Weibull
//! reparameterization invariance that motivates the redundancy diagnostics.

use ghsurv::model::log_likelihood;
use ghsurv::{BaselineFamily, BaselineSpec, GHParameters, HazardStructure, SurvivalDataset};
use nalgebra::DMatrix;

/// Deterministic toy sample: n rows, 2 hazard-level covariates (the first
/// shared with the time level), alternating censoring.
fn toy_data(n: usize) -> SurvivalDataset {
    let mut u = 0.618_f64;
    let mut times = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for i in 0..n {
        u = (u * 613.0 + 0.217).fract();
        times.push(0.05 + 3.0 * u);
        status.push(u8::from(i % 3 != 0));
        x1.push(((i as f64) * 0.7).sin());
        x2.push(f64::from(i % 2 == 0));
    }
    let x = DMatrix::from_fn(n, 2, |r, c| if c == 0 { x1[r] } else { x2[r] });
    let xt = DMatrix::from_fn(n, 1, |r, _| x1[r]);
    SurvivalDataset::new(times, status, x, xt).unwrap()
}

/// log-likelihood assembled row by row from log f and log S only.
fn density_form_oracle(theta: &GHParameters, data: &SurvivalDataset) -> f64 {
    let mut total = 0.0;
    for i in 0..data.n() {
        let x: Vec<f64> = data.x.row(i).iter().copied().collect();
        let xt: Vec<f64> = data.xtilde.row(i).iter().copied().collect();
        let eta_t: f64 = theta.alpha.iter().zip(&xt).map(|(a, v)| a * v).sum();
        let eta_h: f64 = theta.beta.iter().zip(&x).map(|(b, v)| b * v).sum();
        let t = data.times[i];
        let big_h = theta.baseline.cum_hazard0(t * eta_t.exp()) * (eta_h - eta_t).exp();
        let log_s = -big_h;
        if data.status[i] == 1 {
            let log_h = theta.baseline.log_hazard0(t * eta_t.exp()) + eta_h;
            total += log_h + log_s; // log f = log h + log S
        } else {
            total += log_s;
        }
    }
    total
}

fn theta(
    family: BaselineFamily,
    xi: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    structure: HazardStructure,
) -> GHParameters {
    GHParameters {
        baseline: BaselineSpec::new(family, xi).unwrap(),
        alpha,
        beta,
        structure,
    }
}

#[test]
fn log_likelihood_matches_density_form_oracle() {
    let data = toy_data(60);
    let cases = vec![
        theta(
            BaselineFamily::Pgw,
            vec![1.2, 1.3, 0.85],
            vec![0.4],
            vec![-0.3, 0.6],
            HazardStructure::Gh,
        ),
        theta(
            BaselineFamily::Ew,
            vec![0.7, 1.2, 0.85],
            vec![-0.5],
            vec![0.2, 0.1],
            HazardStructure::Gh,
        ),
        theta(
            BaselineFamily::Gg,
            vec![0.9, 1.4, 2.0],
            vec![0.0],
            vec![0.8, -0.2],
            HazardStructure::Ph,
        ),
        theta(
            BaselineFamily::LogNormal,
            vec![0.1, 0.9],
            vec![0.3],
            vec![0.0, 0.0],
            HazardStructure::Ah,
        ),
        theta(
            BaselineFamily::Weibull,
            vec![1.0, 1.6],
            vec![0.25],
            vec![0.25, -0.4],
            HazardStructure::Gh,
        ),
    ];
    for th in cases {
        let ours = log_likelihood(&th, &data).unwrap();
        let oracle = density_form_oracle(&th, &data);
        assert!(
            (ours - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
            "{:?}/{:?}: {ours} vs oracle {oracle}",
            th.baseline.family,
            th.structure
        );
    }
}

#[test]
fn weibull_gh_reparameterization_invariance() {
    // With a Weibull baseline the likelihood depends on (alpha, beta) only
    // through (nu - 1) * xt'alpha + x'beta, so shifting alpha_1 by d and
    // beta_1 by -(nu - 1) d leaves it unchanged: the non-identifiable ridge.
    let data = toy_data(60);
    let nu = 1.7;
    let base = theta(
        BaselineFamily::Weibull,
        vec![0.8, nu],
        vec![0.4],
        vec![-0.3, 0.6],
        HazardStructure::Gh,
    );
    let l0 = log_likelihood(&base, &data).unwrap();
    for &d in &[-1.0, -0.25, 0.5, 2.0] {
        let shifted = theta(
            BaselineFamily::Weibull,
            vec![0.8, nu],
            vec![0.4 + d],
            vec![-0.3 - (nu - 1.0) * d, 0.6],
            HazardStructure::Gh,
        );
        let l1 = log_likelihood(&shifted, &data).unwrap();
        assert!(
            (l1 - l0).abs() <= 1e-10 * l0.abs().max(1.0),
            "d = {d}: {l1} vs {l0}"
        );
    }
    // A non-Weibull baseline must break the ridge.
    let bent = theta(
        BaselineFamily::Pgw,
        vec![0.8, nu, 3.0],
        vec![0.4],
        vec![-0.3, 0.6],
        HazardStructure::Gh,
    );
    let b0 = log_likelihood(&bent, &data).unwrap();
    let bent_shift = theta(
        BaselineFamily::Pgw,
        vec![0.8, nu, 3.0],
        vec![0.4 + 0.5],
        vec![-0.3 - (nu - 1.0) * 0.5, 0.6],
        HazardStructure::Gh,
    );
    let b1 = log_likelihood(&bent_shift, &data).unwrap();
    assert!((b1 - b0).abs() > 1e-6 * b0.abs().max(1.0));
}

#[test]
fn constrained_structures_reduce_to_gh() {
    let data = toy_data(60);
    let xi = vec![1.1, 1.2, 0.9];

    let ph = theta(
        BaselineFamily::Pgw,
        xi.clone(),
        vec![0.0],
        vec![0.5, -0.2],
        HazardStructure::Ph,
    );
    let gh_like_ph = theta(
        BaselineFamily::Pgw,
        xi.clone(),
        vec![0.0],
        vec![0.5, -0.2],
        HazardStructure::Gh,
    );
    let a = log_likelihood(&ph, &data).unwrap();
    let b = log_likelihood(&gh_like_ph, &data).unwrap();
    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));

    // AFT needs identical designs; build one with Xtilde = X.
    let aft_data = SurvivalDataset::new(
        data.times.clone(),
        data.status.clone(),
        data.x.clone(),
        data.x.clone(),
    )
    .unwrap();
    let aft = theta(
        BaselineFamily::Pgw,
        xi.clone(),
        vec![0.5, -0.2],
        vec![0.5, -0.2],
        HazardStructure::Aft,
    );
    let gh_like_aft = theta(
        BaselineFamily::Pgw,
        xi.clone(),
        vec![0.5, -0.2],
        vec![0.5, -0.2],
        HazardStructure::Gh,
    );
    let a = log_likelihood(&aft, &aft_data).unwrap();
    let b = log_likelihood(&gh_like_aft, &aft_data).unwrap();
    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));

    let ah = theta(
        BaselineFamily::Pgw,
        xi.clone(),
        vec![0.7],
        vec![0.0, 0.0],
        HazardStructure::Ah,
    );
    let gh_like_ah = theta(
        BaselineFamily::Pgw,
        xi,
        vec![0.7],
        vec![0.0, 0.0],
        HazardStructure::Gh,
    );
    let a = log_likelihood(&ah, &data).unwrap();
    let b = log_likelihood(&gh_like_ah, &data).unwrap();
    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
}

#[test]
fn censoring_only_contributes_survival() {
    // All-censored data: the likelihood is exactly -sum H(t_i).
    let mut data = toy_data(40);
    data.status = vec![0; 40];
    let th = theta(
        BaselineFamily::Pgw,
        vec![1.2, 1.3, 0.85],
        vec![0.4],
        vec![-0.3, 0.6],
        HazardStructure::Gh,
    );
    let ll = log_likelihood(&th, &data).unwrap();
    let oracle = density_form_oracle(&th, &data);
    assert!((ll - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
    assert!(ll < 0.0);
}
