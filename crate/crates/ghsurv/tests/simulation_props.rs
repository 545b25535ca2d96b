//! Sampling correctness (probability integral transform, AFT time scaling),
//! censoring calibration, and scenario-harness reproducibility.

use ghsurv::model::gh_cum_hazard;
use ghsurv::{
    calibrate_censoring, run_scenario, sample_gh, scenario, BaselineFamily, BaselineSpec,
    DiagnosticConfig, FitConfig, GHParameters, HazardStructure,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

fn s2_truth() -> GHParameters {
    scenario(2, 250, 0.3, 1, 1).unwrap().truth().unwrap()
}

#[test]
fn samples_are_probability_integral_transforms() {
    // S(T | x) is uniform: U = exp(-H(T; x)) must match U(0,1) with maximal
    // ECDF deviation below 0.02 at 1e4 draws.
    let theta = s2_truth();
    let n = 10_000;
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let x = DMatrix::from_fn(n, 1, |r, _| z[r]);
    let times = sample_gh(&theta, &x, &x, &mut rng).unwrap();

    let mut u: Vec<f64> = times
        .iter()
        .zip(&z)
        .map(|(&t, &zi)| (-gh_cum_hazard(&theta, t, &[zi], &[zi]).unwrap()).exp())
        .collect();
    u.sort_by(f64::total_cmp);
    let mut max_dev: f64 = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let ecdf_hi = (i + 1) as f64 / n as f64;
        let ecdf_lo = i as f64 / n as f64;
        max_dev = max_dev.max((ecdf_hi - ui).abs()).max((ui - ecdf_lo).abs());
    }
    assert!(max_dev < 0.02, "max ECDF deviation {max_dev}");
}

#[test]
fn aft_sampling_scales_time_exactly() {
    // Under AFT the covariate acts as a pure time rescaling: with the same
    // exponential draw, t(x) = t(0) * exp(-x'b).
    let b = 0.9;
    let theta = GHParameters {
        baseline: BaselineSpec::new(BaselineFamily::Pgw, vec![1.2, 1.3, 0.85]).unwrap(),
        alpha: vec![b],
        beta: vec![b],
        structure: HazardStructure::Aft,
    };
    for &xv in &[-1.0, 0.3, 2.0] {
        let x1 = DMatrix::from_fn(1, 1, |_, _| xv);
        let x0 = DMatrix::zeros(1, 1);
        let mut rng_a = ChaCha12Rng::seed_from_u64(4242);
        let mut rng_b = ChaCha12Rng::seed_from_u64(4242);
        let t_x = sample_gh(&theta, &x1, &x1, &mut rng_a).unwrap()[0];
        let t_0 = sample_gh(&theta, &x0, &x0, &mut rng_b).unwrap()[0];
        let expect = t_0 * (-b * xv).exp();
        assert!(
            (t_x - expect).abs() <= 1e-8 * expect.max(1e-12),
            "x = {xv}: {t_x} vs {expect}"
        );
    }
}

#[test]
fn sampled_cum_hazard_is_standard_exponential() {
    let theta = s2_truth();
    let n = 4000;
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let x = DMatrix::from_fn(n, 1, |r, _| z[r]);
    let times = sample_gh(&theta, &x, &x, &mut rng).unwrap();
    let mean_h: f64 = times
        .iter()
        .zip(&z)
        .map(|(&t, &zi)| gh_cum_hazard(&theta, t, &[zi], &[zi]).unwrap())
        .sum::<f64>()
        / n as f64;
    // H(T) ~ Exp(1): mean 1, se n^{-1/2}.
    assert!((mean_h - 1.0).abs() < 5.0 / (n as f64).sqrt(), "mean {mean_h}");
}

#[test]
fn censoring_calibration_hits_target() {
    let theta = s2_truth();
    for &rate in &[0.3, 0.5] {
        let mut rng = ChaCha12Rng::seed_from_u64(1234);
        let c = calibrate_censoring(&theta, rate, 100_000, &mut rng).unwrap();
        assert!(c > 0.0 && c.is_finite());

        // Fresh draws under the same standard-normal covariate law, censored
        // at c, should miss the target only by Monte Carlo noise.
        let n = 20_000;
        let mut rng2 = ChaCha12Rng::seed_from_u64(777);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng2)).collect();
        let x = DMatrix::from_fn(n, 1, |r, _| z[r]);
        let times = sample_gh(&theta, &x, &x, &mut rng2).unwrap();
        let censored = times.iter().filter(|&&t| t > c).count() as f64 / n as f64;
        assert!((censored - rate).abs() < 0.03, "achieved {censored} vs {rate}");
    }
}

#[test]
fn scenario_runs_are_reproducible() {
    let spec = scenario(2, 250, 0.3, 2, 20260822).unwrap();
    let fit_config = FitConfig::default();
    let diag_config = DiagnosticConfig::default();
    let a = run_scenario(&spec, &fit_config, &diag_config).unwrap();
    let b = run_scenario(&spec, &fit_config, &diag_config).unwrap();
    let ser = |r: &ghsurv::ScenarioResult| serde_json::to_string(&r.table).unwrap();
    assert_eq!(ser(&a), ser(&b));
    assert_eq!(
        a.table.hellinger.total() + a.table.replicate_failures,
        spec.replicates
    );
    assert!((a.table.mean_achieved_censoring - 0.3).abs() < 0.12);
}

#[test]
fn scenario_table_rejects_bad_ids() {
    assert!(scenario(0, 250, 0.3, 1, 1).is_err());
    assert!(scenario(8, 250, 0.3, 1, 1).is_err());
    assert!(scenario(2, 250, 1.2, 1, 1).is_err());
}
