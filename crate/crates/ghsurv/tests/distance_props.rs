//! Divergence properties: zero at the Weibull nesting, value bounds on
//! random specs, Hellinger symmetry, KL asymmetry, and the threshold
//! identities backing the near-redundancy criteria.

use ghsurv::distance::{hellinger_to_weibull, kl_to_weibull};
use ghsurv::{
    hellinger_threshold, kl_threshold, min_distance_to_weibull, min_n_eff_required,
    BaselineFamily, BaselineSpec, DistanceKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[test]
fn distance_vanishes_at_nesting() {
    // A PGW with gamma = 1 is exactly Weibull; the minimized distance is 0
    // and the argmin recovers (sigma, nu).
    for &(sigma, nu) in &[(0.5, 0.8), (1.2, 1.3), (2.0, 2.5)] {
        let spec = BaselineSpec::new(BaselineFamily::Pgw, vec![sigma, nu, 1.0]).unwrap();
        for kind in [DistanceKind::Kl, DistanceKind::Hellinger] {
            let res = min_distance_to_weibull(&spec, kind).unwrap();
            assert!(
                res.distance <= 1e-6,
                "{kind:?} at nesting = {}",
                res.distance
            );
            assert!(res.inner_converged);
            assert!((res.argmin.xi[0] - sigma).abs() < 0.05 * sigma);
            assert!((res.argmin.xi[1] - nu).abs() < 0.05 * nu);
        }
    }
}

#[test]
fn weibull_family_short_circuits_to_zero() {
    let spec = BaselineSpec::weibull(1.4, 0.7).unwrap();
    for kind in [DistanceKind::Kl, DistanceKind::Hellinger] {
        let res = min_distance_to_weibull(&spec, kind).unwrap();
        assert_eq!(res.distance, 0.0);
        assert_eq!(res.argmin.xi, spec.xi);
    }
}

fn random_spec(family: BaselineFamily, rng: &mut ChaCha12Rng) -> BaselineSpec {
    let draw = |rng: &mut ChaCha12Rng, lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let xi = match family {
        BaselineFamily::LogNormal => vec![draw(rng, -1.0, 1.0), draw(rng, 0.3, 2.0)],
        BaselineFamily::Weibull => vec![draw(rng, 0.2, 3.0), draw(rng, 0.4, 3.0)],
        _ => vec![
            draw(rng, 0.2, 3.0),
            draw(rng, 0.4, 3.0),
            draw(rng, 0.3, 4.0),
        ],
    };
    BaselineSpec::new(family, xi).unwrap()
}

#[test]
fn divergence_values_respect_bounds() {
    // 100 random specs per family against a fixed comparison Weibull: KL
    // nonnegative, squared-Hellinger-derived value in [0, 1].
    let families = [
        BaselineFamily::Pgw,
        BaselineFamily::Ew,
        BaselineFamily::Gg,
        BaselineFamily::LogNormal,
    ];
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for family in families {
        for _ in 0..100 {
            let spec = random_spec(family, &mut rng);
            let sigma = 0.5 + 2.0 * rng.random::<f64>();
            let nu = 0.5 + 2.0 * rng.random::<f64>();
            if let Ok(kl) = kl_to_weibull(&spec, sigma, nu) {
                assert!(kl >= -1e-9, "{family:?} KL = {kl}");
            }
            let hel = hellinger_to_weibull(&spec, sigma, nu).unwrap();
            assert!(
                (-1e-12..=1.0 + 1e-9).contains(&hel),
                "{family:?} Hellinger = {hel}"
            );
        }
    }
}

#[test]
fn hellinger_is_symmetric_kl_is_not() {
    // Hellinger between two Weibulls evaluated in either direction agrees;
    // KL between the same pair does not.
    let a = (0.8, 1.6);
    let b = (1.5, 0.9);
    let spec_a = BaselineSpec::weibull(a.0, a.1).unwrap();
    let spec_b = BaselineSpec::weibull(b.0, b.1).unwrap();

    let h_ab = hellinger_to_weibull(&spec_a, b.0, b.1).unwrap();
    let h_ba = hellinger_to_weibull(&spec_b, a.0, a.1).unwrap();
    assert!((h_ab - h_ba).abs() <= 1e-8, "{h_ab} vs {h_ba}");

    let kl_ab = kl_to_weibull(&spec_a, b.0, b.1).unwrap();
    let kl_ba = kl_to_weibull(&spec_b, a.0, a.1).unwrap();
    assert!((kl_ab - kl_ba).abs() > 1e-4, "KL unexpectedly symmetric");
}

#[test]
fn case_study_distances_are_reproduced() {
    let lung = BaselineSpec::new(BaselineFamily::Pgw, vec![1.194, 1.314, 0.861]).unwrap();
    let kl = min_distance_to_weibull(&lung, DistanceKind::Kl).unwrap();
    assert!(
        (1e-4..=1e-3).contains(&kl.distance),
        "lung KL = {}",
        kl.distance
    );
    let hel = min_distance_to_weibull(&lung, DistanceKind::Hellinger).unwrap();
    assert!((hel.distance - 0.0096).abs() <= 0.003, "lung Hellinger = {}", hel.distance);
}

#[test]
fn thresholds_decrease_in_effective_sample_size() {
    let mut prev_kl = f64::INFINITY;
    let mut prev_h = f64::INFINITY;
    for ne in [10.0, 30.0, 100.0, 300.0, 1000.0, 10_000.0, 1e6] {
        let kl = kl_threshold(ne, 7, 0.05, 2);
        let h = hellinger_threshold(ne, 0.05);
        assert!(kl < prev_kl, "KL threshold not decreasing at n_eff = {ne}");
        assert!(h < prev_h, "Hellinger threshold not decreasing at n_eff = {ne}");
        prev_kl = kl;
        prev_h = h;
    }
    // Both vanish in the limit.
    assert!(kl_threshold(1e12, 7, 0.05, 2) < 1e-9);
    assert!(hellinger_threshold(1e12, 0.05) < 1e-4);
}

#[test]
fn le_cam_equivalence_of_the_two_forms() {
    // D <= threshold(n_eff, kappa) iff n_eff <= min_n_eff_required(D, kappa).
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    for _ in 0..500 {
        let d = 0.001 + 0.4 * rng.random::<f64>();
        let kappa = 0.01 + 0.4 * rng.random::<f64>();
        let ne = 2.0 + 3000.0 * rng.random::<f64>();
        let by_threshold = d <= hellinger_threshold(ne, kappa);
        let by_n = ne <= min_n_eff_required(d, kappa);
        // Exclude knife-edge draws where floating-point rounding decides.
        let margin = (d - hellinger_threshold(ne, kappa)).abs();
        if margin > 1e-9 {
            assert_eq!(by_threshold, by_n, "D = {d}, kappa = {kappa}, n_eff = {ne}");
        }
    }
}
