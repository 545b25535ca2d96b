//! Near-redundancy diagnostics for a fitted General Hazard model.
//!
//! Three screens, each answering "is the fitted baseline effectively
//! Weibull?", where yes means the time-level and hazard-level coefficients
//! are close to non-identifiable:
//!
//! * minimum KL distance to the Weibull family against the threshold
//!   M k^e log(n_eff) / (2 n_eff),
//! * minimum Hellinger distance against the Le Cam bound
//!   sqrt(1 - (4 kappa - 4 kappa^2)^(1/(2 n_eff))),
//! * smallest standardized eigenvalue modulus of the negative log-likelihood
//!   Hessian (fitting scale) against a 0.001 cutoff.
//!
//! Bootstrap refits estimate the probability of each flag under resampling.

use crate::distance::{min_distance_to_weibull, DistanceKind, DistanceResult};
use crate::error::{Error, Result};
use crate::estimation::{fit_mle_warm, FitConfig, FitResult};
use crate::model::SurvivalDataset;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticConfig {
    /// KL threshold scale M.
    pub kl_m: f64,
    /// KL threshold exponent on the parameter count, 1 or 2.
    pub kl_k_exponent: u32,
    /// Hellinger misclassification budget kappa.
    pub kappa: f64,
    /// Censoring weight in the effective sample size.
    pub rho: f64,
    /// Cutoff for the smallest standardized Hessian eigenvalue.
    pub hessian_cutoff: f64,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        DiagnosticConfig {
            kl_m: 0.05,
            kl_k_exponent: 1,
            kappa: 0.05,
            rho: 0.5,
            hessian_cutoff: 0.001,
        }
    }
}

impl DiagnosticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kl_m > 0.0) {
            return Err(Error::Domain("M must be positive".into()));
        }
        if self.kl_k_exponent != 1 && self.kl_k_exponent != 2 {
            return Err(Error::Domain("k exponent must be 1 or 2".into()));
        }
        if !(self.kappa > 0.0 && self.kappa < 0.5) {
            return Err(Error::Domain("kappa must lie in (0, 1/2)".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Domain("rho must lie in (0, 1)".into()));
        }
        if !(self.hessian_cutoff > 0.0) {
            return Err(Error::Domain("Hessian cutoff must be positive".into()));
        }
        Ok(())
    }
}

/// Effective sample size n - rho * censored.
pub fn n_eff(n: usize, censored: usize, rho: f64) -> f64 {
    n as f64 - rho * censored as f64
}

/// KL near-redundancy threshold M * k^e * log(n_eff) / (2 n_eff).
pub fn kl_threshold(n_eff: f64, k: usize, m: f64, k_exponent: u32) -> f64 {
    m * (k as f64).powi(k_exponent as i32) * n_eff.ln() / (2.0 * n_eff)
}

/// Hellinger near-redundancy threshold from the Le Cam bound.
pub fn hellinger_threshold(n_eff: f64, kappa: f64) -> f64 {
    (1.0 - (4.0 * kappa - 4.0 * kappa * kappa).powf(1.0 / (2.0 * n_eff))).sqrt()
}

/// Smallest effective sample size at which a Hellinger distance d would stop
/// being flagged: d <= threshold(n_eff) iff n_eff <= this value.
pub fn min_n_eff_required(d: f64, kappa: f64) -> f64 {
    let om = 1.0 - 2.0 * kappa;
    (1.0 - om * om).ln() / (2.0 * (1.0 - d * d).ln())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianScreen {
    /// Eigenvalue moduli divided by the largest, sorted descending.
    pub eigen_ratios: Vec<f64>,
    pub smallest_ratio: f64,
    pub cutoff: f64,
    pub nr_hessian: bool,
}

/// Standardized eigenvalue screen of a symmetric Hessian.
pub fn hessian_screen(hessian: &[Vec<f64>], cutoff: f64) -> Result<HessianScreen> {
    let k = hessian.len();
    if k == 0 || hessian.iter().any(|row| row.len() != k) {
        return Err(Error::Diagnostic("Hessian must be square and nonempty".into()));
    }
    if hessian.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Diagnostic("Hessian contains non-finite entries".into()));
    }
    let m = DMatrix::from_fn(k, k, |i, j| hessian[i][j]);
    let eig = m.symmetric_eigen();
    let mut moduli: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let max = moduli[0];
    if !(max > 0.0) {
        return Err(Error::Diagnostic("Hessian is numerically zero".into()));
    }
    let eigen_ratios: Vec<f64> = moduli.iter().map(|v| v / max).collect();
    let smallest_ratio = *eigen_ratios.last().expect("nonempty");
    Ok(HessianScreen {
        eigen_ratios,
        smallest_ratio,
        cutoff,
        nr_hessian: smallest_ratio < cutoff,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RedundancyFlags {
    pub nr_kl: bool,
    pub nr_hellinger: bool,
    pub nr_hessian: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub n_replicates: usize,
    pub n_failures: usize,
    pub p_kl: f64,
    pub p_hellinger: f64,
    pub p_hessian: f64,
    /// More than 20% of replicates failed to converge.
    pub unreliable: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub n: usize,
    pub censored: usize,
    pub rho: f64,
    pub n_eff: f64,
    pub k: usize,
    pub kl: DistanceResult,
    pub hellinger: DistanceResult,
    pub kl_threshold: f64,
    pub hellinger_threshold: f64,
    /// Largest n_eff at which the observed Hellinger distance would still be
    /// flagged as near-redundant.
    pub min_n_eff_required: f64,
    pub hessian: HessianScreen,
    pub flags: RedundancyFlags,
    pub bootstrap: Option<BootstrapReport>,
    pub config: DiagnosticConfig,
}

/// Full near-redundancy diagnosis for one converged fit.
pub fn diagnose(fit: &FitResult, config: &DiagnosticConfig) -> Result<RedundancyReport> {
    config.validate()?;
    if !fit.converged {
        return Err(Error::Diagnostic(
            "diagnosis requires a converged fit".into(),
        ));
    }
    let censored = fit.n - fit.n_events;
    let ne = n_eff(fit.n, censored, config.rho);
    if !(ne > 1.0) {
        return Err(Error::Diagnostic(format!(
            "effective sample size {ne} too small for thresholds"
        )));
    }
    let hessian = hessian_screen(&fit.hessian_fitting, config.hessian_cutoff)?;
    let kl = min_distance_to_weibull(&fit.theta_hat.baseline, DistanceKind::Kl)?;
    let hellinger = min_distance_to_weibull(&fit.theta_hat.baseline, DistanceKind::Hellinger)?;
    let kl_thr = kl_threshold(ne, fit.k, config.kl_m, config.kl_k_exponent);
    let hell_thr = hellinger_threshold(ne, config.kappa);
    let flags = RedundancyFlags {
        nr_kl: kl.distance <= kl_thr,
        nr_hellinger: hellinger.distance <= hell_thr,
        nr_hessian: hessian.nr_hessian,
    };
    Ok(RedundancyReport {
        n: fit.n,
        censored,
        rho: config.rho,
        n_eff: ne,
        k: fit.k,
        min_n_eff_required: min_n_eff_required(hellinger.distance, config.kappa),
        kl,
        hellinger,
        kl_threshold: kl_thr,
        hellinger_threshold: hell_thr,
        hessian,
        flags,
        bootstrap: None,
        config: config.clone(),
    })
}

/// Flags for one bootstrap replicate; None when the refit or its diagnosis
/// failed.
fn replicate_flags(
    data: &SurvivalDataset,
    base: &FitResult,
    fit_config: &FitConfig,
    diag_config: &DiagnosticConfig,
    seed: u64,
) -> Option<RedundancyFlags> {
    let n = data.n();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let sample = data.resample(&idx);
    if sample.n_events() == 0 {
        return None;
    }
    let cfg = FitConfig {
        seed,
        ..fit_config.clone()
    };
    let fit = fit_mle_warm(&sample, base.family, base.structure, &cfg, &base.free_hat).ok()?;
    if !fit.converged {
        return None;
    }
    let report = diagnose(&fit, diag_config).ok()?;
    Some(report.flags)
}

/// Bootstrap probability of each near-redundancy criterion: resample rows
/// with replacement, refit warm-started from the full-data estimate,
/// re-diagnose; report flag proportions among converged replicates.
/// Replicate b uses seed `seed + b`.
pub fn bootstrap_probabilities(
    data: &SurvivalDataset,
    base: &FitResult,
    b: usize,
    seed: u64,
    fit_config: &FitConfig,
    diag_config: &DiagnosticConfig,
) -> Result<BootstrapReport> {
    if b == 0 {
        return Err(Error::Domain("bootstrap needs at least one replicate".into()));
    }
    if !base.converged {
        return Err(Error::NonConvergence(
            "bootstrap requires a converged full-data fit".into(),
        ));
    }
    if base.n != data.n() {
        return Err(Error::Shape(
            "full-data fit does not match the dataset row count".into(),
        ));
    }
    diag_config.validate()?;
    let outcomes: Vec<Option<RedundancyFlags>> = (0..b)
        .into_par_iter()
        .map(|i| {
            replicate_flags(
                data,
                base,
                fit_config,
                diag_config,
                seed.wrapping_add(i as u64),
            )
        })
        .collect();
    let n_failures = outcomes.iter().filter(|o| o.is_none()).count();
    let converged = b - n_failures;
    if converged == 0 {
        return Err(Error::NonConvergence(
            "every bootstrap replicate failed to converge".into(),
        ));
    }
    let count = |f: fn(&RedundancyFlags) -> bool| {
        outcomes.iter().flatten().filter(|fl| f(fl)).count() as f64 / converged as f64
    };
    Ok(BootstrapReport {
        n_replicates: b,
        n_failures,
        p_kl: count(|f| f.nr_kl),
        p_hellinger: count(|f| f.nr_hellinger),
        p_hessian: count(|f| f.nr_hessian),
        unreliable: (n_failures as f64) > 0.2 * b as f64,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn effective_sample_size_cases() {
        assert_relative_eq!(n_eff(227, 63, 0.5), 195.5);
        assert_relative_eq!(n_eff(1043, 164, 0.5), 961.0);
        assert_relative_eq!(n_eff(100, 0, 0.5), 100.0);
    }

    #[test]
    fn kl_threshold_values() {
        assert_relative_eq!(kl_threshold(195.5, 7, 0.05, 2), 0.0331, epsilon = 5e-4);
        assert_relative_eq!(kl_threshold(961.0, 10, 0.05, 2), 0.0179, epsilon = 5e-4);
        assert_relative_eq!(kl_threshold(195.5, 7, 0.05, 1), 0.00472, epsilon = 5e-5);
        assert_relative_eq!(kl_threshold(961.0, 10, 0.05, 1), 0.00179, epsilon = 5e-5);
    }

    #[test]
    fn hellinger_threshold_values() {
        assert_relative_eq!(hellinger_threshold(195.5, 0.05), 0.0651, epsilon = 1e-3);
        assert_relative_eq!(hellinger_threshold(961.0, 0.05), 0.0294, epsilon = 1e-3);
    }

    #[test]
    fn thresholds_decrease_in_n_eff() {
        let mut prev_kl = f64::INFINITY;
        let mut prev_he = f64::INFINITY;
        for ne in [10.0, 50.0, 200.0, 1000.0, 10000.0] {
            let u = kl_threshold(ne, 7, 0.05, 1);
            let h = hellinger_threshold(ne, 0.05);
            assert!(u < prev_kl && h < prev_he, "not decreasing at n_eff={ne}");
            prev_kl = u;
            prev_he = h;
        }
        assert!(prev_kl < 1e-3 && prev_he < 2e-2);
    }

    #[test]
    fn le_cam_equivalence() {
        // d <= threshold(n_eff) iff n_eff <= min_n_eff_required(d)
        let kappa = 0.05;
        for &d in &[0.01, 0.05, 0.1, 0.3] {
            for &ne in &[20.0, 100.0, 500.0, 2000.0] {
                let lhs = d <= hellinger_threshold(ne, kappa) + 1e-12;
                let rhs = ne <= min_n_eff_required(d, kappa) + 1e-9;
                assert_eq!(lhs, rhs, "d={d} ne={ne}");
            }
        }
    }

    #[test]
    fn identity_hessian_not_flagged() {
        let h = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = hessian_screen(&h, 0.001).unwrap();
        assert_eq!(s.eigen_ratios, vec![1.0, 1.0]);
        assert!(!s.nr_hessian);
    }

    #[test]
    fn tiny_eigenvalue_flagged() {
        let h = vec![vec![1.0, 0.0], vec![0.0, 1e-6]];
        let s = hessian_screen(&h, 0.001).unwrap();
        assert!(s.nr_hessian);
        assert_relative_eq!(s.smallest_ratio, 1e-6, max_relative = 1e-9);
    }

    #[test]
    fn nonfinite_hessian_rejected() {
        let h = vec![vec![1.0, f64::NAN], vec![f64::NAN, 1.0]];
        assert!(hessian_screen(&h, 0.001).is_err());
    }
}
