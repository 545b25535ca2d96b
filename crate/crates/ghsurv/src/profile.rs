//! Profile likelihood scans and practical non-identifiability flags.
//!
//! For a chosen free parameter psi (fitting scale: log baseline parameters,
//! natural regression coefficients), the relative profile likelihood is
//! R_P(psi) = sup_lambda L(psi, lambda) / L(theta_hat) <= 1. The scan sweeps
//! outward from psi_hat in both directions, warm-starting each inner
//! maximization at the neighboring solution; single-leap probes can tunnel
//! into a different likelihood basin and report garbage ratios.

use crate::baseline::BaselineFamily;
use crate::error::{Error, Result};
use crate::estimation::{nll_objective, FitConfig, FitResult};
use crate::model::SurvivalDataset;
use crate::optim::{bfgs, central_gradient, nelder_mead};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub n_grid: usize,
    /// Scan half-width for regression coefficients; baseline parameters use
    /// 3 asymptotic standard deviations instead (fallback 1).
    pub delta: f64,
    /// Relative-likelihood level defining the region; 0.147 approximates 95%.
    pub level: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            n_grid: 41,
            delta: 3.0,
            level: 0.147,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub param_index: usize,
    pub param_name: String,
    pub psi_hat: f64,
    pub delta: f64,
    pub level_c: f64,
    pub grid: Vec<f64>,
    /// R_P per grid point; None where the inner maximization failed.
    pub rel_profile: Vec<Option<f64>>,
    pub n_failures: usize,
    /// Level-c crossings; a missing side means the region reaches the scan
    /// boundary there.
    pub region_left: Option<f64>,
    pub region_right: Option<f64>,
    pub pni_flag: bool,
}

/// Names of the fitting-scale free vector: transformed baseline parameters,
/// then time-level coefficients, then hazard-level coefficients.
pub fn free_param_names(fit: &FitResult, data: &SurvivalDataset) -> Vec<String> {
    let family = fit.family;
    let mut names: Vec<String> = match family {
        BaselineFamily::LogNormal => vec!["mu".into(), "log_sd".into()],
        _ => family
            .param_names()
            .iter()
            .map(|n| format!("log_{n}"))
            .collect(),
    };
    let alpha_names = data.time_names.iter().map(|n| format!("alpha_{n}"));
    let beta_names = data.hazard_names.iter().map(|n| format!("beta_{n}"));
    use crate::model::HazardStructure::*;
    match fit.structure {
        Gh => {
            names.extend(alpha_names);
            names.extend(beta_names);
        }
        Ph | Aft => names.extend(beta_names),
        Ah => names.extend(alpha_names),
    }
    names
}

/// Half-width for one parameter: `delta` for regression coefficients,
/// 3 asymptotic sd from the fitting-scale Hessian for baseline parameters
/// (fallback 1 when the Hessian cannot price it).
pub fn scan_half_width(fit: &FitResult, param_index: usize, delta: f64) -> f64 {
    let r = fit.family.arity();
    if param_index >= r {
        return delta;
    }
    let k = fit.hessian_fitting.len();
    if k > param_index {
        let h = DMatrix::from_fn(k, k, |i, j| fit.hessian_fitting[i][j]);
        if let Some(inv) = h.try_inverse() {
            let var = inv[(param_index, param_index)];
            if var.is_finite() && var > 0.0 {
                return 3.0 * var.sqrt();
            }
        }
    }
    1.0
}

struct InnerSolve {
    loglik: Option<f64>,
    lambda: Vec<f64>,
}

/// Maximize the log-likelihood over the other parameters with entry
/// `param_index` pinned at psi, warm-started at `warm`.
fn inner_max<F: Fn(&[f64]) -> f64>(
    obj: &F,
    param_index: usize,
    psi: f64,
    warm: &[f64],
    cfg: &FitConfig,
) -> InnerSolve {
    let assemble = |lambda: &[f64]| -> Vec<f64> {
        let mut full = Vec::with_capacity(lambda.len() + 1);
        full.extend_from_slice(&lambda[..param_index]);
        full.push(psi);
        full.extend_from_slice(&lambda[param_index..]);
        full
    };
    if warm.is_empty() {
        // no nuisance parameters: profile is the likelihood itself
        let f = obj(&assemble(&[]));
        return InnerSolve {
            loglik: f.is_finite().then_some(-f),
            lambda: vec![],
        };
    }
    let inner = |lambda: &[f64]| obj(&assemble(lambda));
    let nm = nelder_mead(&inner, warm, cfg.nm_ftol_rel, cfg.nm_xtol_abs, 2000);
    let qb = bfgs(&inner, &nm.x, cfg.bfgs_gtol_rel, 200);
    let grad_max = match qb.grad_max {
        Some(g) => g,
        None => {
            let (g, _) = central_gradient(&inner, &qb.x);
            g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        }
    };
    let ok = qb.f.is_finite() && grad_max <= cfg.grad_tol_rel * qb.f.abs().max(1.0);
    InnerSolve {
        loglik: ok.then_some(-qb.f),
        lambda: qb.x,
    }
}

fn drop_index(v: &[f64], idx: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() - 1);
    out.extend_from_slice(&v[..idx]);
    out.extend_from_slice(&v[idx + 1..]);
    out
}

/// Profile R_P over an explicit grid. The grid need not be symmetric but must
/// cover psi_hat; points are processed center-outward with warm starts.
pub fn profile_scan_grid(
    data: &SurvivalDataset,
    fit: &FitResult,
    param_index: usize,
    grid: &[f64],
    level: f64,
    fit_config: &FitConfig,
) -> Result<ProfileCurve> {
    if !fit.converged {
        return Err(Error::Diagnostic("profile scan requires a converged fit".into()));
    }
    let nf = fit.free_hat.len();
    if param_index >= nf {
        return Err(Error::Domain(format!(
            "parameter index {param_index} out of range for {nf} free parameters"
        )));
    }
    if grid.len() < 3 {
        return Err(Error::Domain("profile grid needs at least 3 points".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain("level must lie in (0, 1)".into()));
    }
    let psi_hat = fit.free_hat[param_index];
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if psi_hat < lo || psi_hat > hi {
        return Err(Error::Domain("grid does not cover the fitted value".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let obj = nll_objective(fit.family, fit.structure, data);
    let warm0 = drop_index(&fit.free_hat, param_index);
    // nearest grid point to psi_hat anchors the two outward sweeps
    let center = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - psi_hat).abs().total_cmp(&(*b - psi_hat).abs()))
        .map(|(i, _)| i)
        .expect("nonempty grid");

    let mut logliks: Vec<Option<f64>> = vec![None; grid.len()];
    let mut run_sweep = |indices: Vec<usize>| {
        let mut warm = warm0.clone();
        for i in indices {
            let sol = inner_max(&obj, param_index, grid[i], &warm, fit_config);
            if sol.loglik.is_some() && !sol.lambda.is_empty() {
                warm = sol.lambda.clone();
            }
            logliks[i] = sol.loglik;
        }
    };
    run_sweep((center..grid.len()).collect());
    run_sweep((0..center).rev().collect());

    // R_P <= 1 mathematically; warm starts can beat l_hat only by float
    // noise, which the clamp removes
    let rel_profile: Vec<Option<f64>> = logliks
        .iter()
        .map(|l| l.map(|v| (v - fit.loglik).exp().min(1.0)))
        .collect();
    let n_failures = rel_profile.iter().filter(|v| v.is_none()).count();

    let (region_left, region_right) = region_crossings(&grid, &rel_profile, level);
    let half = (psi_hat - lo).max(hi - psi_hat);
    let pni = pni_from_curve(&grid, &rel_profile, psi_hat, half, level);

    let names = free_param_names(fit, data);
    Ok(ProfileCurve {
        param_index,
        param_name: names[param_index].clone(),
        psi_hat,
        delta: half,
        level_c: level,
        grid,
        rel_profile,
        n_failures,
        region_left,
        region_right,
        pni_flag: matches!(pni, PniVerdict::Flagged),
    })
}

/// Default scan: symmetric odd grid centered exactly at psi_hat so the peak
/// ratio of 1 sits on the grid.
pub fn profile_scan(
    data: &SurvivalDataset,
    fit: &FitResult,
    param_index: usize,
    config: &ProfileConfig,
    fit_config: &FitConfig,
) -> Result<ProfileCurve> {
    if config.n_grid == 0 {
        return Err(Error::Domain("profile grid needs at least 1 point".into()));
    }
    let psi_hat = *fit
        .free_hat
        .get(param_index)
        .ok_or_else(|| Error::Domain(format!("parameter index {param_index} out of range")))?;
    if config.n_grid == 1 {
        // degenerate scan: the peak alone
        let names = free_param_names(fit, data);
        return Ok(ProfileCurve {
            param_index,
            param_name: names[param_index].clone(),
            psi_hat,
            delta: 0.0,
            level_c: config.level,
            grid: vec![psi_hat],
            rel_profile: vec![Some(1.0)],
            n_failures: 0,
            region_left: None,
            region_right: None,
            pni_flag: false,
        });
    }
    let n = if config.n_grid % 2 == 0 {
        config.n_grid + 1
    } else {
        config.n_grid
    };
    let half = scan_half_width(fit, param_index, config.delta);
    let grid: Vec<f64> = (0..n)
        .map(|i| psi_hat + half * (2.0 * i as f64 / (n - 1) as f64 - 1.0))
        .collect();
    profile_scan_grid(data, fit, param_index, &grid, config.level, fit_config)
}

/// Linear-interpolation crossings of R_P = level: leftmost rising and
/// rightmost falling. None on a side whose boundary value is still >= level.
fn region_crossings(
    grid: &[f64],
    rel: &[Option<f64>],
    level: f64,
) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(rel)
        .filter_map(|(&g, r)| r.map(|v| (g, v)))
        .collect();
    if pts.is_empty() {
        return (None, None);
    }
    let interp = |(x0, y0): (f64, f64), (x1, y1): (f64, f64)| {
        if (y1 - y0).abs() < 1e-300 {
            x0
        } else {
            x0 + (level - y0) * (x1 - x0) / (y1 - y0)
        }
    };
    let mut left = None;
    for w in pts.windows(2) {
        if w[0].1 < level && w[1].1 >= level {
            left = Some(interp(w[0], w[1]));
            break;
        }
    }
    let mut right = None;
    for w in pts.windows(2).rev() {
        if w[0].1 >= level && w[1].1 < level {
            right = Some(interp(w[0], w[1]));
            break;
        }
    }
    (left, right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PniVerdict {
    Flagged,
    NotFlagged,
    /// Both endpoint maximizations failed; no verdict possible.
    Indeterminate,
}

impl PniVerdict {
    pub fn is_flagged(self) -> bool {
        self == PniVerdict::Flagged
    }
}

fn pni_from_curve(
    grid: &[f64],
    rel: &[Option<f64>],
    psi_hat: f64,
    delta: f64,
    level: f64,
) -> PniVerdict {
    // endpoint = grid value nearest psi_hat -+ delta with a computed ratio
    let at = |target: f64| -> Option<f64> {
        grid.iter()
            .zip(rel)
            .filter_map(|(&g, r)| r.map(|v| (g, v)))
            .min_by(|(a, _), (b, _)| (a - target).abs().total_cmp(&(b - target).abs()))
            .map(|(_, v)| v)
    };
    let lo = at(psi_hat - delta);
    let hi = at(psi_hat + delta);
    match (lo, hi) {
        (None, None) => PniVerdict::Indeterminate,
        (a, b) => {
            if a.map_or(false, |v| v >= level) || b.map_or(false, |v| v >= level) {
                PniVerdict::Flagged
            } else {
                PniVerdict::NotFlagged
            }
        }
    }
}

/// Practical non-identifiability of one parameter: R_P at psi_hat - delta or
/// psi_hat + delta still at or above the level. Uses a warm-start sweep with
/// 20 steps per side.
pub fn pni_flag(
    data: &SurvivalDataset,
    fit: &FitResult,
    param_index: usize,
    delta: f64,
    level: f64,
    fit_config: &FitConfig,
) -> Result<PniVerdict> {
    if !(delta > 0.0) {
        return Err(Error::Domain("delta must be positive".into()));
    }
    if !fit.converged {
        return Err(Error::Diagnostic("PNI flag requires a converged fit".into()));
    }
    let psi_hat = *fit
        .free_hat
        .get(param_index)
        .ok_or_else(|| Error::Domain(format!("parameter index {param_index} out of range")))?;
    let obj = nll_objective(fit.family, fit.structure, data);
    let warm0 = drop_index(&fit.free_hat, param_index);
    const STEPS: usize = 20;
    let endpoint = |sign: f64| -> Option<f64> {
        let mut warm = warm0.clone();
        let mut last = None;
        for s in 1..=STEPS {
            let psi = psi_hat + sign * delta * s as f64 / STEPS as f64;
            let sol = inner_max(&obj, param_index, psi, &warm, fit_config);
            if sol.loglik.is_some() && !sol.lambda.is_empty() {
                warm = sol.lambda.clone();
            }
            if s == STEPS {
                last = sol.loglik;
            }
        }
        last
    };
    let lo = endpoint(-1.0).map(|l| (l - fit.loglik).exp().min(1.0));
    let hi = endpoint(1.0).map(|l| (l - fit.loglik).exp().min(1.0));
    Ok(match (lo, hi) {
        (None, None) => PniVerdict::Indeterminate,
        (a, b) => {
            if a.map_or(false, |v| v >= level) || b.map_or(false, |v| v >= level) {
                PniVerdict::Flagged
            } else {
                PniVerdict::NotFlagged
            }
        }
    })
}

/// Level-c region endpoints of a computed curve, by interpolation on the
/// stored grid. c = 1 gives the degenerate region at the peak.
pub fn likelihood_region(curve: &ProfileCurve, c: f64) -> Result<(Option<f64>, Option<f64>)> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain("level must lie in (0, 1]".into()));
    }
    if c == 1.0 {
        return Ok((Some(curve.psi_hat), Some(curve.psi_hat)));
    }
    Ok(region_crossings(&curve.grid, &curve.rel_profile, c))
}

/// Level-c region endpoints refined by bisection on the true profile between
/// the bracketing grid points of `curve`.
pub fn likelihood_region_refined(
    data: &SurvivalDataset,
    fit: &FitResult,
    curve: &ProfileCurve,
    c: f64,
    fit_config: &FitConfig,
) -> Result<(Option<f64>, Option<f64>)> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain("level must lie in (0, 1)".into()));
    }
    let obj = nll_objective(fit.family, fit.structure, data);
    let warm0 = drop_index(&fit.free_hat, curve.param_index);
    let ratio = |psi: f64, warm: &[f64]| -> Option<(f64, Vec<f64>)> {
        let sol = inner_max(&obj, curve.param_index, psi, warm, fit_config);
        sol.loglik
            .map(|l| ((l - fit.loglik).exp().min(1.0), sol.lambda))
    };
    let bisect = |a0: f64, ra0: f64, b0: f64| -> Option<f64> {
        // invariant kept: R(a) and R(b) straddle c
        let (mut a, mut b, mut ra) = (a0, b0, ra0);
        let mut warm = warm0.clone();
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if m <= a.min(b) || m >= a.max(b) {
                break;
            }
            let (rm, lam) = ratio(m, &warm)?;
            if !lam.is_empty() {
                warm = lam;
            }
            if (ra - c).signum() == (rm - c).signum() {
                a = m;
                ra = rm;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    };
    let pts: Vec<(f64, f64)> = curve
        .grid
        .iter()
        .zip(&curve.rel_profile)
        .filter_map(|(&g, r)| r.map(|v| (g, v)))
        .collect();
    let mut left = None;
    for w in pts.windows(2) {
        if w[0].1 < c && w[1].1 >= c {
            left = bisect(w[0].0, w[0].1, w[1].0);
            break;
        }
    }
    let mut right = None;
    for w in pts.windows(2).rev() {
        if w[0].1 >= c && w[1].1 < c {
            right = bisect(w[0].0, w[0].1, w[1].0);
            break;
        }
    }
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_on_triangle() {
        let grid: Vec<f64> = (0..21).map(|i| i as f64 * 0.1 - 1.0).collect();
        let rel: Vec<Option<f64>> = grid.iter().map(|&g| Some((1.0 - g.abs()).max(0.0))).collect();
        let (l, r) = region_crossings(&grid, &rel, 0.5);
        assert!((l.unwrap() + 0.5).abs() < 1e-9);
        assert!((r.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn unbounded_side_reported_absent() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64).collect();
        // monotone decreasing from 1: region unbounded on the left scan edge
        let rel: Vec<Option<f64>> = grid.iter().map(|&g| Some((-0.05 * g).exp())).collect();
        let (l, r) = region_crossings(&grid, &rel, 0.7);
        assert!(l.is_none());
        assert!(r.is_some());
    }
}
