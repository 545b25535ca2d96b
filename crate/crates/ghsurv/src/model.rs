//! The general hazard regression structure and its censored log-likelihood.
//!
//! h(t; theta) = h0(t exp(xt'alpha); xi) exp(x'beta)
//! H(t; theta) = H0(t exp(xt'alpha); xi) exp(x'beta - xt'alpha)
//!
//! PH (alpha = 0), AFT (alpha = beta, Xt = X) and AH (beta = 0) are
//! constrained sub-structures. With a Weibull baseline the model is not
//! identifiable: the likelihood depends on (alpha, beta) only through
//! (nu-1) alpha + beta for covariates present at both levels.

use crate::baseline::{BaselineFamily, BaselineSpec};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HazardStructure {
    Gh,
    Ph,
    Aft,
    Ah,
}

impl HazardStructure {
    /// Number of free parameters given baseline arity r and covariate counts.
    pub fn n_free(self, r: usize, p: usize, q: usize) -> usize {
        match self {
            HazardStructure::Gh => r + q + p,
            HazardStructure::Ph | HazardStructure::Aft => r + p,
            HazardStructure::Ah => r + q,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gh" => Ok(HazardStructure::Gh),
            "ph" => Ok(HazardStructure::Ph),
            "aft" => Ok(HazardStructure::Aft),
            "ah" => Ok(HazardStructure::Ah),
            other => Err(Error::Data(format!("unknown hazard structure '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HazardStructure::Gh => "gh",
            HazardStructure::Ph => "ph",
            HazardStructure::Aft => "aft",
            HazardStructure::Ah => "ah",
        }
    }
}

/// Full parameter vector theta = (xi, alpha, beta) with its structure tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GHParameters {
    pub baseline: BaselineSpec,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub structure: HazardStructure,
}

/// Right-censored survival data with hazard-level and time-level designs.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    pub times: Vec<f64>,
    pub status: Vec<u8>,
    pub x: DMatrix<f64>,
    pub xtilde: DMatrix<f64>,
    pub hazard_names: Vec<String>,
    pub time_names: Vec<String>,
}

impl SurvivalDataset {
    pub fn new(
        times: Vec<f64>,
        status: Vec<u8>,
        x: DMatrix<f64>,
        xtilde: DMatrix<f64>,
    ) -> Result<Self> {
        let p = x.ncols();
        let q = xtilde.ncols();
        let hazard_names = (1..=p).map(|j| format!("x{j}")).collect();
        let time_names = (1..=q).map(|j| format!("xt{j}")).collect();
        Self::with_names(times, status, x, xtilde, hazard_names, time_names)
    }

    pub fn with_names(
        times: Vec<f64>,
        status: Vec<u8>,
        x: DMatrix<f64>,
        xtilde: DMatrix<f64>,
        hazard_names: Vec<String>,
        time_names: Vec<String>,
    ) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::Data("empty dataset".into()));
        }
        if status.len() != n || x.nrows() != n || xtilde.nrows() != n {
            return Err(Error::Shape(format!(
                "row mismatch: times {n}, status {}, X {}, Xt {}",
                status.len(),
                x.nrows(),
                xtilde.nrows()
            )));
        }
        if hazard_names.len() != x.ncols() || time_names.len() != xtilde.ncols() {
            return Err(Error::Shape("covariate name count mismatch".into()));
        }
        if times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::Data("times must be strictly positive and finite".into()));
        }
        if status.iter().any(|&d| d > 1) {
            return Err(Error::Data("status must be 0 or 1".into()));
        }
        if x.iter().chain(xtilde.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("covariates contain non-finite values".into()));
        }
        Ok(SurvivalDataset {
            times,
            status,
            x,
            xtilde,
            hazard_names,
            time_names,
        })
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&d| d == 1).count()
    }

    pub fn n_censored(&self) -> usize {
        self.n() - self.n_events()
    }

    /// AFT requires the two design matrices to coincide.
    pub fn designs_equal(&self) -> bool {
        self.x == self.xtilde
    }

    /// Resample rows with replacement (bootstrap).
    pub fn resample(&self, idx: &[usize]) -> SurvivalDataset {
        let n = idx.len();
        let times = idx.iter().map(|&i| self.times[i]).collect();
        let status = idx.iter().map(|&i| self.status[i]).collect();
        let x = DMatrix::from_fn(n, self.x.ncols(), |r, c| self.x[(idx[r], c)]);
        let xtilde = DMatrix::from_fn(n, self.xtilde.ncols(), |r, c| self.xtilde[(idx[r], c)]);
        SurvivalDataset {
            times,
            status,
            x,
            xtilde,
            hazard_names: self.hazard_names.clone(),
            time_names: self.time_names.clone(),
        }
    }
}

/// Embed a structure-constrained free vector (natural scale baseline first)
/// into full GHParameters.
pub fn apply_structure(
    family: BaselineFamily,
    structure: HazardStructure,
    free: &[f64],
    p: usize,
    q: usize,
) -> Result<GHParameters> {
    let r = family.arity();
    if free.len() != structure.n_free(r, p, q) {
        return Err(Error::Shape(format!(
            "structure {} with r={r}, p={p}, q={q} expects {} free parameters, got {}",
            structure.name(),
            structure.n_free(r, p, q),
            free.len()
        )));
    }
    let baseline = BaselineSpec::new(family, free[..r].to_vec())?;
    let (alpha, beta) = match structure {
        HazardStructure::Gh => (free[r..r + q].to_vec(), free[r + q..].to_vec()),
        HazardStructure::Ph => (vec![0.0; q], free[r..].to_vec()),
        HazardStructure::Aft => (free[r..].to_vec(), free[r..].to_vec()),
        HazardStructure::Ah => (free[r..].to_vec(), vec![0.0; p]),
    };
    Ok(GHParameters {
        baseline,
        alpha,
        beta,
        structure,
    })
}

/// Free-vector length for a family/structure pair on a given dataset.
pub fn n_free_params(
    family: BaselineFamily,
    structure: HazardStructure,
    data: &SurvivalDataset,
) -> usize {
    structure.n_free(family.arity(), data.x.ncols(), data.xtilde.ncols())
}

/// Unpack an unconstrained optimizer vector (baseline on the fitting scale)
/// into GHParameters. Returns a domain error when the mapped baseline leaves
/// the family's domain (for example after exp overflow).
pub fn unpack_fitting(
    family: BaselineFamily,
    structure: HazardStructure,
    free: &[f64],
    p: usize,
    q: usize,
) -> Result<GHParameters> {
    let r = family.arity();
    if free.len() < r {
        return Err(Error::Shape("free vector shorter than baseline arity".into()));
    }
    let mut nat = family.from_fitting_scale(&free[..r]);
    nat.extend_from_slice(&free[r..]);
    apply_structure(family, structure, &nat, p, q)
}

/// Pack GHParameters into the unconstrained fitting-scale vector.
pub fn pack_fitting(params: &GHParameters, q: usize) -> Vec<f64> {
    let mut v = params.baseline.family.to_fitting_scale(&params.baseline.xi);
    match params.structure {
        HazardStructure::Gh => {
            v.extend_from_slice(&params.alpha);
            v.extend_from_slice(&params.beta);
        }
        HazardStructure::Ph | HazardStructure::Aft => v.extend_from_slice(&params.beta),
        HazardStructure::Ah => v.extend_from_slice(&params.alpha),
    }
    debug_assert_eq!(
        v.len(),
        params
            .structure
            .n_free(params.baseline.family.arity(), params.beta.len(), q)
    );
    v
}

/// GH hazard at one observation.
pub fn gh_hazard(theta: &GHParameters, t: f64, x: &[f64], xtilde: &[f64]) -> Result<f64> {
    check_dims(theta, x, xtilde)?;
    let eta_t: f64 = xtilde.iter().zip(&theta.alpha).map(|(a, b)| a * b).sum();
    let eta_h: f64 = x.iter().zip(&theta.beta).map(|(a, b)| a * b).sum();
    Ok((theta.baseline.log_hazard0(t * eta_t.exp()) + eta_h).exp())
}

/// GH cumulative hazard at one observation.
pub fn gh_cum_hazard(theta: &GHParameters, t: f64, x: &[f64], xtilde: &[f64]) -> Result<f64> {
    check_dims(theta, x, xtilde)?;
    let eta_t: f64 = xtilde.iter().zip(&theta.alpha).map(|(a, b)| a * b).sum();
    let eta_h: f64 = x.iter().zip(&theta.beta).map(|(a, b)| a * b).sum();
    Ok(theta.baseline.cum_hazard0(t * eta_t.exp()) * (eta_h - eta_t).exp())
}

fn check_dims(theta: &GHParameters, x: &[f64], xtilde: &[f64]) -> Result<()> {
    if x.len() != theta.beta.len() || xtilde.len() != theta.alpha.len() {
        return Err(Error::Shape(format!(
            "covariate lengths ({}, {}) do not match coefficient lengths ({}, {})",
            x.len(),
            xtilde.len(),
            theta.beta.len(),
            theta.alpha.len()
        )));
    }
    Ok(())
}

/// Censored log-likelihood: sum_i d_i log h(t_i) - sum_i H(t_i).
///
/// Returns -inf (never NaN) at parameter points where an event sits on a zero
/// hazard or the cumulative hazard overflows, so search can retreat.
pub fn log_likelihood(theta: &GHParameters, data: &SurvivalDataset) -> Result<f64> {
    if data.x.ncols() != theta.beta.len() || data.xtilde.ncols() != theta.alpha.len() {
        return Err(Error::Shape(format!(
            "design ({}, {}) does not match coefficients ({}, {})",
            data.x.ncols(),
            data.xtilde.ncols(),
            theta.beta.len(),
            theta.alpha.len()
        )));
    }
    let alpha = DVector::from_column_slice(&theta.alpha);
    let beta = DVector::from_column_slice(&theta.beta);
    let eta_t = &data.xtilde * &alpha;
    let eta_h = &data.x * &beta;
    let mut ll = 0.0;
    for i in 0..data.n() {
        let ts = data.times[i] * eta_t[i].exp();
        let ch = theta.baseline.cum_hazard0(ts) * (eta_h[i] - eta_t[i]).exp();
        ll -= ch;
        if data.status[i] == 1 {
            ll += theta.baseline.log_hazard0(ts) + eta_h[i];
        }
        if ll == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if ll.is_nan() {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(ll)
}
