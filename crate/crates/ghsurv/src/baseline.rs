//! Baseline hazard families: Weibull, PGW, EW, GG and LogNormal.
//!
//! Parameterizations are fixed so that gamma = 1 reduces PGW, EW and GG to
//! Weibull(sigma, nu) exactly; that nesting is what the redundancy
//! diagnostics are built on.
//!
//! Cumulative hazards:
//!   Weibull    H0(t) = (t/sigma)^nu
//!   PGW        H0(t) = (1 + (t/sigma)^nu)^(1/gamma) - 1
//!   EW         H0(t) = -log(1 - F0(t)),  F0(t) = (1 - exp(-(t/sigma)^nu))^gamma
//!   GG         H0(t) = -log(1 - P(gamma, (t/sigma)^nu)),  P = regularized lower incomplete gamma
//!   LogNormal  H0(t) = -log SF((log t - mu)/sd)

use crate::error::{Error, Result};
use crate::special;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineFamily {
    Weibull,
    Pgw,
    Ew,
    Gg,
    LogNormal,
}

impl BaselineFamily {
    pub fn arity(self) -> usize {
        match self {
            BaselineFamily::Weibull | BaselineFamily::LogNormal => 2,
            _ => 3,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            BaselineFamily::Weibull => &["sigma", "nu"],
            BaselineFamily::LogNormal => &["mu", "sd"],
            _ => &["sigma", "nu", "gamma"],
        }
    }

    /// Map natural parameters to the unconstrained fitting scale.
    /// Positive parameters go to logs; the LogNormal location stays as is.
    pub fn to_fitting_scale(self, xi: &[f64]) -> Vec<f64> {
        match self {
            BaselineFamily::LogNormal => vec![xi[0], xi[1].ln()],
            _ => xi.iter().map(|v| v.ln()).collect(),
        }
    }

    /// Inverse of `to_fitting_scale`.
    pub fn from_fitting_scale(self, u: &[f64]) -> Vec<f64> {
        match self {
            BaselineFamily::LogNormal => vec![u[0], u[1].exp()],
            _ => u.iter().map(|v| v.exp()).collect(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weibull" | "w" => Ok(BaselineFamily::Weibull),
            "pgw" => Ok(BaselineFamily::Pgw),
            "ew" => Ok(BaselineFamily::Ew),
            "gg" => Ok(BaselineFamily::Gg),
            "lognormal" | "ln" => Ok(BaselineFamily::LogNormal),
            other => Err(Error::Data(format!("unknown baseline family '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineFamily::Weibull => "weibull",
            BaselineFamily::Pgw => "pgw",
            BaselineFamily::Ew => "ew",
            BaselineFamily::Gg => "gg",
            BaselineFamily::LogNormal => "lognormal",
        }
    }
}

/// A baseline family together with its natural parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub family: BaselineFamily,
    pub xi: Vec<f64>,
}

impl BaselineSpec {
    /// Validates arity and positivity (the LogNormal location may be any real).
    pub fn new(family: BaselineFamily, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != family.arity() {
            return Err(Error::Shape(format!(
                "{} expects {} parameters, got {}",
                family.name(),
                family.arity(),
                xi.len()
            )));
        }
        let positives: &[f64] = match family {
            BaselineFamily::LogNormal => &xi[1..],
            _ => &xi[..],
        };
        if xi.iter().any(|v| !v.is_finite()) || positives.iter().any(|&v| v <= 0.0) {
            return Err(Error::Domain(format!(
                "{} parameters out of domain: {:?}",
                family.name(),
                xi
            )));
        }
        Ok(BaselineSpec { family, xi })
    }

    pub fn weibull(sigma: f64, nu: f64) -> Result<Self> {
        BaselineSpec::new(BaselineFamily::Weibull, vec![sigma, nu])
    }

    /// Cumulative baseline hazard H0(t). H0(0) = 0; increases to infinity.
    pub fn cum_hazard0(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if t == 0.0 {
            return 0.0;
        }
        match self.family {
            BaselineFamily::Weibull => {
                let (s, v) = (self.xi[0], self.xi[1]);
                (t / s).powf(v)
            }
            BaselineFamily::Pgw => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                let u = (t / s).powf(v);
                // (1+u)^(1/g) - 1, stable for small u and large u alike
                (u.ln_1p() / g).exp_m1()
            }
            BaselineFamily::Ew => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                let u = (t / s).powf(v);
                ew_cum_hazard(u, g)
            }
            BaselineFamily::Gg => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                let u = (t / s).powf(v);
                gg_cum_hazard(u, g)
            }
            BaselineFamily::LogNormal => {
                let (m, sd) = (self.xi[0], self.xi[1]);
                let z = (t.ln() - m) / sd;
                -special::normal_log_sf(z)
            }
        }
    }

    /// log h0(t). At t = 0 the correct limit is returned (+inf for hazards
    /// diverging at the origin, -inf where the hazard vanishes).
    pub fn log_hazard0(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self.family {
            BaselineFamily::Weibull => {
                let (s, v) = (self.xi[0], self.xi[1]);
                v.ln() - s.ln() + pow_ln_term(v - 1.0, t / s)
            }
            BaselineFamily::Pgw => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                let u = (t / s).powf(v);
                v.ln() - g.ln() - s.ln() + pow_ln_term(v - 1.0, t / s)
                    + (1.0 / g - 1.0) * u.ln_1p()
            }
            BaselineFamily::Ew => {
                // log h0 = log f0 + H0
                self.log_density0(t) + self.cum_hazard0(t)
            }
            BaselineFamily::Gg => self.log_density0(t) + self.cum_hazard0(t),
            BaselineFamily::LogNormal => self.log_density0(t) + self.cum_hazard0(t),
        }
    }

    /// Baseline hazard h0(t) = f0(t) / S0(t).
    pub fn hazard0(&self, t: f64) -> f64 {
        self.log_hazard0(t).exp()
    }

    /// log f0(t); -inf where the density vanishes.
    pub fn log_density0(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self.family {
            BaselineFamily::Weibull => {
                let (s, v) = (self.xi[0], self.xi[1]);
                let u = if t == 0.0 { 0.0 } else { (t / s).powf(v) };
                v.ln() - s.ln() + pow_ln_term(v - 1.0, t / s) - u
            }
            BaselineFamily::Pgw => self.log_hazard0(t) - self.cum_hazard0(t),
            BaselineFamily::Ew => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                if t == 0.0 {
                    // f0 ~ g/s^(v g) * t^(v g - 1) near zero
                    return if v * g < 1.0 {
                        f64::INFINITY
                    } else if v * g > 1.0 {
                        f64::NEG_INFINITY
                    } else {
                        g.ln() + v.ln() - v * g * s.ln()
                    };
                }
                let u = (t / s).powf(v);
                // f0 = g (1-e^-u)^(g-1) e^-u * (v/t)(t/s)^v
                g.ln() + (g - 1.0) * ln_one_minus_exp_neg(u) - u + v.ln()
                    + v * (t / s).ln()
                    - t.ln()
            }
            BaselineFamily::Gg => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                let u = if t == 0.0 { 0.0 } else { (t / s).powf(v) };
                v.ln() - s.ln() - special::ln_gamma(g) + pow_ln_term(v * g - 1.0, t / s) - u
            }
            BaselineFamily::LogNormal => {
                if t == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let (m, sd) = (self.xi[0], self.xi[1]);
                let z = (t.ln() - m) / sd;
                special::normal_log_pdf(z) - sd.ln() - t.ln()
            }
        }
    }

    /// Baseline density f0(t) = h0(t) exp(-H0(t)).
    pub fn density0(&self, t: f64) -> f64 {
        self.log_density0(t).exp()
    }

    /// Baseline CDF F0(t) = 1 - exp(-H0(t)).
    pub fn cdf0(&self, t: f64) -> f64 {
        -(-self.cum_hazard0(t)).exp_m1()
    }

    /// Inverse of the cumulative hazard: t with H0(t) = y.
    ///
    /// Weibull, PGW and EW invert in closed form; GG and LogNormal bracket by
    /// doubling, bisect, then polish with Newton. Round trip honors 1e-8
    /// relative tolerance.
    pub fn inv_cum_hazard0(&self, y: f64) -> Result<f64> {
        debug_assert!(y >= 0.0);
        if y == 0.0 {
            return Ok(0.0);
        }
        match self.family {
            BaselineFamily::Weibull => {
                let (s, v) = (self.xi[0], self.xi[1]);
                Ok(s * y.powf(1.0 / v))
            }
            BaselineFamily::Pgw => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                // u = (1+y)^g - 1
                let u = (g * y.ln_1p()).exp_m1();
                Ok(s * u.powf(1.0 / v))
            }
            BaselineFamily::Ew => {
                let (s, v, g) = (self.xi[0], self.xi[1], self.xi[2]);
                // F0 = 1 - e^-y; u = -log(1 - F0^(1/g)), every 1 - e^-x
                // through the branch-switching helper
                let log_f0 = ln_one_minus_exp_neg(y);
                let u = -ln_one_minus_exp_neg(-(log_f0 / g));
                Ok(s * u.powf(1.0 / v))
            }
            BaselineFamily::Gg | BaselineFamily::LogNormal => self.invert_numeric(y),
        }
    }

    fn invert_numeric(&self, y: f64) -> Result<f64> {
        // Geometric bracket lo < t <= hi with H0(lo) < y <= H0(hi); the
        // quantile can sit hundreds of orders of magnitude from 1 when the
        // effective power nu*gamma is small, so the whole search runs on a
        // log scale.
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        let mut n = 0;
        if self.cum_hazard0(1.0) < y {
            while self.cum_hazard0(hi) < y {
                lo = hi;
                hi *= 2.0;
                n += 1;
                if n > 1100 {
                    return Err(Error::Inversion(format!(
                        "no upper bracket for y={y} under {:?}",
                        self.family
                    )));
                }
            }
        } else {
            lo = 0.5;
            while self.cum_hazard0(lo) >= y {
                hi = lo;
                lo *= 0.5;
                n += 1;
                if n > 1100 || lo == 0.0 {
                    return Err(Error::Inversion(format!(
                        "no lower bracket for y={y} under {:?}",
                        self.family
                    )));
                }
            }
        }
        // Geometric bisection to relative width ~1e-14.
        for _ in 0..200 {
            let mid = lo.sqrt() * hi.sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.cum_hazard0(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        // Newton polish on ln H0 as a function of ln t (well scaled across
        // magnitudes), confined to the bracket.
        let mut t = lo.sqrt() * hi.sqrt();
        for _ in 0..8 {
            let h = self.cum_hazard0(t);
            let dh_dlnt = t * self.hazard0(t);
            if !(h > 0.0 && h.is_finite() && dh_dlnt.is_finite()) || dh_dlnt <= 0.0 {
                break;
            }
            let step = (h.ln() - y.ln()) * h / dh_dlnt;
            let tn = t * (-step).exp();
            if tn > lo && tn < hi && tn.is_finite() {
                t = tn;
            } else {
                break;
            }
        }
        let check = self.cum_hazard0(t);
        if (check - y).abs() > 1e-6 * y {
            return Err(Error::Inversion(format!(
                "inversion stalled: H0({t}) = {check}, target {y}, bracket [{lo}, {hi}]"
            )));
        }
        Ok(t)
    }
}

/// c * ln(r) with the t = 0 limit handled: c = 0 contributes nothing even at
/// r = 0 where the naive product is NaN.
fn pow_ln_term(c: f64, r: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * r.ln()
    }
}

/// ln(1 - e^-u) for u > 0, switching branches at ln 2 to keep precision at
/// both ends (the naive log1p(-exp(-u)) collapses to -inf once e^-u rounds
/// to 1).
fn ln_one_minus_exp_neg(u: f64) -> f64 {
    if u > std::f64::consts::LN_2 {
        (-(-u).exp()).ln_1p()
    } else {
        (-u).exp_m1().neg().ln()
    }
}

/// EW cumulative hazard in terms of u = (t/sigma)^nu.
fn ew_cum_hazard(u: f64, g: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    if (-u).exp() == 0.0 {
        // 1 - F0 ~ g e^-u: H0 ~ u - log g
        return u - g.ln();
    }
    // log F0 = g * log(1 - e^-u)
    let lf = g * ln_one_minus_exp_neg(u);
    if lf > -std::f64::consts::LN_2 {
        // F0 > 1/2: 1 - F0 = -expm1(lf) keeps precision
        -(lf.exp_m1().neg()).ln()
    } else {
        // F0 small: -log1p(-F0) ~ F0
        -(-lf.exp()).ln_1p()
    }
}

/// GG cumulative hazard in terms of u = (t/sigma)^nu.
fn gg_cum_hazard(u: f64, g: f64) -> f64 {
    let p = special::gamma_lr(g, u);
    if p < 0.5 {
        -(-p).ln_1p()
    } else {
        let q = special::gamma_ur(g, u);
        if q > 0.0 {
            -q.ln()
        } else {
            // Q(g,u) ~ u^(g-1) e^-u / Gamma(g) for large u
            u + special::ln_gamma(g) - (g - 1.0) * u.ln()
        }
    }
}

use std::ops::Neg;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weibull_cum_hazard_at_scale() {
        let s = BaselineSpec::weibull(2.0, 3.0).unwrap();
        assert_relative_eq!(s.cum_hazard0(2.0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn pgw_hand_value() {
        let s = BaselineSpec::new(BaselineFamily::Pgw, vec![1.0, 2.0, 2.0]).unwrap();
        assert_relative_eq!(s.cum_hazard0(1.0), 2f64.sqrt() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn exponential_constant_hazard() {
        let s = BaselineSpec::weibull(1.0, 1.0).unwrap();
        assert_relative_eq!(s.hazard0(0.7), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gg_exponential_case() {
        let s = BaselineSpec::new(BaselineFamily::Gg, vec![1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(s.density0(1.0), (-1.0f64).exp(), max_relative = 1e-10);
        assert_relative_eq!(s.inv_cum_hazard0(1.0).unwrap(), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn lognormal_density_at_median() {
        let s = BaselineSpec::new(BaselineFamily::LogNormal, vec![0.0, 1.5]).unwrap();
        let expect = 1.0 / (1.5 * (2.0 * std::f64::consts::PI).sqrt());
        assert_relative_eq!(s.density0(1.0), expect, max_relative = 1e-10);
    }

    #[test]
    fn ew_cdf_hand_value() {
        let s = BaselineSpec::new(BaselineFamily::Ew, vec![1.0, 1.0, 2.0]).unwrap();
        assert_relative_eq!(s.cdf0(2f64.ln()), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn pgw_round_trip() {
        let s = BaselineSpec::new(BaselineFamily::Pgw, vec![1.0, 2.0, 2.0]).unwrap();
        let y = 2f64.sqrt() - 1.0;
        assert_relative_eq!(s.inv_cum_hazard0(y).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(BaselineSpec::new(BaselineFamily::Pgw, vec![1.0, -2.0, 1.0]).is_err());
        assert!(BaselineSpec::new(BaselineFamily::Pgw, vec![1.0, 2.0]).is_err());
        // LogNormal location may be negative
        assert!(BaselineSpec::new(BaselineFamily::LogNormal, vec![-1.0, 1.0]).is_ok());
    }

    #[test]
    fn hazard_origin_limits() {
        // nu < 1: hazard diverges at 0; nu > 1: vanishes
        let dec = BaselineSpec::weibull(1.0, 0.5).unwrap();
        assert_eq!(dec.hazard0(0.0), f64::INFINITY);
        let inc = BaselineSpec::weibull(1.0, 2.0).unwrap();
        assert_eq!(inc.hazard0(0.0), 0.0);
        let exp = BaselineSpec::weibull(2.0, 1.0).unwrap();
        assert_relative_eq!(exp.hazard0(0.0), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn far_tail_cum_hazard_finite() {
        for fam in [BaselineFamily::Ew, BaselineFamily::Gg] {
            let s = BaselineSpec::new(fam, vec![1.0, 2.0, 1.5]).unwrap();
            let h = s.cum_hazard0(40.0);
            assert!(h.is_finite() && h > 1000.0, "{:?}: {h}", fam);
        }
        let ln = BaselineSpec::new(BaselineFamily::LogNormal, vec![0.0, 0.25]).unwrap();
        let h = ln.cum_hazard0(1e6);
        assert!(h.is_finite() && h > 1000.0);
    }
}
