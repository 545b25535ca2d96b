//! Thin numeric helpers over `statrs` special functions.

use statrs::function::erf::erfc;

pub use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const LN_SQRT_2PI: f64 = 0.918938533204672742; // ln(sqrt(2*pi))

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal log density.
pub fn normal_log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// log of the standard normal survival function, stable in both tails.
///
/// For z beyond erfc's underflow range the asymptotic expansion
/// SF(z) ~ phi(z)/z * (1 - 1/z^2) is used.
pub fn normal_log_sf(z: f64) -> f64 {
    if z <= 0.0 {
        // SF = 1 - Phi(z), Phi(z) small or moderate: log1p keeps precision
        let cdf = 0.5 * erfc(-z / SQRT_2);
        (-cdf).ln_1p()
    } else {
        let sf = 0.5 * erfc(z / SQRT_2);
        if sf > 0.0 {
            sf.ln()
        } else {
            normal_log_pdf(z) - z.ln() + (-1.0 / (z * z)).ln_1p()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sf_matches_direct_in_body() {
        for z in [-3.0, -1.0, 0.0, 0.5, 2.0, 8.0] {
            let direct = (0.5 * erfc(z / SQRT_2)).ln();
            assert!((normal_log_sf(z) - direct).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn log_sf_far_tail_is_finite_and_monotone() {
        let a = normal_log_sf(30.0);
        let b = normal_log_sf(40.0);
        assert!(a.is_finite() && b.is_finite());
        assert!(b < a);
        // against the leading-order bound phi(z)/z
        let approx = normal_log_pdf(40.0) - 40.0_f64.ln();
        assert!((b - approx).abs() < 1e-3);
    }
}
