//! Closed forms for the two-band Gaussian example with a Beta(a, a) prior.
//! Shipped alongside the numeric paths so both can be reported side by side.

use crate::error::{invalid, Error, Result};

/// `E_S[1 / E_X[J]] = (2/t2) ((a+1)/(2(2a+1)) + σ² + σ⁴)`, where `t2` is the
/// band-2 (sensing) fraction.
pub fn closed_form_alpha(t2: f64, a: f64, sigma2: f64) -> Result<f64> {
    if t2 == 0.0 {
        return Err(Error::NoSensingUse);
    }
    if !(t2 > 0.0 && t2 <= 1.0) {
        return Err(invalid(format!("band-2 fraction must lie in (0, 1], got {t2}")));
    }
    if !(a > 2.0) {
        return Err(invalid(format!("shape must exceed 2, got {a}")));
    }
    if !(sigma2 > 0.0) {
        return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(2.0 / t2 * ((a + 1.0) / (2.0 * (2.0 * a + 1.0)) + sigma2 + sigma2 * sigma2))
}

/// `E_X[J_X(s)] = t2 / (2 (s + σ²)²)`.
pub fn mixture_fisher(t2: f64, s: f64, sigma2: f64) -> f64 {
    let v = s + sigma2;
    t2 / (2.0 * v * v)
}

/// Score of Beta(a, a): `(a-1)(1/s - 1/(1-s))`.
pub fn prior_score(a: f64, s: f64) -> f64 {
    (a - 1.0) * (1.0 / s - 1.0 / (1.0 - s))
}

/// `E[L_P(S)]` for Beta(a, b) with `a, b > 2`, via `E[L_P] = -E[score']`.
pub fn expected_prior_term(a: f64, b: f64) -> f64 {
    let c = (a + b - 1.0) * (a + b - 2.0);
    c / (a - 2.0) + c / (b - 2.0)
}

/// Unclipped ML stationary point `T/n2 - σ²` of the band-2 variance.
pub fn ml_stationary(t: f64, n2: usize, sigma2: f64) -> f64 {
    t / n2 as f64 - sigma2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn alpha_values() {
        assert_relative_eq!(closed_form_alpha(1.0, 3.0, 0.5).unwrap(), 2.071428571428571, max_relative = 1e-15);
        assert_relative_eq!(closed_form_alpha(0.4, 3.0, 0.5).unwrap(), 5.178571428571428, max_relative = 1e-14);
        assert_eq!(closed_form_alpha(0.0, 3.0, 0.5), Err(Error::NoSensingUse));
        assert!(closed_form_alpha(0.5, 2.0, 0.5).is_err());
    }

    #[test]
    fn alpha_scales_inversely_with_t2() {
        let base = closed_form_alpha(1.0, 4.5, 0.3).unwrap();
        for t2 in [0.1, 0.25, 0.9] {
            assert_relative_eq!(closed_form_alpha(t2, 4.5, 0.3).unwrap() * t2, base, max_relative = 1e-14);
        }
    }

    #[test]
    fn mixture_decreasing_and_prior_terms() {
        let mut last = f64::INFINITY;
        for k in 0..=20 {
            let v = mixture_fisher(0.7, k as f64 / 20.0, 0.5);
            assert!(v < last);
            last = v;
        }
        assert_eq!(expected_prior_term(3.0, 3.0), 40.0);
        assert_relative_eq!(prior_score(3.0, 0.25), 16.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(ml_stationary(1.2 * 50.0, 50, 0.5), 0.7, max_relative = 1e-14);
    }
}
