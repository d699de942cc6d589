//! Bayesian Cramér-Rao lower bounds on the MSE at block length `n` and the
//! asymptotic `n·MSE` constants they imply.
//!
//! With `J_DP(s) = n·E_X[J_X(s)] + L_P(s)`:
//!
//! * BCRB:   `1 / E[J_DP(S)]`
//! * ATBCRB: `E²[J_DP⁻¹] / (E[J_DP⁻¹] + E[(d/dS J_DP⁻¹)²] + E[d²/dS² J_DP⁻²])`
//!
//! As `n → ∞`, `n·BCRB → 1 / E_S[E_X[J]]` and `n·ATBCRB → E_S[1 / E_X[J]]`;
//! Jensen's inequality orders the two.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher::FisherProfile;
use crate::quad::{integrate_many, Tolerance, STATE_REL_TOL};

/// Bounds of one design at one block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub bcrb_finite: f64,
    pub atbcrb_finite: f64,
    pub alpha_atbcrb: f64,
    pub alpha_bcrb: f64,
    pub jensen_gap: f64,
}

/// `E_S[f(S)]` for several integrands on one shared partition of the support.
fn expect_many<const N: usize, F>(
    profile: &FisherProfile<'_>,
    mut f: F,
    tol: [Tolerance; N],
    labels: [&'static str; N],
) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let prior = profile.prior();
    let (lo, hi) = prior.support();
    let mut failure: Option<Error> = None;
    let est = integrate_many(
        |s| {
            if failure.is_some() {
                return [0.0; N];
            }
            let values = prior.density(s).and_then(|p| f(s).map(|v| v.map(|c| p * c)));
            match values {
                Ok(v) => {
                    if let Some(k) = v.iter().position(|c| !c.is_finite()) {
                        failure = Some(Error::NonFiniteIntegrand(labels[k]));
                        [0.0; N]
                    } else {
                        v
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    [0.0; N]
                }
            }
        },
        lo,
        hi,
        tol,
        labels[0],
    );
    if let Some(e) = failure {
        return Err(e);
    }
    est.map(|e| e.map(|c| c.value))
}

/// `E_S[n·E_X[J_X(S)] + L_P(S)]`, the Bayesian (total) Fisher information.
pub fn bayesian_fisher(profile: &FisherProfile<'_>, n: u64) -> Result<f64> {
    let [data, prior] = expect_many(
        profile,
        |s| Ok([profile.mixture(s)?, profile.prior_term(s)?]),
        [Tolerance::relative(STATE_REL_TOL); 2],
        ["E_X[J]", "L_P"],
    )?;
    Ok(n as f64 * data + prior)
}

/// BCRB at block length `n`.
pub fn bcrb_finite(profile: &FisherProfile<'_>, n: u64) -> Result<f64> {
    let jb = bayesian_fisher(profile, n)?;
    if jb > 0.0 && jb.is_finite() {
        Ok(1.0 / jb)
    } else {
        Err(Error::DegenerateModel)
    }
}

/// The three expectations of the ATBCRB: `E[J⁻¹]`, `E[(J⁻¹)'²]`, `E[(J⁻²)'']`.
pub fn atbcrb_terms(profile: &FisherProfile<'_>, n: u64) -> Result<[f64; 3]> {
    let n = n as f64;
    let terms = |s: f64| -> Result<[f64; 3]> {
        let [j, dj, ddj] = profile.combined_derivatives(s, n)?;
        let inv = 1.0 / j;
        let inv2 = inv * inv;
        let d_inv = -dj * inv2;
        let dd_inv_sq = inv2 * inv * (6.0 * dj * dj * inv - 2.0 * ddj);
        Ok([inv, d_inv * d_inv, dd_inv_sq])
    };
    let labels = ["J_DP^-1", "(d/dS J_DP^-1)^2", "d2/dS2 J_DP^-2"];
    let [scale] = expect_many(profile, |s| terms(s).map(|t| [t[0]]), [Tolerance::relative(STATE_REL_TOL)], [labels[0]])?;
    // Finite-difference derivatives of a quadrature-computed J carry noise of
    // order tol/h², so the correction terms are only resolved to that level.
    let floor = if profile.has_analytic_derivatives() { 1e-3 * STATE_REL_TOL } else { 1e-7 };
    let small = Tolerance::new(floor * scale.abs(), STATE_REL_TOL);
    expect_many(profile, terms, [Tolerance::relative(STATE_REL_TOL), small, small], labels)
}

/// ATBCRB at block length `n`, all three expectations on one shared grid.
pub fn atbcrb_finite(profile: &FisherProfile<'_>, n: u64) -> Result<f64> {
    let [e0, e1, e2] = atbcrb_terms(profile, n)?;
    let denom = e0 + e1 + e2;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::DegenerateModel);
    }
    Ok(e0 * e0 / denom)
}

/// Variant with the third expectation subtracted, as obtained by integrating
/// the covariance inequality by parts with `ψ = J_DP⁻¹`. Diagnostic only.
pub fn atbcrb_covariance_form(profile: &FisherProfile<'_>, n: u64) -> Result<f64> {
    let [e0, e1, e2] = atbcrb_terms(profile, n)?;
    let denom = e0 + e1 - e2;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::DegenerateModel);
    }
    Ok(e0 * e0 / denom)
}

/// `E_S[1 / E_X[J_X(S)]]`, the optimal MSE-decay constant.
pub fn alpha_atbcrb(profile: &FisherProfile<'_>) -> Result<f64> {
    let [v] = expect_many(
        profile,
        |s| {
            let m = profile.mixture(s)?;
            if m > 0.0 {
                Ok([1.0 / m])
            } else {
                Err(Error::NotIdentifiable)
            }
        },
        [Tolerance::relative(STATE_REL_TOL)],
        ["1/E_X[J]"],
    )?;
    Ok(v)
}

/// `1 / E_S[E_X[J_X(S)]]`, the decay constant the BCRB suggests.
pub fn alpha_bcrb(profile: &FisherProfile<'_>) -> Result<f64> {
    let [v] = expect_many(
        profile,
        |s| Ok([profile.mixture(s)?]),
        [Tolerance::relative(STATE_REL_TOL)],
        ["E_X[J]"],
    )?;
    if v > 0.0 {
        Ok(1.0 / v)
    } else {
        Err(Error::NotIdentifiable)
    }
}

pub fn bound_report(profile: &FisherProfile<'_>, n: u64) -> Result<BoundReport> {
    let alpha_at = alpha_atbcrb(profile)?;
    let alpha_b = alpha_bcrb(profile)?;
    Ok(BoundReport {
        n,
        bcrb_finite: bcrb_finite(profile, n)?,
        atbcrb_finite: atbcrb_finite(profile, n)?,
        alpha_atbcrb: alpha_at,
        alpha_bcrb: alpha_b,
        jensen_gap: alpha_at - alpha_b,
    })
}
