//! Fisher information for the state: per input symbol, averaged over an input
//! design, summed over a codeword, and the prior's own contribution.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::model::{ChannelModel, InputDesign, StatePrior};
use crate::quad::{integrate, Tolerance};

/// Output-space tolerance for numeric Fisher integrals.
const OUTPUT_TOL: Tolerance = Tolerance::new(1e-13, 1e-10);

/// Looser tolerance for the finite-difference curvature, whose rounding
/// noise is of order `eps / h²`.
const FD_CURVATURE_TOL: Tolerance = Tolerance::new(1e-12, 1e-7);

/// Finite-difference step for state derivatives of the log density.
pub fn curvature_step(s: f64) -> f64 {
    1e-5f64.max(1e-4 * (1.0 + s.abs()))
}

fn diverged(x: usize, s: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFiniteIntegrand(_) => Error::FisherDiverged { input: x, state: s },
        other => other,
    }
}

fn checked(value: f64, x: usize, s: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else if value.is_finite() && value > -1e-12 {
        Ok(0.0)
    } else {
        Err(Error::FisherDiverged { input: x, state: s })
    }
}

/// `J_x(s) = E[-d²/ds² log d(Y | x, s)]`.
///
/// Uses the closed form when the model has one, else the curvature form with
/// the model's analytic curvature, else the score-squared form with a
/// finite-difference score.
pub fn per_symbol_fisher<C: ChannelModel + ?Sized>(model: &C, x: usize, s: f64) -> Result<f64> {
    if let Some(j) = model.fisher(x, s) {
        return checked(j, x, s);
    }
    let (lo, hi) = model.output_interval(x, s);
    let y = 0.5 * (lo + hi);
    if model.state_curvature(x, y, s).is_some() {
        curvature_fisher(model, x, s, true)
    } else {
        score_fisher(model, x, s)
    }
}

/// Curvature-form Fisher information by output quadrature, with the
/// curvature taken from finite differences of the log density.
pub fn numeric_fisher<C: ChannelModel + ?Sized>(model: &C, x: usize, s: f64) -> Result<f64> {
    curvature_fisher(model, x, s, false)
}

fn curvature_fisher<C: ChannelModel + ?Sized>(model: &C, x: usize, s: f64, use_hook: bool) -> Result<f64> {
    let h = curvature_step(s);
    let (lo, hi) = model.output_interval(x, s);
    let curvature = |y: f64| -> f64 {
        if use_hook {
            if let Some(c) = model.state_curvature(x, y, s) {
                return c;
            }
        }
        let l0 = model.log_density(x, y, s);
        let lp = model.log_density(x, y, s + h);
        let lm = model.log_density(x, y, s - h);
        ((lp - l0) + (lm - l0)) / (h * h)
    };
    let est = integrate(
        |y| {
            let d = model.density(x, y, s);
            if d == 0.0 {
                0.0
            } else {
                -curvature(y) * d
            }
        },
        lo,
        hi,
        if use_hook { OUTPUT_TOL } else { FD_CURVATURE_TOL },
        "fisher curvature",
    )
    .map_err(diverged(x, s))?;
    checked(est.value, x, s)
}

/// Score-squared form `E[(d/ds log d)²]`, used as a cross-check of the
/// curvature form.
pub fn score_fisher<C: ChannelModel + ?Sized>(model: &C, x: usize, s: f64) -> Result<f64> {
    let h = curvature_step(s);
    let (lo, hi) = model.output_interval(x, s);
    let est = integrate(
        |y| {
            let d = model.density(x, y, s);
            if d == 0.0 {
                return 0.0;
            }
            let score = (model.log_density(x, y, s + h) - model.log_density(x, y, s - h)) / (2.0 * h);
            score * score * d
        },
        lo,
        hi,
        OUTPUT_TOL,
        "fisher score",
    )
    .map_err(diverged(x, s))?;
    checked(est.value, x, s)
}

/// `E_X[J_X(s)]` under the design's pmf.
pub fn mixture_fisher<C: ChannelModel + ?Sized>(model: &C, design: &InputDesign, s: f64) -> Result<f64> {
    let mut total = 0.0;
    for (x, p) in design.support() {
        total += p * per_symbol_fisher(model, x, s)?;
    }
    Ok(total)
}

/// Fisher information of a whole codeword, `Σ_i J_{x_i}(s)`, evaluated once
/// per distinct symbol and weighted by its count.
pub fn codeword_fisher<C: ChannelModel + ?Sized>(model: &C, codeword: &[usize], s: f64) -> Result<f64> {
    if codeword.is_empty() {
        return Err(Error::InvalidParameter("codeword is empty".into()));
    }
    let mut counts = vec![0usize; model.input_count()];
    for &x in codeword {
        if x >= counts.len() {
            return Err(Error::InvalidParameter(format!("input label {x} out of range")));
        }
        counts[x] += 1;
    }
    let mut total = 0.0;
    for (x, &c) in counts.iter().enumerate().filter(|(_, c)| **c > 0) {
        total += c as f64 * per_symbol_fisher(model, x, s)?;
    }
    Ok(total)
}

/// `L_P(s) = (d/ds log p(s))²`.
pub fn prior_fisher_term(prior: &StatePrior, s: f64) -> Result<f64> {
    prior.score(s).map(|v| v * v)
}

/// `(L_P, L_P', L_P'')` from the score and its derivatives.
pub fn prior_term_derivatives(prior: &StatePrior, s: f64) -> Result<[f64; 3]> {
    let [g, g1, g2] = prior.score_derivatives(s)?;
    Ok([g * g, 2.0 * g * g1, 2.0 * (g1 * g1 + g * g2)])
}

/// Per-symbol Fisher values and their state derivatives, memoized by
/// `(label, state)`. Readers never observe a partially written entry.
#[derive(Debug, Default)]
pub struct FisherCache {
    table: RwLock<HashMap<(usize, u64), [f64; 3]>>,
}

impl FisherCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("fisher cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_insert(&self, x: usize, s: f64, compute: impl FnOnce() -> Result<[f64; 3]>) -> Result<[f64; 3]> {
        let key = (x, s.to_bits());
        if let Some(v) = self.table.read().expect("fisher cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = compute()?;
        self.table.write().expect("fisher cache poisoned").insert(key, v);
        Ok(v)
    }
}

/// Fisher quantities of one (channel, design, prior) triple.
#[derive(Clone)]
pub struct FisherProfile<'a> {
    model: &'a dyn ChannelModel,
    prior: &'a StatePrior,
    design: InputDesign,
    cache: Arc<FisherCache>,
}

impl<'a> FisherProfile<'a> {
    pub fn new(model: &'a dyn ChannelModel, prior: &'a StatePrior, design: InputDesign) -> Result<Self> {
        if design.len() != model.input_count() {
            return Err(Error::InvalidParameter(format!(
                "design has {} inputs, channel has {}",
                design.len(),
                model.input_count()
            )));
        }
        Ok(Self { model, prior, design, cache: Arc::new(FisherCache::new()) })
    }

    /// Same channel and prior with another design; the cache is shared.
    pub fn with_design(&self, design: InputDesign) -> Result<Self> {
        let mut next = Self::new(self.model, self.prior, design)?;
        next.cache = Arc::clone(&self.cache);
        Ok(next)
    }

    pub fn model(&self) -> &'a dyn ChannelModel {
        self.model
    }

    pub fn prior(&self) -> &'a StatePrior {
        self.prior
    }

    pub fn design(&self) -> &InputDesign {
        &self.design
    }

    pub fn cache(&self) -> &FisherCache {
        &self.cache
    }

    fn fd_step(&self, s: f64) -> f64 {
        let (lo, hi) = self.prior.support();
        let h = 1e-4 * (hi - lo);
        h.min(0.5 * (s - lo)).min(0.5 * (hi - s)).max(f64::MIN_POSITIVE)
    }

    /// `(J_x, J_x', J_x'')` at `s`.
    pub fn per_symbol_derivatives(&self, x: usize, s: f64) -> Result<[f64; 3]> {
        self.cache.get_or_insert(x, s, || {
            if let Some(d) = self.model.fisher_derivatives(x, s) {
                return Ok([checked(d[0], x, s)?, d[1], d[2]]);
            }
            let h = self.fd_step(s);
            let j0 = per_symbol_fisher(self.model, x, s)?;
            let jp = per_symbol_fisher(self.model, x, s + h)?;
            let jm = per_symbol_fisher(self.model, x, s - h)?;
            Ok([j0, (jp - jm) / (2.0 * h), (jp - 2.0 * j0 + jm) / (h * h)])
        })
    }

    /// Whether every symbol in the design has closed-form state derivatives.
    pub fn has_analytic_derivatives(&self) -> bool {
        let (lo, hi) = self.prior.support();
        let mid = 0.5 * (lo + hi);
        self.design.support().all(|(x, _)| self.model.fisher_derivatives(x, mid).is_some())
    }

    pub fn per_symbol(&self, x: usize, s: f64) -> Result<f64> {
        self.per_symbol_derivatives(x, s).map(|d| d[0])
    }

    /// `E_X[J_X(s)]` and its first two state derivatives.
    pub fn mixture_derivatives(&self, s: f64) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (x, p) in self.design.support() {
            let d = self.per_symbol_derivatives(x, s)?;
            for k in 0..3 {
                out[k] += p * d[k];
            }
        }
        Ok(out)
    }

    pub fn mixture(&self, s: f64) -> Result<f64> {
        self.mixture_derivatives(s).map(|d| d[0])
    }

    pub fn prior_term(&self, s: f64) -> Result<f64> {
        prior_fisher_term(self.prior, s)
    }

    /// `J_DP(s) = n E_X[J_X(s)] + L_P(s)` and its first two derivatives.
    pub fn combined_derivatives(&self, s: f64, n: f64) -> Result<[f64; 3]> {
        let m = self.mixture_derivatives(s)?;
        let l = prior_term_derivatives(self.prior, s)?;
        Ok(std::array::from_fn(|k| n * m[k] + l[k]))
    }

    pub fn combined(&self, s: f64, n: f64) -> Result<f64> {
        self.combined_derivatives(s, n).map(|d| d[0])
    }
}
