//! Monte Carlo check of the achievable MSE decay: one constant-composition
//! codeword per block length, sensing observations drawn at a prior-sampled
//! state, and ML or MAP estimation of that state.
//!
//! Randomness is counter based: every trial seeds its own ChaCha stream from
//! `(seed, n, trial)`, and squared errors are reduced in trial order, so the
//! report does not depend on how trials are spread over threads.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{alpha_atbcrb, alpha_bcrb, atbcrb_finite, bcrb_finite};
use crate::error::{invalid, Error, Result};
use crate::fisher::FisherProfile;
use crate::model::{ChannelModel, InputDesign, StatePrior, TwoBandModel};
use crate::quad::golden_max;

/// Grid nodes scanned before golden-section refinement of the posterior.
pub const MAP_GRID: usize = 1024;

/// Absolute tolerance of the golden-section refinement.
pub const MAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ml,
    Map,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ml => "ml",
            Self::Map => "map",
        })
    }
}

/// Codeword whose empirical type is fixed by rounding `n·p_X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CCCodeword {
    symbols: Vec<usize>,
    composition: Vec<usize>,
}

impl CCCodeword {
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// Count of each input label.
    pub fn composition(&self) -> &[usize] {
        &self.composition
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Largest-remainder rounding of `n·pmf`: floors first, then one extra symbol
/// to the largest fractional parts, ties to the smaller label.
pub fn composition_counts(pmf: &[f64], n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = pmf.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|x| (x + 1e-9 * x.max(1.0)).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..pmf.len()).filter(|&x| pmf[x] > 0.0).collect();
    let frac = |x: usize| (scaled[x] - counts[x] as f64).max(0.0);
    order.sort_by(|&i, &j| frac(j).total_cmp(&frac(i)).then(i.cmp(&j)));
    for &x in order.iter().take(n.saturating_sub(assigned)) {
        counts[x] += 1;
    }
    counts
}

fn rng_for(seed: u64, n: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const STREAM_TRIAL: u64 = 0;
const STREAM_CODEWORD: u64 = 1;

/// Constant-composition codeword of length `n` for `design`, arranged by a
/// permutation drawn from `seed`.
pub fn generate_ccc(design: &InputDesign, n: usize, seed: u64) -> Result<CCCodeword> {
    if n == 0 {
        return Err(invalid("block length must be at least 1"));
    }
    let composition = composition_counts(design.pmf(), n);
    let mut symbols: Vec<usize> = composition
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat_n(x, c))
        .collect();
    let mut rng = rng_for(seed, n as u64, 0, STREAM_CODEWORD);
    symbols.shuffle(&mut rng);
    Ok(CCCodeword { symbols, composition })
}

/// Independent sensing outputs `Y_i ~ d(. | x_i, s)`.
pub fn simulate_observations(model: &dyn ChannelModel, codeword: &CCCodeword, s: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    codeword.symbols.iter().map(|&x| model.sample(x, s, rng)).collect()
}

/// Sufficient statistic of the band-2 variance: `T = Σ (y_i - x_i)²` over
/// band-2 positions, and their count.
pub fn band2_statistic(model: &TwoBandModel, codeword: &CCCodeword, observations: &[f64]) -> (f64, usize) {
    codeword
        .symbols
        .iter()
        .zip(observations)
        .filter(|(x, _)| model.is_band2(**x))
        .fold((0.0, 0), |(t, n2), (&x, &y)| {
            let d = y - model.amplitude(x);
            (t + d * d, n2 + 1)
        })
}

/// Clipped closed-form ML estimate from `(T, n2)`.
pub fn ml_from_statistic(t: f64, n2: usize, sigma2: f64, support: (f64, f64)) -> Result<f64> {
    if n2 == 0 {
        return Err(Error::UnidentifiableCodeword);
    }
    Ok((t / n2 as f64 - sigma2).clamp(support.0, support.1))
}

pub fn ml_estimate(model: &TwoBandModel, codeword: &CCCodeword, observations: &[f64]) -> Result<f64> {
    let (t, n2) = band2_statistic(model, codeword, observations);
    ml_from_statistic(t, n2, model.sigma2(), model.prior().support())
}

/// Maximize `f` over the open interval: grid scan, then golden section
/// around the best node.
fn maximize_on_support<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    let step = (hi - lo) / MAP_GRID as f64;
    let node = |k: usize| lo + (k as f64 + 0.5) * step;
    let (best_k, best_v) = (0..MAP_GRID)
        .map(|k| (k, f(node(k))))
        .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let a = (node(best_k) - step).max(lo);
    let b = (node(best_k) + step).min(hi);
    let (x, v) = golden_max(&mut f, a, b, MAP_TOL);
    if v >= best_v {
        x
    } else {
        node(best_k)
    }
}

fn log_prior_or_neg_inf(prior: &StatePrior, s: f64) -> f64 {
    prior.log_density(s).unwrap_or(f64::NEG_INFINITY)
}

/// MAP estimate of the band-2 variance from `(T, n2)`.
///
/// After the grid scan and golden section, the optimum is polished by
/// bisection on the analytic derivative of the log posterior, which resolves
/// it far below the `sqrt(eps)` floor of value comparisons.
pub fn map_from_statistic(prior: &StatePrior, t: f64, n2: usize, sigma2: f64) -> Result<f64> {
    if n2 == 0 {
        return Err(Error::UnidentifiableCodeword);
    }
    let (lo, hi) = prior.support();
    let half_n = 0.5 * n2 as f64;
    let x = maximize_on_support(
        |s| {
            let v = s + sigma2;
            log_prior_or_neg_inf(prior, s) - half_n * v.ln() - t / (2.0 * v)
        },
        lo,
        hi,
    );
    let slope = |s: f64| {
        let v = s + sigma2;
        prior.score(s).unwrap_or(f64::NAN) - half_n / v + t / (2.0 * v * v)
    };
    Ok(polish_stationary(slope, x, (hi - lo) / MAP_GRID as f64, lo, hi))
}

/// Bisection on `slope` in `[x - r, x + r]` when it brackets a maximum.
fn polish_stationary<F: Fn(f64) -> f64>(slope: F, x: f64, r: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = ((x - r).max(lo), (x + r).min(hi));
    if !(slope(a) > 0.0 && slope(b) < 0.0) {
        return x;
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if slope(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// MAP estimate for any channel, summing per-symbol log densities.
pub fn map_estimate(
    prior: &StatePrior,
    model: &dyn ChannelModel,
    codeword: &CCCodeword,
    observations: &[f64],
) -> Result<f64> {
    let (lo, hi) = prior.support();
    let probe = 0.5 * (lo + hi);
    if codeword.symbols.iter().all(|&x| model.fisher(x, probe) == Some(0.0)) {
        return Err(Error::UnidentifiableCodeword);
    }
    Ok(maximize_on_support(
        |s| {
            let ll: f64 = codeword
                .symbols
                .iter()
                .zip(observations)
                .map(|(&x, &y)| model.log_density(x, y, s))
                .sum();
            log_prior_or_neg_inf(prior, s) + ll
        },
        lo,
        hi,
    ))
}

/// Grid-plus-refinement ML for any channel: MAP under a flat prior on `support`.
pub fn ml_estimate_generic(
    model: &dyn ChannelModel,
    support: (f64, f64),
    codeword: &CCCodeword,
    observations: &[f64],
) -> Result<f64> {
    let flat = StatePrior::beta_on(1.0, 1.0, support.0, support.1)?;
    map_estimate(&flat, model, codeword, observations)
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: TwoBandModel,
    pub t1: f64,
    pub estimator: Estimator,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Draw `T` from its gamma law instead of `n` Gaussian samples.
    pub fast_path: bool,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(invalid("trials must be at least 2"));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(invalid("n_list must be nonempty with every n >= 1"));
        }
        if !(0.0..1.0).contains(&self.t1) {
            return Err(invalid(format!("t1 must lie in [0, 1) for sensing, got {}", self.t1)));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Result of one block length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRow {
    pub n: usize,
    pub trials: usize,
    pub mse: f64,
    pub n_mse: f64,
    /// Standard error of `mse`.
    pub stderr: f64,
    pub alpha_atbcrb: f64,
    pub alpha_bcrb: f64,
    pub atbcrb_finite: f64,
    pub bcrb_finite: f64,
    pub estimator: Estimator,
    pub fast_path: bool,
}

impl SimRow {
    /// Standard error of `n_mse`.
    pub fn n_stderr(&self) -> f64 {
        self.n as f64 * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub rows: Vec<SimRow>,
}

/// Sum with pairwise splitting; the split points depend only on length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// One trial: state draw, statistic, estimate. Returns `(s, ŝ)`.
fn run_trial(cfg: &SimConfig, codeword: &CCCodeword, n: usize, trial: usize, n2: usize) -> Result<(f64, f64)> {
    let model = &cfg.model;
    let mut rng = rng_for(cfg.seed, n as u64, trial as u64, STREAM_TRIAL);
    let s = model.prior().sample(&mut rng);
    let t = if cfg.fast_path {
        let scale = 2.0 * (s + model.sigma2());
        Gamma::new(0.5 * n2 as f64, scale).map_err(|e| invalid(e.to_string()))?.sample(&mut rng)
    } else {
        let obs = simulate_observations(model, codeword, s, &mut rng);
        band2_statistic(model, codeword, &obs).0
    };
    let est = match cfg.estimator {
        Estimator::Ml => ml_from_statistic(t, n2, model.sigma2(), model.prior().support())?,
        Estimator::Map => map_from_statistic(model.prior(), t, n2, model.sigma2())?,
    };
    Ok((s, est))
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// True states and estimates of every trial at block length `n`, in trial order.
pub fn trial_estimates(cfg: &SimConfig, n: usize) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let design = cfg.model.design(cfg.t1)?;
    let codeword = generate_ccc(&design, n, cfg.seed)?;
    let n2 = codeword.symbols.iter().filter(|&&x| cfg.model.is_band2(x)).count();
    if n2 == 0 {
        return Err(Error::UnidentifiableCodeword);
    }
    in_pool(cfg.workers, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, &codeword, n, trial, n2))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Empirical `n·MSE` per block length, with the bound reference lines.
pub fn empirical_mse(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let profile = FisherProfile::new(&cfg.model, cfg.model.prior(), cfg.model.design(cfg.t1)?)?;
    let alpha_at = alpha_atbcrb(&profile)?;
    let alpha_b = alpha_bcrb(&profile)?;
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let pairs = trial_estimates(cfg, n)?;
        let sq: Vec<f64> = pairs.iter().map(|(s, e)| (s - e) * (s - e)).collect();
        let trials = sq.len() as f64;
        let mse = pairwise_sum(&sq) / trials;
        let dev: Vec<f64> = sq.iter().map(|e| (e - mse) * (e - mse)).collect();
        let var = pairwise_sum(&dev) / (trials - 1.0);
        rows.push(SimRow {
            n,
            trials: sq.len(),
            mse,
            n_mse: n as f64 * mse,
            stderr: (var / trials).sqrt(),
            alpha_atbcrb: alpha_at,
            alpha_bcrb: alpha_b,
            atbcrb_finite: atbcrb_finite(&profile, n as u64)?,
            bcrb_finite: bcrb_finite(&profile, n as u64)?,
            estimator: cfg.estimator,
            fast_path: cfg.fast_path,
        });
    }
    Ok(SimReport { rows })
}

/// [`empirical_mse`] over an increasing list of block lengths.
pub fn convergence_study(cfg: &SimConfig) -> Result<SimReport> {
    if !cfg.n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("n_list must be strictly increasing"));
    }
    empirical_mse(cfg)
}
