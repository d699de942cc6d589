//! Mutual information of discrete-input, continuous-output channels at a
//! fixed state, the worst-state (compound) rate, and the two-band
//! time-sharing rate. Entropies are computed in nats and reported in bits.

use std::f64::consts::{E, LN_2, PI};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{ChannelModel, InputDesign, TwoBandModel, TRUNCATION_SDS};
use crate::quad::{golden_max, integrate, Tolerance};

const ENTROPY_TOL: Tolerance = Tolerance::new(1e-13, 1e-12);

/// Slack (bits) before a negative mutual information is treated as a bug.
pub const MI_SLACK_BITS: f64 = 1e-9;

/// Default number of grid nodes for the worst-state search.
pub const WORST_CASE_GRID: usize = 64;

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(t: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(t) + term(1.0 - t)
}

fn gaussian_entropy_nats(variance: f64) -> f64 {
    0.5 * (2.0 * PI * E * variance).ln()
}

/// Differential entropy of a Gaussian, in bits.
pub fn gaussian_entropy(variance: f64) -> f64 {
    gaussian_entropy_nats(variance) / LN_2
}

fn mixture_entropy_nats(weights: &[f64], means: &[f64], variance: f64) -> Result<f64> {
    if weights.len() != means.len() || weights.is_empty() {
        return Err(invalid("mixture weights and means must be nonempty and equally long"));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(invalid(format!("mixture variance must be positive, got {variance}")));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("mixture weights must be a probability vector"));
    }
    let comps: Vec<(f64, f64)> = weights
        .iter()
        .zip(means)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, m)| (w.ln(), *m))
        .collect();
    let sd = variance.sqrt();
    let lo = comps.iter().map(|c| c.1).fold(f64::INFINITY, f64::min) - TRUNCATION_SDS * sd;
    let hi = comps.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max) + TRUNCATION_SDS * sd;
    let log_norm = -0.5 * (2.0 * PI * variance).ln();
    let ln_f = |y: f64| {
        let exps: Vec<f64> = comps.iter().map(|(lw, m)| lw - (y - m) * (y - m) / (2.0 * variance)).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln() + log_norm
    };
    let est = integrate(
        |y| {
            let l = ln_f(y);
            -l.exp() * l
        },
        lo,
        hi,
        ENTROPY_TOL,
        "mixture entropy",
    )?;
    Ok(est.value)
}

/// Differential entropy in bits of `Σ_k w_k N(μ_k, variance)`.
pub fn gaussian_mixture_entropy(weights: &[f64], means: &[f64], variance: f64) -> Result<f64> {
    mixture_entropy_nats(weights, means, variance).map(|h| h / LN_2)
}

fn generic_entropy_nats<C: ChannelModel + ?Sized>(model: &C, comps: &[(usize, f64)], s: f64) -> Result<f64> {
    let (lo, hi) = comps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
        let (a, b) = model.output_interval(*x, s);
        (lo.min(a), hi.max(b))
    });
    let est = integrate(
        |y| {
            let f: f64 = comps.iter().map(|(x, w)| w * model.density(*x, y, s)).sum();
            if f > 0.0 {
                -f * f.ln()
            } else {
                0.0
            }
        },
        lo,
        hi,
        ENTROPY_TOL,
        "output entropy",
    )?;
    Ok(est.value)
}

/// Entropy (nats) of a mixture of channel outputs with the given weights.
fn branch_entropy_nats<C: ChannelModel + ?Sized>(model: &C, comps: &[(usize, f64)], s: f64) -> Result<f64> {
    let gaussian: Option<Vec<(f64, f64)>> = comps.iter().map(|(x, _)| model.gaussian_component(*x, s)).collect();
    if let Some(g) = gaussian {
        let var = g[0].1;
        if g.iter().all(|c| c.1 == var) {
            let weights: Vec<f64> = comps.iter().map(|c| c.1).collect();
            let means: Vec<f64> = g.iter().map(|c| c.0).collect();
            return mixture_entropy_nats(&weights, &means, var);
        }
    }
    generic_entropy_nats(model, comps, s)
}

/// `I(X; Y)` in bits at state `s` for inputs drawn from `design`.
pub fn mi_discrete_input<C: ChannelModel + ?Sized>(model: &C, design: &InputDesign, s: f64) -> Result<f64> {
    if design.len() != model.input_count() {
        return Err(invalid(format!(
            "design has {} inputs, channel has {}",
            design.len(),
            model.input_count()
        )));
    }
    let support: Vec<(usize, f64)> = design.support().collect();

    let mut branches: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    for &(x, p) in &support {
        let b = model.branch(x);
        match branches.iter_mut().find(|(id, _)| *id == b) {
            Some((_, v)) => v.push((x, p)),
            None => branches.push((b, vec![(x, p)])),
        }
    }

    let mut h_out = 0.0;
    for (_, comps) in &branches {
        let mass: f64 = comps.iter().map(|c| c.1).sum();
        let conditional: Vec<(usize, f64)> = comps.iter().map(|(x, p)| (*x, p / mass)).collect();
        h_out += mass * (branch_entropy_nats(model, &conditional, s)? - mass.ln());
    }

    let mut h_cond = 0.0;
    for &(x, p) in &support {
        let h = match model.gaussian_component(x, s) {
            Some((_, var)) => gaussian_entropy_nats(var),
            None => generic_entropy_nats(model, &[(x, 1.0)], s)?,
        };
        h_cond += p * h;
    }

    let mi = (h_out - h_cond) / LN_2;
    let input_entropy: f64 = support.iter().map(|(_, p)| -p * p.log2()).sum();
    if mi < -MI_SLACK_BITS || mi > input_entropy + MI_SLACK_BITS {
        return Err(Error::NegativeInformation(mi));
    }
    Ok(mi.clamp(0.0, input_entropy))
}

/// Minimizing state and rate of the compound channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCase {
    pub state: f64,
    pub rate: f64,
}

/// `min_s I(X; Y)` over `[lo, hi]`: grid scan of `grid` nodes (endpoints
/// included), then golden-section refinement around the best node.
pub fn worst_case_rate<C: ChannelModel + ?Sized>(
    model: &C,
    design: &InputDesign,
    support: (f64, f64),
    grid: usize,
) -> Result<WorstCase> {
    let (lo, hi) = support;
    if !(lo < hi) || grid < 2 {
        return Err(invalid("worst-case search needs lo < hi and at least 2 grid nodes"));
    }
    let node = |k: usize| if k + 1 == grid { hi } else { lo + (hi - lo) * k as f64 / (grid - 1) as f64 };
    let mut best = WorstCase { state: lo, rate: f64::INFINITY };
    let mut best_k = 0;
    for k in 0..grid {
        let s = node(k);
        let r = mi_discrete_input(model, design, s)?;
        if r < best.rate {
            best = WorstCase { state: s, rate: r };
            best_k = k;
        }
    }
    let a = node(best_k.saturating_sub(1));
    let b = node((best_k + 1).min(grid - 1));
    let mut failure = None;
    let (s, neg) = golden_max(
        |s| match mi_discrete_input(model, design, s) {
            Ok(r) => -r,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-9 * (hi - lo),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if -neg < best.rate {
        best = WorstCase { state: s, rate: -neg };
    }
    Ok(best)
}

/// Terms of the two-band time-sharing rate `H2(t1) + t1 C1 + (1 - t1) C2(s_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBreakdown {
    pub t1: f64,
    pub h2: f64,
    pub c1: f64,
    pub c2_worst: f64,
    pub total: f64,
}

/// Per-band rates with uniform inputs: band 1 and band 2 at maximal interference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandCapacities {
    pub c1: f64,
    pub c2_worst: f64,
}

impl BandCapacities {
    pub fn of(model: &TwoBandModel) -> Result<Self> {
        let m = model.symbols_per_band();
        let uniform = InputDesign::new(vec![1.0 / m as f64; m])?;
        let (_, s_max) = model.prior().support();
        Ok(Self {
            c1: mi_discrete_input(model.band1(), &uniform, s_max)?,
            c2_worst: mi_discrete_input(model.band2(), &uniform, s_max)?,
        })
    }

    pub fn breakdown(&self, t1: f64) -> Result<RateBreakdown> {
        if !(0.0..=1.0).contains(&t1) {
            return Err(invalid(format!("band-1 fraction t1 must lie in [0, 1], got {t1}")));
        }
        let h2 = binary_entropy(t1);
        Ok(RateBreakdown {
            t1,
            h2,
            c1: self.c1,
            c2_worst: self.c2_worst,
            total: h2 + t1 * self.c1 + (1.0 - t1) * self.c2_worst,
        })
    }

    /// Maximizer of the rate over `t1`, from `log2((1 - t)/t) = C2 - C1`.
    pub fn rate_optimal_t1(&self) -> f64 {
        1.0 / (1.0 + (self.c2_worst - self.c1).exp2())
    }
}

pub fn two_band_rate(model: &TwoBandModel, t1: f64) -> Result<RateBreakdown> {
    BandCapacities::of(model)?.breakdown(t1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianMeanShift, GaussianStateVariance, Modulation};
    use approx::assert_relative_eq;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_relative_eq!(binary_entropy(0.25), 0.8112781244591328, max_relative = 1e-14);
    }

    #[test]
    fn single_and_degenerate_mixtures() {
        let h = gaussian_mixture_entropy(&[1.0], &[0.3], 0.5).unwrap();
        assert_relative_eq!(h, 0.5 * (2.0 * PI * E * 0.5).log2(), max_relative = 1e-11);
        assert_relative_eq!(h, 1.5470956, max_relative = 1e-7);
        let d = gaussian_mixture_entropy(&[0.5, 0.5], &[0.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(d, h, max_relative = 1e-11);
    }

    #[test]
    fn bpsk_limits() {
        let design = InputDesign::new(vec![0.5, 0.5]).unwrap();
        let noisy = GaussianMeanShift::new(vec![1.0, -1.0], 1e6).unwrap();
        assert!(mi_discrete_input(&noisy, &design, 0.0).unwrap() < 1e-6);
        let clean = GaussianMeanShift::new(vec![1.0, -1.0], 1e-3).unwrap();
        assert!((mi_discrete_input(&clean, &design, 0.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn state_independent_worst_case() {
        let ch = GaussianMeanShift::new(vec![1.0, -1.0], 0.5).unwrap();
        let design = InputDesign::new(vec![0.5, 0.5]).unwrap();
        let w = worst_case_rate(&ch, &design, (0.0, 1.0), 16).unwrap();
        assert_relative_eq!(w.rate, mi_discrete_input(&ch, &design, 0.4).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn band2_worst_state_is_max_interference() {
        let ch = GaussianStateVariance::new(vec![2f64.sqrt(), -(2f64.sqrt())], 0.5).unwrap();
        let design = InputDesign::new(vec![0.5, 0.5]).unwrap();
        let w = worst_case_rate(&ch, &design, (0.0, 1.0), WORST_CASE_GRID).unwrap();
        assert!((w.state - 1.0).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn rate_endpoints() {
        let m = TwoBandModel::symmetric(3.0, 2.0, 0.5, Modulation::Bpsk).unwrap();
        let caps = BandCapacities::of(&m).unwrap();
        assert_eq!(caps.breakdown(1.0).unwrap().total, caps.c1);
        assert_eq!(caps.breakdown(0.0).unwrap().total, caps.c2_worst);
        let half = caps.breakdown(0.5).unwrap();
        assert_relative_eq!(half.total, 1.0 + 0.5 * caps.c1 + 0.5 * caps.c2_worst, max_relative = 1e-15);
        assert!(caps.c2_worst < caps.c1);
        assert!(caps.breakdown(1.2).is_err());
    }
}
