//! Priors, input designs and channel families.
//!
//! A [`ChannelModel`] maps an input label and a state `s` to a density over a
//! real output. Outputs may live on several disjoint *branches* (e.g. two
//! frequency bands that the receiver tells apart); every input lands on
//! exactly one branch.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, Tolerance};

/// Distance from a support endpoint below which a state counts as boundary.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Beta(a, b) density on (0, 1), evaluated through log-gamma.
pub fn beta_density(s: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid(format!("beta shapes must be positive, got a={a}, b={b}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::StateOutsideSupport(s));
    }
    Ok(beta_log_density_unit(s, a, b).exp())
}

fn beta_log_density_unit(u: f64, a: f64, b: f64) -> f64 {
    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p()
}

type DensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied density on a bounded interval, normalized at construction.
#[derive(Clone)]
pub struct CustomPrior {
    density: Arc<DensityFn>,
    lo: f64,
    hi: f64,
    log_norm: f64,
    cdf_nodes: Arc<[f64]>,
}

const CDF_PANELS: usize = 1024;

impl CustomPrior {
    /// `density` may be unnormalized; it must be positive on the open interval.
    pub fn new<F>(density: F, lo: f64, hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("prior support [{lo}, {hi}] must be a bounded interval")));
        }
        let width = hi - lo;
        let mut cdf = Vec::with_capacity(CDF_PANELS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..CDF_PANELS {
            let a = lo + width * k as f64 / CDF_PANELS as f64;
            let b = lo + width * (k + 1) as f64 / CDF_PANELS as f64;
            acc += integrate(&density, a, b, Tolerance::new(1e-15, 1e-12), "prior density")?.value;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(invalid("prior density must have positive finite mass"));
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(Self {
            density: Arc::new(density),
            lo,
            hi,
            log_norm: acc.ln(),
            cdf_nodes: cdf.into(),
        })
    }

    fn log_density(&self, s: f64) -> f64 {
        (self.density)(s).ln() - self.log_norm
    }

    fn node(&self, k: usize) -> f64 {
        self.lo + (self.hi - self.lo) * k as f64 / CDF_PANELS as f64
    }

    fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf_nodes.partition_point(|&c| c <= u).clamp(1, CDF_PANELS) - 1;
        let (c0, c1) = (self.cdf_nodes[k], self.cdf_nodes[k + 1]);
        let (x0, x1) = (self.node(k), self.node(k + 1));
        let mut x = if c1 > c0 { x0 + (u - c0) / (c1 - c0) * (x1 - x0) } else { 0.5 * (x0 + x1) };
        // Newton polish against the exact within-panel CDF.
        for _ in 0..3 {
            let Ok(part) = integrate(&*self.density, x0, x.max(x0 + f64::EPSILON), Tolerance::new(1e-15, 1e-12), "prior cdf")
            else {
                break;
            };
            let f = (self.density)(x) / self.log_norm.exp();
            if !(f > 0.0) {
                break;
            }
            let step = (c0 + part.value / self.log_norm.exp() - u) / f;
            x = (x - step).clamp(x0, x1);
        }
        x
    }
}

impl fmt::Debug for CustomPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPrior").field("lo", &self.lo).field("hi", &self.hi).finish_non_exhaustive()
    }
}

/// Continuous prior on a bounded scalar interval.
#[derive(Debug, Clone)]
pub enum StatePrior {
    /// Beta(a, b) stretched onto `[lo, hi]`.
    Beta { a: f64, b: f64, lo: f64, hi: f64 },
    Custom(CustomPrior),
}

impl StatePrior {
    /// Beta(a, b) on the unit interval.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::beta_on(a, b, 0.0, 1.0)
    }

    pub fn beta_on(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid(format!("beta shapes must be positive, got a={a}, b={b}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("prior support [{lo}, {hi}] must be a bounded interval")));
        }
        Ok(Self::Beta { a, b, lo, hi })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Beta { lo, hi, .. } => (*lo, *hi),
            Self::Custom(c) => (c.lo, c.hi),
        }
    }

    pub fn width(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// Regularity needed by the Cramér-Rao family: for beta priors both
    /// shapes must exceed 2 so that `E[L_P]` and the boundary terms are finite.
    pub fn check_regularity(&self) -> Result<()> {
        match self {
            Self::Beta { a, b, .. } if !(*a > 2.0 && *b > 2.0) => Err(invalid(format!(
                "beta prior needs a, b > 2 for regularity, got a={a}, b={b}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = self.support();
        s > lo && s < hi
    }

    fn require_open(&self, s: f64) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::StateOutsideSupport(s))
        }
    }

    fn require_interior(&self, s: f64) -> Result<()> {
        self.require_open(s).map_err(|_| Error::SingularScore(s))?;
        let (lo, hi) = self.support();
        if s - lo < BOUNDARY_EPS || hi - s < BOUNDARY_EPS {
            return Err(Error::SingularScore(s));
        }
        Ok(())
    }

    pub fn log_density(&self, s: f64) -> Result<f64> {
        self.require_open(s)?;
        Ok(match self {
            Self::Beta { a, b, lo, hi } => {
                let w = hi - lo;
                beta_log_density_unit((s - lo) / w, *a, *b) - w.ln()
            }
            Self::Custom(c) => c.log_density(s),
        })
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        self.log_density(s).map(f64::exp)
    }

    /// `d/ds log p(s)`.
    pub fn score(&self, s: f64) -> Result<f64> {
        self.score_derivatives(s).map(|d| d[0])
    }

    /// The score and its first two derivatives in `s`.
    pub fn score_derivatives(&self, s: f64) -> Result<[f64; 3]> {
        self.require_interior(s)?;
        match self {
            Self::Beta { a, b, lo, hi } => {
                let w = hi - lo;
                let u = (s - lo) / w;
                let v = 1.0 - u;
                let (am, bm) = (a - 1.0, b - 1.0);
                Ok([
                    (am / u - bm / v) / w,
                    (-am / (u * u) - bm / (v * v)) / (w * w),
                    (2.0 * am / (u * u * u) - 2.0 * bm / (v * v * v)) / (w * w * w),
                ])
            }
            Self::Custom(c) => {
                let (lo, hi) = (c.lo, c.hi);
                let h = (1e-4 * (hi - lo)).min(0.25 * (s - lo)).min(0.25 * (hi - s));
                let lp = |x: f64| c.log_density(x);
                let (f0, fp, fm) = (lp(s), lp(s + h), lp(s - h));
                let (fp2, fm2) = (lp(s + 2.0 * h), lp(s - 2.0 * h));
                let d1 = (fm2 - 8.0 * fm + 8.0 * fp - fp2) / (12.0 * h);
                let d2 = (fp - 2.0 * f0 + fm) / (h * h);
                let d3 = (fp2 - 2.0 * fp + 2.0 * fm - fm2) / (2.0 * h * h * h);
                Ok([d1, d2, d3])
            }
        }
    }

    /// One draw from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Beta { a, b, lo, hi } => {
                // Ratio of two unit-scale gamma draws.
                let ga = Gamma::new(*a, 1.0).expect("validated shape").sample(rng);
                let gb = Gamma::new(*b, 1.0).expect("validated shape").sample(rng);
                let u = ga / (ga + gb);
                lo + (hi - lo) * u
            }
            Self::Custom(c) => {
                let u: f64 = rng.random();
                c.quantile(u)
            }
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            Self::Beta { a, b, lo, hi } => Ok(lo + (hi - lo) * a / (a + b)),
            Self::Custom(_) => self.expect(|s| Ok(s), Tolerance::relative(1e-12)),
        }
    }

    /// `E_S[g(S)]` by adaptive quadrature over the open support.
    pub fn expect<G>(&self, mut g: G, tol: Tolerance) -> Result<f64>
    where
        G: FnMut(f64) -> Result<f64>,
    {
        let (lo, hi) = self.support();
        let mut failure = None;
        let est = integrate(
            |s| match self.density(s).and_then(|p| g(s).map(|v| p * v)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            tol,
            "prior expectation",
        );
        match failure {
            Some(e) => Err(e),
            None => est.map(|e| e.value),
        }
    }

    /// Total prior mass; 1 up to quadrature error.
    pub fn normalization(&self) -> Result<f64> {
        self.expect(|_| Ok(1.0), Tolerance::relative(1e-12))
    }
}

/// Draw one state from `prior`, deterministically in `seed`.
pub fn sample_state(prior: &StatePrior, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    prior.sample(&mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    #[serde(rename = "4pam")]
    Pam4,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bpsk => "bpsk",
            Self::Pam4 => "4pam",
        })
    }
}

/// Equiprobable real constellation with mean symbol energy `power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub kind: Modulation,
    pub power: f64,
    pub points: Vec<f64>,
}

impl Constellation {
    pub fn new(kind: Modulation, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(invalid(format!("power must be positive, got {power}")));
        }
        let points = match kind {
            Modulation::Bpsk => {
                let r = power.sqrt();
                vec![r, -r]
            }
            Modulation::Pam4 => {
                let r = (power / 5.0).sqrt();
                vec![3.0 * r, r, -r, -3.0 * r]
            }
        };
        Ok(Self { kind, power, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|x| x * x).sum::<f64>() / self.points.len() as f64
    }
}

/// Probability vector over a finite input alphabet `0..pmf.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDesign {
    pmf: Vec<f64>,
    band_fraction: Option<f64>,
}

impl InputDesign {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(invalid("input pmf is empty"));
        }
        if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("input pmf entries must be finite and nonnegative"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("input pmf sums to {total}, not 1")));
        }
        Ok(Self { pmf, band_fraction: None })
    }

    /// Uniform symbols within each band; band 1 used a fraction `t1` of the time.
    pub fn two_band(symbols_per_band: usize, t1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t1) {
            return Err(invalid(format!("band-1 fraction t1 must lie in [0, 1], got {t1}")));
        }
        if symbols_per_band == 0 {
            return Err(invalid("constellation is empty"));
        }
        let m = symbols_per_band as f64;
        let mut pmf = vec![t1 / m; symbols_per_band];
        pmf.extend(std::iter::repeat_n((1.0 - t1) / m, symbols_per_band));
        Ok(Self { pmf, band_fraction: Some(t1) })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    /// Band-1 fraction, for designs built with [`InputDesign::two_band`].
    pub fn t1(&self) -> Option<f64> {
        self.band_fraction
    }

    pub fn t2(&self) -> Option<f64> {
        self.band_fraction.map(|t| 1.0 - t)
    }

    /// Labels with positive probability, with their weights.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().copied().enumerate().filter(|(_, p)| *p > 0.0)
    }
}

/// Per-symbol conditional density `d(y | x, s)` with optional analytic
/// derivative hooks. Hooks returning `None` fall back to numerics.
pub trait ChannelModel: Send + Sync {
    fn input_count(&self) -> usize;

    /// Output branch the input lands on.
    fn branch(&self, _x: usize) -> usize {
        0
    }

    fn log_density(&self, x: usize, y: f64, s: f64) -> f64;

    fn density(&self, x: usize, y: f64, s: f64) -> f64 {
        self.log_density(x, y, s).exp()
    }

    /// Interval carrying all but a negligible fraction of `d(. | x, s)`.
    fn output_interval(&self, x: usize, s: f64) -> (f64, f64);

    fn sample(&self, x: usize, s: f64, rng: &mut dyn RngCore) -> f64;

    /// `(mean, variance)` when `d(. | x, s)` is Gaussian.
    fn gaussian_component(&self, _x: usize, _s: f64) -> Option<(f64, f64)> {
        None
    }

    /// `d/ds log d(y | x, s)`.
    fn state_score(&self, _x: usize, _y: f64, _s: f64) -> Option<f64> {
        None
    }

    /// `d²/ds² log d(y | x, s)`.
    fn state_curvature(&self, _x: usize, _y: f64, _s: f64) -> Option<f64> {
        None
    }

    /// Closed-form per-symbol Fisher information `J_x(s)`.
    fn fisher(&self, _x: usize, _s: f64) -> Option<f64> {
        None
    }

    /// Closed-form `(J_x, dJ_x/ds, d²J_x/ds²)`.
    fn fisher_derivatives(&self, _x: usize, _s: f64) -> Option<[f64; 3]> {
        None
    }
}

fn gaussian_log_pdf(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var)
}

/// Number of standard deviations kept on each side for output quadrature.
pub const TRUNCATION_SDS: f64 = 10.0;

fn check_points(points: &[f64], sigma2: f64) -> Result<()> {
    if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
        return Err(invalid("input points must be finite and nonempty"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(())
}

/// `y ~ N(x, sigma2)`, independent of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeanShift {
    pub points: Vec<f64>,
    pub sigma2: f64,
}

impl GaussianMeanShift {
    pub fn new(points: Vec<f64>, sigma2: f64) -> Result<Self> {
        check_points(&points, sigma2)?;
        Ok(Self { points, sigma2 })
    }
}

impl ChannelModel for GaussianMeanShift {
    fn input_count(&self) -> usize {
        self.points.len()
    }

    fn log_density(&self, x: usize, y: f64, _s: f64) -> f64 {
        gaussian_log_pdf(y, self.points[x], self.sigma2)
    }

    fn output_interval(&self, x: usize, _s: f64) -> (f64, f64) {
        let sd = self.sigma2.sqrt();
        (self.points[x] - TRUNCATION_SDS * sd, self.points[x] + TRUNCATION_SDS * sd)
    }

    fn sample(&self, x: usize, _s: f64, rng: &mut dyn RngCore) -> f64 {
        Normal::new(self.points[x], self.sigma2.sqrt()).expect("validated variance").sample(rng)
    }

    fn gaussian_component(&self, x: usize, _s: f64) -> Option<(f64, f64)> {
        Some((self.points[x], self.sigma2))
    }

    fn state_score(&self, _x: usize, _y: f64, _s: f64) -> Option<f64> {
        Some(0.0)
    }

    fn state_curvature(&self, _x: usize, _y: f64, _s: f64) -> Option<f64> {
        Some(0.0)
    }

    fn fisher(&self, _x: usize, _s: f64) -> Option<f64> {
        Some(0.0)
    }

    fn fisher_derivatives(&self, _x: usize, _s: f64) -> Option<[f64; 3]> {
        Some([0.0; 3])
    }
}

/// `y ~ N(x, s + sigma2)`: the state adds Gaussian interference power.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStateVariance {
    pub points: Vec<f64>,
    pub sigma2: f64,
}

impl GaussianStateVariance {
    pub fn new(points: Vec<f64>, sigma2: f64) -> Result<Self> {
        check_points(&points, sigma2)?;
        Ok(Self { points, sigma2 })
    }

    fn var(&self, s: f64) -> f64 {
        s + self.sigma2
    }
}

impl ChannelModel for GaussianStateVariance {
    fn input_count(&self) -> usize {
        self.points.len()
    }

    fn log_density(&self, x: usize, y: f64, s: f64) -> f64 {
        let v = self.var(s);
        if v > 0.0 {
            gaussian_log_pdf(y, self.points[x], v)
        } else {
            f64::NAN
        }
    }

    fn output_interval(&self, x: usize, s: f64) -> (f64, f64) {
        let sd = self.var(s).max(0.0).sqrt();
        (self.points[x] - TRUNCATION_SDS * sd, self.points[x] + TRUNCATION_SDS * sd)
    }

    fn sample(&self, x: usize, s: f64, rng: &mut dyn RngCore) -> f64 {
        Normal::new(self.points[x], self.var(s).sqrt()).expect("positive variance").sample(rng)
    }

    fn gaussian_component(&self, x: usize, s: f64) -> Option<(f64, f64)> {
        Some((self.points[x], self.var(s)))
    }

    fn state_score(&self, x: usize, y: f64, s: f64) -> Option<f64> {
        let v = self.var(s);
        let d = y - self.points[x];
        Some(-0.5 / v + d * d / (2.0 * v * v))
    }

    fn state_curvature(&self, x: usize, y: f64, s: f64) -> Option<f64> {
        let v = self.var(s);
        let d = y - self.points[x];
        Some(0.5 / (v * v) - d * d / (v * v * v))
    }

    fn fisher(&self, _x: usize, s: f64) -> Option<f64> {
        let v = self.var(s);
        Some(0.5 / (v * v))
    }

    fn fisher_derivatives(&self, _x: usize, s: f64) -> Option<[f64; 3]> {
        let v = self.var(s);
        let v2 = v * v;
        Some([0.5 / v2, -1.0 / (v2 * v), 3.0 / (v2 * v2)])
    }
}

/// Two frequency bands: band 1 is `N(x, sigma2)`, band 2 adds interference of
/// variance `s`. Labels `0..m` are band-1 symbols, `m..2m` band-2 symbols.
#[derive(Debug, Clone)]
pub struct TwoBandModel {
    sigma2: f64,
    constellation: Constellation,
    prior: StatePrior,
    band1: GaussianMeanShift,
    band2: GaussianStateVariance,
}

impl TwoBandModel {
    pub fn new(sigma2: f64, constellation: Constellation, prior: StatePrior) -> Result<Self> {
        match &prior {
            StatePrior::Beta { a, b, lo, hi } => {
                if (*lo, *hi) != (0.0, 1.0) {
                    return Err(invalid("two-band prior must live on [0, 1]"));
                }
                if a != b || *a <= 2.0 {
                    return Err(invalid(format!("two-band prior needs a = b > 2, got a={a}, b={b}")));
                }
            }
            StatePrior::Custom(_) => return Err(invalid("two-band model takes a beta prior")),
        }
        let band1 = GaussianMeanShift::new(constellation.points.clone(), sigma2)?;
        let band2 = GaussianStateVariance::new(constellation.points.clone(), sigma2)?;
        Ok(Self { sigma2, constellation, prior, band1, band2 })
    }

    /// Beta(a, a) prior with the given constellation.
    pub fn symmetric(a: f64, power: f64, sigma2: f64, modulation: Modulation) -> Result<Self> {
        Self::new(sigma2, Constellation::new(modulation, power)?, StatePrior::beta(a, a)?)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn prior(&self) -> &StatePrior {
        &self.prior
    }

    /// Shared shape parameter of the symmetric beta prior.
    pub fn shape(&self) -> f64 {
        match self.prior {
            StatePrior::Beta { a, .. } => a,
            StatePrior::Custom(_) => unreachable!("checked in constructor"),
        }
    }

    pub fn band1(&self) -> &GaussianMeanShift {
        &self.band1
    }

    pub fn band2(&self) -> &GaussianStateVariance {
        &self.band2
    }

    pub fn symbols_per_band(&self) -> usize {
        self.constellation.len()
    }

    /// Band (1 or 2) and constellation index of an input label.
    pub fn split_label(&self, x: usize) -> (u8, usize) {
        let m = self.symbols_per_band();
        if x < m {
            (1, x)
        } else {
            (2, x - m)
        }
    }

    pub fn is_band2(&self, x: usize) -> bool {
        x >= self.symbols_per_band()
    }

    /// Label of constellation point `k` on `band`.
    pub fn label(&self, band: u8, k: usize) -> usize {
        match band {
            1 => k,
            _ => self.symbols_per_band() + k,
        }
    }

    pub fn design(&self, t1: f64) -> Result<InputDesign> {
        InputDesign::two_band(self.symbols_per_band(), t1)
    }

    /// Constellation amplitude of a label.
    pub fn amplitude(&self, x: usize) -> f64 {
        self.constellation.points[self.split_label(x).1]
    }
}

macro_rules! dispatch {
    ($self:ident, $x:ident, |$ch:ident, $k:ident| $body:expr) => {
        match $self.split_label($x) {
            (1, $k) => {
                let $ch = &$self.band1;
                $body
            }
            (_, $k) => {
                let $ch = &$self.band2;
                $body
            }
        }
    };
}

impl ChannelModel for TwoBandModel {
    fn input_count(&self) -> usize {
        2 * self.symbols_per_band()
    }

    fn branch(&self, x: usize) -> usize {
        usize::from(self.is_band2(x))
    }

    fn log_density(&self, x: usize, y: f64, s: f64) -> f64 {
        dispatch!(self, x, |ch, k| ch.log_density(k, y, s))
    }

    fn output_interval(&self, x: usize, s: f64) -> (f64, f64) {
        dispatch!(self, x, |ch, k| ch.output_interval(k, s))
    }

    fn sample(&self, x: usize, s: f64, rng: &mut dyn RngCore) -> f64 {
        dispatch!(self, x, |ch, k| ch.sample(k, s, rng))
    }

    fn gaussian_component(&self, x: usize, s: f64) -> Option<(f64, f64)> {
        dispatch!(self, x, |ch, k| ch.gaussian_component(k, s))
    }

    fn state_score(&self, x: usize, y: f64, s: f64) -> Option<f64> {
        dispatch!(self, x, |ch, k| ch.state_score(k, y, s))
    }

    fn state_curvature(&self, x: usize, y: f64, s: f64) -> Option<f64> {
        dispatch!(self, x, |ch, k| ch.state_curvature(k, y, s))
    }

    fn fisher(&self, x: usize, s: f64) -> Option<f64> {
        dispatch!(self, x, |ch, k| ch.fisher(k, s))
    }

    fn fisher_derivatives(&self, x: usize, s: f64) -> Option<[f64; 3]> {
        dispatch!(self, x, |ch, k| ch.fisher_derivatives(k, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn beta_density_values() {
        assert_relative_eq!(beta_density(0.5, 3.0, 3.0).unwrap(), 1.875, max_relative = 1e-13);
        assert_relative_eq!(beta_density(0.5, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(
            beta_density(0.25, 3.0, 3.0).unwrap(),
            30.0 * 0.0625 * 0.5625,
            max_relative = 1e-13
        );
        assert_eq!(beta_density(1.2, 3.0, 3.0), Err(Error::StateOutsideSupport(1.2)));
        assert_eq!(beta_density(0.0, 3.0, 3.0), Err(Error::StateOutsideSupport(0.0)));
    }

    #[test]
    fn beta_score_values() {
        let p = StatePrior::beta(3.0, 3.0).unwrap();
        assert_eq!(p.score(0.5).unwrap(), 0.0);
        assert_relative_eq!(p.score(0.25).unwrap(), 2.0 / 0.25 - 2.0 / 0.75, max_relative = 1e-14);
        let flat = StatePrior::beta(1.0, 1.0).unwrap();
        assert_eq!(flat.score(0.7).unwrap(), 0.0);
        assert_eq!(p.score(0.0), Err(Error::SingularScore(0.0)));
        assert_eq!(p.score(1.0 - 1e-10), Err(Error::SingularScore(1.0 - 1e-10)));
    }

    #[test]
    fn score_matches_finite_difference_of_log_density() {
        let p = StatePrior::beta(3.5, 2.5).unwrap();
        for k in 1..=20 {
            let s = k as f64 / 21.0;
            let h = 1e-5;
            let fd = (p.log_density(s + h).unwrap() - p.log_density(s - h).unwrap()) / (2.0 * h);
            let an = p.score(s).unwrap();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "s={s}: {fd} vs {an}");
        }
    }

    #[test]
    fn score_derivatives_match_finite_differences() {
        let p = StatePrior::beta_on(3.0, 4.0, -1.0, 2.0).unwrap();
        for s in [-0.5, 0.2, 0.9, 1.7] {
            let h = 1e-5;
            let [d0, d1, d2] = p.score_derivatives(s).unwrap();
            let fd1 = (p.score(s + h).unwrap() - p.score(s - h).unwrap()) / (2.0 * h);
            let fd2 = (p.score_derivatives(s + h).unwrap()[1] - p.score_derivatives(s - h).unwrap()[1]) / (2.0 * h);
            assert!((fd1 - d1).abs() < 1e-6 * d1.abs().max(1.0));
            assert!((fd2 - d2).abs() < 1e-6 * d2.abs().max(1.0));
            assert!(d0.is_finite());
        }
    }

    #[test]
    fn constellation_energy_is_exact() {
        for power in [0.5, 2.0, 7.3] {
            let bpsk = Constellation::new(Modulation::Bpsk, power).unwrap();
            assert_eq!(bpsk.points, vec![power.sqrt(), -power.sqrt()]);
            assert_relative_eq!(bpsk.mean_energy(), power, max_relative = 1e-15);
            let pam = Constellation::new(Modulation::Pam4, power).unwrap();
            assert_relative_eq!(pam.mean_energy(), power, max_relative = 1e-15);
            assert_relative_eq!(pam.points[0], 3.0 * (power / 5.0).sqrt());
        }
    }

    #[test]
    fn design_validation() {
        assert!(InputDesign::new(vec![0.5, 0.5]).is_ok());
        assert!(InputDesign::new(vec![0.5, 0.6]).is_err());
        assert!(InputDesign::new(vec![-0.1, 1.1]).is_err());
        let d = InputDesign::two_band(2, 0.6).unwrap();
        assert_eq!(d.pmf(), &[0.3, 0.3, 0.2, 0.2]);
        assert_relative_eq!(d.t2().unwrap(), 0.4);
        assert!(InputDesign::two_band(2, 1.5).is_err());
    }

    #[test]
    fn sampling_moments() {
        let p = StatePrior::beta(3.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let s = p.sample(&mut rng);
            assert!(s > 0.0 && s < 1.0);
            m1 += s;
            m2 += s * s;
        }
        let mean = m1 / n as f64;
        let var = m2 / n as f64 - mean * mean;
        let true_var = 1.0 / 28.0;
        assert!((mean - 0.5).abs() < 3.0 * (true_var / n as f64).sqrt(), "mean {mean}");
        // Var of (S - 1/2)^2 for beta(3,3): E[(S-1/2)^4] - var^2 with fourth central moment 1/336.
        let se_var = ((1.0 / 336.0 - true_var * true_var) / n as f64).sqrt();
        assert!((var - true_var).abs() < 3.0 * se_var, "var {var}");
        assert_eq!(sample_state(&p, 11), sample_state(&p, 11));
    }

    #[test]
    fn custom_prior_matches_beta() {
        let custom = StatePrior::Custom(CustomPrior::new(|s| s * s * (1.0 - s) * (1.0 - s), 0.0, 1.0).unwrap());
        let beta = StatePrior::beta(3.0, 3.0).unwrap();
        for s in [0.1, 0.37, 0.5, 0.83] {
            assert_relative_eq!(custom.density(s).unwrap(), beta.density(s).unwrap(), max_relative = 1e-10);
            let [c0, c1, _] = custom.score_derivatives(s).unwrap();
            let [b0, b1, _] = beta.score_derivatives(s).unwrap();
            assert!((c0 - b0).abs() < 1e-6 * b0.abs().max(1.0));
            assert!((c1 - b1).abs() < 1e-4 * b1.abs().max(1.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mean = (0..n).map(|_| custom.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (1.0 / 28.0 / n as f64).sqrt());
    }

    #[test]
    fn two_band_structure() {
        let m = TwoBandModel::symmetric(3.0, 2.0, 0.5, Modulation::Bpsk).unwrap();
        assert_eq!(m.input_count(), 4);
        assert_eq!(m.branch(1), 0);
        assert_eq!(m.branch(2), 1);
        for x in 0..2 {
            assert_eq!(m.log_density(x, 0.3, 0.1), m.log_density(x, 0.3, 0.9));
        }
        assert!(TwoBandModel::symmetric(2.0, 2.0, 0.5, Modulation::Bpsk).is_err());
        assert!(TwoBandModel::new(0.5, Constellation::new(Modulation::Bpsk, 2.0).unwrap(), StatePrior::beta(3.0, 4.0).unwrap()).is_err());
    }

    #[test]
    fn band2_curvature_matches_numeric() {
        let ch = GaussianStateVariance::new(vec![1.0], 0.5).unwrap();
        for (y, s) in [(0.2, 0.1), (1.7, 0.5), (-2.0, 0.9)] {
            let h = 1e-4;
            let l = |s: f64| ch.log_density(0, y, s);
            let fd = (l(s + h) - 2.0 * l(s) + l(s - h)) / (h * h);
            let an = ch.state_curvature(0, y, s).unwrap();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }

    proptest! {
        #[test]
        fn densities_integrate_to_one(a in 0.8f64..8.0, b in 0.8f64..8.0, mean in -3.0f64..3.0, s2 in 0.05f64..3.0, s in 0.0f64..1.0) {
            let p = StatePrior::beta(a, b).unwrap();
            prop_assert!((p.normalization().unwrap() - 1.0).abs() < 1e-9);
            let ch = GaussianStateVariance::new(vec![mean], s2).unwrap();
            let (lo, hi) = ch.output_interval(0, s);
            let mass = integrate(|y| ch.density(0, y, s), lo, hi, Tolerance::relative(1e-12), "d").unwrap().value;
            prop_assert!((mass - 1.0).abs() < 1e-8);
        }
    }
}
