//! Rate versus MSE-decay boundary traced by sweeping the input design.
//!
//! Each design gives one achievable pair `(R, α_ATBCRB)` and one outer-bound
//! pair `(R, α_BCRB)`. The curve is emitted raw; no convex hull is taken.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{alpha_atbcrb, alpha_bcrb};
use crate::error::{invalid, Error, Result};
use crate::fisher::FisherProfile;
use crate::model::{ChannelModel, InputDesign, Modulation, StatePrior, TwoBandModel};
use crate::rate::{worst_case_rate, BandCapacities, WORST_CASE_GRID};

/// Grid over the band-1 fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.t_min && self.t_min < self.t_max && self.t_max < 1.0) {
            return Err(invalid(format!(
                "sweep needs 0 < t_min < t_max < 1, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.steps < 2 {
            return Err(invalid(format!("sweep needs at least 2 steps, got {}", self.steps)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|k| {
                if k == last {
                    self.t_max
                } else {
                    self.t_min + (self.t_max - self.t_min) * k as f64 / last as f64
                }
            })
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.t_max - self.t_min) / (self.steps - 1) as f64
    }
}

/// One design on the curve. `None` alphas mark the no-sensing limit where
/// the decay constant diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPoint {
    pub t1: f64,
    pub t2: f64,
    pub rate_bits: f64,
    pub alpha_atbcrb: Option<f64>,
    pub alpha_bcrb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMeta {
    pub a: f64,
    pub power: f64,
    pub sigma2: f64,
    pub modulation: Modulation,
    pub sweep: Sweep,
    pub c1: f64,
    pub c2_worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCurve {
    pub points: Vec<RegionPoint>,
    pub metadata: RegionMeta,
}

/// Evaluate rate and both decay constants on every grid value of `t1`.
pub fn sweep_tradeoff(model: &TwoBandModel, sweep: Sweep) -> Result<RegionCurve> {
    sweep.validate()?;
    let caps = BandCapacities::of(model)?;
    let base = FisherProfile::new(model, model.prior(), model.design(0.0)?)?;
    let points = sweep
        .values()
        .into_par_iter()
        .map(|t1| {
            let profile = base.with_design(model.design(t1)?)?;
            Ok(RegionPoint {
                t1,
                t2: 1.0 - t1,
                rate_bits: caps.breakdown(t1)?.total,
                alpha_atbcrb: Some(alpha_atbcrb(&profile)?),
                alpha_bcrb: Some(alpha_bcrb(&profile)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionCurve {
        points,
        metadata: RegionMeta {
            a: model.shape(),
            power: model.constellation().power,
            sigma2: model.sigma2(),
            modulation: model.constellation().kind,
            sweep,
            c1: caps.c1,
            c2_worst: caps.c2_worst,
        },
    })
}

/// Limit points `t1 = 0` (all sensing) and `t1 = 1` (no sensing).
pub fn endpoint_point(model: &TwoBandModel, t1: f64) -> Result<RegionPoint> {
    if t1 != 0.0 && t1 != 1.0 {
        return Err(invalid(format!("endpoint must be t1 = 0 or 1, got {t1}")));
    }
    let caps = BandCapacities::of(model)?;
    let rate_bits = caps.breakdown(t1)?.total;
    if t1 == 1.0 {
        return Ok(RegionPoint { t1, t2: 0.0, rate_bits, alpha_atbcrb: None, alpha_bcrb: None });
    }
    let profile = FisherProfile::new(model, model.prior(), model.design(t1)?)?;
    Ok(RegionPoint {
        t1,
        t2: 1.0,
        rate_bits,
        alpha_atbcrb: Some(alpha_atbcrb(&profile)?),
        alpha_bcrb: Some(alpha_bcrb(&profile)?),
    })
}

/// Communication-optimal and estimation-optimal points of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoints {
    pub comm_index: usize,
    pub est_index: usize,
    pub comm: RegionPoint,
    pub est: RegionPoint,
}

fn alpha_key(p: &RegionPoint) -> f64 {
    p.alpha_atbcrb.unwrap_or(f64::INFINITY)
}

/// Maximal-rate point and minimal-alpha point. Ties go to the smaller
/// alpha, then the smaller `t1`.
pub fn operating_points(curve: &RegionCurve) -> Result<OperatingPoints> {
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let mut comm = 0;
    let mut est = 0;
    for (i, p) in pts.iter().enumerate().skip(1) {
        let c = &pts[comm];
        let better_rate = p.rate_bits > c.rate_bits
            || (p.rate_bits == c.rate_bits
                && (alpha_key(p) < alpha_key(c) || (alpha_key(p) == alpha_key(c) && p.t1 < c.t1)));
        if better_rate {
            comm = i;
        }
        let e = &pts[est];
        let better_alpha = alpha_key(p) < alpha_key(e) || (alpha_key(p) == alpha_key(e) && p.t1 < e.t1);
        if better_alpha {
            est = i;
        }
    }
    Ok(OperatingPoints { comm_index: comm, est_index: est, comm: pts[comm], est: pts[est] })
}

/// A point of the general sweep over user-supplied input pmfs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint {
    pub index: usize,
    pub rate_bits: f64,
    pub worst_state: f64,
    pub alpha_atbcrb: f64,
    pub alpha_bcrb: f64,
}

/// Evaluate each design's compound rate over `comm` and decay constants over
/// `sensing`. No optimization over pmfs is attempted.
pub fn sweep_designs(
    comm: &dyn ChannelModel,
    sensing: &dyn ChannelModel,
    prior: &StatePrior,
    designs: &[InputDesign],
) -> Result<Vec<DesignPoint>> {
    prior.check_regularity()?;
    let support = prior.support();
    designs
        .par_iter()
        .enumerate()
        .map(|(index, design)| {
            let worst = worst_case_rate(comm, design, support, WORST_CASE_GRID)?;
            let profile = FisherProfile::new(sensing, prior, design.clone())?;
            Ok(DesignPoint {
                index,
                rate_bits: worst.rate,
                worst_state: worst.state,
                alpha_atbcrb: alpha_atbcrb(&profile)?,
                alpha_bcrb: alpha_bcrb(&profile)?,
            })
        })
        .collect()
}
