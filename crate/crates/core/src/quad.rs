//! Globally adaptive Gauss-Kronrod (G10/K21) quadrature.
//!
//! Every node of the 21-point rule is strictly inside its panel, so integrands
//! that are singular at an endpoint (score terms of a beta prior, for one) are
//! never evaluated there. The vector form integrates several integrands on one
//! shared set of panels; a panel is bisected while any component misses its
//! own tolerance.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452210,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Number of integrand evaluations per panel.
pub const NODES_PER_PANEL: usize = 21;

/// Accuracy request for one integral: converged when
/// `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Default relative tolerance for state expectations.
pub const STATE_REL_TOL: f64 = 1e-9;

/// Upper bound on the number of panels before giving up.
pub const MAX_PANELS: usize = 4000;

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: [f64; N],
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn kronrod_panel<const N: usize, F>(f: &mut F, lo: f64, hi: f64, label: &'static str) -> Result<Panel<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<[f64; N]> {
        let v = f(x);
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand(label))
        }
    };

    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    let fc = eval(center)?;
    let mut res_k = [0.0; N];
    let mut res_g = [0.0; N];
    let mut res_abs = [0.0; N];
    for k in 0..N {
        res_k[k] = WGK[10] * fc[k];
        res_abs[k] = (WGK[10] * fc[k]).abs();
    }
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        for k in 0..N {
            let sum = f1[k] + f2[k];
            res_k[k] += WGK[j] * sum;
            res_abs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                res_g[k] += WG[j / 2] * sum;
            }
        }
        fv1[j] = f1;
        fv2[j] = f2;
    }

    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        let mean = 0.5 * res_k[k];
        let mut res_asc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv1[j][k] - mean).abs() + (fv2[j][k] - mean).abs());
        }
        let err = (res_k[k] - res_g[k]) * half;
        value[k] = res_k[k] * half;
        error[k] = rescale_error(err, res_abs[k] * half.abs(), res_asc * half.abs());
    }
    Ok(Panel { lo, hi, value, error })
}

/// Integrate `N` functions over `[lo, hi]` on one shared adaptive partition.
///
/// `label` names the integrand in errors.
pub fn integrate_many<const N: usize, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: [Tolerance; N],
    label: &'static str,
) -> Result<[Estimate; N]>
where
    F: FnMut(f64) -> [f64; N],
{
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "integration interval [{lo}, {hi}] is empty or unbounded"
        )));
    }
    let mut panels = vec![kronrod_panel(&mut f, lo, hi, label)?];

    loop {
        let mut total = [0.0; N];
        let mut total_err = [0.0; N];
        for p in &panels {
            for k in 0..N {
                total[k] += p.value[k];
                total_err[k] += p.error[k];
            }
        }
        let targets: [f64; N] = std::array::from_fn(|k| tol[k].target(total[k]));
        let converged = (0..N).all(|k| total_err[k] <= targets[k]);
        if converged {
            return Ok(std::array::from_fn(|k| Estimate {
                value: total[k],
                error: total_err[k],
            }));
        }

        // Worst panel measured against each component's target.
        let badness = |p: &Panel<N>| -> f64 {
            (0..N)
                .map(|k| {
                    if targets[k] > 0.0 {
                        p.error[k] / targets[k]
                    } else {
                        p.error[k] * f64::MAX.sqrt()
                    }
                })
                .fold(0.0, f64::max)
        };
        let (worst, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, badness(p)))
            .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });

        let Panel { lo: a, hi: b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        let too_narrow = (b - a) <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE);
        if panels.len() >= MAX_PANELS || too_narrow {
            let (achieved, requested) = (0..N)
                .map(|k| (total_err[k], targets[k]))
                .max_by(|x, y| {
                    let rx = x.0 / x.1.max(f64::MIN_POSITIVE);
                    let ry = y.0 / y.1.max(f64::MIN_POSITIVE);
                    rx.total_cmp(&ry)
                })
                .unwrap_or((f64::NAN, f64::NAN));
            return Err(Error::Quadrature { achieved, requested });
        }
        let left = kronrod_panel(&mut f, a, mid, label)?;
        let right = kronrod_panel(&mut f, mid, b, label)?;
        panels[worst] = left;
        panels.push(right);
    }
}

/// Integrate a scalar function over `[lo, hi]`.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, tol: Tolerance, label: &'static str) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
{
    let [e] = integrate_many(|x| [f(x)], lo, hi, [tol], label)?;
    Ok(e)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `tol`.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_panel_when_gauss_rule_is_exact() {
        let mut calls = 0;
        let est = integrate(
            |x| {
                calls += 1;
                x.powi(18) + x.powi(19)
            },
            -1.0,
            1.0,
            Tolerance::relative(1e-12),
            "poly",
        )
        .unwrap();
        assert!((est.value - 2.0 / 19.0).abs() < 1e-15);
        assert_eq!(calls, NODES_PER_PANEL);
    }

    #[test]
    fn kronrod_rule_exact_to_degree_31() {
        let mut sum = [0.0; 2];
        for (x, w) in XGK.iter().zip(WGK) {
            let pts: &[f64] = if *x == 0.0 { &[0.0] } else { &[*x, -*x] };
            for p in pts {
                sum[0] += w * p.powi(30);
                sum[1] += w * p.powi(31);
            }
        }
        assert!((sum[0] - 2.0 / 31.0).abs() < 1e-15);
        assert!(sum[1].abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity_never_evaluated() {
        // 1/sqrt(x) on (0, 1] integrates to 2
        let est = integrate(
            |x| {
                assert!(x > 0.0 && x < 1.0);
                x.powf(-0.5)
            },
            0.0,
            1.0,
            Tolerance::new(1e-10, 1e-10),
            "inv_sqrt",
        )
        .unwrap();
        assert!((est.value - 2.0).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn shared_grid_components() {
        let [a, b] = integrate_many(
            |x| [x.sin(), x.exp()],
            0.0,
            std::f64::consts::PI,
            [Tolerance::relative(1e-12); 2],
            "pair",
        )
        .unwrap();
        assert!((a.value - 2.0).abs() < 1e-12);
        assert!((b.value - (std::f64::consts::PI.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn reports_non_finite() {
        let err = integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0, Tolerance::relative(1e-9), "pole");
        // 0.5 is the panel center
        assert_eq!(err.unwrap_err(), Error::NonFiniteIntegrand("pole"));
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x| (1.0 / x).sin(), 0.0, 1.0, Tolerance::relative(1e-14), "osc")
            .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }), "{err:?}");
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3f64).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(fx.abs() < 1e-18);
    }
}
