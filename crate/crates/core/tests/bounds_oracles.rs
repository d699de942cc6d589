use isac_core::bounds::{alpha_atbcrb, alpha_bcrb, atbcrb_finite, bayesian_fisher, bcrb_finite, bound_report};
use isac_core::fisher::{codeword_fisher, numeric_fisher, per_symbol_fisher, prior_fisher_term, score_fisher};
use isac_core::model::{ChannelModel, InputDesign, Modulation, StatePrior, TwoBandModel};
use isac_core::quad::{integrate, Tolerance};
use isac_core::twoband::closed_form_alpha;
use isac_core::FisherProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference() -> TwoBandModel {
    TwoBandModel::symmetric(3.0, 2.0, 0.5, Modulation::Bpsk).unwrap()
}

fn beta33(s: f64) -> f64 {
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// Composite midpoint rule on (0, 1).
fn midpoint(f: impl Fn(f64) -> f64, nodes: usize) -> f64 {
    let h = 1.0 / nodes as f64;
    (0..nodes).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h
}

#[test]
fn inverse_square_moment_oracle() {
    // E[(S + 0.5)^-2] under beta(3,3), two ways.
    let dense = midpoint(|s| beta33(s) / ((s + 0.5) * (s + 0.5)), 200_000);
    assert!((dense - 1.1248940198701278).abs() < 1e-10, "{dense}");
    let m = reference();
    let p = FisherProfile::new(&m, m.prior(), m.design(0.0).unwrap()).unwrap();
    let jb = bayesian_fisher(&p, 1000).unwrap();
    assert!((jb - (500.0 * dense + 40.0)).abs() < 1e-6, "{jb}");
    assert!((bcrb_finite(&p, 1000).unwrap() - 1.0 / (562.4470099 + 40.0)).abs() < 1e-9);
}

#[test]
fn band2_fisher_matches_closed_form_everywhere() {
    let m = reference();
    for k in 1..=9 {
        let s = k as f64 / 10.0;
        let exact = 0.5 / ((s + 0.5) * (s + 0.5));
        for x in [m.label(2, 0), m.label(2, 1)] {
            let numeric = numeric_fisher(m.band2(), m.split_label(x).1, s).unwrap();
            assert!(((numeric - exact) / exact).abs() < 1e-6, "s={s}: {numeric} vs {exact}");
            let score = score_fisher(m.band2(), m.split_label(x).1, s).unwrap();
            assert!(((score - exact) / exact).abs() < 1e-6);
        }
        assert_eq!(per_symbol_fisher(&m, m.label(1, 0), s).unwrap(), 0.0);
    }
}

#[test]
fn codeword_fisher_is_additive_and_permutation_free() {
    let m = reference();
    let mut cw = vec![0, 1, 0, 1, 0, 1, m.label(2, 0), m.label(2, 1), m.label(2, 0), m.label(2, 1)];
    assert!((codeword_fisher(&m, &cw, 0.5).unwrap() - 2.0).abs() < 1e-15);
    let before = codeword_fisher(&m, &cw, 0.37).unwrap();
    cw.reverse();
    cw.swap(2, 7);
    assert_eq!(codeword_fisher(&m, &cw, 0.37).unwrap(), before);
    assert_eq!(codeword_fisher(&m, &[0, 1, 1, 0], 0.37).unwrap(), 0.0);
}

#[test]
fn expected_prior_term_is_forty() {
    let prior = StatePrior::beta(3.0, 3.0).unwrap();
    let est = integrate(
        |s| prior.density(s).unwrap() * prior_fisher_term(&prior, s).unwrap(),
        0.0,
        1.0,
        Tolerance::relative(1e-12),
        "L_P",
    )
    .unwrap();
    assert!((est.value - 40.0).abs() < 1e-8);
    assert!((midpoint(|s| 120.0 * (1.0 - 2.0 * s).powi(2), 1000) - 40.0).abs() < 1e-4);
}

/// ATBCRB for the two-band example from hand-derived derivatives and a dense
/// midpoint rule.
fn atbcrb_oracle(n: f64, t2: f64, a: f64, sigma2: f64, nodes: usize) -> f64 {
    let c = a - 1.0;
    let norm = {
        let g = |x: f64| statrs::function::gamma::ln_gamma(x);
        (g(2.0 * a) - 2.0 * g(a)).exp()
    };
    let (mut e0, mut e1, mut e2) = (0.0, 0.0, 0.0);
    let h = 1.0 / nodes as f64;
    for k in 0..nodes {
        let s = (k as f64 + 0.5) * h;
        let p = norm * (s * (1.0 - s)).powf(a - 1.0);
        let v = s + sigma2;
        let (d0, d1, d2) = (t2 * n / (2.0 * v * v), -t2 * n / v.powi(3), 3.0 * t2 * n / v.powi(4));
        let u = 1.0 / s - 1.0 / (1.0 - s);
        let u1 = -1.0 / (s * s) - 1.0 / ((1.0 - s) * (1.0 - s));
        let u2 = 2.0 / s.powi(3) - 2.0 / (1.0 - s).powi(3);
        let (l0, l1, l2) = (c * c * u * u, 2.0 * c * c * u * u1, 2.0 * c * c * (u1 * u1 + u * u2));
        let (j, j1, j2) = (d0 + l0, d1 + l1, d2 + l2);
        e0 += p / j;
        e1 += p * (j1 / (j * j)).powi(2);
        e2 += p * (6.0 * j1 * j1 / j.powi(4) - 2.0 * j2 / j.powi(3));
    }
    let (e0, e1, e2) = (e0 * h, e1 * h, e2 * h);
    e0 * e0 / (e0 + e1 + e2)
}

#[test]
fn atbcrb_matches_dense_grid_oracle() {
    let m = reference();
    let p = FisherProfile::new(&m, m.prior(), m.design(0.0).unwrap()).unwrap();
    let oracle = atbcrb_oracle(1e4, 1.0, 3.0, 0.5, 400_000);
    assert!(((oracle - 2.0490782682951556e-4) / oracle).abs() < 1e-8, "{oracle}");
    let got = atbcrb_finite(&p, 10_000).unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs {oracle}");
    assert!(got > 0.9 * 2.0714e-4 && got < 2.0714e-4);

    let q = FisherProfile::new(&m, m.prior(), m.design(0.3).unwrap()).unwrap();
    let oracle = atbcrb_oracle(500.0, 0.7, 3.0, 0.5, 400_000);
    let got = atbcrb_finite(&q, 500).unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs {oracle}");
}

#[test]
fn finite_bounds_approach_their_constants() {
    let m = reference();
    let p = FisherProfile::new(&m, m.prior(), m.design(0.0).unwrap()).unwrap();
    let frozen = [
        (100, 1.7540593589761697, 1.0390182417081535),
        (1_000, 1.962559551755868, 1.6598970258110952),
        (10_000, 2.0490782682951556, 1.7653901997198955),
        (100_000, 2.068342492169588, 1.7766817311783725),
    ];
    let mut last = (0.0, 0.0, f64::INFINITY, f64::INFINITY);
    for (n, at, b) in frozen {
        let r = bound_report(&p, n).unwrap();
        let (nat, nb) = (n as f64 * r.atbcrb_finite, n as f64 * r.bcrb_finite);
        assert!((nat - at).abs() < 1e-7 * at, "n={n}: {nat}");
        assert!((nb - b).abs() < 1e-7 * b, "n={n}: {nb}");
        assert!(nat > last.0 && nb > last.1);
        assert!(r.atbcrb_finite < last.2 && r.bcrb_finite < last.3);
        last = (nat, nb, r.atbcrb_finite, r.bcrb_finite);
    }
    assert!((last.0 - 2.0714285714285714).abs() / 2.0714285714285714 < 0.02);
    assert!((last.1 - 1.777945268329283).abs() / 1.777945268329283 < 0.02);
}

#[test]
fn closed_form_alpha_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let t2: f64 = rng.random_range(0.05..=1.0);
        let a: f64 = rng.random_range(2.05..8.0);
        let sigma2: f64 = rng.random_range(0.05..2.0);
        let m = TwoBandModel::symmetric(a, 2.0, sigma2, Modulation::Bpsk).unwrap();
        let p = FisherProfile::new(&m, m.prior(), m.design(1.0 - t2).unwrap()).unwrap();
        let numeric = alpha_atbcrb(&p).unwrap();
        let exact = closed_form_alpha(t2, a, sigma2).unwrap();
        assert!((numeric - exact).abs() < 1e-8, "t2={t2} a={a} s2={sigma2}: {numeric} vs {exact}");
    }
}

#[test]
fn jensen_ordering_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let a: f64 = 2.0 + rng.random_range(1e-3..=4.0);
        let sigma2: f64 = rng.random_range(0.1..=2.0);
        let t2: f64 = rng.random_range(1e-3..=1.0);
        let kind = if rng.random_bool(0.5) { Modulation::Bpsk } else { Modulation::Pam4 };
        let m = TwoBandModel::symmetric(a, 2.0, sigma2, kind).unwrap();
        let p = FisherProfile::new(&m, m.prior(), m.design(1.0 - t2).unwrap()).unwrap();
        let (at, b) = (alpha_atbcrb(&p).unwrap(), alpha_bcrb(&p).unwrap());
        assert!(b <= at, "a={a} s2={sigma2} t2={t2}: {b} > {at}");
    }
}

/// Mean-shift channel `N(s, c)`: Fisher information `1/c` at every state.
struct MeanShift(f64);

impl ChannelModel for MeanShift {
    fn input_count(&self) -> usize {
        1
    }
    fn log_density(&self, _x: usize, y: f64, s: f64) -> f64 {
        -0.5 * (2.0 * std::f64::consts::PI * self.0).ln() - (y - s) * (y - s) / (2.0 * self.0)
    }
    fn output_interval(&self, _x: usize, s: f64) -> (f64, f64) {
        let w = 10.0 * self.0.sqrt();
        (s - w, s + w)
    }
    fn sample(&self, _x: usize, s: f64, rng: &mut dyn rand::RngCore) -> f64 {
        use rand_distr::Distribution;
        rand_distr::Normal::new(s, self.0.sqrt()).unwrap().sample(rng)
    }
}

#[test]
fn constant_fisher_has_no_jensen_gap() {
    for (c, a) in [(1.0, 3.0), (0.25, 4.5), (2.0, 2.5)] {
        let prior = StatePrior::beta(a, a).unwrap();
        let ch = MeanShift(c);
        let p = FisherProfile::new(&ch, &prior, InputDesign::new(vec![1.0]).unwrap()).unwrap();
        let (at, b) = (alpha_atbcrb(&p).unwrap(), alpha_bcrb(&p).unwrap());
        assert!((at - b).abs() < 1e-9, "{at} vs {b}");
        assert!((at - c).abs() < 1e-8);
    }
}
