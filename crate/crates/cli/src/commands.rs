use std::fmt;

use isac_core::bounds::bound_report;
use isac_core::fisher::{numeric_fisher, per_symbol_fisher, prior_fisher_term};
use isac_core::montecarlo::convergence_study;
use isac_core::rate::BandCapacities;
use isac_core::region::{endpoint_point, operating_points, sweep_tradeoff};
use isac_core::{twoband, FisherProfile, RegionPoint};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::table::{Cell, Table};
use crate::{CliError, InModule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Per-symbol, mixture and prior Fisher terms on a state grid.
    Fisher,
    /// Finite-n BCRB and ATBCRB for every n in sim.n_list.
    Bounds,
    /// Time-sharing rate breakdown over the sweep grid.
    Rate,
    /// Rate versus decay-constant curve with its operating points.
    Region,
    /// Monte Carlo n·MSE over sim.n_list.
    Simulate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fisher => "fisher",
            Self::Bounds => "bounds",
            Self::Rate => "rate",
            Self::Region => "region",
            Self::Simulate => "simulate",
        })
    }
}

/// Data produced by one subcommand.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    /// Richer JSON document; the table's records are used when absent.
    pub json: Option<Value>,
    pub summary: String,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cmd {
        Command::Fisher => fisher(cfg),
        Command::Bounds => bounds(cfg),
        Command::Rate => rate(cfg),
        Command::Region => region(cfg),
        Command::Simulate => simulate(cfg),
    }
}

/// States at which `fisher` tabulates.
pub const FISHER_STATES: usize = 19;

fn fisher(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let sigma2 = model.sigma2();
    let t2 = 1.0 - cfg.design.t1;
    let design = model.design(cfg.design.t1).in_module("model")?;
    let profile = FisherProfile::new(&model, model.prior(), design).in_module("fisher")?;
    let mut table = Table::new(&[
        "s",
        "j_band1",
        "j_band2_numeric",
        "j_band2_analytic",
        "mixture",
        "mixture_analytic",
        "prior_term",
    ]);
    let mut worst = 0.0f64;
    for k in 1..=FISHER_STATES {
        let s = k as f64 / (FISHER_STATES + 1) as f64;
        let j1 = per_symbol_fisher(&model, model.label(1, 0), s).in_module("fisher")?;
        let numeric = numeric_fisher(model.band2(), 0, s).in_module("fisher")?;
        let analytic = twoband::mixture_fisher(1.0, s, sigma2);
        worst = worst.max(((numeric - analytic) / analytic).abs());
        table.push(vec![
            Cell::Num(s),
            Cell::Num(j1),
            Cell::Num(numeric),
            Cell::Num(analytic),
            Cell::Num(profile.mixture(s).in_module("fisher")?),
            Cell::Num(twoband::mixture_fisher(t2, s, sigma2)),
            Cell::Num(prior_fisher_term(model.prior(), s).in_module("fisher")?),
        ]);
    }
    let summary = format!(
        "fisher: {FISHER_STATES} states, t1={}, max relative numeric-analytic gap {worst:.3e}",
        cfg.design.t1
    );
    Ok(Outcome { table, json: None, summary })
}

fn bounds(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let design = model.design(cfg.design.t1).in_module("model")?;
    let profile = FisherProfile::new(&model, model.prior(), design).in_module("bounds")?;
    let mut table = Table::new(&[
        "n",
        "bcrb",
        "atbcrb",
        "n_times_bcrb",
        "n_times_atbcrb",
        "alpha_bcrb",
        "alpha_atbcrb",
    ]);
    let mut last = None;
    for &n in &cfg.sim.n_list {
        let r = bound_report(&profile, n as u64).in_module("bounds")?;
        let nf = n as f64;
        table.push(vec![
            Cell::Int(n as u64),
            Cell::Num(r.bcrb_finite),
            Cell::Num(r.atbcrb_finite),
            Cell::Num(nf * r.bcrb_finite),
            Cell::Num(nf * r.atbcrb_finite),
            Cell::Num(r.alpha_bcrb),
            Cell::Num(r.alpha_atbcrb),
        ]);
        last = Some(r);
    }
    let r = last.expect("n_list validated nonempty");
    let summary = format!(
        "bounds: t1={} alpha_atbcrb={:.6} alpha_bcrb={:.6}; at n={} n*atbcrb={:.6} n*bcrb={:.6}",
        cfg.design.t1,
        r.alpha_atbcrb,
        r.alpha_bcrb,
        r.n,
        r.n as f64 * r.atbcrb_finite,
        r.n as f64 * r.bcrb_finite
    );
    Ok(Outcome { table, json: None, summary })
}

fn rate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let caps = BandCapacities::of(&model).in_module("rate")?;
    let mut table = Table::new(&["t1", "h2", "c1", "c2_worst", "total"]);
    for t1 in cfg.sweep().values() {
        let b = caps.breakdown(t1).in_module("rate")?;
        table.push(vec![Cell::Num(b.t1), Cell::Num(b.h2), Cell::Num(b.c1), Cell::Num(b.c2_worst), Cell::Num(b.total)]);
    }
    let t_star = caps.rate_optimal_t1();
    let best = caps.breakdown(t_star).in_module("rate")?;
    let summary = format!(
        "rate: C1={:.6} C2(1)={:.6} bits; rate-optimal t1*={:.6} with R={:.6} bits",
        caps.c1, caps.c2_worst, t_star, best.total
    );
    Ok(Outcome { table, json: None, summary })
}

fn region(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let curve = sweep_tradeoff(&model, cfg.sweep()).in_module("region")?;
    let ops = operating_points(&curve).in_module("region")?;
    let mut rows: Vec<(RegionPoint, bool, bool)> = curve
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, i == ops.comm_index, i == ops.est_index))
        .collect();
    if cfg.sweep.include_endpoints {
        let lo = endpoint_point(&model, 0.0).in_module("region")?;
        let hi = endpoint_point(&model, 1.0).in_module("region")?;
        rows.insert(0, (lo, false, false));
        rows.push((hi, false, false));
    }

    let mut table = Table::new(&[
        "t1",
        "t2",
        "rate_bits",
        "alpha_atbcrb",
        "alpha_bcrb",
        "is_comm_optimal",
        "is_est_optimal",
    ]);
    for (p, comm, est) in &rows {
        table.push(vec![
            Cell::Num(p.t1),
            Cell::Num(p.t2),
            Cell::Num(p.rate_bits),
            Cell::Opt(p.alpha_atbcrb),
            Cell::Opt(p.alpha_bcrb),
            Cell::Bool(*comm),
            Cell::Bool(*est),
        ]);
    }
    let json = json!({
        "points": table.to_json(),
        "metadata": curve.metadata,
    });
    let fmt_alpha = |a: Option<f64>| a.map_or("NA".to_string(), |v| format!("{v:.6}"));
    let summary = format!(
        "region: {} points; comm-optimal t1={:.4} R={:.6} alpha={}; est-optimal t1={:.4} R={:.6} alpha={}",
        rows.len(),
        ops.comm.t1,
        ops.comm.rate_bits,
        fmt_alpha(ops.comm.alpha_atbcrb),
        ops.est.t1,
        ops.est.rate_bits,
        fmt_alpha(ops.est.alpha_atbcrb),
    );
    Ok(Outcome { table, json: Some(json), summary })
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sim = cfg.sim_config()?;
    let report = convergence_study(&sim).in_module("montecarlo")?;
    let mut table = Table::new(&[
        "n",
        "trials",
        "mse",
        "n_mse",
        "stderr",
        "alpha_atbcrb",
        "alpha_bcrb",
        "n_atbcrb_finite",
        "n_bcrb_finite",
        "estimator",
        "fast_path",
    ]);
    for r in &report.rows {
        let nf = r.n as f64;
        table.push(vec![
            Cell::Int(r.n as u64),
            Cell::Int(r.trials as u64),
            Cell::Num(r.mse),
            Cell::Num(r.n_mse),
            Cell::Num(r.stderr),
            Cell::Num(r.alpha_atbcrb),
            Cell::Num(r.alpha_bcrb),
            Cell::Num(nf * r.atbcrb_finite),
            Cell::Num(nf * r.bcrb_finite),
            Cell::Text(r.estimator.to_string()),
            Cell::Bool(r.fast_path),
        ]);
    }
    let last = report.rows.last().expect("n_list validated nonempty");
    let summary = format!(
        "simulate: {} at n={}: n*MSE={:.4} ± {:.4} (alpha_atbcrb={:.4}, alpha_bcrb={:.4})",
        last.estimator,
        last.n,
        last.n_mse,
        last.n_stderr(),
        last.alpha_atbcrb,
        last.alpha_bcrb
    );
    Ok(Outcome { table, json: None, summary })
}
