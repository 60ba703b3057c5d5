use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, StrategyName};
use super::table::{format_g9, ResultTable, MISSING};
use crate::af_optimal::rate_profile_solve;
use crate::bounds::cutset_region;
use crate::channel::{draw_channels, NetworkDims, RatePair};
use crate::dcm::dcm_rates;
use crate::dmt::{dmt_upper_full, outage_curve, Duplex, Strategy};
use crate::error::{Error, Result};

/// Coordinatewise slack allowed in the DCM <= AF <= cut-set ordering.
pub const SANDWICH_SLACK: f64 = 1e-6;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.experiment {
        ExperimentKind::RateRegion => run_rate_region(cfg),
        ExperimentKind::Scaling => run_scaling(cfg),
        ExperimentKind::Dmt => run_dmt(cfg),
    }
}

fn header(cfg: &ExperimentConfig) -> Vec<String> {
    vec![format!("twrelay {}", env!("CARGO_PKG_VERSION")), format!("config: {}", cfg.to_json())]
}

fn require(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentConfig> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!("expected a {kind:?} experiment, got {:?}", cfg.experiment)));
    }
    cfg.resolved()
}

/// Sum rate along the ray of split `beta` through `pair`.
pub fn ray_sum_rate(pair: RatePair, beta: f64) -> f64 {
    if beta <= 0.0 {
        pair.r21
    } else if beta >= 1.0 {
        pair.r12
    } else {
        (pair.r12 / beta).min(pair.r21 / (1.0 - beta))
    }
}

struct RegionDraw {
    af: Vec<RatePair>,
    dcm: RatePair,
    caps: Vec<RatePair>,
    excess: f64,
}

/// Mean optimal-AF boundary (when `M = 1`), mean DCM pair and mean cut-set
/// caps per `alpha`, one row per `beta`.
pub fn run_rate_region(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cfg = require(cfg, ExperimentKind::RateRegion)?;
    let start = Instant::now();
    let dims = cfg.network_dims()?;
    let pc = cfg.power_config()?;
    let betas = cfg.beta_grid.clone().unwrap_or_default();
    let alphas = cfg.alpha_grid.clone().unwrap_or_default();
    let draws = cfg.draws.unwrap_or(1);
    let with_af = dims.m == 1;

    let per_draw: Vec<Result<RegionDraw>> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let ch = draw_channels(dims, cfg.seed, i);
            let dcm = dcm_rates(&ch, &pc)?;
            let caps_all = cutset_region(&ch, pc.p, pc.p_r, &alphas)?;
            let half = cutset_region(&ch, pc.p, pc.p_r, &[0.5])?.combined(0);
            let mut excess = (dcm.r12 - half.r12).max(dcm.r21 - half.r21);
            let mut af = Vec::new();
            if with_af {
                for &beta in &betas {
                    let (r_sum, _) = rate_profile_solve(&ch, &pc, pc.p, beta)?;
                    let pair = RatePair { r12: beta * r_sum, r21: (1.0 - beta) * r_sum };
                    excess = excess
                        .max(ray_sum_rate(dcm, beta) - r_sum)
                        .max(pair.r12 - half.r12)
                        .max(pair.r21 - half.r21);
                    af.push(pair);
                }
            }
            let caps = (0..alphas.len()).map(|j| caps_all.combined(j)).collect();
            Ok(RegionDraw { af, dcm, caps, excess })
        })
        .collect();

    let n = draws as f64;
    let mut af_mean = vec![RatePair::default(); if with_af { betas.len() } else { 0 }];
    let mut dcm_mean = RatePair::default();
    let mut cap_mean = vec![RatePair::default(); alphas.len()];
    let mut max_excess = f64::NEG_INFINITY;
    for d in per_draw {
        let d = d?;
        for (m, a) in af_mean.iter_mut().zip(&d.af) {
            m.r12 += a.r12 / n;
            m.r21 += a.r21 / n;
        }
        dcm_mean.r12 += d.dcm.r12 / n;
        dcm_mean.r21 += d.dcm.r21 / n;
        for (m, c) in cap_mean.iter_mut().zip(&d.caps) {
            m.r12 += c.r12 / n;
            m.r21 += c.r21 / n;
        }
        max_excess = max_excess.max(d.excess);
    }

    let mut columns = vec!["beta".to_string()];
    if with_af {
        columns.extend(["af_r12".into(), "af_r21".into()]);
    }
    columns.extend(["dcm_r12".into(), "dcm_r21".into()]);
    columns.extend(alphas.iter().map(|a| format!("ub_r12_a{}", format_g9(*a))));
    columns.extend(alphas.iter().map(|a| format!("ub_r21_a{}", format_g9(*a))));
    let mut table = ResultTable::new(columns);
    for (bi, &beta) in betas.iter().enumerate() {
        let mut row = vec![beta];
        if with_af {
            row.extend([af_mean[bi].r12, af_mean[bi].r21]);
        }
        row.extend([dcm_mean.r12, dcm_mean.r21]);
        row.extend(cap_mean.iter().map(|c| c.r12));
        row.extend(cap_mean.iter().map(|c| c.r21));
        table.push(row);
    }
    table.metadata = header(&cfg);
    if !with_af {
        table.metadata.push("optimal AF columns omitted: it needs single-antenna terminals".into());
    }
    table.metadata.push(format!("max_sandwich_excess_bits: {}", format_g9(max_excess)));
    table.metadata.push(format!("wall_time_s: {:.3}", start.elapsed().as_secs_f64()));
    if max_excess > SANDWICH_SLACK {
        return Err(Error::Validation(format!("DCM <= AF <= cut-set ordering broken by {max_excess:.3e} bits")));
    }
    validate(ExperimentKind::RateRegion, &table)?;
    Ok(table)
}

/// Mean DCM rates and mean cut-set caps at `alpha = 1/2` per relay count.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cfg = require(cfg, ExperimentKind::Scaling)?;
    let start = Instant::now();
    let base = cfg.network_dims()?;
    let pc = cfg.power_config()?;
    let draws = cfg.draws.unwrap_or(1);
    let mut table = ResultTable::new(
        ["K", "dcm_r12", "dcm_r21", "ub_r12", "ub_r21", "dcm_sum", "ub_sum", "gap"].map(String::from).to_vec(),
    );
    for &k in cfg.k_list.as_deref().unwrap_or_default() {
        let dims = NetworkDims { k, ..base };
        let per_draw: Vec<Result<(RatePair, RatePair)>> = (0..draws)
            .into_par_iter()
            .map(|i| {
                let ch = draw_channels(dims, cfg.seed, i);
                Ok((dcm_rates(&ch, &pc)?, cutset_region(&ch, pc.p, pc.p_r, &[0.5])?.combined(0)))
            })
            .collect();
        let (mut d, mut u) = (RatePair::default(), RatePair::default());
        for r in per_draw {
            let (a, b) = r?;
            d.r12 += a.r12;
            d.r21 += a.r21;
            u.r12 += b.r12;
            u.r21 += b.r21;
        }
        let n = draws as f64;
        let (d12, d21, u12, u21) = (d.r12 / n, d.r21 / n, u.r12 / n, u.r21 / n);
        table.push(vec![k as f64, d12, d21, u12, u21, d12 + d21, u12 + u21, (u12 + u21) - (d12 + d21)]);
    }
    table.metadata = header(&cfg);
    table.metadata.push(format!("wall_time_s: {:.3}", start.elapsed().as_secs_f64()));
    validate(ExperimentKind::Scaling, &table)?;
    Ok(table)
}

fn strategy_for(name: StrategyName, duplex: Duplex, t: Option<(f64, f64)>) -> Result<Strategy> {
    Ok(match (name, duplex, t) {
        (StrategyName::Cf, Duplex::Full, _) => Strategy::CfFull,
        (StrategyName::Upper, Duplex::Full, _) => Strategy::UpperFull,
        (StrategyName::Cf, Duplex::Half, Some((t1, t2))) => Strategy::CfHalf { t1, t2 },
        (StrategyName::Upper, Duplex::Half, Some((t1, t2))) => Strategy::UpperHalf { t1, t2 },
        (StrategyName::Lower, Duplex::Half, Some((t1, t2))) => Strategy::LowerHalf { t1, t2 },
        _ => return Err(Error::Config(format!("strategy {name:?} is not available for {duplex:?} duplex"))),
    })
}

/// Outage probabilities and fitted exponents per `(r12, r21)`, strategy,
/// time split and SNR.
pub fn run_dmt(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cfg = require(cfg, ExperimentKind::Dmt)?;
    let start = Instant::now();
    let dims = cfg.dmt_dims()?;
    let trials = cfg.draws.unwrap_or(1);
    let snr = cfg.snr_grid_db.clone().unwrap_or_default();
    let floor = cfg.rate_floor_bits.unwrap_or_default();
    let ts: Vec<Option<(f64, f64)>> = match dims.duplex {
        Duplex::Full => vec![None],
        Duplex::Half => cfg.t_grid.as_deref().unwrap_or_default().iter().copied().map(Some).collect(),
    };
    let mut table = ResultTable::new(
        [
            "r12", "r21", "strategy", "t1", "t2", "snr_db", "trials", "p_out_12", "p_out_21", "stderr_12", "stderr_21",
            "events_12", "events_21", "d12_fit", "d12_fit_stderr", "d21_fit", "d21_fit_stderr", "d12_analytic",
            "d21_analytic",
        ]
        .map(String::from)
        .to_vec(),
    );
    let mut flagged = 0usize;
    for &(r12, r21) in cfg.r_grid.as_deref().unwrap_or_default() {
        let analytic = match dims.duplex {
            Duplex::Full => (dmt_upper_full(dims.m1, dims.m2, dims.mr, r12)?.0, dmt_upper_full(dims.m1, dims.m2, dims.mr, r21)?.1),
            Duplex::Half => (MISSING, MISSING),
        };
        for &name in cfg.strategies.as_deref().unwrap_or_default() {
            for &t in &ts {
                let strategy = strategy_for(name, dims.duplex, t)?;
                let curve = outage_curve(dims, r12, r21, &snr, trials, cfg.seed, strategy, floor)?;
                let fit = |f: &Result<crate::dmt::ExponentFit>| match f {
                    Ok(f) => Ok((f.exponent, f.stderr)),
                    Err(Error::InsufficientEvents { .. }) => Ok((MISSING, MISSING)),
                    Err(e) => Err(e.clone()),
                };
                let (d12, s12) = fit(&curve.d12)?;
                let (d21, s21) = fit(&curve.d21)?;
                flagged += usize::from(curve.d12.is_err()) + usize::from(curve.d21.is_err());
                let (t1, t2) = t.unwrap_or((MISSING, MISSING));
                for p in &curve.points {
                    table.push(vec![
                        r12,
                        r21,
                        name.code(),
                        t1,
                        t2,
                        p.snr_db,
                        p.trials as f64,
                        p.p12(),
                        p.p21(),
                        p.stderr12(),
                        p.stderr21(),
                        p.events12 as f64,
                        p.events21 as f64,
                        d12,
                        s12,
                        d21,
                        s21,
                        analytic.0,
                        analytic.1,
                    ]);
                }
            }
        }
    }
    table.metadata = header(&cfg);
    table.metadata.push("strategy codes: 0 = cf, 1 = upper (cut-set), 2 = lower (three-phase achievability surrogate)".into());
    table.metadata.push(format!("-1 marks values that are not applicable or had too few outage events; flagged fits: {flagged}"));
    if cfg.strategies.as_deref().unwrap_or_default().contains(&StrategyName::Lower) {
        table.metadata.push(
            "lower uses the coefficients (2(t1+t2)-1)t1/(t1+t2) and (1-(t1+t2))t1/(t1+t2) as given, without derivation".into(),
        );
    }
    table.metadata.push(format!("wall_time_s: {:.3}", start.elapsed().as_secs_f64()));
    validate(ExperimentKind::Dmt, &table)?;
    Ok(table)
}

fn max_over_prefix(table: &ResultTable, prefix: &str, row: &[f64]) -> Option<f64> {
    table
        .columns
        .iter()
        .zip(row)
        .filter(|(c, _)| c.starts_with(prefix))
        .map(|(_, &v)| v)
        .reduce(f64::max)
}

/// Row-wise ordering checks applied before a table is written.
pub fn validate(kind: ExperimentKind, table: &ResultTable) -> Result<()> {
    table.check_shape()?;
    let idx = |name: &str| table.columns.iter().position(|c| c == name);
    let fail = |msg: String| Err(Error::Validation(msg));
    for (i, row) in table.rows.iter().enumerate() {
        match kind {
            ExperimentKind::RateRegion => {
                let ub12 = max_over_prefix(table, "ub_r12_", row).unwrap_or(f64::INFINITY);
                let ub21 = max_over_prefix(table, "ub_r21_", row).unwrap_or(f64::INFINITY);
                for (name, cap) in [("af_r12", ub12), ("dcm_r12", ub12), ("af_r21", ub21), ("dcm_r21", ub21)] {
                    if let Some(j) = idx(name) {
                        if row[j] > cap + SANDWICH_SLACK {
                            return fail(format!("row {i}: {name} exceeds every cut-set cap"));
                        }
                    }
                }
            }
            ExperimentKind::Scaling => {
                if let Some(j) = idx("gap") {
                    if row[j] < -SANDWICH_SLACK {
                        return fail(format!("row {i}: negative gap"));
                    }
                }
            }
            ExperimentKind::Dmt => {
                for name in ["p_out_12", "p_out_21"] {
                    if let Some(j) = idx(name) {
                        if !(0.0..=1.0).contains(&row[j]) {
                            return fail(format!("row {i}: {name} outside [0, 1]"));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
