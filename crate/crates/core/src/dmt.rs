//! Compress-and-forward over the single-relay two-way channel with direct
//! links: achievable rates, the compression-noise level, outage Monte Carlo
//! and diversity exponents.
//!
//! Rates are in bits. For direction 1 -> 2 with `X = sqrt(P/m1) H12` and
//! `Y = sqrt(P/m1) H`, the joint receive determinant factors as
//!
//! ```text
//!   L1_r2(Nhat) = L12 * prod_i (1 + Nhat + t_i),   t_i = eig(Y (I + X* X)^-1 Y*)
//! ```
//!
//! which keeps the compression constraint and the rate well conditioned at
//! high SNR. [`l_quantities`] evaluates the same determinants directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cn01, draw_direct_channels, draw_rng, DirectChannelSet, RatePair};
use crate::error::{Error, Result};
use crate::numkernel::{c, hermitian_eigvals, hermitian_logdet2, solve_hermitian, CMatrix};

/// Bisection bracket for the compression noise.
pub const NHAT_MIN: f64 = 1e-9;
pub const NHAT_MAX: f64 = 1e9;
/// Bracket width at which the noise bisection stops, in natural-log units.
pub const NHAT_TOL_LOG: f64 = 1e-12;
/// Minimum outage events for an SNR point to enter the exponent fit.
pub const MIN_EVENTS: u64 = 20;
/// Rate target used in place of `0 * log2 SNR` at zero multiplexing gain.
pub const DEFAULT_RATE_FLOOR_BITS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Duplex {
    Full,
    Half,
}

/// Antenna counts of the terminals and the relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmtDims {
    pub m1: usize,
    pub m2: usize,
    pub mr: usize,
    pub duplex: Duplex,
}

impl DmtDims {
    pub fn new(m1: usize, m2: usize, mr: usize, duplex: Duplex) -> Result<Self> {
        if m1 == 0 || m2 == 0 || mr == 0 {
            return Err(Error::Config(format!("antenna counts must be positive, got ({m1}, {m2}, {mr})")));
        }
        Ok(Self { m1, m2, mr, duplex })
    }

    pub fn is_scalar(&self) -> bool {
        self.m1 == 1 && self.m2 == 1 && self.mr == 1
    }
}

/// Determinant quantities of the full-duplex CF analysis at one noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LQuantities {
    /// `det((P/m1) [H12; H][H12; H]* + diag(I, (1 + Nhat) I))`
    pub l1_r2: f64,
    /// `det((P/m2) [H12r; Gr][H12r; Gr]* + diag(I, (1 + Nhat) I))`
    pub l2_r1: f64,
    /// `det(I + (P/m1) H12 H12*)`
    pub l12: f64,
    /// `det(I + (P/m2) H12r H12r*)`
    pub l21: f64,
    /// `det(I + (P/m1) H12 H12* + (P/mr) G G*)`
    pub l1r_2: f64,
    /// `det(I + (P/m2) H12r H12r* + (P/mr) Hr Hr*)`
    pub l2r_1: f64,
    pub nhat: f64,
}

/// Transmission scheme whose rate defines the outage event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Full-duplex compress-and-forward.
    CfFull,
    /// Three-phase compress-and-forward.
    CfHalf { t1: f64, t2: f64 },
    /// Full-duplex cut-set rate `min(log2 L1l_r2, log2 L1r_2)`.
    UpperFull,
    /// Three-phase cut-set rate `min(t1 log2 L1l_r2, t1 log2 L12 + t3 log2 L_r2)`.
    UpperHalf { t1: f64, t2: f64 },
    /// Three-phase achievability surrogate
    /// `min(t1 log2 L1l_r2, a log2 L12 + b log2 L1r_2)` with
    /// `a = (2(t1+t2) - 1) t1 / (t1+t2)`, `b = (1 - (t1+t2)) t1 / (t1+t2)`.
    LowerHalf { t1: f64, t2: f64 },
}

impl Strategy {
    fn check(&self) -> Result<()> {
        match *self {
            Strategy::CfFull | Strategy::UpperFull => Ok(()),
            Strategy::CfHalf { t1, t2 } | Strategy::UpperHalf { t1, t2 } | Strategy::LowerHalf { t1, t2 } => check_t(t1, t2),
        }
    }
}

fn check_t(t1: f64, t2: f64) -> Result<()> {
    if !(t1 > 0.0 && t2 > 0.0 && t1 + t2 < 1.0) {
        return Err(Error::Config(format!("time fractions need t1, t2 > 0 and t1 + t2 < 1, got ({t1}, {t2})")));
    }
    Ok(())
}

/// Outage estimate at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub trials: u64,
    pub events12: u64,
    pub events21: u64,
}

impl OutagePoint {
    pub fn p12(&self) -> f64 {
        self.events12 as f64 / self.trials as f64
    }

    pub fn p21(&self) -> f64 {
        self.events21 as f64 / self.trials as f64
    }

    pub fn stderr12(&self) -> f64 {
        binomial_stderr(self.p12(), self.trials)
    }

    pub fn stderr21(&self) -> f64 {
        binomial_stderr(self.p21(), self.trials)
    }
}

fn binomial_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Fitted outage exponent: `p ~ SNR^-exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub stderr: f64,
    pub points_used: usize,
}

/// Outage probabilities over an SNR grid and the fitted exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub dims: DmtDims,
    pub strategy: Strategy,
    pub r12: f64,
    pub r21: f64,
    pub points: Vec<OutagePoint>,
    pub d12: Result<ExponentFit>,
    pub d21: Result<ExponentFit>,
}

/// Per-realization terms shared by the rate and constraint formulas.
#[derive(Debug, Clone, PartialEq)]
struct CfTerms {
    mr: usize,
    log2_l12: f64,
    log2_l21: f64,
    t12: Vec<f64>,
    t21: Vec<f64>,
    log2_l1r_2: f64,
    log2_l2r_1: f64,
    /// relay-only links: `log2 det(I + (P/mr) G G*)` and `log2 det(I + (P/mr) Hr Hr*)`
    log2_lr2: f64,
    log2_lr1: f64,
}

fn plus_identity(mut a: CMatrix) -> CMatrix {
    for i in 0..a.nrows() {
        a[(i, i)] += c(1.0);
    }
    a
}

/// Eigenvalues of `Y (I + X* X)^-1 Y*`, clipped at zero.
fn schur_eigs(x: &CMatrix, y: &CMatrix) -> Result<Vec<f64>> {
    let inner = plus_identity(x.adjoint() * x);
    let z = solve_hermitian(&inner, &y.adjoint())?;
    let t = y * z;
    let t = (&t + t.adjoint()).scale(0.5);
    Ok(hermitian_eigvals(&t)?.into_iter().map(|v| v.max(0.0)).collect())
}

impl CfTerms {
    fn new(dch: &DirectChannelSet, p: f64) -> Result<Self> {
        let (s1, s2, sr) = ((p / dch.m1 as f64).sqrt(), (p / dch.m2 as f64).sqrt(), p / dch.mr as f64);
        let x12 = dch.h12.scale(s1);
        let x21 = dch.h12_r.scale(s2);
        let d12 = x12.clone() * x12.adjoint();
        let d21 = x21.clone() * x21.adjoint();
        let gg = (&dch.g * dch.g.adjoint()).scale(sr);
        let hh = (&dch.h_r * dch.h_r.adjoint()).scale(sr);
        Ok(Self {
            mr: dch.mr,
            log2_l12: hermitian_logdet2(&plus_identity(d12.clone()))?,
            log2_l21: hermitian_logdet2(&plus_identity(d21.clone()))?,
            t12: schur_eigs(&x12, &dch.h.scale(s1))?,
            t21: schur_eigs(&x21, &dch.g_r.scale(s2))?,
            log2_l1r_2: hermitian_logdet2(&plus_identity(&d12 + &gg))?,
            log2_l2r_1: hermitian_logdet2(&plus_identity(&d21 + &hh))?,
            log2_lr2: hermitian_logdet2(&plus_identity(gg))?,
            log2_lr1: hermitian_logdet2(&plus_identity(hh))?,
        })
    }

    /// `max` over directions of `I(y_r; yhat | ...)` with relay noise `noise`.
    fn compression_load(&self, noise: f64, nhat: f64) -> f64 {
        let load = |t: &[f64]| t.iter().map(|ti| ((noise + nhat + ti) / nhat).log2()).sum::<f64>();
        load(&self.t12).max(load(&self.t21))
    }

    fn rates(&self, noise: f64, nhat: f64) -> RatePair {
        let gain = |t: &[f64]| {
            if nhat.is_infinite() {
                0.0
            } else {
                t.iter().map(|ti| (ti / (noise + nhat)).ln_1p()).sum::<f64>() / std::f64::consts::LN_2
            }
        };
        RatePair { r12: self.log2_l12 + gain(&self.t12), r21: self.log2_l21 + gain(&self.t21) }
    }

    fn full_capacity(&self) -> f64 {
        (self.log2_l2r_1 - self.log2_l21).min(self.log2_l1r_2 - self.log2_l12)
    }

    fn half_capacity(&self, t1: f64, t2: f64) -> f64 {
        (1.0 - t1 - t2) / (t1 + t2) * self.log2_lr1.min(self.log2_lr2)
    }
}

/// Smallest noise level meeting `load(Nhat) <= capacity`, or infinity when
/// no level in the bracket does.
fn solve_nhat(terms: &CfTerms, noise: f64, capacity: f64) -> f64 {
    if !(capacity > 0.0) {
        return f64::INFINITY;
    }
    let gap = |n: f64| terms.compression_load(noise, n) - capacity;
    if gap(NHAT_MAX) > 0.0 {
        return f64::INFINITY;
    }
    if gap(NHAT_MIN) <= 0.0 {
        return NHAT_MIN;
    }
    let (mut lo, mut hi) = (NHAT_MIN.ln(), NHAT_MAX.ln());
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid.exp());
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < NHAT_TOL_LOG {
            break;
        }
    }
    hi.exp()
}

/// Determinant quantities evaluated directly.
pub fn l_quantities(dch: &DirectChannelSet, p: f64, nhat: f64) -> Result<LQuantities> {
    if !(nhat >= 0.0 && nhat.is_finite()) {
        return Err(Error::Config(format!("noise level must be finite and non-negative, got {nhat}")));
    }
    let (m1, m2, mr) = (dch.m1, dch.m2, dch.mr);
    let joint = |direct: &CMatrix, relay: &CMatrix, m_rx: usize, scale: f64| -> Result<f64> {
        let mut s = CMatrix::zeros(m_rx + mr, direct.ncols());
        s.rows_mut(0, m_rx).copy_from(direct);
        s.rows_mut(m_rx, mr).copy_from(relay);
        let mut cov = (&s * s.adjoint()).scale(scale);
        for i in 0..m_rx + mr {
            cov[(i, i)] += c(if i < m_rx { 1.0 } else { 1.0 + nhat });
        }
        Ok(hermitian_logdet2(&cov)?.exp2())
    };
    let (s1, s2, sr) = (p / m1 as f64, p / m2 as f64, p / mr as f64);
    let d12 = (&dch.h12 * dch.h12.adjoint()).scale(s1);
    let d21 = (&dch.h12_r * dch.h12_r.adjoint()).scale(s2);
    Ok(LQuantities {
        l1_r2: joint(&dch.h12, &dch.h, m2, s1)?,
        l2_r1: joint(&dch.h12_r, &dch.g_r, m1, s2)?,
        l12: hermitian_logdet2(&plus_identity(d12.clone()))?.exp2(),
        l21: hermitian_logdet2(&plus_identity(d21.clone()))?.exp2(),
        l1r_2: hermitian_logdet2(&plus_identity(d12 + (&dch.g * dch.g.adjoint()).scale(sr)))?.exp2(),
        l2r_1: hermitian_logdet2(&plus_identity(d21 + (&dch.h_r * dch.h_r.adjoint()).scale(sr)))?.exp2(),
        nhat,
    })
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Config(format!("power must be positive, got {p}")));
    }
    Ok(())
}

/// Full-duplex compression noise; infinite when the relay cannot be heard.
pub fn compression_noise_full(dch: &DirectChannelSet, p: f64) -> Result<f64> {
    check_power(p)?;
    let terms = CfTerms::new(dch, p)?;
    Ok(solve_nhat(&terms, 1.0, terms.full_capacity()))
}

/// Full-duplex CF rates `log2(L1_r2(Nhat) / (1 + Nhat)^mr)` and the reverse.
pub fn cf_rates_full(dch: &DirectChannelSet, p: f64) -> Result<RatePair> {
    check_power(p)?;
    let terms = CfTerms::new(dch, p)?;
    let nhat = solve_nhat(&terms, 1.0, terms.full_capacity());
    Ok(terms.rates(1.0, nhat))
}

/// Three-phase compression noise. The quantized signal is the sum of the two
/// receive phases, so its own noise is `(2 + Nhat) I`; the relay is heard
/// alone in the third phase.
pub fn compression_noise_half(dch: &DirectChannelSet, p: f64, t1: f64, t2: f64) -> Result<f64> {
    check_power(p)?;
    check_t(t1, t2)?;
    let terms = CfTerms::new(dch, p)?;
    Ok(solve_nhat(&terms, 2.0, terms.half_capacity(t1, t2)))
}

/// Three-phase CF rates `t1 (log2 L12 + sum log2(1 + t_i / (2 + Nhat)))` and the reverse.
pub fn cf_rates_half(dch: &DirectChannelSet, p: f64, t1: f64, t2: f64) -> Result<RatePair> {
    check_power(p)?;
    check_t(t1, t2)?;
    let terms = CfTerms::new(dch, p)?;
    let nhat = solve_nhat(&terms, 2.0, terms.half_capacity(t1, t2));
    let r = terms.rates(2.0, nhat);
    Ok(RatePair { r12: t1 * r.r12, r21: t2 * r.r21 })
}

/// Full-duplex tradeoff ceiling
/// `d12 <= min((m1 - r)(mr + m2 - r), (m1 + mr - r)(m2 - r))` and its mirror.
pub fn dmt_upper_full(m1: usize, m2: usize, mr: usize, r: f64) -> Result<(f64, f64)> {
    let max = m1.min(m2) as f64;
    if !(0.0..=max).contains(&r) {
        return Err(Error::InvalidMultiplexingGain { r, max });
    }
    let (a, b, k) = (m1 as f64, m2 as f64, mr as f64);
    let d = |tx: f64, rx: f64| ((tx - r) * (k + rx - r)).min((tx + k - r) * (rx - r));
    Ok((d(a, b), d(b, a)))
}

/// Effective rate of a strategy for both directions.
fn strategy_rates(terms: &CfTerms, s: &Strategy) -> RatePair {
    let cutset = |t: &[f64], log2_direct: f64| log2_direct + t.iter().map(|ti| ti.ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
    let l1l = cutset(&terms.t12, terms.log2_l12);
    let l2l = cutset(&terms.t21, terms.log2_l21);
    match *s {
        Strategy::CfFull => terms.rates(1.0, solve_nhat(terms, 1.0, terms.full_capacity())),
        Strategy::CfHalf { t1, t2 } => {
            let r = terms.rates(2.0, solve_nhat(terms, 2.0, terms.half_capacity(t1, t2)));
            RatePair { r12: t1 * r.r12, r21: t2 * r.r21 }
        }
        Strategy::UpperFull => RatePair { r12: l1l.min(terms.log2_l1r_2), r21: l2l.min(terms.log2_l2r_1) },
        Strategy::UpperHalf { t1, t2 } => {
            let t3 = 1.0 - t1 - t2;
            RatePair {
                r12: (t1 * l1l).min(t1 * terms.log2_l12 + t3 * terms.log2_lr2),
                r21: (t2 * l2l).min(t2 * terms.log2_l21 + t3 * terms.log2_lr1),
            }
        }
        Strategy::LowerHalf { t1, t2 } => {
            let s = t1 + t2;
            let coef = |t: f64| ((2.0 * s - 1.0) * t / s, (1.0 - s) * t / s);
            let (a1, b1) = coef(t1);
            let (a2, b2) = coef(t2);
            RatePair {
                r12: (t1 * l1l).min(a1 * terms.log2_l12 + b1 * terms.log2_l1r_2),
                r21: (t2 * l2l).min(a2 * terms.log2_l21 + b2 * terms.log2_l2r_1),
            }
        }
    }
}

/// Rate of `strategy` for one realization at power `p`.
pub fn strategy_rate(dch: &DirectChannelSet, p: f64, strategy: &Strategy) -> Result<RatePair> {
    check_power(p)?;
    strategy.check()?;
    Ok(strategy_rates(&CfTerms::new(dch, p)?, strategy))
}

/// Squared magnitudes of a single-antenna realization, in draw order.
#[derive(Debug, Clone, Copy)]
struct ScalarGains {
    h: f64,
    h_r: f64,
    g: f64,
    g_r: f64,
    h12: f64,
    h12_r: f64,
}

impl ScalarGains {
    fn draw(seed: u64, index: u64) -> Self {
        let mut rng = draw_rng(seed, index);
        let mut next = || cn01(&mut rng).norm_sqr();
        Self { h: next(), h_r: next(), g: next(), g_r: next(), h12: next(), h12_r: next() }
    }

    fn terms(&self, p: f64) -> CfTerms {
        let (l12, l21) = (1.0 + p * self.h12, 1.0 + p * self.h12_r);
        CfTerms {
            mr: 1,
            log2_l12: l12.log2(),
            log2_l21: l21.log2(),
            t12: vec![p * self.h / l12],
            t21: vec![p * self.g_r / l21],
            log2_l1r_2: (l12 + p * self.g).log2(),
            log2_l2r_1: (l21 + p * self.h_r).log2(),
            log2_lr2: (1.0 + p * self.g).log2(),
            log2_lr1: (1.0 + p * self.h_r).log2(),
        }
    }
}

/// Outage threshold `r log2 SNR`, or the floor at zero multiplexing gain.
pub fn outage_threshold(r: f64, snr_db: f64, rate_floor_bits: f64) -> f64 {
    if r > 0.0 {
        r * snr_db / 10.0 * std::f64::consts::LOG2_10
    } else {
        rate_floor_bits
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

const CHUNK: u64 = 2048;

/// Counts trials whose `rates` fall at or below the thresholds, per SNR
/// point and per outcome slot. `eval` maps a realization and power to one
/// rate per slot.
fn count_events<F>(dims: DmtDims, snr_grid_db: &[f64], trials: u64, seed: u64, thresholds: &[Vec<f64>], eval: F) -> Result<Vec<Vec<u64>>>
where
    F: Fn(&CfTerms) -> Vec<f64> + Sync,
{
    let powers: Vec<f64> = snr_grid_db.iter().map(|&d| db_to_linear(d)).collect();
    let slots = thresholds.first().map_or(0, |t| t.len());
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<Vec<u64>>>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut counts = vec![vec![0u64; slots]; powers.len()];
            for i in ci * CHUNK..((ci + 1) * CHUNK).min(trials) {
                let scalar = dims.is_scalar().then(|| ScalarGains::draw(seed, i));
                let dch = if scalar.is_none() { Some(draw_direct_channels(dims.m1, dims.m2, dims.mr, seed, i)) } else { None };
                for (si, &p) in powers.iter().enumerate() {
                    let terms = match (&scalar, &dch) {
                        (Some(s), _) => s.terms(p),
                        (None, Some(d)) => CfTerms::new(d, p)?,
                        _ => unreachable!(),
                    };
                    for (slot, r) in eval(&terms).into_iter().enumerate() {
                        if r <= thresholds[si][slot] {
                            counts[si][slot] += 1;
                        }
                    }
                }
            }
            Ok(counts)
        })
        .collect();
    let mut total = vec![vec![0u64; slots]; powers.len()];
    for part in partial {
        for (t, c) in total.iter_mut().zip(part?) {
            for (a, b) in t.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(total)
}

fn check_gain(dims: &DmtDims, r: f64) -> Result<()> {
    let max = dims.m1.min(dims.m2) as f64;
    if !(0.0..=max).contains(&r) {
        return Err(Error::InvalidMultiplexingGain { r, max });
    }
    Ok(())
}

/// Monte Carlo outage probabilities of `strategy` over `snr_grid_db`, with
/// `P = SNR` and common channel draws across SNR points.
#[allow(clippy::too_many_arguments)]
pub fn outage_curve(
    dims: DmtDims,
    r12: f64,
    r21: f64,
    snr_grid_db: &[f64],
    trials: u64,
    seed: u64,
    strategy: Strategy,
    rate_floor_bits: f64,
) -> Result<OutageCurve> {
    check_gain(&dims, r12)?;
    check_gain(&dims, r21)?;
    strategy.check()?;
    if trials == 0 || snr_grid_db.is_empty() {
        return Err(Error::Config("need at least one trial and one SNR point".into()));
    }
    let thresholds: Vec<Vec<f64>> = snr_grid_db
        .iter()
        .map(|&s| vec![outage_threshold(r12, s, rate_floor_bits), outage_threshold(r21, s, rate_floor_bits)])
        .collect();
    let counts = count_events(dims, snr_grid_db, trials, seed, &thresholds, |t| {
        let r = strategy_rates(t, &strategy);
        vec![r.r12, r.r21]
    })?;
    let points: Vec<OutagePoint> = snr_grid_db
        .iter()
        .zip(&counts)
        .map(|(&snr_db, c)| OutagePoint { snr_db, trials, events12: c[0], events21: c[1] })
        .collect();
    let fit = |sel: fn(&OutagePoint) -> u64| {
        let ev: Vec<u64> = points.iter().map(sel).collect();
        fit_exponent(snr_grid_db, &vec![trials; points.len()], &ev)
    };
    let d12 = fit(|p| p.events12);
    let d21 = fit(|p| p.events21);
    Ok(OutageCurve { dims, strategy, r12, r21, points, d12, d21 })
}

/// Weighted least-squares slope of `log2 p` against `log2 SNR`, negated.
/// `points` holds `(snr_db, p, weight)`.
pub fn fit_power_law(points: &[(f64, f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientEvents { usable: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 / 10.0 * std::f64::consts::LOG2_10).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let ws: Vec<f64> = points.iter().map(|p| p.2).collect();
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientEvents { usable: 1 });
    }
    let sxy: f64 = xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    Ok(ExponentFit { exponent: -sxy / sxx, stderr: (1.0 / sxx).sqrt(), points_used: points.len() })
}

/// Outage exponent from event counts, using points with at least
/// [`MIN_EVENTS`] events weighted by inverse variance of `log2 p`.
pub fn fit_exponent(snr_grid_db: &[f64], trials: &[u64], events: &[u64]) -> Result<ExponentFit> {
    let ln2 = std::f64::consts::LN_2;
    let pts: Vec<(f64, f64, f64)> = snr_grid_db
        .iter()
        .zip(trials)
        .zip(events)
        .filter(|((_, &n), &e)| e >= MIN_EVENTS && e < n)
        .map(|((&s, &n), &e)| {
            let p = e as f64 / n as f64;
            (s, p, n as f64 * p / (1.0 - p) * ln2 * ln2)
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientEvents { usable: pts.len() });
    }
    fit_power_law(&pts)
}

/// Default three-phase time grid: steps of 0.1 from 0.05 with `t1 + t2 <= 0.9`.
pub fn default_t_grid() -> Vec<(f64, f64)> {
    let ts: Vec<f64> = (0..9).map(|i| 0.05 + 0.1 * i as f64).collect();
    let mut grid = Vec::new();
    for &a in &ts {
        for &b in &ts {
            if a + b <= 0.9 + 1e-12 {
                grid.push((a, b));
            }
        }
    }
    grid
}

/// Per-grid-point exponents of the two three-phase cut events.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfDuplexBound {
    pub t: (f64, f64),
    /// exponents of (bc12, mac12, bc21, mac21); infinite when too rare to fit
    pub exponents: [f64; 4],
}

/// Three-phase tradeoff ceiling: for every `(t1, t2)` the smaller exponent of
/// the two cut events, maximized over the grid, for each direction.
///
/// An event too rare to fit counts as an infinite exponent; a grid point
/// whose both events are too rare is skipped.
#[allow(clippy::too_many_arguments)]
pub fn dmt_upper_half(
    dims: DmtDims,
    r12: f64,
    r21: f64,
    snr_grid_db: &[f64],
    trials: u64,
    t_grid: &[(f64, f64)],
    seed: u64,
    rate_floor_bits: f64,
) -> Result<((f64, f64), Vec<HalfDuplexBound>)> {
    check_gain(&dims, r12)?;
    check_gain(&dims, r21)?;
    for &(t1, t2) in t_grid {
        check_t(t1, t2)?;
    }
    let thresholds: Vec<Vec<f64>> = snr_grid_db
        .iter()
        .map(|&s| {
            let (a, b) = (outage_threshold(r12, s, rate_floor_bits), outage_threshold(r21, s, rate_floor_bits));
            t_grid.iter().flat_map(|_| [a, a, b, b]).collect()
        })
        .collect();
    let counts = count_events(dims, snr_grid_db, trials, seed, &thresholds, |t| {
        let ln2 = std::f64::consts::LN_2;
        let l1l = t.log2_l12 + t.t12.iter().map(|x| x.ln_1p()).sum::<f64>() / ln2;
        let l2l = t.log2_l21 + t.t21.iter().map(|x| x.ln_1p()).sum::<f64>() / ln2;
        t_grid
            .iter()
            .flat_map(|&(t1, t2)| {
                let t3 = 1.0 - t1 - t2;
                [t1 * l1l, t1 * t.log2_l12 + t3 * t.log2_lr2, t2 * l2l, t2 * t.log2_l21 + t3 * t.log2_lr1]
            })
            .collect()
    })?;
    let n = vec![trials; snr_grid_db.len()];
    let mut per_point = Vec::with_capacity(t_grid.len());
    let (mut best12, mut best21) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (gi, &t) in t_grid.iter().enumerate() {
        let mut exps = [0.0; 4];
        for (e, slot) in exps.iter_mut().enumerate() {
            let ev: Vec<u64> = counts.iter().map(|c| c[4 * gi + e]).collect();
            *slot = match fit_exponent(snr_grid_db, &n, &ev) {
                Ok(f) => f.exponent,
                Err(Error::InsufficientEvents { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
        }
        let d12 = exps[0].min(exps[1]);
        let d21 = exps[2].min(exps[3]);
        if d12.is_finite() {
            best12 = best12.max(d12);
        }
        if d21.is_finite() {
            best21 = best21.max(d21);
        }
        per_point.push(HalfDuplexBound { t, exponents: exps });
    }
    if !best12.is_finite() || !best21.is_finite() {
        return Err(Error::InsufficientEvents { usable: 0 });
    }
    Ok(((best12, best21), per_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn unit() -> DirectChannelSet {
        let one = Complex64::new(1.0, 0.0);
        DirectChannelSet::scalar(one, one, one, one, one, one)
    }

    #[test]
    fn l_quantities_zero_and_unit() {
        let z = Complex64::new(0.0, 0.0);
        let zero = DirectChannelSet::scalar(z, z, z, z, z, z);
        let l = l_quantities(&zero, 10.0, 0.5).unwrap();
        assert!((l.l12 - 1.0).abs() < 1e-12 && (l.l1r_2 - 1.0).abs() < 1e-12);
        assert!((l.l1_r2 - 1.5).abs() < 1e-12 && (l.l2_r1 - 1.5).abs() < 1e-12);

        let l = l_quantities(&unit(), 10.0, 0.0).unwrap();
        assert!((l.l12 - 11.0).abs() < 1e-10);
        assert!((l.l1r_2 - 21.0).abs() < 1e-10);
        // det [[11, 10], [10, 11]]
        assert!((l.l1_r2 - 21.0).abs() < 1e-9);
    }

    #[test]
    fn drowned_relay_observation() {
        let dch = draw_direct_channels(1, 2, 2, 3, 1);
        let nhat = 1e6;
        let l = l_quantities(&dch, 10.0, nhat).unwrap();
        assert!(((l.l1_r2 / (1.0 + nhat).powi(2)) / l.l12 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn factorized_rates_match_determinants() {
        for (m1, m2, mr) in [(1, 1, 1), (2, 1, 1), (1, 2, 3), (2, 2, 2)] {
            for draw in 0..4 {
                let dch = draw_direct_channels(m1, m2, mr, 11, draw);
                let p = 30.0;
                let nhat = compression_noise_full(&dch, p).unwrap();
                let r = cf_rates_full(&dch, p).unwrap();
                if nhat.is_finite() {
                    let l = l_quantities(&dch, p, nhat).unwrap();
                    let m = mr as f64;
                    assert!((r.r12 - (l.l1_r2.log2() - m * (1.0 + nhat).log2())).abs() < 1e-8);
                    assert!((r.r21 - (l.l2_r1.log2() - m * (1.0 + nhat).log2())).abs() < 1e-8);
                    // compression constraint holds with equality
                    let lhs = ((l.l1_r2 / (l.l12 * nhat.powi(mr as i32))).log2())
                        .max((l.l2_r1 / (l.l21 * nhat.powi(mr as i32))).log2());
                    let rhs = (l.l2r_1 / l.l21).log2().min((l.l1r_2 / l.l12).log2());
                    assert!(lhs <= rhs + 1e-8 && (nhat == NHAT_MIN || (lhs - rhs).abs() < 1e-8));
                }
            }
        }
    }

    #[test]
    fn zero_channels_give_zero_rates() {
        let z = Complex64::new(0.0, 0.0);
        let dch = DirectChannelSet::scalar(z, z, z, z, z, z);
        assert!(compression_noise_full(&dch, 10.0).unwrap().is_infinite());
        assert_eq!(cf_rates_full(&dch, 10.0).unwrap(), RatePair::default());
    }

    #[test]
    fn strong_relay_links_shrink_noise() {
        let base = unit();
        let strong = base.with_relay_tx_gain(1e3);
        let a = compression_noise_full(&base, 10.0).unwrap();
        let b = compression_noise_full(&strong, 10.0).unwrap();
        assert!(b < a && b < 1e-5);
        // CF then approaches the relay-aided ceiling, never below direct
        let r = cf_rates_full(&base.with_relay_tx_gain(100.0), 10.0).unwrap();
        assert!(r.r12 >= 11f64.log2() - 0.01);
    }

    #[test]
    fn tradeoff_ceiling_examples() {
        assert_eq!(dmt_upper_full(1, 1, 1, 0.0).unwrap(), (2.0, 2.0));
        assert_eq!(dmt_upper_full(1, 1, 1, 1.0).unwrap().0, 0.0);
        assert!((dmt_upper_full(2, 1, 1, 0.5).unwrap().0 - 1.25).abs() < 1e-15);
        assert!(matches!(dmt_upper_full(1, 1, 1, 1.5), Err(Error::InvalidMultiplexingGain { .. })));
    }

    #[test]
    fn half_duplex_edges() {
        let dch = unit();
        let small = compression_noise_half(&dch, 10.0, 1e-4, 1e-4).unwrap();
        let mid = compression_noise_half(&dch, 10.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let large = compression_noise_half(&dch, 10.0, 0.4999999, 0.4999999).unwrap();
        assert!(small < mid && mid < large);
        assert!(small < 1e-3);
        assert!(large.is_infinite() || large > 1e5);
        assert!(cf_rates_half(&dch, 10.0, 0.0, 0.3).is_err());
        let r = cf_rates_half(&dch, 10.0, 0.3, 0.3).unwrap();
        assert!((r.r12 - r.r21).abs() < 1e-12);
    }

    #[test]
    fn scalar_fast_path_matches_generic() {
        for i in 0..50 {
            let dch = draw_direct_channels(1, 1, 1, 99, i);
            let s = ScalarGains::draw(99, i);
            for p in [3.0, 100.0] {
                let a = CfTerms::new(&dch, p).unwrap();
                let b = s.terms(p);
                for (x, y) in [(a.log2_l12, b.log2_l12), (a.log2_l1r_2, b.log2_l1r_2), (a.t12[0], b.t12[0]), (a.t21[0], b.t21[0]), (a.log2_lr1, b.log2_lr1)] {
                    assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
                }
            }
        }
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let pts: Vec<(f64, f64, f64)> = [5.0, 10.0, 15.0, 20.0].iter().map(|&s| (s, 0.3 * db_to_linear(s).powf(-1.7), 1.0 + s)).collect();
        assert!((fit_power_law(&pts).unwrap().exponent - 1.7).abs() < 1e-9);
        assert!(matches!(fit_exponent(&[1.0, 2.0], &[100, 100], &[5, 50]), Err(Error::InsufficientEvents { usable: 1 })));
    }

    #[test]
    fn t_grid_lies_in_simplex() {
        let g = default_t_grid();
        assert!(!g.is_empty());
        assert!(g.iter().all(|&(a, b)| a >= 0.05 && b >= 0.05 && a + b <= 0.9 + 1e-12));
    }

    #[test]
    fn outage_counts_are_schedule_independent() {
        let dims = DmtDims::new(1, 1, 1, Duplex::Full).unwrap();
        let run = || outage_curve(dims, 0.5, 0.5, &[0.0, 10.0], 5000, 4, Strategy::CfFull, 1.0).unwrap();
        let a = run();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
        assert_eq!(a.points, b.points);
    }
}
