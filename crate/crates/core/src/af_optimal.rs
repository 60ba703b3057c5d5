//! Optimal amplify-and-forward relay weights for single-antenna terminals.
//!
//! The boundary of the AF rate region is traced with the rate-profile method:
//! for a fixed split `beta`, the largest sum rate `R` is found by bisection,
//! where each probe solves the SINR-constrained relay power minimization
//!
//! ```text
//!   min  x* A x
//!   s.t. P |a_i* x|^2 >= gamma_i (1 + x* B_i x),   i = 1, 2
//! ```
//!
//! over the stacked relay weights `x = [vec(W_1); ...; vec(W_K)]`.
//!
//! The inner problem is solved through its KKT system. Writing each constraint
//! as `gamma_i + x* C_i x <= 0` with `C_i = gamma_i B_i - P a_i a_i*`, the
//! stationarity condition is `(A + l1 C1 + l2 C2) x = 0`, and sufficiency holds
//! when that matrix is positive semidefinite. The multipliers are searched on
//! the boundary of the PSD region: for a direction `theta` the boundary point
//! follows from one Hermitian eigenproblem, and its null vector gives the
//! candidate weights. Bisection on `theta` moves along the boundary until both
//! constraints need the same scaling of the null vector, which is the point
//! where both are active.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Cholesky;
use nalgebra::Dyn;
use num_complex::Complex64;

use crate::channel::{ChannelSet, ConstraintKind, PowerConfig};
use crate::error::{Error, Result};
use crate::numkernel::{c, hermitian_eigh, least_singular_direction, CMatrix, CVector};

/// Pre-log factor of the two-phase protocol with equal transmit/receive time.
pub const RATE_PREFACTOR: f64 = 0.5;
/// Relative slack allowed on an active SINR constraint.
pub const SINR_SLACK: f64 = 1e-6;
/// Multipliers below this fraction of the largest are reported as zero.
pub const MULTIPLIER_FLOOR: f64 = 1e-10;
/// Bound on `|M(l) w| / |w|` at an accepted solution.
pub const KKT_TOL: f64 = 1e-6;
/// Width of the outer bisection bracket on the sum rate, in bits.
pub const OUTER_TOL_BITS: f64 = 1e-6;
/// Cap on inner multiplier-search iterations.
pub const MAX_INNER_ITERATIONS: usize = 200;

/// Link direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    T1to2,
    T2to1,
}

/// Per-relay AF matrices `W_k` (N x N).
#[derive(Debug, Clone, PartialEq)]
pub struct RelayWeights {
    pub w: Vec<CMatrix>,
}

impl RelayWeights {
    pub fn zeros(k: usize, n: usize) -> Self {
        Self { w: vec![CMatrix::zeros(n, n); k] }
    }

    /// Scalar weights for single-antenna relays.
    pub fn scalar(w: &[Complex64]) -> Self {
        Self { w: w.iter().map(|&z| CMatrix::from_element(1, 1, z)).collect() }
    }

    /// Stacks the weights column-major into one vector.
    pub fn to_vector(&self) -> CVector {
        let entries: Vec<Complex64> = self.w.iter().flat_map(|wk| wk.iter().copied()).collect();
        CVector::from_vec(entries)
    }

    pub fn from_vector(x: &CVector, k: usize, n: usize) -> Self {
        let nn = n * n;
        let w = (0..k).map(|r| CMatrix::from_iterator(n, n, x.rows(r * nn, nn).iter().copied())).collect();
        Self { w }
    }

    /// Multiplies every weight by `z`.
    pub fn scaled(&self, z: Complex64) -> Self {
        Self { w: self.w.iter().map(|wk| wk.map(|e| e * z)).collect() }
    }
}

/// Output of the inner power minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    pub weights: RelayWeights,
    pub sinr12: f64,
    pub sinr21: f64,
    pub total_power: f64,
    pub per_relay_power: Vec<f64>,
    /// Multiplier of the T1 -> T2 constraint, normalized as in
    /// `w B w* - |c w^T|^2 / (gamma0 / P) + 1 <= 0`.
    pub lambda1: f64,
    /// Multiplier of the T2 -> T1 constraint, same normalization.
    pub lambda2: f64,
    /// `|(A + l1 B + l2 D - (l1 P/gamma0) c*c - (l2 P/gamma1) e*e) w| / |w|`.
    pub kkt_residual: f64,
    /// Lagrange dual value; equals `total_power` at a certified optimum.
    pub dual_value: f64,
    pub iterations: usize,
    pub feasible: bool,
}

/// One boundary sample of the AF rate region.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    pub beta: f64,
    pub r_sum: f64,
    pub r12: f64,
    pub r21: f64,
    pub solution: BeamformerSolution,
}

/// AF rate region traced over a grid of rate-profile splits.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion {
    pub samples: Vec<RateSample>,
    pub power: PowerConfig,
    pub dims: crate::channel::NetworkDims,
}

/// Quadratic-form description of the AF problem for one realization.
///
/// Signal amplitude in direction `i` is `a_i* x`, forwarded noise power is
/// `x* B_i x`, and relay transmit power is `x* A x`.
#[derive(Debug, Clone)]
pub struct AfModel {
    pub k: usize,
    pub n: usize,
    pub p: f64,
    pub power: CMatrix,
    pub signal: [CVector; 2],
    pub noise: [CMatrix; 2],
    relay_blocks: Vec<CMatrix>,
}

fn check_single_antenna_terminals(ch: &ChannelSet) -> Result<()> {
    if ch.dims.m != 1 {
        return Err(Error::DimensionMismatch(format!(
            "optimal AF requires single-antenna terminals, got M={}",
            ch.dims.m
        )));
    }
    Ok(())
}

impl AfModel {
    pub fn new(ch: &ChannelSet, p: f64) -> Result<Self> {
        check_single_antenna_terminals(ch)?;
        let (k, n) = (ch.dims.k, ch.dims.n);
        let nn = n * n;
        let dim = k * nn;
        let mut power = CMatrix::zeros(dim, dim);
        let mut noise = [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)];
        let mut signal = [CVector::zeros(dim), CVector::zeros(dim)];
        let mut relay_blocks = Vec::with_capacity(k);

        for (r, l) in ch.relays.iter().enumerate() {
            let off = r * nn;
            // receive covariance at the relay: P (h h* + g_r g_r*) + I
            let mut cov = (&l.h * l.h.adjoint() + &l.g_r * l.g_r.adjoint()).scale(p);
            for i in 0..n {
                cov[(i, i)] += c(1.0);
            }
            // tr(W cov W*) = vec(W)* (cov^T kron I) vec(W)
            let mut block = CMatrix::zeros(nn, nn);
            for j in 0..n {
                for jp in 0..n {
                    for i in 0..n {
                        block[(j * n + i, jp * n + i)] = cov[(jp, j)];
                    }
                }
            }
            power.view_mut((off, off), (nn, nn)).copy_from(&block);
            relay_blocks.push(block);

            // (receive row, transmit column) per direction:
            // T1->T2: g W h with g = G_k (1xN), h = H_k (Nx1)
            // T2->T1: h_r W g_r with h_r = H_k^r (1xN), g_r = G_k^r (Nx1)
            let links = [(&l.g, &l.h), (&l.h_r, &l.g_r)];
            for (d, (rx, tx)) in links.iter().enumerate() {
                for j in 0..n {
                    for i in 0..n {
                        signal[d][off + j * n + i] = (rx[(0, i)] * tx[(j, 0)]).conj();
                    }
                    for i in 0..n {
                        for ip in 0..n {
                            noise[d][(off + j * n + i, off + j * n + ip)] = rx[(0, i)].conj() * rx[(0, ip)];
                        }
                    }
                }
            }
        }
        Ok(Self { k, n, p, power, signal, noise, relay_blocks })
    }

    pub fn dim(&self) -> usize {
        self.k * self.n * self.n
    }

    fn quad(m: &CMatrix, x: &CVector) -> f64 {
        x.dotc(&(m * x)).re
    }

    pub fn sinr(&self, x: &CVector, d: usize) -> f64 {
        let s = self.signal[d].dotc(x).norm_sqr();
        self.p * s / (1.0 + Self::quad(&self.noise[d], x))
    }

    pub fn total_power(&self, x: &CVector) -> f64 {
        Self::quad(&self.power, x)
    }

    pub fn per_relay_power(&self, x: &CVector) -> Vec<f64> {
        let nn = self.n * self.n;
        self.relay_blocks
            .iter()
            .enumerate()
            .map(|(r, b)| {
                let xr = x.rows(r * nn, nn).clone_owned();
                Self::quad(b, &xr)
            })
            .collect()
    }

    /// `C_i = gamma_i B_i - P a_i a_i*`.
    fn constraint_matrix(&self, d: usize, gamma: f64) -> CMatrix {
        let a = &self.signal[d];
        self.noise[d].scale(gamma) - (a * a.adjoint()).scale(self.p)
    }

    /// Largest SINR reachable in direction `d` with total relay power `budget`,
    /// `P * budget * a* (A + budget B)^-1 a`, and the weights achieving it.
    pub fn max_sinr(&self, d: usize, budget: f64) -> (f64, CVector) {
        let a = &self.signal[d];
        if a.norm() == 0.0 || budget <= 0.0 {
            return (0.0, CVector::zeros(self.dim()));
        }
        let m = &self.power + self.noise[d].scale(budget);
        let chol = Cholesky::new(m).expect("A + budget*B is positive definite");
        let v = chol.solve(a);
        let sinr = self.p * budget * a.dotc(&v).re;
        let x = v.scale((budget / Self::quad(&self.power, &v)).sqrt());
        (sinr, x)
    }
}

/// Signal-to-interference-plus-noise ratio `P |sum g W h|^2 / (1 + sum |g W|^2)`.
pub fn af_sinr(weights: &RelayWeights, ch: &ChannelSet, p: f64, direction: Direction) -> Result<f64> {
    check_single_antenna_terminals(ch)?;
    check_weights(weights, ch)?;
    let mut signal = Complex64::new(0.0, 0.0);
    let mut noise = 0.0;
    for (l, w) in ch.relays.iter().zip(&weights.w) {
        let (rx, tx) = match direction {
            Direction::T1to2 => (&l.g, &l.h),
            Direction::T2to1 => (&l.h_r, &l.g_r),
        };
        let rw = rx * w;
        signal += (&rw * tx)[(0, 0)];
        noise += rw.norm_squared();
    }
    Ok(p * signal.norm_sqr() / (1.0 + noise))
}

/// Relay transmit power: `(total, per relay)` with per relay
/// `P (|W h|^2 + |W g_r|^2) + |W|_F^2`.
pub fn relay_power(weights: &RelayWeights, ch: &ChannelSet, p: f64) -> Result<(f64, Vec<f64>)> {
    check_single_antenna_terminals(ch)?;
    check_weights(weights, ch)?;
    let per: Vec<f64> = ch
        .relays
        .iter()
        .zip(&weights.w)
        .map(|(l, w)| p * ((w * &l.h).norm_squared() + (w * &l.g_r).norm_squared()) + w.norm_squared())
        .collect();
    Ok((per.iter().sum(), per))
}

fn check_weights(weights: &RelayWeights, ch: &ChannelSet) -> Result<()> {
    let n = ch.dims.n;
    if weights.w.len() != ch.dims.k || weights.w.iter().any(|w| w.shape() != (n, n)) {
        return Err(Error::DimensionMismatch(format!(
            "expected {} relay weights of size {n}x{n}",
            ch.dims.k
        )));
    }
    Ok(())
}

/// Boundary point of the PSD region in multiplier direction `theta`.
struct BoundaryPoint {
    lambda: [f64; 2],
    /// null vector of `A + l1 C1 + l2 C2`
    u: CVector,
    /// `-u* C_i u`, positive when constraint `i` is satisfiable along `u`
    q: [f64; 2],
}

struct InnerSolver<'a> {
    model: &'a AfModel,
    gammas: [f64; 2],
    cmats: [CMatrix; 2],
    chol: Cholesky<Complex64, Dyn>,
    whitened: [CMatrix; 2],
}

impl<'a> InnerSolver<'a> {
    fn new(model: &'a AfModel, gammas: [f64; 2]) -> Self {
        let cmats = [model.constraint_matrix(0, gammas[0]), model.constraint_matrix(1, gammas[1])];
        let chol = Cholesky::new(model.power.clone()).expect("relay power form is positive definite");
        let l = chol.l();
        let whiten = |m: &CMatrix| {
            let y = l.solve_lower_triangular(m).expect("triangular solve");
            let z = l.solve_lower_triangular(&y.adjoint()).expect("triangular solve");
            z.adjoint()
        };
        let whitened = [whiten(&cmats[0]), whiten(&cmats[1])];
        Self { model, gammas, cmats, chol, whitened }
    }

    fn boundary(&self, theta: f64) -> Result<Option<BoundaryPoint>> {
        let (ct, st) = (theta.cos(), theta.sin());
        let e = (self.whitened[0].scale(ct) + self.whitened[1].scale(st)).scale(-1.0);
        let (vals, vecs) = hermitian_eigh(&e)?;
        let mu = vals[0];
        if !(mu > 1e-14 * (1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))) {
            // ray stays PSD forever: the dual is unbounded along it
            return Ok(None);
        }
        let v = vecs.column(0).clone_owned();
        let u = self.chol.l().adjoint().solve_upper_triangular(&v).expect("triangular solve");
        let u = u.unscale(u.norm());
        let q = [-AfModel::quad(&self.cmats[0], &u), -AfModel::quad(&self.cmats[1], &u)];
        Ok(Some(BoundaryPoint { lambda: [ct / mu, st / mu], u, q }))
    }

    fn stationarity(&self, lambda: [f64; 2]) -> CMatrix {
        &self.model.power + self.cmats[0].scale(lambda[0]) + self.cmats[1].scale(lambda[1])
    }

    /// Smallest scaling `s^2` of `u` meeting every active constraint.
    fn scale_for(&self, q: [f64; 2]) -> Option<f64> {
        let mut s2 = 0.0f64;
        for (&gamma, &qi) in self.gammas.iter().zip(&q) {
            if gamma > 0.0 {
                if !(qi > 0.0) {
                    return None;
                }
                s2 = s2.max(gamma / qi);
            }
        }
        Some(s2)
    }
}

/// Minimizes total relay power subject to `SINR12 >= gamma0` and
/// `SINR21 >= gamma1` (SINR as returned by [`af_sinr`]).
pub fn solve_min_power(ch: &ChannelSet, p: f64, gamma0: f64, gamma1: f64) -> Result<BeamformerSolution> {
    let model = AfModel::new(ch, p)?;
    solve_model(&model, gamma0, gamma1)
}

pub fn solve_model(model: &AfModel, gamma0: f64, gamma1: f64) -> Result<BeamformerSolution> {
    let gammas = [gamma0.max(0.0), gamma1.max(0.0)];
    if !gammas.iter().all(|g| g.is_finite()) {
        return Err(Error::Infeasible { gamma0, gamma1 });
    }
    let dim = model.dim();
    if gammas == [0.0, 0.0] {
        return Ok(finish(model, gammas, CVector::zeros(dim), [0.0, 0.0], 0.0, 0));
    }
    let solver = InnerSolver::new(model, gammas);
    let infeasible = || Error::Infeasible { gamma0, gamma1 };

    // single constraint: the boundary point on that axis is the optimum
    let single = |theta: f64| -> Result<BeamformerSolution> {
        let bp = solver.boundary(theta)?.ok_or_else(infeasible)?;
        let s2 = solver.scale_for(bp.q).ok_or_else(infeasible)?;
        let x = bp.u.scale(s2.sqrt());
        let res = (solver.stationarity(bp.lambda) * &x).norm() / x.norm();
        Ok(finish(model, gammas, x, bp.lambda, res, 1))
    };
    if gammas[1] == 0.0 {
        return single(0.0);
    }
    if gammas[0] == 0.0 {
        return single(FRAC_PI_2);
    }

    // angle of the outward normal (q1, q2) against the target (gamma0, gamma1)
    let target = gammas[1].atan2(gammas[0]);
    let normal_angle = |bp: &BoundaryPoint| bp.q[1].atan2(bp.q[0]);

    let lo_bp = solver.boundary(0.0)?.ok_or_else(infeasible)?;
    if normal_angle(&lo_bp) >= target {
        return single(0.0);
    }
    let hi_bp = solver.boundary(FRAC_PI_2)?.ok_or_else(infeasible)?;
    if normal_angle(&hi_bp) <= target {
        return single(FRAC_PI_2);
    }

    let (mut lo, mut hi) = (0.0f64, FRAC_PI_2);
    let (mut lo_bp, mut hi_bp) = (lo_bp, hi_bp);
    let mut iterations = 0;
    let mut best: Option<(CVector, [f64; 2], f64)> = None;
    while iterations < MAX_INNER_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let bp = solver.boundary(mid)?.ok_or_else(infeasible)?;
        if let Some(s2) = solver.scale_for(bp.q) {
            let r = [gammas[0] / bp.q[0], gammas[1] / bp.q[1]];
            let mismatch = (r[0] - r[1]).abs() / r[0].max(r[1]);
            if mismatch < 1e-13 {
                best = Some((bp.u.scale(s2.sqrt()), bp.lambda, mismatch));
                break;
            }
        }
        if normal_angle(&bp) < target {
            lo = mid;
            lo_bp = bp;
        } else {
            hi = mid;
            hi_bp = bp;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }

    let (x, lambda) = match best {
        Some((x, lambda, _)) => (x, lambda),
        None => {
            // Either the bracket collapsed on a kink of the PSD boundary (the
            // null space there is two-dimensional) or the tolerance was not
            // reached; both sides' null vectors span the candidate set.
            let lambda = [0.5 * (lo_bp.lambda[0] + hi_bp.lambda[0]), 0.5 * (lo_bp.lambda[1] + hi_bp.lambda[1])];
            let x = best_in_span(model, &solver, &lo_bp.u, &hi_bp.u).ok_or_else(infeasible)?;
            (x, lambda)
        }
    };
    let res = (solver.stationarity(lambda) * &x).norm() / x.norm();
    let sol = finish(model, gammas, x, lambda, res, iterations);
    if sol.kkt_residual > KKT_TOL {
        return Err(Error::DidNotConverge { iterations, residual: sol.kkt_residual });
    }
    Ok(sol)
}

/// Minimum-power feasible point in span{u, v}, by a refined grid over the
/// complex unit sphere modulo global phase.
fn best_in_span(model: &AfModel, solver: &InnerSolver<'_>, u: &CVector, v: &CVector) -> Option<CVector> {
    let eval = |t: f64, phi: f64| -> Option<(f64, CVector)> {
        let y = u.scale(t.cos()) + v.map(|z| z * Complex64::from_polar(t.sin(), phi));
        let y = y.unscale(y.norm());
        let q = [-AfModel::quad(&solver.cmats[0], &y), -AfModel::quad(&solver.cmats[1], &y)];
        let s2 = solver.scale_for(q)?;
        let x = y.scale(s2.sqrt());
        Some((model.total_power(&x), x))
    };
    let mut best: Option<(f64, f64, f64, CVector)> = None;
    let (mut t_lo, mut t_hi, mut p_lo, mut p_hi) = (0.0, FRAC_PI_2, 0.0, 2.0 * std::f64::consts::PI);
    for _ in 0..6 {
        let steps = 40;
        for a in 0..=steps {
            for b in 0..=steps {
                let t = t_lo + (t_hi - t_lo) * a as f64 / steps as f64;
                let phi = p_lo + (p_hi - p_lo) * b as f64 / steps as f64;
                if let Some((pw, x)) = eval(t, phi) {
                    if best.as_ref().is_none_or(|bst| pw < bst.0) {
                        best = Some((pw, t, phi, x));
                    }
                }
            }
        }
        let (_, t, phi, _) = best.as_ref()?;
        let (dt, dp) = ((t_hi - t_lo) / 10.0, (p_hi - p_lo) / 10.0);
        (t_lo, t_hi, p_lo, p_hi) = ((t - dt).max(0.0), (t + dt).min(FRAC_PI_2), phi - dp, phi + dp);
    }
    best.map(|b| b.3)
}

fn finish(model: &AfModel, gammas: [f64; 2], x: CVector, lambda: [f64; 2], residual: f64, iterations: usize) -> BeamformerSolution {
    let top = lambda[0].max(lambda[1]);
    let lambda = lambda.map(|l| if l <= MULTIPLIER_FLOOR * top { 0.0 } else { l });
    let per_relay_power = model.per_relay_power(&x);
    BeamformerSolution {
        weights: RelayWeights::from_vector(&x, model.k, model.n),
        sinr12: model.sinr(&x, 0),
        sinr21: model.sinr(&x, 1),
        total_power: per_relay_power.iter().sum(),
        per_relay_power,
        lambda1: lambda[0] * gammas[0],
        lambda2: lambda[1] * gammas[1],
        kkt_residual: if residual.is_finite() { residual } else { 0.0 },
        dual_value: lambda[0] * gammas[0] + lambda[1] * gammas[1],
        iterations,
        feasible: true,
    }
}

/// SINR needed for rate `r` bits under the two-phase pre-log.
pub fn sinr_for_rate(r: f64) -> f64 {
    (r / RATE_PREFACTOR).exp2() - 1.0
}

/// Rate in bits carried by `sinr` under the two-phase pre-log.
pub fn rate_for_sinr(sinr: f64) -> f64 {
    RATE_PREFACTOR * (1.0 + sinr).log2()
}

/// Largest one-way rate (the other direction ignored) under `power_config`.
pub fn one_way_max_rate(ch: &ChannelSet, power_config: &PowerConfig, direction: Direction) -> Result<f64> {
    let model = AfModel::new(ch, power_config.p)?;
    Ok(rate_for_sinr(model.max_sinr(direction_index(direction), total_budget(&model, power_config)).0))
}

fn direction_index(d: Direction) -> usize {
    match d {
        Direction::T1to2 => 0,
        Direction::T2to1 => 1,
    }
}

fn total_budget(model: &AfModel, pc: &PowerConfig) -> f64 {
    match pc.constraint_kind {
        ConstraintKind::SumAcrossRelays => pc.p_r,
        ConstraintKind::PerRelay => pc.p_r * model.k as f64,
    }
}

fn within_budget(sol: &BeamformerSolution, pc: &PowerConfig) -> bool {
    let tol = 1.0 + 1e-12;
    match pc.constraint_kind {
        ConstraintKind::SumAcrossRelays => sol.total_power <= pc.p_r * tol,
        ConstraintKind::PerRelay => sol.per_relay_power.iter().all(|&pk| pk <= pc.p_r * tol),
    }
}

/// Inner problem for sum rate `r_sum` split as `(beta, 1 - beta)`.
fn probe(model: &AfModel, beta: f64, r_sum: f64) -> Result<Option<BeamformerSolution>> {
    match solve_model(model, sinr_for_rate(beta * r_sum), sinr_for_rate((1.0 - beta) * r_sum)) {
        Ok(sol) => Ok(Some(sol)),
        Err(Error::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Largest sum rate `R` such that `(beta R, (1 - beta) R)` is achievable with AF.
///
/// `p` is the terminal power; the relay budget and its kind come from
/// `power_config` (its own `p` is ignored). Under a per-relay budget the
/// sum-power solution is checked relay by relay, which can under-report the
/// region.
pub fn rate_profile_solve(ch: &ChannelSet, power_config: &PowerConfig, p: f64, beta: f64) -> Result<(f64, BeamformerSolution)> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta must lie in [0, 1], got {beta}")));
    }
    let pc = PowerConfig { p, ..*power_config };
    let model = AfModel::new(ch, p)?;
    let budget = total_budget(&model, &pc);
    let r12_max = rate_for_sinr(model.max_sinr(0, budget).0);
    let r21_max = rate_for_sinr(model.max_sinr(1, budget).0);

    // no split can beat the one-way maxima
    let mut hi = match (beta > 0.0, beta < 1.0) {
        (true, true) => (r12_max / beta).min(r21_max / (1.0 - beta)),
        (true, false) => r12_max,
        (false, true) => r21_max,
        (false, false) => unreachable!(),
    };
    let zero = probe(&model, beta, 0.0)?.expect("zero targets are always feasible");
    if !(hi > 0.0) {
        return Ok((0.0, zero));
    }
    let mut lo = 0.0;
    let mut lo_sol = zero;
    if let Some(sol) = probe(&model, beta, hi)? {
        if within_budget(&sol, &pc) {
            return Ok((hi, sol));
        }
    }
    while hi - lo > OUTER_TOL_BITS {
        let mid = 0.5 * (lo + hi);
        match probe(&model, beta, mid)? {
            Some(sol) if within_budget(&sol, &pc) => {
                lo = mid;
                lo_sol = sol;
            }
            _ => hi = mid,
        }
    }
    Ok((lo, lo_sol))
}

/// Rate-profile samples of the AF region over `beta_grid`.
pub fn af_rate_region(ch: &ChannelSet, power_config: &PowerConfig, p: f64, beta_grid: &[f64]) -> Result<RateRegion> {
    let samples = beta_grid
        .iter()
        .map(|&beta| {
            let (r_sum, solution) = rate_profile_solve(ch, power_config, p, beta)?;
            Ok(RateSample { beta, r_sum, r12: beta * r_sum, r21: (1.0 - beta) * r_sum, solution })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateRegion { samples, power: PowerConfig { p, ..*power_config }, dims: ch.dims })
}

/// Stationarity matrix of the Lagrangian in the multiplier normalization of
/// [`BeamformerSolution`]; its product with the optimal weights vanishes.
pub fn stationarity_matrix(ch: &ChannelSet, p: f64, gamma0: f64, gamma1: f64, lambda1: f64, lambda2: f64) -> Result<CMatrix> {
    let model = AfModel::new(ch, p)?;
    let mut m = model.power.clone();
    for (d, (gamma, lambda)) in [(gamma0, lambda1), (gamma1, lambda2)].into_iter().enumerate() {
        if lambda > 0.0 && gamma > 0.0 {
            let a = &model.signal[d];
            m += model.noise[d].scale(lambda) - (a * a.adjoint()).scale(lambda * p / gamma);
        }
    }
    Ok(m)
}

/// Null-space direction of the stationarity matrix and its residual.
pub fn stationarity_null_direction(m: &CMatrix) -> Result<(CVector, f64)> {
    least_singular_direction(m)
}
