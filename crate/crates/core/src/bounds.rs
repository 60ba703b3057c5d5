//! Cut-set outer bounds for the two-phase protocol family with time split `alpha`.

use crate::channel::{ChannelSet, RatePair};
use crate::error::{Error, Result};
use crate::numkernel::{hermitian_eigvals, hermitian_logdet2, CMatrix};

/// Eigenvalues at or below this are ignored by the multiple-access bound.
pub const EIG_FLOOR: f64 = 1e-12;

/// Per-`alpha` broadcast and multiple-access cut values in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSetBound {
    pub alpha_grid: Vec<f64>,
    pub bc12: Vec<f64>,
    pub bc21: Vec<f64>,
    pub mac12: Vec<f64>,
    pub mac21: Vec<f64>,
}

impl CutSetBound {
    /// `(min(bc12, mac12), min(bc21, mac21))` at grid index `i`.
    pub fn combined(&self, i: usize) -> RatePair {
        RatePair { r12: self.bc12[i].min(self.mac12[i]), r21: self.bc21[i].min(self.mac21[i]) }
    }

    /// Whether `(r12, r21)` lies in the union of the per-`alpha` rectangles.
    pub fn contains(&self, r12: f64, r21: f64, tol: f64) -> bool {
        (0..self.alpha_grid.len()).any(|i| {
            let c = self.combined(i);
            r12 <= c.r12 + tol && r21 <= c.r21 + tol
        })
    }

    /// Largest `r21` allowed together with `r12` (negative if none).
    pub fn envelope(&self, r12: f64) -> f64 {
        (0..self.alpha_grid.len())
            .map(|i| self.combined(i))
            .filter(|c| r12 <= c.r12)
            .map(|c| c.r21)
            .fold(-1.0, f64::max)
    }
}

/// Uniform 21-point grid on `[0.05, 0.95]`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..21).map(|i| (5.0 + 4.5 * i as f64) / 100.0).collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn gram_sum<'a>(m: usize, mats: impl Iterator<Item = &'a CMatrix>, scale: f64) -> CMatrix {
    let mut s = CMatrix::identity(m, m);
    for x in mats {
        s += (x.adjoint() * x).scale(scale);
    }
    s
}

/// `alpha log2 det(I + (P/M) sum H_k* H_k)` and the same with `G_k^r`.
pub fn broadcast_bound(ch: &ChannelSet, p: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let m = ch.dims.m;
    let s = p / m as f64;
    let bc12 = hermitian_logdet2(&gram_sum(m, ch.relays.iter().map(|l| &l.h), s))?;
    let bc21 = hermitian_logdet2(&gram_sum(m, ch.relays.iter().map(|l| &l.g_r), s))?;
    Ok((alpha * bc12, alpha * bc21))
}

/// Water level `nu` with `sum max(0, nu - 1/lambda) = p_r`.
pub fn waterfill(eigs: &[f64], p_r: f64) -> Result<f64> {
    if !(p_r >= 0.0) {
        return Err(Error::Config(format!("power budget must be non-negative, got {p_r}")));
    }
    let mut inv: Vec<f64> = eigs.iter().filter(|&&l| l > 0.0).map(|l| 1.0 / l).collect();
    if inv.is_empty() {
        return Err(Error::NoPositiveEigenvalue);
    }
    inv.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for n in 1..=inv.len() {
        acc += inv[n - 1];
        let nu = (p_r + acc) / n as f64;
        if n == inv.len() || nu <= inv[n] {
            return Ok(nu);
        }
    }
    unreachable!()
}

/// Eigenvalues of `(1/K) sum X_k X_k*` above [`EIG_FLOOR`].
fn stacked_eigs<'a>(m: usize, k: usize, mats: impl Iterator<Item = &'a CMatrix>) -> Result<Vec<f64>> {
    let mut s = CMatrix::zeros(m, m);
    for x in mats {
        s += x * x.adjoint();
    }
    s.unscale_mut(k as f64);
    Ok(hermitian_eigvals(&s)?.into_iter().filter(|&l| l > EIG_FLOOR).collect())
}

fn mac_value(eigs: &[f64], k: usize, p_r: f64) -> Result<f64> {
    if eigs.is_empty() {
        return Ok(0.0);
    }
    let nu = waterfill(eigs, p_r)?;
    Ok(eigs.iter().map(|&l| (k as f64 * l * nu).log2().max(0.0)).sum())
}

/// `(1 - alpha) sum_l max(0, log2(K lambda_l nu))` with `lambda_l` the
/// eigenvalues of `Phi Phi*`, `Phi = K^-1/2 [G_1 ... G_K]` (and `H_k^r` for
/// the reverse direction).
pub fn mac_bound(ch: &ChannelSet, p_r: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let (m, k) = (ch.dims.m, ch.dims.k);
    let e12 = stacked_eigs(m, k, ch.relays.iter().map(|l| &l.g))?;
    let e21 = stacked_eigs(m, k, ch.relays.iter().map(|l| &l.h_r))?;
    Ok(((1.0 - alpha) * mac_value(&e12, k, p_r)?, (1.0 - alpha) * mac_value(&e21, k, p_r)?))
}

/// Both cuts over `alpha_grid`.
pub fn cutset_region(ch: &ChannelSet, p: f64, p_r: f64, alpha_grid: &[f64]) -> Result<CutSetBound> {
    let (m, k) = (ch.dims.m, ch.dims.k);
    let s = p / m as f64;
    let bc12 = hermitian_logdet2(&gram_sum(m, ch.relays.iter().map(|l| &l.h), s))?;
    let bc21 = hermitian_logdet2(&gram_sum(m, ch.relays.iter().map(|l| &l.g_r), s))?;
    let mac12 = mac_value(&stacked_eigs(m, k, ch.relays.iter().map(|l| &l.g))?, k, p_r)?;
    let mac21 = mac_value(&stacked_eigs(m, k, ch.relays.iter().map(|l| &l.h_r))?, k, p_r)?;
    for &a in alpha_grid {
        check_alpha(a)?;
    }
    Ok(CutSetBound {
        alpha_grid: alpha_grid.to_vec(),
        bc12: alpha_grid.iter().map(|a| a * bc12).collect(),
        bc21: alpha_grid.iter().map(|a| a * bc21).collect(),
        mac12: alpha_grid.iter().map(|a| (1.0 - a) * mac12).collect(),
        mac21: alpha_grid.iter().map(|a| (1.0 - a) * mac21).collect(),
    })
}
