//! Dual channel matching: each relay forwards
//! `sqrt(beta_k) (G_k* H_k* + H_k^r* G_k^r*) r_k`, matching both directions at once.

use rayon::prelude::*;

use crate::af_optimal::RelayWeights;
use crate::channel::{draw_channels, ChannelSet, ConstraintKind, NetworkDims, PowerConfig, RatePair};
use crate::error::{Error, Result};
use crate::numkernel::{c, hermitian_logdet2, CMatrix};

/// Matching matrices and their power scalings.
#[derive(Debug, Clone, PartialEq)]
pub struct DcmGains {
    pub f: Vec<CMatrix>,
    pub beta: Vec<f64>,
}

/// Ensemble constants of the large-K analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    /// `E{|F r|^2}`
    pub c1: f64,
    pub c1_stderr: f64,
    /// `E{(G F)(G F)*} = theta I`, from the diagonal average
    pub theta: f64,
    pub theta_stderr: f64,
    /// largest magnitude of the averaged off-diagonal entries
    pub theta_offdiag: f64,
}

/// `F_k = G_k* H_k* + H_k^r* G_k^r*` for every relay.
pub fn dcm_gains(ch: &ChannelSet) -> Vec<CMatrix> {
    ch.relays
        .iter()
        .map(|l| l.g.adjoint() * l.h.adjoint() + l.h_r.adjoint() * l.g_r.adjoint())
        .collect()
}

/// `Sigma_k = (P/M)(H_k H_k* + G_k^r G_k^r*) + I_N`.
fn receive_covariance(ch: &ChannelSet, k: usize, p: f64) -> CMatrix {
    let l = &ch.relays[k];
    let mut s = (&l.h * l.h.adjoint() + &l.g_r * l.g_r.adjoint()).scale(p / ch.dims.m as f64);
    for i in 0..ch.dims.n {
        s[(i, i)] += c(1.0);
    }
    s
}

/// Transmit power per unit `beta`: `tr(F_k Sigma_k F_k*)`.
fn unit_powers(ch: &ChannelSet, f: &[CMatrix], p: f64) -> Vec<f64> {
    f.iter()
        .enumerate()
        .map(|(k, fk)| (fk * receive_covariance(ch, k, p) * fk.adjoint()).trace().re)
        .collect()
}

/// Scalings that spend the relay budget exactly.
///
/// A relay whose matched output is identically zero gets `beta_k = 0`.
pub fn dcm_normalization(ch: &ChannelSet, power_config: &PowerConfig) -> Result<Vec<f64>> {
    let f = dcm_gains(ch);
    normalization(ch, &f, power_config)
}

fn normalization(ch: &ChannelSet, f: &[CMatrix], pc: &PowerConfig) -> Result<Vec<f64>> {
    if !(pc.p > 0.0) {
        return Err(Error::Config(format!("terminal power must be positive, got {}", pc.p)));
    }
    let unit = unit_powers(ch, f, pc.p);
    if unit.iter().all(|&u| u == 0.0) {
        return Err(Error::DegenerateChannel("all relay matching matrices vanish".into()));
    }
    Ok(match pc.constraint_kind {
        ConstraintKind::SumAcrossRelays => {
            let beta = pc.p_r / unit.iter().sum::<f64>();
            vec![beta; unit.len()]
        }
        ConstraintKind::PerRelay => unit.iter().map(|&u| if u > 0.0 { pc.p_r / u } else { 0.0 }).collect(),
    })
}

/// Matching matrices and scalings for `ch`.
pub fn dcm_design(ch: &ChannelSet, power_config: &PowerConfig) -> Result<DcmGains> {
    let f = dcm_gains(ch);
    let beta = normalization(ch, &f, power_config)?;
    Ok(DcmGains { f, beta })
}

/// Relay weights `sqrt(beta_k) F_k`, usable wherever AF weights are.
pub fn dcm_weights(ch: &ChannelSet, power_config: &PowerConfig) -> Result<RelayWeights> {
    let d = dcm_design(ch, power_config)?;
    Ok(RelayWeights { w: d.f.iter().zip(&d.beta).map(|(f, b)| f.scale(b.sqrt())).collect() })
}

/// Total relay transmit power `sum_k tr(W_k Sigma_k W_k*)` for weights `w`.
pub fn relay_transmit_power(ch: &ChannelSet, w: &RelayWeights, p: f64) -> f64 {
    w.w.iter()
        .enumerate()
        .map(|(k, wk)| (wk * receive_covariance(ch, k, p) * wk.adjoint()).trace().re)
        .sum()
}

/// Achievable rate pair with the two-phase pre-log of one half.
///
/// Channels whose matched outputs all vanish give `(0, 0)`.
pub fn dcm_rates(ch: &ChannelSet, power_config: &PowerConfig) -> Result<RatePair> {
    let d = match dcm_design(ch, power_config) {
        Ok(d) => d,
        Err(Error::DegenerateChannel(_)) => return Ok(RatePair::default()),
        Err(e) => return Err(e),
    };
    let m = ch.dims.m;
    let amp = (power_config.p / m as f64).sqrt();
    let mut a = CMatrix::zeros(m, m);
    let mut c_mat = CMatrix::zeros(m, m);
    let mut q12 = CMatrix::identity(m, m);
    let mut q21 = CMatrix::identity(m, m);
    for ((l, f), &beta) in ch.relays.iter().zip(&d.f).zip(&d.beta) {
        let gf = &l.g * f;
        let hf = &l.h_r * f;
        a += (&gf * &l.h).scale(amp * beta.sqrt());
        c_mat += (&hf * &l.g_r).scale(amp * beta.sqrt());
        q12 += (&gf * gf.adjoint()).scale(beta);
        q21 += (&hf * hf.adjoint()).scale(beta);
    }
    let rate = |sig: &CMatrix, q: &CMatrix| -> Result<f64> {
        let total = q + sig * sig.adjoint();
        Ok((0.5 * (hermitian_logdet2(&total)? - hermitian_logdet2(q)?)).max(0.0))
    };
    Ok(RatePair { r12: rate(&a, &q12)?, r21: rate(&c_mat, &q21)? })
}

/// Monte Carlo estimate of `c1 = E{|F r|^2}` and `theta` for one relay.
pub fn asymptotic_constants(dims: NetworkDims, p: f64, n_samples: usize, seed: u64) -> Result<AsymptoticConstants> {
    if n_samples < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let one = NetworkDims { k: 1, ..dims };
    let m = dims.m;
    let per_draw: Vec<(f64, CMatrix)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let ch = draw_channels(one, seed, i);
            let f = &dcm_gains(&ch)[0];
            let c1 = (f * receive_covariance(&ch, 0, p) * f.adjoint()).trace().re;
            let gf = &ch.relays[0].g * f;
            (c1, &gf * gf.adjoint())
        })
        .collect();

    let n = n_samples as f64;
    let mean_sd = |xs: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = xs.collect();
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (c1, c1_stderr) = mean_sd(&mut per_draw.iter().map(|(c1, _)| *c1));
    let (theta, theta_stderr) =
        mean_sd(&mut per_draw.iter().map(|(_, s)| (0..m).map(|i| s[(i, i)].re).sum::<f64>() / m as f64));
    let mut avg = CMatrix::zeros(m, m);
    for (_, s) in &per_draw {
        avg += s;
    }
    avg.unscale_mut(n);
    let mut theta_offdiag = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                theta_offdiag = theta_offdiag.max(avg[(i, j)].norm());
            }
        }
    }
    Ok(AsymptoticConstants { c1, c1_stderr, theta, theta_stderr, theta_offdiag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gains_trivial_cases() {
        let zero = z(0.0, 0.0);
        let ch = ChannelSet::scalar(&[(zero, zero, zero, zero)]).unwrap();
        assert_eq!(dcm_gains(&ch)[0][(0, 0)], zero);

        let (h, hr, g, gr) = (z(0.3, -1.2), z(0.7, 0.1), z(-0.4, 0.9), z(1.1, 0.5));
        let ch = ChannelSet::scalar(&[(h, hr, g, gr)]).unwrap();
        let expect = g.conj() * h.conj() + hr.conj() * gr.conj();
        assert!((dcm_gains(&ch)[0][(0, 0)] - expect).norm() < 1e-15);

        // reciprocal links: F = 2 (g h)*
        let ch = ChannelSet::scalar(&[(h, g, g, h)]).unwrap();
        assert!((dcm_gains(&ch)[0][(0, 0)] - (g * h).conj() * 2.0).norm() < 1e-15);
    }

    #[test]
    fn normalization_unit_example() {
        let one = z(1.0, 0.0);
        let ch = ChannelSet::scalar(&[(one, one, one, one)]).unwrap();
        // F = 2, Sigma = 10 * 2 + 1 = 21, tr = 4 * 21
        let beta = dcm_normalization(&ch, &PowerConfig::sum(10.0, 10.0)).unwrap();
        assert!((beta[0] - 10.0 / 84.0).abs() < 1e-15);
        let beta2 = dcm_normalization(&ch, &PowerConfig::sum(10.0, 20.0)).unwrap();
        assert!((beta2[0] - 2.0 * beta[0]).abs() < 1e-15);
    }

    #[test]
    fn per_relay_identical_relays_split_evenly() {
        let l = (z(0.5, 0.2), z(-0.3, 0.8), z(1.0, -0.1), z(0.2, 0.2));
        let ch = ChannelSet::scalar(&[l, l, l]).unwrap();
        let sum = dcm_normalization(&ch, &PowerConfig::sum(5.0, 6.0)).unwrap();
        let per = dcm_normalization(&ch, &PowerConfig::new(5.0, 2.0, ConstraintKind::PerRelay).unwrap()).unwrap();
        for (a, b) in sum.iter().zip(&per) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_channels_give_zero_rates() {
        let zero = z(0.0, 0.0);
        let ch = ChannelSet::scalar(&[(zero, zero, zero, zero); 2]).unwrap();
        assert!(matches!(dcm_normalization(&ch, &PowerConfig::sum(1.0, 1.0)), Err(Error::DegenerateChannel(_))));
        assert_eq!(dcm_rates(&ch, &PowerConfig::sum(1.0, 1.0)).unwrap(), RatePair::default());
    }

    #[test]
    fn scalar_rate_formula() {
        let (h, hr, g, gr) = (z(0.3, -1.2), z(0.7, 0.1), z(-0.4, 0.9), z(1.1, 0.5));
        let ch = ChannelSet::scalar(&[(h, hr, g, gr)]).unwrap();
        let (p, pr) = (10.0, 10.0);
        let f = g.conj() * h.conj() + hr.conj() * gr.conj();
        let sigma = p * (h.norm_sqr() + gr.norm_sqr()) + 1.0;
        let beta = pr / (f.norm_sqr() * sigma);
        let r12 = 0.5 * (1.0 + p * beta * (g * f * h).norm_sqr() / (1.0 + beta * (g * f).norm_sqr())).log2();
        let r21 = 0.5 * (1.0 + p * beta * (hr * f * gr).norm_sqr() / (1.0 + beta * (hr * f).norm_sqr())).log2();
        let got = dcm_rates(&ch, &PowerConfig::sum(p, pr)).unwrap();
        assert!((got.r12 - r12).abs() < 1e-12 && (got.r21 - r21).abs() < 1e-12);
    }

    #[test]
    fn power_is_spent_exactly() {
        for (m, n, k) in [(1, 1, 3), (2, 2, 4), (2, 3, 2)] {
            let ch = draw_channels(NetworkDims::new(m, n, k).unwrap(), 9, 4);
            let pc = PowerConfig::sum(3.0, 7.0);
            let w = dcm_weights(&ch, &pc).unwrap();
            assert!((relay_transmit_power(&ch, &w, 3.0) - 7.0).abs() < 1e-9 * 7.0);
        }
    }

    #[test]
    fn swapping_terminals_swaps_rates() {
        let ch = draw_channels(NetworkDims::new(2, 2, 3).unwrap(), 4, 0);
        let pc = PowerConfig::sum(10.0, 10.0);
        let a = dcm_rates(&ch, &pc).unwrap();
        let b = dcm_rates(&ch.swap_terminals(), &pc).unwrap();
        assert!((a.r12 - b.r21).abs() < 1e-12 && (a.r21 - b.r12).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_constants_zero_gain() {
        // c1 for P = 0 reduces to E|F|^2 = 2 at M = N = 1
        let k = asymptotic_constants(NetworkDims::new(1, 1, 1).unwrap(), 0.0, 20_000, 3).unwrap();
        assert!((k.c1 - 2.0).abs() < 4.0 * k.c1_stderr);
    }
}
