//! i.i.d. Rayleigh-fading channel realizations.
//!
//! Every draw is keyed on `(seed, draw_index)`: the ChaCha stream number is the
//! draw index, so a given realization never depends on which worker produced
//! it or in what order.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::CMatrix;

/// Antenna and relay counts of the K-relay network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkDims {
    /// Antennas at each terminal.
    #[serde(rename = "M")]
    pub m: usize,
    /// Antennas per relay.
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of relays.
    #[serde(rename = "K")]
    pub k: usize,
}

impl NetworkDims {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(Error::Config(format!("network dims must be >= 1, got M={m} N={n} K={k}")));
        }
        Ok(Self { m, n, k })
    }
}

/// Whether the relay budget `P_R` applies to the sum over relays or to each one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ConstraintKind {
    #[default]
    SumAcrossRelays,
    PerRelay,
}

/// Terminal power `p` and relay budget `p_r`, both linear SNRs (unit noise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub p: f64,
    pub p_r: f64,
    pub constraint_kind: ConstraintKind,
}

impl PowerConfig {
    pub fn new(p: f64, p_r: f64, constraint_kind: ConstraintKind) -> Result<Self> {
        if !(p > 0.0 && p.is_finite() && p_r > 0.0 && p_r.is_finite()) {
            return Err(Error::Config(format!("powers must be positive and finite, got P={p} P_R={p_r}")));
        }
        Ok(Self { p, p_r, constraint_kind })
    }

    pub fn sum(p: f64, p_r: f64) -> Self {
        Self { p, p_r, constraint_kind: ConstraintKind::SumAcrossRelays }
    }
}

/// Rates in bits per channel use for the two directions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePair {
    pub r12: f64,
    pub r21: f64,
}

/// Channels between the terminals and one relay.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayLinks {
    /// T1 -> relay, N x M.
    pub h: CMatrix,
    /// relay -> T1, M x N.
    pub h_r: CMatrix,
    /// relay -> T2, M x N.
    pub g: CMatrix,
    /// T2 -> relay, N x M.
    pub g_r: CMatrix,
}

/// One block-fading realization of the whole K-relay network.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub dims: NetworkDims,
    pub relays: Vec<RelayLinks>,
}

const MATRIX_NAMES: [&str; 4] = ["H", "Hr", "G", "Gr"];

impl ChannelSet {
    /// Builds a channel set from per-relay links, validating shapes.
    pub fn from_links(m: usize, n: usize, relays: Vec<RelayLinks>) -> Result<Self> {
        let dims = NetworkDims::new(m, n, relays.len())?;
        for (k, l) in relays.iter().enumerate() {
            let ok = l.h.shape() == (n, m) && l.h_r.shape() == (m, n) && l.g.shape() == (m, n) && l.g_r.shape() == (n, m);
            if !ok {
                return Err(Error::DimensionMismatch(format!("relay {k} links do not match M={m}, N={n}")));
            }
            let finite = [&l.h, &l.h_r, &l.g, &l.g_r].iter().all(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
            if !finite {
                return Err(Error::DegenerateChannel(format!("relay {k} has non-finite entries")));
            }
        }
        Ok(Self { dims, relays })
    }

    /// Single-antenna network from per-relay scalars `(h, h_r, g, g_r)`.
    pub fn scalar(links: &[(Complex64, Complex64, Complex64, Complex64)]) -> Result<Self> {
        let one = |z: Complex64| CMatrix::from_element(1, 1, z);
        let relays = links
            .iter()
            .map(|&(h, h_r, g, g_r)| RelayLinks { h: one(h), h_r: one(h_r), g: one(g), g_r: one(g_r) })
            .collect();
        Self::from_links(1, 1, relays)
    }

    /// Swaps the roles of T1 and T2 (H <-> G^r, G <-> H^r).
    pub fn swap_terminals(&self) -> Self {
        let relays = self
            .relays
            .iter()
            .map(|l| RelayLinks { h: l.g_r.clone(), h_r: l.g.clone(), g: l.h_r.clone(), g_r: l.h.clone() })
            .collect();
        Self { dims: self.dims, relays }
    }

    /// Multiplies every `G_k` and every `H_k^r` by the given complex factors.
    pub fn rotate_receive_links(&self, g_factor: Complex64, h_r_factor: Complex64) -> Self {
        let relays = self
            .relays
            .iter()
            .map(|l| RelayLinks {
                h: l.h.clone(),
                h_r: l.h_r.map(|z| z * h_r_factor),
                g: l.g.map(|z| z * g_factor),
                g_r: l.g_r.clone(),
            })
            .collect();
        Self { dims: self.dims, relays }
    }

    /// Multiplies all four channel families by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let relays = self
            .relays
            .iter()
            .map(|l| RelayLinks { h: l.h.scale(s), h_r: l.h_r.scale(s), g: l.g.scale(s), g_r: l.g_r.scale(s) })
            .collect();
        Self { dims: self.dims, relays }
    }

    /// Writes the realization as CSV rows `k,matrix_name,row,col,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,matrix_name,row,col,re,im")?;
        for (k, l) in self.relays.iter().enumerate() {
            for (name, mat) in MATRIX_NAMES.iter().zip([&l.h, &l.h_r, &l.g, &l.g_r]) {
                for col in 0..mat.ncols() {
                    for row in 0..mat.nrows() {
                        let z = mat[(row, col)];
                        writeln!(out, "{k},{name},{row},{col},{:e},{:e}", z.re, z.im)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads a realization written by [`ChannelSet::write_csv`].
    pub fn read_csv<R: BufRead>(input: R, m: usize, n: usize) -> Result<Self> {
        let mut relays: Vec<RelayLinks> = Vec::new();
        let blank = || RelayLinks {
            h: CMatrix::zeros(n, m),
            h_r: CMatrix::zeros(m, n),
            g: CMatrix::zeros(m, n),
            g_r: CMatrix::zeros(n, m),
        };
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("channel csv line {}: malformed row '{line}'", lineno + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let k: usize = f[0].parse().map_err(|_| bad())?;
            let row: usize = f[2].parse().map_err(|_| bad())?;
            let col: usize = f[3].parse().map_err(|_| bad())?;
            let z = Complex64::new(f[4].parse().map_err(|_| bad())?, f[5].parse().map_err(|_| bad())?);
            while relays.len() <= k {
                relays.push(blank());
            }
            let l = &mut relays[k];
            let mat = match f[1] {
                "H" => &mut l.h,
                "Hr" => &mut l.h_r,
                "G" => &mut l.g,
                "Gr" => &mut l.g_r,
                _ => return Err(bad()),
            };
            if row >= mat.nrows() || col >= mat.ncols() {
                return Err(bad());
            }
            mat[(row, col)] = z;
        }
        Self::from_links(m, n, relays)
    }
}

/// Single relay with a direct T1 <-> T2 path.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectChannelSet {
    pub m1: usize,
    pub m2: usize,
    pub mr: usize,
    /// T1 -> relay, mr x m1.
    pub h: CMatrix,
    /// relay -> T1, m1 x mr.
    pub h_r: CMatrix,
    /// relay -> T2, m2 x mr.
    pub g: CMatrix,
    /// T2 -> relay, mr x m2.
    pub g_r: CMatrix,
    /// T1 -> T2, m2 x m1.
    pub h12: CMatrix,
    /// T2 -> T1, m1 x m2.
    pub h12_r: CMatrix,
}

impl DirectChannelSet {
    /// Single-antenna instance from scalars `(h, h_r, g, g_r, h12, h12_r)`.
    pub fn scalar(h: Complex64, h_r: Complex64, g: Complex64, g_r: Complex64, h12: Complex64, h12_r: Complex64) -> Self {
        let one = |z: Complex64| CMatrix::from_element(1, 1, z);
        Self { m1: 1, m2: 1, mr: 1, h: one(h), h_r: one(h_r), g: one(g), g_r: one(g_r), h12: one(h12), h12_r: one(h12_r) }
    }

    /// Scales the relay -> terminal links (`H^r`, `G`) by `s`.
    pub fn with_relay_tx_gain(&self, s: f64) -> Self {
        Self { h_r: self.h_r.scale(s), g: self.g.scale(s), ..self.clone() }
    }

    /// Scales the terminal -> relay links (`H`, `G^r`) by `s`.
    pub fn with_relay_rx_gain(&self, s: f64) -> Self {
        Self { h: self.h.scale(s), g_r: self.g_r.scale(s), ..self.clone() }
    }

    /// Swaps the roles of T1 and T2.
    pub fn swap_terminals(&self) -> Self {
        Self {
            m1: self.m2,
            m2: self.m1,
            mr: self.mr,
            h: self.g_r.clone(),
            h_r: self.g.clone(),
            g: self.h_r.clone(),
            g_r: self.h.clone(),
            h12: self.h12_r.clone(),
            h12_r: self.h12.clone(),
        }
    }
}

/// Per-draw RNG: seeded by `seed`, stream selected by `draw_index`.
pub fn draw_rng(seed: u64, draw_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw_index);
    rng
}

/// One circularly-symmetric CN(0,1) sample.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0,1) entries, filled column-major.
pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| cn01(rng))
}

/// Draws all four channel families of the K-relay network.
pub fn draw_channels(dims: NetworkDims, rng_seed: u64, draw_index: u64) -> ChannelSet {
    let NetworkDims { m, n, k } = dims;
    let mut rng = draw_rng(rng_seed, draw_index);
    let hs: Vec<CMatrix> = (0..k).map(|_| cn_matrix(&mut rng, n, m)).collect();
    let hrs: Vec<CMatrix> = (0..k).map(|_| cn_matrix(&mut rng, m, n)).collect();
    let gs: Vec<CMatrix> = (0..k).map(|_| cn_matrix(&mut rng, m, n)).collect();
    let grs: Vec<CMatrix> = (0..k).map(|_| cn_matrix(&mut rng, n, m)).collect();
    let relays = hs
        .into_iter()
        .zip(hrs)
        .zip(gs)
        .zip(grs)
        .map(|(((h, h_r), g), g_r)| RelayLinks { h, h_r, g, g_r })
        .collect();
    ChannelSet { dims, relays }
}

/// Draws the single-relay network with direct paths.
pub fn draw_direct_channels(m1: usize, m2: usize, mr: usize, rng_seed: u64, draw_index: u64) -> DirectChannelSet {
    let mut rng = draw_rng(rng_seed, draw_index);
    let h = cn_matrix(&mut rng, mr, m1);
    let h_r = cn_matrix(&mut rng, m1, mr);
    let g = cn_matrix(&mut rng, m2, mr);
    let g_r = cn_matrix(&mut rng, mr, m2);
    let h12 = cn_matrix(&mut rng, m2, m1);
    let h12_r = cn_matrix(&mut rng, m1, m2);
    DirectChannelSet { m1, m2, mr, h, h_r, g, g_r, h12, h12_r }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let dims = NetworkDims::new(2, 3, 4).unwrap();
        let a = draw_channels(dims, 42, 9);
        let b = draw_channels(dims, 42, 9);
        assert_eq!(a, b);
        let c = draw_channels(dims, 42, 10);
        assert_ne!(a, c);
        assert_eq!(a.relays.len(), 4);
        assert_eq!(a.relays[0].h.shape(), (3, 2));
        assert_eq!(a.relays[0].h_r.shape(), (2, 3));
        assert_eq!(a.relays[0].g.shape(), (2, 3));
        assert_eq!(a.relays[0].g_r.shape(), (3, 2));

        let d1 = draw_direct_channels(1, 2, 3, 5, 0);
        assert_eq!(d1, draw_direct_channels(1, 2, 3, 5, 0));
        assert_ne!(d1, draw_direct_channels(1, 2, 3, 5, 1));
        assert_eq!(d1.h12.shape(), (2, 1));
        assert_eq!(d1.h.shape(), (3, 1));
        assert_eq!(d1.g.shape(), (2, 3));
    }

    #[test]
    fn scalar_direct_draw_has_six_independent_scalars() {
        let d = draw_direct_channels(1, 1, 1, 3, 0);
        let vals = [d.h[(0, 0)], d.h_r[(0, 0)], d.g[(0, 0)], d.g_r[(0, 0)], d.h12[(0, 0)], d.h12_r[(0, 0)]];
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert_ne!(vals[i], vals[j]);
            }
        }
    }

    // Law of large numbers at n = 1e5: the standard error of the mean of |h|^2
    // is 1/sqrt(1e5) ~ 0.003, so 0.02 is over six standard errors.
    #[test]
    fn cn01_moments() {
        let dims = NetworkDims::new(1, 1, 1).unwrap();
        let n = 100_000u64;
        let (mut mean, mut second, mut var_re, mut var_im) = (Complex64::new(0.0, 0.0), 0.0, 0.0, 0.0);
        for i in 0..n {
            let h = draw_channels(dims, 1234, i).relays[0].h[(0, 0)];
            mean += h;
            second += h.norm_sqr();
            var_re += h.re * h.re;
            var_im += h.im * h.im;
        }
        let nf = n as f64;
        assert!((mean / nf).norm() < 0.02);
        assert!((second / nf - 1.0).abs() < 0.02);
        assert!((var_re / nf - 0.5).abs() < 0.02);
        assert!((var_im / nf - 0.5).abs() < 0.02);

        let mut second_direct = 0.0;
        for i in 0..n {
            second_direct += draw_direct_channels(1, 1, 1, 99, i).h12[(0, 0)].norm_sqr();
        }
        assert!((second_direct / nf - 1.0).abs() < 0.02);
    }

    #[test]
    fn csv_dump_round_trips() {
        let ch = draw_channels(NetworkDims::new(2, 2, 3).unwrap(), 1, 2);
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let back = ChannelSet::read_csv(std::io::Cursor::new(buf), 2, 2).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn bad_shapes_rejected() {
        let l = RelayLinks { h: CMatrix::zeros(2, 1), h_r: CMatrix::zeros(1, 1), g: CMatrix::zeros(1, 1), g_r: CMatrix::zeros(1, 1) };
        assert!(matches!(ChannelSet::from_links(1, 1, vec![l]), Err(Error::DimensionMismatch(_))));
        assert!(NetworkDims::new(0, 1, 1).is_err());
        assert!(PowerConfig::new(0.0, 1.0, ConstraintKind::PerRelay).is_err());
    }
}
