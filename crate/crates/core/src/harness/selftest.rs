use num_complex::Complex64;

use crate::af_optimal::solve_min_power;
use crate::bounds::{broadcast_bound, mac_bound, waterfill};
use crate::channel::{ChannelSet, DirectChannelSet, PowerConfig};
use crate::dcm::dcm_normalization;
use crate::dmt::{dmt_upper_full, fit_power_law, l_quantities};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn close(name: &'static str, got: Option<f64>, want: f64, tol: f64) -> Check {
    match got {
        Some(g) => Check { name, passed: (g - want).abs() <= tol * want.abs().max(1.0), detail: format!("got {g:.12}, want {want:.12}") },
        None => Check { name, passed: false, detail: "computation failed".into() },
    }
}

/// Closed-form oracle checks over every module.
pub fn run_selftest() -> Vec<Check> {
    let one = Complex64::new(1.0, 0.0);
    let unit = ChannelSet::scalar(&[(one, one, one, one)]).expect("valid scalar channel");
    let mut out = vec![
        close("min power, one relay", solve_min_power(&unit, 10.0, 1.0, 1.0).ok().map(|s| s.total_power), 21.0 / 9.0, 1e-9),
        close("matching scale, one relay", dcm_normalization(&unit, &PowerConfig::sum(10.0, 10.0)).ok().map(|b| b[0]), 10.0 / 84.0, 1e-12),
        close("broadcast cut, scalar", broadcast_bound(&unit, 10.0, 0.5).ok().map(|b| b.0), 0.5 * 11f64.log2(), 1e-12),
        close("multiple-access cut, scalar", mac_bound(&unit, 10.0, 0.5).ok().map(|b| b.0), 0.5 * 11f64.log2(), 1e-12),
        close("water level, one level", waterfill(&[2.0], 3.0).ok(), 3.5, 1e-15),
        close("water level, two equal levels", waterfill(&[1.0, 1.0], 2.0).ok(), 2.0, 1e-15),
        close("water level, one active of two", waterfill(&[4.0, 1.0], 0.5).ok(), 0.75, 1e-15),
        close("tradeoff ceiling at r = 0", dmt_upper_full(1, 1, 1, 0.0).ok().map(|d| d.0), 2.0, 0.0),
        close("tradeoff ceiling, asymmetric", dmt_upper_full(2, 1, 1, 0.5).ok().map(|d| d.0), 1.25, 1e-15),
    ];
    let dch = DirectChannelSet::scalar(one, one, one, one, one, one);
    let l = l_quantities(&dch, 10.0, 0.0).ok();
    out.push(close("joint determinant, unit links", l.map(|l| l.l1_r2), 21.0, 1e-9));
    out.push(close("direct determinant, unit links", l.map(|l| l.l12), 11.0, 1e-12));
    let synthetic: Vec<(f64, f64, f64)> = [5.0, 10.0, 15.0, 20.0].iter().map(|&s: &f64| (s, 0.2 * 10f64.powf(-2.0 * s / 10.0), 1.0)).collect();
    out.push(close("exponent fit, exact power law", fit_power_law(&synthetic).ok().map(|f| f.exponent), 2.0, 1e-6));
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
