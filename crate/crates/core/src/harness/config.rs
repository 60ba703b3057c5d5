use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::default_alpha_grid;
use crate::channel::{ConstraintKind, NetworkDims, PowerConfig};
use crate::dmt::{default_t_grid, DmtDims, Duplex, DEFAULT_RATE_FLOOR_BITS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateRegion,
    Scaling,
    Dmt,
}

/// Network shape. Relay experiments use `M`, `N`, `K`; outage experiments
/// use `m1`, `m2`, `mr` and `duplex`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplex: Option<Duplex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDb {
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    #[serde(rename = "P_R_dB", default)]
    pub p_r_db: f64,
    #[serde(default)]
    pub constraint_kind: ConstraintKind,
}

impl Default for PowerDb {
    fn default() -> Self {
        Self { p_db: 10.0, p_r_db: 10.0, constraint_kind: ConstraintKind::SumAcrossRelays }
    }
}

/// Strategy families for outage experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Cf,
    Upper,
    Lower,
}

impl StrategyName {
    /// Numeric code written to the `strategy` column.
    pub fn code(self) -> f64 {
        match self {
            StrategyName::Cf => 0.0,
            StrategyName::Upper => 1.0,
            StrategyName::Lower => 2.0,
        }
    }
}

/// One experiment, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dims: DimsConfig,
    #[serde(default)]
    pub power: PowerDb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(rename = "K_list", default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_grid_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<StrategyName>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_floor_bits: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("dims.{name} is required for this experiment")))
}

fn non_empty<T>(v: &[T], name: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

fn finite(v: &[f64], name: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn network_dims(&self) -> Result<NetworkDims> {
        NetworkDims::new(need(self.dims.m, "M")?, need(self.dims.n, "N")?, self.dims.k.unwrap_or(1))
    }

    pub fn dmt_dims(&self) -> Result<DmtDims> {
        DmtDims::new(
            need(self.dims.m1, "m1")?,
            need(self.dims.m2, "m2")?,
            need(self.dims.mr, "mr")?,
            self.dims.duplex.unwrap_or(Duplex::Full),
        )
    }

    pub fn power_config(&self) -> Result<PowerConfig> {
        if !(self.power.p_db.is_finite() && self.power.p_r_db.is_finite()) {
            return Err(Error::Config("power levels must be finite".into()));
        }
        PowerConfig::new(db_to_linear(self.power.p_db), db_to_linear(self.power.p_r_db), self.power.constraint_kind)
    }

    /// Copy with every optional field filled in and checked; this is what
    /// the runners consume and what is echoed into output metadata.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        self.power_config()?;
        match c.experiment {
            ExperimentKind::RateRegion => {
                let dims = c.network_dims()?;
                c.dims.k = Some(dims.k);
                c.draws.get_or_insert(500);
                c.beta_grid.get_or_insert_with(|| (0..17).map(|i| i as f64 / 16.0).collect());
                c.alpha_grid.get_or_insert_with(default_alpha_grid);
                let betas = c.beta_grid.as_deref().unwrap_or_default();
                non_empty(betas, "beta_grid")?;
                finite(betas, "beta_grid")?;
                if betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
                    return Err(Error::Config("beta_grid values must lie in [0, 1]".into()));
                }
            }
            ExperimentKind::Scaling => {
                c.network_dims()?;
                c.draws.get_or_insert(2000);
                let ks = c.k_list.get_or_insert_with(|| vec![8, 16, 32, 64, 128]);
                non_empty(ks, "K_list")?;
                if ks.contains(&0) {
                    return Err(Error::Config("K_list entries must be positive".into()));
                }
            }
            ExperimentKind::Dmt => {
                let dims = c.dmt_dims()?;
                c.dims.duplex = Some(dims.duplex);
                c.draws.get_or_insert(if dims.is_scalar() { 1_000_000 } else { 100_000 });
                c.snr_grid_db.get_or_insert_with(|| vec![5.0, 10.0, 15.0, 20.0]);
                c.r_grid.get_or_insert_with(|| vec![(0.0, 0.0)]);
                c.strategies.get_or_insert_with(|| vec![StrategyName::Cf, StrategyName::Upper]);
                c.rate_floor_bits.get_or_insert(DEFAULT_RATE_FLOOR_BITS);
                if dims.duplex == Duplex::Half {
                    c.t_grid.get_or_insert_with(default_t_grid);
                    non_empty(c.t_grid.as_deref().unwrap_or_default(), "t_grid")?;
                } else if c.strategies.as_deref().unwrap_or_default().contains(&StrategyName::Lower) {
                    return Err(Error::Config("strategy \"lower\" needs half duplex".into()));
                }
                let snr = c.snr_grid_db.as_deref().unwrap_or_default();
                non_empty(snr, "snr_grid_db")?;
                finite(snr, "snr_grid_db")?;
                non_empty(c.r_grid.as_deref().unwrap_or_default(), "r_grid")?;
                non_empty(c.strategies.as_deref().unwrap_or_default(), "strategies")?;
            }
        }
        if let Some(a) = &c.alpha_grid {
            non_empty(a, "alpha_grid")?;
            finite(a, "alpha_grid")?;
            if a.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::Config("alpha_grid values must lie in [0, 1]".into()));
            }
        }
        if c.draws == Some(0) {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"rate_region","dims":{"M":1,"N":1,"K":2},
                "power":{"P_dB":10,"P_R_dB":10,"constraint_kind":"SumAcrossRelays"},"seed":7}"#,
        )
        .unwrap();
        let r = cfg.resolved().unwrap();
        assert_eq!(r.draws, Some(500));
        assert_eq!(r.beta_grid.as_ref().unwrap().len(), 17);
        assert_eq!(r.alpha_grid.as_ref().unwrap().len(), 21);
        assert!((r.power_config().unwrap().p - 10.0).abs() < 1e-12);
        // the echoed form parses back to itself
        assert_eq!(ExperimentConfig::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"experiment":"rate_region","dims":{"N":1}}"#,
            r#"{"experiment":"scaling","dims":{"M":1,"N":1},"K_list":[]}"#,
            r#"{"experiment":"dmt","dims":{"m1":1,"m2":1,"mr":1},"snr_grid_db":[]}"#,
            r#"{"experiment":"rate_region","dims":{"M":1,"N":1},"draws":0}"#,
            r#"{"experiment":"rate_region","dims":{"M":1,"N":1},"beta_grid":[1.5]}"#,
            r#"{"experiment":"dmt","dims":{"m1":1,"m2":1,"mr":1},"strategies":["lower"]}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad).and_then(|c| c.resolved()), Err(Error::Config(_))), "{bad}");
        }
        assert!(ExperimentConfig::from_json(r#"{"experiment":"nope","dims":{}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"dmt","dims":{},"bogus":1}"#).is_err());
    }
}
