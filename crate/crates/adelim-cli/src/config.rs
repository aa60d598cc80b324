//! Run configuration, read from a TOML file and echoed into every output.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Filled in from the subcommand; a value in the file is overwritten.
    pub command: String,
    pub seed: u64,
    /// PSD tolerance for the CP, Lindblad and positivity verdicts.
    pub tol: f64,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub out: Option<String>,
    pub d_scan: DScanConfig,
    pub jc: JcConfig,
    pub exact_master: ExactMasterConfig,
    pub gauge_umax: GaugeUmaxConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 7,
            tol: 1e-10,
            jobs: 0,
            out: None,
            d_scan: DScanConfig::default(),
            jc: JcConfig::default(),
            exact_master: ExactMasterConfig::default(),
            gauge_umax: GaugeUmaxConfig::default(),
        }
    }
}

/// Qutrit `D` map over `(Omega, Delta)`, all rates in units of `kappa`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DScanConfig {
    pub chi_over_kappa: f64,
    /// Shifts are `chi * chi_ratios`; three entries.
    pub chi_ratios: Vec<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    pub svg: Option<String>,
}

impl Default for DScanConfig {
    fn default() -> Self {
        Self {
            chi_over_kappa: 0.1,
            chi_ratios: vec![0.0, 1.0, 2.0],
            omega_min: -3.0,
            omega_max: 3.0,
            omega_points: 121,
            delta_min: -3.0,
            delta_max: 3.0,
            delta_points: 121,
            svg: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JcConfig {
    pub g: f64,
    pub gamma: f64,
    pub delta_a: f64,
    pub n_th: f64,
    pub n_max: usize,
    /// Times (units of `1/gamma`) at which the propagator spectrum is tested.
    pub wpg_times: Vec<f64>,
    /// Repeat the engine run at `2 n_max` and report the drift.
    pub check_drift: bool,
}

impl Default for JcConfig {
    fn default() -> Self {
        Self {
            g: 0.05,
            gamma: 1.0,
            delta_a: 0.0,
            n_th: 1.0,
            n_max: 40,
            wpg_times: vec![0.1, 1.0, 5.0, 10.0, 100.0],
            check_drift: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactMasterConfig {
    pub d: usize,
    pub chi_over_kappa: f64,
    pub omega_over_kappa: f64,
    pub delta_over_kappa: f64,
    /// Step of the finite-difference log derivative, `kappa dt`.
    pub kappa_dt: f64,
    pub t_max: f64,
    pub t_step: f64,
}

impl Default for ExactMasterConfig {
    fn default() -> Self {
        Self {
            d: 3,
            chi_over_kappa: 0.1,
            omega_over_kappa: 0.5,
            delta_over_kappa: 0.5,
            kappa_dt: 1e-2,
            t_max: 20.0,
            t_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeUmaxConfig {
    pub d: usize,
    pub chi_over_kappa: Vec<f64>,
    pub omega_over_kappa: f64,
    pub delta_over_kappa: f64,
    pub samples: usize,
    pub u_tol: f64,
}

impl Default for GaugeUmaxConfig {
    fn default() -> Self {
        Self {
            d: 3,
            chi_over_kappa: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
            omega_over_kappa: 0.5,
            delta_over_kappa: -0.5,
            samples: 2000,
            u_tol: 1e-7,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.command = "jc-report".into();
        c.out = Some("x.csv".into());
        let back: RunConfig = toml::from_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = toml::from_str("seed = 3\n[jc]\nn_th = 0.5\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.jc.n_th, 0.5);
        assert_eq!(c.jc.n_max, 40);
        assert_eq!(c.d_scan, DScanConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sead = 3\n").is_err());
    }
}
