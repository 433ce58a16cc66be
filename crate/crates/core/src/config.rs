//! Simulation configuration and its on-disk `key = value` format.
//!
//! The file is flat TOML: one `key = value` line per field, `#` comments,
//! `demand_range = [min, max]`. Every key is optional; an empty file yields
//! [`SimConfig::default`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

/// Parameters of one single-cell world plus solver knobs.
///
/// Distances are in units of the cell radius, speeds in cell radii per
/// second, powers in watts, demands in bits and bandwidth in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub cell_radius: f64,
    /// Orthogonal uplink channels, one incumbent cellular user each.
    pub num_channels: usize,
    pub num_d2d_users: usize,
    pub v_max: f64,
    /// `[min, max]` transaction size in bits.
    pub demand_range: [f64; 2],
    pub bandwidth_per_channel: f64,
    pub noise_power: f64,
    /// Minimum SINR the base station must keep on a reused channel.
    pub gamma: f64,
    /// Minimum SINR at a D2D receiver.
    pub alpha: f64,
    /// A link is usable only when its consistency probability is strictly above this.
    pub p_threshold: f64,
    pub pathloss_constant: f64,
    pub pathloss_exponent: f64,
    pub cellular_tx_power: f64,
    /// Hardware ceiling on D2D transmit power; defaults to ten times `cellular_tx_power`.
    pub device_max_power: Option<f64>,
    /// Longest D2D separation considered when enumerating pairs. Default `0.1 * cell_radius`.
    pub max_pair_distance: Option<f64>,
    /// Rayleigh (exponential power) slow fading on the direct D2D gain.
    pub fading_enabled: bool,
    /// Observation window in seconds. Caps the interaction time used for
    /// scoring (co-moving pairs would otherwise score infinitely) and is the
    /// period over which D2D throughput is averaged.
    pub session_horizon: f64,
    pub max_outer_iterations: usize,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cell_radius: 1.0,
            num_channels: 100,
            num_d2d_users: 100,
            v_max: 4.0,
            demand_range: [1.0e6, 1.0e7],
            bandwidth_per_channel: 1.0e6,
            noise_power: 1.0e-2,
            gamma: 10.0,
            alpha: 2.0,
            p_threshold: 0.5,
            pathloss_constant: 1.0,
            pathloss_exponent: 2.0,
            cellular_tx_power: 1.0,
            device_max_power: None,
            max_pair_distance: None,
            fading_enabled: true,
            session_horizon: 1.0,
            max_outer_iterations: 100,
            rng_seed: 1,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SimConfig is always representable as TOML")
    }

    pub fn device_max_power(&self) -> f64 {
        self.device_max_power.unwrap_or(10.0 * self.cellular_tx_power)
    }

    pub fn max_pair_distance(&self) -> f64 {
        self.max_pair_distance.unwrap_or(0.1 * self.cell_radius)
    }

    pub fn demand_min(&self) -> f64 {
        self.demand_range[0]
    }

    pub fn demand_max(&self) -> f64 {
        self.demand_range[1]
    }

    /// Checks every field invariant; the error names the first offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("must be finite and > 0, got {v}")))
            }
        }

        positive("cell_radius", self.cell_radius)?;
        if !(self.v_max.is_finite() && self.v_max >= 0.0) {
            return Err(ConfigError::invalid(
                "v_max",
                format!("must be >= 0, got {}", self.v_max),
            ));
        }
        let [lo, hi] = self.demand_range;
        positive("demand_range", lo)?;
        if !(hi.is_finite() && lo <= hi) {
            return Err(ConfigError::invalid(
                "demand_range",
                format!("min must not exceed max, got [{lo}, {hi}]"),
            ));
        }
        positive("bandwidth_per_channel", self.bandwidth_per_channel)?;
        positive("noise_power", self.noise_power)?;
        positive("gamma", self.gamma)?;
        positive("alpha", self.alpha)?;
        if !(self.p_threshold > 0.0 && self.p_threshold < 1.0) {
            return Err(ConfigError::invalid(
                "p_threshold",
                format!("must lie strictly inside (0, 1), got {}", self.p_threshold),
            ));
        }
        positive("pathloss_constant", self.pathloss_constant)?;
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent >= 1.0) {
            return Err(ConfigError::invalid(
                "pathloss_exponent",
                format!("must be >= 1, got {}", self.pathloss_exponent),
            ));
        }
        positive("cellular_tx_power", self.cellular_tx_power)?;
        if let Some(p) = self.device_max_power {
            positive("device_max_power", p)?;
        }
        if let Some(d) = self.max_pair_distance {
            positive("max_pair_distance", d)?;
        }
        positive("session_horizon", self.session_horizon)?;
        if self.max_outer_iterations == 0 {
            return Err(ConfigError::invalid("max_outer_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    SimConfig::from_toml_str(&text)
}
