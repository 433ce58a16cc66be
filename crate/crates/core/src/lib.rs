//! Context-aware D2D link assignment in a single, fully loaded OFDMA cell.
//!
//! D2D pairs reuse uplink channels of incumbent cellular users. Each
//! (pair, channel) combination is scored by the interference model in
//! [`radio`] and by the mobility-driven completion probability in
//! [`consistency`]; [`matching`] assigns channels to pairs, and [`sim`] runs
//! seeded Monte Carlo sweeps over the whole pipeline.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod consistency;
pub mod matching;
pub mod radio;
pub mod scenario;
pub mod sim;

pub use config::{load_config, ConfigError, SimConfig};
pub use scenario::{generate_scenario, Scenario};

/// Fixed 17-significant-digit scientific notation; reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
