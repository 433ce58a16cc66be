//! Uplink-reuse interference model.
//!
//! A D2D pair reusing channel `i` interferes only with the base station, and
//! the incumbent on channel `i` interferes only with the D2D receiver. The
//! D2D transmitter always runs at the highest power that keeps the base
//! station's SINR at or above `gamma`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::config::SimConfig;
use crate::scenario::UserId;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RadioError {
    #[error("path loss undefined at distance {0}")]
    Distance(f64),
    #[error("link infeasible: D2D power cap is zero")]
    Infeasible,
}

/// Linear power gain, always `> 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChannelGain(f64);

impl ChannelGain {
    pub fn new(value: f64) -> Option<Self> {
        (value.is_finite() && value > 0.0).then_some(ChannelGain(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Single-slope path loss `g = K / d^lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub constant: f64,
    pub exponent: f64,
}

impl PathLoss {
    pub fn from_config(cfg: &SimConfig) -> Self {
        PathLoss {
            constant: cfg.pathloss_constant,
            exponent: cfg.pathloss_exponent,
        }
    }

    /// `K / d^lambda`, times `fading` when given.
    pub fn gain(&self, distance: f64, fading: Option<f64>) -> Result<ChannelGain, RadioError> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(RadioError::Distance(distance));
        }
        let g = self.constant / distance.powf(self.exponent) * fading.unwrap_or(1.0);
        ChannelGain::new(g).ok_or(RadioError::Distance(distance))
    }
}

/// Frozen slow-fading factors, one per ordered D2D link and run.
///
/// Each factor is an independent exponential(1) draw keyed by
/// `(seed, tx, rx)`, so it is the same no matter in which order links are
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FadingField {
    seed: u64,
    enabled: bool,
}

impl FadingField {
    pub fn new(seed: u64, enabled: bool) -> Self {
        FadingField { seed, enabled }
    }

    pub fn from_config(cfg: &SimConfig) -> Self {
        FadingField::new(cfg.rng_seed, cfg.fading_enabled)
    }

    pub fn factor(&self, tx: UserId, rx: UserId) -> Option<f64> {
        if !self.enabled {
            return None;
        }
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(b"fading\0\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(((tx.0 as u64) << 32) | rx.0 as u64);
        let f: f64 = Exp1.sample(&mut rng);
        // Exp1 can return exactly 0 with vanishing probability; the gain must stay positive.
        Some(f.max(f64::MIN_POSITIVE))
    }
}

/// SINR at the base station on a channel shared by cellular user and D2D transmitter.
pub fn bs_sinr(p_c: f64, g_cb: ChannelGain, p_d: f64, g_db: ChannelGain, n0: f64) -> f64 {
    g_cb.0 * p_c / (n0 + g_db.0 * p_d)
}

/// Largest D2D transmit power keeping [`bs_sinr`] `>= gamma`, clamped to `[0, p_dev_max]`.
///
/// The closed form is nudged down by a few ulps if rounding would otherwise
/// leave the base station a hair below `gamma`.
pub fn d2d_power_cap(p_c: f64, g_cb: ChannelGain, g_db: ChannelGain, gamma: f64, n0: f64, p_dev_max: f64) -> f64 {
    let raw = (g_cb.0 * p_c / gamma - n0) / g_db.0;
    if !(raw > 0.0) {
        return 0.0;
    }
    let mut cap = raw.min(p_dev_max);
    while cap > 0.0 && bs_sinr(p_c, g_cb, cap, g_db, n0) < gamma {
        cap = cap.next_down();
    }
    cap.max(0.0)
}

/// SINR at the D2D receiver, interfered by the incumbent of the shared channel.
pub fn d2d_sinr(p_d: f64, g_d: ChannelGain, p_c: f64, g_cd: ChannelGain, n0: f64) -> f64 {
    g_d.0 * p_d / (n0 + g_cd.0 * p_c)
}

/// Shannon rate in bits per second.
pub fn rate(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

/// Largest D2D separation at which a transmitter at `p_cap` still reaches
/// `alpha` at its receiver, using the unfaded path loss for the direct link.
pub fn coverage_radius(
    p_cap: f64,
    p_c: f64,
    g_cd: ChannelGain,
    n0: f64,
    alpha: f64,
    path_loss: &PathLoss,
) -> Result<f64, RadioError> {
    if !(p_cap > 0.0) {
        return Err(RadioError::Infeasible);
    }
    let r = (path_loss.constant * p_cap / (alpha * (n0 + g_cd.0 * p_c))).powf(1.0 / path_loss.exponent);
    Ok(r)
}

/// The four gains one (pair, channel) combination depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    /// incumbent -> base station
    pub cell_to_bs: ChannelGain,
    /// D2D transmitter -> base station
    pub d2d_to_bs: ChannelGain,
    /// D2D transmitter -> D2D receiver
    pub direct: ChannelGain,
    /// incumbent -> D2D receiver
    pub cell_to_d2d: ChannelGain,
}

/// Radio state of a D2D pair reusing one channel at its power cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRadio {
    pub p_d2d_max: f64,
    pub sinr_bs: f64,
    pub sinr_d2d: f64,
    pub rate: f64,
    /// Zero when the power cap is zero.
    pub coverage_radius: f64,
}

impl LinkRadio {
    pub fn evaluate(gains: &LinkGains, p_c: f64, cfg: &SimConfig) -> Self {
        let n0 = cfg.noise_power;
        let p_d2d_max = d2d_power_cap(
            p_c,
            gains.cell_to_bs,
            gains.d2d_to_bs,
            cfg.gamma,
            n0,
            cfg.device_max_power(),
        );
        let sinr_bs = bs_sinr(p_c, gains.cell_to_bs, p_d2d_max, gains.d2d_to_bs, n0);
        let sinr_d2d = d2d_sinr(p_d2d_max, gains.direct, p_c, gains.cell_to_d2d, n0);
        let coverage_radius = coverage_radius(
            p_d2d_max,
            p_c,
            gains.cell_to_d2d,
            n0,
            cfg.alpha,
            &PathLoss::from_config(cfg),
        )
        .unwrap_or(0.0);
        LinkRadio {
            p_d2d_max,
            sinr_bs,
            sinr_d2d,
            rate: rate(sinr_d2d, cfg.bandwidth_per_channel),
            coverage_radius,
        }
    }

    /// Both SINR constraints hold and the transmitter may emit at all.
    pub fn meets_sinr_constraints(&self, gamma: f64, alpha: f64) -> bool {
        self.p_d2d_max > 0.0 && self.sinr_bs >= gamma && self.sinr_d2d >= alpha
    }
}
