//! The total-reward objective: piecewise-linear penalties summed over
//! collision probability, fuel, and orbital-element deviations.
//!
//! Each component contributes a two-slope penalty of its magnitude: a shallow
//! slope below the component threshold (-1 exactly at the threshold) and a
//! nine-times-steeper slope above it, so crossing a requirement dominates the
//! score.

use serde::{Deserialize, Serialize};

use crate::session::Deviations;

/// Thresholds and slope scales for the total reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Total collision probability threshold.
    pub collision_probability_threshold: f64,
    /// Semi-major axis deviation threshold, m.
    pub dev_a_threshold: f64,
    /// Eccentricity deviation threshold.
    pub dev_e_threshold: f64,
    /// Inclination deviation threshold, rad.
    pub dev_i_threshold: f64,
    /// Ascending-node deviation threshold, rad.
    pub dev_raan_threshold: f64,
    /// Argument-of-periapsis deviation threshold, rad.
    pub dev_argp_threshold: f64,
    /// Fuel (total delta-v) threshold, m/s.
    pub fuel_threshold: f64,
    /// Penalty slope scale below the threshold (penalty -scale at threshold).
    pub below_slope_scale: f64,
    /// Penalty slope scale above the threshold.
    pub above_slope_scale: f64,
    /// When true, mean-anomaly deviation is penalized too (off by default:
    /// the deviation is reported but carries no requirement).
    pub penalize_mean_anomaly: bool,
    /// Threshold used only when `penalize_mean_anomaly` is set, rad.
    pub dev_mean_anomaly_threshold: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            collision_probability_threshold: 1e-4,
            dev_a_threshold: 200.0,
            dev_e_threshold: 0.01,
            dev_i_threshold: 0.01,
            dev_raan_threshold: 0.01,
            dev_argp_threshold: 0.01,
            fuel_threshold: 1.0,
            below_slope_scale: 1.0,
            above_slope_scale: 9.0,
            penalize_mean_anomaly: false,
            dev_mean_anomaly_threshold: 0.01,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let thresholds = [
            self.collision_probability_threshold,
            self.dev_a_threshold,
            self.dev_e_threshold,
            self.dev_i_threshold,
            self.dev_raan_threshold,
            self.dev_argp_threshold,
            self.fuel_threshold,
            self.dev_mean_anomaly_threshold,
        ];
        if thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(crate::Error::InvalidInput(
                "reward thresholds must be positive".into(),
            ));
        }
        if !(self.below_slope_scale > 0.0) || !(self.above_slope_scale > 0.0) {
            return Err(crate::Error::InvalidInput(
                "reward slope scales must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Component penalty with this config's slope scales.
    pub fn component(&self, value: f64, threshold: f64) -> f64 {
        component_reward_scaled(
            value,
            threshold,
            self.below_slope_scale,
            self.above_slope_scale,
        )
    }
}

/// Penalty of one reward component with the default slope scales (1 below the
/// threshold, 9 above), continuous at the threshold and monotone
/// non-increasing in the value.
pub fn component_reward(value: f64, threshold: f64) -> f64 {
    component_reward_scaled(value, threshold, 1.0, 9.0)
}

/// Two-slope piecewise-linear penalty: -below_scale * value/threshold up to
/// the threshold, then an `above_scale`-steep continuation.
pub fn component_reward_scaled(
    value: f64,
    threshold: f64,
    below_scale: f64,
    above_scale: f64,
) -> f64 {
    let ratio = value / threshold;
    if ratio <= 1.0 {
        -below_scale * ratio
    } else {
        -below_scale - above_scale * (ratio - 1.0)
    }
}

/// Per-component penalties and their sum (the Total Reward, <= 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub collision_probability: f64,
    pub fuel: f64,
    pub dev_a: f64,
    pub dev_e: f64,
    pub dev_i: f64,
    pub dev_raan: f64,
    pub dev_argp: f64,
    /// Zero unless mean-anomaly penalization is enabled.
    pub dev_mean_anomaly: f64,
    /// Sum of all components.
    pub total: f64,
}

/// Scores a session outcome: penalties on the total collision probability,
/// the fuel consumption, and the absolute element deviations at the window
/// end. Mean anomaly is excluded unless configured otherwise.
pub fn total_reward(
    total_probability: f64,
    fuel: f64,
    devs: &Deviations,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let collision_probability =
        cfg.component(total_probability, cfg.collision_probability_threshold);
    let fuel_penalty = cfg.component(fuel, cfg.fuel_threshold);
    let dev_a = cfg.component(devs.a.abs(), cfg.dev_a_threshold);
    let dev_e = cfg.component(devs.e.abs(), cfg.dev_e_threshold);
    let dev_i = cfg.component(devs.i.abs(), cfg.dev_i_threshold);
    let dev_raan = cfg.component(devs.raan.abs(), cfg.dev_raan_threshold);
    let dev_argp = cfg.component(devs.argp.abs(), cfg.dev_argp_threshold);
    let dev_mean_anomaly = if cfg.penalize_mean_anomaly {
        cfg.component(devs.mean_anomaly.abs(), cfg.dev_mean_anomaly_threshold)
    } else {
        0.0
    };
    let total = collision_probability
        + fuel_penalty
        + dev_a
        + dev_e
        + dev_i
        + dev_raan
        + dev_argp
        + dev_mean_anomaly;
    RewardBreakdown {
        collision_probability,
        fuel: fuel_penalty,
        dev_a,
        dev_e,
        dev_i,
        dev_raan,
        dev_argp,
        dev_mean_anomaly,
        total,
    }
}
