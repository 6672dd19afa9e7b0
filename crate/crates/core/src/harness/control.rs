//! Speed and steering laws standing in for the path-tracking controller.

use serde::{Deserialize, Serialize};

use crate::dynamics::{VehicleParams, VehicleState};
use crate::path::{wrap_angle, Path};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    /// Proportional speed gain, 1/s.
    pub kp: f64,
    /// Acceleration magnitude limit, m/s^2.
    pub max_accel: f64,
    /// Lookahead floor, m.
    pub lookahead_min: f64,
    /// Lookahead growth with speed, s.
    pub lookahead_time: f64,
    /// Steering limit, degrees.
    pub max_steer_deg: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            kp: 1.0,
            max_accel: 3.0,
            lookahead_min: 3.0,
            lookahead_time: 0.4,
            max_steer_deg: 30.0,
        }
    }
}

/// `ax = clamp(kp * (scale * v_desired - v_current), -max_accel, max_accel)`.
pub fn speed_control(v_desired: f64, scale: f64, v_current: f64, kp: f64, max_accel: f64) -> f64 {
    (kp * (scale * v_desired - v_current)).clamp(-max_accel, max_accel)
}

/// Pure-pursuit steering toward the path point a speed-proportional
/// distance ahead of the vehicle, geometry taken from the rear axle.
/// Positive output steers right.
pub fn steer_control(
    state: &VehicleState,
    path: &Path,
    params: &VehicleParams,
    cfg: &ControlConfig,
) -> f64 {
    let lookahead = cfg.lookahead_min.max(cfg.lookahead_time * state.ux);
    let target = path.point_at(state.s + lookahead);
    let (sin_p, cos_p) = state.psi.sin_cos();
    let rear_n = state.north - params.cg_to_rear * cos_p;
    let rear_e = state.east - params.cg_to_rear * sin_p;
    let (dn, de) = (target.north - rear_n, target.east - rear_e);
    let dist = dn.hypot(de);
    let max = cfg.max_steer_deg.to_radians();
    if dist < 1e-6 {
        return 0.0;
    }
    let alpha = wrap_angle(de.atan2(dn) - state.psi);
    let steer = (2.0 * params.wheelbase() * alpha.sin() / dist).atan();
    steer.clamp(-max, max)
}
