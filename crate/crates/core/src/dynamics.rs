//! Lumped single-track vehicle model with brush-tire lateral forces.
//!
//! Sign conventions: heading `psi` is measured from north toward east, so a
//! positive yaw rate `r` turns the vehicle clockwise seen from above (to the
//! right). Lateral body velocity `uy` is positive to the right and a positive
//! steer angle turns right. Path deviation `e` is positive to the left.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path::{NorthEast, Path};

/// Front share of braking force.
pub const FRONT_BRAKE_FRACTION: f64 = 0.7;

const GRAVITY: f64 = 9.81;

/// Below this speed the lateral states relax toward the kinematic
/// (no-slip) solution; above `KINEMATIC_BLEND_HIGH` the tire model is used
/// unmodified. The slip-angle expressions are singular at standstill.
const KINEMATIC_BLEND_LOW: f64 = 1.0;
const KINEMATIC_BLEND_HIGH: f64 = 2.0;
const KINEMATIC_RELAX_TIME: f64 = 0.05;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid vehicle parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("time step {0} s outside (0, 0.1]")]
    InvalidStep(f64),
    #[error("tire normal load and cornering stiffness must be positive")]
    InvalidTire,
    #[error("failed to read vehicle config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse vehicle config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

/// Continuous vehicle state `[Uy r Ux psi N E s e]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// Lateral body velocity, m/s (positive right).
    pub uy: f64,
    /// Yaw rate, rad/s.
    pub r: f64,
    /// Longitudinal body velocity, m/s.
    pub ux: f64,
    /// Heading, rad from north toward east.
    pub psi: f64,
    pub north: f64,
    pub east: f64,
    /// Distance along the path, m.
    pub s: f64,
    /// Lateral path deviation, m (positive left).
    pub e: f64,
}

impl VehicleState {
    /// Vehicle at rest at the start of `path`, aligned with it.
    pub fn at_path_start(path: &Path) -> Self {
        let p = path.points()[0];
        Self {
            psi: path.heading_at(0.0),
            north: p.north,
            east: p.east,
            ..Self::default()
        }
    }

    pub fn position(&self) -> NorthEast {
        NorthEast::new(self.north, self.east)
    }

    fn is_finite(&self) -> bool {
        [
            self.uy, self.r, self.ux, self.psi, self.north, self.east, self.s, self.e,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Vehicle parameters in SI units.
///
/// Loaded from a TOML key/value file; every key is optional and falls back
/// to the mid-size sedan defaults:
///
/// ```toml
/// mass = 1500.0               # kg
/// yaw_inertia = 2250.0        # kg m^2
/// cg_to_front = 1.2           # m
/// cg_to_rear = 1.5            # m
/// front_cornering_stiffness = 100000.0  # N/rad
/// rear_cornering_stiffness = 110000.0   # N/rad
/// friction = 0.9
/// front_brake_fraction = 0.7
/// front_wheel_drive = true
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub mass: f64,
    pub yaw_inertia: f64,
    pub cg_to_front: f64,
    pub cg_to_rear: f64,
    pub front_cornering_stiffness: f64,
    pub rear_cornering_stiffness: f64,
    pub friction: f64,
    pub front_brake_fraction: f64,
    pub front_wheel_drive: bool,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1500.0,
            yaw_inertia: 2250.0,
            cg_to_front: 1.2,
            cg_to_rear: 1.5,
            front_cornering_stiffness: 100_000.0,
            rear_cornering_stiffness: 110_000.0,
            friction: 0.9,
            front_brake_fraction: FRONT_BRAKE_FRACTION,
            front_wheel_drive: true,
        }
    }
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.cg_to_front + self.cg_to_rear
    }

    /// Static axle loads `(front, rear)` from the CG position.
    pub fn normal_loads(&self) -> (f64, f64) {
        let w = self.mass * GRAVITY;
        let l = self.wheelbase();
        (w * self.cg_to_rear / l, w * self.cg_to_front / l)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [
            ("mass", self.mass),
            ("yaw_inertia", self.yaw_inertia),
            ("cg_to_front", self.cg_to_front),
            ("cg_to_rear", self.cg_to_rear),
            ("front_cornering_stiffness", self.front_cornering_stiffness),
            ("rear_cornering_stiffness", self.rear_cornering_stiffness),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidParam { name, value });
            }
        }
        if !(self.friction > 0.0 && self.friction <= 2.0) {
            return Err(DynamicsError::InvalidParam {
                name: "friction",
                value: self.friction,
            });
        }
        if !(0.0..=1.0).contains(&self.front_brake_fraction) {
            return Err(DynamicsError::InvalidParam {
                name: "front_brake_fraction",
                value: self.front_brake_fraction,
            });
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DynamicsError> {
        let params: Self = toml::from_str(text).map_err(|source| DynamicsError::Parse {
            path: "<string>".into(),
            source,
        })?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &FsPath) -> Result<Self, DynamicsError> {
        let text = std::fs::read_to_string(path).map_err(|source| DynamicsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let params: Self = toml::from_str(&text).map_err(|source| DynamicsError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        params.validate()?;
        Ok(params)
    }
}

/// Fiala brush-tire lateral force with equal static and sliding friction.
///
/// Returns a force opposing the slip angle, saturating at
/// `friction * normal_load` beyond the full-slide angle.
pub fn brush_tire_lateral(
    slip_angle: f64,
    normal_load: f64,
    cornering_stiffness: f64,
    friction: f64,
) -> Result<f64, DynamicsError> {
    if !slip_angle.is_finite() {
        return Err(DynamicsError::NonFinite("slip_angle"));
    }
    if !(normal_load.is_finite() && cornering_stiffness.is_finite() && friction.is_finite()) {
        return Err(DynamicsError::NonFinite("tire parameters"));
    }
    if normal_load <= 0.0 || cornering_stiffness <= 0.0 || friction <= 0.0 {
        return Err(DynamicsError::InvalidTire);
    }
    let mu_fz = friction * normal_load;
    let slide = (3.0 * mu_fz / cornering_stiffness).atan();
    if slip_angle.abs() >= slide {
        return Ok(-mu_fz * slip_angle.signum());
    }
    let t = slip_angle.tan();
    let c = cornering_stiffness;
    let force = -c * t + c * c / (3.0 * mu_fz) * t.abs() * t
        - c * c * c / (27.0 * mu_fz * mu_fz) * t * t * t;
    Ok(force.clamp(-mu_fz, mu_fz))
}

/// Splits a longitudinal acceleration command into `(front, rear)` tire forces.
///
/// Drive force goes to the driven axle; braking is split by
/// `front_brake_fraction`, so with front-wheel drive the rear force is never
/// positive.
pub fn allocate_longitudinal(
    ax_command: f64,
    params: &VehicleParams,
) -> Result<(f64, f64), DynamicsError> {
    if !ax_command.is_finite() {
        return Err(DynamicsError::NonFinite("ax_command"));
    }
    let total = params.mass * ax_command;
    Ok(if ax_command >= 0.0 {
        if params.front_wheel_drive {
            (total, 0.0)
        } else {
            (0.0, total)
        }
    } else {
        let front = params.front_brake_fraction * total;
        (front, total - front)
    })
}

/// Time derivative of `[uy, r, ux, psi, north, east]`.
fn derivatives(
    x: &[f64; 6],
    steer: f64,
    fx: (f64, f64),
    params: &VehicleParams,
    loads: (f64, f64),
) -> Result<[f64; 6], DynamicsError> {
    let [uy, r, ux, psi, _, _] = *x;
    let (a, b) = (params.cg_to_front, params.cg_to_rear);
    let m = params.mass;

    let (sin_d, cos_d) = steer.sin_cos();
    let (fxf, fxr) = fx;

    let blend = ((ux - KINEMATIC_BLEND_LOW) / (KINEMATIC_BLEND_HIGH - KINEMATIC_BLEND_LOW))
        .clamp(0.0, 1.0);

    let (mut duy, mut dr) = (0.0, 0.0);
    let mut fyf = 0.0;
    if blend > 0.0 {
        let alpha_f = ((uy + a * r) / ux).atan() - steer;
        let alpha_r = ((uy - b * r) / ux).atan();
        fyf = brush_tire_lateral(
            alpha_f,
            loads.0,
            params.front_cornering_stiffness,
            params.friction,
        )?;
        let fyr = brush_tire_lateral(
            alpha_r,
            loads.1,
            params.rear_cornering_stiffness,
            params.friction,
        )?;
        duy = (fyf * cos_d + fyr + fxf * sin_d) / m - r * ux;
        dr = (a * (fyf * cos_d + fxf * sin_d) - b * fyr) / params.yaw_inertia;
    }
    if blend < 1.0 {
        let r_kin = ux * steer.tan() / params.wheelbase();
        let uy_kin = b * r_kin;
        let duy_kin = (uy_kin - uy) / KINEMATIC_RELAX_TIME;
        let dr_kin = (r_kin - r) / KINEMATIC_RELAX_TIME;
        duy = blend * duy + (1.0 - blend) * duy_kin;
        dr = blend * dr + (1.0 - blend) * dr_kin;
        fyf *= blend;
    }
    let dux = (fxf * cos_d - fyf * sin_d + fxr) / m + r * uy;
    let (sin_p, cos_p) = psi.sin_cos();
    Ok([
        duy,
        dr,
        dux,
        r,
        ux * cos_p - uy * sin_p,
        ux * sin_p + uy * cos_p,
    ])
}

/// Outcome of one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: VehicleState,
    /// The vehicle projected beyond either end of the path.
    pub off_path: bool,
}

/// Advances the vehicle one fixed step with classic fourth-order Runge-Kutta,
/// holding steer and acceleration constant over the step, then re-projects
/// onto `path`. Longitudinal speed is clamped at zero.
pub fn step_dynamics(
    state: &VehicleState,
    steer_angle: f64,
    ax_command: f64,
    dt: f64,
    params: &VehicleParams,
    path: &Path,
) -> Result<StepOutcome, DynamicsError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    if !state.is_finite() {
        return Err(DynamicsError::NonFinite("state"));
    }
    if !steer_angle.is_finite() {
        return Err(DynamicsError::NonFinite("steer_angle"));
    }
    let fx = allocate_longitudinal(ax_command, params)?;
    let loads = params.normal_loads();

    let x0 = [
        state.uy, state.r, state.ux, state.psi, state.north, state.east,
    ];
    // A stopped vehicle that is still being told to brake stays put.
    let fx = if state.ux <= 0.0 && ax_command < 0.0 {
        (0.0, 0.0)
    } else {
        fx
    };
    let k1 = derivatives(&x0, steer_angle, fx, params, loads)?;
    let k2 = derivatives(&offset(&x0, &k1, dt / 2.0), steer_angle, fx, params, loads)?;
    let k3 = derivatives(&offset(&x0, &k2, dt / 2.0), steer_angle, fx, params, loads)?;
    let k4 = derivatives(&offset(&x0, &k3, dt), steer_angle, fx, params, loads)?;
    let mut x = x0;
    for i in 0..6 {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    let mut next = VehicleState {
        uy: x[0],
        r: x[1],
        ux: x[2],
        psi: x[3],
        north: x[4],
        east: x[5],
        s: state.s,
        e: state.e,
    };
    if next.ux < 0.0 {
        next.ux = 0.0;
    }
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite("integrated state"));
    }

    let window = 2.0 + 0.2 * (state.ux.abs() + state.uy.abs());
    let proj = path.project_near(next.position(), state.s - window, state.s + window);
    next.s = proj.s.max(state.s);
    next.e = proj.e;
    Ok(StepOutcome {
        state: next,
        off_path: proj.clamped,
    })
}

fn offset(x: &[f64; 6], k: &[f64; 6], h: f64) -> [f64; 6] {
    std::array::from_fn(|i| x[i] + h * k[i])
}
