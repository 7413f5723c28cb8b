//! Unicycle agents driven through a reference point ahead of the axle.

use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Saturation {
    pub v_max: f64,
    pub omega_max: f64,
}

/// Linearizing map from a desired reference-point velocity to `(v, omega)`.
pub fn feedback_linearize(
    theta: f64,
    u: [f64; 2],
    handle: f64,
    saturation: Option<Saturation>,
) -> Result<(f64, f64)> {
    if !(handle > 0.0) {
        return Err(FormationError::Configuration(format!(
            "unicycle handle distance must be positive, got {handle}"
        )));
    }
    let (s, c) = theta.sin_cos();
    let mut v = c * u[0] + s * u[1];
    let mut w = (-s * u[0] + c * u[1]) / handle;
    if let Some(sat) = saturation {
        v = v.clamp(-sat.v_max, sat.v_max);
        w = w.clamp(-sat.omega_max, sat.omega_max);
    }
    Ok((v, w))
}

/// Reference point `(x + l cos theta, y + l sin theta)`.
pub fn reference_point(pose: [f64; 3], handle: f64) -> [f64; 2] {
    [pose[0] + handle * pose[2].cos(), pose[1] + handle * pose[2].sin()]
}

/// Pose derivative for inputs `(v, omega)`.
pub fn pose_rate(theta: f64, v: f64, w: f64) -> [f64; 3] {
    [v * theta.cos(), v * theta.sin(), w]
}

/// Velocity of the reference point for inputs `(v, omega)`.
pub fn reference_velocity(theta: f64, v: f64, w: f64, handle: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [v * c - handle * w * s, v * s + handle * w * c]
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}
