//! Object and end-effector poses.
//!
//! A pose is a rigid transform restricted to translation plus rotation about
//! the world z axis: `(x, y, z, theta)`. That is the uncertain-state
//! parameterization for tabletop objects (they slide and spin on a surface but
//! do not tip), and it doubles as the end-effector start pose of a guarded
//! move. `theta` is kept in `(-pi, pi]`; belief-space arithmetic elsewhere
//! treats it as an unwrapped linear coordinate, so normalization happens here
//! and only here.

use nalgebra::{Point3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

/// Rigid transform: rotation by `theta` about z, then translation by
/// `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Yaw in radians, normalized to `(-pi, pi]`.
    pub theta: f64,
}

/// Wrap an angle into `(-pi, pi]`. Angles already in range pass through
/// bit-exactly, so composing with the identity pose stays exact.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > std::f64::consts::PI || theta <= -std::f64::consts::PI {
        // rem_euclid maps to [0, 2pi); shift the upper half down.
        let wrapped = (theta + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI);
        let out = wrapped - std::f64::consts::PI;
        // rem_euclid can land exactly on -pi for inputs like theta = -pi - 2pi*k.
        if out <= -std::f64::consts::PI {
            out + 2.0 * std::f64::consts::PI
        } else {
            out
        }
    } else {
        theta
    }
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            z,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Pose {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            theta: 0.0,
        }
    }

    /// Pose as the 4-vector `(x, y, z, theta)` used by belief-space
    /// statistics.
    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.z, self.theta)
    }

    pub fn from_vector(v: Vector4<f64>) -> Self {
        Pose::new(v[0], v[1], v[2], v[3])
    }

    /// Composition `self * other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.z + other.z,
            self.theta + other.theta,
        )
    }

    /// Inverse transform, satisfying `p.compose(&p.inverse()) == identity`
    /// up to floating point.
    pub fn inverse(&self) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            -(c * self.x + s * self.y),
            -(-s * self.x + c * self.y),
            -self.z,
            -self.theta,
        )
    }

    /// Map a point from the frame this pose defines into the world frame.
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        let (s, c) = self.theta.sin_cos();
        Point3::new(
            self.x + c * p.x - s * p.y,
            self.y + s * p.x + c * p.y,
            self.z + p.z,
        )
    }

    /// Map a world point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point3::new(c * dx + s * dy, -s * dx + c * dy, p.z - self.z)
    }

    /// Rotate a direction by this pose (translation does not apply).
    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.theta.sin_cos();
        Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
    }

    /// Rotate a world direction into this pose's local frame.
    pub fn inverse_rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.theta.sin_cos();
        Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }
}
