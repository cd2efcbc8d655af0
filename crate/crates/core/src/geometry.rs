//! Vector and SO(3) primitives used by every other module.
//!
//! Rotations are stored as plain 3x3 matrices because all the force and
//! torque maps in this crate are matrix-native; integration drift is handled
//! by explicit re-orthonormalization rather than by a quaternion
//! representation.

use nalgebra::{Matrix3, Unit, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type UnitVec3 = Unit<Vector3<f64>>;

/// Anchor separations below this are treated as coincident points.
pub const EPS_GEOM: f64 = 1e-9;

/// Tolerance on `R^T R = I` and `det R = 1` for a valid rotation.
pub const ROTATION_TOL: f64 = 1e-9;

/// Skew-symmetric matrix of `v`, so that `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Unit vector from anchor `bj` toward anchor `bi`: `(bi - bj) / |bi - bj|`.
///
/// Antisymmetric in its arguments. Fails with [`Error::CoincidentAnchors`]
/// when the two points are closer than [`EPS_GEOM`].
pub fn unit_between(bi: &Vec3, bj: &Vec3) -> Result<UnitVec3> {
    let diff = bi - bj;
    let norm = diff.norm();
    if norm <= EPS_GEOM {
        return Err(Error::CoincidentAnchors {
            i: 0,
            j: 0,
            separation: norm,
        });
    }
    Ok(Unit::new_unchecked(diff / norm))
}

/// Rotation matrix in SO(3).
///
/// The invariants (`R^T R = I`, `det R = +1`) are maintained by construction:
/// instances come from the exponential map, Euler angles, or explicit
/// re-orthonormalization of a nearby matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: Mat3,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { m: Mat3::identity() }
    }

    /// Wraps a matrix that is already known to be a rotation.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation { m }
    }

    /// Exponential map: Rodrigues' rotation formula for the axis-angle
    /// vector `w` (angle `|w|` about `w / |w|`).
    pub fn exp(w: &Vec3) -> Self {
        let theta = w.norm();
        let s = skew(w);
        let s2 = s * s;
        let m = if theta < 1e-8 {
            // Second-order Taylor expansion; remainder is O(theta^3) < 1e-24.
            Mat3::identity() + s + s2 * 0.5
        } else {
            let a = theta.sin() / theta;
            let b = (1.0 - theta.cos()) / (theta * theta);
            Mat3::identity() + s * a + s2 * b
        };
        Rotation { m }
    }

    /// Builds `Rz(yaw) * Ry(pitch) * Rx(roll)` from angles in radians.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        let rx = Rotation::exp(&(Vec3::x() * roll));
        let ry = Rotation::exp(&(Vec3::y() * pitch));
        let rz = Rotation::exp(&(Vec3::z() * yaw));
        rz * ry * rx
    }

    /// Extracts `(roll, pitch, yaw)` such that
    /// `self == Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn to_rpy(&self) -> (f64, f64, f64) {
        let m = &self.m;
        let sp = -m[(2, 0)];
        if sp.abs() < 1.0 - 1e-12 {
            let pitch = sp.asin();
            let roll = m[(2, 1)].atan2(m[(2, 2)]);
            let yaw = m[(1, 0)].atan2(m[(0, 0)]);
            (roll, pitch, yaw)
        } else {
            // Gimbal lock: pitch = +-pi/2, only the roll/yaw combination is
            // observable; report it all as roll.
            let pitch = std::f64::consts::FRAC_PI_2.copysign(sp);
            let roll = (sp.signum() * m[(0, 1)]).atan2(m[(1, 1)]);
            (roll, pitch, 0.0)
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn transpose(&self) -> Mat3 {
        self.m.transpose()
    }

    /// Rotates a vector from the frame this rotation maps from (body) into
    /// the frame it maps to (world).
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.m * v
    }

    /// Inverse rotation of a vector (world into body).
    pub fn inverse_rotate(&self, v: &Vec3) -> Vec3 {
        self.m.tr_mul(v)
    }

    /// Orthonormality and determinant defect, for invariant checks.
    pub fn defect(&self) -> f64 {
        let ortho = (self.m.transpose() * self.m - Mat3::identity()).norm();
        let det = (self.m.determinant() - 1.0).abs();
        ortho.max(det)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.defect() <= tol
    }

    /// Projects the stored matrix back onto SO(3) (nearest rotation in the
    /// Frobenius sense, via SVD). Used after integration steps.
    pub fn orthonormalize(&mut self) {
        let svd = self.m.svd(true, true);
        let u = svd.u.expect("svd of 3x3 always yields u");
        let v_t = svd.v_t.expect("svd of 3x3 always yields v_t");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            // Flip the weakest singular direction to stay in SO(3).
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        self.m = r;
    }

    /// Geodesic distance to another rotation, in radians.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let cos = ((self.m.transpose() * other.m).trace() - 1.0) / 2.0;
        cos.clamp(-1.0, 1.0).acos()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation { m: self.m * rhs.m }
    }
}

impl std::ops::Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.m * rhs
    }
}

impl std::ops::Mul<&Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.m * rhs
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::identity()
    }
}
