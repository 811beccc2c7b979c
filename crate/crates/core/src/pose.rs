//! Rigid transforms and the translation + axis-angle chart used for the
//! lumped error state.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::GeometryError;

/// Orthonormality / determinant tolerance for a valid rotation block.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Rotation angles at or above `PI - LOG_MAP_MARGIN` are rejected by the log map.
pub const LOG_MAP_MARGIN: f64 = 1e-6;

/// Rigid transform `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose after checking that `rotation` is a proper rotation.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        let det = rotation.determinant();
        if ortho > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation {
                ortho_error: ortho,
                det,
            });
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("translation"));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation-only pose. The caller guarantees `rotation` is proper.
    pub(crate) fn from_rotation_unchecked(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    /// Parses a 3x4 row-major `[R | t]` block.
    pub fn from_rows(rows: &[[f64; 4]; 3]) -> Result<Self, GeometryError> {
        let rotation = Matrix3::from_fn(|r, c| rows[r][c]);
        let translation = Vector3::new(rows[0][3], rows[1][3], rows[2][3]);
        Self::new(rotation, translation)
    }

    pub fn to_rows(&self) -> [[f64; 4]; 3] {
        std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                if c < 3 {
                    self.rotation[(r, c)]
                } else {
                    self.translation[r]
                }
            })
        })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Directions ignore the translation part.
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// Lumped error state: translation `b` (meters) and axis-angle rotation `w`
/// (radians) with `|w| < pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct LumpedErrorParams {
    b: Vector3<f64>,
    w: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    b: [f64; 3],
    w: [f64; 3],
}

impl TryFrom<RawParams> for LumpedErrorParams {
    type Error = GeometryError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        if raw.b.iter().chain(raw.w.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("lumped error parameters"));
        }
        Ok(Self::new(Vector3::from(raw.b), Vector3::from(raw.w)))
    }
}

impl From<LumpedErrorParams> for RawParams {
    fn from(p: LumpedErrorParams) -> Self {
        RawParams {
            b: p.b.into(),
            w: p.w.into(),
        }
    }
}

impl LumpedErrorParams {
    /// Re-canonicalizes `w` into the `|w| < pi` chart.
    pub fn new(b: Vector3<f64>, w: Vector3<f64>) -> Self {
        Self {
            b,
            w: canonicalize_axis_angle(&w),
        }
    }

    pub fn zero() -> Self {
        Self {
            b: Vector3::zeros(),
            w: Vector3::zeros(),
        }
    }

    /// `[b; w]` ordering, matching the 6x6 covariance layout.
    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.b.x, self.b.y, self.b.z, self.w.x, self.w.y, self.w.z)
    }

    pub fn b(&self) -> &Vector3<f64> {
        &self.b
    }

    pub fn w(&self) -> &Vector3<f64> {
        &self.w
    }

    pub fn to_pose(&self) -> Pose {
        pose_from_params(self)
    }
}

/// Wraps the rotation angle of `w` into `[-pi, pi]` and returns the
/// equivalent axis-angle vector. Inside the chart this is the identity; a
/// vector with `pi <= |w| < 2 pi` becomes `w (1 - 2 pi / |w|)`.
pub fn canonicalize_axis_angle(w: &Vector3<f64>) -> Vector3<f64> {
    let angle = w.norm();
    if angle < PI || !angle.is_finite() {
        return *w;
    }
    let wrapped = angle - 2.0 * PI * ((angle + PI) / (2.0 * PI)).floor();
    w * (wrapped / angle)
}

/// Same rotation, other side of the chart: `w (1 - 2 pi / |w|)`.
pub fn antipodal_axis_angle(w: &Vector3<f64>) -> Vector3<f64> {
    let angle = w.norm();
    if angle == 0.0 {
        return *w;
    }
    w * (1.0 - 2.0 * PI / angle)
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues exponential map `so(3) -> SO(3)`.
pub fn rotation_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let k = skew(w);
    // Taylor branches keep full precision near zero.
    let (a, b) = if theta2 < 1e-10 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// Logarithm map `SO(3) -> so(3)` for rotation angles below `pi - LOG_MAP_MARGIN`.
pub fn rotation_log(r: &Matrix3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let axis2 = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let sin_theta = 0.5 * axis2.norm();
    let cos_theta = 0.5 * (r.trace() - 1.0);
    let theta = sin_theta.atan2(cos_theta);
    if theta >= PI - LOG_MAP_MARGIN {
        return Err(GeometryError::AngleNearPi { angle: theta });
    }
    let scale = if theta < 1e-8 {
        0.5 * (1.0 + theta * theta / 6.0)
    } else {
        0.5 * theta / sin_theta
    };
    Ok(axis2 * scale)
}

pub fn pose_from_params(p: &LumpedErrorParams) -> Pose {
    Pose {
        rotation: rotation_exp(&p.w),
        translation: p.b,
    }
}

pub fn params_from_pose(t: &Pose) -> Result<LumpedErrorParams, GeometryError> {
    let w = rotation_log(&t.rotation)?;
    Ok(LumpedErrorParams {
        b: t.translation,
        w,
    })
}
