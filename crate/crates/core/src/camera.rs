//! Pinhole intrinsics and the pixel <-> unit-camera mapping.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics", into = "RawIntrinsics")]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cu: f64,
    cv: f64,
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    cu: f64,
    cv: f64,
    width: u32,
    height: u32,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = GeometryError;

    fn try_from(r: RawIntrinsics) -> Result<Self, Self::Error> {
        CameraIntrinsics::new(r.fx, r.fy, r.cu, r.cv, r.width, r.height)
    }
}

impl From<CameraIntrinsics> for RawIntrinsics {
    fn from(k: CameraIntrinsics) -> Self {
        RawIntrinsics {
            fx: k.fx,
            fy: k.fy,
            cu: k.cu,
            cv: k.cv,
            width: k.width,
            height: k.height,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cu: f64,
        cv: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let ok = fx > 0.0
            && fy > 0.0
            && fx.is_finite()
            && fy.is_finite()
            && (0.0..width as f64).contains(&cu)
            && (0.0..height as f64).contains(&cv);
        if !ok {
            return Err(GeometryError::InvalidIntrinsics {
                fx,
                fy,
                cu,
                cv,
                width,
                height,
            });
        }
        Ok(Self {
            fx,
            fy,
            cu,
            cv,
            width,
            height,
        })
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cu(&self) -> f64 {
        self.cu
    }

    pub fn cv(&self) -> f64 {
        self.cv
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn image_size(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Image diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn is_isotropic(&self) -> bool {
        (self.fx - self.fy).abs() <= 1e-9 * self.fx
    }

    pub fn pixel_to_unit(&self, px: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new((px.x - self.cu) / self.fx, (px.y - self.cv) / self.fy)
    }

    pub fn unit_to_pixel(&self, xy: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(xy.x * self.fx + self.cu, xy.y * self.fy + self.cv)
    }

    /// Pinhole projection of a camera-frame point; `None` when `z <= 0`.
    pub fn project(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        (p.z > 0.0).then(|| self.unit_to_pixel(&Vector2::new(p.x / p.z, p.y / p.z)))
    }

    pub fn contains(&self, px: &Vector2<f64>) -> bool {
        px.x >= 0.0 && px.y >= 0.0 && px.x < self.width as f64 && px.y < self.height as f64
    }
}

pub fn pixel_to_unit(px: &Vector2<f64>, k: &CameraIntrinsics) -> Vector2<f64> {
    k.pixel_to_unit(px)
}

pub fn unit_to_pixel(xy: &Vector2<f64>, k: &CameraIntrinsics) -> Vector2<f64> {
    k.unit_to_pixel(xy)
}
