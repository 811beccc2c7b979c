//! Image-line representations.
//!
//! Two forms are used throughout:
//!
//! * [`ImplicitLine`]: `a X + b Y + c = 0`, normalized so `a^2 + b^2 = 1` and
//!   the first nonzero of `(a, b)` is positive.
//! * [`PolarLine`]: normal form `cos(theta) X + sin(theta) Y = rho` with
//!   `theta` in `[0, pi)` and signed `rho`.
//!
//! Both forms are coordinate-agnostic; whether a line lives on the unit
//! camera or in pixels is decided by the caller.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::ProjectionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitLine {
    a: f64,
    b: f64,
    c: f64,
}

impl ImplicitLine {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ProjectionError> {
        let n = a.hypot(b);
        if !(n > 0.0) || !n.is_finite() || !c.is_finite() {
            return Err(ProjectionError::DegenerateLine);
        }
        let sign = if a > 0.0 || (a == 0.0 && b > 0.0) {
            1.0
        } else {
            -1.0
        };
        let s = sign / n;
        Ok(Self {
            a: a * s,
            b: b * s,
            c: c * s,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, p: &Vector2<f64>) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    pub fn to_polar(&self) -> PolarLine {
        implicit_to_polar(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarLine {
    pub theta: f64,
    pub rho: f64,
}

impl PolarLine {
    /// Builds a line from any normal angle, folding it into `[0, pi)`.
    pub fn new(theta: f64, rho: f64) -> Self {
        let mut t = theta.rem_euclid(2.0 * PI);
        let mut r = rho;
        if t >= PI {
            t -= PI;
            r = -r;
        }
        // rem_euclid can round up to exactly 2 pi or pi.
        if t >= PI {
            t = 0.0;
        }
        Self { theta: t, rho: r }
    }

    pub fn normal(&self) -> Vector2<f64> {
        Vector2::new(self.theta.cos(), self.theta.sin())
    }

    /// Unit direction along the line.
    pub fn direction(&self) -> Vector2<f64> {
        Vector2::new(-self.theta.sin(), self.theta.cos())
    }

    /// Perpendicular foot of the origin.
    pub fn foot(&self) -> Vector2<f64> {
        self.normal() * self.rho
    }

    pub fn residual(&self, p: &Vector2<f64>) -> f64 {
        residual_r(p, self)
    }

    pub fn to_implicit(&self) -> ImplicitLine {
        polar_to_implicit(self)
    }
}

/// Signed perpendicular distance `cos(theta) x + sin(theta) y - rho`.
pub fn residual_r(p: &Vector2<f64>, l: &PolarLine) -> f64 {
    let (s, c) = l.theta.sin_cos();
    c * p.x + s * p.y - l.rho
}

pub fn implicit_to_polar(l: &ImplicitLine) -> PolarLine {
    let n = l.a.hypot(l.b);
    PolarLine::new(l.b.atan2(l.a), -l.c / n)
}

pub fn polar_to_implicit(l: &PolarLine) -> ImplicitLine {
    let (s, c) = l.theta.sin_cos();
    ImplicitLine::new(c, s, -l.rho).expect("unit normal is never degenerate")
}

/// `(a.theta - b.theta, a.rho - b.rho)` with the angle difference wrapped
/// into `(-pi/2, pi/2]`. Wrapping by `pi` flips the normal of `b`, so its
/// `rho` is negated before differencing.
pub fn polar_difference(a: &PolarLine, b: &PolarLine) -> (f64, f64) {
    let mut dt = a.theta - b.theta;
    let mut rho_b = b.rho;
    if dt > 0.5 * PI {
        dt -= PI;
        rho_b = -rho_b;
    } else if dt <= -0.5 * PI {
        dt += PI;
        rho_b = -rho_b;
    }
    (dt, a.rho - rho_b)
}

/// Total-least-squares line through `points`; `None` when fewer than two
/// distinct points are given.
pub fn fit_line_tls(points: &[Vector2<f64>]) -> Option<PolarLine> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    if sxx + syy <= 0.0 {
        return None;
    }
    // Major axis angle of the scatter; the normal is perpendicular to it.
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let normal_angle = phi + 0.5 * PI;
    let normal = Vector2::new(normal_angle.cos(), normal_angle.sin());
    Some(PolarLine::new(normal_angle, normal.dot(&centroid)))
}

/// How a unit-camera line was carried into pixel space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PixelConversion {
    /// `fx == fy`: the normal angle is preserved and only `rho` changes.
    Isotropic,
    /// Anisotropic intrinsics: two points on the line were mapped and joined.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelLine {
    pub line: PolarLine,
    pub conversion: PixelConversion,
}

/// Maps a unit-camera line to the pixel line containing exactly the pixels
/// whose unit-camera images lie on it.
pub fn polar_unit_to_pixel(l: &PolarLine, k: &CameraIntrinsics) -> PixelLine {
    if k.is_isotropic() {
        let (s, c) = l.theta.sin_cos();
        let rho = k.fx() * l.rho + c * k.cu() + s * k.cv();
        return PixelLine {
            line: PolarLine::new(l.theta, rho),
            conversion: PixelConversion::Isotropic,
        };
    }
    let foot = l.foot();
    let dir = l.direction();
    let p = k.unit_to_pixel(&foot);
    let q = k.unit_to_pixel(&(foot + dir));
    let d = q - p;
    let normal = Vector2::new(-d.y, d.x).normalize();
    PixelLine {
        line: PolarLine::new(normal.y.atan2(normal.x), normal.dot(&p)),
        conversion: PixelConversion::TwoPoint,
    }
}
