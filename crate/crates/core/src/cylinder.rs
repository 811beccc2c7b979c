//! Insertion-shaft cylinder and its perspective silhouette.
//!
//! For a cylinder with center-line point `p0`, unit direction `d` and radius
//! `r` expressed in the camera frame, the two silhouette edges are the planes
//! through the optical center that are tangent to the cylinder. Their normals
//! `n = (A, B, C)` give unit-camera lines `A X + B Y + C = 0`:
//!
//! ```text
//! h  = p0 - (p0 . d) d           // perpendicular from the axis to the camera
//! D  = p0 . p0 - (p0 . d)^2 - r^2 // = |h|^2 - r^2, > 0 outside the cylinder
//! n  = r h / sqrt(D)  +/-  p0 x d
//! ```
//!
//! `n . d = 0` and `|n . p0| / |n| = r`, so each plane contains the axis
//! direction and sits at distance `r` from it.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::line::{fit_line_tls, implicit_to_polar, ImplicitLine, PolarLine};
use crate::pose::Pose;
use crate::ProjectionError;

/// Discriminant threshold below which the camera is treated as inside.
pub const DISCRIMINANT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCylinder", into = "RawCylinder")]
pub struct CylinderSpec {
    p0: Vector3<f64>,
    d: Vector3<f64>,
    r: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCylinder {
    p0: [f64; 3],
    d: [f64; 3],
    r: f64,
}

impl TryFrom<RawCylinder> for CylinderSpec {
    type Error = ProjectionError;

    fn try_from(raw: RawCylinder) -> Result<Self, Self::Error> {
        CylinderSpec::new(Vector3::from(raw.p0), Vector3::from(raw.d), raw.r)
    }
}

impl From<CylinderSpec> for RawCylinder {
    fn from(c: CylinderSpec) -> Self {
        RawCylinder {
            p0: c.p0.into(),
            d: c.d.into(),
            r: c.r,
        }
    }
}

impl CylinderSpec {
    /// `d` is normalized; a zero direction or non-positive radius is rejected.
    pub fn new(p0: Vector3<f64>, d: Vector3<f64>, r: f64) -> Result<Self, ProjectionError> {
        let n = d.norm();
        if !(n > 1e-12)
            || !n.is_finite()
            || !(r > 0.0)
            || !r.is_finite()
            || !p0.iter().all(|v| v.is_finite())
        {
            return Err(ProjectionError::InvalidCylinder);
        }
        Ok(Self { p0, d: d / n, r })
    }

    pub fn p0(&self) -> &Vector3<f64> {
        &self.p0
    }

    pub fn d(&self) -> &Vector3<f64> {
        &self.d
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Point on the center-line at parameter `lambda`.
    pub fn axis_point(&self, lambda: f64) -> Vector3<f64> {
        self.p0 + self.d * lambda
    }

    /// Axis point closest to the origin (the camera center).
    pub fn nearest_axis_point(&self) -> Vector3<f64> {
        self.p0 - self.d * self.p0.dot(&self.d)
    }

    /// `p0.p0 - (p0.d)^2 - r^2`.
    pub fn discriminant(&self) -> f64 {
        let pd = self.p0.dot(&self.d);
        self.p0.dot(&self.p0) - pd * pd - self.r * self.r
    }

    fn check_visible(&self) -> Result<f64, ProjectionError> {
        let disc = self.discriminant();
        if !(disc > DISCRIMINANT_EPS) {
            return Err(ProjectionError::CameraInsideCylinder { discriminant: disc });
        }
        let near = self.nearest_axis_point();
        if !(near.z > 0.0) {
            return Err(ProjectionError::BehindCamera { depth: near.z });
        }
        Ok(disc)
    }
}

pub fn transform_cylinder(t: &Pose, cyl: &CylinderSpec) -> CylinderSpec {
    CylinderSpec {
        p0: t.transform_point(&cyl.p0),
        d: t.transform_vector(&cyl.d),
        r: cyl.r,
    }
}

/// Deterministic ordering: smaller theta first, ties broken by smaller rho.
fn ordered<T>(a: (T, PolarLine), b: (T, PolarLine)) -> (T, T) {
    let key = |l: &PolarLine| (l.theta, l.rho);
    if key(&b.1).partial_cmp(&key(&a.1)) == Some(std::cmp::Ordering::Less) {
        (b.0, a.0)
    } else {
        (a.0, b.0)
    }
}

/// Projects a camera-frame cylinder to its two unit-camera silhouette lines.
pub fn project_cylinder(
    cyl_cam: &CylinderSpec,
) -> Result<(ImplicitLine, ImplicitLine), ProjectionError> {
    let disc = cyl_cam.check_visible()?;
    let p0 = cyl_cam.p0;
    let d = cyl_cam.d;
    let h = p0 - d * p0.dot(&d);
    let radial = h * (cyl_cam.r / disc.sqrt());
    let cross = p0.cross(&d);
    let make = |n: Vector3<f64>| ImplicitLine::new(n.x, n.y, n.z);
    let l1 = make(radial + cross)?;
    let l2 = make(radial - cross)?;
    Ok(ordered(
        (l1, implicit_to_polar(&l1)),
        (l2, implicit_to_polar(&l2)),
    ))
}

/// Both silhouette lines in polar form, same ordering as [`project_cylinder`].
pub fn project_cylinder_polar(cyl_cam: &CylinderSpec) -> Result<[PolarLine; 2], ProjectionError> {
    let (a, b) = project_cylinder(cyl_cam)?;
    Ok([implicit_to_polar(&a), implicit_to_polar(&b)])
}

/// Brute-force silhouette: samples cross-section circles along the axis,
/// projects them through the pinhole, keeps the two extremal points of each
/// projected circle and fits a line to each family.
///
/// Extremal points are first taken perpendicular to the projected
/// center-line. Because perspective makes the edges converge, the
/// extremum along the edge normal differs slightly from that along the
/// center-line normal, so the picks are repeated against the normals of the
/// fitted edges until they settle.
pub fn silhouette_oracle(
    cyl_cam: &CylinderSpec,
    n_sections: usize,
    n_circle: usize,
) -> Result<(PolarLine, PolarLine), ProjectionError> {
    const REFINEMENT_PASSES: usize = 3;

    if n_sections < 16 || n_circle < 256 {
        return Err(ProjectionError::OracleResolution {
            n_sections,
            n_circle,
        });
    }
    cyl_cam.check_visible()?;
    let d = cyl_cam.d;
    let r = cyl_cam.r;
    let near = cyl_cam.nearest_axis_point();
    let lambda_near = -cyl_cam.p0.dot(&d);

    // Cross-section basis.
    let helper = if d.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = d.cross(&helper).normalize();
    let v = d.cross(&u);

    // Projected center-line normal: plane through the camera containing the axis.
    let m = cyl_cam.p0.cross(&d);
    let m_xy = Vector2::new(m.x, m.y);
    if m_xy.norm() < 1e-15 {
        return Err(ProjectionError::BehindCamera { depth: 0.0 });
    }
    let center_normal = m_xy.normalize();

    let span = 0.5 * near.norm();
    let min_depth = 0.1 * near.z;
    let circle_lift = r * (1.0 - d.z * d.z).max(0.0).sqrt();
    let centers: Vec<Vector3<f64>> = (0..n_sections)
        .map(|i| {
            let s = -span + 2.0 * span * i as f64 / (n_sections - 1) as f64;
            cyl_cam.axis_point(lambda_near + s)
        })
        .filter(|c| c.z - circle_lift > min_depth)
        .collect();
    if centers.len() < 2 {
        return Err(ProjectionError::BehindCamera { depth: near.z });
    }

    let step = 2.0 * PI / n_circle as f64;
    let project_at = |c: &Vector3<f64>, phi: f64| {
        let p = c + (u * phi.cos() + v * phi.sin()) * r;
        Vector2::new(p.x / p.z, p.y / p.z)
    };
    // Point of the projected circle maximizing `normal . X`, refined by a
    // parabola through the best sample and its neighbours.
    let extremal = |c: &Vector3<f64>, normal: &Vector2<f64>| {
        let score = |k: isize| normal.dot(&project_at(c, k as f64 * step));
        let best = (0..n_circle as isize)
            .max_by(|&a, &b| score(a).total_cmp(&score(b)))
            .unwrap_or(0);
        let (fm, f0, fp) = (score(best - 1), score(best), score(best + 1));
        let denom = fm - 2.0 * f0 + fp;
        let offset = if denom < 0.0 {
            0.5 * (fm - fp) / denom
        } else {
            0.0
        };
        project_at(c, (best as f64 + offset.clamp(-1.0, 1.0)) * step)
    };

    let fit_edge = |normal: &Vector2<f64>| {
        let pts: Vec<Vector2<f64>> = centers.iter().map(|c| extremal(c, normal)).collect();
        fit_line_tls(&pts).ok_or(ProjectionError::DegenerateLine)
    };
    let oriented = |l: &PolarLine, reference: &Vector2<f64>| {
        let n = l.normal();
        if n.dot(reference) >= 0.0 {
            n
        } else {
            -n
        }
    };

    let mut upper = fit_edge(&center_normal)?;
    let mut lower = fit_edge(&-center_normal)?;
    for _ in 0..REFINEMENT_PASSES {
        let nu = oriented(&upper, &center_normal);
        let nl = oriented(&lower, &-center_normal);
        upper = fit_edge(&nu)?;
        lower = fit_edge(&nl)?;
    }
    Ok(ordered((upper, upper), (lower, lower)))
}
