//! The observed tool: a kinematic chain, its insertion shaft and the camera.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::CameraIntrinsics;
use crate::cylinder::{project_cylinder_polar, transform_cylinder, CylinderSpec};
use crate::detection::EdgeTruth;
use crate::kinematics::KinematicChain;
use crate::line::{polar_unit_to_pixel, PolarLine};
use crate::pose::LumpedErrorParams;
use crate::{GeometryError, ProjectionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("tool tip is behind the camera")]
    TipBehindCamera,
    #[error("shaft mount: {0}")]
    InvalidMount(String),
}

/// Where the shaft sits on the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShaftMount {
    /// Cylinder in the frame of `parent_joint`.
    pub cylinder: CylinderSpec,
    /// 0-based index of the joint whose frame carries the cylinder.
    pub parent_joint: usize,
    /// Axis parameters `[start, end]` of the visible part of the shaft.
    pub visible: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    chain: KinematicChain,
    shaft: ShaftMount,
    camera: CameraIntrinsics,
}

impl Scene {
    pub fn new(
        chain: KinematicChain,
        shaft: ShaftMount,
        camera: CameraIntrinsics,
    ) -> Result<Self, SceneError> {
        if shaft.parent_joint >= chain.len() {
            return Err(GeometryError::JointIndexOutOfRange {
                index: shaft.parent_joint,
                len: chain.len(),
            }
            .into());
        }
        let [a, b] = shaft.visible;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SceneError::InvalidMount(format!(
                "visible range [{a}, {b}] is empty"
            )));
        }
        Ok(Self {
            chain,
            shaft,
            camera,
        })
    }

    pub fn chain(&self) -> &KinematicChain {
        &self.chain
    }

    pub fn shaft(&self) -> &ShaftMount {
        &self.shaft
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        &self.camera
    }

    pub fn shaft_in_camera(
        &self,
        q: &[f64],
        params: &LumpedErrorParams,
    ) -> Result<CylinderSpec, SceneError> {
        let t = self
            .chain
            .forward_to(q, &params.to_pose(), self.shaft.parent_joint)?;
        Ok(transform_cylinder(&t, &self.shaft.cylinder))
    }

    /// The two shaft edges as pixel-space polar lines.
    pub fn project_edges(
        &self,
        q: &[f64],
        params: &LumpedErrorParams,
    ) -> Result<[PolarLine; 2], SceneError> {
        let cyl = self.shaft_in_camera(q, params)?;
        let unit = project_cylinder_polar(&cyl)?;
        Ok(unit.map(|l| polar_unit_to_pixel(&l, &self.camera).line))
    }

    pub fn tip_pixel(
        &self,
        q: &[f64],
        params: &LumpedErrorParams,
    ) -> Result<Vector2<f64>, SceneError> {
        let tip = self.chain.tip_in_camera(q, &params.to_pose())?;
        self.camera.project(&tip).ok_or(SceneError::TipBehindCamera)
    }

    /// Edges with the image-clipped extent of the visible shaft. An edge whose
    /// visible part misses the image is left out.
    pub fn edge_truth(
        &self,
        q: &[f64],
        params: &LumpedErrorParams,
    ) -> Result<Vec<EdgeTruth>, SceneError> {
        let cyl = self.shaft_in_camera(q, params)?;
        let edges = self.project_edges(q, params)?;
        let ends = self.shaft.visible.map(|s| cyl.axis_point(s));
        let (a, b) = clip_to_depth(ends[0], ends[1]).ok_or(ProjectionError::BehindCamera {
            depth: ends[0].z.max(ends[1].z),
        })?;
        let pa = self.camera.project(&a).ok_or(SceneError::TipBehindCamera)?;
        let pb = self.camera.project(&b).ok_or(SceneError::TipBehindCamera)?;
        let size = self.camera.image_size();
        Ok(edges
            .into_iter()
            .filter_map(|line| {
                let fa = pa - line.normal() * line.residual(&pa);
                let fb = pb - line.normal() * line.residual(&pb);
                clip_segment(fa, fb, size).map(|span| EdgeTruth { line, span })
            })
            .collect())
    }
}

const MIN_DEPTH: f64 = 1e-6;

/// Portion of the 3-D segment in front of the camera.
fn clip_to_depth(a: Vector3<f64>, b: Vector3<f64>) -> Option<(Vector3<f64>, Vector3<f64>)> {
    match (a.z > MIN_DEPTH, b.z > MIN_DEPTH) {
        (true, true) => Some((a, b)),
        (false, false) => None,
        (true, false) => Some((a, a + (b - a) * ((a.z - MIN_DEPTH) / (a.z - b.z)))),
        (false, true) => Some((b + (a - b) * ((b.z - MIN_DEPTH) / (b.z - a.z)), b)),
    }
}

/// Liang-Barsky clip of `[a, b]` to `[0, w) x [0, h)`.
pub(crate) fn clip_segment(
    a: Vector2<f64>,
    b: Vector2<f64>,
    (w, h): (u32, u32),
) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let d = b - a;
    let (max_u, max_v) = ((w as f64).next_down(), (h as f64).next_down());
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, a.x),
        (d.x, max_u - a.x),
        (-d.y, a.y),
        (d.y, max_v - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 >= t1 {
        return None;
    }
    Some((a + d * t0, a + d * t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Joint;
    use crate::line::residual_r;
    use crate::pose::Pose;

    fn scene() -> Scene {
        let chain = KinematicChain::new(
            vec![Joint::prismatic(Vector3::z(), Pose::identity()).unwrap()],
            Vector3::new(0.0, 0.0, 0.01),
        )
        .unwrap();
        let shaft = ShaftMount {
            cylinder: CylinderSpec::new(Vector3::zeros(), Vector3::x(), 0.005).unwrap(),
            parent_joint: 0,
            visible: [-0.05, 0.05],
        };
        let camera = CameraIntrinsics::new(1000.0, 1000.0, 960.0, 540.0, 1920, 1080).unwrap();
        Scene::new(chain, shaft, camera).unwrap()
    }

    #[test]
    fn edges_are_horizontal_and_symmetric() {
        let s = scene();
        let q = [0.1];
        let p = LumpedErrorParams::zero();
        let edges = s.project_edges(&q, &p).unwrap();
        for e in &edges {
            assert!((e.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
        let mid = 0.5 * (edges[0].rho + edges[1].rho);
        assert!((mid - 540.0).abs() < 1e-9);
        let tip = s.tip_pixel(&q, &p).unwrap();
        assert!((tip - Vector2::new(960.0, 540.0)).norm() < 1e-9);
    }

    #[test]
    fn edge_spans_lie_on_edges_inside_image() {
        let s = scene();
        let truth = s.edge_truth(&[0.1], &LumpedErrorParams::zero()).unwrap();
        assert_eq!(truth.len(), 2);
        for t in truth {
            for p in [t.span.0, t.span.1] {
                assert!(residual_r(&p, &t.line).abs() < 1e-9);
                assert!(s.camera().contains(&p));
            }
            assert!((t.span.0 - t.span.1).norm() > 900.0);
        }
    }

    #[test]
    fn clipping() {
        let c = clip_segment(
            Vector2::new(-10.0, 5.0),
            Vector2::new(110.0, 5.0),
            (100, 50),
        )
        .unwrap();
        assert_eq!(c.0, Vector2::new(0.0, 5.0));
        assert!(c.1.x < 100.0 && c.1.x > 99.99);
        assert!(clip_segment(
            Vector2::new(-10.0, -5.0),
            Vector2::new(-1.0, 60.0),
            (100, 50)
        )
        .is_none());
    }

    #[test]
    fn bad_mount_rejected() {
        let s = scene();
        let mut mount = *s.shaft();
        mount.parent_joint = 3;
        assert!(Scene::new(s.chain().clone(), mount, *s.camera()).is_err());
        mount.parent_joint = 0;
        mount.visible = [0.1, 0.0];
        assert!(Scene::new(s.chain().clone(), mount, *s.camera()).is_err());
    }
}
