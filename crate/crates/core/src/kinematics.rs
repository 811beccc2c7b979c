//! Forward kinematics of a (partially visible) serial chain with a lumped
//! error transform applied at the base.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::pose::{rotation_exp, Pose};
use crate::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Prismatic,
}

/// One link transform: `fixed_offset * motion(q)`, where the motion is a
/// rotation about `axis` by `q` radians or a translation along `axis` by
/// `q` meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    kind: JointType,
    axis: Vector3<f64>,
    fixed_offset: Pose,
}

impl Joint {
    pub fn new(
        kind: JointType,
        axis: Vector3<f64>,
        fixed_offset: Pose,
    ) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(GeometryError::ZeroAxis);
        }
        Ok(Self {
            kind,
            axis: axis / n,
            fixed_offset,
        })
    }

    pub fn revolute(axis: Vector3<f64>, fixed_offset: Pose) -> Result<Self, GeometryError> {
        Self::new(JointType::Revolute, axis, fixed_offset)
    }

    pub fn prismatic(axis: Vector3<f64>, fixed_offset: Pose) -> Result<Self, GeometryError> {
        Self::new(JointType::Prismatic, axis, fixed_offset)
    }

    pub fn kind(&self) -> JointType {
        self.kind
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }

    pub fn fixed_offset(&self) -> &Pose {
        &self.fixed_offset
    }

    /// Transform from the previous link frame to this joint's frame.
    pub fn transform(&self, q: f64) -> Pose {
        let motion = match self.kind {
            JointType::Revolute => Pose::from_rotation_unchecked(rotation_exp(&(self.axis * q))),
            JointType::Prismatic => Pose::from_translation(self.axis * q),
        };
        self.fixed_offset.compose(&motion)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<Joint>,
    tip_point: Vector3<f64>,
}

impl KinematicChain {
    pub fn new(joints: Vec<Joint>, tip_point: Vector3<f64>) -> Result<Self, GeometryError> {
        if joints.is_empty() {
            return Err(GeometryError::EmptyChain);
        }
        Ok(Self { joints, tip_point })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Tip point expressed in the last joint frame.
    pub fn tip_point(&self) -> &Vector3<f64> {
        &self.tip_point
    }

    /// `E * T_1(q_1) * ... * T_n(q_n)`: the distal frame in the camera frame.
    pub fn forward(&self, q: &[f64], lumped: &Pose) -> Result<Pose, GeometryError> {
        self.forward_to(q, lumped, self.joints.len() - 1)
    }

    /// Like [`forward`](Self::forward) but stops after joint `last` (0-based).
    pub fn forward_to(&self, q: &[f64], lumped: &Pose, last: usize) -> Result<Pose, GeometryError> {
        if q.len() != self.joints.len() {
            return Err(GeometryError::JointCountMismatch {
                expected: self.joints.len(),
                got: q.len(),
            });
        }
        if last >= self.joints.len() {
            return Err(GeometryError::JointIndexOutOfRange {
                index: last,
                len: self.joints.len(),
            });
        }
        Ok(self.joints[..=last]
            .iter()
            .zip(q)
            .fold(*lumped, |acc, (joint, &qi)| {
                acc.compose(&joint.transform(qi))
            }))
    }

    /// Tip position in the camera frame.
    pub fn tip_in_camera(&self, q: &[f64], lumped: &Pose) -> Result<Vector3<f64>, GeometryError> {
        Ok(self.forward(q, lumped)?.transform_point(&self.tip_point))
    }

    pub fn to_description(&self) -> ChainDescription {
        ChainDescription {
            joints: self
                .joints
                .iter()
                .map(|j| JointDescription {
                    kind: j.kind,
                    axis: j.axis.into(),
                    fixed_offset: PoseRows::Nested(j.fixed_offset.to_rows()),
                })
                .collect(),
            tip_point: self.tip_point.into(),
        }
    }
}

pub fn forward_kinematics(
    chain: &KinematicChain,
    q: &[f64],
    lumped: &Pose,
) -> Result<Pose, GeometryError> {
    chain.forward(q, lumped)
}

/// A 3x4 row-major `[R | t]` block, accepted either nested (`[[..4]; 3]`)
/// or flat (`[..12]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoseRows {
    Nested([[f64; 4]; 3]),
    Flat([f64; 12]),
}

impl PoseRows {
    pub fn to_pose(&self) -> Result<Pose, GeometryError> {
        match self {
            PoseRows::Nested(rows) => Pose::from_rows(rows),
            PoseRows::Flat(v) => {
                let mut rows = [[0.0; 4]; 3];
                for (i, x) in v.iter().enumerate() {
                    rows[i / 4][i % 4] = *x;
                }
                Pose::from_rows(&rows)
            }
        }
    }
}

fn identity_rows() -> PoseRows {
    PoseRows::Nested(Pose::identity().to_rows())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDescription {
    #[serde(rename = "type")]
    pub kind: JointType,
    pub axis: [f64; 3],
    #[serde(default = "identity_rows")]
    pub fixed_offset: PoseRows,
}

/// JSON form of a [`KinematicChain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDescription {
    pub joints: Vec<JointDescription>,
    pub tip_point: [f64; 3],
}

impl ChainDescription {
    pub fn build(&self) -> Result<KinematicChain, GeometryError> {
        let joints = self
            .joints
            .iter()
            .map(|j| Joint::new(j.kind, Vector3::from(j.axis), j.fixed_offset.to_pose()?))
            .collect::<Result<Vec<_>, _>>()?;
        KinematicChain::new(joints, Vector3::from(self.tip_point))
    }
}

impl TryFrom<&ChainDescription> for KinematicChain {
    type Error = GeometryError;

    fn try_from(d: &ChainDescription) -> Result<Self, Self::Error> {
        d.build()
    }
}
