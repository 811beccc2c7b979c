use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::camera::CameraIntrinsics;
use crate::cylinder::CylinderSpec;
use crate::detection::{ExtractionParams, RansacParams, SyntheticDetectorParams};
use crate::filter::{Covariance6, FilterConfig, MotionParams};
use crate::kinematics::{ChainDescription, JointDescription, JointType, PoseRows};
use crate::observation::{IntensityObsParams, PolarObsParams};
use crate::pose::{LumpedErrorParams, Pose};
use crate::scene::{Scene, ShaftMount};

/// `offset + amplitude * sin(2 pi t / period + phase)` for one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSinusoid {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub amplitude: f64,
    /// Frames per cycle.
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

impl JointSinusoid {
    pub fn constant(value: f64) -> Self {
        Self {
            offset: value,
            amplitude: 0.0,
            period: 1.0,
            phase: 0.0,
        }
    }

    pub fn at(&self, frame: usize) -> f64 {
        self.offset + self.amplitude * (TAU * frame as f64 / self.period + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub chain: ChainDescription,
    pub shaft: ShaftMount,
    pub camera: CameraIntrinsics,
    pub n_frames: usize,
    /// Ground-truth lumped error at frame 0.
    pub gt_initial: LumpedErrorParams,
    /// Per-frame random-walk covariance of the ground truth.
    pub gt_walk_cov: Covariance6,
    pub joint_trajectory: Vec<JointSinusoid>,
    pub detector: SyntheticDetectorParams,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_frames == 0 {
            return Err(HarnessError::Config("n_frames must be at least 1".into()));
        }
        if self.joint_trajectory.len() != self.chain.joints.len() {
            return Err(HarnessError::Config(format!(
                "joint_trajectory has {} entries for {} joints",
                self.joint_trajectory.len(),
                self.chain.joints.len()
            )));
        }
        if let Some(bad) = self.joint_trajectory.iter().find(|j| !(j.period > 0.0)) {
            return Err(HarnessError::Config(format!(
                "joint period {} must be positive",
                bad.period
            )));
        }
        self.detector
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.scene().map(|_| ())
    }

    pub fn scene(&self) -> Result<Scene, HarnessError> {
        let chain = self
            .chain
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Scene::new(chain, self.shaft, self.camera).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn joints_at(&self, frame: usize) -> Vec<f64> {
        self.joint_trajectory.iter().map(|j| j.at(frame)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationConfig {
    pub polar: PolarObsParams,
    pub intensity: IntensityObsParams,
}

/// Everything `track` and `compare` need besides the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    pub filter: FilterConfig,
    pub motion: MotionParams,
    pub observation: ObservationConfig,
    pub extraction: ExtractionParams,
    pub ransac: RansacParams,
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |e: &dyn std::fmt::Display| HarnessError::Config(e.to_string());
        self.filter.validate().map_err(|e| cfg(&e))?;
        self.observation.polar.validate().map_err(|e| cfg(&e))?;
        self.observation.intensity.validate().map_err(|e| cfg(&e))?;
        self.extraction.validate().map_err(|e| cfg(&e))?;
        self.ransac.validate().map_err(|e| cfg(&e))
    }
}

/// The JSON configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub scenario: ScenarioConfig,
    #[serde(flatten)]
    pub tracking: TrackingConfig,
}

impl HarnessConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario.validate()?;
        self.tracking.validate()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self.tracking.filter.seed = seed;
        self
    }

    pub fn with_particles(mut self, n: usize) -> Self {
        self.tracking.filter.n_particles = n;
        self
    }
}

fn joint(kind: JointType, axis: [f64; 3]) -> JointDescription {
    JointDescription {
        kind,
        axis,
        fixed_offset: PoseRows::Nested(Pose::identity().to_rows()),
    }
}

impl Default for HarnessConfig {
    /// A remote-center tool seen from about 14 cm: yaw, pitch and insertion
    /// joints about a pivot, a 4.2 mm radius shaft whose last 6 cm are in view.
    fn default() -> Self {
        let gt_initial = LumpedErrorParams::new(
            Vector3::new(-0.06, -0.04, 0.06),
            Vector3::new(-0.406_917_7, 0.610_376_56, 0.0),
        );
        let init_mean = LumpedErrorParams::new(
            gt_initial.b() + Vector3::new(0.01, -0.008, 0.012),
            gt_initial.w() + Vector3::new(0.03, -0.03, 0.02),
        );
        let scenario = ScenarioConfig {
            chain: ChainDescription {
                joints: vec![
                    joint(JointType::Revolute, [0.0, 1.0, 0.0]),
                    joint(JointType::Revolute, [1.0, 0.0, 0.0]),
                    joint(JointType::Prismatic, [0.0, 0.0, 1.0]),
                ],
                tip_point: [0.0, 0.0, 0.01],
            },
            shaft: ShaftMount {
                cylinder: CylinderSpec::new(Vector3::zeros(), Vector3::z(), 0.0042)
                    .expect("valid shaft"),
                parent_joint: 2,
                visible: [-0.06, 0.0],
            },
            camera: CameraIntrinsics::new(1000.0, 1000.0, 960.0, 540.0, 1920, 1080)
                .expect("valid camera"),
            n_frames: 300,
            gt_initial,
            gt_walk_cov: Covariance6::isotropic(1e-8, 1e-8).expect("valid walk"),
            joint_trajectory: vec![
                JointSinusoid {
                    offset: 0.0,
                    amplitude: 0.2,
                    period: 120.0,
                    phase: 0.0,
                },
                JointSinusoid {
                    offset: 0.0,
                    amplitude: 0.15,
                    period: 90.0,
                    phase: 1.0,
                },
                JointSinusoid {
                    offset: 0.1,
                    amplitude: 0.01,
                    period: 70.0,
                    phase: 0.5,
                },
            ],
            detector: SyntheticDetectorParams::default(),
            seed: 0,
        };
        let tracking = TrackingConfig {
            filter: FilterConfig {
                init_mean,
                ..FilterConfig::default()
            },
            motion: MotionParams {
                cov: scenario.gt_walk_cov,
            },
            ..TrackingConfig::default()
        };
        Self { scenario, tracking }
    }
}
