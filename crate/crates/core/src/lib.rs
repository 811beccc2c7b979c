//! Probabilistic localization of a partially visible kinematic chain from
//! insertion-shaft line observations.
//!
//! A particle filter tracks a 6-DoF lumped error transform `E` that maps the
//! robot base into the camera frame and absorbs joint-reading error. Each
//! particle is scored by projecting the insertion-shaft cylinder to its two
//! silhouette lines and comparing them with detector output (segment
//! endpoints plus a line heatmap) under one of five observation models.
//!
//! Module map:
//!
//! * [`pose`], [`kinematics`], [`camera`]: rigid transforms, the chain, pinhole intrinsics.
//! * [`cylinder`], [`line`]: shaft silhouette projection and line forms.
//! * [`detection`]: detector frames, point-set extraction, sequential RANSAC,
//!   a synthetic detector and JSONL replay.
//! * [`observation`]: the observation models.
//! * [`filter`]: particle filter.
//! * [`harness`]: scenarios, tracking runs, metrics, reports and overlays.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod cylinder;
pub mod detection;
mod error;
pub mod filter;
pub mod harness;
pub mod kinematics;
pub mod line;
pub mod observation;
pub mod pose;
pub mod rng;
pub mod scene;

pub use camera::CameraIntrinsics;
pub use cylinder::{project_cylinder, silhouette_oracle, transform_cylinder, CylinderSpec};
pub use error::{GeometryError, ProjectionError};
pub use kinematics::{forward_kinematics, KinematicChain};
pub use line::{ImplicitLine, PolarLine};
pub use pose::{params_from_pose, pose_from_params, LumpedErrorParams, Pose};
