//! Scenario generation, tracking runs, metrics, model comparison and overlays.

pub mod config;
pub mod metrics;
pub mod overlay;
pub mod report;
pub mod scenario;
pub mod tracking;

use thiserror::Error;

use crate::detection::DetectionError;
use crate::filter::FilterError;
use crate::scene::SceneError;

pub use config::{HarnessConfig, JointSinusoid, ObservationConfig, ScenarioConfig, TrackingConfig};
pub use metrics::{accumulated_error, tip_error_percent, MetricsReport};
pub use overlay::{render_overlay, render_svg, Overlay};
pub use report::{compare_models, Comparison, ComparisonRow, CSV_HEADER};
pub use scenario::generate_scenario;
pub use tracking::{ransac_seed, run_tracking, TrackingRun};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("empty input")]
    EmptyInput,
    #[error("frame {frame}: ground truth violates projection preconditions: {source}")]
    ProjectionInvalid {
        frame: usize,
        #[source]
        source: SceneError,
    },
    #[error("frame {frame}: no ground truth")]
    MissingGroundTruth { frame: usize },
    #[error("frame {frame}: {source}")]
    Filter {
        frame: usize,
        #[source]
        source: FilterError,
    },
    #[error("frame {frame}: {source}")]
    Scene {
        frame: usize,
        #[source]
        source: SceneError,
    },
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
