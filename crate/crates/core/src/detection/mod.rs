//! Detector output (segment endpoints plus a sparse line heatmap), point-set
//! extraction around endpoints and segments, sequential RANSAC line fitting,
//! a synthetic stand-in for the learned detector, and JSONL replay.

mod extract;
mod io;
mod ransac;
mod synth;

use std::collections::HashSet;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{endpoint_point_set, line_point_set, point_segment_distance};
pub use io::{load_frames, write_frames, FrameReader, FrameRecord, GroundTruth};
pub use ransac::{sequential_ransac_two_lines, FittedLine};
pub use synth::{synthesize_detection, EdgeTruth, SyntheticDetectorParams};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error on line {line}: field `{field}`")]
    Schema { line: usize, field: String },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<DetectionError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A detected segment with endpoints in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
}

impl Segment {
    pub fn new(a: Vector2<f64>, b: Vector2<f64>) -> Self {
        Self { a, b }
    }
}

/// One heatmap entry. Coordinates are real-valued pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatPixel {
    pub pixel: Vector2<f64>,
    pub intensity: f64,
}

impl HeatPixel {
    pub fn new(u: f64, v: f64, intensity: f64) -> Self {
        Self {
            pixel: Vector2::new(u, v),
            intensity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    segments: Vec<Segment>,
    heatmap: Vec<HeatPixel>,
    image_size: (u32, u32),
}

fn in_bounds(p: &Vector2<f64>, (w, h): (u32, u32)) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x < w as f64 && p.y < h as f64
}

fn pixel_key(p: &Vector2<f64>) -> (u64, u64) {
    // +0.0 and -0.0 are the same pixel.
    ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

impl DetectionFrame {
    pub fn new(
        segments: Vec<Segment>,
        heatmap: Vec<HeatPixel>,
        image_size: (u32, u32),
    ) -> Result<Self, DetectionError> {
        if segments.len() > 2 {
            return Err(DetectionError::InvalidFrame(format!(
                "at most two segments per frame, got {}",
                segments.len()
            )));
        }
        for s in &segments {
            for e in [&s.a, &s.b] {
                if !in_bounds(e, image_size) {
                    return Err(DetectionError::InvalidFrame(format!(
                        "endpoint ({}, {}) outside {}x{} image",
                        e.x, e.y, image_size.0, image_size.1
                    )));
                }
            }
        }
        let mut seen = HashSet::with_capacity(heatmap.len());
        for h in &heatmap {
            if !in_bounds(&h.pixel, image_size) {
                return Err(DetectionError::InvalidFrame(format!(
                    "heatmap pixel ({}, {}) outside {}x{} image",
                    h.pixel.x, h.pixel.y, image_size.0, image_size.1
                )));
            }
            if !(0.0..=1.0).contains(&h.intensity) {
                return Err(DetectionError::InvalidFrame(format!(
                    "intensity {} not in [0, 1]",
                    h.intensity
                )));
            }
            if !seen.insert(pixel_key(&h.pixel)) {
                return Err(DetectionError::InvalidFrame(format!(
                    "duplicate heatmap pixel ({}, {})",
                    h.pixel.x, h.pixel.y
                )));
            }
        }
        Ok(Self {
            segments,
            heatmap,
            image_size,
        })
    }

    pub fn empty(image_size: (u32, u32)) -> Self {
        Self {
            segments: Vec::new(),
            heatmap: Vec::new(),
            image_size,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn heatmap(&self) -> &[HeatPixel] {
        &self.heatmap
    }

    pub fn image_size(&self) -> (u32, u32) {
        self.image_size
    }
}

/// Ordered set of pixel positions (no exact duplicates).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet(Vec<Vector2<f64>>);

impl PointSet {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Drops exact duplicates, keeping first occurrences.
    pub fn from_points(points: impl IntoIterator<Item = Vector2<f64>>) -> Self {
        let mut seen = HashSet::new();
        Self(
            points
                .into_iter()
                .filter(|p| seen.insert(pixel_key(p)))
                .collect(),
        )
    }

    pub fn union<'a>(sets: impl IntoIterator<Item = &'a PointSet>) -> Self {
        Self::from_points(sets.into_iter().flat_map(|s| s.0.iter().copied()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector2<f64>> {
        self.0.iter()
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        let k = pixel_key(p);
        self.0.iter().any(|q| pixel_key(q) == k)
    }

    pub fn is_subset_of(&self, other: &PointSet) -> bool {
        let keys: HashSet<_> = other.0.iter().map(pixel_key).collect();
        self.0.iter().all(|p| keys.contains(&pixel_key(p)))
    }

    /// Order-independent comparison.
    pub fn same_elements(&self, other: &PointSet) -> bool {
        self.len() == other.len() && self.is_subset_of(other)
    }
}

impl FromIterator<Vector2<f64>> for PointSet {
    fn from_iter<I: IntoIterator<Item = Vector2<f64>>>(iter: I) -> Self {
        Self::from_points(iter)
    }
}

/// Search radii and heatmap threshold for point-set extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionParams {
    /// Endpoint search radius (pixels).
    pub alpha_e: f64,
    /// Segment search radius (pixels).
    pub alpha_l: f64,
    /// Heatmap threshold.
    pub beta: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self {
            alpha_e: 10.0,
            alpha_l: 10.0,
            beta: 0.90,
        }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<(), DetectionError> {
        if !(self.alpha_e >= 0.0 && self.alpha_l >= 0.0 && (0.0..=1.0).contains(&self.beta)) {
            return Err(DetectionError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RansacParams {
    /// Sequential passes; at most two lines are kept.
    pub passes: usize,
    pub min_samples: usize,
    /// Inlier threshold on the perpendicular residual (pixels).
    pub residual_threshold: f64,
    pub max_trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            passes: 5,
            min_samples: 3,
            residual_threshold: 0.75,
            max_trials: 100,
            seed: 0,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<(), DetectionError> {
        if self.passes < 1
            || self.min_samples < 2
            || !(self.residual_threshold > 0.0)
            || self.max_trials < 1
        {
            return Err(DetectionError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}
