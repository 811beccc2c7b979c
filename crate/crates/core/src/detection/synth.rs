use std::collections::HashSet;

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{pixel_key, DetectionError, DetectionFrame, HeatPixel, Segment};
use crate::line::{residual_r, PolarLine};

/// Behaviour of the synthetic line detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDetectorParams {
    /// Std-dev of endpoint noise and of perpendicular heatmap jitter (pixels).
    pub pixel_noise_sigma: f64,
    /// Uniform clutter pixels added per frame.
    pub outlier_count: usize,
    /// Probability that a segment's endpoint pair is not reported.
    pub endpoint_dropout_prob: f64,
    /// Fraction of the visible edge covered by the detection, centered.
    pub segment_extent: f64,
    /// Heatmap falloff scale (pixels).
    pub heatmap_radius: f64,
}

impl Default for SyntheticDetectorParams {
    fn default() -> Self {
        Self {
            pixel_noise_sigma: 1.0,
            outlier_count: 5,
            endpoint_dropout_prob: 0.1,
            segment_extent: 0.9,
            heatmap_radius: 1.5,
        }
    }
}

impl SyntheticDetectorParams {
    pub fn validate(&self) -> Result<(), DetectionError> {
        let ok = self.pixel_noise_sigma >= 0.0
            && self.pixel_noise_sigma.is_finite()
            && (0.0..=1.0).contains(&self.endpoint_dropout_prob)
            && self.segment_extent > 0.0
            && self.segment_extent <= 1.0
            && self.heatmap_radius > 0.0
            && self.heatmap_radius.is_finite();
        if ok {
            Ok(())
        } else {
            Err(DetectionError::InvalidParams(format!("{self:?}")))
        }
    }

    /// The ideal detector: exact endpoints, no clutter, no dropout.
    pub fn noiseless() -> Self {
        Self {
            pixel_noise_sigma: 0.0,
            outlier_count: 0,
            endpoint_dropout_prob: 0.0,
            segment_extent: 1.0,
            ..Self::default()
        }
    }
}

/// Ground truth for one shaft edge: its pixel line and the visible span
/// (two points on that line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTruth {
    pub line: PolarLine,
    pub span: (Vector2<f64>, Vector2<f64>),
}

fn clamp_to_image(p: Vector2<f64>, (w, h): (u32, u32)) -> Vector2<f64> {
    // Largest representable coordinate strictly inside the image.
    let max_u = (w as f64).next_down();
    let max_v = (h as f64).next_down();
    Vector2::new(p.x.clamp(0.0, max_u), p.y.clamp(0.0, max_v))
}

fn gauss(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn inside(p: &Vector2<f64>, (w, h): (u32, u32)) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x < w as f64 && p.y < h as f64
}

/// Emulates the line detector on known edges.
///
/// Per edge: the centered `segment_extent` portion of the span is reported as
/// an endpoint pair with isotropic Gaussian noise, unless dropped. Heatmap
/// pixels are laid along the same portion at unit spacing and jittered
/// perpendicular to the edge; each carries intensity
/// `exp(-d^2 / (2 heatmap_radius^2))` with `d` its distance to the true edge.
/// Endpoints are registered in the heatmap the same way, whether or not the
/// pair is dropped. Finally `outlier_count` clutter pixels with intensity in
/// `[beta, 1]` are scattered uniformly over the image.
pub fn synthesize_detection(
    edges: &[EdgeTruth],
    sp: &SyntheticDetectorParams,
    beta: f64,
    image_size: (u32, u32),
    rng: &mut impl Rng,
) -> Result<DetectionFrame, DetectionError> {
    sp.validate()?;
    let sigma = sp.pixel_noise_sigma;
    let two_r2 = 2.0 * sp.heatmap_radius * sp.heatmap_radius;
    let intensity = |d: f64| (-(d * d) / two_r2).exp();

    let mut segments = Vec::new();
    let mut heat: Vec<HeatPixel> = Vec::new();

    for edge in edges.iter().take(2) {
        let (a, b) = edge.span;
        let mid = (a + b) * 0.5;
        let a = mid + (a - mid) * sp.segment_extent;
        let b = mid + (b - mid) * sp.segment_extent;

        let ea = clamp_to_image(a + Vector2::new(gauss(rng), gauss(rng)) * sigma, image_size);
        let eb = clamp_to_image(b + Vector2::new(gauss(rng), gauss(rng)) * sigma, image_size);
        for e in [ea, eb] {
            heat.push(HeatPixel {
                pixel: e,
                intensity: intensity(residual_r(&e, &edge.line)),
            });
        }

        let length = (b - a).norm();
        let samples = (length.ceil() as usize).max(1) + 1;
        let n = edge.line.normal();
        for k in 0..samples {
            let t = k as f64 / (samples - 1) as f64;
            let base = a + (b - a) * t;
            let offset = gauss(rng) * sigma;
            let p = base + n * offset;
            if inside(&p, image_size) {
                heat.push(HeatPixel {
                    pixel: p,
                    intensity: intensity(residual_r(&p, &edge.line)),
                });
            }
        }

        let dropped = rng.random::<f64>() < sp.endpoint_dropout_prob;
        if !dropped && ea != eb {
            segments.push(Segment::new(ea, eb));
        }
    }

    let (w, h) = image_size;
    for _ in 0..sp.outlier_count {
        let p = Vector2::new(
            rng.random_range(0.0..w as f64),
            rng.random_range(0.0..h as f64),
        );
        let i = if beta < 1.0 {
            rng.random_range(beta..=1.0)
        } else {
            1.0
        };
        heat.push(HeatPixel {
            pixel: p,
            intensity: i,
        });
    }

    // One entry per pixel position.
    let mut seen = HashSet::with_capacity(heat.len());
    heat.retain(|h| seen.insert(pixel_key(&h.pixel)));

    DetectionFrame::new(segments, heat, image_size)
}
