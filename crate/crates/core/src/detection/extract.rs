use nalgebra::Vector2;

use super::{DetectionError, DetectionFrame, ExtractionParams, PointSet};

/// Heatmap pixels within `alpha_e` of `e` whose intensity reaches `beta`.
pub fn endpoint_point_set(
    frame: &DetectionFrame,
    e: &Vector2<f64>,
    p: &ExtractionParams,
) -> PointSet {
    frame
        .heatmap()
        .iter()
        .filter(|h| h.intensity >= p.beta && (h.pixel - e).norm() <= p.alpha_e)
        .map(|h| h.pixel)
        .collect()
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Heatmap pixels within `alpha_l` of the segment `[e_a, e_b]` whose
/// intensity reaches `beta`.
pub fn line_point_set(
    frame: &DetectionFrame,
    e_a: &Vector2<f64>,
    e_b: &Vector2<f64>,
    p: &ExtractionParams,
) -> Result<PointSet, DetectionError> {
    if e_a == e_b {
        return Err(DetectionError::DegenerateSegment);
    }
    Ok(frame
        .heatmap()
        .iter()
        .filter(|h| {
            h.intensity >= p.beta && point_segment_distance(&h.pixel, e_a, e_b) <= p.alpha_l
        })
        .map(|h| h.pixel)
        .collect())
}
