//! Particle log-likelihoods from a detection frame.
//!
//! Polar models compare fitted image lines with the projected shaft edges in
//! `(theta, rho)`; intensity models score heatmap pixels directly by their
//! perpendicular residual to the nearest projected edge.
//!
//! Evidence depends only on the frame, so it is extracted once with
//! [`extract_evidence`] and then scored per particle with [`Evidence::score`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::{
    endpoint_point_set, line_point_set, sequential_ransac_two_lines, DetectionFrame,
    ExtractionParams, PointSet, RansacParams,
};
use crate::line::{fit_line_tls, polar_difference, residual_r, PolarLine};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservationError {
    #[error("no detected lines")]
    NoDetections,
    #[error("at most two detected lines are supported, got {0}")]
    TooManyDetections(usize),
    #[error("empty point set")]
    NoPoints,
    #[error("invalid observation parameters: {0}")]
    InvalidParams(String),
    #[error("unknown observation model `{0}`")]
    UnknownModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarObsParams {
    /// Per pixel.
    pub gamma_rho: f64,
    /// Per radian.
    pub gamma_theta: f64,
}

impl Default for PolarObsParams {
    fn default() -> Self {
        Self {
            gamma_rho: 0.1,
            gamma_theta: 20.0,
        }
    }
}

impl PolarObsParams {
    pub fn validate(&self) -> Result<(), ObservationError> {
        if self.gamma_rho > 0.0
            && self.gamma_theta > 0.0
            && self.gamma_rho.is_finite()
            && self.gamma_theta.is_finite()
        {
            Ok(())
        } else {
            Err(ObservationError::InvalidParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityObsParams {
    /// Pixel noise about the projected edge.
    pub sigma: f64,
}

impl Default for IntensityObsParams {
    fn default() -> Self {
        Self { sigma: 2.0 }
    }
}

impl IntensityObsParams {
    pub fn validate(&self) -> Result<(), ObservationError> {
        if self.sigma > 0.0 && self.sigma.is_finite() {
            Ok(())
        } else {
            Err(ObservationError::InvalidParams(format!("{self:?}")))
        }
    }

    /// `log N(0; 0, sigma^2)`, the best attainable per-point score.
    pub fn peak_log_density(&self) -> f64 {
        -0.5 * (2.0 * PI * self.sigma * self.sigma).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationModelKind {
    /// Baseline: line through the exact endpoint pixels.
    EndpointToPolar,
    EndpointIntensitiesToPolar,
    LineIntensitiesToPolar,
    EndpointIntensities,
    LineIntensities,
}

impl ObservationModelKind {
    pub const ALL: [Self; 5] = [
        Self::EndpointToPolar,
        Self::EndpointIntensitiesToPolar,
        Self::LineIntensitiesToPolar,
        Self::EndpointIntensities,
        Self::LineIntensities,
    ];

    /// The four models other than the baseline.
    pub const PROPOSED: [Self; 4] = [
        Self::EndpointIntensitiesToPolar,
        Self::LineIntensitiesToPolar,
        Self::EndpointIntensities,
        Self::LineIntensities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::EndpointToPolar => "endpoint-to-polar",
            Self::EndpointIntensitiesToPolar => "endpoint-intensities-to-polar",
            Self::LineIntensitiesToPolar => "line-intensities-to-polar",
            Self::EndpointIntensities => "endpoint-intensities",
            Self::LineIntensities => "line-intensities",
        }
    }

    pub fn is_polar(self) -> bool {
        matches!(
            self,
            Self::EndpointToPolar | Self::EndpointIntensitiesToPolar | Self::LineIntensitiesToPolar
        )
    }
}

impl fmt::Display for ObservationModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservationModelKind {
    type Err = ObservationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.name().replace('-', "") == norm)
            .ok_or_else(|| ObservationError::UnknownModel(s.to_string()))
    }
}

fn pair_cost(det: &PolarLine, proj: &PolarLine, pp: &PolarObsParams) -> f64 {
    let (dt, dr) = polar_difference(det, proj);
    pp.gamma_rho * dr.abs() + pp.gamma_theta * dt.abs()
}

fn log_sum_exp_neg(costs: &[f64]) -> f64 {
    let m = costs.iter().copied().fold(f64::INFINITY, f64::min);
    -m + costs.iter().map(|c| (m - c).exp()).sum::<f64>().ln()
}

/// Log-likelihood of detected lines given the two projected edges.
///
/// Detections are matched to projections by the assignment of least total
/// cost `gamma_rho |d rho| + gamma_theta |d theta|`; the result is
/// `log sum_i exp(-cost_i)` over matched pairs.
pub fn polar_log_likelihood(
    detected: &[PolarLine],
    projected: &[PolarLine; 2],
    pp: &PolarObsParams,
) -> Result<f64, ObservationError> {
    match detected {
        [] => Err(ObservationError::NoDetections),
        [d] => {
            let c = pair_cost(d, &projected[0], pp).min(pair_cost(d, &projected[1], pp));
            Ok(-c)
        }
        [d0, d1] => {
            let straight = [
                pair_cost(d0, &projected[0], pp),
                pair_cost(d1, &projected[1], pp),
            ];
            let crossed = [
                pair_cost(d0, &projected[1], pp),
                pair_cost(d1, &projected[0], pp),
            ];
            let (ls, lc) = (log_sum_exp_neg(&straight), log_sum_exp_neg(&crossed));
            let (ts, tc) = (straight[0] + straight[1], crossed[0] + crossed[1]);
            Ok(if ts < tc {
                ls
            } else if tc < ts {
                lc
            } else {
                ls.max(lc)
            })
        }
        more => Err(ObservationError::TooManyDetections(more.len())),
    }
}

/// Mean Gaussian log-density of pixel residuals, each pixel taken against
/// whichever projected edge it lies closer to.
pub fn intensity_log_likelihood(
    points: &PointSet,
    projected: &[PolarLine; 2],
    ip: &IntensityObsParams,
) -> Result<f64, ObservationError> {
    if points.is_empty() {
        return Err(ObservationError::NoPoints);
    }
    let inv_two_var = 1.0 / (2.0 * ip.sigma * ip.sigma);
    let sum_sq: f64 = points
        .iter()
        .map(|p| {
            let r = residual_r(p, &projected[0])
                .abs()
                .min(residual_r(p, &projected[1]).abs());
            r * r
        })
        .sum();
    Ok(ip.peak_log_density() - sum_sq * inv_two_var / points.len() as f64)
}

/// Frame-level evidence for one model.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Lines(Vec<PolarLine>),
    Points(PointSet),
    /// Nothing to score; the update is a no-op.
    Skip,
}

impl Evidence {
    pub fn is_skip(&self) -> bool {
        matches!(self, Evidence::Skip)
    }

    /// Log-likelihood for one particle's projected edges; 0 when skipping.
    pub fn score(
        &self,
        projected: &[PolarLine; 2],
        pp: &PolarObsParams,
        ip: &IntensityObsParams,
    ) -> f64 {
        match self {
            Evidence::Lines(lines) => polar_log_likelihood(lines, projected, pp).unwrap_or(0.0),
            Evidence::Points(points) => {
                intensity_log_likelihood(points, projected, ip).unwrap_or(0.0)
            }
            Evidence::Skip => 0.0,
        }
    }
}

fn endpoint_sets(frame: &DetectionFrame, ep: &ExtractionParams) -> PointSet {
    let sets: Vec<PointSet> = frame
        .segments()
        .iter()
        .flat_map(|s| [s.a, s.b])
        .map(|e| endpoint_point_set(frame, &e, ep))
        .collect();
    PointSet::union(&sets)
}

/// Union of the segment line sets. A frame with no segments at all has no
/// search region, so every heatmap pixel at or above `beta` is kept.
fn line_sets(frame: &DetectionFrame, ep: &ExtractionParams, rp: &RansacParams) -> PointSet {
    if frame.segments().is_empty() {
        return heat_consensus(frame, ep, rp);
    }
    let sets: Vec<PointSet> = frame
        .segments()
        .iter()
        .filter_map(|s| line_point_set(frame, &s.a, &s.b, ep).ok())
        .collect();
    PointSet::union(&sets)
}

/// Inliers of the two lines RANSAC finds among all pixels with `H >= beta`,
/// used when no segment survived to bound the line search.
fn heat_consensus(frame: &DetectionFrame, ep: &ExtractionParams, rp: &RansacParams) -> PointSet {
    let hot: PointSet = frame
        .heatmap()
        .iter()
        .filter(|h| h.intensity >= ep.beta)
        .map(|h| h.pixel)
        .collect();
    match sequential_ransac_two_lines(&hot, rp) {
        Ok(found) => PointSet::union(&found.into_iter().map(|f| f.inliers).collect::<Vec<_>>()),
        Err(_) => PointSet::new(),
    }
}

fn ransac_lines(points: &PointSet, rp: &RansacParams) -> Evidence {
    match sequential_ransac_two_lines(points, rp) {
        Ok(found) if !found.is_empty() => {
            Evidence::Lines(found.into_iter().map(|f| f.line).collect())
        }
        _ => Evidence::Skip,
    }
}

fn points_or_skip(points: PointSet) -> Evidence {
    if points.is_empty() {
        Evidence::Skip
    } else {
        Evidence::Points(points)
    }
}

/// Frame-level evidence for `kind`.
///
/// The baseline keeps, per segment, the heatmap pixels exactly at its two
/// endpoints and joins them; a segment needs both to yield a line.
pub fn extract_evidence(
    kind: ObservationModelKind,
    frame: &DetectionFrame,
    ep: &ExtractionParams,
    rp: &RansacParams,
) -> Evidence {
    match kind {
        ObservationModelKind::EndpointToPolar => {
            let exact = ExtractionParams {
                alpha_e: 0.0,
                ..*ep
            };
            let lines: Vec<PolarLine> = frame
                .segments()
                .iter()
                .filter_map(|s| {
                    let pts = PointSet::union(&[
                        endpoint_point_set(frame, &s.a, &exact),
                        endpoint_point_set(frame, &s.b, &exact),
                    ]);
                    if pts.len() < 2 {
                        None
                    } else {
                        fit_line_tls(pts.points())
                    }
                })
                .collect();
            if lines.is_empty() {
                Evidence::Skip
            } else {
                Evidence::Lines(lines)
            }
        }
        ObservationModelKind::EndpointIntensitiesToPolar => {
            ransac_lines(&endpoint_sets(frame, ep), rp)
        }
        ObservationModelKind::LineIntensitiesToPolar => ransac_lines(&line_sets(frame, ep, rp), rp),
        ObservationModelKind::EndpointIntensities => points_or_skip(endpoint_sets(frame, ep)),
        ObservationModelKind::LineIntensities => points_or_skip(line_sets(frame, ep, rp)),
    }
}

/// Extracts evidence and scores one set of projected edges (pixel polar
/// form). Returns 0 when the frame offers no evidence for `kind`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    kind: ObservationModelKind,
    frame: &DetectionFrame,
    projected: &[PolarLine; 2],
    ep: &ExtractionParams,
    rp: &RansacParams,
    pp: &PolarObsParams,
    ip: &IntensityObsParams,
) -> f64 {
    extract_evidence(kind, frame, ep, rp).score(projected, pp, ip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{
        synthesize_detection, EdgeTruth, HeatPixel, Segment, SyntheticDetectorParams,
    };
    use nalgebra::Vector2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const SIZE: (u32, u32) = (1920, 1080);

    fn projected() -> [PolarLine; 2] {
        [PolarLine::new(0.3, 700.0), PolarLine::new(0.35, 790.0)]
    }

    fn truth_edges() -> Vec<EdgeTruth> {
        projected()
            .iter()
            .map(|l| EdgeTruth {
                line: *l,
                span: (
                    l.foot() - l.direction() * 100.0,
                    l.foot() + l.direction() * 300.0,
                ),
            })
            .collect()
    }

    fn noiseless_frame() -> DetectionFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        synthesize_detection(
            &truth_edges(),
            &SyntheticDetectorParams::noiseless(),
            0.9,
            SIZE,
            &mut rng,
        )
        .unwrap()
    }

    fn shifted(lines: &[PolarLine; 2], d: f64) -> [PolarLine; 2] {
        [
            PolarLine::new(lines[0].theta, lines[0].rho + d),
            PolarLine::new(lines[1].theta, lines[1].rho + d),
        ]
    }

    #[test]
    fn polar_identical_pair_is_log_two() {
        let p = projected();
        let v = polar_log_likelihood(&p, &p, &PolarObsParams::default()).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn polar_single_match_is_zero() {
        let p = projected();
        let pp = PolarObsParams {
            gamma_rho: 3.7,
            gamma_theta: 0.2,
        };
        assert_eq!(polar_log_likelihood(&p[1..], &p, &pp).unwrap(), 0.0);
    }

    #[test]
    fn polar_no_detections() {
        assert_eq!(
            polar_log_likelihood(&[], &projected(), &PolarObsParams::default()),
            Err(ObservationError::NoDetections)
        );
    }

    #[test]
    fn polar_by_hand() {
        let p = projected();
        let det = [PolarLine::new(0.31, 703.0), PolarLine::new(0.35, 788.0)];
        let pp = PolarObsParams::default();
        let expected = ((-0.1f64 * 3.0 - 20.0 * 0.01).exp() + (-0.1f64 * 2.0).exp()).ln();
        let v = polar_log_likelihood(&det, &p, &pp).unwrap();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn polar_wrap_flips_rho() {
        let proj = [PolarLine::new(0.001, 50.0), PolarLine::new(1.5, 10.0)];
        // theta just below pi with negated rho is the same line as theta ~ 0.
        let det = [PolarLine::new(PI - 0.001, -50.0)];
        let v = polar_log_likelihood(&det, &proj, &PolarObsParams::default()).unwrap();
        assert!((v + 20.0 * 0.002).abs() < 1e-9);
    }

    #[test]
    fn intensity_on_line_is_peak() {
        let ip = IntensityObsParams::default();
        let p = projected();
        let pts = PointSet::from_points(
            (0..10).map(|i| p[i % 2].foot() + p[i % 2].direction() * i as f64),
        );
        let v = intensity_log_likelihood(&pts, &p, &ip).unwrap();
        assert!((v - ip.peak_log_density()).abs() < 1e-12);
    }

    #[test]
    fn intensity_one_sigma_point() {
        let ip = IntensityObsParams { sigma: 1.7 };
        let p = projected();
        let pts = PointSet::from_points([p[0].foot() - p[0].normal() * 1.7]);
        let v = intensity_log_likelihood(&pts, &p, &ip).unwrap();
        let expected = -0.5 * (2.0 * PI * 1.7 * 1.7).ln() - 0.5;
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn intensity_no_points() {
        assert_eq!(
            intensity_log_likelihood(
                &PointSet::new(),
                &projected(),
                &IntensityObsParams::default()
            ),
            Err(ObservationError::NoPoints)
        );
    }

    #[test]
    fn residual_variance_matches_sigma() {
        let sigma = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..8 {
            let l = PolarLine::new(k as f64 * PI / 8.0 + 0.05, 300.0);
            let n = 10_000;
            let rs: Vec<f64> = (0..n)
                .map(|_| {
                    let s: f64 = rng.random_range(-500.0..500.0);
                    let dx: f64 = rng.sample(StandardNormal);
                    let dy: f64 = rng.sample(StandardNormal);
                    let p = l.foot() + l.direction() * s + Vector2::new(dx, dy) * sigma;
                    residual_r(&p, &l)
                })
                .collect();
            let mean = rs.iter().sum::<f64>() / n as f64;
            let var = rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(
                (var / (sigma * sigma) - 1.0).abs() < 0.05,
                "angle {k}: var {var}"
            );
        }
    }

    #[test]
    fn noiseless_endpoint_intensities_is_peak() {
        let frame = noiseless_frame();
        let ip = IntensityObsParams::default();
        let v = evaluate_model(
            ObservationModelKind::EndpointIntensities,
            &frame,
            &projected(),
            &ExtractionParams::default(),
            &RansacParams::default(),
            &PolarObsParams::default(),
            &ip,
        );
        assert!((v - ip.peak_log_density()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_intensities_decrease_with_offset() {
        let frame = noiseless_frame();
        let args = (
            ExtractionParams::default(),
            RansacParams::default(),
            PolarObsParams::default(),
        );
        let ip = IntensityObsParams::default();
        let values: Vec<f64> = (0..=50)
            .map(|i| {
                let proj = shifted(&projected(), i as f64 * 0.1);
                evaluate_model(
                    ObservationModelKind::EndpointIntensities,
                    &frame,
                    &proj,
                    &args.0,
                    &args.1,
                    &args.2,
                    &ip,
                )
            })
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn full_dropout_skips_baseline_only() {
        let sp = SyntheticDetectorParams {
            endpoint_dropout_prob: 1.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frame = synthesize_detection(&truth_edges(), &sp, 0.9, SIZE, &mut rng).unwrap();
        let ep = ExtractionParams::default();
        let rp = RansacParams::default();
        assert!(
            extract_evidence(ObservationModelKind::EndpointToPolar, &frame, &ep, &rp).is_skip()
        );
        assert!(
            extract_evidence(ObservationModelKind::EndpointIntensities, &frame, &ep, &rp).is_skip()
        );
        let v = evaluate_model(
            ObservationModelKind::LineIntensities,
            &frame,
            &projected(),
            &ep,
            &rp,
            &PolarObsParams::default(),
            &IntensityObsParams::default(),
        );
        assert!(v.is_finite() && v != 0.0);
    }

    #[test]
    fn baseline_joins_exact_endpoints() {
        let l = projected()[0];
        let (a, b) = (l.foot(), l.foot() + l.direction() * 200.0);
        let frame = DetectionFrame::new(
            vec![Segment::new(a, b)],
            vec![
                HeatPixel::new(a.x, a.y, 1.0),
                HeatPixel::new(b.x, b.y, 0.95),
            ],
            SIZE,
        )
        .unwrap();
        let ev = extract_evidence(
            ObservationModelKind::EndpointToPolar,
            &frame,
            &ExtractionParams::default(),
            &RansacParams::default(),
        );
        let Evidence::Lines(lines) = ev else {
            panic!("{ev:?}")
        };
        let (dt, dr) = polar_difference(&lines[0], &l);
        assert!(dt.abs() < 1e-9 && dr.abs() < 1e-6);
    }

    #[test]
    fn model_names_round_trip() {
        for k in ObservationModelKind::ALL {
            assert_eq!(k.name().parse::<ObservationModelKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert_eq!(
            "LineIntensities".parse::<ObservationModelKind>().unwrap(),
            ObservationModelKind::LineIntensities
        );
        assert!("hough".parse::<ObservationModelKind>().is_err());
    }

    fn arb_line() -> impl Strategy<Value = PolarLine> {
        (0.0..PI, -800.0..800.0f64).prop_map(|(t, r)| PolarLine::new(t, r))
    }

    proptest! {
        #[test]
        fn polar_invariant_to_detection_order(a in arb_line(), b in arb_line(), p0 in arb_line(), p1 in arb_line()) {
            let pp = PolarObsParams::default();
            let x = polar_log_likelihood(&[a, b], &[p0, p1], &pp).unwrap();
            let y = polar_log_likelihood(&[b, a], &[p0, p1], &pp).unwrap();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn intensity_invariant_to_point_order(pts in prop::collection::vec((0.0..1920.0f64, 0.0..1080.0f64), 1..40)) {
            let ip = IntensityObsParams::default();
            let fwd = PointSet::from_points(pts.iter().map(|&(x, y)| Vector2::new(x, y)));
            let rev = PointSet::from_points(pts.iter().rev().map(|&(x, y)| Vector2::new(x, y)));
            let a = intensity_log_likelihood(&fwd, &projected(), &ip).unwrap();
            let b = intensity_log_likelihood(&rev, &projected(), &ip).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn intensity_non_increasing_under_perpendicular_offset(d1 in 0.0..20.0f64, extra in 0.0..20.0f64) {
            let ip = IntensityObsParams::default();
            let l = PolarLine::new(0.4, 300.0);
            let far = [l, PolarLine::new(0.4, 1000.0)];
            let at = |d: f64| PointSet::from_points((0..20).map(|i| l.foot() + l.direction() * (i as f64 * 7.0) + l.normal() * d));
            let a = intensity_log_likelihood(&at(d1), &far, &ip).unwrap();
            let b = intensity_log_likelihood(&at(d1 + extra), &far, &ip).unwrap();
            prop_assert!(b <= a);
        }
    }
}
