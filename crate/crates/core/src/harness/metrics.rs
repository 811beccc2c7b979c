use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::camera::CameraIntrinsics;

/// Tip error as a percentage of the image diagonal.
pub fn tip_error_percent(err_px: f64, k: &CameraIntrinsics) -> f64 {
    100.0 * err_px / k.diagonal()
}

/// Running mean: element `k` is the mean of the first `k + 1` inputs.
pub fn accumulated_error(per_frame_pct: &[f64]) -> Result<Vec<f64>, HarnessError> {
    if per_frame_pct.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    Ok(per_frame_pct
        .iter()
        .scan(0.0, |sum, &x| {
            *sum += x;
            Some(*sum)
        })
        .enumerate()
        .map(|(k, s)| s / (k + 1) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_frame_error_px: Vec<f64>,
    pub per_frame_error_pct: Vec<f64>,
    pub accumulated_error_pct: Vec<f64>,
    pub mean_pct: f64,
    /// Population standard deviation.
    pub std_pct: f64,
    pub skipped_frames: usize,
}

impl MetricsReport {
    pub fn from_errors(
        errors_px: Vec<f64>,
        k: &CameraIntrinsics,
        skipped_frames: usize,
    ) -> Result<Self, HarnessError> {
        let pct: Vec<f64> = errors_px.iter().map(|&e| tip_error_percent(e, k)).collect();
        let accumulated = accumulated_error(&pct)?;
        let n = pct.len() as f64;
        let mean = pct.iter().sum::<f64>() / n;
        let std = (pct.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self {
            per_frame_error_px: errors_px,
            per_frame_error_pct: pct,
            accumulated_error_pct: accumulated,
            mean_pct: mean,
            std_pct: std,
            skipped_frames,
        })
    }

    pub fn final_accumulated_pct(&self) -> f64 {
        *self
            .accumulated_error_pct
            .last()
            .expect("reports are never empty")
    }
}
