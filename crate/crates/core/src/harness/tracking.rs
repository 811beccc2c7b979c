use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::TrackingConfig;
use super::metrics::MetricsReport;
use super::HarnessError;
use crate::detection::FrameRecord;
use crate::filter::{
    effective_sample_size, estimate, initialize, predict, resample_systematic, update,
    ObservationSetup,
};
use crate::observation::ObservationModelKind;
use crate::pose::LumpedErrorParams;
use crate::rng::{stream, Domain};
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingRun {
    pub model: ObservationModelKind,
    pub report: MetricsReport,
    pub estimates: Vec<LumpedErrorParams>,
    pub estimated_tip_px: Vec<[f64; 2]>,
    pub skipped: Vec<bool>,
    pub resampled: Vec<bool>,
}

/// RANSAC seed for `frame`; shared by every model run with the same filter seed.
pub fn ransac_seed(seed: u64, frame: usize) -> u64 {
    stream(seed, Domain::Ransac, frame as u32, 0).random()
}

/// Runs the filter over `records`. Each frame: predict, update, resample
/// when the effective sample size falls below the configured fraction, then
/// estimate and score the tip against ground truth.
pub fn run_tracking(
    records: &[FrameRecord],
    scene: &Scene,
    kind: ObservationModelKind,
    cfg: &TrackingConfig,
) -> Result<TrackingRun, HarnessError> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let seed = cfg.filter.seed;
    let n = cfg.filter.n_particles as f64;
    let mut particles = initialize(&cfg.filter).map_err(|e| HarnessError::Filter {
        frame: 0,
        source: e,
    })?;
    let mut run = TrackingRun {
        model: kind,
        report: MetricsReport::from_errors(vec![0.0], scene.camera(), 0)?,
        estimates: Vec::with_capacity(records.len()),
        estimated_tip_px: Vec::with_capacity(records.len()),
        skipped: Vec::with_capacity(records.len()),
        resampled: Vec::with_capacity(records.len()),
    };
    let mut errors = Vec::with_capacity(records.len());

    for (frame, record) in records.iter().enumerate() {
        let filter_err = |source| HarnessError::Filter { frame, source };
        let gt = record
            .gt
            .ok_or(HarnessError::MissingGroundTruth { frame })?;
        let ransac = cfg.ransac.with_seed(ransac_seed(seed, frame));
        let setup = ObservationSetup {
            scene,
            kind,
            extraction: &cfg.extraction,
            ransac: &ransac,
            polar: &cfg.observation.polar,
            intensity: &cfg.observation.intensity,
        };

        let predicted = predict(&particles, &cfg.motion, seed, frame as u32);
        let outcome = update(&predicted, &record.frame, &record.q, &setup).map_err(filter_err)?;
        particles = outcome.particles;
        let resample = effective_sample_size(&particles).map_err(filter_err)?
            < cfg.filter.resample_ess_fraction * n;
        if resample {
            particles = resample_systematic(&particles, seed, frame as u32).map_err(filter_err)?;
        }
        let est = estimate(&particles).map_err(filter_err)?;
        let tip = scene
            .tip_pixel(&record.q, &est)
            .map_err(|source| HarnessError::Scene { frame, source })?;

        errors.push((tip - gt.tip_px).norm());
        run.estimates.push(est);
        run.estimated_tip_px.push([tip.x, tip.y]);
        run.skipped.push(outcome.skipped);
        run.resampled.push(resample);
    }
    let skipped = run.skipped.iter().filter(|&&s| s).count();
    run.report = MetricsReport::from_errors(errors, scene.camera(), skipped)?;
    Ok(run)
}
