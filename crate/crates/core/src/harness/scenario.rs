use super::config::ScenarioConfig;
use super::HarnessError;
use crate::detection::{synthesize_detection, FrameRecord, GroundTruth};
use crate::pose::LumpedErrorParams;
use crate::rng::{stream, Domain};

/// Synthesizes a dataset: the ground truth walks from `gt_initial`, joints
/// follow their sinusoids, and each frame carries synthetic detections of the
/// true shaft edges plus the true tip pixel. `beta` sets the clutter
/// intensity floor.
pub fn generate_scenario(
    cfg: &ScenarioConfig,
    beta: f64,
) -> Result<Vec<FrameRecord>, HarnessError> {
    cfg.validate()?;
    let scene = cfg.scene()?;
    let size = scene.camera().image_size();
    let mut gt = cfg.gt_initial;
    let mut records = Vec::with_capacity(cfg.n_frames);
    for frame in 0..cfg.n_frames {
        if frame > 0 {
            let mut rng = stream(cfg.seed, Domain::GroundTruthWalk, frame as u32, 0);
            gt = LumpedErrorParams::from_vector(
                &(gt.to_vector() + cfg.gt_walk_cov.sample(&mut rng)),
            );
        }
        let q = cfg.joints_at(frame);
        let invalid = |source| HarnessError::ProjectionInvalid { frame, source };
        let edges = scene.edge_truth(&q, &gt).map_err(invalid)?;
        let tip_px = scene.tip_pixel(&q, &gt).map_err(invalid)?;
        let mut rng = stream(cfg.seed, Domain::Detector, frame as u32, 0);
        let detection = synthesize_detection(&edges, &cfg.detector, beta, size, &mut rng)?;
        records.push(FrameRecord {
            t: frame as u64,
            q,
            frame: detection,
            gt: Some(GroundTruth { params: gt, tip_px }),
        });
    }
    Ok(records)
}
