use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::TrackingConfig;
use super::tracking::{run_tracking, TrackingRun};
use crate::detection::FrameRecord;
use crate::observation::ObservationModelKind;
use crate::scene::Scene;

pub const CSV_HEADER: &str = "model,mean_pct,std_pct,final_accumulated_pct,skipped_frames";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: ObservationModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<TrackingRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// One header row, then one row per model. Failed models carry `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            match &row.run {
                Some(run) => {
                    let r = &run.report;
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        row.model,
                        r.mean_pct,
                        r.std_pct,
                        r.final_accumulated_pct(),
                        r.skipped_frames
                    )
                }
                None => writeln!(out, "{},nan,nan,nan,nan", row.model),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serialization is infallible")
    }

    pub fn row(&self, kind: ObservationModelKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model == kind)
    }
}

/// Tracks `records` once per model with identical seeds and settings.
pub fn compare_models(
    records: &[FrameRecord],
    scene: &Scene,
    kinds: &[ObservationModelKind],
    cfg: &TrackingConfig,
) -> Comparison {
    let rows = kinds
        .iter()
        .map(|&model| match run_tracking(records, scene, model, cfg) {
            Ok(run) => ComparisonRow {
                model,
                run: Some(run),
                error: None,
            },
            Err(e) => ComparisonRow {
                model,
                run: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Comparison { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::SyntheticDetectorParams;
    use crate::harness::config::HarnessConfig;
    use crate::harness::scenario::generate_scenario;

    fn setup(dropout: f64) -> (Vec<FrameRecord>, Scene, TrackingConfig) {
        let mut cfg = HarnessConfig::default();
        cfg.scenario.n_frames = 30;
        cfg.scenario.detector = SyntheticDetectorParams {
            endpoint_dropout_prob: dropout,
            ..Default::default()
        };
        cfg.tracking.filter.n_particles = 60;
        let records = generate_scenario(&cfg.scenario, 0.9).unwrap();
        (records, cfg.scenario.scene().unwrap(), cfg.tracking)
    }

    #[test]
    fn rows_match_standalone_runs() {
        let (records, scene, cfg) = setup(0.1);
        let cmp = compare_models(&records, &scene, &ObservationModelKind::ALL, &cfg);
        assert_eq!(cmp.rows.len(), 5);
        for kind in [
            ObservationModelKind::EndpointIntensities,
            ObservationModelKind::LineIntensitiesToPolar,
        ] {
            let alone = run_tracking(&records, &scene, kind, &cfg).unwrap();
            assert_eq!(cmp.row(kind).unwrap().run.as_ref().unwrap(), &alone);
        }
        let csv = cmp.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("endpoint-to-polar,"));
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn dropout_skips_baseline_more() {
        let (records, scene, cfg) = setup(0.9);
        let kinds = [
            ObservationModelKind::EndpointToPolar,
            ObservationModelKind::LineIntensities,
        ];
        let cmp = compare_models(&records, &scene, &kinds, &cfg);
        let skipped = |k| {
            cmp.row(k)
                .unwrap()
                .run
                .as_ref()
                .unwrap()
                .report
                .skipped_frames
        };
        assert!(skipped(kinds[0]) > skipped(kinds[1]));
    }

    #[test]
    fn failing_model_is_marked() {
        let (mut records, scene, cfg) = setup(0.1);
        records[2].gt = None;
        let cmp = compare_models(
            &records,
            &scene,
            &[ObservationModelKind::LineIntensities],
            &cfg,
        );
        assert!(cmp.rows[0].error.is_some());
        assert!(cmp
            .to_csv()
            .lines()
            .nth(1)
            .unwrap()
            .ends_with("nan,nan,nan,nan"));
    }
}
