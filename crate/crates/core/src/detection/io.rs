//! JSON Lines replay. One frame per line:
//!
//! ```text
//! {"t": 0, "q": [..], "segments": [[[u,v],[u,v]], ..], "heatmap": [[u,v,i], ..],
//!  "gt": {"b": [3], "w": [3], "tip_px": [2]} | null}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DetectionError, DetectionFrame, HeatPixel, Segment};
use crate::pose::LumpedErrorParams;

const REQUIRED_FIELDS: [&str; 4] = ["t", "q", "segments", "heatmap"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub params: LumpedErrorParams,
    pub tip_px: Vector2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub t: u64,
    pub q: Vec<f64>,
    pub frame: DetectionFrame,
    pub gt: Option<GroundTruth>,
}

#[derive(Serialize, Deserialize)]
struct RawGroundTruth {
    b: [f64; 3],
    w: [f64; 3],
    tip_px: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    t: u64,
    q: Vec<f64>,
    segments: Vec<[[f64; 2]; 2]>,
    heatmap: Vec<[f64; 3]>,
    gt: Option<RawGroundTruth>,
}

impl FrameRecord {
    fn to_raw(&self) -> RawRecord {
        RawRecord {
            t: self.t,
            q: self.q.clone(),
            segments: self
                .frame
                .segments()
                .iter()
                .map(|s| [[s.a.x, s.a.y], [s.b.x, s.b.y]])
                .collect(),
            heatmap: self
                .frame
                .heatmap()
                .iter()
                .map(|h| [h.pixel.x, h.pixel.y, h.intensity])
                .collect(),
            gt: self.gt.map(|g| RawGroundTruth {
                b: (*g.params.b()).into(),
                w: (*g.params.w()).into(),
                tip_px: g.tip_px.into(),
            }),
        }
    }

    /// Single-line JSON encoding (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("record serialization is infallible")
    }

    /// Parses one JSONL line; `line` is the 1-based line number for errors.
    pub fn from_json_line(
        text: &str,
        line: usize,
        image_size: (u32, u32),
    ) -> Result<Self, DetectionError> {
        let value: Value = serde_json::from_str(text).map_err(|e| DetectionError::Parse {
            line,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| DetectionError::Parse {
            line,
            message: "record is not a JSON object".into(),
        })?;
        if let Some(missing) = REQUIRED_FIELDS.iter().find(|f| !obj.contains_key(**f)) {
            return Err(DetectionError::Schema {
                line,
                field: (*missing).to_string(),
            });
        }
        let raw: RawRecord = serde_json::from_value(value).map_err(|e| DetectionError::Schema {
            line,
            field: e.to_string(),
        })?;
        let wrap = |source| DetectionError::Record {
            line,
            source: Box::new(source),
        };
        let segments = raw
            .segments
            .iter()
            .map(|[a, b]| Segment::new(Vector2::from(*a), Vector2::from(*b)))
            .collect();
        let heatmap = raw
            .heatmap
            .iter()
            .map(|[u, v, i]| HeatPixel::new(*u, *v, *i))
            .collect();
        let frame = DetectionFrame::new(segments, heatmap, image_size).map_err(wrap)?;
        let gt = raw.gt.map(|g| GroundTruth {
            params: LumpedErrorParams::new(Vector3::from(g.b), Vector3::from(g.w)),
            tip_px: Vector2::from(g.tip_px),
        });
        Ok(Self {
            t: raw.t,
            q: raw.q,
            frame,
            gt,
        })
    }
}

/// Streaming reader over a JSONL dataset. Blank lines are skipped.
pub struct FrameReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    image_size: (u32, u32),
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(reader: R, image_size: (u32, u32)) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            image_size,
        }
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<FrameRecord, DetectionError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let text = match line {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            if text.trim().is_empty() {
                continue;
            }
            return Some(FrameRecord::from_json_line(
                &text,
                self.line_no,
                self.image_size,
            ));
        }
    }
}

/// Opens a dataset for streaming. Frames are validated against `image_size`.
pub fn load_frames(
    path: impl AsRef<Path>,
    image_size: (u32, u32),
) -> Result<FrameReader<BufReader<File>>, DetectionError> {
    let file = File::open(path)?;
    Ok(FrameReader::new(BufReader::new(file), image_size))
}

pub fn write_frames<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a FrameRecord>,
) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json_line())?;
    }
    w.flush()
}
