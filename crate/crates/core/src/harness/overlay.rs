use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use super::HarnessError;
use crate::detection::{DetectionFrame, PointSet};
use crate::line::PolarLine;
use crate::scene::clip_segment;

/// What to draw on top of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay<'a> {
    pub frame: &'a DetectionFrame,
    pub projected: &'a [PolarLine],
    pub evidence: &'a PointSet,
    pub estimate_tip: Option<Vector2<f64>>,
    pub gt_tip: Option<Vector2<f64>>,
}

/// The drawable part of `line`, or `None` when it misses the image.
pub fn line_in_image(line: &PolarLine, size: (u32, u32)) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let reach = 4.0 * (size.0 as f64).hypot(size.1 as f64);
    let foot = line.foot();
    clip_segment(
        foot - line.direction() * reach,
        foot + line.direction() * reach,
        size,
    )
}

/// SVG text of the overlay. Coordinates are printed with three decimals, so
/// identical inputs give identical bytes.
pub fn render_svg(o: &Overlay<'_>) -> String {
    let (w, h) = o.frame.image_size();
    let mut s = String::new();
    let mut put = |text: String| s.push_str(&text);
    put(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    put(format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
    ));
    for hp in o.frame.heatmap() {
        put(format!(
            "<circle class=\"heat\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"1\" fill=\"#b0b0b0\" fill-opacity=\"{:.3}\"/>\n",
            hp.pixel.x, hp.pixel.y, hp.intensity
        ));
    }
    for seg in o.frame.segments() {
        put(format!(
            "<line class=\"segment\" x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
            seg.a.x, seg.a.y, seg.b.x, seg.b.y
        ));
    }
    for p in o.evidence.iter() {
        put(format!(
            "<circle class=\"evidence\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"1.5\" fill=\"#ff7f0e\"/>\n",
            p.x, p.y
        ));
    }
    for line in o.projected {
        if let Some((a, b)) = line_in_image(line, (w, h)) {
            put(format!(
                "<line class=\"projected\" x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#d62728\" stroke-width=\"1\"/>\n",
                a.x, a.y, b.x, b.y
            ));
        }
    }
    if let Some(t) = o.gt_tip {
        put(format!(
            "<path class=\"gt-tip\" d=\"M {:.3} {:.3} L {:.3} {:.3} M {:.3} {:.3} L {:.3} {:.3}\" stroke=\"#2ca02c\" stroke-width=\"2\"/>\n",
            t.x - 8.0,
            t.y - 8.0,
            t.x + 8.0,
            t.y + 8.0,
            t.x - 8.0,
            t.y + 8.0,
            t.x + 8.0,
            t.y - 8.0
        ));
    }
    if let Some(t) = o.estimate_tip {
        put(format!(
            "<circle class=\"estimate-tip\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"8\" fill=\"none\" stroke=\"#9467bd\" stroke-width=\"2\"/>\n",
            t.x, t.y
        ));
    }
    let _ = writeln!(s, "</svg>");
    s
}

pub fn render_overlay(o: &Overlay<'_>, out: impl AsRef<Path>) -> Result<(), HarnessError> {
    std::fs::write(out, render_svg(o))?;
    Ok(())
}
