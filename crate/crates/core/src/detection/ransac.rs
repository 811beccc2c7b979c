use nalgebra::Vector2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DetectionError, PointSet, RansacParams};
use crate::line::{fit_line_tls, residual_r, PolarLine};

/// A line recovered by RANSAC and the consensus set it was refit on.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedLine {
    pub line: PolarLine,
    pub inliers: PointSet,
}

struct Consensus {
    count: usize,
    residual_sum: f64,
    line: PolarLine,
}

fn ransac_once(
    points: &[Vector2<f64>],
    rp: &RansacParams,
    rng: &mut ChaCha8Rng,
) -> Option<(PolarLine, Vec<usize>)> {
    let mut best: Option<Consensus> = None;
    let mut sample = Vec::with_capacity(rp.min_samples);
    for _ in 0..rp.max_trials {
        sample.clear();
        sample.extend(
            index::sample(rng, points.len(), rp.min_samples)
                .iter()
                .map(|i| points[i]),
        );
        let Some(line) = fit_line_tls(&sample) else {
            continue;
        };
        let (count, residual_sum) = points.iter().fold((0usize, 0.0), |(c, s), p| {
            let r = residual_r(p, &line).abs();
            if r <= rp.residual_threshold {
                (c + 1, s + r)
            } else {
                (c, s)
            }
        });
        let better = match &best {
            None => true,
            Some(b) => count > b.count || (count == b.count && residual_sum < b.residual_sum),
        };
        if better {
            best = Some(Consensus {
                count,
                residual_sum,
                line,
            });
        }
    }
    let best = best.filter(|b| b.count >= rp.min_samples)?;
    let inliers: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| residual_r(p, &best.line).abs() <= rp.residual_threshold)
        .map(|(i, _)| i)
        .collect();
    let inlier_pts: Vec<_> = inliers.iter().map(|&i| points[i]).collect();
    let refit = fit_line_tls(&inlier_pts)?;
    Some((refit, inliers))
}

/// Sequential RANSAC: fit a line, remove its inliers, repeat until two lines
/// are found or the pass budget is spent. Lines are returned by inlier count,
/// largest first.
pub fn sequential_ransac_two_lines(
    points: &PointSet,
    rp: &RansacParams,
) -> Result<Vec<FittedLine>, DetectionError> {
    rp.validate()?;
    if points.len() < rp.min_samples {
        return Err(DetectionError::InsufficientPoints {
            needed: rp.min_samples,
            got: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rp.seed);
    let mut remaining: Vec<Vector2<f64>> = points.points().to_vec();
    let mut lines = Vec::with_capacity(2);
    for _ in 0..rp.passes {
        if lines.len() == 2 || remaining.len() < rp.min_samples {
            break;
        }
        let Some((line, inliers)) = ransac_once(&remaining, rp, &mut rng) else {
            continue;
        };
        let mut is_inlier = vec![false; remaining.len()];
        for &i in &inliers {
            is_inlier[i] = true;
        }
        let inlier_pts = inliers.iter().map(|&i| remaining[i]);
        lines.push(FittedLine {
            line,
            inliers: PointSet::from_points(inlier_pts),
        });
        let mut keep = is_inlier.iter().map(|&x| !x);
        remaining.retain(|_| keep.next().unwrap_or(true));
    }
    lines.sort_by_key(|l| std::cmp::Reverse(l.inliers.len()));
    Ok(lines)
}
