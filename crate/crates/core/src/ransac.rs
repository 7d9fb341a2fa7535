//! RANSAC pose estimation over descriptor correspondences, with an optional
//! polygon edge-length prefilter that discards non-isometric samples before
//! any transform is estimated.

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{estimate_rigid_transform, Point3, RigidTransform};
use crate::matching::{match_descriptors, CorrespondenceSet, MatchError, MatchOptions};
use crate::spatial::KdTree;
use crate::Model;

/// Edges shorter than this on both polygons make a sample degenerate.
const MIN_EDGE: f64 = 1e-9;
/// Consecutive sample redraws tolerated before giving up.
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RansacError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate sample: polygon edge {0} has zero length")]
    DegenerateSample(usize),
    #[error("insufficient correspondences: {have} available, {need} required")]
    InsufficientCorrespondences { have: usize, need: usize },
    #[error("no consensus after {} iterations", .0.iterations_run)]
    NoConsensus(Box<RansacStats>),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// `log(1 − p) / log(1 − wⁿ)` rounded to the nearest integer, at least 1.
pub fn required_iterations(p: f64, w: f64, n: usize) -> Result<usize, RansacError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RansacError::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    if !(w > 0.0 && w <= 1.0) {
        return Err(RansacError::InvalidParameter(format!("w must lie in (0, 1], got {w}")));
    }
    if n < 1 {
        return Err(RansacError::InvalidParameter("n must be at least 1".into()));
    }
    let denom = (-w.powi(n as i32)).ln_1p();
    if denom == f64::NEG_INFINITY {
        return Ok(1);
    }
    let k = (1.0 - p).ln() / denom;
    Ok((k.round() as usize).max(1))
}

/// Relative edge-length dissimilarity of the closed polygons through the
/// sampled object and scene points: `|d_p − d_q| / max(d_p, d_q)` per edge.
pub fn polygon_dissimilarity(object_pts: &[Point3], scene_pts: &[Point3]) -> Result<Vec<f64>, RansacError> {
    let n = object_pts.len();
    if n < 3 || scene_pts.len() != n {
        return Err(RansacError::InvalidParameter(format!(
            "need two polygons of equal size >= 3, got {n} and {}",
            scene_pts.len()
        )));
    }
    let mut delta = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + 1) % n;
        let dp = (object_pts[j] - object_pts[i]).norm();
        let dq = (scene_pts[j] - scene_pts[i]).norm();
        let m = dp.max(dq);
        if m < MIN_EDGE {
            return Err(RansacError::DegenerateSample(i));
        }
        delta.push((dp - dq).abs() / m);
    }
    Ok(delta)
}

fn max_dissimilarity(object_pts: &[Point3], scene_pts: &[Point3]) -> Result<f64, RansacError> {
    let n = object_pts.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let j = (i + 1) % n;
        let dp = (object_pts[j] - object_pts[i]).norm();
        let dq = (scene_pts[j] - scene_pts[i]).norm();
        let m = dp.max(dq);
        if m < MIN_EDGE {
            return Err(RansacError::DegenerateSample(i));
        }
        worst = worst.max((dp - dq).abs() / m);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub sample_size: usize,
    pub t_poly: f64,
    pub inlier_dist: f64,
    pub min_inlier_fraction: f64,
    pub iterations: usize,
    /// Stop as soon as a hypothesis' mean fit drops below this (meters).
    pub convergence_error: Option<f64>,
    pub prefilter: bool,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            sample_size: 3,
            t_poly: 0.25,
            inlier_dist: 0.01,
            min_inlier_fraction: 0.5,
            iterations: required_iterations(0.99, 0.05, 3).expect("valid defaults"),
            convergence_error: None,
            prefilter: true,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), RansacError> {
        let bad = |m: String| Err(RansacError::InvalidParameter(m));
        if self.sample_size < 3 {
            return bad(format!("sample size must be >= 3, got {}", self.sample_size));
        }
        if !(self.t_poly > 0.0 && self.t_poly < 1.0) {
            return bad(format!("t_poly must lie in (0, 1), got {}", self.t_poly));
        }
        if !(self.inlier_dist > 0.0) || !self.inlier_dist.is_finite() {
            return bad(format!("inlier distance must be positive, got {}", self.inlier_dist));
        }
        if !(self.min_inlier_fraction > 0.0 && self.min_inlier_fraction <= 1.0) {
            return bad(format!(
                "min inlier fraction must lie in (0, 1], got {}",
                self.min_inlier_fraction
            ));
        }
        if self.iterations == 0 {
            return bad("iteration count must be >= 1".into());
        }
        if let Some(c) = self.convergence_error {
            if !(c > 0.0) {
                return bad(format!("convergence error must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

/// Loop counters. `samples_drawn` counts every draw including redraws, so two
/// runs with the same seed and correspondences agree on it whether or not the
/// prefilter is enabled.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct RansacStats {
    pub iterations_run: usize,
    pub samples_drawn: usize,
    pub sample_redraws: usize,
    pub rejected_by_polygon: usize,
    pub rejected_by_inliers: usize,
    pub rejected_degenerate: usize,
    pub estimations: usize,
    pub accepted: usize,
    pub correspondences: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub pose: RigidTransform,
    pub inlier_count: usize,
    pub mean_fit: f64,
    pub stats: RansacStats,
    pub elapsed: Duration,
}

struct Sampler {
    rng: ChaCha8Rng,
    n: usize,
}

impl Sampler {
    fn draw(&mut self, corr: &CorrespondenceSet, stats: &mut RansacStats) -> Result<Vec<usize>, RansacError> {
        let entries = corr.entries();
        for _ in 0..MAX_REDRAWS {
            stats.samples_drawn += 1;
            let picks = sample(&mut self.rng, entries.len(), self.n).into_vec();
            let distinct = picks.iter().enumerate().all(|(k, &a)| {
                picks[..k]
                    .iter()
                    .all(|&b| entries[a].scene_index != entries[b].scene_index)
            });
            if distinct {
                return Ok(picks);
            }
            stats.sample_redraws += 1;
        }
        Err(RansacError::InsufficientCorrespondences {
            have: entries.len(),
            need: self.n,
        })
    }
}

/// Full registration: descriptor matching followed by the RANSAC loop.
pub fn register(
    object: &Model,
    scene: &Model,
    cfg: &RansacConfig,
    match_opts: &MatchOptions,
) -> Result<RansacResult, RansacError> {
    cfg.validate()?;
    let outcome = match_descriptors(&object.descriptors, &scene.descriptors, match_opts)?;
    register_correspondences(
        &object.positions(),
        &scene.positions(),
        &outcome.correspondences,
        cfg,
    )
}

/// RANSAC over a precomputed correspondence set whose indices refer to
/// `object_pts` and `scene_pts`.
pub fn register_correspondences(
    object_pts: &[Point3],
    scene_pts: &[Point3],
    corr: &CorrespondenceSet,
    cfg: &RansacConfig,
) -> Result<RansacResult, RansacError> {
    cfg.validate()?;
    let n = cfg.sample_size;
    if corr.len() < n {
        return Err(RansacError::InsufficientCorrespondences {
            have: corr.len(),
            need: n,
        });
    }
    if let Some(c) = corr
        .iter()
        .find(|c| c.object_index >= object_pts.len() || c.scene_index >= scene_pts.len())
    {
        return Err(RansacError::InvalidParameter(format!(
            "correspondence ({}, {}) out of range",
            c.object_index, c.scene_index
        )));
    }

    let start = Instant::now();
    let tree = KdTree::new(scene_pts.iter().map(|p| [p.x, p.y, p.z]).collect());
    let entries = corr.entries();
    let required = cfg.min_inlier_fraction * object_pts.len() as f64;
    let inlier_sq = cfg.inlier_dist * cfg.inlier_dist;

    let mut stats = RansacStats {
        correspondences: corr.len(),
        ..Default::default()
    };
    let mut sampler = Sampler {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        n,
    };
    let mut sample_obj = vec![Point3::origin(); n];
    let mut sample_scene = vec![Point3::origin(); n];
    let mut inlier_obj: Vec<Point3> = Vec::with_capacity(object_pts.len());
    let mut inlier_scene: Vec<Point3> = Vec::with_capacity(object_pts.len());
    let mut best: Option<(RigidTransform, usize, f64)> = None;

    for _ in 0..cfg.iterations {
        stats.iterations_run += 1;
        let picks = sampler.draw(corr, &mut stats)?;
        for (k, &i) in picks.iter().enumerate() {
            sample_obj[k] = object_pts[entries[i].object_index];
            sample_scene[k] = scene_pts[entries[i].scene_index];
        }

        if cfg.prefilter {
            match max_dissimilarity(&sample_obj, &sample_scene) {
                Ok(d) if d <= cfg.t_poly => {}
                Ok(_) => {
                    stats.rejected_by_polygon += 1;
                    continue;
                }
                Err(_) => {
                    stats.rejected_degenerate += 1;
                    continue;
                }
            }
        }

        stats.estimations += 1;
        let Ok(hypothesis) = estimate_rigid_transform(&sample_obj, &sample_scene) else {
            stats.rejected_degenerate += 1;
            continue;
        };

        inlier_obj.clear();
        inlier_scene.clear();
        for p in object_pts {
            let tp = hypothesis.apply(p);
            if let Some(hit) = tree.nearest_within(&[tp.x, tp.y, tp.z], inlier_sq) {
                inlier_obj.push(*p);
                inlier_scene.push(scene_pts[hit.index]);
            }
        }
        let inliers = inlier_obj.len();
        if (inliers as f64) < required || inliers < 3 {
            stats.rejected_by_inliers += 1;
            continue;
        }

        stats.estimations += 1;
        let Ok(refined) = estimate_rigid_transform(&inlier_obj, &inlier_scene) else {
            stats.rejected_degenerate += 1;
            continue;
        };
        stats.accepted += 1;
        let fit = inlier_obj
            .iter()
            .zip(&inlier_scene)
            .map(|(p, q)| (refined.apply(p) - q).norm())
            .sum::<f64>()
            / inliers as f64;
        if best.map_or(true, |(_, _, b)| fit < b) {
            best = Some((refined, inliers, fit));
        }
        if cfg.convergence_error.is_some_and(|c| fit < c) {
            break;
        }
    }

    let elapsed = start.elapsed();
    match best {
        Some((pose, inlier_count, mean_fit)) => Ok(RansacResult {
            pose,
            inlier_count,
            mean_fit,
            stats,
            elapsed,
        }),
        None => Err(RansacError::NoConsensus(Box::new(stats))),
    }
}
