//! Correspondence-score protocol, registration benchmark and synthetic scenes.

mod bench;
mod synth;

pub use bench::{
    run_registration_benchmark, standard_benchmark, BenchmarkConfig, BenchmarkProblem, BenchmarkReport,
    VariantSummary,
};
pub use synth::{
    default_intrinsics, fronto_plane_spec, generate_scene, look_at, orbit_pose, random_clutter_spec,
    tabletop_spec, two_view_poses, Rgb, SceneSpec, Shape, SynthError, SyntheticScene, Texture,
};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Point3, RigidTransform};
use crate::icp::{icp_align, IcpConfig, IcpError};
use crate::matching::{match_descriptors, CorrespondenceSet, MatchError, MatchOptions};
use crate::ransac::{register_correspondences, RansacConfig, RansacError};
use crate::Model;

pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("alignment failed: {0}")]
    AlignmentFailed(String),
    #[error("invalid threshold {0}: must be positive")]
    InvalidThreshold(f64),
    #[error("invalid benchmark: {0}")]
    InvalidBenchmark(String),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Ransac(#[from] RansacError),
}

impl EvalError {
    pub fn category(&self) -> &'static str {
        match self {
            EvalError::AlignmentFailed(_) => "AlignmentFailed",
            EvalError::InvalidThreshold(_) => "InvalidThreshold",
            EvalError::InvalidBenchmark(_) => "InvalidBenchmark",
            EvalError::Match(MatchError::EmptyInput) => "EmptyInput",
            EvalError::Match(MatchError::InvalidOption(_)) => "InvalidOption",
            EvalError::Ransac(RansacError::NoConsensus(_)) => "NoConsensus",
            EvalError::Ransac(_) => "InvalidParameter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrespondenceScore {
    pub c_hyp: usize,
    pub c_true: usize,
    pub score: f64,
}

/// How the object is brought onto the scene before pairs are thresholded.
#[derive(Debug, Clone, PartialEq)]
pub enum Aligner {
    /// ICP on primitive positions from `init`.
    Icp { init: RigidTransform, cfg: IcpConfig },
    /// RANSAC over the descriptor correspondences.
    Ransac(RansacConfig),
    /// RANSAC followed by an ICP polish.
    RansacIcp { ransac: RansacConfig, icp: IcpConfig },
    /// A known pose, e.g. synthetic ground truth.
    Given(RigidTransform),
}

impl Default for Aligner {
    fn default() -> Self {
        Aligner::ransac_icp(RansacConfig::default())
    }
}

impl Aligner {
    /// RANSAC then ICP, with the polish trimming pairs at the RANSAC inlier
    /// distance so non-overlapping regions cannot drag the pose.
    pub fn ransac_icp(ransac: RansacConfig) -> Self {
        Aligner::RansacIcp {
            ransac,
            icp: IcpConfig {
                reject_dist: ransac.inlier_dist,
                ..IcpConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub score: CorrespondenceScore,
    pub pose: RigidTransform,
    pub threshold: f64,
    pub correspondences: CorrespondenceSet,
}

/// Counts correspondences whose aligned pair distance is below `threshold`.
pub fn score_alignment(
    object_pts: &[Point3],
    scene_pts: &[Point3],
    corr: &CorrespondenceSet,
    pose: &RigidTransform,
    threshold: f64,
) -> Result<CorrespondenceScore, EvalError> {
    if !(threshold > 0.0) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    let c_hyp = corr.len();
    let c_true = corr
        .iter()
        .filter(|c| (pose.apply(&object_pts[c.object_index]) - scene_pts[c.scene_index]).norm() < threshold)
        .count();
    let score = if c_hyp == 0 { 0.0 } else { c_true as f64 / c_hyp as f64 };
    Ok(CorrespondenceScore { c_hyp, c_true, score })
}

fn align(
    object_pts: &[Point3],
    scene_pts: &[Point3],
    corr: &CorrespondenceSet,
    aligner: &Aligner,
) -> Result<RigidTransform, EvalError> {
    let icp = |init: &RigidTransform, cfg: &IcpConfig| {
        icp_align(object_pts, scene_pts, init, cfg)
            .map(|r| r.pose)
            .map_err(|e: IcpError| EvalError::AlignmentFailed(e.to_string()))
    };
    let ransac = |cfg: &RansacConfig| {
        register_correspondences(object_pts, scene_pts, corr, cfg)
            .map(|r| r.pose)
            .map_err(|e| match e {
                RansacError::InvalidParameter(_) => EvalError::Ransac(e),
                other => EvalError::AlignmentFailed(other.to_string()),
            })
    };
    match aligner {
        Aligner::Given(pose) => Ok(*pose),
        Aligner::Icp { init, cfg } => icp(init, cfg),
        Aligner::Ransac(cfg) => ransac(cfg),
        Aligner::RansacIcp { ransac: r, icp: i } => {
            let coarse = ransac(r)?;
            icp(&coarse, i)
        }
    }
}

/// Match descriptors, align, threshold the aligned pairs and report the ratio
/// of true to hypothesized correspondences.
pub fn true_correspondence_score(
    object: &Model,
    scene: &Model,
    threshold: f64,
    aligner: &Aligner,
    match_opts: &MatchOptions,
) -> Result<ScoreReport, EvalError> {
    if !(threshold > 0.0) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    let outcome = match_descriptors(&object.descriptors, &scene.descriptors, match_opts)?;
    let corr = outcome.correspondences;
    let (object_pts, scene_pts) = (object.positions(), scene.positions());
    let pose = align(&object_pts, &scene_pts, &corr, aligner)?;
    let score = score_alignment(&object_pts, &scene_pts, &corr, &pose, threshold)?;
    Ok(ScoreReport {
        score,
        pose,
        threshold,
        correspondences: corr,
    })
}
