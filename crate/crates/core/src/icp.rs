//! Point-to-point ICP refinement.

use thiserror::Error;

use crate::geometry::{estimate_rigid_transform, GeometryError, Point3, RigidTransform};
use crate::spatial::KdTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IcpError {
    #[error("empty input: both clouds need at least 3 points")]
    EmptyInput,
    #[error("no overlap: only {0} pairs within the rejection distance")]
    NoOverlap(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Pairs farther apart than this (m) are dropped.
    pub reject_dist: f64,
    /// Stop when an update moves less than this (rotation angle + translation norm).
    pub convergence_delta: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            reject_dist: 0.05,
            convergence_delta: 1e-6,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<(), IcpError> {
        if self.max_iterations == 0 {
            return Err(IcpError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.reject_dist > 0.0) {
            return Err(IcpError::InvalidConfig(format!(
                "reject_dist must be positive, got {}",
                self.reject_dist
            )));
        }
        if !(self.convergence_delta >= 0.0) {
            return Err(IcpError::InvalidConfig(
                "convergence_delta must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    pub pose: RigidTransform,
    /// Mean pair distance at the returned pose (m), never above the entry value.
    pub mean_fit: f64,
    pub iterations: usize,
    /// Mean pair distance at the initial pose followed by one entry per iteration.
    pub fit_history: Vec<f64>,
}

struct Pairing {
    source: Vec<Point3>,
    target: Vec<Point3>,
    mean: f64,
}

fn pair(source: &[Point3], target: &[Point3], tree: &KdTree<3>, pose: &RigidTransform, reject_sq: f64) -> Pairing {
    let mut out = Pairing {
        source: Vec::with_capacity(source.len()),
        target: Vec::with_capacity(source.len()),
        mean: 0.0,
    };
    let mut sum = 0.0;
    for p in source {
        let tp = pose.apply(p);
        if let Some(hit) = tree.nearest_within(&[tp.x, tp.y, tp.z], reject_sq) {
            sum += hit.dist_sq.sqrt();
            out.source.push(*p);
            out.target.push(target[hit.index]);
        }
    }
    if !out.source.is_empty() {
        out.mean = sum / out.source.len() as f64;
    }
    out
}

/// Aligns `source` onto `target` starting from `init`.
pub fn icp_align(
    source: &[Point3],
    target: &[Point3],
    init: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<IcpResult, IcpError> {
    cfg.validate()?;
    if source.len() < 3 || target.len() < 3 {
        return Err(IcpError::EmptyInput);
    }
    let tree = KdTree::new(target.iter().map(|p| [p.x, p.y, p.z]).collect());
    let reject_sq = cfg.reject_dist * cfg.reject_dist;

    let mut pose = *init;
    let mut pairing = pair(source, target, &tree, &pose, reject_sq);
    if pairing.source.len() < 3 {
        return Err(IcpError::NoOverlap(pairing.source.len()));
    }
    let mut history = vec![pairing.mean];
    let mut best = (pose, pairing.mean);
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let next = estimate_rigid_transform(&pairing.source, &pairing.target)?;
        let (angle, shift) = pose.difference(&next);
        pose = next;
        pairing = pair(source, target, &tree, &pose, reject_sq);
        if pairing.source.len() < 3 {
            return Err(IcpError::NoOverlap(pairing.source.len()));
        }
        history.push(pairing.mean);
        if pairing.mean < best.1 {
            best = (pose, pairing.mean);
        }
        if angle + shift < cfg.convergence_delta {
            break;
        }
    }
    // Re-pairing can raise the fit on partially overlapping clouds; the
    // lowest-fit iterate is returned so the exit fit never exceeds the entry fit.
    Ok(IcpResult {
        pose: best.0,
        mean_fit: best.1,
        iterations,
        fit_history: history,
    })
}
