//! Paired benchmark of standard and polygon-prefiltered RANSAC.

use std::time::Instant;

use serde::Serialize;

use super::synth::{generate_scene, tabletop_spec, two_view_poses};
use super::EvalError;
use crate::descriptor::DescriptorConfig;
use crate::ecv::{extract_primitives, ExtractConfig};
use crate::geometry::{Point3, RigidTransform};
use crate::matching::{match_descriptors, CorrespondenceSet, MatchOptions};
use crate::ransac::{register_correspondences, RansacConfig, RansacError, RansacStats};
use crate::Model;

/// Fixed inputs shared by every run of the benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkProblem {
    pub object_pts: Vec<Point3>,
    pub scene_pts: Vec<Point3>,
    pub correspondences: CorrespondenceSet,
    pub ground_truth: Option<RigidTransform>,
}

impl BenchmarkProblem {
    /// Matches once so both variants see the same correspondence set.
    pub fn from_models(
        object: &Model,
        scene: &Model,
        match_opts: &MatchOptions,
        ground_truth: Option<RigidTransform>,
    ) -> Result<Self, EvalError> {
        let outcome = match_descriptors(&object.descriptors, &scene.descriptors, match_opts)?;
        Ok(Self {
            object_pts: object.positions(),
            scene_pts: scene.positions(),
            correspondences: outcome.correspondences,
            ground_truth,
        })
    }
}

/// Two views of the tabletop scene 18° apart, run through extraction and
/// description with default settings. Returns object, scene and the
/// object-to-scene ground truth.
pub fn standard_benchmark(texture_seed: u64) -> Result<(Model, Model, RigidTransform), crate::Error> {
    let spec = tabletop_spec(texture_seed);
    let (pa, pb) = two_view_poses(18.0);
    let mut models = Vec::with_capacity(2);
    for pose in [pa, pb] {
        let scene = generate_scene(&spec, &pose)?;
        let (prims, _) = extract_primitives(&scene.frame, &ExtractConfig::default())?;
        let (model, _) = Model::from_primitives(prims, &DescriptorConfig::default())?;
        models.push(model);
    }
    let scene = models.pop().expect("two models");
    let object = models.pop().expect("two models");
    Ok((object, scene, pb.compose(&pa.inverse())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkConfig {
    pub iterations: usize,
    pub repeats: usize,
    /// Template for both variants; `prefilter`, `iterations` and `seed` are overridden.
    pub ransac: RansacConfig,
    /// Repeat `k` runs both variants with seed `seed + k`.
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            repeats: 20,
            ransac: RansacConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VariantSummary {
    pub prefilter: bool,
    pub runs: usize,
    pub successes: usize,
    /// Mean wall time over all runs (s).
    pub time_s: f64,
    /// Mean over successful runs (m).
    pub mean_fit_m: f64,
    pub rejected_polygon: f64,
    pub rejected_inliers: f64,
    pub rejected_degenerate: f64,
    pub estimations: f64,
    pub accepted: f64,
    /// Largest pose error against ground truth over successful runs, if known.
    pub max_rotation_error_deg: Option<f64>,
    pub max_translation_error_m: Option<f64>,
    #[serde(skip)]
    pub samples_drawn: Vec<usize>,
    #[serde(skip)]
    pub fits: Vec<f64>,
    #[serde(skip)]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub iterations: usize,
    pub repeats: usize,
    pub correspondences: usize,
    pub object_primitives: usize,
    pub scene_primitives: usize,
    pub standard: VariantSummary,
    pub modified: VariantSummary,
    /// Standard mean time divided by modified mean time.
    pub speedup: f64,
    /// `|fit_mod − fit_std| / fit_std`.
    pub fit_relative_difference: f64,
    /// Both variants drew the same number of samples in every repeat.
    pub samples_match: bool,
}

fn record(
    summary: &mut VariantSummary,
    result: Result<crate::ransac::RansacResult, RansacError>,
    time: f64,
    ground_truth: Option<&RigidTransform>,
) -> Result<(), EvalError> {
    summary.runs += 1;
    let stats: RansacStats = match result {
        Ok(r) => {
            summary.successes += 1;
            summary.fits.push(r.mean_fit);
            if let Some(gt) = ground_truth {
                let (a, d) = r.pose.difference(gt);
                let a = a.to_degrees();
                summary.max_rotation_error_deg = Some(summary.max_rotation_error_deg.map_or(a, |m| m.max(a)));
                summary.max_translation_error_m = Some(summary.max_translation_error_m.map_or(d, |m| m.max(d)));
            }
            r.stats
        }
        Err(RansacError::NoConsensus(stats)) => *stats,
        Err(e) => return Err(e.into()),
    };
    summary.times.push(time);
    summary.samples_drawn.push(stats.samples_drawn);
    summary.rejected_polygon += stats.rejected_by_polygon as f64;
    summary.rejected_inliers += stats.rejected_by_inliers as f64;
    summary.rejected_degenerate += stats.rejected_degenerate as f64;
    summary.estimations += stats.estimations as f64;
    summary.accepted += stats.accepted as f64;
    Ok(())
}

fn finish(summary: &mut VariantSummary) {
    let runs = summary.runs.max(1) as f64;
    for v in [
        &mut summary.rejected_polygon,
        &mut summary.rejected_inliers,
        &mut summary.rejected_degenerate,
        &mut summary.estimations,
        &mut summary.accepted,
    ] {
        *v /= runs;
    }
    summary.time_s = mean(&summary.times);
    summary.mean_fit_m = mean(&summary.fits);
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Runs standard then prefiltered RANSAC `repeats` times, sequentially, with
/// identical seeds per repeat.
pub fn run_registration_benchmark(
    problem: &BenchmarkProblem,
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport, EvalError> {
    if cfg.repeats == 0 {
        return Err(EvalError::InvalidBenchmark("repeats must be >= 1".into()));
    }
    let mut standard = VariantSummary::default();
    let mut modified = VariantSummary {
        prefilter: true,
        ..Default::default()
    };
    for k in 0..cfg.repeats {
        let base = RansacConfig {
            iterations: cfg.iterations,
            seed: cfg.seed.wrapping_add(k as u64),
            ..cfg.ransac
        };
        for (prefilter, summary) in [(false, &mut standard), (true, &mut modified)] {
            let run_cfg = RansacConfig { prefilter, ..base };
            let start = Instant::now();
            let result = register_correspondences(
                &problem.object_pts,
                &problem.scene_pts,
                &problem.correspondences,
                &run_cfg,
            );
            let time = start.elapsed().as_secs_f64();
            record(summary, result, time, problem.ground_truth.as_ref())?;
        }
    }
    finish(&mut standard);
    finish(&mut modified);
    let samples_match = standard.samples_drawn == modified.samples_drawn;
    Ok(BenchmarkReport {
        iterations: cfg.iterations,
        repeats: cfg.repeats,
        correspondences: problem.correspondences.len(),
        object_primitives: problem.object_pts.len(),
        scene_primitives: problem.scene_pts.len(),
        speedup: standard.time_s / modified.time_s,
        fit_relative_difference: (modified.mean_fit_m - standard.mean_fit_m).abs() / standard.mean_fit_m,
        samples_match,
        standard,
        modified,
    })
}
