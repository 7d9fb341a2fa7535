//! `ecvpose`: command-line front end for the pose-estimation pipeline.
//!
//! Every config key can be given as `--key value` (dashes or underscores)
//! anywhere on the command line; such flags override `--config FILE`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ecv_pose::color::{apply_color_matrix, estimate_color_matrix};
use ecv_pose::ecv::extract_primitives;
use ecv_pose::eval::{
    fronto_plane_spec, generate_scene, random_clutter_spec, run_registration_benchmark, standard_benchmark,
    tabletop_spec, true_correspondence_score, two_view_poses, Aligner, BenchmarkConfig, BenchmarkProblem, Texture,
};
use ecv_pose::geometry::RigidTransform;
use ecv_pose::icp::icp_align;
use ecv_pose::io::{self, pose_rows, to_json, IoError, PipelineConfig};
use ecv_pose::matching::match_descriptors;
use ecv_pose::ransac::{register_correspondences, RansacError};
use ecv_pose::{Error, Model};

#[derive(Parser, Debug)]
#[command(name = "ecvpose", version, about = "RGB-D pose estimation with ECV primitives and prefiltered RANSAC")]
struct Cli {
    /// Pipeline configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SceneKind {
    Tabletop,
    Plane,
    Clutter,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlignerKind {
    RansacIcp,
    Ransac,
    Icp,
    Given,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic RGB-D frame.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "tabletop")]
        scene: SceneKind,
        /// Which of the two benchmark views to render (0 or 1).
        #[arg(long, default_value_t = 0)]
        view: u8,
        /// Azimuth separation of the two views in degrees.
        #[arg(long, default_value_t = 18.0)]
        separation: f64,
        /// World-to-camera pose file; overrides --view.
        #[arg(long)]
        pose: Option<PathBuf>,
        /// Also write the ground-truth pose used for rendering.
        #[arg(long)]
        pose_out: Option<PathBuf>,
    },
    /// Frame → primitives.
    Extract {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Primitives → descriptors.
    Describe {
        #[arg(long)]
        primitives: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Descriptors → correspondences.
    Match {
        #[arg(long)]
        object: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// RANSAC pose of the object in the scene.
    Register {
        #[command(flatten)]
        models: ModelArgs,
        /// Precomputed correspondences; otherwise descriptors are matched.
        #[arg(long)]
        correspondences: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// ICP refinement on primitive positions.
    Icp {
        #[arg(long)]
        object: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// True-correspondence score of object against scene.
    EvalCorr {
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long, value_enum, default_value = "ransac-icp")]
        aligner: AlignerKind,
        /// Pose for `--aligner given`, or the ICP start for `--aligner icp`.
        #[arg(long)]
        pose: Option<PathBuf>,
    },
    /// Standard vs prefiltered RANSAC timing comparison.
    Bench {
        /// Object primitives; defaults to the built-in two-view benchmark.
        #[arg(long, requires = "scene")]
        object: Option<PathBuf>,
        #[arg(long, requires = "object")]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        bench_iterations: usize,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
    },
    /// Estimate a color matrix from labeled pairs.
    ColorCalib {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rewrite primitive colors with a color matrix.
    ApplyColor {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        primitives: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct ModelArgs {
    /// Object primitive file.
    #[arg(long)]
    object: PathBuf,
    /// Scene primitive file.
    #[arg(long)]
    scene: PathBuf,
    /// Object descriptors; computed from the primitives if absent.
    #[arg(long)]
    object_descriptors: Option<PathBuf>,
    #[arg(long)]
    scene_descriptors: Option<PathBuf>,
}

enum CliError {
    Lib(Error),
    Usage(String),
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Lib(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Pulls `--<config key> value` pairs out of argv.
fn split_overrides(args: Vec<String>) -> CliResult<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.replace('-', "_"), Some(v.to_string())),
            None => (flag.replace('-', "_"), None),
        };
        if PipelineConfig::KEYS.contains(&name.as_str()) {
            let value = match inline {
                Some(v) => v,
                None => it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?,
            };
            overrides.push((name, value));
        } else {
            rest.push(a);
        }
    }
    Ok((rest, overrides))
}

fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> CliResult<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v, 0)?;
    }
    Ok(cfg)
}

fn load_model(prims: &Path, descs: Option<&PathBuf>, cfg: &PipelineConfig) -> CliResult<Model> {
    let primitives = io::load_primitives(prims)?;
    match descs {
        Some(d) => {
            let descriptors = io::load_descriptors(d)?;
            if let Some(bad) = descriptors.iter().find(|d| d.source_index >= primitives.len()) {
                return Err(Error::Io(IoError::DimensionMismatch(format!(
                    "descriptor source index {} exceeds {} primitives",
                    bad.source_index,
                    primitives.len()
                )))
                .into());
            }
            Ok(Model::new(primitives, descriptors))
        }
        None => Ok(Model::from_primitives(primitives, &cfg.descriptor)?.0),
    }
}

fn pose_json(pose: &RigidTransform) -> Value {
    json!(pose_rows(pose))
}

fn run(cli: Cli, cfg: PipelineConfig) -> CliResult<Value> {
    Ok(match cli.command {
        Command::Synth {
            out,
            scene,
            view,
            separation,
            pose,
            pose_out,
        } => {
            let mut spec = match scene {
                SceneKind::Tabletop => tabletop_spec(cfg.texture_seed),
                SceneKind::Clutter => random_clutter_spec(cfg.texture_seed),
                SceneKind::Plane => fronto_plane_spec(
                    1.0,
                    Texture::Noise {
                        cell: 0.006,
                        seed: cfg.texture_seed,
                        low: [0.0; 3],
                        high: [1.0; 3],
                    },
                ),
            };
            spec.noise_sigma = cfg.noise_sigma;
            spec.occlusion_fraction = cfg.occlusion_fraction;
            spec.seed = cfg.ransac.seed;
            let pose = match (pose, scene) {
                (Some(p), _) => io::load_pose(p)?,
                (None, SceneKind::Plane) => RigidTransform::identity(),
                (None, _) => {
                    let (a, b) = two_view_poses(separation);
                    match view {
                        0 => a,
                        1 => b,
                        v => return Err(CliError::Usage(format!("--view must be 0 or 1, got {v}"))),
                    }
                }
            };
            let rendered = generate_scene(&spec, &pose)?;
            io::save_frame(&out, &rendered.frame)?;
            if let Some(p) = pose_out {
                io::save_pose(p, &rendered.ground_truth_pose)?;
            }
            json!({
                "command": "synth",
                "width": spec.width,
                "height": spec.height,
                "valid_depth": rendered.frame.valid_depth_count(),
                "ground_truth_pose": pose_json(&rendered.ground_truth_pose),
            })
        }
        Command::Extract { frame, out } => {
            let frame = io::load_frame(frame)?;
            let (prims, report) = extract_primitives(&frame, &cfg.extract)?;
            io::save_primitives(&out, &prims)?;
            json!({ "command": "extract", "primitives": prims.len(), "report": report })
        }
        Command::Describe { primitives, out } => {
            let prims = io::load_primitives(primitives)?;
            let (model, report) = Model::from_primitives(prims, &cfg.descriptor)?;
            io::save_descriptors(&out, &model.descriptors)?;
            json!({
                "command": "describe",
                "descriptors": report.emitted,
                "skipped": report.skipped.len(),
            })
        }
        Command::Match { object, scene, out } => {
            let (o, s) = (io::load_descriptors(object)?, io::load_descriptors(scene)?);
            let outcome = match_descriptors(&o, &s, &cfg.matching)?;
            io::save_correspondences(&out, &outcome.correspondences)?;
            json!({
                "command": "match",
                "correspondences": outcome.correspondences.len(),
                "no_candidates": outcome.no_candidates.len(),
                "ratio_rejected": outcome.ratio_rejected.len(),
            })
        }
        Command::Register {
            models,
            correspondences,
            out,
        } => {
            let object = load_model(&models.object, models.object_descriptors.as_ref(), &cfg)?;
            let scene = load_model(&models.scene, models.scene_descriptors.as_ref(), &cfg)?;
            let corr = match correspondences {
                Some(p) => io::load_correspondences(p)?,
                None => match_descriptors(&object.descriptors, &scene.descriptors, &cfg.matching)?.correspondences,
            };
            let rcfg = cfg.ransac_config();
            let result = register_correspondences(&object.positions(), &scene.positions(), &corr, &rcfg)?;
            io::save_pose(&out, &result.pose)?;
            json!({
                "command": "register",
                "pose": pose_json(&result.pose),
                "inlier_count": result.inlier_count,
                "mean_fit_m": result.mean_fit,
                "iterations": rcfg.iterations,
                "prefilter": rcfg.prefilter,
                "stats": result.stats,
                "time_s": result.elapsed.as_secs_f64(),
            })
        }
        Command::Icp {
            object,
            scene,
            init,
            out,
        } => {
            let (o, s) = (io::load_primitives(object)?, io::load_primitives(scene)?);
            let init = match init {
                Some(p) => io::load_pose(p)?,
                None => RigidTransform::identity(),
            };
            let pts = |v: &[ecv_pose::ecv::Primitive]| v.iter().map(|p| p.position).collect::<Vec<_>>();
            let result = icp_align(&pts(&o), &pts(&s), &init, &cfg.icp)?;
            io::save_pose(&out, &result.pose)?;
            json!({
                "command": "icp",
                "pose": pose_json(&result.pose),
                "mean_fit_m": result.mean_fit,
                "iterations": result.iterations,
                "fit_history": result.fit_history,
            })
        }
        Command::EvalCorr { models, aligner, pose } => {
            let object = load_model(&models.object, models.object_descriptors.as_ref(), &cfg)?;
            let scene = load_model(&models.scene, models.scene_descriptors.as_ref(), &cfg)?;
            let given = pose.map(io::load_pose).transpose()?;
            let aligner = match aligner {
                AlignerKind::RansacIcp => Aligner::ransac_icp(cfg.ransac_config()),
                AlignerKind::Ransac => Aligner::Ransac(cfg.ransac_config()),
                AlignerKind::Icp => Aligner::Icp {
                    init: given.unwrap_or_else(RigidTransform::identity),
                    cfg: cfg.icp,
                },
                AlignerKind::Given => Aligner::Given(
                    given.ok_or_else(|| CliError::Usage("--aligner given needs --pose".into()))?,
                ),
            };
            let report = true_correspondence_score(&object, &scene, cfg.threshold, &aligner, &cfg.matching)?;
            json!({
                "command": "eval-corr",
                "score": report.score.score,
                "c_hyp": report.score.c_hyp,
                "c_true": report.score.c_true,
                "threshold": report.threshold,
                "pose": pose_json(&report.pose),
            })
        }
        Command::Bench {
            object,
            scene,
            bench_iterations,
            repeats,
        } => {
            let (o, s, gt) = match (object, scene) {
                (Some(o), Some(s)) => (load_model(&o, None, &cfg)?, load_model(&s, None, &cfg)?, None),
                _ => {
                    let (o, s, gt) = standard_benchmark(cfg.texture_seed)?;
                    (o, s, Some(gt))
                }
            };
            let problem = BenchmarkProblem::from_models(&o, &s, &cfg.matching, gt)?;
            let bcfg = BenchmarkConfig {
                iterations: bench_iterations,
                repeats,
                ransac: cfg.ransac_config(),
                seed: cfg.ransac.seed,
            };
            let report = run_registration_benchmark(&problem, &bcfg)?;
            json!({ "command": "bench", "report": report })
        }
        Command::ColorCalib { pairs, out } => {
            let pairs = io::load_color_pairs(pairs)?;
            let cal = estimate_color_matrix(&pairs, cfg.color_offset)?;
            io::save_color_matrix(&out, &cal.matrix)?;
            let a = cal.matrix.a;
            json!({
                "command": "color-calib",
                "pairs": pairs.len(),
                "matrix": [[a[(0, 0)], a[(0, 1)], a[(0, 2)]], [a[(1, 0)], a[(1, 1)], a[(1, 2)]], [a[(2, 0)], a[(2, 1)], a[(2, 2)]]],
                "offset": [cal.matrix.offset.x, cal.matrix.offset.y, cal.matrix.offset.z],
                "residual_rms": cal.residual_rms,
                "condition_number": cal.condition_number,
            })
        }
        Command::ApplyColor {
            matrix,
            primitives,
            out,
        } => {
            let m = io::load_color_matrix(matrix)?;
            let prims = apply_color_matrix(&m, &io::load_primitives(primitives)?);
            io::save_primitives(&out, &prims)?;
            json!({ "command": "apply-color", "primitives": prims.len() })
        }
    })
}

fn fail(category: &str, message: &str, details: Option<Value>) -> ExitCode {
    let mut error = json!({ "category": category, "message": message });
    if let Some(d) = details {
        error["details"] = d;
    }
    let _ = writeln!(std::io::stderr(), "{}", json!({ "error": error }));
    ExitCode::from(1)
}

fn fail_lib(e: &Error) -> ExitCode {
    let details = match e {
        Error::Ransac(RansacError::NoConsensus(stats)) => Some(json!({ "stats": stats })),
        _ => None,
    };
    fail(e.category(), &e.to_string(), details)
}

fn main() -> ExitCode {
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(CliError::Usage(m)) => return fail("Usage", &m, None),
        Err(CliError::Lib(e)) => return fail_lib(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = write!(std::io::stdout(), "{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("Usage", e.to_string().trim(), None),
    };
    let report_path = cli.report.clone();
    let outcome = load_config(cli.config.as_deref(), &overrides).and_then(|cfg| run(cli, cfg));
    match outcome {
        Ok(report) => {
            let text = to_json(&report);
            match report_path {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, text + "\n") {
                        return fail("IoError", &e.to_string(), None);
                    }
                }
                None => {
                    let _ = writeln!(std::io::stdout(), "{text}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(m)) => fail("Usage", &m, None),
        Err(CliError::Lib(e)) => fail_lib(&e),
    }
}
