use nalgebra::{Matrix3, Vector3};

use super::{CellClass, ExtractError, Keypoint, MopImage, Primitive, PrimitiveKind, RgbdFrame};
use crate::geometry::Point3;

/// Largest window half-size (pixels) scanned around a keypoint.
const MAX_WINDOW: usize = 40;
/// Pixels farther than this from the 2-D edge line are not edge support.
/// Kept off the pixel lattice so axis-aligned and diagonal lines select
/// symmetric bands.
const EDGE_LINE_TOLERANCE: f64 = 1.5;

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ReconstructionReport {
    pub homogeneous_discarded: usize,
    pub invalid_depth: usize,
    pub insufficient_support: usize,
    pub segments: usize,
    pub texlets: usize,
}

/// Sorted eigenpairs (ascending eigenvalue) of the scatter of `points` about their mean.
fn principal_axes(points: &[Point3]) -> (Vector3<f64>, [Vector3<f64>; 3]) {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vector3::zeros(), |a: Vector3<f64>, p| a + p.coords) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - mean;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector3::new(
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    );
    let vecs = idx.map(|i| eig.eigenvectors.column(i).into_owned().normalize());
    (vals, vecs)
}

struct Support {
    points: Vec<Point3>,
}

fn gather_support(
    frame: &RgbdFrame,
    center: &Point3,
    pixel: (usize, usize),
    radius: f64,
    keep: impl Fn(f64, f64) -> bool,
) -> Support {
    let intr = frame.intrinsics();
    let half = ((radius * intr.fx.max(intr.fy) / center.z).ceil() as usize + 1).min(MAX_WINDOW);
    let (u0, v0) = pixel;
    let r2 = radius * radius;
    let mut points = Vec::new();
    for v in v0.saturating_sub(half)..=(v0 + half).min(frame.height() - 1) {
        for u in u0.saturating_sub(half)..=(u0 + half).min(frame.width() - 1) {
            if !keep(u as f64 - u0 as f64, v as f64 - v0 as f64) {
                continue;
            }
            if let Some(p) = frame.point(u, v) {
                if (p - center).norm_squared() <= r2 {
                    points.push(p);
                }
            }
        }
    }
    Support { points }
}

/// Lifts classified keypoints to 3-D primitives.
///
/// Texlets take the smallest principal direction of the back-projected pixels
/// within `normal_radius` (oriented towards the camera). Segments take the
/// largest principal direction of the back-projected pixels lying on the
/// image edge line through the keypoint, signed so that the bright side of
/// the edge is on the left of the projected direction. Homogeneous cells and
/// keypoints without valid depth are dropped.
pub fn reconstruct_primitives(
    frame: &RgbdFrame,
    mop: &MopImage,
    keypoints: &[Keypoint],
    classes: &[CellClass],
    normal_radius: f64,
) -> Result<(Vec<Primitive>, ReconstructionReport), ExtractError> {
    if !(normal_radius > 0.0) {
        return Err(ExtractError::InvalidConfig(format!(
            "normal radius must be positive, got {normal_radius}"
        )));
    }
    if keypoints.len() != classes.len() {
        return Err(ExtractError::InvalidConfig(
            "one classification per keypoint required".into(),
        ));
    }
    let mut report = ReconstructionReport::default();
    let mut out = Vec::new();
    for (kp, class) in keypoints.iter().zip(classes) {
        match reconstruct_one(frame, mop, kp, *class, normal_radius) {
            Ok(p) => {
                match p.kind {
                    PrimitiveKind::Segment => report.segments += 1,
                    PrimitiveKind::Texlet => report.texlets += 1,
                }
                out.push(p);
            }
            Err(ExtractError::Homogeneous) => report.homogeneous_discarded += 1,
            Err(ExtractError::InvalidDepth) => report.invalid_depth += 1,
            Err(ExtractError::InsufficientSupport(_)) => report.insufficient_support += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((out, report))
}

/// Reconstructs a single keypoint; errors describe why it was skipped.
pub fn reconstruct_one(
    frame: &RgbdFrame,
    mop: &MopImage,
    kp: &Keypoint,
    class: CellClass,
    normal_radius: f64,
) -> Result<Primitive, ExtractError> {
    let kind = match class {
        CellClass::Homogeneous => return Err(ExtractError::Homogeneous),
        CellClass::Edge => PrimitiveKind::Segment,
        CellClass::Texture => PrimitiveKind::Texlet,
    };
    let (u, v) = kp.pixel;
    let position = frame.point(u, v).ok_or(ExtractError::InvalidDepth)?;
    let color = frame.rgb(u, v);

    let orientation = match kind {
        PrimitiveKind::Texlet => {
            let support = gather_support(frame, &position, kp.pixel, normal_radius, |_, _| true);
            if support.points.len() < 3 {
                return Err(ExtractError::InsufficientSupport(support.points.len()));
            }
            let (vals, vecs) = principal_axes(&support.points);
            if vals[1] <= 0.0 {
                return Err(ExtractError::InsufficientSupport(support.points.len()));
            }
            let n = vecs[0];
            if n.dot(&position.coords) > 0.0 {
                -n
            } else {
                n
            }
        }
        PrimitiveKind::Segment => {
            let i = mop.index(u, v);
            let [r1, r2] = mop.odd[i];
            let norm = (r1 * r1 + r2 * r2).sqrt();
            if norm <= 0.0 {
                return Err(ExtractError::InsufficientSupport(0));
            }
            // Unit normal of the edge in the image plane.
            let (nu, nv) = (r1 / norm, r2 / norm);
            let support = gather_support(frame, &position, kp.pixel, normal_radius, |du, dv| {
                (du * nu + dv * nv).abs() <= EDGE_LINE_TOLERANCE
            });
            if support.points.len() < 3 {
                return Err(ExtractError::InsufficientSupport(support.points.len()));
            }
            let (vals, vecs) = principal_axes(&support.points);
            if vals[2] <= 0.0 {
                return Err(ExtractError::InsufficientSupport(support.points.len()));
            }
            let d = vecs[2];
            // Projected image direction of d at the keypoint.
            let intr = frame.intrinsics();
            let z = position.z;
            let du = intr.fx * (d.x * z - position.x * d.z) / (z * z);
            let dv = intr.fy * (d.y * z - position.y * d.z) / (z * z);
            // Edge tangent: the image normal rotated by +90°.
            let (tu, tv) = (-nv, nu);
            if du * tu + dv * tv < 0.0 {
                -d
            } else {
                d
            }
        }
    };
    Ok(Primitive {
        position,
        orientation,
        kind,
        color,
        pixel: (u as u32, v as u32),
    })
}
