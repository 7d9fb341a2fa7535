//! Rigid transforms in SE(3), closed-form transform estimation from point
//! correspondences, and the alignment error used to rank hypotheses.

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use thiserror::Error;

pub type Point3 = nalgebra::Point3<f64>;

/// Relative singular-value floor below which a point set counts as collinear.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("empty input")]
    EmptyInput,
}

/// An element of SE(3): `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized), then translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = if axis.norm() == 0.0 || angle == 0.0 {
            Matrix3::identity()
        } else {
            *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix()
        };
        Self::new(rotation, translation)
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Reads the upper 3×4 block; the rotation block is re-orthonormalized.
    pub fn from_homogeneous(m: &Matrix4<f64>) -> RigidTransform {
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let t: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into_owned();
        RigidTransform::new(nearest_rotation(&r), t)
    }

    /// Rotation angle of this transform, in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Rotation angle (rad) and translation distance (m) between two poses.
    pub fn difference(&self, other: &RigidTransform) -> (f64, f64) {
        let delta = self.inverse().compose(other);
        (
            delta.rotation_angle(),
            (self.translation - other.translation).norm(),
        )
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let orth = self.rotation * self.rotation.transpose() - Matrix3::identity();
        orth.iter().all(|v| v.abs() <= tol) && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = (u * v_t).determinant().signum();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t
}

fn centroid(points: &[Point3]) -> Vector3<f64> {
    let sum = points
        .iter()
        .fold(Vector3::zeros(), |acc: Vector3<f64>, p| acc + p.coords);
    sum / points.len() as f64
}

fn is_collinear(points: &[Point3], c: &Vector3<f64>) -> bool {
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - c;
        scatter += d * d.transpose();
    }
    let mut s = scatter.symmetric_eigenvalues();
    s.as_mut_slice()
        .sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s[0] <= 0.0 || s[1] <= COLLINEAR_TOL * s[0]
}

/// Least-squares rigid transform mapping `object_pts` onto `scene_pts`
/// (centroid alignment plus SVD of the cross-covariance, reflection-corrected).
pub fn estimate_rigid_transform(
    object_pts: &[Point3],
    scene_pts: &[Point3],
) -> Result<RigidTransform, GeometryError> {
    if object_pts.len() != scene_pts.len() {
        return Err(GeometryError::DegenerateGeometry(format!(
            "unequal list lengths {} and {}",
            object_pts.len(),
            scene_pts.len()
        )));
    }
    if object_pts.len() < 3 {
        return Err(GeometryError::DegenerateGeometry(format!(
            "need at least 3 correspondences, got {}",
            object_pts.len()
        )));
    }
    let co = centroid(object_pts);
    let cs = centroid(scene_pts);
    if is_collinear(object_pts, &co) || is_collinear(scene_pts, &cs) {
        return Err(GeometryError::DegenerateGeometry(
            "points are collinear".into(),
        ));
    }

    let mut h = Matrix3::zeros();
    for (p, q) in object_pts.iter().zip(scene_pts) {
        h += (p.coords - co) * (q.coords - cs).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(GeometryError::DegenerateGeometry(
                "SVD did not converge".into(),
            ))
        }
    };
    let v = v_t.transpose();
    // Reflection: flip the direction paired with the smallest singular value.
    let d = (v * u.transpose()).determinant();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rotation = v * correction * u.transpose();
    let translation = cs - rotation * co;
    Ok(RigidTransform::new(rotation, translation))
}

/// Mean Euclidean distance `‖T p − q‖` over the pairs, in meters.
pub fn alignment_error(
    t: &RigidTransform,
    correspondences: &[(Point3, Point3)],
) -> Result<f64, GeometryError> {
    if correspondences.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let sum: f64 = correspondences
        .iter()
        .map(|(p, q)| (t.apply(p) - q).norm())
        .sum();
    Ok(sum / correspondences.len() as f64)
}

/// Sum of squared residuals, the argmin objective of the estimator.
pub fn squared_error_sum(t: &RigidTransform, object_pts: &[Point3], scene_pts: &[Point3]) -> f64 {
    object_pts
        .iter()
        .zip(scene_pts)
        .map(|(p, q)| (t.apply(p) - q).norm_squared())
        .sum()
}
