//! Ray-cast synthetic RGB-D scenes with known ground truth.
//!
//! Shapes live in a world frame; a pose maps world coordinates into the
//! camera frame (x right, y down, z forward). Textures are functions of
//! surface coordinates, so every view of a shape sees the same appearance.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ecv::{Intrinsics, RgbdFrame};
use crate::geometry::{Point3, RigidTransform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

pub type Rgb = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Texture {
    Uniform { rgb: Rgb },
    /// Blocky value noise: every `cell`-sized square gets a random color
    /// between `low` and `high` per channel.
    Noise { cell: f64, seed: u64, low: Rgb, high: Rgb },
    Stripes { period: f64, a: Rgb, b: Rgb },
    Checker { cell: f64, a: Rgb, b: Rgb },
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn hash_unit(ix: i64, iy: i64, seed: u64, channel: u64) -> f64 {
    let h = splitmix(
        splitmix(splitmix(seed ^ channel.wrapping_mul(0xA24B_AED4_963E_E407)) ^ ix as u64)
            ^ (iy as u64).rotate_left(32),
    );
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn lerp(a: &Rgb, b: &Rgb, t: [f64; 3]) -> Rgb {
    [
        a[0] + (b[0] - a[0]) * t[0],
        a[1] + (b[1] - a[1]) * t[1],
        a[2] + (b[2] - a[2]) * t[2],
    ]
}

impl Texture {
    /// Color at surface coordinates `(s, t)` in meters; `salt` varies the
    /// pattern between faces of one shape.
    pub fn sample(&self, s: f64, t: f64, salt: u64) -> Rgb {
        match self {
            Texture::Uniform { rgb } => *rgb,
            Texture::Noise { cell, seed, low, high } => {
                let (ix, iy) = ((s / cell).floor() as i64, (t / cell).floor() as i64);
                let seed = seed.wrapping_add(salt.wrapping_mul(7919));
                let u = [
                    hash_unit(ix, iy, seed, 0),
                    hash_unit(ix, iy, seed, 1),
                    hash_unit(ix, iy, seed, 2),
                ];
                lerp(low, high, u)
            }
            Texture::Stripes { period, a, b } => {
                if (s / period).floor().rem_euclid(2.0) == 0.0 {
                    *a
                } else {
                    *b
                }
            }
            Texture::Checker { cell, a, b } => {
                let k = (s / cell).floor() + (t / cell).floor();
                if k.rem_euclid(2.0) == 0.0 {
                    *a
                } else {
                    *b
                }
            }
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let ok = match self {
            Texture::Uniform { .. } => true,
            Texture::Noise { cell, .. } | Texture::Checker { cell, .. } => *cell > 0.0,
            Texture::Stripes { period, .. } => *period > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SynthError::InvalidSpec("texture scale must be positive".into()))
        }
    }
}

/// Scene geometry in the world frame. Rotations are rotation vectors
/// (axis × angle in radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Bounded rectangle spanned by two orthogonal axes.
    Plane {
        center: [f64; 3],
        u_axis: [f64; 3],
        v_axis: [f64; 3],
        half_u: f64,
        half_v: f64,
        texture: Texture,
    },
    /// Oriented box; face `k` uses `textures[k % len]`.
    Box {
        center: [f64; 3],
        rotation: [f64; 3],
        half_extents: [f64; 3],
        textures: Vec<Texture>,
    },
    /// Capped cylinder around `axis` through `center`.
    Cylinder {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_height: f64,
        texture: Texture,
    },
}

struct Hit {
    t: f64,
    color: Rgb,
}

fn frame_from_axis(axis: &Vector3<f64>) -> Matrix3<f64> {
    let w = axis.normalize();
    let helper = if w.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = helper.cross(&w).normalize();
    let v = w.cross(&u);
    Matrix3::from_columns(&[u, v, w])
}

fn rotation_from_vector(r: &[f64; 3]) -> Matrix3<f64> {
    *Rotation3::new(Vector3::from(*r)).matrix()
}

impl Shape {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.into()));
        match self {
            Shape::Plane {
                u_axis,
                v_axis,
                half_u,
                half_v,
                texture,
                ..
            } => {
                let (u, v) = (Vector3::from(*u_axis), Vector3::from(*v_axis));
                if u.norm() == 0.0 || v.norm() == 0.0 || u.normalize().dot(&v.normalize()).abs() > 1e-9 {
                    return bad("plane axes must be non-zero and orthogonal");
                }
                if !(*half_u > 0.0 && *half_v > 0.0) {
                    return bad("plane extents must be positive");
                }
                texture.validate()
            }
            Shape::Box {
                half_extents,
                textures,
                ..
            } => {
                if half_extents.iter().any(|h| !(*h > 0.0)) {
                    return bad("box extents must be positive");
                }
                if textures.is_empty() {
                    return bad("box needs at least one texture");
                }
                textures.iter().try_for_each(Texture::validate)
            }
            Shape::Cylinder {
                axis,
                radius,
                half_height,
                texture,
                ..
            } => {
                if Vector3::from(*axis).norm() == 0.0 {
                    return bad("cylinder axis must be non-zero");
                }
                if !(*radius > 0.0 && *half_height > 0.0) {
                    return bad("cylinder dimensions must be positive");
                }
                texture.validate()
            }
        }
    }

    fn intersect(&self, origin: &Point3, dir: &Vector3<f64>) -> Option<Hit> {
        match self {
            Shape::Plane {
                center,
                u_axis,
                v_axis,
                half_u,
                half_v,
                texture,
            } => {
                let (u, v) = (Vector3::from(*u_axis).normalize(), Vector3::from(*v_axis).normalize());
                let n = u.cross(&v);
                let c = Point3::from(*center);
                let denom = n.dot(dir);
                if denom == 0.0 {
                    return None;
                }
                let t = (n.dot(&c.coords) - n.dot(&origin.coords)) / denom;
                if t <= 0.0 {
                    return None;
                }
                let rel = origin + dir * t - c;
                let (a, b) = (rel.dot(&u), rel.dot(&v));
                (a.abs() <= *half_u && b.abs() <= *half_v).then(|| Hit {
                    t,
                    color: texture.sample(a + half_u, b + half_v, 0),
                })
            }
            Shape::Box {
                center,
                rotation,
                half_extents,
                textures,
            } => {
                let r = rotation_from_vector(rotation);
                let o = r.transpose() * (origin - Point3::from(*center));
                let d = r.transpose() * dir;
                let (mut t_near, mut t_far) = (f64::NEG_INFINITY, f64::INFINITY);
                let mut near_axis = 0;
                for k in 0..3 {
                    if d[k] == 0.0 {
                        if o[k].abs() > half_extents[k] {
                            return None;
                        }
                        continue;
                    }
                    let mut t0 = (-half_extents[k] - o[k]) / d[k];
                    let mut t1 = (half_extents[k] - o[k]) / d[k];
                    if t0 > t1 {
                        std::mem::swap(&mut t0, &mut t1);
                    }
                    if t0 > t_near {
                        t_near = t0;
                        near_axis = k;
                    }
                    t_far = t_far.min(t1);
                }
                if t_near > t_far || t_near <= 0.0 {
                    return None;
                }
                let p = o + d * t_near;
                let face = 2 * near_axis + usize::from(p[near_axis] > 0.0);
                let (i, j) = ((near_axis + 1) % 3, (near_axis + 2) % 3);
                let tex = &textures[face % textures.len()];
                Some(Hit {
                    t: t_near,
                    color: tex.sample(p[i] + half_extents[i], p[j] + half_extents[j], face as u64),
                })
            }
            Shape::Cylinder {
                center,
                axis,
                radius,
                half_height,
                texture,
            } => {
                let frame = frame_from_axis(&Vector3::from(*axis));
                let o = frame.transpose() * (origin - Point3::from(*center));
                let d = frame.transpose() * dir;
                let mut best: Option<Hit> = None;
                let mut consider = |t: f64, color: Rgb| {
                    if t > 0.0 && best.as_ref().map_or(true, |b| t < b.t) {
                        best = Some(Hit { t, color });
                    }
                };
                // Side.
                let a = d.x * d.x + d.y * d.y;
                if a > 0.0 {
                    let b = 2.0 * (o.x * d.x + o.y * d.y);
                    let c = o.x * o.x + o.y * o.y - radius * radius;
                    let disc = b * b - 4.0 * a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                            let p = o + d * t;
                            if p.z.abs() <= *half_height {
                                let s = p.y.atan2(p.x) * radius;
                                consider(t, texture.sample(s + std::f64::consts::PI * radius, p.z + half_height, 0));
                            }
                        }
                    }
                }
                // Caps.
                if d.z != 0.0 {
                    for (cap, z) in [(1u64, *half_height), (2u64, -*half_height)] {
                        let t = (z - o.z) / d.z;
                        let p = o + d * t;
                        if p.x * p.x + p.y * p.y <= radius * radius {
                            consider(t, texture.sample(p.x + radius, p.y + radius, cap));
                        }
                    }
                }
                best
            }
        }
    }

    /// Unsigned distance from `p` to the shape's surface.
    pub fn surface_distance(&self, p: &Point3) -> f64 {
        match self {
            Shape::Plane {
                center,
                u_axis,
                v_axis,
                half_u,
                half_v,
                ..
            } => {
                let (u, v) = (Vector3::from(*u_axis).normalize(), Vector3::from(*v_axis).normalize());
                let rel = p - Point3::from(*center);
                let n = u.cross(&v);
                let du = (rel.dot(&u).abs() - half_u).max(0.0);
                let dv = (rel.dot(&v).abs() - half_v).max(0.0);
                (rel.dot(&n).powi(2) + du * du + dv * dv).sqrt()
            }
            Shape::Box {
                center,
                rotation,
                half_extents,
                ..
            } => {
                let r = rotation_from_vector(rotation);
                let q = r.transpose() * (p - Point3::from(*center));
                let d = Vector3::new(
                    q.x.abs() - half_extents[0],
                    q.y.abs() - half_extents[1],
                    q.z.abs() - half_extents[2],
                );
                let outside = d.map(|x| x.max(0.0)).norm();
                let inside = d.x.max(d.y).max(d.z).min(0.0);
                (outside + inside).abs()
            }
            Shape::Cylinder {
                center,
                axis,
                radius,
                half_height,
                ..
            } => {
                let frame = frame_from_axis(&Vector3::from(*axis));
                let q = frame.transpose() * (p - Point3::from(*center));
                let dr = (q.x * q.x + q.y * q.y).sqrt() - radius;
                let dz = q.z.abs() - half_height;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                (outside + dr.max(dz).min(0.0)).abs()
            }
        }
    }
}

/// Everything needed to render a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub intrinsics: Intrinsics,
    pub shapes: Vec<Shape>,
    pub background: Rgb,
    /// Standard deviation of additive Gaussian depth noise (m).
    pub noise_sigma: f64,
    /// Fraction of the image erased (depth invalidated) by a rectangular occluder.
    pub occlusion_fraction: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidSpec("image must be non-empty".into()));
        }
        let i = &self.intrinsics;
        if !(i.fx > 0.0 && i.fy > 0.0) {
            return Err(SynthError::InvalidSpec("focal lengths must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidSpec("noise sigma must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.occlusion_fraction) {
            return Err(SynthError::InvalidSpec("occlusion fraction must lie in [0, 1)".into()));
        }
        self.shapes.iter().try_for_each(Shape::validate)
    }

    /// Distance from a world point to the nearest shape surface.
    pub fn surface_distance(&self, p: &Point3) -> f64 {
        self.shapes
            .iter()
            .map(|s| s.surface_distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub frame: RgbdFrame,
    /// World-to-camera transform used for rendering.
    pub ground_truth_pose: RigidTransform,
    pub spec: SceneSpec,
}

fn quantize(c: &Rgb) -> [u8; 3] {
    c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

/// Renders `spec` seen from `pose` (world → camera).
pub fn generate_scene(spec: &SceneSpec, pose: &RigidTransform) -> Result<SyntheticScene, SynthError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let intr = spec.intrinsics;
    let inv = pose.inverse();
    let origin = inv.apply(&Point3::origin());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("valid sigma"));

    let mut rgb = vec![quantize(&spec.background); w * h];
    let mut depth = vec![0.0f32; w * h];
    for v in 0..h {
        for u in 0..w {
            let d_cam = Vector3::new((u as f64 - intr.cx) / intr.fx, (v as f64 - intr.cy) / intr.fy, 1.0);
            let dir = inv.apply_vector(&d_cam);
            let hit = spec
                .shapes
                .iter()
                .filter_map(|s| s.intersect(&origin, &dir))
                .min_by(|a, b| a.t.total_cmp(&b.t));
            if let Some(hit) = hit {
                let i = v * w + u;
                rgb[i] = quantize(&hit.color);
                let mut z = hit.t;
                if let Some(n) = &noise {
                    z += n.sample(&mut rng);
                }
                depth[i] = if z > 0.0 { z as f32 } else { 0.0 };
            }
        }
    }

    if spec.occlusion_fraction > 0.0 {
        let area = spec.occlusion_fraction * (w * h) as f64;
        let aspect = w as f64 / h as f64;
        let ow = ((area * aspect).sqrt().round() as usize).clamp(1, w);
        let oh = ((area / ow as f64).round() as usize).clamp(1, h);
        let x0 = rng.random_range(0..=w - ow);
        let y0 = rng.random_range(0..=h - oh);
        for v in y0..y0 + oh {
            for u in x0..x0 + ow {
                depth[v * w + u] = 0.0;
            }
        }
    }

    let frame = RgbdFrame::new(w, h, rgb, depth, intr)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(SyntheticScene {
        frame,
        ground_truth_pose: *pose,
        spec: spec.clone(),
    })
}

/// World-to-camera pose of a camera at `eye` looking at `target`, with image
/// "up" as close to `up` as possible (camera y points down).
pub fn look_at(eye: &Point3, target: &Point3, up: &Vector3<f64>) -> RigidTransform {
    let z = (target - eye).normalize();
    let x = z.cross(up).normalize();
    let y = z.cross(&x);
    let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    RigidTransform::new(r, -(r * eye.coords))
}

/// Camera on a sphere around `target`: azimuth and elevation in degrees, world z up.
pub fn orbit_pose(target: &Point3, distance: f64, azimuth_deg: f64, elevation_deg: f64) -> RigidTransform {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    let eye = target + Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()) * distance;
    look_at(&eye, target, &Vector3::z())
}

/// 320×240 intrinsics with a Kinect-like focal length.
pub fn default_intrinsics() -> Intrinsics {
    Intrinsics::new(525.0, 525.0, 159.5, 119.5)
}

fn noise(cell: f64, seed: u64) -> Texture {
    Texture::Noise {
        cell,
        seed,
        low: [0.0, 0.0, 0.0],
        high: [1.0, 1.0, 1.0],
    }
}

/// A tabletop with two boxes and a cylinder, richly textured.
pub fn tabletop_spec(texture_seed: u64) -> SceneSpec {
    let s = texture_seed;
    SceneSpec {
        width: 320,
        height: 240,
        intrinsics: default_intrinsics(),
        shapes: vec![
            Shape::Plane {
                center: [0.0, 0.0, 0.0],
                u_axis: [1.0, 0.0, 0.0],
                v_axis: [0.0, 1.0, 0.0],
                half_u: 0.4,
                half_v: 0.4,
                texture: noise(0.007, s),
            },
            Shape::Box {
                center: [-0.07, 0.06, 0.06],
                rotation: [0.0, 0.0, 0.5],
                half_extents: [0.06, 0.045, 0.06],
                textures: vec![
                    noise(0.006, s + 1),
                    Texture::Checker { cell: 0.015, a: [0.9, 0.2, 0.1], b: [0.1, 0.3, 0.8] },
                    noise(0.008, s + 2),
                ],
            },
            Shape::Box {
                center: [0.1, -0.06, 0.04],
                rotation: [0.0, 0.0, -0.35],
                half_extents: [0.05, 0.07, 0.04],
                textures: vec![
                    Texture::Stripes { period: 0.012, a: [0.95, 0.9, 0.2], b: [0.1, 0.5, 0.2] },
                    noise(0.006, s + 3),
                ],
            },
            Shape::Cylinder {
                center: [0.06, 0.13, 0.07],
                axis: [0.0, 0.0, 1.0],
                radius: 0.04,
                half_height: 0.07,
                texture: noise(0.006, s + 4),
            },
        ],
        background: [0.05, 0.05, 0.05],
        noise_sigma: 0.0,
        occlusion_fraction: 0.0,
        seed: s,
    }
}

/// Two views of the tabletop `separation_deg` apart in azimuth.
pub fn two_view_poses(separation_deg: f64) -> (RigidTransform, RigidTransform) {
    let target = Point3::new(0.0, 0.02, 0.03);
    (
        orbit_pose(&target, 0.75, -90.0, 50.0),
        orbit_pose(&target, 0.75, -90.0 + separation_deg, 50.0),
    )
}

/// A single textured plane facing the camera at `depth` meters.
pub fn fronto_plane_spec(depth: f64, texture: Texture) -> SceneSpec {
    SceneSpec {
        width: 160,
        height: 120,
        intrinsics: Intrinsics::new(525.0, 525.0, 79.5, 59.5),
        shapes: vec![Shape::Plane {
            center: [0.0, 0.0, depth],
            u_axis: [1.0, 0.0, 0.0],
            v_axis: [0.0, 1.0, 0.0],
            half_u: 1.0,
            half_v: 1.0,
            texture,
        }],
        background: [0.0; 3],
        noise_sigma: 0.0,
        occlusion_fraction: 0.0,
        seed: 0,
    }
}

/// Random spec used for "unrelated model" checks.
pub fn random_clutter_spec(seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = tabletop_spec(seed.wrapping_mul(31).wrapping_add(1000));
    spec.shapes.truncate(1);
    for k in 0..4 {
        let c = [rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15), 0.0];
        let half = [
            rng.random_range(0.02..0.06),
            rng.random_range(0.02..0.06),
            rng.random_range(0.02..0.08),
        ];
        spec.shapes.push(Shape::Box {
            center: [c[0], c[1], half[2]],
            rotation: [0.0, 0.0, rng.random_range(-1.5..1.5)],
            half_extents: half,
            textures: vec![noise(0.006, seed * 17 + k)],
        });
    }
    spec.seed = seed;
    spec
}
