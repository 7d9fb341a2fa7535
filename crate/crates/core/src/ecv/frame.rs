use crate::geometry::Point3;

use super::ExtractError;

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self { fx, fy, cx, cy }
    }

    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Point3 {
        Point3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Pixel coordinates of a camera-frame point (z must be positive).
    pub fn project(&self, p: &Point3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// An RGB-D frame: 8-bit color and 32-bit depth in meters, row-major.
///
/// A depth of `0` or NaN marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    width: usize,
    height: usize,
    rgb: Vec<[u8; 3]>,
    depth: Vec<f32>,
    intrinsics: Intrinsics,
}

impl RgbdFrame {
    pub fn new(
        width: usize,
        height: usize,
        rgb: Vec<[u8; 3]>,
        depth: Vec<f32>,
        intrinsics: Intrinsics,
    ) -> Result<Self, ExtractError> {
        if width == 0 || height == 0 {
            return Err(ExtractError::InvalidFrame("empty frame".into()));
        }
        let n = width * height;
        if rgb.len() != n || depth.len() != n {
            return Err(ExtractError::InvalidFrame(format!(
                "expected {n} pixels, got {} rgb and {} depth",
                rgb.len(),
                depth.len()
            )));
        }
        if !(intrinsics.fx > 0.0 && intrinsics.fy > 0.0)
            || !intrinsics.cx.is_finite()
            || !intrinsics.cy.is_finite()
        {
            return Err(ExtractError::InvalidFrame(
                "focal lengths must be positive".into(),
            ));
        }
        if depth.iter().any(|&d| d < 0.0 || d.is_infinite()) {
            return Err(ExtractError::InvalidFrame(
                "depth values must be positive, zero or NaN".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            rgb,
            depth,
            intrinsics,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    pub fn rgb_raw(&self) -> &[[u8; 3]] {
        &self.rgb
    }

    pub fn depth_raw(&self) -> &[f32] {
        &self.depth
    }

    /// Color at `(u, v)` with channels in `[0, 1]`.
    pub fn rgb(&self, u: usize, v: usize) -> [f64; 3] {
        let c = self.rgb[v * self.width + u];
        [
            c[0] as f64 / 255.0,
            c[1] as f64 / 255.0,
            c[2] as f64 / 255.0,
        ]
    }

    pub fn depth(&self, u: usize, v: usize) -> Option<f64> {
        let d = self.depth[v * self.width + u];
        (d.is_finite() && d > 0.0).then_some(d as f64)
    }

    pub fn point(&self, u: usize, v: usize) -> Option<Point3> {
        self.depth(u, v)
            .map(|z| self.intrinsics.back_project(u as f64, v as f64, z))
    }

    /// Luminance `0.299 R + 0.587 G + 0.114 B` of every pixel.
    pub fn luminance(&self) -> Vec<f64> {
        self.rgb
            .iter()
            .map(|c| {
                (0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64) / 255.0
            })
            .collect()
    }

    pub fn valid_depth_count(&self) -> usize {
        self.depth.iter().filter(|d| d.is_finite() && **d > 0.0).count()
    }
}
