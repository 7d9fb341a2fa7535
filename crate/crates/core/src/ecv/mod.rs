//! Early-cognitive-vision primitive extraction from RGB-D frames.
//!
//! The frame's luminance is split into local magnitude, orientation and phase
//! by a monogenic filter. A hexagonal grid then yields one keypoint per cell,
//! each cell is classified as homogeneous, edge or texture, and edge/texture
//! keypoints are lifted to 3-D segments and texlets using the depth channel.

mod frame;
mod hexgrid;
mod monogenic;
mod reconstruct;

use nalgebra::Vector3;
use thiserror::Error;

use crate::geometry::Point3;

pub use frame::{Intrinsics, RgbdFrame};
pub use hexgrid::{
    cell_argmax, classify_cell, extract_keypoints, orientation_variance, CellClass, CellId,
    HexGrid, IdThresholds, Keypoint,
};
pub use monogenic::{
    bin_frequency, filter_gray, monogenic_filter, transfer, MonogenicConfig, MonogenicResponse,
    MopImage,
};
pub use reconstruct::{reconstruct_one, reconstruct_primitives, ReconstructionReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient support: {0} neighbors for the principal-direction fit")]
    InsufficientSupport(usize),
    #[error("keypoint has no valid depth")]
    InvalidDepth,
    #[error("keypoint lies in a homogeneous cell")]
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum PrimitiveKind {
    Segment,
    Texlet,
}

impl PrimitiveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrimitiveKind::Segment => "segment",
            PrimitiveKind::Texlet => "texlet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "segment" => Some(PrimitiveKind::Segment),
            "texlet" => Some(PrimitiveKind::Texlet),
            _ => None,
        }
    }
}

/// A classified 3-D keypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub position: Point3,
    /// Unit edge direction (segments) or surface normal (texlets).
    pub orientation: Vector3<f64>,
    pub kind: PrimitiveKind,
    /// RGB in `[0, 1]`.
    pub color: [f64; 3],
    pub pixel: (u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub center_wavelength: f64,
    pub bandwidth: f64,
    pub cell_diameter: f64,
    /// Keypoints weaker than this fraction of the image maximum are dropped.
    pub magnitude_threshold: f64,
    pub thresholds: IdThresholds,
    /// Support radius (m) for normal and direction fits.
    pub normal_radius: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            center_wavelength: 8.0,
            bandwidth: 2.0,
            cell_diameter: 7.0,
            magnitude_threshold: 0.05,
            thresholds: IdThresholds::default(),
            normal_radius: 0.01,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        MonogenicConfig {
            center_wavelength: self.center_wavelength,
            bandwidth: self.bandwidth,
            padding: None,
        }
        .validate()?;
        HexGrid::new(self.cell_diameter)?;
        let bad = |m: String| Err(ExtractError::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.magnitude_threshold) {
            return bad(format!("magnitude threshold must lie in [0, 1), got {}", self.magnitude_threshold));
        }
        let t = &self.thresholds;
        if !(t.tau_m >= 0.0 && t.tau_m < 1.0) || !(t.tau_o > 0.0 && t.tau_o <= 1.0) {
            return bad(format!("thresholds out of range: tau_m {}, tau_o {}", t.tau_m, t.tau_o));
        }
        if !(self.normal_radius > 0.0) || !self.normal_radius.is_finite() {
            return bad(format!("normal radius must be positive, got {}", self.normal_radius));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ExtractionReport {
    pub cells: usize,
    pub keypoints: usize,
    pub homogeneous_cells: usize,
    pub edge_cells: usize,
    pub texture_cells: usize,
    pub reconstruction: ReconstructionReport,
}

/// Full extraction: monogenic filter, hex keypoints, classification, 3-D lifting.
pub fn extract_primitives(
    frame: &RgbdFrame,
    cfg: &ExtractConfig,
) -> Result<(Vec<Primitive>, ExtractionReport), ExtractError> {
    cfg.validate()?;
    let grid = HexGrid::new(cfg.cell_diameter)?;
    let mop = monogenic_filter(frame, cfg.center_wavelength, cfg.bandwidth)?;
    let cells = grid.partition(frame.width(), frame.height());
    let keypoints = hexgrid::keypoints_in_cells(&mop, &cells, cfg.magnitude_threshold);

    let mut report = ExtractionReport {
        cells: cells.len(),
        keypoints: keypoints.len(),
        ..Default::default()
    };
    // Cells are row-major in both lists; walk them together.
    let mut classes = Vec::with_capacity(keypoints.len());
    let mut cell_iter = cells.iter();
    for kp in &keypoints {
        let (_, pixels) = cell_iter
            .by_ref()
            .find(|(id, _)| *id == kp.cell)
            .expect("keypoint cell exists in partition");
        let class = classify_cell(&mop, pixels, &cfg.thresholds)?;
        match class {
            CellClass::Homogeneous => report.homogeneous_cells += 1,
            CellClass::Edge => report.edge_cells += 1,
            CellClass::Texture => report.texture_cells += 1,
        }
        classes.push(class);
    }
    let (prims, rec) = reconstruct_primitives(frame, &mop, &keypoints, &classes, cfg.normal_radius)?;
    report.reconstruction = rec;
    Ok((prims, report))
}
