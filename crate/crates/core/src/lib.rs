//! Pose estimation from RGB-D frames with ECV primitives, context
//! descriptors and polygon-prefiltered RANSAC.
//!
//! The pipeline runs `ecv::extract_primitives` → `descriptor::build_all_descriptors`
//! → `matching::match_descriptors` → `ransac::register`, optionally followed by
//! `icp::icp_align`. `eval` holds the correspondence-score protocol, the
//! registration benchmark and a synthetic scene generator; `io` holds the file
//! formats.

pub mod color;
pub mod descriptor;
pub mod ecv;
pub mod eval;
pub mod geometry;
pub mod icp;
pub mod io;
pub mod matching;
pub mod ransac;
pub mod spatial;

use thiserror::Error;

use descriptor::{build_all_descriptors, ContextDescriptor, DescriptorConfig, DescriptorError, DescriptorReport};
use ecv::Primitive;
use geometry::Point3;

/// Primitives of one view together with the descriptors computed on them.
/// Descriptor `source_index` values index into `primitives`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub primitives: Vec<Primitive>,
    pub descriptors: Vec<ContextDescriptor>,
}

impl Model {
    pub fn new(primitives: Vec<Primitive>, descriptors: Vec<ContextDescriptor>) -> Self {
        Self { primitives, descriptors }
    }

    /// Computes descriptors for `primitives`.
    pub fn from_primitives(
        primitives: Vec<Primitive>,
        cfg: &DescriptorConfig,
    ) -> Result<(Self, DescriptorReport), DescriptorError> {
        let (descriptors, report) = build_all_descriptors(&primitives, cfg)?;
        Ok((Self { primitives, descriptors }, report))
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.primitives.iter().map(|p| p.position).collect()
    }
}

/// Any error the library can produce, with a stable category name.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Extract(#[from] ecv::ExtractError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Match(#[from] matching::MatchError),
    #[error(transparent)]
    Ransac(#[from] ransac::RansacError),
    #[error(transparent)]
    Icp(#[from] icp::IcpError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Synth(#[from] eval::SynthError),
    #[error(transparent)]
    Color(#[from] color::ColorError),
    #[error(transparent)]
    Io(#[from] io::IoError),
}

impl Error {
    /// Machine-readable error category, e.g. `NoConsensus` or `ParseError`.
    pub fn category(&self) -> &'static str {
        use color::ColorError as C;
        use ecv::ExtractError as X;
        use ransac::RansacError as R;
        match self {
            Error::Geometry(geometry::GeometryError::DegenerateGeometry(_)) => "DegenerateGeometry",
            Error::Geometry(geometry::GeometryError::EmptyInput) => "EmptyInput",
            Error::Extract(e) => match e {
                X::InvalidFilter(_) => "InvalidFilter",
                X::InvalidFrame(_) => "InvalidFrame",
                X::InvalidConfig(_) => "InvalidConfig",
                X::EmptyInput => "EmptyInput",
                X::InsufficientSupport(_) => "InsufficientSupport",
                X::InvalidDepth => "InvalidDepth",
                X::Homogeneous => "Homogeneous",
            },
            Error::Descriptor(e) => match e {
                DescriptorError::CoincidentPoints => "CoincidentPoints",
                DescriptorError::InsufficientNeighbors { .. } => "InsufficientNeighbors",
                DescriptorError::InvalidConfig(_) => "InvalidConfig",
                DescriptorError::IndexOutOfRange(_) => "IndexOutOfRange",
            },
            Error::Match(matching::MatchError::EmptyInput) => "EmptyInput",
            Error::Match(matching::MatchError::InvalidOption(_)) => "InvalidOption",
            Error::Ransac(e) => match e {
                R::InvalidParameter(_) => "InvalidParameter",
                R::DegenerateSample(_) => "DegenerateSample",
                R::InsufficientCorrespondences { .. } => "InsufficientCorrespondences",
                R::NoConsensus(_) => "NoConsensus",
                R::Match(_) => "EmptyInput",
            },
            Error::Icp(e) => match e {
                icp::IcpError::EmptyInput => "EmptyInput",
                icp::IcpError::NoOverlap(_) => "NoOverlap",
                icp::IcpError::InvalidConfig(_) => "InvalidConfig",
                icp::IcpError::Geometry(_) => "DegenerateGeometry",
            },
            Error::Eval(e) => e.category(),
            Error::Synth(_) => "InvalidSpec",
            Error::Color(e) => match e {
                C::TooFewPairs { .. } => "TooFewPairs",
                C::RankDeficient(_) => "RankDeficient",
                C::NonFinite => "NonFinite",
            },
            Error::Io(e) => e.category(),
        }
    }
}
