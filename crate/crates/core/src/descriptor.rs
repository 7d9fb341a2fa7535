//! Semi-local context descriptors.
//!
//! For a source primitive, every pair of primitives inside a ball of radius
//! `r` contributes three geometric relations (cosines between orientations
//! and the baseline) and three appearance relations (per-channel color
//! differences). Each relation is binned into a 16-bin histogram over
//! `[-1, 1]`, giving a 96-dimensional descriptor.

use nalgebra::Vector3;
use thiserror::Error;

use crate::ecv::{Primitive, PrimitiveKind};
use crate::geometry::Point3;
use crate::spatial::{squared_distance, KdTree};

pub const BINS: usize = 16;
pub const RELATIONS: usize = 6;
pub const DESCRIPTOR_DIM: usize = BINS * RELATIONS;

/// Pairs closer than this are coincident and skipped.
const COINCIDENT_DIST: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescriptorError {
    #[error("coincident points")]
    CoincidentPoints,
    #[error("insufficient neighbors: {found} found, {required} required")]
    InsufficientNeighbors { found: usize, required: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("source index {0} out of range")]
    IndexOutOfRange(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextDescriptor {
    /// Six 16-bin blocks in the order R_G1, R_G2, R_G3, R_A1, R_A2, R_A3.
    pub values: [f64; DESCRIPTOR_DIM],
    pub source_index: usize,
    pub kind: PrimitiveKind,
}

impl ContextDescriptor {
    pub fn block(&self, relation: usize) -> &[f64] {
        &self.values[relation * BINS..(relation + 1) * BINS]
    }

    pub fn distance(&self, other: &ContextDescriptor) -> f64 {
        squared_distance(&self.values, &other.values).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorConfig {
    pub radius: f64,
    /// Minimum neighborhood size, source included.
    pub min_neighbors: usize,
    /// Let segments and texlets share a neighborhood.
    pub mixed_kinds: bool,
    /// Divide each histogram by the number of contributing pairs.
    pub normalize: bool,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            radius: 0.025,
            min_neighbors: 5,
            mixed_kinds: true,
            normalize: true,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(DescriptorError::InvalidConfig(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if self.min_neighbors < 2 {
            return Err(DescriptorError::InvalidConfig(format!(
                "min_neighbors must be at least 2, got {}",
                self.min_neighbors
            )));
        }
        Ok(())
    }
}

/// `(o1·o2, o1·d, o2·d)` with `d` the unit baseline from `p1` to `p2`.
pub fn geometric_relations(
    p1: &Point3,
    o1: &Vector3<f64>,
    p2: &Point3,
    o2: &Vector3<f64>,
) -> Result<[f64; 3], DescriptorError> {
    let baseline = p2 - p1;
    let len = baseline.norm();
    if len < COINCIDENT_DIST {
        return Err(DescriptorError::CoincidentPoints);
    }
    let d = baseline / len;
    Ok([o1.dot(o2), o1.dot(&d), o2.dot(&d)])
}

/// Per-channel differences `c2 − c1`.
pub fn appearance_relations(c1: &[f64; 3], c2: &[f64; 3]) -> [f64; 3] {
    [c2[0] - c1[0], c2[1] - c1[1], c2[2] - c1[2]]
}

/// Orders two indexed primitives so the one nearer to `source` comes first;
/// equal distances go to the smaller index.
pub fn order_pair<'a>(
    source: &Point3,
    a: (usize, &'a Primitive),
    b: (usize, &'a Primitive),
) -> ((usize, &'a Primitive), (usize, &'a Primitive)) {
    let da = (a.1.position - source).norm_squared();
    let db = (b.1.position - source).norm_squared();
    if da < db || (da == db && a.0 <= b.0) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Bin of `value` in a 16-bin histogram over `[-1, 1]`; `1` lands in the top bin.
#[inline]
pub fn bin_index(value: f64) -> usize {
    let v = value.clamp(-1.0, 1.0);
    (((v + 1.0) * 0.5 * BINS as f64) as usize).min(BINS - 1)
}

fn histogram(
    source: &Point3,
    neighborhood: &[usize],
    primitives: &[Primitive],
    normalize: bool,
) -> Option<[f64; DESCRIPTOR_DIM]> {
    let mut counts = [0u32; DESCRIPTOR_DIM];
    let mut pairs = 0u32;
    for (k, &ia) in neighborhood.iter().enumerate() {
        for &ib in &neighborhood[k + 1..] {
            let ((_, first), (_, second)) =
                order_pair(source, (ia, &primitives[ia]), (ib, &primitives[ib]));
            let Ok(g) = geometric_relations(
                &first.position,
                &first.orientation,
                &second.position,
                &second.orientation,
            ) else {
                continue;
            };
            let a = appearance_relations(&first.color, &second.color);
            for (rel, value) in g.iter().chain(a.iter()).enumerate() {
                counts[rel * BINS + bin_index(*value)] += 1;
            }
            pairs += 1;
        }
    }
    if pairs == 0 {
        return None;
    }
    let scale = if normalize { 1.0 / pairs as f64 } else { 1.0 };
    let mut values = [0.0; DESCRIPTOR_DIM];
    for (v, c) in values.iter_mut().zip(counts) {
        *v = c as f64 * scale;
    }
    Some(values)
}

fn admissible(source: &Primitive, other: &Primitive, cfg: &DescriptorConfig) -> bool {
    cfg.mixed_kinds || source.kind == other.kind
}

fn finish(
    source_index: usize,
    primitives: &[Primitive],
    neighborhood: &[usize],
    cfg: &DescriptorConfig,
) -> Result<ContextDescriptor, DescriptorError> {
    let source = &primitives[source_index];
    let insufficient = DescriptorError::InsufficientNeighbors {
        found: neighborhood.len(),
        required: cfg.min_neighbors,
    };
    if neighborhood.len() < cfg.min_neighbors {
        return Err(insufficient);
    }
    let values =
        histogram(&source.position, neighborhood, primitives, cfg.normalize).ok_or(insufficient)?;
    Ok(ContextDescriptor {
        values,
        source_index,
        kind: source.kind,
    })
}

fn coords(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Descriptor of one primitive by a direct scan over all primitives.
pub fn build_descriptor(
    source_index: usize,
    primitives: &[Primitive],
    cfg: &DescriptorConfig,
) -> Result<ContextDescriptor, DescriptorError> {
    cfg.validate()?;
    let source = primitives
        .get(source_index)
        .ok_or(DescriptorError::IndexOutOfRange(source_index))?;
    let center = coords(&source.position);
    let r2 = cfg.radius * cfg.radius;
    let neighborhood: Vec<usize> = primitives
        .iter()
        .enumerate()
        .filter(|(_, p)| admissible(source, p, cfg))
        .filter(|(_, p)| squared_distance(&center, &coords(&p.position)) <= r2)
        .map(|(i, _)| i)
        .collect();
    finish(source_index, primitives, &neighborhood, cfg)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct DescriptorReport {
    pub emitted: usize,
    pub skipped: Vec<usize>,
}

/// Descriptors for every primitive with enough neighbors, in primitive order.
pub fn build_all_descriptors(
    primitives: &[Primitive],
    cfg: &DescriptorConfig,
) -> Result<(Vec<ContextDescriptor>, DescriptorReport), DescriptorError> {
    cfg.validate()?;
    let tree = KdTree::new(primitives.iter().map(|p| coords(&p.position)).collect());
    let r2 = cfg.radius * cfg.radius;
    let mut out = Vec::new();
    let mut report = DescriptorReport::default();
    for (i, source) in primitives.iter().enumerate() {
        let mut neighborhood = tree.within(&coords(&source.position), r2);
        if !cfg.mixed_kinds {
            neighborhood.retain(|&j| primitives[j].kind == source.kind);
        }
        match finish(i, primitives, &neighborhood, cfg) {
            Ok(d) => out.push(d),
            Err(DescriptorError::InsufficientNeighbors { .. }) => report.skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    report.emitted = out.len();
    Ok((out, report))
}
