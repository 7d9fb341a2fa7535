//! Nearest-neighbor correspondence search in descriptor space.

use thiserror::Error;

use crate::descriptor::{ContextDescriptor, DESCRIPTOR_DIM};
use crate::ecv::PrimitiveKind;
use crate::spatial::KdTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

/// One hypothesized correspondence between primitive indices.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Correspondence {
    pub object_index: usize,
    pub scene_index: usize,
    pub distance: f64,
}

/// Correspondences stored by ascending, unique object index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrespondenceSet {
    entries: Vec<Correspondence>,
}

impl CorrespondenceSet {
    /// Sorts by object index; later duplicates of an object index are dropped.
    pub fn new(mut entries: Vec<Correspondence>) -> Self {
        entries.sort_by_key(|c| c.object_index);
        entries.dedup_by_key(|c| c.object_index);
        Self { entries }
    }

    pub fn entries(&self) -> &[Correspondence] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correspondence> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    /// Best-bin-first search bounded by a number of visited leaves.
    Approximate { max_leaves: usize },
}

/// Nearest-neighbor index over descriptor vectors (Euclidean distance).
#[derive(Debug, Clone)]
pub struct DescriptorIndex {
    tree: KdTree<DESCRIPTOR_DIM>,
    mode: SearchMode,
}

/// A hit: position in the indexed list and Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorHit {
    pub position: usize,
    pub distance: f64,
}

impl DescriptorIndex {
    pub fn build(descriptors: &[ContextDescriptor], mode: SearchMode) -> Result<Self, MatchError> {
        Self::from_vectors(descriptors.iter().map(|d| d.values).collect(), mode)
    }

    pub fn from_vectors(vectors: Vec<[f64; DESCRIPTOR_DIM]>, mode: SearchMode) -> Result<Self, MatchError> {
        if vectors.is_empty() {
            return Err(MatchError::EmptyInput);
        }
        Ok(Self {
            tree: KdTree::new(vectors),
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn nearest(&self, query: &[f64; DESCRIPTOR_DIM]) -> DescriptorHit {
        let n = match self.mode {
            SearchMode::Exact => self.tree.nearest(query),
            SearchMode::Approximate { max_leaves } => self.tree.nearest_approx(query, max_leaves),
        }
        .expect("index is non-empty");
        DescriptorHit {
            position: n.index,
            distance: n.dist_sq.sqrt(),
        }
    }

    /// Exact `k` nearest neighbors regardless of the index mode.
    pub fn nearest_k(&self, query: &[f64; DESCRIPTOR_DIM], k: usize) -> Vec<DescriptorHit> {
        self.tree
            .nearest_k(query, k)
            .into_iter()
            .map(|n| DescriptorHit {
                position: n.index,
                distance: n.dist_sq.sqrt(),
            })
            .collect()
    }
}

pub fn build_index(descriptors: &[ContextDescriptor]) -> Result<DescriptorIndex, MatchError> {
    DescriptorIndex::build(descriptors, SearchMode::Exact)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub same_kind_only: bool,
    /// Keep a match only if `d1 < ratio · d2` (second-nearest test). Off by default.
    pub ratio: Option<f64>,
    pub mode: SearchMode,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            same_kind_only: true,
            ratio: None,
            mode: SearchMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchOutcome {
    pub correspondences: CorrespondenceSet,
    /// Object primitive indices with no admissible scene candidate.
    pub no_candidates: Vec<usize>,
    /// Object primitive indices dropped by the ratio test.
    pub ratio_rejected: Vec<usize>,
}

struct Partition {
    index: DescriptorIndex,
    // Position in the partition -> position in the full scene list.
    positions: Vec<usize>,
}

fn partition(
    scene: &[ContextDescriptor],
    keep: impl Fn(&ContextDescriptor) -> bool,
    mode: SearchMode,
) -> Option<Partition> {
    let positions: Vec<usize> = (0..scene.len()).filter(|&i| keep(&scene[i])).collect();
    let vectors = positions.iter().map(|&i| scene[i].values).collect();
    DescriptorIndex::from_vectors(vectors, mode)
        .ok()
        .map(|index| Partition { index, positions })
}

/// For each object descriptor, its nearest scene descriptor (restricted to the
/// same primitive kind unless disabled). Entries refer to primitive indices.
pub fn match_descriptors(
    object: &[ContextDescriptor],
    scene: &[ContextDescriptor],
    opts: &MatchOptions,
) -> Result<MatchOutcome, MatchError> {
    if object.is_empty() || scene.is_empty() {
        return Err(MatchError::EmptyInput);
    }
    if let Some(r) = opts.ratio {
        if !(r > 0.0 && r <= 1.0) {
            return Err(MatchError::InvalidOption(format!(
                "ratio must lie in (0, 1], got {r}"
            )));
        }
    }
    let (all, segments, texlets) = if opts.same_kind_only {
        (
            None,
            partition(scene, |d| d.kind == PrimitiveKind::Segment, opts.mode),
            partition(scene, |d| d.kind == PrimitiveKind::Texlet, opts.mode),
        )
    } else {
        (partition(scene, |_| true, opts.mode), None, None)
    };

    let mut entries = Vec::with_capacity(object.len());
    let mut outcome = MatchOutcome::default();
    for d in object {
        let part = match (&all, d.kind) {
            (Some(p), _) => Some(p),
            (None, PrimitiveKind::Segment) => segments.as_ref(),
            (None, PrimitiveKind::Texlet) => texlets.as_ref(),
        };
        let Some(part) = part else {
            outcome.no_candidates.push(d.source_index);
            continue;
        };
        let hit = part.index.nearest(&d.values);
        if let Some(ratio) = opts.ratio {
            let two = part.index.nearest_k(&d.values, 2);
            if two.len() == 2 && !(two[0].distance < ratio * two[1].distance) {
                outcome.ratio_rejected.push(d.source_index);
                continue;
            }
        }
        let s = &scene[part.positions[hit.position]];
        entries.push(Correspondence {
            object_index: d.source_index,
            scene_index: s.source_index,
            distance: hit.distance,
        });
    }
    outcome.correspondences = CorrespondenceSet::new(entries);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desc(i: usize, kind: PrimitiveKind, rng: &mut ChaCha8Rng) -> ContextDescriptor {
        let mut values = [0.0; DESCRIPTOR_DIM];
        for v in values.iter_mut() {
            *v = rng.random::<f64>();
        }
        ContextDescriptor {
            values,
            source_index: i,
            kind,
        }
    }

    fn random_set(n: usize, seed: u64, kinds: bool) -> Vec<ContextDescriptor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let kind = if kinds && rng.random_bool(0.4) {
                    PrimitiveKind::Segment
                } else {
                    PrimitiveKind::Texlet
                };
                desc(i, kind, &mut rng)
            })
            .collect()
    }

    fn dist(a: &ContextDescriptor, b: &ContextDescriptor) -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn index_basics() {
        assert_eq!(build_index(&[]).unwrap_err(), MatchError::EmptyInput);
        let set = random_set(2, 1, false);
        let idx = build_index(&set[..1]).unwrap();
        assert_eq!(idx.nearest(&set[0].values).distance, 0.0);

        let idx = build_index(&set).unwrap();
        let mut q = set[1].values;
        q[0] += 0.01;
        assert_eq!(idx.nearest(&q).position, 1);
    }

    #[test]
    fn exact_index_equals_linear_scan() {
        let data = random_set(500, 2, false);
        let queries = random_set(100, 3, false);
        let idx = build_index(&data).unwrap();
        for q in &queries {
            let oracle = (0..data.len())
                .min_by(|&a, &b| dist(q, &data[a]).total_cmp(&dist(q, &data[b])))
                .unwrap();
            let hit = idx.nearest(&q.values);
            assert_eq!(hit.position, oracle);
            assert!((hit.distance - dist(q, &data[oracle])).abs() < 1e-12);
        }
    }

    #[test]
    fn self_matching_is_zero_distance() {
        let set = random_set(40, 4, true);
        let out = match_descriptors(&set, &set, &MatchOptions::default()).unwrap();
        assert_eq!(out.correspondences.len(), 40);
        for c in out.correspondences.iter() {
            assert_eq!(c.object_index, c.scene_index);
            assert_eq!(c.distance, 0.0);
        }
    }

    #[test]
    fn kind_restriction_reports_missing_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let object = vec![desc(0, PrimitiveKind::Segment, &mut rng)];
        let scene: Vec<_> = (0..5).map(|i| desc(i, PrimitiveKind::Texlet, &mut rng)).collect();
        let out = match_descriptors(&object, &scene, &MatchOptions::default()).unwrap();
        assert!(out.correspondences.is_empty());
        assert_eq!(out.no_candidates, vec![0]);

        let any = MatchOptions {
            same_kind_only: false,
            ..Default::default()
        };
        assert_eq!(match_descriptors(&object, &scene, &any).unwrap().correspondences.len(), 1);
        assert_eq!(
            match_descriptors(&[], &scene, &any).unwrap_err(),
            MatchError::EmptyInput
        );
    }

    #[test]
    fn matching_equals_all_pairs_argmin() {
        let object = random_set(50, 6, true);
        let scene = random_set(80, 7, true);
        let out = match_descriptors(&object, &scene, &MatchOptions::default()).unwrap();
        let mut expected = Vec::new();
        for o in &object {
            let best = scene
                .iter()
                .filter(|s| s.kind == o.kind)
                .min_by(|a, b| dist(o, a).total_cmp(&dist(o, b)));
            if let Some(s) = best {
                expected.push((o.source_index, s.source_index));
            }
        }
        let got: Vec<_> = out
            .correspondences
            .iter()
            .map(|c| (c.object_index, c.scene_index))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn ratio_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = desc(0, PrimitiveKind::Texlet, &mut rng);
        let mut b = a.clone();
        b.source_index = 1;
        let scene = vec![a.clone(), b];
        let opts = MatchOptions {
            ratio: Some(0.8),
            ..Default::default()
        };
        // Two identical candidates: ambiguous, rejected.
        let out = match_descriptors(&[a.clone()], &scene, &opts).unwrap();
        assert_eq!(out.ratio_rejected, vec![0]);
        let bad = MatchOptions {
            ratio: Some(1.5),
            ..Default::default()
        };
        assert!(match_descriptors(&[a], &scene, &bad).is_err());
    }

    #[test]
    fn permuting_the_scene_keeps_matched_vectors() {
        let object = random_set(30, 9, false);
        let scene = random_set(60, 10, false);
        let mut shuffled = scene.clone();
        shuffled.reverse();
        let a = match_descriptors(&object, &scene, &MatchOptions::default()).unwrap();
        let b = match_descriptors(&object, &shuffled, &MatchOptions::default()).unwrap();
        assert_eq!(a.correspondences, b.correspondences);
    }
}
