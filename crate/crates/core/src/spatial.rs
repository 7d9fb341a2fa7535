//! A static k-d tree over fixed-dimension `f64` points.
//!
//! Used for 3-D spatial queries (inlier search, neighborhoods, ICP pairing)
//! and for exact or approximate nearest-neighbor search over descriptors.
//! Ties in distance are always broken towards the lower point index, so
//! exact queries agree bit-for-bit with a linear scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    // Permutation of point indices; leaves own contiguous ranges.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// A query hit: original point index and squared Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    fn better_than(&self, other: &Neighbor) -> bool {
        self.dist_sq < other.dist_sq || (self.dist_sq == other.dist_sq && self.index < other.index)
    }
}

#[inline]
pub fn squared_distance<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

#[derive(PartialEq)]
struct Pending {
    bound: f64,
    node: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on the lower bound.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> KdTree<D> {
    pub fn new(points: Vec<[f64; D]>) -> Self {
        let mut tree = KdTree {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64; D] {
        &self.points[index]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for d in 0..D {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let dim = (0..D)
            .max_by(|&a, &b| {
                (hi[a] - lo[a])
                    .partial_cmp(&(hi[b] - lo[b]))
                    .unwrap_or(Ordering::Equal)
            })
            .unwrap_or(0);
        if hi[dim] - lo[dim] <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim]
                .partial_cmp(&points[b][dim])
                .unwrap_or(Ordering::Equal)
        });
        let value = self.points[self.order[mid]][dim];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// Exact nearest neighbor.
    pub fn nearest(&self, query: &[f64; D]) -> Option<Neighbor> {
        self.nearest_within(query, f64::INFINITY)
    }

    /// Exact nearest neighbor with squared distance `<= max_dist_sq`.
    pub fn nearest_within(&self, query: &[f64; D], max_dist_sq: f64) -> Option<Neighbor> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Neighbor> = None;
        let mut bound = max_dist_sq;
        self.search_nearest(0, query, &mut best, &mut bound, &|_| true);
        best
    }

    /// Exact nearest neighbor among points accepted by `filter`.
    pub fn nearest_filtered<F: Fn(usize) -> bool>(
        &self,
        query: &[f64; D],
        filter: F,
    ) -> Option<Neighbor> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = None;
        let mut bound = f64::INFINITY;
        self.search_nearest(0, query, &mut best, &mut bound, &filter);
        best
    }

    fn search_nearest<F: Fn(usize) -> bool>(
        &self,
        node: usize,
        query: &[f64; D],
        best: &mut Option<Neighbor>,
        bound: &mut f64,
        filter: &F,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if !filter(i) {
                        continue;
                    }
                    let cand = Neighbor {
                        index: i,
                        dist_sq: squared_distance(query, &self.points[i]),
                    };
                    if cand.dist_sq > *bound {
                        continue;
                    }
                    if best.map_or(true, |b| cand.better_than(&b)) {
                        *best = Some(cand);
                        *bound = cand.dist_sq;
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search_nearest(near, query, best, bound, filter);
                // `<=` keeps equal-distance points on the far side reachable for the tie-break.
                if diff * diff <= *bound {
                    self.search_nearest(far, query, best, bound, filter);
                }
            }
        }
    }

    /// Exact `k` nearest neighbors, closest first.
    pub fn nearest_k(&self, query: &[f64; D], k: usize) -> Vec<Neighbor> {
        let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search_k(0, query, k, &mut best);
        }
        best
    }

    fn search_k(&self, node: usize, query: &[f64; D], k: usize, best: &mut Vec<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = Neighbor {
                        index: i,
                        dist_sq: squared_distance(query, &self.points[i]),
                    };
                    if best.len() == k && !cand.better_than(&best[k - 1]) {
                        continue;
                    }
                    let pos = best.partition_point(|b| b.better_than(&cand));
                    best.insert(pos, cand);
                    best.truncate(k);
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search_k(near, query, k, best);
                if best.len() < k || diff * diff <= best[k - 1].dist_sq {
                    self.search_k(far, query, k, best);
                }
            }
        }
    }

    /// Approximate nearest neighbor: best-bin-first, visiting at most `max_leaves` leaves.
    pub fn nearest_approx(&self, query: &[f64; D], max_leaves: usize) -> Option<Neighbor> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Neighbor> = None;
        let mut heap = BinaryHeap::new();
        heap.push(Pending { bound: 0.0, node: 0 });
        let mut visited = 0;
        while let Some(Pending { bound, node }) = heap.pop() {
            if visited >= max_leaves.max(1) {
                break;
            }
            if best.is_some_and(|b| bound > b.dist_sq) {
                break;
            }
            let mut cur = node;
            let mut cur_bound = bound;
            loop {
                match self.nodes[cur] {
                    Node::Leaf { start, end } => {
                        visited += 1;
                        for &i in &self.order[start..end] {
                            let cand = Neighbor {
                                index: i,
                                dist_sq: squared_distance(query, &self.points[i]),
                            };
                            if best.map_or(true, |b| cand.better_than(&b)) {
                                best = Some(cand);
                            }
                        }
                        break;
                    }
                    Node::Split {
                        dim,
                        value,
                        left,
                        right,
                    } => {
                        let diff = query[dim] - value;
                        let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                        heap.push(Pending {
                            bound: cur_bound.max(diff * diff),
                            node: far,
                        });
                        cur = near;
                        cur_bound = cur_bound.max(0.0);
                    }
                }
            }
        }
        best
    }

    /// All points with squared distance `<= radius_sq`, sorted by index.
    pub fn within(&self, query: &[f64; D], radius_sq: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.search_within(0, query, radius_sq, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn search_within(&self, node: usize, query: &[f64; D], radius_sq: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if squared_distance(query, &self.points[i]) <= radius_sq {
                        out.push(i);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search_within(near, query, radius_sq, out);
                if diff * diff <= radius_sq {
                    self.search_within(far, query, radius_sq, out);
                }
            }
        }
    }
}
