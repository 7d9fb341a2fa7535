//! Pointy-top hexagonal tiling of the image plane, keypoint localization and
//! intrinsic-dimensionality classification per cell.

use super::{ExtractError, MopImage};

/// Offset ("odd-r") cell coordinates; odd rows are shifted right by half a cell.
/// Ordering is row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct CellId {
    pub row: i32,
    pub col: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexGrid {
    /// Corner-to-corner diameter in pixels.
    pub diameter: f64,
}

impl HexGrid {
    pub fn new(diameter: f64) -> Result<Self, ExtractError> {
        if !(diameter >= 3.0) || !diameter.is_finite() {
            return Err(ExtractError::InvalidConfig(format!(
                "hex cell diameter must be at least 3 px, got {diameter}"
            )));
        }
        Ok(Self { diameter })
    }

    pub fn cell_of(&self, u: f64, v: f64) -> CellId {
        let size = self.diameter / 2.0;
        let q = (3f64.sqrt() / 3.0 * u - v / 3.0) / size;
        let r = (2.0 / 3.0 * v) / size;
        let (q, r) = cube_round(q, r);
        CellId {
            row: r,
            col: q + (r - (r & 1)) / 2,
        }
    }

    /// Cell center in pixel coordinates.
    pub fn center(&self, cell: CellId) -> (f64, f64) {
        let size = self.diameter / 2.0;
        let u = 3f64.sqrt() * size * (cell.col as f64 + 0.5 * (cell.row & 1) as f64);
        let v = 1.5 * size * cell.row as f64;
        (u, v)
    }

    /// Every non-empty cell of a `width × height` image with its pixels,
    /// cells in row-major order and pixels in row-major order within a cell.
    pub fn partition(&self, width: usize, height: usize) -> Vec<(CellId, Vec<(usize, usize)>)> {
        let labels: Vec<CellId> = (0..height)
            .flat_map(|v| (0..width).map(move |u| (u, v)))
            .map(|(u, v)| self.cell_of(u as f64, v as f64))
            .collect();
        let (rmin, rmax) = min_max(labels.iter().map(|c| c.row));
        let (cmin, cmax) = min_max(labels.iter().map(|c| c.col));
        let ncols = (cmax - cmin + 1) as usize;
        let nrows = (rmax - rmin + 1) as usize;
        let mut buckets: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nrows * ncols];
        for (i, c) in labels.iter().enumerate() {
            let slot = (c.row - rmin) as usize * ncols + (c.col - cmin) as usize;
            buckets[slot].push((i % width, i / width));
        }
        buckets
            .into_iter()
            .enumerate()
            .filter(|(_, px)| !px.is_empty())
            .map(|(slot, px)| {
                let id = CellId {
                    row: rmin + (slot / ncols) as i32,
                    col: cmin + (slot % ncols) as i32,
                };
                (id, px)
            })
            .collect()
    }
}

fn min_max(it: impl Iterator<Item = i32>) -> (i32, i32) {
    it.fold((i32::MAX, i32::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn cube_round(q: f64, r: f64) -> (i32, i32) {
    let s = -q - r;
    let (mut rq, mut rr, rs) = (q.round(), r.round(), s.round());
    let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    (rq as i32, rr as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Keypoint {
    pub pixel: (usize, usize),
    pub cell: CellId,
}

/// Argmax-magnitude pixel of `pixels` (first in scan order on ties).
pub fn cell_argmax(mop: &MopImage, pixels: &[(usize, usize)]) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for &(u, v) in pixels {
        let m = mop.magnitude[mop.index(u, v)];
        if best.map_or(true, |(_, bm)| m > bm) {
            best = Some(((u, v), m));
        }
    }
    best.map(|(p, _)| p)
}

/// One keypoint per hexagonal cell: the maximum-magnitude pixel, kept only
/// when its magnitude exceeds `magnitude_threshold × max magnitude`.
pub fn extract_keypoints(
    mop: &MopImage,
    cell_diameter: f64,
    magnitude_threshold: f64,
) -> Result<Vec<Keypoint>, ExtractError> {
    let grid = HexGrid::new(cell_diameter)?;
    Ok(keypoints_in_cells(mop, &grid.partition(mop.width, mop.height), magnitude_threshold))
}

pub(crate) fn keypoints_in_cells(
    mop: &MopImage,
    cells: &[(CellId, Vec<(usize, usize)>)],
    magnitude_threshold: f64,
) -> Vec<Keypoint> {
    let max = mop.max_magnitude();
    if max <= 0.0 {
        return Vec::new();
    }
    let floor = magnitude_threshold * max;
    cells
        .iter()
        .filter_map(|(cell, px)| {
            let (u, v) = cell_argmax(mop, px)?;
            (mop.magnitude[mop.index(u, v)] > floor).then_some(Keypoint {
                pixel: (u, v),
                cell: *cell,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum CellClass {
    Homogeneous,
    Edge,
    Texture,
}

/// Intrinsic-dimensionality thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdThresholds {
    /// Mean-magnitude floor as a fraction of the image's maximum magnitude.
    pub tau_m: f64,
    /// Circular-variance ceiling (on doubled orientation) for edges.
    pub tau_o: f64,
}

impl Default for IdThresholds {
    fn default() -> Self {
        Self {
            tau_m: 0.1,
            tau_o: 0.3,
        }
    }
}

/// Magnitude-weighted circular variance of doubled orientations; `1.0` for no energy.
pub fn orientation_variance(mop: &MopImage, pixels: &[(usize, usize)]) -> f64 {
    let (mut c, mut s, mut w) = (0.0, 0.0, 0.0);
    for &(u, v) in pixels {
        let i = mop.index(u, v);
        let m = mop.magnitude[i];
        let a = 2.0 * mop.orientation[i];
        c += m * a.cos();
        s += m * a.sin();
        w += m;
    }
    if w <= 0.0 {
        return 1.0;
    }
    (1.0 - (c * c + s * s).sqrt() / w).max(0.0)
}

pub fn classify_cell(
    mop: &MopImage,
    cell_pixels: &[(usize, usize)],
    thresholds: &IdThresholds,
) -> Result<CellClass, ExtractError> {
    if cell_pixels.is_empty() {
        return Err(ExtractError::EmptyInput);
    }
    let mean = cell_pixels
        .iter()
        .map(|&(u, v)| mop.magnitude[mop.index(u, v)])
        .sum::<f64>()
        / cell_pixels.len() as f64;
    if mean <= 0.0 || mean < thresholds.tau_m * mop.max_magnitude() {
        return Ok(CellClass::Homogeneous);
    }
    if orientation_variance(mop, cell_pixels) < thresholds.tau_o {
        Ok(CellClass::Edge)
    } else {
        Ok(CellClass::Texture)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(w: usize, h: usize, mag: impl Fn(usize, usize) -> f64) -> MopImage {
        let m = (0..w * h).map(|i| mag(i % w, i / w)).collect();
        MopImage::from_fields(w, h, m, vec![0.0; w * h])
    }

    #[test]
    fn partition_covers_every_pixel_once() {
        let grid = HexGrid::new(7.0).unwrap();
        let cells = grid.partition(40, 30);
        let total: usize = cells.iter().map(|(_, p)| p.len()).sum();
        assert_eq!(total, 1200);
        let mut ids: Vec<_> = cells.iter().map(|(c, _)| *c).collect();
        let sorted = {
            let mut s = ids.clone();
            s.sort();
            s
        };
        assert_eq!(ids, sorted);
        ids.dedup();
        assert_eq!(ids.len(), cells.len());
        // Pixels land in the cell whose center is nearest.
        for (id, px) in &cells {
            for &(u, v) in px {
                let (cu, cv) = grid.center(*id);
                let d = ((u as f64 - cu).powi(2) + (v as f64 - cv).powi(2)).sqrt();
                assert!(d <= 3.5 + 1e-9, "pixel {u},{v} is {d} from its cell center");
            }
        }
    }

    #[test]
    fn interior_cells_have_hexagon_area() {
        let grid = HexGrid::new(11.0).unwrap();
        let cells = grid.partition(200, 200);
        let expected = 3.0 * 3f64.sqrt() / 2.0 * 5.5 * 5.5;
        let (c, px) = cells.iter().find(|(c, _)| c.row == 10 && c.col == 10).unwrap();
        assert_eq!(c.row, 10);
        assert!((px.len() as f64 - expected).abs() < 8.0, "{} vs {expected}", px.len());
    }

    #[test]
    fn rejects_small_cells() {
        assert!(HexGrid::new(2.0).is_err());
        assert!(extract_keypoints(&field(4, 4, |_, _| 1.0), 2.5, 0.1).is_err());
    }

    #[test]
    fn zero_magnitude_gives_no_keypoints() {
        let mop = field(30, 30, |_, _| 0.0);
        assert!(extract_keypoints(&mop, 7.0, 0.1).unwrap().is_empty());
    }

    #[test]
    fn single_bright_pixel_is_the_keypoint() {
        let mop = field(30, 30, |u, v| if (u, v) == (12, 14) { 1.0 } else { 0.0 });
        let kps = extract_keypoints(&mop, 7.0, 0.1).unwrap();
        assert_eq!(kps.len(), 1);
        assert_eq!(kps[0].pixel, (12, 14));
        assert_eq!(kps[0].cell, HexGrid::new(7.0).unwrap().cell_of(12.0, 14.0));
    }

    #[test]
    fn brighter_of_two_pixels_in_a_cell_wins() {
        let grid = HexGrid::new(9.0).unwrap();
        let cells = grid.partition(40, 40);
        let (cell, px) = cells.iter().find(|(_, p)| p.len() > 40).unwrap();
        let (a, b) = (px[3], px[px.len() - 4]);
        let mop = field(40, 40, |u, v| {
            if (u, v) == a {
                0.6
            } else if (u, v) == b {
                0.9
            } else {
                0.0
            }
        });
        // Exhaustive oracle over the cell's pixels.
        let oracle = *px
            .iter()
            .max_by(|x, y| {
                mop.magnitude[mop.index(x.0, x.1)]
                    .partial_cmp(&mop.magnitude[mop.index(y.0, y.1)])
                    .unwrap()
            })
            .unwrap();
        let kps = extract_keypoints(&mop, 9.0, 0.1).unwrap();
        assert_eq!(kps.len(), 1);
        assert_eq!(kps[0].pixel, oracle);
        assert_eq!(kps[0].pixel, b);
        assert_eq!(kps[0].cell, *cell);
    }

    #[test]
    fn classification() {
        let px: Vec<(usize, usize)> = (0..7).flat_map(|v| (0..7).map(move |u| (u, v))).collect();
        let flat = MopImage::from_fields(7, 7, vec![0.0; 49], vec![0.0; 49]);
        let t = IdThresholds::default();
        assert_eq!(classify_cell(&flat, &px, &t).unwrap(), CellClass::Homogeneous);
        assert!(matches!(classify_cell(&flat, &[], &t), Err(ExtractError::EmptyInput)));

        // Analytic edge field: uniform orientation, strong magnitude.
        let edge = MopImage::from_fields(7, 7, vec![1.0; 49], vec![0.3; 49]);
        assert_eq!(classify_cell(&edge, &px, &t).unwrap(), CellClass::Edge);

        // Uniformly random orientations: circular variance close to 1.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let orient = (0..49).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();
        let mags = (0..49).map(|_| rng.random_range(0.5..1.0)).collect();
        let noise = MopImage::from_fields(7, 7, mags, orient);
        assert!(orientation_variance(&noise, &px) > 0.7);
        assert_eq!(classify_cell(&noise, &px, &t).unwrap(), CellClass::Texture);
    }

    #[test]
    fn orientation_just_below_pi_counts_as_aligned_with_zero() {
        let px: Vec<(usize, usize)> = (0..4).map(|u| (u, 0)).collect();
        let orient = vec![0.01, std::f64::consts::PI - 0.01, 0.0, 0.005];
        let mop = MopImage::from_fields(4, 1, vec![1.0; 4], orient);
        assert!(orientation_variance(&mop, &px) < 1e-3);
    }
}
