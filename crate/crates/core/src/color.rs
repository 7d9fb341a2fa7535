//! Linear color-space calibration between two capture conditions.

use nalgebra::{DMatrix, Matrix3, Vector3};
use thiserror::Error;

use crate::ecv::Primitive;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColorError {
    #[error("need at least {need} color pairs, got {have}")]
    TooFewPairs { have: usize, need: usize },
    #[error("source colors are rank deficient (singular value ratio {0:.3e})")]
    RankDeficient(f64),
    #[error("non-finite color value")]
    NonFinite,
}

/// `c_target ≈ a · c_source + offset`; `offset` is zero unless estimated with one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMatrix {
    pub a: Matrix3<f64>,
    pub offset: Vector3<f64>,
}

impl ColorMatrix {
    pub fn identity() -> Self {
        Self::linear(Matrix3::identity())
    }

    pub fn linear(a: Matrix3<f64>) -> Self {
        Self {
            a,
            offset: Vector3::zeros(),
        }
    }

    pub fn map(&self, c: &[f64; 3]) -> [f64; 3] {
        let v = self.a * Vector3::from(*c) + self.offset;
        [v.x, v.y, v.z]
    }

    /// `map` followed by clamping every channel to `[0, 1]`.
    pub fn apply(&self, c: &[f64; 3]) -> [f64; 3] {
        self.map(c).map(|x| x.clamp(0.0, 1.0))
    }

    pub fn condition_number(&self) -> f64 {
        let s = self.a.singular_values();
        let (max, min) = (s.max(), s.min());
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorCalibration {
    pub matrix: ColorMatrix,
    /// Root-mean-square residual per channel value.
    pub residual_rms: f64,
    pub condition_number: f64,
}

/// Sum of squared residuals of `m` over the pairs.
pub fn color_residual(m: &ColorMatrix, pairs: &[([f64; 3], [f64; 3])]) -> f64 {
    pairs
        .iter()
        .map(|(s, t)| {
            let p = m.map(s);
            (0..3).map(|k| (p[k] - t[k]).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Least-squares estimate of the mapping from source to target colors.
pub fn estimate_color_matrix(
    pairs: &[([f64; 3], [f64; 3])],
    with_offset: bool,
) -> Result<ColorCalibration, ColorError> {
    let cols = if with_offset { 4 } else { 3 };
    if pairs.len() < cols {
        return Err(ColorError::TooFewPairs {
            have: pairs.len(),
            need: cols,
        });
    }
    if pairs
        .iter()
        .any(|(s, t)| s.iter().chain(t.iter()).any(|v| !v.is_finite()))
    {
        return Err(ColorError::NonFinite);
    }
    let n = pairs.len();
    let x = DMatrix::from_fn(n, cols, |i, j| if j < 3 { pairs[i].0[j] } else { 1.0 });
    let y = DMatrix::from_fn(n, 3, |i, j| pairs[i].1[j]);

    // Rank of the linear part decides identifiability.
    let linear = x.columns(0, 3).into_owned();
    let sv = linear.clone().singular_values();
    let ratio = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    let full = x.clone().singular_values();
    let full_ratio = if full.max() > 0.0 { full.min() / full.max() } else { 0.0 };
    if ratio < RANK_TOL || full_ratio < RANK_TOL {
        return Err(ColorError::RankDeficient(ratio.min(full_ratio)));
    }

    let svd = x.svd(true, true);
    let solution = svd
        .solve(&y, RANK_TOL * full.max())
        .map_err(|_| ColorError::RankDeficient(full_ratio))?;
    // solution is cols × 3; rows are coefficients of each source channel.
    let a = Matrix3::from_fn(|r, c| solution[(c, r)]);
    let offset = if with_offset {
        Vector3::new(solution[(3, 0)], solution[(3, 1)], solution[(3, 2)])
    } else {
        Vector3::zeros()
    };
    let matrix = ColorMatrix { a, offset };
    let residual_rms = (color_residual(&matrix, pairs) / (3 * n) as f64).sqrt();
    Ok(ColorCalibration {
        matrix,
        residual_rms,
        condition_number: matrix.condition_number(),
    })
}

pub fn apply_color_matrix(m: &ColorMatrix, primitives: &[Primitive]) -> Vec<Primitive> {
    primitives
        .iter()
        .map(|p| Primitive {
            color: m.apply(&p.color),
            ..*p
        })
        .collect()
}
