//! Monogenic signal: a log-Gabor bandpass (even part) and its Riesz
//! transform (two odd parts), evaluated in the frequency domain.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ExtractError, RgbdFrame};

/// Per-pixel local magnitude, orientation and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct MopImage {
    pub width: usize,
    pub height: usize,
    /// `√(f_b² + r₁² + r₂²)`, non-negative.
    pub magnitude: Vec<f64>,
    /// Radians in `[0, π)`.
    pub orientation: Vec<f64>,
    /// Radians in `[0, π]`.
    pub phase: Vec<f64>,
    /// Signed odd responses, kept for edge polarity.
    pub odd: Vec<[f64; 2]>,
    max_magnitude: f64,
}

impl MopImage {
    pub fn from_response(resp: &MonogenicResponse) -> Self {
        let n = resp.width * resp.height;
        let mut magnitude = Vec::with_capacity(n);
        let mut orientation = Vec::with_capacity(n);
        let mut phase = Vec::with_capacity(n);
        let mut odd = Vec::with_capacity(n);
        for i in 0..n {
            let (fb, r1, r2) = (resp.even[i], resp.odd1[i], resp.odd2[i]);
            let odd_norm = (r1 * r1 + r2 * r2).sqrt();
            magnitude.push((fb * fb + odd_norm * odd_norm).sqrt());
            orientation.push(reduce_mod_pi(r2.atan2(r1)));
            phase.push(odd_norm.atan2(fb));
            odd.push([r1, r2]);
        }
        let max_magnitude = magnitude.iter().cloned().fold(0.0, f64::max);
        Self {
            width: resp.width,
            height: resp.height,
            magnitude,
            orientation,
            phase,
            odd,
            max_magnitude,
        }
    }

    /// Builds a MOP image directly from a magnitude/orientation field (odd part
    /// synthesized from orientation); phase is set to π/2.
    pub fn from_fields(width: usize, height: usize, magnitude: Vec<f64>, orientation: Vec<f64>) -> Self {
        assert_eq!(magnitude.len(), width * height);
        assert_eq!(orientation.len(), width * height);
        let odd = magnitude
            .iter()
            .zip(&orientation)
            .map(|(m, o)| [m * o.cos(), m * o.sin()])
            .collect();
        let max_magnitude = magnitude.iter().cloned().fold(0.0, f64::max);
        Self {
            width,
            height,
            phase: vec![PI / 2.0; width * height],
            magnitude,
            orientation: orientation.into_iter().map(reduce_mod_pi).collect(),
            odd,
            max_magnitude,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.max_magnitude
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }
}

/// Raw even and odd filter responses on the unpadded image grid.
#[derive(Debug, Clone)]
pub struct MonogenicResponse {
    pub width: usize,
    pub height: usize,
    pub even: Vec<f64>,
    pub odd1: Vec<f64>,
    pub odd2: Vec<f64>,
}

/// Filter parameters. `padding = None` pads by twice the center wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonogenicConfig {
    pub center_wavelength: f64,
    pub bandwidth: f64,
    pub padding: Option<usize>,
}

impl Default for MonogenicConfig {
    fn default() -> Self {
        Self {
            center_wavelength: 8.0,
            bandwidth: 2.0,
            padding: None,
        }
    }
}

impl MonogenicConfig {
    pub fn validate(&self) -> Result<(), ExtractError> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(ExtractError::InvalidFilter(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if !(self.center_wavelength >= 2.0) || !self.center_wavelength.is_finite() {
            return Err(ExtractError::InvalidFilter(format!(
                "center wavelength must be at least 2 px, got {}",
                self.center_wavelength
            )));
        }
        Ok(())
    }

    fn pad(&self) -> usize {
        self.padding
            .unwrap_or((2.0 * self.center_wavelength).ceil() as usize)
    }
}

fn reduce_mod_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(PI);
    if r >= PI {
        r -= PI;
    }
    r
}

/// Signed frequency (cycles/pixel) of DFT bin `k` on an `n`-point grid;
/// `None` at the Nyquist bin of even grids, where the odd filters have no
/// well-defined sign.
pub fn bin_frequency(k: usize, n: usize) -> Option<f64> {
    if n % 2 == 0 && k == n / 2 {
        return None;
    }
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    Some(signed / n as f64)
}

/// Frequency response `(G, H₁, H₂)` at `(fu, fv)`: the real log-Gabor gain and
/// the imaginary parts of the two Riesz-transformed gains (`-i·fᵤ/|f|·G`, `-i·fᵥ/|f|·G`).
pub fn transfer(fu: f64, fv: f64, cfg: &MonogenicConfig) -> (f64, f64, f64) {
    let rho = (fu * fu + fv * fv).sqrt();
    if rho == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f0 = 1.0 / cfg.center_wavelength;
    let log_sigma = cfg.bandwidth * (std::f64::consts::LN_2 / 2.0).sqrt() / 2.0;
    let l = (rho / f0).ln();
    let g = (-(l * l) / (2.0 * log_sigma * log_sigma)).exp();
    (g, -fu / rho * g, -fv / rho * g)
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

fn fft2(data: &mut [Complex64], w: usize, h: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
}

/// Even and odd responses of a grayscale image (row-major, `width × height`),
/// with symmetric border padding.
pub fn filter_gray(
    gray: &[f64],
    width: usize,
    height: usize,
    cfg: &MonogenicConfig,
) -> Result<MonogenicResponse, ExtractError> {
    cfg.validate()?;
    if width == 0 || height == 0 || gray.len() != width * height {
        return Err(ExtractError::InvalidFrame("empty or mis-sized image".into()));
    }
    let pad = cfg.pad();
    let (pw, ph) = (width + 2 * pad, height + 2 * pad);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); pw * ph];
    for y in 0..ph {
        let sy = reflect(y as isize - pad as isize, height);
        for x in 0..pw {
            let sx = reflect(x as isize - pad as isize, width);
            spectrum[y * pw + x] = Complex64::new(gray[sy * width + sx], 0.0);
        }
    }
    let mut planner = FftPlanner::new();
    fft2(&mut spectrum, pw, ph, false, &mut planner);

    let mut even = vec![Complex64::new(0.0, 0.0); pw * ph];
    let mut odd1 = even.clone();
    let mut odd2 = even.clone();
    for ky in 0..ph {
        let Some(fv) = bin_frequency(ky, ph) else { continue };
        for kx in 0..pw {
            let Some(fu) = bin_frequency(kx, pw) else { continue };
            let (g, h1, h2) = transfer(fu, fv, cfg);
            let s = spectrum[ky * pw + kx];
            let i = ky * pw + kx;
            even[i] = s * g;
            // Multiplication by a purely imaginary gain i·h.
            odd1[i] = Complex64::new(-s.im * h1, s.re * h1);
            odd2[i] = Complex64::new(-s.im * h2, s.re * h2);
        }
    }
    for buf in [&mut even, &mut odd1, &mut odd2] {
        fft2(buf, pw, ph, true, &mut planner);
    }
    let norm = 1.0 / (pw * ph) as f64;
    let crop = |buf: &[Complex64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            let row = (y + pad) * pw + pad;
            out.extend(buf[row..row + width].iter().map(|c| c.re * norm));
        }
        out
    };
    Ok(MonogenicResponse {
        width,
        height,
        even: crop(&even),
        odd1: crop(&odd1),
        odd2: crop(&odd2),
    })
}

/// Monogenic filtering of a frame's luminance.
pub fn monogenic_filter(
    frame: &RgbdFrame,
    center_wavelength: f64,
    bandwidth: f64,
) -> Result<MopImage, ExtractError> {
    let cfg = MonogenicConfig {
        center_wavelength,
        bandwidth,
        padding: None,
    };
    let resp = filter_gray(&frame.luminance(), frame.width(), frame.height(), &cfg)?;
    Ok(MopImage::from_response(&resp))
}
