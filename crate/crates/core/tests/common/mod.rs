#![allow(dead_code)]

use std::f64::consts::PI;

use ecv_pose::descriptor::{DescriptorConfig, DESCRIPTOR_DIM};
use ecv_pose::ecv::{MonogenicConfig, Primitive, PrimitiveKind};
use ecv_pose::geometry::{Point3, RigidTransform};
use nalgebra::Vector3;
use rand::Rng;

pub fn unit_vector<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_pose<R: Rng>(rng: &mut R, max_angle: f64, max_translation: f64) -> RigidTransform {
    let axis = unit_vector(rng);
    let angle = rng.random_range(0.0..=max_angle);
    let t = unit_vector(rng) * rng.random_range(0.0..=max_translation);
    RigidTransform::from_axis_angle(axis, angle, t)
}

/// `n` primitives scattered in a cube of side `extent` meters.
pub fn random_primitives<R: Rng>(rng: &mut R, n: usize, extent: f64) -> Vec<Primitive> {
    (0..n)
        .map(|_| Primitive {
            position: Point3::new(
                rng.random_range(0.0..extent),
                rng.random_range(0.0..extent),
                rng.random_range(0.0..extent) + 0.5,
            ),
            orientation: unit_vector(rng),
            kind: if rng.random_bool(0.3) {
                PrimitiveKind::Segment
            } else {
                PrimitiveKind::Texlet
            },
            color: [rng.random(), rng.random(), rng.random()],
            pixel: (rng.random_range(0..640), rng.random_range(0..480)),
        })
        .collect()
}

pub fn transform_primitives(t: &RigidTransform, prims: &[Primitive]) -> Vec<Primitive> {
    prims
        .iter()
        .map(|p| Primitive {
            position: t.apply(&p.position),
            orientation: t.apply_vector(&p.orientation),
            ..*p
        })
        .collect()
}

fn bin16(v: f64) -> usize {
    let b = ((v.clamp(-1.0, 1.0) + 1.0) * 8.0).floor() as usize;
    b.min(15)
}

/// Full-scan descriptor: every source against every primitive, every pair in
/// the neighborhood visited by a plain double loop. `None` for skipped sources.
pub fn brute_force_descriptors(prims: &[Primitive], cfg: &DescriptorConfig) -> Vec<Option<[f64; DESCRIPTOR_DIM]>> {
    let r2 = cfg.radius * cfg.radius;
    prims
        .iter()
        .map(|src| {
            let nbh: Vec<usize> = (0..prims.len())
                .filter(|&j| cfg.mixed_kinds || prims[j].kind == src.kind)
                .filter(|&j| (prims[j].position - src.position).norm_squared() <= r2)
                .collect();
            if nbh.len() < cfg.min_neighbors {
                return None;
            }
            let mut counts = [0u32; DESCRIPTOR_DIM];
            let mut pairs = 0u32;
            for a in 0..nbh.len() {
                for b in a + 1..nbh.len() {
                    let (i, j) = (nbh[a], nbh[b]);
                    let di = (prims[i].position - src.position).norm_squared();
                    let dj = (prims[j].position - src.position).norm_squared();
                    let (p, q) = if di < dj || (di == dj && i < j) {
                        (&prims[i], &prims[j])
                    } else {
                        (&prims[j], &prims[i])
                    };
                    let base = q.position - p.position;
                    if base.norm() < 1e-9 {
                        continue;
                    }
                    let d = base / base.norm();
                    let rel = [
                        p.orientation.dot(&q.orientation),
                        p.orientation.dot(&d),
                        q.orientation.dot(&d),
                        q.color[0] - p.color[0],
                        q.color[1] - p.color[1],
                        q.color[2] - p.color[2],
                    ];
                    for (k, v) in rel.iter().enumerate() {
                        counts[k * 16 + bin16(*v)] += 1;
                    }
                    pairs += 1;
                }
            }
            if pairs == 0 {
                return None;
            }
            let scale = if cfg.normalize { 1.0 / pairs as f64 } else { 1.0 };
            let mut out = [0.0; DESCRIPTOR_DIM];
            for (o, c) in out.iter_mut().zip(counts) {
                *o = c as f64 * scale;
            }
            Some(out)
        })
        .collect()
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Even and odd responses by direct circular convolution of the mirror-padded
/// image with spatial kernels sampled from the filter's transfer functions.
pub fn convolution_oracle(gray: &[f64], w: usize, h: usize, cfg: &MonogenicConfig, pad: usize) -> [Vec<f64>; 3] {
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let freq = |k: usize, n: usize| -> Option<f64> {
        if n % 2 == 0 && k == n / 2 {
            None
        } else if k <= n / 2 {
            Some(k as f64 / n as f64)
        } else {
            Some((k as f64 - n as f64) / n as f64)
        }
    };
    let transfer = |fu: f64, fv: f64| -> (f64, f64, f64) {
        let rho = (fu * fu + fv * fv).sqrt();
        if rho == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let sigma = cfg.bandwidth * (std::f64::consts::LN_2 / 2.0).sqrt() / 2.0;
        let l = (rho * cfg.center_wavelength).ln();
        let g = (-(l * l) / (2.0 * sigma * sigma)).exp();
        (g, -fu / rho * g, -fv / rho * g)
    };

    // Spatial kernels: real parts of the inverse DFT of G, iH1, iH2.
    let mut kernels = [vec![0.0; pw * ph], vec![0.0; pw * ph], vec![0.0; pw * ph]];
    for ky in 0..ph {
        let Some(fv) = freq(ky, ph) else { continue };
        for kx in 0..pw {
            let Some(fu) = freq(kx, pw) else { continue };
            let (g, h1, h2) = transfer(fu, fv);
            if g == 0.0 {
                continue;
            }
            for y in 0..ph {
                for x in 0..pw {
                    let a = 2.0 * PI * ((kx * x) as f64 / pw as f64 + (ky * y) as f64 / ph as f64);
                    let (s, c) = a.sin_cos();
                    let i = y * pw + x;
                    kernels[0][i] += g * c;
                    kernels[1][i] -= h1 * s;
                    kernels[2][i] -= h2 * s;
                }
            }
        }
    }
    let norm = 1.0 / (pw * ph) as f64;
    for k in kernels.iter_mut() {
        k.iter_mut().for_each(|v| *v *= norm);
    }

    let padded: Vec<f64> = (0..ph)
        .flat_map(|y| {
            (0..pw).map(move |x| (mirror(x as isize - pad as isize, w), mirror(y as isize - pad as isize, h)))
        })
        .map(|(sx, sy)| gray[sy * w + sx])
        .collect();
    let mut out = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for oy in 0..h {
        for ox in 0..w {
            let (cx, cy) = (ox + pad, oy + pad);
            let mut acc = [0.0; 3];
            for y in 0..ph {
                let dy = (cy + ph - y) % ph;
                for x in 0..pw {
                    let dx = (cx + pw - x) % pw;
                    let v = padded[y * pw + x];
                    let k = dy * pw + dx;
                    acc[0] += v * kernels[0][k];
                    acc[1] += v * kernels[1][k];
                    acc[2] += v * kernels[2][k];
                }
            }
            for c in 0..3 {
                out[c][oy * w + ox] = acc[c];
            }
        }
    }
    out
}

/// Image rotated a quarter turn clockwise; pixel `(u, v)` moves to `(h - 1 - v, u)`.
pub fn rotate90<T: Copy>(img: &[T], w: usize, h: usize) -> Vec<T> {
    let (nw, nh) = (h, w);
    let mut out = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        for x in 0..nw {
            out.push(img[(h - 1 - x) * w + y]);
        }
    }
    out
}

/// Distance between two orientations modulo π.
pub fn axial_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}
