//! Synthetic weld-like test instances: a smooth random blob, a noisy image
//! of it with a soft edge, its ground-truth mask, and a degraded
//! probability map standing in for a segmentation network's output.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FloatRaster};

pub const MIN_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    /// Blur applied to the ground truth to make the probability map.
    pub blur_sigma: f64,
    /// Per-pixel Gaussian noise added to the probability map.
    pub prob_noise: f64,
    /// Peak of the probability map; below 1 the map is under-confident and
    /// its 0.5 level falls inside the true edge.
    pub confidence: f64,
    /// Per-pixel Gaussian noise added to the image.
    pub image_noise: f64,
    /// Width (pixels) of the logistic edge in the image.
    pub edge_softness: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            blur_sigma: 4.0,
            prob_noise: 0.02,
            confidence: 0.9,
            image_noise: 0.02,
            edge_softness: 0.5,
        }
    }
}

impl SynthParams {
    pub fn square(size: usize) -> Self {
        Self {
            width: size,
            height: size,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_SIZE || self.height < MIN_SIZE {
            return Err(Error::InvalidParams(format!(
                "synthetic instances must be at least {MIN_SIZE}x{MIN_SIZE}, got {}x{}",
                self.width, self.height
            )));
        }
        for (name, v) in [
            ("blur_sigma", self.blur_sigma),
            ("prob_noise", self.prob_noise),
            ("image_noise", self.image_noise),
            ("edge_softness", self.edge_softness),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "confidence must lie in (0, 1], got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub image: FloatRaster,
    pub gt: BinaryMask,
    pub prob: FloatRaster,
}

/// Star-shaped blob with a few low harmonics on its radius, stretched along a random axis.
struct Blob {
    cx: f64,
    cy: f64,
    radius: f64,
    cos_t: f64,
    sin_t: f64,
    stretch: f64,
    harmonics: Vec<(f64, f64, f64)>,
}

impl Blob {
    fn random(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Self {
        let side = w.min(h) as f64;
        let theta: f64 = rng.random_range(0.0..TAU);
        let harmonics = (2..=5)
            .map(|k| {
                let k = k as f64;
                (
                    k,
                    rng.random_range(0.0..0.18 / k),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        Self {
            cx: w as f64 / 2.0 + rng.random_range(-0.1..0.1) * side,
            cy: h as f64 / 2.0 + rng.random_range(-0.1..0.1) * side,
            radius: rng.random_range(0.18..0.3) * side,
            cos_t: theta.cos(),
            sin_t: theta.sin(),
            stretch: rng.random_range(1.0..1.6),
            harmonics,
        }
    }

    /// Approximate signed distance in pixels, positive inside.
    fn signed_distance(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (self.cos_t * dx + self.sin_t * dy) / self.stretch;
        let v = -self.sin_t * dx + self.cos_t * dy;
        let rho = u.hypot(v);
        let phi = v.atan2(u);
        let r = self.radius
            * (1.0
                + self
                    .harmonics
                    .iter()
                    .map(|&(k, a, p)| a * (k * phi + p).cos())
                    .sum::<f64>());
        r - rho
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    for v in &mut k {
        *v /= s;
    }
    k
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(src: &FloatRaster, sigma: f64) -> FloatRaster {
    let (w, h) = src.dims();
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * src.get(clamp(x as isize + i as isize - r, w), y))
                .sum();
        }
    }
    FloatRaster::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, kv)| kv * tmp[clamp(y as isize + i as isize - r, h) * w + x])
            .sum::<f64>()
    })
    .expect("finite blur")
}

/// Instance `index` of the sequence generated by `seed`.
pub fn synth_instance(seed: u64, index: u64, params: &SynthParams) -> Result<SynthInstance> {
    params.validate()?;
    let (w, h) = (params.width, params.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    let blob = Blob::random(&mut rng, w, h);
    let background: f64 = rng.random_range(0.15..0.35);
    let foreground: f64 = rng.random_range(0.6..0.85);

    let sd: Vec<f64> = (0..w * h)
        .map(|i| blob.signed_distance((i % w) as f64, (i / w) as f64))
        .collect();
    let gt = BinaryMask::new(w, h, sd.iter().map(|&d| d > 0.0).collect())?;

    let image = sd
        .iter()
        .map(|&d| {
            let edge = if params.edge_softness > 0.0 {
                1.0 / (1.0 + (-d / params.edge_softness).exp())
            } else {
                (d > 0.0) as u8 as f64
            };
            let n: f64 = StandardNormal.sample(&mut rng);
            (background + (foreground - background) * edge + params.image_noise * n).clamp(0.0, 1.0)
        })
        .collect();
    let image = FloatRaster::gray(w, h, image)?;

    let blurred = gaussian_blur(&gt.to_float(), params.blur_sigma);
    let prob = blurred
        .data()
        .iter()
        .map(|&p| {
            let n: f64 = StandardNormal.sample(&mut rng);
            (params.confidence * p + params.prob_noise * n).clamp(0.0, 1.0)
        })
        .collect();
    let prob = FloatRaster::gray(w, h, prob)?;
    Ok(SynthInstance { image, gt, prob })
}
