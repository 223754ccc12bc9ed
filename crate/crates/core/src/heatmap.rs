//! Gaussian boundary-heatmap targets derived from a segmentation mask.
//!
//! The mask boundary is extracted with the 8-neighbour Laplacian kernel
//! (all ones, centre -8), an exact Euclidean distance to that boundary
//! is computed, and distances are mapped through a truncated Gaussian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FloatRaster};

pub const DEFAULT_SIGMA: f64 = 3.0;
pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapParams {
    /// Gaussian width in pixels; the response is cut to zero at `3 * sigma`.
    pub sigma: f64,
    /// Laplacian responses strictly above this mark a boundary pixel.
    pub edge_threshold: f64,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }
}

impl HeatmapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.edge_threshold > 0.0 && self.edge_threshold.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "edge threshold must be > 0, got {}",
                self.edge_threshold
            )));
        }
        Ok(())
    }
}

/// Raw Laplacian response with clamp-to-edge padding.
pub fn laplacian_response(mask: &BinaryMask) -> FloatRaster {
    let (w, h) = mask.dims();
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        if mask.get(xc, yc) {
            1.0
        } else {
            0.0
        }
    };
    FloatRaster::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut r = -8.0 * at(x, y);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx != 0 || dy != 0 {
                    r += at(x + dx, y + dy);
                }
            }
        }
        r
    })
    .expect("finite response")
}

/// Pixels whose Laplacian response exceeds `edge_threshold`.
///
/// The kernel is symmetric, so convolution and correlation coincide.
/// Only background pixels touching the foreground can respond positively.
pub fn laplacian_boundary(mask: &BinaryMask, edge_threshold: f64) -> BinaryMask {
    let r = laplacian_response(mask);
    BinaryMask::new(
        mask.width(),
        mask.height(),
        r.data().iter().map(|&v| v > edge_threshold).collect(),
    )
    .expect("same shape")
}

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas). Entries of `f` that are `None` carry no parabola.
fn distance_1d(f: &[Option<f64>], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    let n = f.len();
    for q in 0..n {
        let Some(fq) = f[q] else { continue };
        let qf = q as f64;
        loop {
            let Some(&last) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let lf = last as f64;
            let fl = f[last].unwrap();
            let s = ((fq + qf * qf) - (fl + lf * lf)) / (2.0 * qf - 2.0 * lf);
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    debug_assert!(!v.is_empty());
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *slot = d * d + f[v[k]].unwrap();
    }
}

/// Squared Euclidean distance from every pixel to the nearest `true` pixel.
///
/// All intermediate values are small integers held exactly in `f64`, so the
/// result is exact.
pub fn squared_distance_transform(boundary: &BinaryMask) -> Result<Vec<f64>> {
    let (w, h) = boundary.dims();
    if boundary.count_ones() == 0 {
        return Err(Error::EmptyBoundary);
    }

    // Column pass: vertical distance to the nearest boundary pixel in the same column.
    let mut col: Vec<Option<f64>> = vec![None; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if boundary.get(x, y) {
                last = Some(y);
            }
            col[y * w + x] = last.map(|l| (y - l) as f64);
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if boundary.get(x, y) {
                next = Some(y);
            }
            if let Some(n) = next {
                let d = (n - y) as f64;
                let slot = &mut col[y * w + x];
                *slot = Some(slot.map_or(d, |c| c.min(d)));
            }
        }
    }
    for c in col.iter_mut() {
        *c = c.map(|d| d * d);
    }

    // Row pass: lower envelope over the column results.
    let mut out = vec![0.0; w * h];
    let (mut v, mut z) = (Vec::with_capacity(w), Vec::with_capacity(w + 1));
    for y in 0..h {
        let row = &col[y * w..(y + 1) * w];
        distance_1d(row, &mut out[y * w..(y + 1) * w], &mut v, &mut z);
    }
    Ok(out)
}

/// Exact Euclidean distance to the nearest boundary pixel.
pub fn distance_transform(boundary: &BinaryMask) -> Result<FloatRaster> {
    let d2 = squared_distance_transform(boundary)?;
    FloatRaster::gray(
        boundary.width(),
        boundary.height(),
        d2.into_iter().map(f64::sqrt).collect(),
    )
}

/// Truncated Gaussian of a distance map: `exp(-d^2 / (2 sigma^2))` where
/// `d < 3 sigma`, zero elsewhere.
pub fn gaussian_heatmap(distance: &FloatRaster, sigma: f64) -> FloatRaster {
    let cutoff = 3.0 * sigma;
    let two_var = 2.0 * sigma * sigma;
    distance.map(|d| {
        if d < cutoff {
            (-(d * d) / two_var).exp()
        } else {
            0.0
        }
    })
}

/// Full ground-truth heatmap for a mask. A mask with no boundary (empty or
/// full) yields an all-zero heatmap.
pub fn make_heatmap_gt(mask: &BinaryMask, params: &HeatmapParams) -> Result<FloatRaster> {
    params.validate()?;
    let boundary = laplacian_boundary(mask, params.edge_threshold);
    match distance_transform(&boundary) {
        Ok(d) => Ok(gaussian_heatmap(&d, params.sigma)),
        Err(Error::EmptyBoundary) => Ok(FloatRaster::filled(mask.width(), mask.height(), 0.0)),
        Err(e) => Err(e),
    }
}
