//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weldmat_core::{BinaryMask, FloatRaster, Trimap, TrimapLabel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matting Laplacian summed window by window into a dense matrix.
pub fn dense_laplacian(gray: &FloatRaster, eps: f64) -> DMatrix<f64> {
    let (w, h) = gray.dims();
    let n = w * h;
    let mut l = DMatrix::zeros(n, n);
    for cy in 1..h - 1 {
        for cx in 1..w - 1 {
            let idx: Vec<usize> = (0..9)
                .map(|k| (cy + k / 3 - 1) * w + cx + k % 3 - 1)
                .collect();
            let vals: Vec<f64> = idx.iter().map(|&i| gray.data()[i]).collect();
            let mu = vals.iter().sum::<f64>() / 9.0;
            let var = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 9.0;
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    let d = if i == j { 1.0 } else { 0.0 };
                    l[(i, j)] +=
                        d - (1.0 + (vals[a] - mu) * (vals[b] - mu) / (eps / 9.0 + var)) / 9.0;
                }
            }
        }
    }
    l
}

/// Constrained minimiser of `αᵀLα` by a dense LU solve of the unknown block.
pub fn dense_alpha(l: &DMatrix<f64>, trimap: &Trimap) -> Vec<f64> {
    let labels = trimap.labels();
    let unknown: Vec<usize> = (0..labels.len())
        .filter(|&i| !labels[i].is_known())
        .collect();
    let known: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i].is_known())
        .collect();
    let mut alpha: Vec<f64> = labels.iter().map(|l| l.value()).collect();
    if unknown.is_empty() {
        return alpha;
    }
    let lu = DMatrix::from_fn(unknown.len(), unknown.len(), |r, c| {
        l[(unknown[r], unknown[c])]
    });
    let rhs = DVector::from_fn(unknown.len(), |r, _| {
        -known
            .iter()
            .map(|&k| l[(unknown[r], k)] * alpha[k])
            .sum::<f64>()
    });
    let x = lu.lu().solve(&rhs).expect("nonsingular unknown block");
    for (r, &i) in unknown.iter().enumerate() {
        alpha[i] = x[r];
    }
    alpha
}

/// Every pixel scanned against every boundary pixel.
pub fn brute_force_distance(boundary: &BinaryMask) -> Vec<f64> {
    let (w, h) = boundary.dims();
    let pts: Vec<(i64, i64)> = (0..w * h)
        .filter(|&i| boundary.data()[i])
        .map(|i| ((i % w) as i64, (i / w) as i64))
        .collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            let best = pts
                .iter()
                .map(|&(px, py)| (px - x).pow(2) + (py - y).pow(2))
                .min()
                .expect("nonempty boundary");
            (best as f64).sqrt()
        })
        .collect()
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> FloatRaster {
    FloatRaster::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
}

/// Random labels with at least one known pixel.
pub fn random_trimap(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Trimap {
    let p_known: f64 = rng.random_range(0.1..0.7);
    let mut labels: Vec<TrimapLabel> = (0..w * h)
        .map(|_| {
            if rng.random::<f64>() < p_known {
                if rng.random::<bool>() {
                    TrimapLabel::Foreground
                } else {
                    TrimapLabel::Background
                }
            } else {
                TrimapLabel::Unknown
            }
        })
        .collect();
    if labels.iter().all(|l| !l.is_known()) {
        labels[0] = TrimapLabel::Foreground;
    }
    Trimap::new(w, h, labels).unwrap()
}

pub fn random_binary(rng: &mut ChaCha8Rng, w: usize, h: usize, p: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random::<f64>() < p)
}

/// Central difference of `f` at every coordinate of `x`.
pub fn central_difference(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
