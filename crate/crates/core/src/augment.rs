//! Seeded, probabilistic augmentation of image/mask training pairs.
//!
//! Each stage fires independently with probability `p`. Geometric stages
//! move image and mask together (bilinear for the image, nearest-neighbour
//! for the mask); photometric stages touch only the image and clamp it to
//! `[0, 1]`.
//!
//! Randomness comes from ChaCha8 seeded with the config seed, one stream per
//! stage index, so a fixed seed reproduces the same output everywhere and
//! editing one stage does not reshuffle the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FloatRaster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOp {
    Hflip,
    Vflip,
    /// Rotation about the image centre; range in degrees.
    Rotate,
    /// Zoom about the image centre; range is the scale factor.
    Scale,
    /// Random crop; range is the kept fraction of each side.
    Crop,
    /// Additive offset.
    Brightness,
    /// Multiplies the deviation from the mean intensity by `1 + c`.
    Contrast,
    /// Additive Gaussian noise; range is the standard deviation.
    Noise,
}

impl AugmentOp {
    pub fn default_range(self) -> [f64; 2] {
        match self {
            AugmentOp::Hflip | AugmentOp::Vflip => [0.0, 0.0],
            AugmentOp::Rotate => [-15.0, 15.0],
            AugmentOp::Scale => [0.8, 1.2],
            AugmentOp::Crop => [0.8, 1.0],
            AugmentOp::Brightness | AugmentOp::Contrast => [-0.2, 0.2],
            AugmentOp::Noise => [0.02, 0.02],
        }
    }

    pub fn is_geometric(self) -> bool {
        matches!(
            self,
            AugmentOp::Hflip
                | AugmentOp::Vflip
                | AugmentOp::Rotate
                | AugmentOp::Scale
                | AugmentOp::Crop
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub op: AugmentOp,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

impl Stage {
    pub fn new(op: AugmentOp, p: f64) -> Self {
        Self { op, p, range: None }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = Some([lo, hi]);
        self
    }

    pub fn range(&self) -> [f64; 2] {
        self.range.unwrap_or_else(|| self.op.default_range())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    #[serde(default)]
    pub seed: u64,
    pub stages: Vec<Stage>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        use AugmentOp::*;
        Self {
            seed: 0,
            stages: vec![
                Stage::new(Hflip, 0.5),
                Stage::new(Vflip, 0.5),
                Stage::new(Rotate, 0.3),
                Stage::new(Scale, 0.3),
                Stage::new(Brightness, 0.3),
                Stage::new(Contrast, 0.3),
                Stage::new(Noise, 0.2),
            ],
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.stages.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.p) {
                return Err(Error::InvalidParams(format!(
                    "stage {i}: p = {} is outside [0, 1]",
                    s.p
                )));
            }
            let [lo, hi] = s.range();
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParams(format!(
                    "stage {i}: bad range [{lo}, {hi}]"
                )));
            }
            let bad = match s.op {
                AugmentOp::Scale => lo <= 0.0,
                AugmentOp::Crop => lo <= 0.0 || hi > 1.0,
                AugmentOp::Noise => lo < 0.0,
                _ => false,
            };
            if bad {
                return Err(Error::InvalidParams(format!(
                    "stage {i}: range [{lo}, {hi}] is invalid for {:?}",
                    s.op
                )));
            }
        }
        Ok(())
    }
}

fn stage_rng(seed: u64, stage: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Where an output pixel reads from in the source, in source pixel coordinates.
#[derive(Debug, Clone, Copy)]
enum Warp {
    /// Rotation about the centre by the angle with this cosine and sine.
    Rotate {
        cos: f64,
        sin: f64,
    },
    Scale {
        factor: f64,
    },
}

impl Warp {
    fn source(self, x: f64, y: f64, cx: f64, cy: f64) -> (f64, f64) {
        let (dx, dy) = (x - cx, y - cy);
        match self {
            Warp::Rotate { cos, sin } => (cx + cos * dx + sin * dy, cy - sin * dx + cos * dy),
            Warp::Scale { factor } => (cx + dx / factor, cy + dy / factor),
        }
    }
}

fn sample_bilinear(img: &FloatRaster, c: usize, sx: f64, sy: f64) -> f64 {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (x0, y0) = (sx.floor(), sy.floor());
    let (fx, fy) = (sx - x0, sy - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            img.get_channel(x as usize, y as usize, c)
        }
    };
    let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
    let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

fn nearest(sx: f64, sy: f64, w: usize, h: usize) -> Option<(usize, usize)> {
    let (x, y) = ((sx + 0.5).floor(), (sy + 0.5).floor());
    if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
        None
    } else {
        Some((x as usize, y as usize))
    }
}

fn warp_image(img: &FloatRaster, warp: Warp) -> FloatRaster {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut data = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = warp.source(x as f64, y as f64, cx, cy);
            for c in 0..ch {
                data.push(sample_bilinear(img, c, sx, sy).clamp(0.0, 1.0));
            }
        }
    }
    FloatRaster::new(w, h, ch, data).expect("finite samples")
}

fn warp_mask(mask: &BinaryMask, warp: Warp) -> BinaryMask {
    let (w, h) = mask.dims();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    BinaryMask::from_fn(w, h, |x, y| {
        let (sx, sy) = warp.source(x as f64, y as f64, cx, cy);
        nearest(sx, sy, w, h).is_some_and(|(nx, ny)| mask.get(nx, ny))
    })
}

fn remap_image(
    img: &FloatRaster,
    out_w: usize,
    out_h: usize,
    src: impl Fn(usize, usize) -> (usize, usize),
) -> FloatRaster {
    let ch = img.channels();
    let mut data = Vec::with_capacity(out_w * out_h * ch);
    for y in 0..out_h {
        for x in 0..out_w {
            let (sx, sy) = src(x, y);
            for c in 0..ch {
                data.push(img.get_channel(sx, sy, c));
            }
        }
    }
    FloatRaster::new(out_w, out_h, ch, data).expect("copied samples")
}

fn remap_mask(
    mask: &BinaryMask,
    out_w: usize,
    out_h: usize,
    src: impl Fn(usize, usize) -> (usize, usize),
) -> BinaryMask {
    BinaryMask::from_fn(out_w, out_h, |x, y| {
        let (sx, sy) = src(x, y);
        mask.get(sx, sy)
    })
}

/// Outcome of one pipeline run, with the activation of each stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub image: FloatRaster,
    pub mask: BinaryMask,
    pub activated: Vec<bool>,
}

pub fn augment_pair(
    img: &FloatRaster,
    mask: &BinaryMask,
    cfg: &AugmentConfig,
) -> Result<(FloatRaster, BinaryMask)> {
    let out = augment_pair_traced(img, mask, cfg)?;
    Ok((out.image, out.mask))
}

pub fn augment_pair_traced(
    img: &FloatRaster,
    mask: &BinaryMask,
    cfg: &AugmentConfig,
) -> Result<Augmented> {
    cfg.validate()?;
    img.ensure_same_dims(mask.dims())?;
    let mut image = img.clone();
    let mut mask = mask.clone();
    let mut activated = Vec::with_capacity(cfg.stages.len());

    for (i, stage) in cfg.stages.iter().enumerate() {
        let mut rng = stage_rng(cfg.seed, i);
        let active = rng.random::<f64>() < stage.p;
        activated.push(active);
        if !active {
            continue;
        }
        let range = stage.range();
        let (w, h) = image.dims();
        match stage.op {
            AugmentOp::Hflip => {
                image = remap_image(&image, w, h, |x, y| (w - 1 - x, y));
                mask = remap_mask(&mask, w, h, |x, y| (w - 1 - x, y));
            }
            AugmentOp::Vflip => {
                image = remap_image(&image, w, h, |x, y| (x, h - 1 - y));
                mask = remap_mask(&mask, w, h, |x, y| (x, h - 1 - y));
            }
            AugmentOp::Rotate => {
                let angle = draw(&mut rng, range).to_radians();
                let warp = Warp::Rotate {
                    cos: angle.cos(),
                    sin: angle.sin(),
                };
                image = warp_image(&image, warp);
                mask = warp_mask(&mask, warp);
            }
            AugmentOp::Scale => {
                let warp = Warp::Scale {
                    factor: draw(&mut rng, range),
                };
                image = warp_image(&image, warp);
                mask = warp_mask(&mask, warp);
            }
            AugmentOp::Crop => {
                let frac = draw(&mut rng, range);
                let cw = (w as f64 * frac).round() as usize;
                let ch = (h as f64 * frac).round() as usize;
                if cw < 1 || ch < 1 {
                    return Err(Error::DegenerateCrop {
                        width: cw,
                        height: ch,
                    });
                }
                let x0 = rng.random_range(0..=w - cw);
                let y0 = rng.random_range(0..=h - ch);
                image = remap_image(&image, cw, ch, |x, y| (x + x0, y + y0));
                mask = remap_mask(&mask, cw, ch, |x, y| (x + x0, y + y0));
            }
            AugmentOp::Brightness => {
                let delta = draw(&mut rng, range);
                image = image.map(|v| (v + delta).clamp(0.0, 1.0));
            }
            AugmentOp::Contrast => {
                let gain = 1.0 + draw(&mut rng, range);
                let mean = image.data().iter().sum::<f64>() / image.data().len().max(1) as f64;
                image = image.map(|v| ((v - mean) * gain + mean).clamp(0.0, 1.0));
            }
            AugmentOp::Noise => {
                let sigma = draw(&mut rng, range);
                let data = image
                    .data()
                    .iter()
                    .map(|&v| {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        (v + sigma * n).clamp(0.0, 1.0)
                    })
                    .collect();
                image = FloatRaster::new(image.width(), image.height(), image.channels(), data)?;
            }
        }
    }
    Ok(Augmented {
        image,
        mask,
        activated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(w: usize, h: usize, seed: u64) -> (FloatRaster, BinaryMask) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = FloatRaster::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap();
        let mask = BinaryMask::from_fn(w, h, |x, y| {
            (x as f64 - 7.0).powi(2) + (y as f64 - 6.0).powi(2) < 20.0
        });
        (img, mask)
    }

    fn only(op: AugmentOp, p: f64, seed: u64) -> AugmentConfig {
        AugmentConfig {
            seed,
            stages: vec![Stage::new(op, p)],
        }
    }

    #[test]
    fn inactive_pipeline_is_identity() {
        let (img, mask) = pair(16, 12, 1);
        let mut cfg = AugmentConfig::default();
        for s in &mut cfg.stages {
            s.p = 0.0;
        }
        let (i2, m2) = augment_pair(&img, &mask, &cfg).unwrap();
        assert_eq!(i2, img);
        assert_eq!(m2, mask);
    }

    #[test]
    fn hflip_is_an_involution() {
        let (img, mask) = pair(16, 12, 2);
        let cfg = only(AugmentOp::Hflip, 1.0, 0);
        let (i1, m1) = augment_pair(&img, &mask, &cfg).unwrap();
        for y in 0..12 {
            for x in 0..16 {
                assert_eq!(i1.get(x, y), img.get(15 - x, y));
                assert_eq!(m1.get(x, y), mask.get(15 - x, y));
            }
        }
        let (i2, m2) = augment_pair(&i1, &m1, &cfg).unwrap();
        assert_eq!(i2, img);
        assert_eq!(m2, mask);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (img, mask) = pair(24, 20, 3);
        let cfg = AugmentConfig {
            seed: 99,
            stages: AugmentConfig::default()
                .stages
                .into_iter()
                .map(|s| Stage { p: 1.0, ..s })
                .collect(),
        };
        let a = augment_pair(&img, &mask, &cfg).unwrap();
        let b = augment_pair(&img, &mask, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.0.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn quarter_turn_matches_index_oracle() {
        let (img, mask) = pair(16, 16, 4);
        let cfg = AugmentConfig {
            seed: 0,
            stages: vec![Stage::new(AugmentOp::Rotate, 1.0).with_range(90.0, 90.0)],
        };
        let (_, m) = augment_pair(&img, &mask, &cfg).unwrap();
        let oracle = BinaryMask::from_fn(16, 16, |x, y| mask.get(y, 15 - x));
        assert_eq!(m, oracle);
    }

    #[test]
    fn mask_warp_commutes_with_binarisation() {
        // warping the mask as a float image with nearest sampling and
        // binarising gives the same mask as the mask path
        for seed in 0..20 {
            let (_, mask) = pair(16, 16, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let warp = if seed % 2 == 0 {
                let a: f64 = rng.random_range(-40.0f64..40.0).to_radians();
                Warp::Rotate {
                    cos: a.cos(),
                    sin: a.sin(),
                }
            } else {
                Warp::Scale {
                    factor: rng.random_range(0.6..1.5),
                }
            };
            let as_float = mask.to_float();
            let (cx, cy) = (7.5, 7.5);
            let sampled: Vec<f64> = (0..256)
                .map(|i| {
                    let (sx, sy) = warp.source((i % 16) as f64, (i / 16) as f64, cx, cy);
                    nearest(sx, sy, 16, 16).map_or(0.0, |(x, y)| as_float.get(x, y))
                })
                .collect();
            let binarised =
                BinaryMask::new(16, 16, sampled.iter().map(|&v| v > 0.5).collect()).unwrap();
            assert_eq!(warp_mask(&mask, warp), binarised);
        }
    }

    #[test]
    fn crop_shrinks_and_degenerate_crop_errors() {
        let (img, mask) = pair(20, 10, 5);
        let cfg = AugmentConfig {
            seed: 1,
            stages: vec![Stage::new(AugmentOp::Crop, 1.0).with_range(0.5, 0.5)],
        };
        let (i, m) = augment_pair(&img, &mask, &cfg).unwrap();
        assert_eq!(i.dims(), (10, 5));
        assert_eq!(m.dims(), (10, 5));

        let tiny = AugmentConfig {
            seed: 1,
            stages: vec![Stage::new(AugmentOp::Crop, 1.0).with_range(0.01, 0.01)],
        };
        assert!(matches!(
            augment_pair(&img, &mask, &tiny),
            Err(Error::DegenerateCrop { .. })
        ));
    }

    #[test]
    fn photometric_leaves_mask_alone() {
        let (img, mask) = pair(16, 16, 6);
        for op in [AugmentOp::Brightness, AugmentOp::Contrast, AugmentOp::Noise] {
            let (i, m) = augment_pair(&img, &mask, &only(op, 1.0, 3)).unwrap();
            assert_eq!(m, mask);
            assert!(i.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn rejects_bad_probability() {
        let (img, mask) = pair(4, 4, 0);
        assert!(augment_pair(&img, &mask, &only(AugmentOp::Hflip, 1.5, 0)).is_err());
    }

    #[test]
    fn config_json_shape() {
        let cfg: AugmentConfig = serde_json::from_str(
            r#"{"seed": 3, "stages": [{"op": "hflip", "p": 0.5}, {"op": "rotate", "p": 0.3, "range": [-10, 10]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.stages[1].range(), [-10.0, 10.0]);
        assert_eq!(cfg.stages[0].range(), [0.0, 0.0]);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn mask_stays_binary_and_shapes_agree(seed in 0u64..1_000_000) {
            let (img, mask) = pair(16, 14, seed);
            let mut cfg = AugmentConfig { seed, ..Default::default() };
            cfg.stages.push(Stage::new(AugmentOp::Crop, 0.5));
            let out = augment_pair_traced(&img, &mask, &cfg).unwrap();
            proptest::prop_assert_eq!(out.image.dims(), out.mask.dims());
            proptest::prop_assert_eq!(out.activated.len(), cfg.stages.len());
        }
    }
}
