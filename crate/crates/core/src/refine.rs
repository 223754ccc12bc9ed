//! Probability map to binary mask: trimap from two confidence thresholds,
//! a constrained matting solve over the unknown band, then a strict
//! threshold on the raw alpha.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matting::{assemble_system, solve_alpha, AlphaMatte, MattingParams};
use crate::raster::{BinaryMask, FloatRaster, Trimap, TrimapLabel};

pub const DEFAULT_C_HIGH: f64 = 0.46;
pub const DEFAULT_C_LOW: f64 = 0.38;
pub const DEFAULT_MASK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub c_high: f64,
    pub c_low: f64,
    pub matting: MattingParams,
    pub mask_threshold: f64,
    /// Extra dilation (Chebyshev radius, pixels) of the unknown band. Zero
    /// keeps the band exactly the region between the thresholds.
    pub band_dilation: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            c_high: DEFAULT_C_HIGH,
            c_low: DEFAULT_C_LOW,
            matting: MattingParams::default(),
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            band_dilation: 0,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.c_low && self.c_low < self.c_high && self.c_high <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "thresholds must satisfy 0 <= c_low < c_high <= 1, got c_low={} c_high={}",
                self.c_low, self.c_high
            )));
        }
        if !(self.mask_threshold > 0.0 && self.mask_threshold < 1.0) {
            return Err(Error::InvalidParams(format!(
                "mask threshold must lie in (0, 1), got {}",
                self.mask_threshold
            )));
        }
        self.matting.validate()
    }
}

/// Foreground where `prob >= c_high`, background where `prob <= c_low`,
/// unknown in between.
pub fn build_trimap(prob: &FloatRaster, c_high: f64, c_low: f64) -> Trimap {
    let labels = prob
        .data()
        .iter()
        .map(|&p| {
            if p >= c_high {
                TrimapLabel::Foreground
            } else if p <= c_low {
                TrimapLabel::Background
            } else {
                TrimapLabel::Unknown
            }
        })
        .collect();
    Trimap::new(prob.width(), prob.height(), labels).expect("same shape")
}

/// Marks every pixel within Chebyshev distance `radius` of an unknown pixel as unknown.
pub fn dilate_unknown(trimap: &Trimap, radius: usize) -> Trimap {
    if radius == 0 {
        return trimap.clone();
    }
    let (w, h) = trimap.dims();
    let unknown: Vec<bool> = trimap.labels().iter().map(|l| !l.is_known()).collect();
    // separable max filter: rows, then columns
    let mut horiz = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(w - 1);
            horiz[y * w + x] = (lo..=hi).any(|xx| unknown[y * w + xx]);
        }
    }
    let labels = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let lo = y.saturating_sub(radius);
            let hi = (y + radius).min(h - 1);
            if (lo..=hi).any(|yy| horiz[yy * w + x]) {
                TrimapLabel::Unknown
            } else {
                trimap.labels()[i]
            }
        })
        .collect();
    Trimap::new(w, h, labels).expect("same shape")
}

/// `alpha > t`, strictly, on the raw matte.
pub fn threshold_mask(alpha: &AlphaMatte, t: f64) -> BinaryMask {
    BinaryMask::new(
        alpha.width,
        alpha.height,
        alpha.alpha.iter().map(|&a| a > t).collect(),
    )
    .expect("same shape")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub mask: BinaryMask,
    pub alpha: AlphaMatte,
    pub trimap: Trimap,
}

/// Full refinement of one probability map against its image.
pub fn refine(image: &FloatRaster, prob: &FloatRaster, params: &RefineParams) -> Result<Refined> {
    params.validate()?;
    image.ensure_same_dims(prob.dims())?;
    if prob.channels() != 1 {
        return Err(Error::InvalidParams(
            "probability map must be single-channel".into(),
        ));
    }
    let trimap = dilate_unknown(
        &build_trimap(prob, params.c_high, params.c_low),
        params.band_dilation,
    );

    if trimap.unknown_count() == 0 {
        let alpha = AlphaMatte::from_trimap(&trimap);
        let mask = BinaryMask::new(
            prob.width(),
            prob.height(),
            prob.data().iter().map(|&p| p >= params.c_high).collect(),
        )?;
        return Ok(Refined {
            mask,
            alpha,
            trimap,
        });
    }

    let gray = image.to_grayscale();
    let system = assemble_system(&gray, &trimap, &params.matting)?;
    let alpha = solve_alpha(&system, &params.matting)?;
    let mask = threshold_mask(&alpha, params.mask_threshold);
    Ok(Refined {
        mask,
        alpha,
        trimap,
    })
}

/// The baseline the refinement is compared against: a plain threshold of
/// the probability map.
pub fn threshold_prob(prob: &FloatRaster, t: f64) -> BinaryMask {
    BinaryMask::new(
        prob.width(),
        prob.height(),
        prob.data().iter().map(|&p| p > t).collect(),
    )
    .expect("same shape")
}
