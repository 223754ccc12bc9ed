//! Intersection-over-union and mean IoU for two-class (weld/background) masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Fg,
    Bg,
}

/// How per-image results are combined into the dataset figure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// Two-class mean per image, then mean over images.
    #[default]
    Macro,
    /// Pixel counts pooled over the whole dataset before dividing.
    Global,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    inter: u64,
    union: u64,
}

impl Counts {
    fn ratio(self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.inter as f64 / self.union as f64
        }
    }
}

fn counts(pred: &BinaryMask, gt: &BinaryMask, cls: Class) -> Result<Counts> {
    pred.ensure_same_dims(gt.dims())?;
    let want = cls == Class::Fg;
    let mut c = Counts::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (p, g) = (p == want, g == want);
        c.inter += (p && g) as u64;
        c.union += (p || g) as u64;
    }
    Ok(c)
}

/// `|pred ∩ gt| / |pred ∪ gt|` for one class; 1.0 when both are empty.
pub fn iou(pred: &BinaryMask, gt: &BinaryMask, cls: Class) -> Result<f64> {
    Ok(counts(pred, gt, cls)?.ratio())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub iou_fg: f64,
    pub iou_bg: f64,
    pub miou: f64,
}

pub fn score(pred: &BinaryMask, gt: &BinaryMask) -> Result<ImageScore> {
    let iou_fg = iou(pred, gt, Class::Fg)?;
    let iou_bg = iou(pred, gt, Class::Bg)?;
    Ok(ImageScore {
        iou_fg,
        iou_bg,
        miou: (iou_fg + iou_bg) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_image: Vec<ImageScore>,
    pub dataset_miou: f64,
    pub aggregate: Aggregate,
}

pub fn evaluate(preds: &[BinaryMask], gts: &[BinaryMask]) -> Result<EvalResult> {
    evaluate_with(preds, gts, Aggregate::Macro)
}

pub fn evaluate_with(
    preds: &[BinaryMask],
    gts: &[BinaryMask],
    aggregate: Aggregate,
) -> Result<EvalResult> {
    if preds.len() != gts.len() {
        return Err(Error::LengthMismatch {
            preds: preds.len(),
            gts: gts.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let per_image = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| score(p, g))
        .collect::<Result<Vec<_>>>()?;
    let dataset_miou = match aggregate {
        Aggregate::Macro => per_image.iter().map(|s| s.miou).sum::<f64>() / per_image.len() as f64,
        Aggregate::Global => {
            let mut fg = Counts::default();
            let mut bg = Counts::default();
            for (p, g) in preds.iter().zip(gts) {
                let f = counts(p, g, Class::Fg)?;
                let b = counts(p, g, Class::Bg)?;
                fg.inter += f.inter;
                fg.union += f.union;
                bg.inter += b.inter;
                bg.union += b.union;
            }
            (fg.ratio() + bg.ratio()) / 2.0
        }
    };
    Ok(EvalResult {
        per_image,
        dataset_miou,
        aggregate,
    })
}
