//! Reference values and analytic gradients for the two training losses:
//! a focal loss on the segmentation head and a mean squared error between
//! the boundary head and its Gaussian heatmap target.
//!
//! Both reduce by the mean over all pixels. Sums run sequentially in
//! row-major order so results are bitwise reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FloatRaster};

/// Probabilities are clamped into `[PROB_EPS, 1 - PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub w1: f64,
    pub w2: f64,
    pub alpha_t: f64,
    pub gamma: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            w1: 0.8,
            w2: 0.2,
            alpha_t: 1.0,
            gamma: 0.2,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("w1", self.w1)?;
        positive("w2", self.w2)?;
        positive("alpha_t", self.alpha_t)?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub focal: f64,
    pub boundary_mse: f64,
    pub combined: f64,
    /// Gradient of `combined` with respect to the segmentation probabilities.
    pub grad_ps: FloatRaster,
    /// Gradient of `combined` with respect to the boundary prediction.
    pub grad_pb: FloatRaster,
}

fn check_single(r: &FloatRaster, what: &str) -> Result<()> {
    if r.channels() != 1 {
        return Err(Error::InvalidParams(format!(
            "{what} must be single-channel"
        )));
    }
    Ok(())
}

/// Per-pixel focal loss and its derivative with respect to `p`.
///
/// `l = -alpha_t (1 - p_t)^gamma ln(p_t)` with `p_t = p` on foreground and
/// `1 - p` on background. Outside the clamp interval the derivative is zero.
pub fn focal_pixel(p: f64, fg: bool, alpha_t: f64, gamma: f64) -> (f64, f64) {
    let pc = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let (pt, sign) = if fg { (pc, 1.0) } else { (1.0 - pc, -1.0) };
    let q = 1.0 - pt;
    let log_pt = pt.ln();
    let loss = -alpha_t * q.powf(gamma) * log_pt;
    if p != pc {
        return (loss, 0.0);
    }
    // d/dpt of -(1-pt)^g ln pt = g (1-pt)^(g-1) ln pt - (1-pt)^g / pt
    let dpt = if gamma == 0.0 {
        -1.0 / pt
    } else {
        gamma * q.powf(gamma - 1.0) * log_pt - q.powf(gamma) / pt
    };
    (loss, alpha_t * dpt * sign)
}

/// Mean focal loss over all pixels and its gradient.
pub fn focal_loss(
    ps: &FloatRaster,
    gs: &BinaryMask,
    alpha_t: f64,
    gamma: f64,
) -> Result<(f64, FloatRaster)> {
    check_single(ps, "ps")?;
    ps.ensure_same_dims(gs.dims())?;
    let n = ps.len() as f64;
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(ps.len());
    for (&p, &g) in ps.data().iter().zip(gs.data()) {
        let (l, d) = focal_pixel(p, g, alpha_t, gamma);
        sum += l;
        grad.push(d / n);
    }
    Ok((sum / n, FloatRaster::gray(ps.width(), ps.height(), grad)?))
}

/// `sum((pb - hb)^2) / (H W)` and its gradient with respect to `pb`.
pub fn boundary_mse(pb: &FloatRaster, hb: &FloatRaster) -> Result<(f64, FloatRaster)> {
    check_single(pb, "pb")?;
    check_single(hb, "hb")?;
    pb.ensure_same_dims(hb.dims())?;
    let n = pb.len() as f64;
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(pb.len());
    for (&p, &h) in pb.data().iter().zip(hb.data()) {
        let d = p - h;
        sum += d * d;
        grad.push(2.0 * d / n);
    }
    Ok((sum / n, FloatRaster::gray(pb.width(), pb.height(), grad)?))
}

/// Weighted sum `w1 * focal + w2 * mse`, with gradients scaled to match.
pub fn combined_loss(
    ps: &FloatRaster,
    gs: &BinaryMask,
    pb: &FloatRaster,
    hb: &FloatRaster,
    params: &LossParams,
) -> Result<LossReport> {
    params.validate()?;
    let (focal, g_ps) = focal_loss(ps, gs, params.alpha_t, params.gamma)?;
    let (boundary_mse, g_pb) = boundary_mse(pb, hb)?;
    Ok(LossReport {
        focal,
        boundary_mse,
        combined: params.w1 * focal + params.w2 * boundary_mse,
        grad_ps: g_ps.map(|g| params.w1 * g),
        grad_pb: g_pb.map(|g| params.w2 * g),
    })
}
