//! Numerical core for weld-seam segmentation post-processing.
//!
//! - [`heatmap`]: Gaussian boundary-heatmap targets from a ground-truth mask.
//! - [`loss`]: focal and boundary-MSE losses with analytic gradients.
//! - [`matting`]: closed-form matting Laplacian and the trimap-constrained solve.
//! - [`refine`]: probability map to trimap to alpha matte to binary mask.
//! - [`metrics`]: IoU and mean IoU.
//! - [`augment`]: seeded image/mask augmentation.
//! - [`synth`]: synthetic weld-like instances for testing.
//! - [`io`]: PNG, PGM and WFR raster files.

pub mod augment;
pub mod error;
pub mod heatmap;
pub mod io;
pub mod loss;
pub mod matting;
pub mod metrics;
pub mod raster;
pub mod refine;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{BinaryMask, FloatRaster, Trimap, TrimapLabel};
