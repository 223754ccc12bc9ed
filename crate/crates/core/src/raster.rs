//! Raster containers shared by every stage of the pipeline.
//!
//! All three types are row-major and immutable once built. Constructors
//! validate their invariants, so a value of one of these types can be
//! trusted downstream without re-checking.

use crate::error::{Error, Result};

/// Real-valued raster with 1 or 3 interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatRaster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FloatRaster {
    /// Builds a raster, rejecting bad lengths, channel counts and non-finite values.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvariantViolation(format!(
                "raster must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvariantViolation(format!(
                "raster {width}x{height}x{channels} needs {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "non-finite value {} at index {i}",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel raster.
    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::gray(width, height, vec![value; width * height]).expect("finite fill value")
    }

    /// Single-channel raster from a per-pixel function of `(x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::gray(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Value of channel 0 at `(x, y)`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels]
    }

    pub fn get_channel(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Checks that every value lies in `[0, 1]`.
    pub fn ensure_unit_range(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            Some(i) => Err(Error::InvariantViolation(format!(
                "{what} value {} at index {i} is outside [0, 1]",
                self.data[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other,
            });
        }
        Ok(())
    }

    /// Luma conversion using Rec. 601 weights; single-channel input is returned as is.
    pub fn to_grayscale(&self) -> FloatRaster {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2])
            .collect();
        FloatRaster {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Per-value map that keeps the shape. Panics if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> FloatRaster {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(
            data.iter().all(|v| v.is_finite()),
            "map produced a non-finite value"
        );
        FloatRaster {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }
}

/// Binary mask; `true` marks the weld (foreground) class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvariantViolation(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Interprets real values that must be exactly 0 or 1.
    pub fn from_values(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if v == 0.0 {
                data.push(false);
            } else if v == 1.0 {
                data.push(true);
            } else {
                return Err(Error::InvariantViolation(format!(
                    "mask value {v} at index {i} is not 0 or 1"
                )));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn to_float(&self) -> FloatRaster {
        FloatRaster {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self
                .data
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other,
            });
        }
        Ok(())
    }
}

/// One trimap pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrimapLabel {
    Background,
    Unknown,
    Foreground,
}

impl TrimapLabel {
    pub fn value(self) -> f64 {
        match self {
            TrimapLabel::Background => 0.0,
            TrimapLabel::Unknown => 0.5,
            TrimapLabel::Foreground => 1.0,
        }
    }

    pub fn is_known(self) -> bool {
        self != TrimapLabel::Unknown
    }

    /// Snaps a real value to the nearest label if it lies within `tol` of it.
    pub fn snap(v: f64, tol: f64) -> Option<Self> {
        [
            TrimapLabel::Background,
            TrimapLabel::Unknown,
            TrimapLabel::Foreground,
        ]
        .into_iter()
        .find(|l| (v - l.value()).abs() <= tol)
    }
}

/// Three-level constraint map: background 0, unknown 0.5, foreground 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trimap {
    width: usize,
    height: usize,
    data: Vec<TrimapLabel>,
}

impl Trimap {
    pub fn new(width: usize, height: usize, data: Vec<TrimapLabel>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvariantViolation(format!(
                "trimap {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Exact interpretation of {0, 0.5, 1}; anything else is an error.
    pub fn from_values(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        Self::from_values_snapped(width, height, values, 0.0)
    }

    pub fn from_values_snapped(
        width: usize,
        height: usize,
        values: &[f64],
        tol: f64,
    ) -> Result<Self> {
        let data = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                TrimapLabel::snap(v, tol).ok_or_else(|| {
                    Error::InvariantViolation(format!(
                        "trimap value {v} at index {i} is not 0, 0.5 or 1"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn labels(&self) -> &[TrimapLabel] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> TrimapLabel {
        self.data[y * self.width + x]
    }

    pub fn unknown_count(&self) -> usize {
        self.data.iter().filter(|l| !l.is_known()).count()
    }

    pub fn to_float(&self) -> FloatRaster {
        FloatRaster {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|l| l.value()).collect(),
        }
    }
}
