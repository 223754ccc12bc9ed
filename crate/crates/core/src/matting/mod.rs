//! Closed-form matting on a grayscale image.
//!
//! The matting Laplacian sums, over every 3x3 window `w_k` that lies fully
//! inside the image, the contribution
//!
//! ```text
//! L_ij += delta_ij - (1 + (I_i - mu_k)(I_j - mu_k) / (eps / 9 + var_k)) / 9
//! ```
//!
//! for all pixel pairs `i, j` in the window. Two pixels interact only when
//! they share a window, so each row has at most 25 entries: the 5x5
//! neighbourhood of the pixel. Rows are stored densely in that stencil.
//!
//! Trimap constraints are applied by elimination: the known values are
//! substituted and only the unknown block `L_U a_U = -B^T a_M` is solved.

mod solver;

pub use solver::{conjugate_gradient, CgOutcome, CsrMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{FloatRaster, Trimap, TrimapLabel};

pub const WINDOW_RADIUS: usize = 1;
const WINDOW_LEN: usize = 9;
const STENCIL_SIDE: usize = 5;
pub const STENCIL_LEN: usize = STENCIL_SIDE * STENCIL_SIDE;

#[inline]
fn slot(dx: isize, dy: isize) -> usize {
    ((dy + 2) as usize) * STENCIL_SIDE + (dx + 2) as usize
}

#[inline]
fn slot_offset(s: usize) -> (isize, isize) {
    (
        (s % STENCIL_SIDE) as isize - 2,
        (s / STENCIL_SIDE) as isize - 2,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MattingParams {
    /// Regulariser on the per-window slope.
    pub epsilon: f64,
    pub window_radius: usize,
    /// Relative residual the linear solve must reach.
    pub solver_tol: f64,
    pub max_iters: usize,
}

impl Default for MattingParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-7,
            window_radius: WINDOW_RADIUS,
            solver_tol: 1e-6,
            max_iters: 2000,
        }
    }
}

impl MattingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.window_radius != WINDOW_RADIUS {
            return Err(Error::InvalidParams(format!(
                "only 3x3 windows are supported (radius 1), got radius {}",
                self.window_radius
            )));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1e-2) {
            return Err(Error::InvalidParams(format!(
                "solver tolerance must lie in (0, 1e-2), got {}",
                self.solver_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sparse symmetric matting Laplacian in 5x5-stencil row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MattingLaplacian {
    width: usize,
    height: usize,
    rows: Vec<[f64; STENCIL_LEN]>,
}

impl MattingLaplacian {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Matrix dimension (pixel count).
    pub fn dim(&self) -> usize {
        self.width * self.height
    }

    /// Entry `(i, j)` with pixels indexed row-major.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = ((i % self.width) as isize, (i / self.width) as isize);
        let (xj, yj) = ((j % self.width) as isize, (j / self.width) as isize);
        let (dx, dy) = (xj - xi, yj - yi);
        if dx.abs() > 2 || dy.abs() > 2 {
            return 0.0;
        }
        self.rows[i][slot(dx, dy)]
    }

    /// In-image entries of row `i` as `(column, value)`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        stencil_row(self.width, self.height, i, &self.rows[i])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: (self.dim(), 1),
                actual: (x.len(), 1),
            });
        }
        Ok((0..self.dim())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }
}

fn stencil_row(
    width: usize,
    height: usize,
    i: usize,
    coeffs: &[f64; STENCIL_LEN],
) -> impl Iterator<Item = (usize, f64)> + '_ {
    let (x, y) = ((i % width) as isize, (i / width) as isize);
    (0..STENCIL_LEN).filter_map(move |s| {
        let (dx, dy) = slot_offset(s);
        let (nx, ny) = (x + dx, y + dy);
        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
            None
        } else {
            Some((ny as usize * width + nx as usize, coeffs[s]))
        }
    })
}

fn check_gray(gray: &FloatRaster) -> Result<()> {
    if gray.channels() != 1 {
        return Err(Error::InvalidParams(
            "matting needs a single-channel image; convert to grayscale first".into(),
        ));
    }
    if gray.width() < 3 || gray.height() < 3 {
        return Err(Error::ImageTooSmall {
            width: gray.width(),
            height: gray.height(),
        });
    }
    Ok(())
}

/// Accumulates the stencil rows of every pixel for which `row_of` returns a
/// storage slot. Windows are visited in raster order, so a row comes out
/// bitwise the same whichever subset of rows is requested.
fn assemble_rows(
    gray: &FloatRaster,
    epsilon: f64,
    n_rows: usize,
    row_of: impl Fn(usize) -> Option<usize>,
) -> Vec<[f64; STENCIL_LEN]> {
    let (w, h) = gray.dims();
    let img = gray.data();
    let mut rows = vec![[0.0; STENCIL_LEN]; n_rows];
    let reg = epsilon / WINDOW_LEN as f64;

    let mut members = [0usize; WINDOW_LEN];
    let mut dev = [0.0f64; WINDOW_LEN];
    let mut targets = [None; WINDOW_LEN];
    for cy in 1..h - 1 {
        for cx in 1..w - 1 {
            let mut any = false;
            for (k, m) in members.iter_mut().enumerate() {
                let (x, y) = (cx + k % 3 - 1, cy + k / 3 - 1);
                *m = y * w + x;
                targets[k] = row_of(*m);
                any |= targets[k].is_some();
            }
            if !any {
                continue;
            }

            let mean = members.iter().map(|&m| img[m]).sum::<f64>() / WINDOW_LEN as f64;
            for (d, &m) in dev.iter_mut().zip(&members) {
                *d = img[m] - mean;
            }
            let var = dev.iter().map(|d| d * d).sum::<f64>() / WINDOW_LEN as f64;
            let inv = 1.0 / (reg + var);

            for a in 0..WINDOW_LEN {
                let Some(r) = targets[a] else { continue };
                let row = &mut rows[r];
                for b in 0..WINDOW_LEN {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let term = delta - (1.0 + dev[a] * dev[b] * inv) / WINDOW_LEN as f64;
                    let dx = (b % 3) as isize - (a % 3) as isize;
                    let dy = (b / 3) as isize - (a / 3) as isize;
                    row[slot(dx, dy)] += term;
                }
            }
        }
    }
    rows
}

/// Assembles the full matting Laplacian of a grayscale image.
pub fn build_matting_laplacian(
    gray: &FloatRaster,
    params: &MattingParams,
) -> Result<MattingLaplacian> {
    params.validate()?;
    check_gray(gray)?;
    let n = gray.len();
    Ok(MattingLaplacian {
        width: gray.width(),
        height: gray.height(),
        rows: assemble_rows(gray, params.epsilon, n, Some),
    })
}

/// `alpha^T L alpha`.
pub fn energy(laplacian: &MattingLaplacian, alpha: &[f64]) -> Result<f64> {
    let la = laplacian.mul_vec(alpha)?;
    Ok(alpha.iter().zip(&la).map(|(a, b)| a * b).sum())
}

/// A trimap-constrained matting problem: the known/unknown split plus the
/// Laplacian rows of the unknown pixels, which hold both `L_U` and `B^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MattingSystem {
    width: usize,
    height: usize,
    /// Constraint value per pixel; `None` for unknown pixels.
    constraint: Vec<Option<f64>>,
    known_idx: Vec<usize>,
    unknown_idx: Vec<usize>,
    unknown_rows: Vec<[f64; STENCIL_LEN]>,
}

/// Per-pixel constraints, then known and unknown indices.
type Split = (Vec<Option<f64>>, Vec<usize>, Vec<usize>);

fn split_trimap(trimap: &Trimap) -> Result<Split> {
    let mut constraint = Vec::with_capacity(trimap.len());
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for (i, &l) in trimap.labels().iter().enumerate() {
        match l {
            TrimapLabel::Unknown => {
                constraint.push(None);
                unknown.push(i);
            }
            TrimapLabel::Background | TrimapLabel::Foreground => {
                constraint.push(Some(l.value()));
                known.push(i);
            }
        }
    }
    if known.is_empty() {
        return Err(Error::NoKnownPixels);
    }
    Ok((constraint, known, unknown))
}

/// Splits a full Laplacian by the trimap constraints.
pub fn partition_system(laplacian: &MattingLaplacian, trimap: &Trimap) -> Result<MattingSystem> {
    if trimap.dims() != (laplacian.width, laplacian.height) {
        return Err(Error::DimensionMismatch {
            expected: (laplacian.width, laplacian.height),
            actual: trimap.dims(),
        });
    }
    let (constraint, known_idx, unknown_idx) = split_trimap(trimap)?;
    let unknown_rows = unknown_idx.iter().map(|&i| laplacian.rows[i]).collect();
    Ok(MattingSystem {
        width: laplacian.width,
        height: laplacian.height,
        constraint,
        known_idx,
        unknown_idx,
        unknown_rows,
    })
}

/// Builds the constrained system directly, assembling only the rows of
/// unknown pixels. Equal to `partition_system(build_matting_laplacian(..))`
/// without materialising the known rows.
pub fn assemble_system(
    gray: &FloatRaster,
    trimap: &Trimap,
    params: &MattingParams,
) -> Result<MattingSystem> {
    params.validate()?;
    check_gray(gray)?;
    gray.ensure_same_dims(trimap.dims())?;
    let (constraint, known_idx, unknown_idx) = split_trimap(trimap)?;
    let mut pos = vec![usize::MAX; gray.len()];
    for (k, &i) in unknown_idx.iter().enumerate() {
        pos[i] = k;
    }
    let unknown_rows = assemble_rows(gray, params.epsilon, unknown_idx.len(), |i| {
        (pos[i] != usize::MAX).then_some(pos[i])
    });
    Ok(MattingSystem {
        width: gray.width(),
        height: gray.height(),
        constraint,
        known_idx,
        unknown_idx,
        unknown_rows,
    })
}

impl MattingSystem {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n(&self) -> usize {
        self.width * self.height
    }

    pub fn known_idx(&self) -> &[usize] {
        &self.known_idx
    }

    pub fn unknown_idx(&self) -> &[usize] {
        &self.unknown_idx
    }

    /// Constraint values `s_i`, aligned with `known_idx`.
    pub fn known_values(&self) -> Vec<f64> {
        self.known_idx
            .iter()
            .map(|&i| self.constraint[i].unwrap())
            .collect()
    }

    /// Reduced operator `L_U` and right-hand side `-B^T a_M`.
    pub fn reduced(&self) -> (CsrMatrix, Vec<f64>) {
        let mut pos = vec![usize::MAX; self.n()];
        for (k, &i) in self.unknown_idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut rhs = vec![0.0; self.unknown_idx.len()];
        let rows = self
            .unknown_idx
            .iter()
            .zip(&self.unknown_rows)
            .enumerate()
            .map(|(k, (&i, coeffs))| {
                let mut row = Vec::with_capacity(STENCIL_LEN);
                for (j, v) in stencil_row(self.width, self.height, i, coeffs) {
                    match self.constraint[j] {
                        None => row.push((pos[j], v)),
                        Some(s) => rhs[k] -= v * s,
                    }
                }
                row
            });
        let a = CsrMatrix::from_rows(self.unknown_idx.len(), rows.collect::<Vec<_>>());
        (a, rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatte {
    pub width: usize,
    pub height: usize,
    /// Solver output; may leave `[0, 1]` slightly on unknown pixels.
    pub alpha: Vec<f64>,
    pub alpha_clamped: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl AlphaMatte {
    pub(crate) fn from_raw(
        width: usize,
        height: usize,
        alpha: Vec<f64>,
        outcome: CgOutcome,
    ) -> Self {
        let alpha_clamped = alpha.iter().map(|a| a.clamp(0.0, 1.0)).collect();
        Self {
            width,
            height,
            alpha,
            alpha_clamped,
            iterations: outcome.iterations,
            relative_residual: outcome.relative_residual,
        }
    }

    /// The matte from the constraints alone, used when nothing is unknown.
    pub fn from_trimap(trimap: &Trimap) -> Self {
        let alpha = trimap.labels().iter().map(|l| l.value()).collect();
        Self::from_raw(
            trimap.width(),
            trimap.height(),
            alpha,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
            },
        )
    }

    pub fn raw_raster(&self) -> FloatRaster {
        FloatRaster::gray(self.width, self.height, self.alpha.clone()).expect("finite alpha")
    }

    pub fn clamped_raster(&self) -> FloatRaster {
        FloatRaster::gray(self.width, self.height, self.alpha_clamped.clone())
            .expect("finite alpha")
    }
}

/// Solves for the unknown alpha values. Known pixels are copied verbatim.
///
/// The iteration starts from the mean of the constraint values, which is
/// already the exact solution when all constraints agree.
pub fn solve_alpha(sys: &MattingSystem, params: &MattingParams) -> Result<AlphaMatte> {
    params.validate()?;
    let mut alpha: Vec<f64> = sys.constraint.iter().map(|c| c.unwrap_or(0.0)).collect();
    if sys.known_idx.is_empty() {
        return Err(Error::NoKnownPixels);
    }
    if sys.unknown_idx.is_empty() {
        return Ok(AlphaMatte::from_raw(
            sys.width,
            sys.height,
            alpha,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }

    let known = sys.known_values();
    let start = known.iter().sum::<f64>() / known.len() as f64;
    let (a, rhs) = sys.reduced();
    let mut x = vec![start; sys.unknown_idx.len()];
    let outcome = conjugate_gradient(&a, &rhs, &mut x, params.solver_tol, params.max_iters)?;
    for (&i, &v) in sys.unknown_idx.iter().zip(&x) {
        alpha[i] = v;
    }
    Ok(AlphaMatte::from_raw(sys.width, sys.height, alpha, outcome))
}
