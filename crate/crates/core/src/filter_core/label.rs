use crate::error::{Error, Result};
use crate::fft::{fft2_real, signed_freq, ComplexGrid, RealGrid};

/// Gaussian label width relative to `sqrt(target area)` in grid cells.
pub const LABEL_SIGMA_FACTOR: f64 = 0.083;

/// DFT of the desired response: a periodic Gaussian with peak 1 at grid
/// index 0 (the region center).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpectrum {
    pub coefficients: ComplexGrid,
    pub sigma: f64,
}

impl LabelSpectrum {
    pub fn grid(&self) -> (usize, usize) {
        self.coefficients.shape()
    }
}

/// Label for a target spanning `target_size = (q1, q2)` cells of `grid`.
pub fn gaussian_label(grid: (usize, usize), target_size: (f64, f64)) -> Result<LabelSpectrum> {
    let (q1, q2) = target_size;
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(Error::invalid(format!("target size {target_size:?} must be positive")));
    }
    gaussian_label_with_sigma(grid, LABEL_SIGMA_FACTOR * (q1 * q2).sqrt())
}

pub fn gaussian_label_with_sigma(grid: (usize, usize), sigma: f64) -> Result<LabelSpectrum> {
    let (rows, cols) = grid;
    if rows < 3 || cols < 3 {
        return Err(Error::invalid(format!(
            "label grid must be at least 3x3, got {rows}x{cols}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("label sigma {sigma} must be positive")));
    }
    // minimum-image distance to the origin keeps the peak at exactly 1
    let g = |idx: usize, n: usize| {
        let d = signed_freq(idx, n) as f64;
        (-d * d / (2.0 * sigma * sigma)).exp()
    };
    let spatial = RealGrid::from_fn(rows, cols, |r, c| g(r, rows) * g(c, cols));
    Ok(LabelSpectrum {
        coefficients: fft2_real(&spatial),
        sigma,
    })
}
