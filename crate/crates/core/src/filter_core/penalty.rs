//! Spatial penalty `p(i, j) = 0.1 + 3 (i / q1)^2 + 3 (j / q2)^2` as a short
//! Fourier series on the search-region period.
//!
//! Each quadratic term is replaced by the trigonometric polynomial
//! `sum_m a_m (1 - cos(m theta))`, `theta = 2 pi x / L`, with `K` harmonics
//! fitted by least squares to `x^2` over the target extent `|x| <= q`. The
//! approximation is exact at the center (so the floor `0.1` is kept there)
//! and close to the quadratic over the target; a plain truncated DFT of the
//! sampled quadratic instead puts most of its error at the center.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{freq_bin, signed_freq, ComplexGrid, Grid, RealGrid};

/// Coefficients per axis (harmonics -2..=2).
pub const PENALTY_BANDWIDTH: usize = 5;
pub const PENALTY_FLOOR: f64 = 0.1;
pub const PENALTY_SLOPE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpectrum {
    /// `bandwidth x bandwidth` Fourier-series coefficients, index
    /// `(k1 + half, k2 + half)` for signed frequencies `k`.
    coefficients: Grid<Complex64>,
    half: usize,
}

/// Least-squares weights `a_1..a_K` of `sum_m a_m (1 - cos(2 pi m x / L))`
/// approximating `x^2` on `|x| <= extent`.
fn quadratic_harmonics(harmonics: usize, period: f64, extent: f64) -> Vec<f64> {
    const SAMPLES: usize = 2048;
    let n = harmonics;
    let extent = extent.min(period / 2.0);
    let basis = |m: usize, x: f64| 1.0 - (2.0 * PI * m as f64 * x / period).cos();
    // normal equations, augmented with the right-hand side
    let mut m = vec![vec![0.0; n + 1]; n];
    for s in 0..SAMPLES {
        let x = extent * ((s as f64 + 0.5) / SAMPLES as f64 * 2.0 - 1.0);
        let phi: Vec<f64> = (1..=n).map(|k| basis(k, x)).collect();
        for r in 0..n {
            for c in 0..n {
                m[r][c] += phi[r] * phi[c];
            }
            m[r][n] += phi[r] * x * x;
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    (0..n).map(|r| m[r][n] / m[r][r]).collect()
}

/// Penalty for a `q1 x q2`-cell target centered on a region whose period is
/// `grid` cells. `bandwidth` (odd, >= 3) bounds the coefficients per axis.
pub fn penalty_spectrum(q1: f64, q2: f64, bandwidth: usize, grid: (usize, usize)) -> Result<PenaltySpectrum> {
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(Error::invalid(format!(
            "penalty target size {q1}x{q2} must be positive"
        )));
    }
    if bandwidth < 3 || bandwidth % 2 == 0 {
        return Err(Error::invalid(format!(
            "penalty bandwidth {bandwidth} must be odd and >= 3"
        )));
    }
    if grid.0 == 0 || grid.1 == 0 {
        return Err(Error::invalid("penalty grid must be nonempty"));
    }
    let half = bandwidth / 2;
    let axis = |q: f64, period: usize| -> Vec<f64> {
        let a = quadratic_harmonics(half, period as f64, q);
        let scale = PENALTY_SLOPE / (q * q);
        // series coefficients of scale * sum a_m (1 - cos m theta), k = 0..=half
        let mut out = vec![scale * a.iter().sum::<f64>()];
        out.extend(a.iter().map(|am| -scale * am / 2.0));
        out
    };
    let rows = axis(q1, grid.0);
    let cols = axis(q2, grid.1);
    let mut coefficients = Grid::zeros(bandwidth, bandwidth);
    coefficients[(half, half)] = Complex64::new(PENALTY_FLOOR + rows[0] + cols[0], 0.0);
    for k in 1..=half {
        coefficients[(half + k, half)] = Complex64::new(rows[k], 0.0);
        coefficients[(half - k, half)] = Complex64::new(rows[k], 0.0);
        coefficients[(half, half + k)] = Complex64::new(cols[k], 0.0);
        coefficients[(half, half - k)] = Complex64::new(cols[k], 0.0);
    }
    Ok(PenaltySpectrum { coefficients, half })
}

impl PenaltySpectrum {
    /// Zero penalty (no regularization).
    pub fn zero() -> Self {
        PenaltySpectrum {
            coefficients: Grid::zeros(1, 1),
            half: 0,
        }
    }

    pub fn coefficients(&self) -> &Grid<Complex64> {
        &self.coefficients
    }

    pub fn bandwidth(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.as_slice().iter().all(|c| c.norm() == 0.0)
    }

    /// Continuous reconstruction at `(i, j)` cells from the region center.
    pub fn evaluate(&self, i: f64, j: f64, grid: (usize, usize)) -> f64 {
        let h = self.half as i64;
        let mut acc = Complex64::default();
        for k1 in -h..=h {
            for k2 in -h..=h {
                let c = self.coefficients[((k1 + h) as usize, (k2 + h) as usize)];
                let phase = 2.0 * PI * (k1 as f64 * i / grid.0 as f64 + k2 as f64 * j / grid.1 as f64);
                acc += c * Complex64::from_polar(1.0, phase);
            }
        }
        acc.re
    }

    /// Reconstruction sampled on the grid (index 0 = region center).
    pub fn spatial(&self, grid: (usize, usize)) -> RealGrid {
        RealGrid::from_fn(grid.0, grid.1, |r, c| {
            self.evaluate(signed_freq(r, grid.0) as f64, signed_freq(c, grid.1) as f64, grid)
        })
    }

    /// Circular convolution of filter coefficients with the penalty
    /// (multiplication by `p` in the spatial domain).
    pub fn apply(&self, h: &ComplexGrid) -> ComplexGrid {
        self.convolve(h, false)
    }

    pub fn apply_adjoint(&self, h: &ComplexGrid) -> ComplexGrid {
        self.convolve(h, true)
    }

    fn convolve(&self, h: &ComplexGrid, adjoint: bool) -> ComplexGrid {
        let (rows, cols) = h.shape();
        let half = self.half as i64;
        let taps: Vec<(i64, i64, Complex64)> = (-half..=half)
            .flat_map(|k1| (-half..=half).map(move |k2| (k1, k2)))
            .filter_map(|(k1, k2)| {
                let c = self.coefficients[((k1 + half) as usize, (k2 + half) as usize)];
                (c.norm() != 0.0).then_some((k1, k2, c))
            })
            .collect();
        let mut out = ComplexGrid::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let mut acc = Complex64::default();
                for &(k1, k2, p) in &taps {
                    // forward: sum_l P[l] H[k - l]; adjoint: sum_l conj(P[l]) H[k + l]
                    let (src, w) = if adjoint {
                        ((r as i64 + k1, c as i64 + k2), p.conj())
                    } else {
                        ((r as i64 - k1, c as i64 - k2), p)
                    };
                    acc += w * h[(freq_bin(src.0, rows), freq_bin(src.1, cols))];
                }
                out[(r, c)] = acc;
            }
        }
        out
    }
}
