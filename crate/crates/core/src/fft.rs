//! Dense 2-D complex grids and FFT helpers.
//!
//! Grids are row-major. Spectra use the standard DFT bin order; bin `k`
//! along an axis of length `n` carries signed frequency [`signed_freq`]`(k, n)`,
//! so for even `n` bin `n / 2` is the (self-conjugate) Nyquist bin.

use std::cell::RefCell;
use std::ops::{Index, IndexMut};

pub use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Signed frequency of DFT bin `idx` on an axis of length `n`.
pub fn signed_freq(idx: usize, n: usize) -> i64 {
    if idx <= (n - 1) / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// DFT bin holding signed frequency `k` on an axis of length `n`.
pub fn freq_bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type ComplexGrid = Grid<Complex64>;
pub type RealGrid = Grid<f64>;

impl<T: Clone + Default> Grid<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "grid data length mismatch");
        Grid { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

impl RealGrid {
    pub fn to_complex(&self) -> ComplexGrid {
        self.map(|&v| Complex64::new(v, 0.0))
    }

    pub fn max_position(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self[(r, c)];
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        best
    }
}

fn transform(grid: &mut ComplexGrid, inverse: bool) {
    let (rows, cols) = grid.shape();
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let (row_fft, col_fft) = if inverse {
            (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
        } else {
            (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
        };
        row_fft.process(grid.as_mut_slice());
        let mut column = vec![Complex64::default(); rows];
        for c in 0..cols {
            for r in 0..rows {
                column[r] = grid[(r, c)];
            }
            col_fft.process(&mut column);
            for r in 0..rows {
                grid[(r, c)] = column[r];
            }
        }
    });
}

/// Unnormalized forward DFT.
pub fn fft2(grid: &ComplexGrid) -> ComplexGrid {
    let mut out = grid.clone();
    transform(&mut out, false);
    out
}

pub fn fft2_real(grid: &RealGrid) -> ComplexGrid {
    fft2(&grid.to_complex())
}

/// Inverse DFT including the `1 / (rows * cols)` factor.
pub fn ifft2(spectrum: &ComplexGrid) -> ComplexGrid {
    let mut out = spectrum.clone();
    transform(&mut out, true);
    let scale = 1.0 / out.len() as f64;
    out.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    out
}

/// Inverse DFT keeping the real part.
pub fn ifft2_real(spectrum: &ComplexGrid) -> RealGrid {
    ifft2(spectrum).map(|v| v.re)
}

pub fn fft1(data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(out.len()).process(&mut out));
    out
}

pub fn ifft1(data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(out.len()).process(&mut out));
    let scale = 1.0 / out.len() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Largest deviation from `X[-k] = conj(X[k])`.
pub fn hermitian_defect(spectrum: &ComplexGrid) -> f64 {
    let (rows, cols) = spectrum.shape();
    let mut worst = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            let mirror = spectrum[((rows - r) % rows, (cols - c) % cols)];
            worst = worst.max((spectrum[(r, c)] - mirror.conj()).norm());
        }
    }
    worst
}
