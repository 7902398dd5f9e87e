use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{fft2_real, ifft2, signed_freq, ComplexGrid, RealGrid};
use crate::filter_core::{SampleSpectrum, SpectralFilter};

const NEWTON_ITERATIONS: usize = 5;

/// Real confidence map over the search-region grid; index 0 is the region
/// center.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    values: RealGrid,
    max_position: (usize, usize),
    max_value: f64,
}

impl ScoreGrid {
    pub fn new(values: RealGrid) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("score grid is empty"));
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::data("score grid contains non-finite values"));
        }
        let (r, c, v) = values.max_position();
        Ok(ScoreGrid {
            values,
            max_position: (r, c),
            max_value: v,
        })
    }

    pub fn values(&self) -> &RealGrid {
        &self.values
    }

    pub fn max_position(&self) -> (usize, usize) {
        self.max_position
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

/// Inverse transform of `sum_j H_j T_j`; the imaginary residue is dropped.
pub fn confidence_map(filter: &SpectralFilter, test: &SampleSpectrum) -> Result<ScoreGrid> {
    if !filter.same_shape(test) {
        return Err(Error::invalid(format!(
            "filter has {} channels on {:?}, test sample {} on {:?}",
            filter.channel_count(),
            filter.grid(),
            test.channel_count(),
            test.grid()
        )));
    }
    let (rows, cols) = filter.grid();
    let mut acc = ComplexGrid::zeros(rows, cols);
    for (h, t) in filter.channels().iter().zip(test.channels()) {
        for ((o, a), b) in acc.as_mut_slice().iter_mut().zip(h.as_slice()).zip(t.as_slice()) {
            *o += a * b;
        }
    }
    ScoreGrid::new(ifft2(&acc).map(|v| v.re))
}

/// Sub-grid peak of a score map, in cells from the region center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub dy: f64,
    pub dx: f64,
    pub value: f64,
}

/// Per-axis Fourier basis of the trigonometric interpolant. The Nyquist bin
/// of an even axis is a cosine so the interpolant stays real.
struct AxisBasis {
    omega: Vec<f64>,
    nyquist: Option<usize>,
}

impl AxisBasis {
    fn new(n: usize) -> Self {
        let omega = (0..n).map(|k| 2.0 * PI * signed_freq(k, n) as f64 / n as f64).collect();
        let nyquist = (n % 2 == 0).then_some(n / 2);
        AxisBasis { omega, nyquist }
    }

    /// Value, first and second derivative of every basis function at `t`.
    fn eval(&self, t: f64) -> Vec<[Complex64; 3]> {
        self.omega
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                if Some(k) == self.nyquist {
                    let (s, c) = (w * t).sin_cos();
                    [
                        Complex64::new(c, 0.0),
                        Complex64::new(-w * s, 0.0),
                        Complex64::new(-w * w * c, 0.0),
                    ]
                } else {
                    let e = Complex64::from_polar(1.0, w * t);
                    let i = Complex64::new(0.0, 1.0);
                    [e, e * i * w, -e * w * w]
                }
            })
            .collect()
    }
}

/// Trigonometric interpolant of a real grid with analytic derivatives.
pub struct Interpolant {
    coefficients: ComplexGrid,
    rows: AxisBasis,
    cols: AxisBasis,
}

impl Interpolant {
    pub fn new(values: &RealGrid) -> Self {
        let (n1, n2) = values.shape();
        let n = (n1 * n2) as f64;
        let coefficients = fft2_real(values).map(|v| v / n);
        Interpolant {
            coefficients,
            rows: AxisBasis::new(n1),
            cols: AxisBasis::new(n2),
        }
    }

    /// `(f, [f_y, f_x], [f_yy, f_yx, f_xx])` at `(y, x)` in cells.
    pub fn eval(&self, y: f64, x: f64) -> (f64, [f64; 2], [f64; 3]) {
        let by = self.rows.eval(y);
        let bx = self.cols.eval(x);
        let (n1, n2) = self.coefficients.shape();
        let mut acc = [Complex64::default(); 6];
        for a in 0..n1 {
            // inner sums over columns for value, d/dx, d2/dx2
            let mut inner = [Complex64::default(); 3];
            for b in 0..n2 {
                let c = self.coefficients[(a, b)];
                for d in 0..3 {
                    inner[d] += c * bx[b][d];
                }
            }
            acc[0] += by[a][0] * inner[0];
            acc[1] += by[a][1] * inner[0];
            acc[2] += by[a][0] * inner[1];
            acc[3] += by[a][2] * inner[0];
            acc[4] += by[a][1] * inner[1];
            acc[5] += by[a][0] * inner[2];
        }
        (acc[0].re, [acc[1].re, acc[2].re], [acc[3].re, acc[4].re, acc[5].re])
    }

    pub fn value(&self, y: f64, x: f64) -> f64 {
        self.eval(y, x).0
    }
}

fn wrap(v: f64, n: usize) -> f64 {
    let n = n as f64;
    let w = v.rem_euclid(n);
    if w >= n / 2.0 {
        w - n
    } else {
        w
    }
}

/// Grid argmax refined by Newton steps on the trigonometric interpolant.
/// Steps are clamped to one cell and refinement stops where the Hessian is
/// not negative definite.
pub fn localize(score: &ScoreGrid) -> Result<Peak> {
    let (n1, n2) = score.shape();
    if n1 < 3 || n2 < 3 {
        return Err(Error::invalid(format!(
            "localization needs at least a 3x3 grid, got {n1}x{n2}"
        )));
    }
    let (r, c) = score.max_position();
    let mut y = signed_freq(r, n1) as f64;
    let mut x = signed_freq(c, n2) as f64;
    let interp = Interpolant::new(score.values());
    let (mut best, _, _) = interp.eval(y, x);
    let (start_y, start_x) = (y, x);
    for _ in 0..NEWTON_ITERATIONS {
        let (_, g, h) = interp.eval(y, x);
        let det = h[0] * h[2] - h[1] * h[1];
        if !(h[0] < 0.0 && det > 0.0) {
            break;
        }
        let sy = -(h[2] * g[0] - h[1] * g[1]) / det;
        let sx = -(-h[1] * g[0] + h[0] * g[1]) / det;
        let (ny, nx) = (y + sy.clamp(-1.0, 1.0), x + sx.clamp(-1.0, 1.0));
        let v = interp.value(ny, nx);
        if !v.is_finite() {
            return Err(Error::data("non-finite value while refining the score peak"));
        }
        if v < best {
            break;
        }
        best = v;
        y = ny;
        x = nx;
        if sy.abs() < 1e-12 && sx.abs() < 1e-12 {
            break;
        }
    }
    // never wander further than one cell from the grid maximum
    if (y - start_y).abs() > 1.0 || (x - start_x).abs() > 1.0 {
        y = start_y;
        x = start_x;
        best = interp.value(y, x);
    }
    Ok(Peak {
        dy: wrap(y, n1),
        dx: wrap(x, n2),
        value: best,
    })
}
