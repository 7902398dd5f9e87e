use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_region, hog_features, Image};
use crate::fft::{fft1, ifft1};

/// One-dimensional correlation filter over a pyramid of scaled HOG patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleParams {
    /// Number of candidate scales (odd).
    pub count: usize,
    /// Relative factor between neighbouring candidates.
    pub step: f64,
    pub learning_rate: f64,
    /// Width of the 1-D Gaussian label, in scale steps.
    pub sigma: f64,
    pub lambda: f64,
    /// Side of the normalized patch each candidate is resampled to.
    pub model_size: usize,
    pub cell: usize,
}

impl Default for ScaleParams {
    fn default() -> Self {
        ScaleParams {
            count: 17,
            step: 1.02,
            learning_rate: 0.025,
            sigma: 1.0,
            lambda: 0.01,
            model_size: 32,
            cell: 4,
        }
    }
}

impl ScaleParams {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || self.count % 2 == 0 {
            return Err(Error::config(format!("scale count {} must be odd", self.count)));
        }
        if !(self.step > 1.0) {
            return Err(Error::config(format!("scale step {} must exceed 1", self.step)));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::config("scale learning rate must lie in [0, 1]"));
        }
        if !(self.sigma > 0.0 && self.lambda > 0.0) {
            return Err(Error::config("scale sigma and lambda must be positive"));
        }
        if self.cell == 0 || self.model_size < 8 || self.model_size % self.cell != 0 {
            return Err(Error::config(format!(
                "scale model size {} must be >= 8 and a multiple of the cell {}",
                self.model_size, self.cell
            )));
        }
        Ok(())
    }
}

/// Relative candidate factors `step^k`, `k = -(count/2) ..= count/2`.
pub fn scale_factors(count: usize, step: f64) -> Vec<f64> {
    let half = (count / 2) as i32;
    (-half..=half).map(|k| step.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEstimate {
    /// Selected relative factor.
    pub factor: f64,
    /// Selected exponent `k`.
    pub step: i32,
    /// Filter response per candidate (`NEG_INFINITY` for excluded ones).
    pub responses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFilter {
    params: ScaleParams,
    factors: Vec<f64>,
    window: Vec<f64>,
    label: Vec<Complex64>,
    numerator: Vec<Vec<Complex64>>,
    denominator: Vec<f64>,
}

/// Per-candidate features (rows = feature dimension, columns = scales) and
/// the mask of candidates large enough to describe.
struct Pyramid {
    features: Vec<Vec<Complex64>>,
    valid: Vec<bool>,
}

impl ScaleFilter {
    pub fn new(params: ScaleParams) -> Result<Self> {
        params.validate()?;
        let n = params.count;
        let center = (n / 2) as f64;
        let label: Vec<Complex64> = (0..n)
            .map(|s| Complex64::new((-0.5 * (s as f64 - center).powi(2) / params.sigma.powi(2)).exp(), 0.0))
            .collect();
        // Hann taper whose end points stay nonzero
        let window = (0..n)
            .map(|s| 0.5 * (1.0 - (2.0 * PI * (s + 1) as f64 / (n + 1) as f64).cos()))
            .collect();
        Ok(ScaleFilter {
            factors: scale_factors(n, params.step),
            window,
            label: fft1(&label),
            numerator: Vec::new(),
            denominator: Vec::new(),
            params,
        })
    }

    pub fn params(&self) -> &ScaleParams {
        &self.params
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn is_trained(&self) -> bool {
        !self.denominator.is_empty()
    }

    fn pyramid(&self, frame: &Image, center: (f64, f64), size: (f64, f64)) -> Result<Pyramid> {
        let m = self.params.model_size;
        let cell = self.params.cell as f64;
        let n = self.factors.len();
        let mut columns: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
        for (s, &f) in self.factors.iter().enumerate() {
            let (w, h) = (size.0 * f, size.1 * f);
            if w < cell || h < cell {
                columns.push(None);
                continue;
            }
            let patch = extract_region(frame, center, (w, h), (m, m))?;
            let block = hog_features(&patch, self.params.cell)?;
            let col = block
                .channels()
                .iter()
                .flat_map(|c| c.as_slice().iter().map(|&v| v as f64 * self.window[s]))
                .collect();
            columns.push(Some(col));
        }
        let dim = columns
            .iter()
            .flatten()
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::invalid(format!("target {size:?} is too small for scale estimation")))?;
        let valid: Vec<bool> = columns.iter().map(Option::is_some).collect();
        let features = (0..dim)
            .map(|d| {
                let row: Vec<Complex64> = columns
                    .iter()
                    .map(|c| Complex64::new(c.as_ref().map_or(0.0, |c| c[d]), 0.0))
                    .collect();
                fft1(&row)
            })
            .collect();
        Ok(Pyramid { features, valid })
    }

    /// Trains on the pyramid around `center` for a target of `size` pixels
    /// (current scale applied), blending with the previous model.
    pub fn update(&mut self, frame: &Image, center: (f64, f64), size: (f64, f64)) -> Result<()> {
        let pyramid = self.pyramid(frame, center, size)?;
        let n = self.factors.len();
        let numerator: Vec<Vec<Complex64>> = pyramid
            .features
            .iter()
            .map(|f| f.iter().zip(&self.label).map(|(x, y)| y * x.conj()).collect())
            .collect();
        let mut denominator = vec![0.0; n];
        for f in &pyramid.features {
            for (d, x) in denominator.iter_mut().zip(f) {
                *d += x.norm_sqr();
            }
        }
        if self.is_trained() {
            let eta = self.params.learning_rate;
            for (old, new) in self.numerator.iter_mut().zip(&numerator) {
                for (o, v) in old.iter_mut().zip(new) {
                    *o = *o * (1.0 - eta) + v * eta;
                }
            }
            for (o, v) in self.denominator.iter_mut().zip(&denominator) {
                *o = *o * (1.0 - eta) + v * eta;
            }
        } else {
            self.numerator = numerator;
            self.denominator = denominator;
        }
        Ok(())
    }

    /// Best relative factor for a target of `size` pixels centered at `center`.
    pub fn estimate(&self, frame: &Image, center: (f64, f64), size: (f64, f64)) -> Result<ScaleEstimate> {
        if !self.is_trained() {
            return Err(Error::invalid("scale filter used before training"));
        }
        let pyramid = self.pyramid(frame, center, size)?;
        let n = self.factors.len();
        let mut spectrum = vec![Complex64::default(); n];
        for (num, z) in self.numerator.iter().zip(&pyramid.features) {
            for ((acc, a), b) in spectrum.iter_mut().zip(num).zip(z) {
                *acc += a * b;
            }
        }
        for (v, d) in spectrum.iter_mut().zip(&self.denominator) {
            *v /= d + self.params.lambda;
        }
        let responses: Vec<f64> = ifft1(&spectrum)
            .iter()
            .zip(&pyramid.valid)
            .map(|(r, &ok)| if ok { r.re } else { f64::NEG_INFINITY })
            .collect();
        if responses.iter().any(|r| r.is_nan()) {
            return Err(Error::data("scale filter response is not finite"));
        }
        let best = responses
            .iter()
            .enumerate()
            .fold(0, |best, (i, r)| if *r > responses[best] { i } else { best });
        Ok(ScaleEstimate {
            factor: self.factors[best],
            step: best as i32 - (n / 2) as i32,
            responses,
        })
    }
}
