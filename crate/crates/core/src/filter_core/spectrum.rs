use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{hermitian_defect, ComplexGrid};

use super::cg::KrylovVector;

/// Per-channel spectra on the common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpectra {
    channels: Vec<ComplexGrid>,
}

/// Filter coefficients `H^j`.
pub type SpectralFilter = ChannelSpectra;
/// One interpolated training or test sample (a row block of `B`).
pub type SampleSpectrum = ChannelSpectra;

impl ChannelSpectra {
    pub fn new(channels: Vec<ComplexGrid>) -> Result<Self> {
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.shape() != first.shape()) {
                return Err(Error::invalid("channel spectra must share one grid"));
            }
        }
        Ok(ChannelSpectra { channels })
    }

    pub fn zeros(channels: usize, rows: usize, cols: usize) -> Self {
        ChannelSpectra {
            channels: vec![ComplexGrid::zeros(rows, cols); channels],
        }
    }

    pub fn channels(&self) -> &[ComplexGrid] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [ComplexGrid] {
        &mut self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn grid(&self) -> (usize, usize) {
        self.channels.first().map_or((0, 0), ComplexGrid::shape)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.channel_count() == other.channel_count() && self.grid() == other.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.channels
            .iter()
            .all(|c| c.as_slice().iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.channels.iter().map(hermitian_defect).fold(0.0, f64::max)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dot(self)
    }

    /// Elementwise `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(x, y)| {
                let data = x
                    .as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(u, v)| u * a + v * b)
                    .collect();
                ComplexGrid::from_vec(x.rows(), x.cols(), data)
            })
            .collect();
        ChannelSpectra { channels }
    }
}

impl KrylovVector for ChannelSpectra {
    fn dot(&self, other: &Self) -> f64 {
        // per-channel partial sums, reduced in channel order
        let partial: Vec<f64> = self
            .channels
            .par_iter()
            .zip(&other.channels)
            .map(|(x, y)| {
                x.as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(u, v)| u.re * v.re + u.im * v.im)
                    .sum()
            })
            .collect();
        partial.iter().sum()
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.channels.par_iter_mut().zip(&x.channels).for_each(|(y, x)| {
            for (u, v) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
                *u += v * alpha;
            }
        });
    }

    fn scale(&mut self, alpha: f64) {
        self.channels
            .par_iter_mut()
            .for_each(|y| y.as_mut_slice().iter_mut().for_each(|u| *u *= alpha));
    }

    fn zeros_like(&self) -> Self {
        let (r, c) = self.grid();
        ChannelSpectra::zeros(self.channel_count(), r, c)
    }
}

pub(crate) fn mul_acc(acc: &mut [Complex64], a: &[Complex64], b: &[Complex64]) {
    for ((o, x), y) in acc.iter_mut().zip(a).zip(b) {
        *o += x * y;
    }
}

pub(crate) fn conj_mul_acc(acc: &mut [Complex64], a: &[Complex64], b: &[Complex64], weight: f64) {
    for ((o, x), y) in acc.iter_mut().zip(a).zip(b) {
        *o += x.conj() * y * weight;
    }
}
