use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::ComplexGrid;

use super::cg::LinearOperator;
use super::label::LabelSpectrum;
use super::penalty::PenaltySpectrum;
use super::spectrum::{conj_mul_acc, mul_acc, SampleSpectrum, SpectralFilter};

/// Left-hand side of the filter normal equations,
/// `A H = sum_i a_i B_i^H (B_i H) + P^H P H`, over weighted samples.
#[derive(Debug, Clone, Copy)]
pub struct NormalOperator<'a> {
    samples: &'a [SampleSpectrum],
    weights: &'a [f64],
    penalty: &'a PenaltySpectrum,
}

pub fn normal_operator<'a>(
    samples: &'a [SampleSpectrum],
    weights: &'a [f64],
    penalty: &'a PenaltySpectrum,
) -> Result<NormalOperator<'a>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("normal equations need at least one sample"))?;
    if samples.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} weights",
            samples.len(),
            weights.len()
        )));
    }
    if samples.iter().any(|s| !s.same_shape(first)) {
        return Err(Error::invalid("samples differ in channel count or grid"));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid("sample weights must be finite and nonnegative"));
    }
    Ok(NormalOperator {
        samples,
        weights,
        penalty,
    })
}

impl<'a> NormalOperator<'a> {
    pub fn channel_count(&self) -> usize {
        self.samples[0].channel_count()
    }

    pub fn grid(&self) -> (usize, usize) {
        self.samples[0].grid()
    }

    pub fn penalty(&self) -> &PenaltySpectrum {
        self.penalty
    }

    /// Filter response `sum_j B_ij H_j` of one sample.
    pub fn response(sample: &SampleSpectrum, filter: &SpectralFilter) -> ComplexGrid {
        let (rows, cols) = sample.grid();
        let mut out = ComplexGrid::zeros(rows, cols);
        for (b, h) in sample.channels().iter().zip(filter.channels()) {
            mul_acc(out.as_mut_slice(), b.as_slice(), h.as_slice());
        }
        out
    }

    /// Right-hand side `sum_i a_i B_ij^H Y`.
    pub fn rhs(&self, label: &LabelSpectrum) -> Result<SpectralFilter> {
        if label.grid() != self.grid() {
            return Err(Error::invalid(format!(
                "label grid {:?} does not match sample grid {:?}",
                label.grid(),
                self.grid()
            )));
        }
        let y = label.coefficients.as_slice();
        Ok(self.back_project(|_| y))
    }

    fn back_project<'y>(&self, residual: impl Fn(usize) -> &'y [Complex64] + Sync) -> SpectralFilter {
        let (rows, cols) = self.grid();
        let channels = (0..self.channel_count())
            .into_par_iter()
            .map(|j| {
                let mut acc = ComplexGrid::zeros(rows, cols);
                for (i, (sample, &w)) in self.samples.iter().zip(self.weights).enumerate() {
                    if w != 0.0 {
                        conj_mul_acc(acc.as_mut_slice(), sample.channels()[j].as_slice(), residual(i), w);
                    }
                }
                acc
            })
            .collect();
        SpectralFilter::new(channels).expect("channels share the sample grid")
    }
}

impl<'a> LinearOperator for NormalOperator<'a> {
    type Vector = SpectralFilter;

    fn apply(&self, x: &SpectralFilter) -> SpectralFilter {
        let responses: Vec<ComplexGrid> = self
            .samples
            .par_iter()
            .map(|s| NormalOperator::response(s, x))
            .collect();
        let mut out = self.back_project(|i| responses[i].as_slice());
        if !self.penalty.is_zero() {
            out.channels_mut().par_iter_mut().zip(x.channels()).for_each(|(o, h)| {
                let reg = self.penalty.apply_adjoint(&self.penalty.apply(h));
                for (u, v) in o.as_mut_slice().iter_mut().zip(reg.as_slice()) {
                    *u += v;
                }
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_core::cg::KrylovVector;
    use crate::filter_core::label::gaussian_label;
    use crate::filter_core::penalty::penalty_spectrum;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spectra(rng: &mut ChaCha8Rng, channels: usize, grid: (usize, usize)) -> SampleSpectrum {
        SampleSpectrum::new(
            (0..channels)
                .map(|_| {
                    ComplexGrid::from_fn(grid.0, grid.1, |_, _| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                })
                .collect(),
        )
        .unwrap()
    }

    fn flatten(x: &SpectralFilter) -> DVector<Complex64> {
        DVector::from_iterator(
            x.channel_count() * x.grid().0 * x.grid().1,
            x.channels().iter().flat_map(|c| c.as_slice().iter().cloned()),
        )
    }

    /// Dense `A` built entry by entry from the sample and penalty definitions.
    fn dense_matrix(samples: &[SampleSpectrum], weights: &[f64], penalty: &PenaltySpectrum) -> DMatrix<Complex64> {
        let (rows, cols) = samples[0].grid();
        let n = rows * cols;
        let channels = samples[0].channel_count();
        let dim = channels * n;
        let mut a = DMatrix::<Complex64>::zeros(dim, dim);
        for (s, &w) in samples.iter().zip(weights) {
            let mut b = DMatrix::<Complex64>::zeros(n, dim);
            for (j, ch) in s.channels().iter().enumerate() {
                for k in 0..n {
                    b[(k, j * n + k)] = ch.as_slice()[k];
                }
            }
            a += b.adjoint() * &b * Complex64::new(w, 0.0);
        }
        // penalty convolution matrix: (P h)[k] = sum_l P[l] h[k - l]
        let bw = penalty.bandwidth() as i64;
        let half = bw / 2;
        let mut p = DMatrix::<Complex64>::zeros(n, n);
        for r in 0..rows as i64 {
            for c in 0..cols as i64 {
                for l1 in -half..=half {
                    for l2 in -half..=half {
                        let coef = penalty.coefficients()[((l1 + half) as usize, (l2 + half) as usize)];
                        let sr = (r - l1).rem_euclid(rows as i64);
                        let sc = (c - l2).rem_euclid(cols as i64);
                        p[((r * cols as i64 + c) as usize, (sr * cols as i64 + sc) as usize)] += coef;
                    }
                }
            }
        }
        let php = p.adjoint() * p;
        for j in 0..channels {
            let mut view = a.view_mut((j * n, j * n), (n, n));
            view += &php;
        }
        a
    }

    #[test]
    fn matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = (6, 5);
        let samples: Vec<_> = (0..3).map(|_| random_spectra(&mut rng, 2, grid)).collect();
        let weights = vec![0.5, 0.3, 0.2];
        let penalty = penalty_spectrum(2.0, 1.5, 5, grid).unwrap();
        let op = normal_operator(&samples, &weights, &penalty).unwrap();
        let dense = dense_matrix(&samples, &weights, &penalty);
        let x = random_spectra(&mut rng, 2, grid);
        let got = flatten(&op.apply(&x));
        let expected = &dense * flatten(&x);
        assert!((got - expected).norm() < 1e-10);
    }

    #[test]
    fn rhs_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = (8, 8);
        let samples: Vec<_> = (0..2).map(|_| random_spectra(&mut rng, 3, grid)).collect();
        let weights = vec![0.25, 0.75];
        let penalty = PenaltySpectrum::zero();
        let label = gaussian_label(grid, (3.0, 3.0)).unwrap();
        let op = normal_operator(&samples, &weights, &penalty).unwrap();
        let rhs = op.rhs(&label).unwrap();
        for j in 0..3 {
            for k in 0..64 {
                let mut expected = Complex64::default();
                for (s, w) in samples.iter().zip(&weights) {
                    expected += s.channels()[j].as_slice()[k].conj() * label.coefficients.as_slice()[k] * w;
                }
                assert!((rhs.channels()[j].as_slice()[k] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn self_adjoint_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = (7, 6);
        let samples: Vec<_> = (0..4).map(|_| random_spectra(&mut rng, 3, grid)).collect();
        let weights = vec![0.1, 0.2, 0.3, 0.4];
        let penalty = penalty_spectrum(3.0, 2.0, 5, grid).unwrap();
        let op = normal_operator(&samples, &weights, &penalty).unwrap();
        for _ in 0..10 {
            let x = random_spectra(&mut rng, 3, grid);
            let y = random_spectra(&mut rng, 3, grid);
            let lhs = x.dot(&op.apply(&y));
            let rhs = op.apply(&x).dot(&y);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
            assert!(x.dot(&op.apply(&x)) >= 0.0);
        }
    }

    #[test]
    fn sample_order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let grid = (5, 5);
        let samples: Vec<_> = (0..3).map(|_| random_spectra(&mut rng, 2, grid)).collect();
        let weights = vec![0.2, 0.5, 0.3];
        let reversed: Vec<_> = samples.iter().rev().cloned().collect();
        let rweights: Vec<_> = weights.iter().rev().cloned().collect();
        let penalty = penalty_spectrum(2.0, 2.0, 3, grid).unwrap();
        let x = random_spectra(&mut rng, 2, grid);
        let a = normal_operator(&samples, &weights, &penalty).unwrap().apply(&x);
        let b = normal_operator(&reversed, &rweights, &penalty).unwrap().apply(&x);
        assert!(a.lincomb(1.0, &b, -1.0).norm_sqr().sqrt() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_spectra(&mut rng, 2, (4, 4));
        let b = random_spectra(&mut rng, 3, (4, 4));
        let penalty = PenaltySpectrum::zero();
        assert!(normal_operator(&[], &[], &penalty).is_err());
        assert!(normal_operator(&[a.clone()], &[1.0, 2.0], &penalty).is_err());
        assert!(normal_operator(&[a.clone(), b], &[0.5, 0.5], &penalty).is_err());
        assert!(normal_operator(&[a], &[-1.0], &penalty).is_err());
    }
}
