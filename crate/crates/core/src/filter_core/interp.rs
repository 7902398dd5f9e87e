use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::fft::{fft2, signed_freq, ComplexGrid, Grid};

use super::spectrum::SampleSpectrum;

/// Fourier transform of the cardinal cubic spline (the interpolating cubic
/// B-spline) at frequency `xi` in cycles per sample.
pub fn cubic_spline_transform(xi: f64) -> f64 {
    let sinc = if xi == 0.0 { 1.0 } else { (PI * xi).sin() / (PI * xi) };
    sinc.powi(4) / (2.0 / 3.0 + (2.0 * PI * xi).cos() / 3.0)
}

/// One axis of the kernel: for each common-grid bin, the channel DFT bins it
/// reads and their complex weights.
#[derive(Debug, Clone, PartialEq)]
struct AxisKernel {
    resolution: usize,
    taps: Vec<Vec<(usize, Complex64)>>,
}

impl AxisKernel {
    fn new(resolution: usize, grid: usize) -> Self {
        let r = resolution as f64;
        let n = grid as f64;
        // cell m of the channel sits at (m + 1/2) / R - 1/2 of the period,
        // common-grid sample 0 at the region center
        let coefficient = |k: i64| {
            let k = k as f64;
            let phase = -PI * k / r + PI * k;
            Complex64::from_polar(n / r * cubic_spline_transform(k / r), phase)
        };
        let taps = (0..grid)
            .map(|bin| {
                let k = signed_freq(bin, grid);
                let src = |k: i64| k.rem_euclid(resolution as i64) as usize;
                if grid % 2 == 0 && k == -(grid as i64) / 2 {
                    // Nyquist bin of an even grid: average of +k and -k keeps the
                    // reconstruction real
                    vec![(src(k), coefficient(k) * 0.5), (src(-k), coefficient(-k) * 0.5)]
                } else {
                    vec![(src(k), coefficient(k))]
                }
            })
            .collect();
        AxisKernel { resolution, taps }
    }

    fn gain(&self, bin: usize) -> Complex64 {
        self.taps[bin].iter().map(|(_, w)| w).sum()
    }
}

/// Separable cubic-spline interpolation kernel lifting an `R1 x R2` channel
/// onto the common `N1 x N2` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpKernel {
    rows: AxisKernel,
    cols: AxisKernel,
}

pub fn interp_kernel(resolution: (usize, usize), grid: (usize, usize)) -> Result<InterpKernel> {
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(Error::invalid(format!(
            "interpolation needs at least 2x2 cells, got {resolution:?}"
        )));
    }
    if grid.0 < resolution.0 || grid.1 < resolution.1 {
        return Err(Error::invalid(format!(
            "common grid {grid:?} is coarser than channel {resolution:?}"
        )));
    }
    Ok(InterpKernel {
        rows: AxisKernel::new(resolution.0, grid.0),
        cols: AxisKernel::new(resolution.1, grid.1),
    })
}

impl InterpKernel {
    pub fn resolution(&self) -> (usize, usize) {
        (self.rows.resolution, self.cols.resolution)
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.rows.taps.len(), self.cols.taps.len())
    }

    /// Kernel coefficients `K[k]` on the common grid (the projection of a
    /// unit impulse at channel cell 0).
    pub fn coefficients(&self) -> ComplexGrid {
        let (n1, n2) = self.grid();
        let row_gain: Vec<Complex64> = (0..n1).map(|b| self.rows.gain(b)).collect();
        let col_gain: Vec<Complex64> = (0..n2).map(|b| self.cols.gain(b)).collect();
        Grid::from_fn(n1, n2, |a, b| row_gain[a] * col_gain[b])
    }

    /// Lifts the DFT of one channel onto the common grid.
    pub fn lift(&self, channel_dft: &ComplexGrid) -> ComplexGrid {
        let (r1, r2) = self.resolution();
        let (n1, n2) = self.grid();
        assert_eq!(
            channel_dft.shape(),
            (r1, r2),
            "channel does not match kernel resolution"
        );
        let mut partial = ComplexGrid::zeros(r1, n2);
        for a in 0..r1 {
            for (b, taps) in self.cols.taps.iter().enumerate() {
                partial[(a, b)] = taps.iter().map(|&(src, w)| channel_dft[(a, src)] * w).sum();
            }
        }
        let mut out = ComplexGrid::zeros(n1, n2);
        for (a, taps) in self.rows.taps.iter().enumerate() {
            for &(src, w) in taps {
                for b in 0..n2 {
                    out[(a, b)] += partial[(src, b)] * w;
                }
            }
        }
        out
    }
}

/// Kernels for every block resolution of a stack, all on one common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    grid: (usize, usize),
    kernels: Vec<InterpKernel>,
}

impl KernelBank {
    pub fn new(grid: (usize, usize), resolutions: &[(usize, usize)]) -> Result<Self> {
        let mut kernels: Vec<InterpKernel> = Vec::new();
        for &res in resolutions {
            if !kernels.iter().any(|k| k.resolution() == res) {
                kernels.push(interp_kernel(res, grid)?);
            }
        }
        Ok(KernelBank { grid, kernels })
    }

    /// Common grid = finest resolution per axis.
    pub fn for_stack(stack: &FeatureStack) -> Result<Self> {
        let resolutions: Vec<_> = stack.blocks().iter().map(|b| b.resolution()).collect();
        KernelBank::new(stack.max_resolution(), &resolutions)
    }

    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn get(&self, resolution: (usize, usize)) -> Option<&InterpKernel> {
        self.kernels.iter().find(|k| k.resolution() == resolution)
    }
}

/// Per-channel common-domain spectra `F^j K_j` of a weighted stack.
pub fn project_sample(weighted: &FeatureStack, kernels: &KernelBank) -> Result<SampleSpectrum> {
    use rayon::prelude::*;

    let per_block: Vec<&InterpKernel> = weighted
        .blocks()
        .iter()
        .map(|b| {
            kernels.get(b.resolution()).ok_or_else(|| {
                Error::config(format!(
                    "no interpolation kernel for block {:?} at resolution {:?}",
                    b.name(),
                    b.resolution()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let channels: Vec<_> = weighted.channels().collect();
    let spectra = channels
        .par_iter()
        .map(|(block, ch)| {
            let dft = fft2(&ch.map(|&v| Complex64::new(v as f64, 0.0)));
            per_block[*block].lift(&dft)
        })
        .collect();
    SampleSpectrum::new(spectra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{fuse, FeatureBlock, Provenance};
    use crate::fft::{hermitian_defect, ifft2_real};
    use rand::{Rng, SeedableRng};

    fn stack_of(channels: Vec<Grid<f32>>) -> FeatureStack {
        fuse(vec![
            FeatureBlock::new("f", channels, 1.0, Provenance::Precomputed).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn spline_transform_basics() {
        assert_eq!(cubic_spline_transform(0.0), 1.0);
        assert!(cubic_spline_transform(1.0).abs() < 1e-15);
        // interpolating: aliases sum to one
        for xi in [0.1, 0.25, 0.4] {
            let s: f64 = (-40..=40).map(|l| cubic_spline_transform(xi + l as f64)).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn kernel_shape_properties() {
        for (res, grid) in [((8, 8), (8, 8)), ((5, 6), (11, 16)), ((4, 7), (9, 7))] {
            let k = interp_kernel(res, grid).unwrap();
            let coeffs = k.coefficients();
            let dc = coeffs[(0, 0)].norm();
            assert!(dc > 0.0);
            assert!(coeffs.as_slice().iter().all(|c| c.norm() <= dc + 1e-12));
            assert!(hermitian_defect(&coeffs) < 1e-12);
        }
        assert!(interp_kernel((1, 4), (4, 4)).is_err());
        assert!(interp_kernel((8, 8), (4, 8)).is_err());
    }

    #[test]
    fn zero_and_impulse() {
        let bank = KernelBank::new((9, 9), &[(6, 6)]).unwrap();
        let zero = project_sample(&stack_of(vec![Grid::zeros(6, 6)]), &bank).unwrap();
        assert!(zero.channels()[0].as_slice().iter().all(|v| v.norm() == 0.0));

        let mut impulse = Grid::<f32>::zeros(6, 6);
        impulse[(0, 0)] = 1.0;
        let spec = project_sample(&stack_of(vec![impulse]), &bank).unwrap();
        let expected = bank.get((6, 6)).unwrap().coefficients();
        for (a, b) in spec.channels()[0].as_slice().iter().zip(expected.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn missing_kernel_is_config_error() {
        let bank = KernelBank::new((8, 8), &[(8, 8)]).unwrap();
        let res = project_sample(&stack_of(vec![Grid::zeros(4, 4)]), &bank);
        assert!(matches!(res, Err(Error::Config(_))));
    }

    /// Dense evaluation of the continuous model: cell `m` at
    /// `(m + 1/2) / R - 1/2` of the period, spline-weighted Fourier
    /// coefficients sampled on the common grid.
    fn dense_projection(x: &Grid<f32>, grid: (usize, usize)) -> ComplexGrid {
        let (r1, r2) = x.shape();
        let axis = |k: f64, m: usize, r: usize, n: usize| {
            let pos = (m as f64 + 0.5) / r as f64 - 0.5;
            Complex64::from_polar(
                n as f64 / r as f64 * cubic_spline_transform(k / r as f64),
                -2.0 * PI * k * pos,
            )
        };
        let freqs = |bin: usize, n: usize| -> Vec<(f64, f64)> {
            let k = signed_freq(bin, n) as f64;
            if n % 2 == 0 && bin == n / 2 {
                vec![(k, 0.5), (-k, 0.5)]
            } else {
                vec![(k, 1.0)]
            }
        };
        Grid::from_fn(grid.0, grid.1, |b1, b2| {
            let mut acc = Complex64::default();
            for &(k1, w1) in &freqs(b1, grid.0) {
                for &(k2, w2) in &freqs(b2, grid.1) {
                    for m1 in 0..r1 {
                        for m2 in 0..r2 {
                            acc += axis(k1, m1, r1, grid.0) * axis(k2, m2, r2, grid.1) * (x[(m1, m2)] as f64 * w1 * w2);
                        }
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn matches_dense_construction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for res in [(16, 16), (8, 8), (7, 10)] {
            let chans: Vec<Grid<f32>> = (0..2)
                .map(|_| Grid::from_fn(res.0, res.1, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let bank = KernelBank::new((16, 16), &[res]).unwrap();
            let spec = project_sample(&stack_of(chans.clone()), &bank).unwrap();
            for (c, ch) in chans.iter().enumerate() {
                let dense = dense_projection(ch, (16, 16));
                for (a, b) in spec.channels()[c].as_slice().iter().zip(dense.as_slice()) {
                    assert!((a - b).norm() < 1e-9, "res {res:?}: {a} vs {b}");
                }
                assert!(hermitian_defect(&spec.channels()[c]) < 1e-10);
            }
        }
    }

    #[test]
    fn resolutions_agree_on_smooth_signal() {
        // periodic Gaussian sampled at each channel's cell centers
        let signal = |u: f64, v: f64| {
            let wrap = |t: f64| t - t.round();
            (-(wrap(u).powi(2) + wrap(v).powi(2)) / (2.0 * 0.12f64.powi(2))).exp()
        };
        let sample = |r: usize| {
            Grid::from_fn(r, r, |m1, m2| {
                signal((m1 as f64 + 0.5) / r as f64 - 0.5, (m2 as f64 + 0.5) / r as f64 - 0.5) as f32
            })
        };
        let grid = (32, 32);
        let bank = KernelBank::new(grid, &[(32, 32), (16, 16)]).unwrap();
        let fine = ifft2_real(&project_sample(&stack_of(vec![sample(32)]), &bank).unwrap().channels()[0]);
        let coarse = ifft2_real(&project_sample(&stack_of(vec![sample(16)]), &bank).unwrap().channels()[0]);
        let diff: f64 = fine
            .as_slice()
            .iter()
            .zip(coarse.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let energy: f64 = fine.as_slice().iter().map(|a| a * a).sum();
        let rel = (diff / energy).sqrt();
        assert!(rel < 0.02, "relative RMS difference {rel}");
    }
}
