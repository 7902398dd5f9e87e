//! Continuous-domain filter learning.
//!
//! All spectra live on one common grid (the finest block resolution), in DFT
//! bin order with signed frequencies measured against the search-region
//! period. Grid index 0 corresponds to the region center. Per-resolution
//! interpolation kernels lift each channel onto that grid; the filter is
//! found by conjugate gradient on
//! `(sum_i a_i B_i^H B_i + P^H P) H = sum_i a_i B_i^H Y`.

mod cg;
mod interp;
mod label;
mod learn;
mod memory;
mod operator;
mod penalty;
mod spectrum;

pub use self::cg::{cg_solve, CgOutcome, KrylovVector, LinearOperator};
pub use self::interp::{cubic_spline_transform, interp_kernel, project_sample, InterpKernel, KernelBank};
pub use self::label::{gaussian_label, gaussian_label_with_sigma, LabelSpectrum, LABEL_SIGMA_FACTOR};
pub use self::learn::{learn, objective, update_filter, LearnOutcome};
pub use self::memory::{SampleMemory, DEFAULT_SAMPLE_CAPACITY};
pub use self::operator::{normal_operator, NormalOperator};
pub use self::penalty::{penalty_spectrum, PenaltySpectrum, PENALTY_BANDWIDTH};
pub use self::spectrum::{ChannelSpectra, SampleSpectrum, SpectralFilter};
