//! Continuous-domain discriminative correlation filter tracking.
//!
//! The engine learns multi-channel convolution filters over fused feature
//! blocks of different resolutions. Each block is weighted by a cosine window
//! and a semantic mask derived from segmentation scores, lifted into a common
//! continuous Fourier domain by a cubic-spline interpolation kernel, and fitted
//! to a Gaussian label by conjugate gradient on the regularized normal
//! equations. The [`bench`] module provides the one-pass evaluation harness
//! (precision, success and AUC) used to compare feature providers.

pub mod bench;
pub mod error;
pub mod features;
pub mod fft;
pub mod filter_core;
pub mod geometry;
pub mod semantic_window;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::BBox;
