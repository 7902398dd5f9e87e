use std::path::Path;

use crate::error::{Error, Result};
use crate::fft::Grid;

use super::{
    extract_patch, fuse, hog_features, load_precomputed, FeatureBlock, FeatureProviderConfig, FeatureStack, Image,
};

/// Square search region in frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub center: (f64, f64),
    pub side: f64,
}

/// Per-frame feature source. HOG is computed lazily per region; precomputed
/// maps are loaded once per frame and cropped per region.
#[derive(Debug)]
pub enum FrameFeatures<'a> {
    Hog { frame: &'a Image, cell: usize },
    Precomputed { stack: FeatureStack },
}

impl<'a> FrameFeatures<'a> {
    /// `frame_number` is 1-based, matching the FMAP file naming.
    pub fn prepare(cfg: &FeatureProviderConfig, frame: &'a Image, frame_number: usize) -> Result<Self> {
        match cfg {
            FeatureProviderConfig::Hog { cell } => Ok(FrameFeatures::Hog { frame, cell: *cell }),
            FeatureProviderConfig::Fmap { dir, .. } => Ok(FrameFeatures::Precomputed {
                stack: load_precomputed(Path::new(dir), frame_number, cfg)?,
            }),
        }
    }

    /// Native strides of the blocks this source produces, in frame pixels
    /// (HOG strides are in patch pixels).
    pub fn strides(&self) -> Vec<f32> {
        match self {
            FrameFeatures::Hog { cell, .. } => vec![*cell as f32],
            FrameFeatures::Precomputed { stack } => stack.blocks().iter().map(FeatureBlock::stride).collect(),
        }
    }

    /// Features of `region`. `grids` gives the output grid per block; for HOG
    /// the single entry fixes the patch size as `grid * cell`.
    pub fn sample(&self, region: &SearchRegion, grids: &[(usize, usize)]) -> Result<FeatureStack> {
        match self {
            FrameFeatures::Hog { frame, cell } => {
                let &[(rows, _)] = grids else {
                    return Err(Error::config("hog provider expects exactly one block grid"));
                };
                let patch = extract_patch(frame, region.center, region.side, rows * cell)?;
                fuse(vec![hog_features(&patch, *cell)?])
            }
            FrameFeatures::Precomputed { stack } => {
                if grids.len() != stack.blocks().len() {
                    return Err(Error::config(format!(
                        "expected {} feature blocks, frame provides {}",
                        grids.len(),
                        stack.blocks().len()
                    )));
                }
                let blocks = stack
                    .blocks()
                    .iter()
                    .zip(grids)
                    .map(|(b, &g)| crop_block(b, region, g))
                    .collect::<Result<Vec<_>>>()?;
                fuse(blocks)
            }
        }
    }
}

/// Bilinearly resamples a frame-aligned block onto a `grid` covering `region`.
/// Cell `(r, c)` of the source is centered at `((c + 0.5) * stride, (r + 0.5) * stride)`;
/// samples outside the map replicate the edge cells.
pub fn crop_block(block: &FeatureBlock, region: &SearchRegion, grid: (usize, usize)) -> Result<FeatureBlock> {
    let (rows, cols) = grid;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("crop grid must be nonempty"));
    }
    let stride = block.stride() as f64;
    let (src_rows, src_cols) = block.resolution();
    let axis = |n: usize, len: usize, center: f64, i: usize| -> (usize, usize, f32) {
        let pos = center + ((i as f64 + 0.5) / n as f64 - 0.5) * region.side;
        let f = (pos / stride - 0.5).clamp(0.0, (len - 1) as f64);
        let lo = f.floor() as usize;
        let hi = (lo + 1).min(len - 1);
        (lo, hi, (f - lo as f64) as f32)
    };
    let row_taps: Vec<_> = (0..rows).map(|i| axis(rows, src_rows, region.center.1, i)).collect();
    let col_taps: Vec<_> = (0..cols).map(|j| axis(cols, src_cols, region.center.0, j)).collect();
    let channels = block
        .channels()
        .iter()
        .map(|ch| {
            Grid::from_fn(rows, cols, |r, c| {
                let (r0, r1, ty) = row_taps[r];
                let (c0, c1, tx) = col_taps[c];
                let top = ch[(r0, c0)] + (ch[(r0, c1)] - ch[(r0, c0)]) * tx;
                let bottom = ch[(r1, c0)] + (ch[(r1, c1)] - ch[(r1, c0)]) * tx;
                top + (bottom - top) * ty
            })
        })
        .collect();
    FeatureBlock::new(
        block.name(),
        channels,
        (region.side / cols as f64) as f32,
        block.provenance(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Provenance;

    #[test]
    fn crop_aligned_window_is_exact() {
        let grid = Grid::from_fn(10, 12, |r, c| (r * 100 + c) as f32);
        let block = FeatureBlock::new("b", vec![grid.clone()], 4.0, Provenance::Precomputed).unwrap();
        // cells 2..6 x 3..7 span pixels [8, 24) x [12, 28)
        let region = SearchRegion {
            center: (20.0, 16.0),
            side: 16.0,
        };
        let out = crop_block(&block, &region, (4, 4)).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(out.channels()[0][(r, c)], grid[(r + 2, c + 3)]);
            }
        }
    }

    #[test]
    fn crop_replicates_edges() {
        let grid = Grid::from_fn(4, 4, |r, c| (r * 4 + c) as f32);
        let block = FeatureBlock::new("b", vec![grid.clone()], 1.0, Provenance::Precomputed).unwrap();
        let region = SearchRegion {
            center: (-10.0, -10.0),
            side: 4.0,
        };
        let out = crop_block(&block, &region, (3, 3)).unwrap();
        assert!(out.channels()[0].as_slice().iter().all(|&v| v == 0.0));
    }
}
