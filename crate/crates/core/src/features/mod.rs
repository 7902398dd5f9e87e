//! Patch sampling, feature extraction and feature fusion.

mod fmap;
mod hog;
mod image;
mod provider;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Grid;

pub use self::fmap::{fmap_file_name, load_precomputed, read_fmap, write_fmap, FMAP_MAGIC, FMAP_VERSION};
pub use self::hog::{hog_features, HOG_CHANNELS};
pub use self::image::{extract_patch, extract_region, Image, ImagePatch, SourceRect};
pub use self::provider::{crop_block, FrameFeatures, SearchRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Hog,
    Precomputed,
}

/// Named bank of equally shaped feature channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    name: String,
    channels: Vec<Grid<f32>>,
    stride: f32,
    provenance: Provenance,
}

impl FeatureBlock {
    pub fn new(name: impl Into<String>, channels: Vec<Grid<f32>>, stride: f32, provenance: Provenance) -> Result<Self> {
        let name = name.into();
        let Some(first) = channels.first() else {
            return Err(Error::invalid(format!("feature block {name:?} has no channels")));
        };
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::invalid(format!("feature block {name:?} has an empty grid")));
        }
        if let Some(bad) = channels.iter().position(|c| c.shape() != shape) {
            return Err(Error::invalid(format!(
                "feature block {name:?}: channel {bad} has shape {:?}, expected {shape:?}",
                channels[bad].shape()
            )));
        }
        if channels.iter().any(|c| c.as_slice().iter().any(|v| !v.is_finite())) {
            return Err(Error::data(format!(
                "feature block {name:?} contains non-finite values"
            )));
        }
        if !(stride.is_finite() && stride > 0.0) {
            return Err(Error::invalid(format!(
                "feature block {name:?} has invalid stride {stride}"
            )));
        }
        Ok(FeatureBlock {
            name,
            channels,
            stride,
            provenance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn channels(&self) -> &[Grid<f32>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Grid shape `(rows, cols)` shared by every channel.
    pub fn resolution(&self) -> (usize, usize) {
        self.channels[0].shape()
    }

    pub fn stride(&self) -> f32 {
        self.stride
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Applies `f(value, row, col)` to every channel value, keeping metadata.
    pub fn map_values(&self, mut f: impl FnMut(f32, usize, usize) -> f32) -> FeatureBlock {
        let (rows, cols) = self.resolution();
        let channels = self
            .channels
            .iter()
            .map(|ch| Grid::from_fn(rows, cols, |r, c| f(ch[(r, c)], r, c)))
            .collect();
        FeatureBlock {
            channels,
            ..self.clone()
        }
    }
}

/// Ordered multi-resolution feature bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    blocks: Vec<FeatureBlock>,
}

impl FeatureStack {
    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<FeatureBlock> {
        self.blocks
    }

    pub fn total_channels(&self) -> usize {
        self.blocks.iter().map(FeatureBlock::channel_count).sum()
    }

    pub fn block(&self, name: &str) -> Option<&FeatureBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Channels in fused order, tagged with the owning block index.
    pub fn channels(&self) -> impl Iterator<Item = (usize, &Grid<f32>)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.channels.iter().map(move |c| (i, c)))
    }

    /// Finest grid over all blocks, taken per axis.
    pub fn max_resolution(&self) -> (usize, usize) {
        self.blocks.iter().fold((0, 0), |(r, c), b| {
            let (br, bc) = b.resolution();
            (r.max(br), c.max(bc))
        })
    }
}

/// Concatenates blocks into one stack, keeping block and channel order.
pub fn fuse(blocks: Vec<FeatureBlock>) -> Result<FeatureStack> {
    if blocks.is_empty() {
        return Err(Error::invalid("cannot fuse an empty block list"));
    }
    let mut seen = HashSet::new();
    for b in &blocks {
        if !seen.insert(b.name.as_str()) {
            return Err(Error::invalid(format!("duplicate feature block name {:?}", b.name)));
        }
    }
    Ok(FeatureStack { blocks })
}

/// Expected layout of one precomputed block. Spatial dimensions are only
/// checked when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub channels: usize,
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub cols: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureProviderConfig {
    /// 31-channel HOG computed on the search patch.
    Hog {
        #[serde(default = "default_hog_cell")]
        cell: usize,
    },
    /// Per-frame FMAP files (`frame_%06d.fmap`) covering the whole frame.
    Fmap {
        dir: PathBuf,
        #[serde(default)]
        blocks: Vec<BlockSpec>,
        /// Block holding the 21 segmentation scores used for the semantic mask.
        #[serde(default)]
        semantic_block: Option<String>,
    },
}

fn default_hog_cell() -> usize {
    4
}

impl Default for FeatureProviderConfig {
    fn default() -> Self {
        FeatureProviderConfig::Hog { cell: 4 }
    }
}

impl FeatureProviderConfig {
    pub fn semantic_block(&self) -> Option<&str> {
        match self {
            FeatureProviderConfig::Hog { .. } => None,
            FeatureProviderConfig::Fmap { semantic_block, .. } => semantic_block.as_deref(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureProviderConfig::Hog { cell } if *cell == 0 => Err(Error::config("hog cell size must be positive")),
            FeatureProviderConfig::Fmap { dir, .. } if !dir.is_dir() => Err(Error::config(format!(
                "feature directory {} does not exist",
                dir.display()
            ))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(name: &str, channels: usize, base: f32) -> FeatureBlock {
        let chans = (0..channels)
            .map(|c| Grid::from_fn(3, 2, |r, k| base + c as f32 * 10.0 + (r * 2 + k) as f32))
            .collect();
        FeatureBlock::new(name, chans, 4.0, Provenance::Precomputed).unwrap()
    }

    fn sequence(stack: &FeatureStack) -> Vec<Vec<f32>> {
        stack.channels().map(|(_, c)| c.as_slice().to_vec()).collect()
    }

    #[test]
    fn fuse_orders_blocks() {
        let dense = block("densenet201_L3", 512, 0.0);
        let fcn = block("fcn8s_score", 21, 1000.0);
        let stack = fuse(vec![dense.clone(), fcn.clone()]).unwrap();
        assert_eq!(stack.total_channels(), 533);
        assert_eq!(stack.blocks()[0].name(), "densenet201_L3");
        let mut expected: Vec<Vec<f32>> = dense.channels().iter().map(|c| c.as_slice().to_vec()).collect();
        expected.extend(fcn.channels().iter().map(|c| c.as_slice().to_vec()));
        assert_eq!(sequence(&stack), expected);
    }

    #[test]
    fn fuse_single_block_is_identity() {
        let a = block("a", 3, 0.0);
        let stack = fuse(vec![a.clone()]).unwrap();
        assert_eq!(stack.blocks(), &[a]);
    }

    #[test]
    fn fuse_is_associative_in_channel_order() {
        let (a, b, c) = (block("a", 2, 0.0), block("b", 3, 50.0), block("c", 1, 90.0));
        let flat = fuse(vec![a.clone(), b.clone(), c.clone()]).unwrap();
        let mut nested = fuse(vec![a, b]).unwrap().into_blocks();
        nested.push(c);
        assert_eq!(sequence(&flat), sequence(&fuse(nested).unwrap()));
    }

    #[test]
    fn fuse_rejects_duplicates_and_empty() {
        assert!(matches!(fuse(vec![]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            fuse(vec![block("a", 1, 0.0), block("a", 2, 0.0)]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn block_validation() {
        let bad_shape = vec![Grid::<f32>::zeros(2, 2), Grid::zeros(2, 3)];
        assert!(FeatureBlock::new("x", bad_shape, 1.0, Provenance::Hog).is_err());
        let nan = vec![Grid::from_vec(1, 1, vec![f32::NAN])];
        assert!(matches!(
            FeatureBlock::new("x", nan, 1.0, Provenance::Hog),
            Err(Error::Data(_))
        ));
    }
}
