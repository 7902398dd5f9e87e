//! Segmentation label map, semantic mask and cosine-window weighting of
//! fused feature stacks.

use crate::error::{Error, Result};
use crate::features::{FeatureBlock, FeatureStack};
use crate::fft::Grid;

/// Number of segmentation classes in the score block.
pub const SEGMENTATION_CLASSES: usize = 21;

/// Per-cell class label: 1-based channel number of the strict maximum, 0 on ties.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    labels: Grid<u8>,
}

impl LabelMap {
    pub fn new(labels: Grid<u8>) -> Result<Self> {
        if labels.as_slice().iter().any(|&l| l as usize > SEGMENTATION_CLASSES) {
            return Err(Error::invalid("label outside 0..=21"));
        }
        Ok(LabelMap { labels })
    }

    pub fn labels(&self) -> &Grid<u8> {
        &self.labels
    }

    pub fn shape(&self) -> (usize, usize) {
        self.labels.shape()
    }
}

pub fn label_map(fcn_block: &FeatureBlock) -> Result<LabelMap> {
    if fcn_block.channel_count() != SEGMENTATION_CLASSES {
        return Err(Error::invalid(format!(
            "segmentation block {:?} has {} channels, expected {SEGMENTATION_CLASSES}",
            fcn_block.name(),
            fcn_block.channel_count()
        )));
    }
    let (rows, cols) = fcn_block.resolution();
    let channels = fcn_block.channels();
    let labels = Grid::from_fn(rows, cols, |r, c| {
        let mut best = f32::NEG_INFINITY;
        let mut label = 0u8;
        let mut tied = false;
        for (z, ch) in channels.iter().enumerate() {
            let v = ch[(r, c)];
            if v > best {
                best = v;
                label = z as u8 + 1;
                tied = false;
            } else if v == best {
                tied = true;
            }
        }
        if tied {
            0
        } else {
            label
        }
    });
    Ok(LabelMap { labels })
}

/// Binary mask selecting the cells that share the anchor's label.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMask {
    mask: Grid<u8>,
    anchor: (usize, usize),
    anchor_label: u8,
}

impl SemanticMask {
    /// Raw constructor; values other than 0 and 1 are rejected.
    pub fn from_parts(mask: Grid<u8>, anchor: (usize, usize), anchor_label: u8) -> Result<Self> {
        if mask.as_slice().iter().any(|&v| v > 1) {
            return Err(Error::invalid("semantic mask must be binary"));
        }
        if anchor.0 >= mask.rows() || anchor.1 >= mask.cols() {
            return Err(Error::invalid("mask anchor outside the grid"));
        }
        Ok(SemanticMask {
            mask,
            anchor,
            anchor_label,
        })
    }

    pub fn all_ones(rows: usize, cols: usize) -> Self {
        SemanticMask {
            mask: Grid::from_vec(rows, cols, vec![1; rows * cols]),
            anchor: (rows / 2, cols / 2),
            anchor_label: 0,
        }
    }

    pub fn mask(&self) -> &Grid<u8> {
        &self.mask
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn anchor_label(&self) -> u8 {
        self.anchor_label
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    /// Nearest-neighbor resampling onto another grid over the same region.
    pub fn resample(&self, rows: usize, cols: usize) -> SemanticMask {
        let (sr, sc) = self.shape();
        if (sr, sc) == (rows, cols) {
            return self.clone();
        }
        let pick = |i: usize, n: usize, src: usize| (((i as f64 + 0.5) * src as f64 / n as f64) as usize).min(src - 1);
        let mask = Grid::from_fn(rows, cols, |r, c| self.mask[(pick(r, rows, sr), pick(c, cols, sc))]);
        let anchor = (
            ((self.anchor.0 as f64 + 0.5) * rows as f64 / sr as f64) as usize,
            ((self.anchor.1 as f64 + 0.5) * cols as f64 / sc as f64) as usize,
        );
        SemanticMask {
            mask,
            anchor: (anchor.0.min(rows - 1), anchor.1.min(cols - 1)),
            anchor_label: self.anchor_label,
        }
    }

    /// Binary PGM (P5), 255 where the mask is set.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (rows, cols) = self.shape();
        let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
        out.extend(self.mask.as_slice().iter().map(|&v| v * 255));
        out
    }
}

/// Mask of cells whose label equals the anchor's. An anchor labelled 0
/// (no confident class) yields an all-ones mask.
pub fn semantic_mask(lm: &LabelMap, anchor: (usize, usize)) -> Result<SemanticMask> {
    let (rows, cols) = lm.shape();
    if anchor.0 >= rows || anchor.1 >= cols {
        return Err(Error::invalid(format!(
            "anchor {anchor:?} outside {rows}x{cols} label map"
        )));
    }
    let target = lm.labels[anchor];
    let mask = if target == 0 {
        Grid::from_vec(rows, cols, vec![1; rows * cols])
    } else {
        lm.labels.map(|&l| u8::from(l == target))
    };
    Ok(SemanticMask {
        mask,
        anchor,
        anchor_label: target,
    })
}

/// Separable sine taper `sin(pi i / d1) sin(pi j / d2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    weights: Grid<f64>,
}

impl WeightGrid {
    pub fn weights(&self) -> &Grid<f64> {
        &self.weights
    }

    pub fn shape(&self) -> (usize, usize) {
        self.weights.shape()
    }
}

pub fn cosine_window(d1: usize, d2: usize) -> Result<WeightGrid> {
    if d1 < 2 || d2 < 2 {
        return Err(Error::invalid(format!(
            "cosine window needs at least 2x2 cells, got {d1}x{d2}"
        )));
    }
    let pi = std::f64::consts::PI;
    let rows: Vec<f64> = (0..d1).map(|i| (pi * i as f64 / d1 as f64).sin()).collect();
    let cols: Vec<f64> = (0..d2).map(|j| (pi * j as f64 / d2 as f64).sin()).collect();
    Ok(WeightGrid {
        weights: Grid::from_fn(d1, d2, |i, j| rows[i] * cols[j]),
    })
}

/// Shifts every channel by -0.5 and multiplies by `mask * window`, block by
/// block. Masks on a different grid are resampled to the block resolution.
pub fn apply_weighting(stack: &FeatureStack, masks: &[SemanticMask], windows: &[WeightGrid]) -> Result<FeatureStack> {
    let n = stack.blocks().len();
    if masks.len() != n || windows.len() != n {
        return Err(Error::invalid(format!(
            "{} masks and {} windows for {n} blocks",
            masks.len(),
            windows.len()
        )));
    }
    let blocks = stack
        .blocks()
        .iter()
        .zip(masks.iter().zip(windows))
        .map(|(block, (mask, window))| {
            let (rows, cols) = block.resolution();
            let mask = mask.resample(rows, cols);
            if window.shape() != (rows, cols) {
                return Err(Error::invalid(format!(
                    "window {:?} does not match block {:?} grid {rows}x{cols}",
                    window.shape(),
                    block.name()
                )));
            }
            Ok(block.map_values(|x, r, c| {
                let m = mask.mask[(r, c)] as f64;
                ((x as f64 - 0.5) * m * window.weights[(r, c)]) as f32
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    crate::features::fuse(blocks)
}

/// Per-block masks for a stack: the label map of `semantic_block` anchored
/// at its center cell (the previous target position), resampled to every
/// block. Without a semantic block every mask is all-ones.
pub fn stack_masks(stack: &FeatureStack, semantic_block: Option<&str>) -> Result<Vec<SemanticMask>> {
    let base = match semantic_block {
        Some(name) => {
            let block = stack
                .block(name)
                .ok_or_else(|| Error::config(format!("semantic block {name:?} not present in feature stack")))?;
            let lm = label_map(block)?;
            let (rows, cols) = lm.shape();
            Some(semantic_mask(&lm, (rows / 2, cols / 2))?)
        }
        None => None,
    };
    Ok(stack
        .blocks()
        .iter()
        .map(|b| {
            let (rows, cols) = b.resolution();
            match &base {
                Some(m) => m.resample(rows, cols),
                None => SemanticMask::all_ones(rows, cols),
            }
        })
        .collect())
}

pub fn stack_windows(stack: &FeatureStack) -> Result<Vec<WeightGrid>> {
    stack
        .blocks()
        .iter()
        .map(|b| {
            let (rows, cols) = b.resolution();
            cosine_window(rows, cols)
        })
        .collect()
}
