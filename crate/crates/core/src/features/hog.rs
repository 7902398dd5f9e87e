//! 31-channel HOG: 18 contrast-sensitive orientations, 9 contrast-insensitive
//! orientations and 4 texture (gradient energy) channels per cell.

use crate::error::{Error, Result};
use crate::fft::Grid;

use super::{FeatureBlock, ImagePatch, Provenance};

pub const HOG_CHANNELS: usize = 31;

const ORIENTATIONS: usize = 9;
const CLIP: f64 = 0.2;
const NORM_EPS: f64 = 1e-4;
const TEXTURE_SCALE: f64 = 0.2357;

pub fn hog_features(patch: &ImagePatch, cell: usize) -> Result<FeatureBlock> {
    let img = &patch.pixels;
    let (w, h) = (img.width(), img.height());
    if cell == 0 || cell > w || cell > h {
        return Err(Error::invalid(format!("hog cell {cell} does not fit a {w}x{h} patch")));
    }
    if w % cell != 0 || h % cell != 0 {
        return Err(Error::invalid(format!(
            "patch {w}x{h} is not divisible by hog cell {cell}"
        )));
    }
    let (rows, cols) = (h / cell, w / cell);
    let hist = cell_histograms(patch, cell, rows, cols);

    let energy = Grid::from_fn(rows, cols, |r, c| {
        (0..ORIENTATIONS)
            .map(|o| {
                let s = hist[(r, c)][o] + hist[(r, c)][o + ORIENTATIONS];
                s * s
            })
            .sum::<f64>()
    });

    let mut channels = vec![Grid::<f32>::zeros(rows, cols); HOG_CHANNELS];
    for r in 0..rows {
        for c in 0..cols {
            let norms = block_norms(&energy, r, c);
            let bins = &hist[(r, c)];
            let mut texture = [0.0f64; 4];
            for o in 0..2 * ORIENTATIONS {
                let mut acc = 0.0;
                for (k, n) in norms.iter().enumerate() {
                    let v = (bins[o] * n).min(CLIP);
                    acc += v;
                    texture[k] += v;
                }
                channels[o][(r, c)] = (0.5 * acc) as f32;
            }
            for o in 0..ORIENTATIONS {
                let sum = bins[o] + bins[o + ORIENTATIONS];
                let acc: f64 = norms.iter().map(|n| (sum * n).min(CLIP)).sum();
                channels[2 * ORIENTATIONS + o][(r, c)] = (0.5 * acc) as f32;
            }
            for (k, t) in texture.iter().enumerate() {
                channels[3 * ORIENTATIONS + k][(r, c)] = (TEXTURE_SCALE * t) as f32;
            }
        }
    }
    FeatureBlock::new("hog", channels, cell as f32, Provenance::Hog)
}

/// Orientation histograms with bilinear spatial voting.
fn cell_histograms(patch: &ImagePatch, cell: usize, rows: usize, cols: usize) -> Grid<[f64; 2 * ORIENTATIONS]> {
    let img = &patch.pixels;
    let (w, h) = (img.width(), img.height());
    let dirs: Vec<(f64, f64)> = (0..ORIENTATIONS)
        .map(|o| {
            let a = o as f64 * std::f64::consts::PI / ORIENTATIONS as f64;
            (a.cos(), a.sin())
        })
        .collect();

    let mut hist = Grid::from_fn(rows, cols, |_, _| [0.0f64; 2 * ORIENTATIONS]);
    let s = cell as f64;
    for y in 0..h {
        let (ya, yb) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xa, xb) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let (left, right) = (img.pixel(xa, y), img.pixel(xb, y));
            let (up, down) = (img.pixel(x, ya), img.pixel(x, yb));
            // dominant color channel
            let mut best = (0.0f64, 0.0f64, -1.0f64);
            for ch in 0..3 {
                let dx = (right[ch] - left[ch]) as f64;
                let dy = (down[ch] - up[ch]) as f64;
                let m = dx * dx + dy * dy;
                if m > best.2 {
                    best = (dx, dy, m);
                }
            }
            let (dx, dy, m2) = best;
            if m2 <= 0.0 {
                continue;
            }
            let mag = m2.sqrt();
            let mut bin = 0;
            let mut best_dot = 0.0;
            for (o, (u, v)) in dirs.iter().enumerate() {
                let dot = u * dx + v * dy;
                if dot > best_dot {
                    best_dot = dot;
                    bin = o;
                } else if -dot > best_dot {
                    best_dot = -dot;
                    bin = o + ORIENTATIONS;
                }
            }

            let xc = (x as f64 + 0.5) / s - 0.5;
            let yc = (y as f64 + 0.5) / s - 0.5;
            let (ix, iy) = (xc.floor(), yc.floor());
            let (fx, fy) = (xc - ix, yc - iy);
            for (cy, wy) in [(iy, 1.0 - fy), (iy + 1.0, fy)] {
                if cy < 0.0 || cy >= rows as f64 || wy == 0.0 {
                    continue;
                }
                for (cx, wx) in [(ix, 1.0 - fx), (ix + 1.0, fx)] {
                    if cx < 0.0 || cx >= cols as f64 || wx == 0.0 {
                        continue;
                    }
                    hist[(cy as usize, cx as usize)][bin] += wy * wx * mag;
                }
            }
        }
    }
    hist
}

/// Inverse norms of the four 2x2 cell blocks containing `(r, c)`, with
/// replicated borders.
fn block_norms(energy: &Grid<f64>, r: usize, c: usize) -> [f64; 4] {
    let (rows, cols) = energy.shape();
    let clamp_r = |v: isize| v.clamp(0, rows as isize - 1) as usize;
    let clamp_c = |v: isize| v.clamp(0, cols as isize - 1) as usize;
    let (r, c) = (r as isize, c as isize);
    let mut out = [0.0; 4];
    for (k, (dr, dc)) in [(0, 0), (0, -1), (-1, 0), (-1, -1)].into_iter().enumerate() {
        let mut sum = 0.0;
        for br in [r + dr, r + dr + 1] {
            for bc in [c + dc, c + dc + 1] {
                sum += energy[(clamp_r(br), clamp_c(bc))];
            }
        }
        out[k] = 1.0 / (sum + NORM_EPS).sqrt();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Image, SourceRect};

    fn patch_of(img: Image) -> ImagePatch {
        let (w, h) = (img.width() as f64, img.height() as f64);
        ImagePatch {
            pixels: img,
            source_rect: SourceRect { x: 0.0, y: 0.0, w, h },
        }
    }

    fn textured(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let a = ((x as f32 * 0.37).sin() * (y as f32 * 0.23).cos()).abs();
            let b = if (x / 5 + y / 3) % 2 == 0 { 0.8 } else { 0.2 };
            let c = ((x * 7 + y * 13) % 11) as f32 / 11.0;
            [a, b, c]
        })
    }

    #[test]
    fn shape_arithmetic() {
        let block = hog_features(&patch_of(textured(32, 32)), 4).unwrap();
        assert_eq!(block.channel_count(), 31);
        assert_eq!(block.resolution(), (8, 8));
        assert_eq!(block.stride(), 4.0);
    }

    #[test]
    fn uniform_patch_is_zero() {
        let gray = Image::from_fn(16, 16, |_, _| [0.5, 0.5, 0.5]);
        let block = hog_features(&patch_of(gray), 4).unwrap();
        for ch in block.channels() {
            assert!(ch.as_slice().iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn rotation_preserves_cell_energy() {
        let img = textured(24, 16);
        let rotated = Image::from_fn(24, 16, |x, y| img.pixel(23 - x, 15 - y));
        let a = hog_features(&patch_of(img), 4).unwrap();
        let b = hog_features(&patch_of(rotated), 4).unwrap();
        let (rows, cols) = a.resolution();
        for r in 0..rows {
            for c in 0..cols {
                let ea: f64 = (0..18).map(|o| a.channels()[o][(r, c)] as f64).sum();
                let eb: f64 = (0..18)
                    .map(|o| b.channels()[o][(rows - 1 - r, cols - 1 - c)] as f64)
                    .sum();
                assert!((ea - eb).abs() < 1e-5, "cell ({r},{c}): {ea} vs {eb}");
            }
        }
    }

    #[test]
    fn constant_offset_invariance_and_nonnegative() {
        let img = textured(16, 16);
        let shifted = Image::from_fn(16, 16, |x, y| img.pixel(x, y).map(|v| v + 0.25));
        let a = hog_features(&patch_of(img), 4).unwrap();
        let b = hog_features(&patch_of(shifted), 4).unwrap();
        for (ca, cb) in a.channels().iter().zip(b.channels()) {
            for (va, vb) in ca.as_slice().iter().zip(cb.as_slice()) {
                assert!(*va >= 0.0);
                assert!((va - vb).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn rejects_bad_cells() {
        let p = patch_of(textured(16, 16));
        assert!(matches!(hog_features(&p, 32), Err(Error::InvalidInput(_))));
        assert!(matches!(hog_features(&p, 5), Err(Error::InvalidInput(_))));
    }
}
