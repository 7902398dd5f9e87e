//! Seeded synthetic sequences: a textured square translating and zooming
//! over a smooth background, with exact ground truth.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{fmap_file_name, fuse, write_fmap, FeatureBlock, Image, Provenance};
use crate::fft::Grid;
use crate::geometry::BBox;
use crate::semantic_window::SEGMENTATION_CLASSES;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Target box on the first frame (0-based).
    pub initial: BBox,
    /// Center displacement per frame, in pixels.
    pub velocity: (f64, f64),
    /// Size factor per frame.
    pub zoom: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            width: 360,
            height: 280,
            frames: 100,
            initial: BBox::new(50.0, 50.0, 40.0, 40.0),
            velocity: (2.2, 1.3),
            zoom: 1.003,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<Image>,
    /// Exact 0-based ground truth per frame.
    pub boxes: Vec<BBox>,
}

impl SyntheticSpec {
    /// Ground-truth box of frame `t` (0-based).
    pub fn box_at(&self, t: usize) -> BBox {
        let (cx, cy) = self.initial.center();
        let s = self.zoom.powi(t as i32);
        BBox::from_center(
            cx + self.velocity.0 * t as f64,
            cy + self.velocity.1 * t as f64,
            self.initial.w * s,
            self.initial.h * s,
        )
    }
}

struct Texture {
    size: usize,
    colors: Vec<[f64; 3]>,
}

impl Texture {
    fn random(rng: &mut ChaCha8Rng, size: usize) -> Self {
        let colors = (0..size * size)
            .map(|_| {
                let v: f64 = if rng.gen_bool(0.5) {
                    rng.gen_range(0.75..1.0)
                } else {
                    rng.gen_range(0.0..0.25)
                };
                [v, rng.gen_range(0.0..1.0) * 0.5 + v * 0.5, 1.0 - v]
            })
            .collect();
        Texture { size, colors }
    }

    /// Bilinear lookup at normalized coordinates in `[0, 1]`.
    fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let n = self.size;
        let fx = (u * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let fy = (v * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(n - 1), (y0 + 1).min(n - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let c = |x: usize, y: usize| self.colors[y * n + x];
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let top = c(x0, y0)[k] * (1.0 - tx) + c(x1, y0)[k] * tx;
            let bottom = c(x0, y1)[k] * (1.0 - tx) + c(x1, y1)[k] * tx;
            *o = top * (1.0 - ty) + bottom * ty;
        }
        out
    }
}

/// Renders every frame of `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticSequence> {
    if spec.width < 16 || spec.height < 16 || spec.frames == 0 {
        return Err(Error::invalid("synthetic sequence needs at least one 16x16 frame"));
    }
    if !spec.initial.is_valid() || !(spec.zoom > 0.0) {
        return Err(Error::invalid("synthetic target must have positive size and zoom"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let texture = Texture::random(&mut rng, 7);
    let waves: Vec<[f64; 4]> = (0..9)
        .map(|_| {
            [
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.03..0.07),
            ]
        })
        .collect();
    let (w, h) = (spec.width as f64, spec.height as f64);
    let background = |x: f64, y: f64| -> [f64; 3] {
        let mut c = [0.45, 0.47, 0.43];
        for (i, wave) in waves.iter().enumerate() {
            c[i % 3] += wave[3] * (2.0 * PI * (wave[0] * x / w + wave[1] * y / h) + wave[2]).sin();
        }
        c
    };
    let mut frames = Vec::with_capacity(spec.frames);
    let mut boxes = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let b = spec.box_at(t);
        let border = 0.08;
        let frame = Image::from_fn(spec.width, spec.height, |px, py| {
            // 2x2 supersampling keeps the moving edges free of stair-stepping
            let mut acc = [0.0; 3];
            for (sx, sy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                let (x, y) = (px as f64 + sx, py as f64 + sy);
                let u = (x - b.x) / b.w;
                let v = (y - b.y) / b.h;
                let c = if (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) {
                    if u < border || u > 1.0 - border || v < border || v > 1.0 - border {
                        [0.05, 0.05, 0.08]
                    } else {
                        texture.sample((u - border) / (1.0 - 2.0 * border), (v - border) / (1.0 - 2.0 * border))
                    }
                } else {
                    background(x, y)
                };
                for k in 0..3 {
                    acc[k] += c[k] * 0.25;
                }
            }
            [acc[0] as f32, acc[1] as f32, acc[2] as f32]
        });
        frames.push(frame);
        boxes.push(b);
    }
    Ok(SyntheticSequence { frames, boxes })
}

/// Writes `<dir>/img/0001.jpg ...`, a 1-based `groundtruth_rect.txt` and,
/// when tags are given, `attrs.txt`.
pub fn write_sequence(seq: &SyntheticSequence, dir: &Path, attributes: &[&str]) -> Result<()> {
    let img_dir = dir.join("img");
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    for (i, frame) in seq.frames.iter().enumerate() {
        frame.save(&img_dir.join(format!("{:04}.jpg", i + 1)))?;
    }
    let mut gt = String::new();
    for b in &seq.boxes {
        let (x, y, w, h) = b.to_one_based();
        writeln!(gt, "{x:.3},{y:.3},{w:.3},{h:.3}").expect("writing to a string");
    }
    let gt_path = dir.join("groundtruth_rect.txt");
    fs::write(&gt_path, gt).map_err(|e| Error::io(&gt_path, e))?;
    if !attributes.is_empty() {
        let path = dir.join("attrs.txt");
        fs::write(&path, attributes.join(",") + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Name of the segmentation block written by [`write_feature_maps`].
pub const SYNTHETIC_SEGMENTATION_BLOCK: &str = "fcn8s_score";
/// Segmentation class painted on the target.
pub const SYNTHETIC_TARGET_CLASS: usize = 15;

/// Writes full-frame FMAP files `frame_%06d.fmap` for `seq`: a 3-channel
/// cell-mean colour block at stride 4 and a 21-channel segmentation score
/// block at stride 8 whose target cells favour one class.
pub fn write_feature_maps(seq: &SyntheticSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (t, (frame, b)) in seq.frames.iter().zip(&seq.boxes).enumerate() {
        let (rows, cols) = (frame.height() / 4, frame.width() / 4);
        let color: Vec<Grid<f32>> = (0..3)
            .map(|k| {
                Grid::from_fn(rows, cols, |r, c| {
                    let mut acc = 0.0;
                    for y in 4 * r..4 * r + 4 {
                        for x in 4 * c..4 * c + 4 {
                            acc += frame.pixel(x, y)[k];
                        }
                    }
                    acc / 16.0
                })
            })
            .collect();
        let (srows, scols) = (frame.height() / 8, frame.width() / 8);
        let inside = |r: usize, c: usize| {
            let (x, y) = ((c as f64 + 0.5) * 8.0, (r as f64 + 0.5) * 8.0);
            x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h
        };
        let scores: Vec<Grid<f32>> = (0..SEGMENTATION_CLASSES)
            .map(|k| {
                Grid::from_fn(srows, scols, |r, c| match (k, inside(r, c)) {
                    (SYNTHETIC_TARGET_CLASS, true) | (0, false) => 4.0,
                    _ => (k as f32) * 0.01,
                })
            })
            .collect();
        let stack = fuse(vec![
            FeatureBlock::new("color", color, 4.0, Provenance::Precomputed)?,
            FeatureBlock::new(SYNTHETIC_SEGMENTATION_BLOCK, scores, 8.0, Provenance::Precomputed)?,
        ])?;
        write_fmap(&dir.join(fmap_file_name(t + 1)), &stack)?;
    }
    Ok(())
}
