use std::path::Path;

use crate::error::{Error, Result};

/// RGB frame with `f32` channels in `[0, 1]`, row-major and interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "image buffer holds {} values, expected {}x{}x3",
                data.len(),
                width,
                height
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image { width, height, data }
    }

    pub fn open(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let data = rgb.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
        Ok(Image {
            width: w as usize,
            height: h as usize,
            data,
        })
    }

    /// Quantizes to 8 bits per channel and writes in the format implied by the extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let buffer = image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer size matches dimensions");
        buffer.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Bilinear sample at index coordinates (pixel `p` centered at `p`),
    /// replicating edge pixels outside the frame.
    pub fn sample(&self, x: f64, y: f64) -> [f32; 3] {
        let xf = x.floor();
        let yf = y.floor();
        let tx = (x - xf) as f32;
        let ty = (y - yf) as f32;
        let clamp_x = |v: f64| v.clamp(0.0, (self.width - 1) as f64) as usize;
        let clamp_y = |v: f64| v.clamp(0.0, (self.height - 1) as f64) as usize;
        let (x0, x1) = (clamp_x(xf), clamp_x(xf + 1.0));
        let (y0, y1) = (clamp_y(yf), clamp_y(yf + 1.0));
        let p00 = self.pixel(x0, y0);
        let p10 = self.pixel(x1, y0);
        let p01 = self.pixel(x0, y1);
        let p11 = self.pixel(x1, y1);
        let mut out = [0.0f32; 3];
        for ch in 0..3 {
            // exact passthrough for integer coordinates
            let top = if tx == 0.0 {
                p00[ch]
            } else {
                p00[ch] + (p10[ch] - p00[ch]) * tx
            };
            let bottom = if tx == 0.0 {
                p01[ch]
            } else {
                p01[ch] + (p11[ch] - p01[ch]) * tx
            };
            out[ch] = if ty == 0.0 { top } else { top + (bottom - top) * ty };
        }
        out
    }
}

/// Rectangle in continuous frame coordinates; may extend past the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Resampled image region, `height x width x 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    pub pixels: Image,
    pub source_rect: SourceRect,
}

impl ImagePatch {
    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }
}

/// Square region of side `side` centered at `center`, resampled to
/// `out_size x out_size` with edge replication outside the frame.
pub fn extract_patch(frame: &Image, center: (f64, f64), side: f64, out_size: usize) -> Result<ImagePatch> {
    if out_size < 8 {
        return Err(Error::invalid(format!(
            "patch size {out_size} is below the 8 px minimum"
        )));
    }
    extract_region(frame, center, (side, side), (out_size, out_size))
}

/// Rectangular variant of [`extract_patch`] used by the scale pyramid.
pub fn extract_region(frame: &Image, center: (f64, f64), size: (f64, f64), out: (usize, usize)) -> Result<ImagePatch> {
    if frame.width() == 0 || frame.height() == 0 {
        return Err(Error::invalid("frame has zero area"));
    }
    let (w, h) = size;
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::invalid(format!("region size {w}x{h} must be positive")));
    }
    if !(center.0.is_finite() && center.1.is_finite()) {
        return Err(Error::invalid("region center is not finite"));
    }
    let (out_w, out_h) = out;
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("output size must be nonzero"));
    }
    let x0 = center.0 - w / 2.0;
    let y0 = center.1 - h / 2.0;
    let sx = w / out_w as f64;
    let sy = h / out_h as f64;
    let pixels = Image::from_fn(out_w, out_h, |u, v| {
        // continuous coordinate of the output pixel center, shifted to index space
        let x = x0 + (u as f64 + 0.5) * sx - 0.5;
        let y = y0 + (v as f64 + 0.5) * sy - 0.5;
        frame.sample(x, y)
    });
    Ok(ImagePatch {
        pixels,
        source_rect: SourceRect { x: x0, y: y0, w, h },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checkerboard(n: usize) -> Image {
        Image::from_fn(n, n, |x, y| {
            let v = if (x / 4 + y / 4) % 2 == 0 { 0.9 } else { 0.1 };
            [v, v * 0.5, 1.0 - v]
        })
    }

    fn gradient(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            [x as f32 / w as f32, y as f32 / h as f32, ((x * y) % 7) as f32 / 7.0]
        })
    }

    #[test]
    fn identity_copy() {
        let frame = gradient(40, 40);
        let patch = extract_patch(&frame, (20.0, 20.0), 40.0, 40).unwrap();
        assert_eq!(patch.pixels, frame);
    }

    #[test]
    fn crop_matches_slicing() {
        let frame = checkerboard(64);
        let patch = extract_patch(&frame, (32.0, 32.0), 32.0, 32).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(patch.pixels.pixel(x, y), frame.pixel(x + 16, y + 16));
            }
        }
    }

    #[test]
    fn origin_center_replicates_edges() {
        let frame = gradient(30, 20);
        let patch = extract_patch(&frame, (0.0, 0.0), 16.0, 16).unwrap();
        let corner = frame.pixel(0, 0);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(patch.pixels.pixel(x, y), corner);
            }
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let empty = Image::new(0, 0, vec![]).unwrap();
        assert!(matches!(
            extract_patch(&empty, (0.0, 0.0), 8.0, 8),
            Err(Error::InvalidInput(_))
        ));
        let frame = gradient(10, 10);
        assert!(extract_patch(&frame, (5.0, 5.0), 0.0, 8).is_err());
        assert!(extract_patch(&frame, (5.0, 5.0), 8.0, 4).is_err());
    }
}
