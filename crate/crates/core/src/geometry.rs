use serde::{Deserialize, Serialize};

/// Axis-aligned box in 0-based continuous pixel coordinates: `(x, y)` is the
/// top-left corner, pixel `p` covers `[p, p + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.h > 0.0
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        BBox {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    /// OTB files store 1-based corners.
    pub fn from_one_based(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox::new(x - 1.0, y - 1.0, w, h)
    }

    pub fn to_one_based(&self) -> (f64, f64, f64, f64) {
        (self.x + 1.0, self.y + 1.0, self.w, self.h)
    }
}
