use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub const PRECISION_THRESHOLD: f64 = 20.0;
pub const SUCCESS_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    /// Value at the threshold closest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let i = self
            .thresholds
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(i, _)| i);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Pointwise mean of curves sharing one threshold grid.
    pub fn mean(curves: &[&Curve]) -> Option<Curve> {
        let first = curves.first()?;
        let n = curves.len() as f64;
        let values = (0..first.values.len())
            .map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / n)
            .collect();
        Some(Curve {
            thresholds: first.thresholds.clone(),
            values,
        })
    }
}

pub fn precision_thresholds() -> Vec<f64> {
    (0..=50).map(f64::from).collect()
}

pub fn success_thresholds() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

pub fn center_error(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    let inter = ix.max(0.0) * iy.max(0.0);
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Per-frame values over annotated frames; unusable predictions score `bad`.
fn paired(results: &[BBox], gt: &[Option<BBox>], f: impl Fn(&BBox, &BBox) -> f64, bad: f64) -> Result<Vec<f64>> {
    if results.len() != gt.len() {
        return Err(Error::data(format!(
            "{} results for {} ground-truth frames",
            results.len(),
            gt.len()
        )));
    }
    let values: Vec<f64> = results
        .iter()
        .zip(gt)
        .filter_map(|(r, g)| g.as_ref().map(|g| if r.is_valid() { f(r, g) } else { bad }))
        .collect();
    if values.is_empty() {
        return Err(Error::data("no annotated frames to evaluate"));
    }
    Ok(values)
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

/// Fraction of annotated frames with center error below each threshold.
pub fn precision_curve(results: &[BBox], gt: &[Option<BBox>]) -> Result<Curve> {
    let errors = paired(results, gt, center_error, f64::INFINITY)?;
    let thresholds = precision_thresholds();
    let values = thresholds.iter().map(|&t| fraction(&errors, |e| e < t)).collect();
    Ok(Curve { thresholds, values })
}

/// Fraction of annotated frames with overlap above each threshold, and the
/// area under the curve as the mean over the threshold grid.
pub fn success_curve(results: &[BBox], gt: &[Option<BBox>]) -> Result<(Curve, f64)> {
    let overlaps = paired(results, gt, iou, 0.0)?;
    let thresholds = success_thresholds();
    let values: Vec<f64> = thresholds.iter().map(|&t| fraction(&overlaps, |o| o > t)).collect();
    let auc = values.iter().sum::<f64>() / values.len() as f64;
    Ok((Curve { thresholds, values }, auc))
}
