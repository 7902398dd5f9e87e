use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureProviderConfig, Image};
use crate::geometry::BBox;
use crate::tracker::{StepOutput, TrackState, TrackerConfig};

use super::dataset::{Attribute, Sequence};
use super::metrics::{precision_curve, success_curve, Curve, PRECISION_THRESHOLD, SUCCESS_THRESHOLD};

/// A source of per-frame boxes to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provider {
    /// The correlation tracker with a given configuration. For precomputed
    /// features the configured directory holds one subdirectory per sequence.
    Tracker { name: String, config: TrackerConfig },
    /// Replays the ground truth (annotated frames) — an upper bound.
    GtEcho { name: String },
    /// Repeats the first-frame box — a lower bound.
    ConstantBox { name: String },
}

impl Provider {
    pub fn name(&self) -> &str {
        match self {
            Provider::Tracker { name, .. } | Provider::GtEcho { name } | Provider::ConstantBox { name } => name,
        }
    }

    /// Boxes for every frame of `seq`.
    pub fn run(&self, seq: &Sequence) -> Result<Vec<BBox>> {
        let first = seq
            .ground_truth
            .first()
            .copied()
            .flatten()
            .ok_or_else(|| Error::data(format!("sequence {} has no first-frame annotation", seq.name)))?;
        match self {
            Provider::GtEcho { .. } => {
                let mut last = first;
                Ok(seq
                    .ground_truth
                    .iter()
                    .map(|g| {
                        if let Some(g) = g {
                            last = *g;
                        }
                        last
                    })
                    .collect())
            }
            Provider::ConstantBox { .. } => Ok(vec![first; seq.frames.len()]),
            Provider::Tracker { config, .. } => {
                let mut cfg = config.clone();
                if let FeatureProviderConfig::Fmap { dir, .. } = &mut cfg.features {
                    *dir = dir.join(&seq.name);
                }
                track_sequence(seq, &cfg, |_| Ok(()))
            }
        }
    }
}

/// Tracks `seq` from its first annotation, calling `observe` after every frame.
pub fn track_sequence(
    seq: &Sequence,
    cfg: &TrackerConfig,
    mut observe: impl FnMut(&StepOutput) -> Result<()>,
) -> Result<Vec<BBox>> {
    let first_box = seq
        .ground_truth
        .first()
        .copied()
        .flatten()
        .ok_or_else(|| Error::data(format!("sequence {} has no first-frame annotation", seq.name)))?;
    let first_path = seq
        .frames
        .first()
        .ok_or_else(|| Error::data(format!("sequence {} has no frames", seq.name)))?;
    let frame = Image::open(first_path)?;
    let (mut state, out) = TrackState::init(&frame, first_box, cfg)?;
    observe(&out)?;
    let mut boxes = vec![out.bbox];
    for path in &seq.frames[1..] {
        let frame = Image::open(path)?;
        let out = state.step(&frame)?;
        observe(&out)?;
        boxes.push(out.bbox);
    }
    log::debug!("tracked {} ({} frames)", seq.name, boxes.len());
    Ok(boxes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEval {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub frames: usize,
    pub annotated_frames: usize,
    pub precision: Curve,
    pub success: Curve,
    pub precision_at_20: f64,
    pub success_at_50: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sequences: usize,
    pub precision_at_20: f64,
    pub success_at_50: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sequence: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub provider: String,
    /// Sorted by sequence name.
    pub sequences: Vec<SequenceEval>,
    pub failures: Vec<Failure>,
    pub overall: Summary,
    pub per_attribute: BTreeMap<Attribute, Summary>,
    pub mean_precision: Option<Curve>,
    pub mean_success: Option<Curve>,
}

/// Scores one sequence's boxes against its annotations.
pub fn evaluate_sequence(seq: &Sequence, boxes: &[BBox]) -> Result<SequenceEval> {
    let precision = precision_curve(boxes, &seq.ground_truth)?;
    let (success, auc) = success_curve(boxes, &seq.ground_truth)?;
    Ok(SequenceEval {
        name: seq.name.clone(),
        attributes: seq.attributes.clone(),
        frames: seq.frames.len(),
        annotated_frames: seq.annotated_frames(),
        precision_at_20: precision.at(PRECISION_THRESHOLD),
        success_at_50: success.at(SUCCESS_THRESHOLD),
        precision,
        success,
        auc,
    })
}

fn summarize<'a>(evals: impl Iterator<Item = &'a SequenceEval>) -> Summary {
    let evals: Vec<_> = evals.collect();
    let n = evals.len();
    let mean = |f: fn(&SequenceEval) -> f64| {
        if n == 0 {
            0.0
        } else {
            evals.iter().map(|e| f(e)).sum::<f64>() / n as f64
        }
    };
    Summary {
        sequences: n,
        precision_at_20: mean(|e| e.precision_at_20),
        success_at_50: mean(|e| e.success_at_50),
        auc: mean(|e| e.auc),
    }
}

/// Builds a report from per-sequence outcomes; failures are recorded and
/// excluded from the aggregates.
pub fn build_report(provider: &str, outcomes: Vec<(String, Result<SequenceEval>)>) -> EvalReport {
    let mut sequences = Vec::new();
    let mut failures = Vec::new();
    for (name, outcome) in outcomes {
        match outcome {
            Ok(e) => sequences.push(e),
            Err(e) => failures.push(Failure {
                sequence: name,
                error: e.to_string(),
            }),
        }
    }
    sequences.sort_by(|a, b| a.name.cmp(&b.name));
    failures.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    let per_attribute = Attribute::ALL
        .into_iter()
        .filter(|a| sequences.iter().any(|s| s.attributes.contains(a)))
        .map(|a| (a, summarize(sequences.iter().filter(|s| s.attributes.contains(&a)))))
        .collect();
    let precision: Vec<&Curve> = sequences.iter().map(|s| &s.precision).collect();
    let success: Vec<&Curve> = sequences.iter().map(|s| &s.success).collect();
    EvalReport {
        provider: provider.to_string(),
        overall: summarize(sequences.iter()),
        per_attribute,
        mean_precision: Curve::mean(&precision),
        mean_success: Curve::mean(&success),
        sequences,
        failures,
    }
}

/// One-pass evaluation: every sequence run once from its first annotation,
/// in parallel, aggregated in name order.
pub fn run_ope(dataset: &[Sequence], provider: &Provider) -> EvalReport {
    let outcomes: Vec<(String, Result<SequenceEval>)> = dataset
        .par_iter()
        .map(|seq| {
            let outcome = provider.run(seq).and_then(|boxes| evaluate_sequence(seq, &boxes));
            if let Err(e) = &outcome {
                log::warn!("{} failed on {}: {e}", provider.name(), seq.name);
            }
            (seq.name.clone(), outcome)
        })
        .collect();
    build_report(provider.name(), outcomes)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub provider: String,
    pub precision: f64,
    pub success: f64,
    pub average: f64,
}

/// Orders providers by the mean of precision at 20 px and success AUC.
pub fn rank(reports: &[EvalReport]) -> Vec<RankRow> {
    let mut rows: Vec<RankRow> = reports
        .iter()
        .map(|r| RankRow {
            rank: 0,
            provider: r.provider.clone(),
            precision: r.overall.precision_at_20,
            success: r.overall.auc,
            average: (r.overall.precision_at_20 + r.overall.auc) / 2.0,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.average
            .total_cmp(&a.average)
            .then_with(|| a.provider.cmp(&b.provider))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    rows
}

/// One line of a per-frame results file (1-based coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: Option<f64>,
    pub objective: f64,
}

impl TrackRecord {
    pub fn from_output(out: &StepOutput) -> Self {
        let (x, y, w, h) = out.bbox.to_one_based();
        TrackRecord {
            frame: out.frame,
            x,
            y,
            w,
            h,
            score: out.score,
            objective: out.objective,
        }
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_one_based(self.x, self.y, self.w, self.h)
    }
}

/// Reads a JSON-lines results file into 0-based boxes ordered by frame.
pub fn read_results(path: &Path) -> Result<Vec<BBox>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: TrackRecord =
            serde_json::from_str(line).map_err(|e| Error::data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if r.frame != records.len() + 1 {
            return Err(Error::data(format!(
                "{}:{}: expected frame {}, found {}",
                path.display(),
                i + 1,
                records.len() + 1,
                r.frame
            )));
        }
        records.push(r.bbox());
    }
    Ok(records)
}
