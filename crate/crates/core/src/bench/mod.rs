//! Benchmark harness: OTB-style datasets, one-pass evaluation, precision and
//! success metrics, attribute breakdowns and provider ranking.

mod dataset;
mod metrics;
mod ope;

pub use self::dataset::{
    load_dataset, load_sequence, parse_box_line, Attribute, Sequence, ATTRIBUTE_FILE, GROUND_TRUTH_FILE,
};
pub use self::metrics::{
    center_error, iou, precision_curve, precision_thresholds, success_curve, success_thresholds, Curve,
    PRECISION_THRESHOLD, SUCCESS_THRESHOLD,
};
pub use self::ope::{
    build_report, evaluate_sequence, rank, read_results, run_ope, track_sequence, EvalReport, Failure, Provider,
    RankRow, SequenceEval, Summary, TrackRecord,
};

/// Curve table with one row per threshold and one column per report.
pub fn curves_csv(reports: &[EvalReport], success: bool) -> String {
    let mut out = String::from("threshold");
    for r in reports {
        out.push(',');
        out.push_str(&r.provider);
    }
    out.push('\n');
    let thresholds = if success {
        success_thresholds()
    } else {
        precision_thresholds()
    };
    for (i, t) in thresholds.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for r in reports {
            let curve = if success { &r.mean_success } else { &r.mean_precision };
            match curve {
                Some(c) => out.push_str(&format!(",{:.6}", c.values[i])),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
