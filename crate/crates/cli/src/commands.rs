use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use corrtrack::bench::{
    build_report, curves_csv, evaluate_sequence, load_dataset, load_sequence, rank as rank_reports, read_results,
    run_ope, track_sequence, EvalReport, RankRow, TrackRecord,
};
use corrtrack::{Error, Result};
use serde::Serialize;

use crate::config::{load_rank_manifest, track_config};
use crate::output::{create_dir, to_json, versions, write_atomic, write_file, RunManifest, Timing};
use crate::{EvalArgs, RankArgs, TrackArgs};

fn timing(start: Instant, per_frame_ms: Vec<f64>) -> Timing {
    let wall = start.elapsed().as_secs_f64();
    let frames = per_frame_ms.len();
    Timing {
        wall_seconds: wall,
        frames,
        fps: if wall > 0.0 { frames as f64 / wall } else { 0.0 },
        per_frame_ms,
    }
}

pub fn track(args: &TrackArgs, config_file: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let cfg = track_config(args, config_file)?;
    let seq = load_sequence(&args.sequence)?;
    create_dir(&args.out)?;
    let mut outputs = vec![format!("{}.jsonl", seq.name)];
    if args.dump_masks {
        create_dir(&args.out.join("masks"))?;
    }
    if args.dump_scores {
        create_dir(&args.out.join("scores"))?;
    }
    let mut jsonl = String::new();
    let mut diagnostics = String::from("frame,objective,residual,iters\n");
    let mut per_frame_ms = Vec::with_capacity(seq.frames.len());
    let mut last = Instant::now();
    log::info!("tracking {} ({} frames)", seq.name, seq.frames.len());
    track_sequence(&seq, &cfg, |out| {
        per_frame_ms.push(last.elapsed().as_secs_f64() * 1e3);
        last = Instant::now();
        let record = serde_json::to_string(&TrackRecord::from_output(out)).expect("record serializes");
        jsonl.push_str(&record);
        jsonl.push('\n');
        writeln!(
            diagnostics,
            "{},{:e},{:e},{}",
            out.frame, out.objective, out.residual, out.cg_iterations
        )
        .expect("writing to a string");
        if args.dump_masks {
            for (b, mask) in out.masks.iter().enumerate() {
                let name = format!("masks/{}_{:06}_b{b}.pgm", seq.name, out.frame);
                write_file(&args.out.join(&name), mask.to_pgm())?;
            }
        }
        if let (true, Some(score)) = (args.dump_scores, &out.score_map) {
            let values = score.values();
            let mut csv = String::new();
            for r in 0..values.rows() {
                let row: Vec<String> = (0..values.cols()).map(|c| format!("{:e}", values[(r, c)])).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            write_file(&args.out.join(format!("scores/{}_{:06}.csv", seq.name, out.frame)), csv)?;
        }
        Ok(())
    })?;
    write_file(&args.out.join(&outputs[0]), jsonl)?;
    if args.diagnostics {
        let name = format!("{}_cg.csv", seq.name);
        write_file(&args.out.join(&name), diagnostics)?;
        outputs.push(name);
    }
    if args.dump_masks {
        outputs.push("masks/".into());
    }
    if args.dump_scores {
        outputs.push("scores/".into());
    }
    let mut inputs = vec![args.sequence.clone()];
    if let corrtrack::features::FeatureProviderConfig::Fmap { dir, .. } = &cfg.features {
        inputs.push(dir.clone());
    }
    let manifest = RunManifest {
        command: "track",
        versions: versions(),
        config: &cfg,
        inputs,
        outputs,
        timing: timing(start, per_frame_ms),
    };
    write_atomic(&args.out.join("manifest.json"), to_json(&manifest))?;
    println!(
        "{}: {} frames, {:.1} fps",
        seq.name, manifest.timing.frames, manifest.timing.fps
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ComparisonRow<'a> {
    provider: &'a str,
    sequences: usize,
    failures: usize,
    precision_at_20: f64,
    success_at_50: f64,
    auc: f64,
}

fn comparison_rows(reports: &[EvalReport]) -> Vec<ComparisonRow<'_>> {
    let mut rows: Vec<_> = reports
        .iter()
        .map(|r| ComparisonRow {
            provider: &r.provider,
            sequences: r.overall.sequences,
            failures: r.failures.len(),
            precision_at_20: r.overall.precision_at_20,
            success_at_50: r.overall.success_at_50,
            auc: r.overall.auc,
        })
        .collect();
    rows.sort_by(|a, b| b.auc.total_cmp(&a.auc).then_with(|| a.provider.cmp(b.provider)));
    rows
}

fn write_curves(out: &Path, reports: &[EvalReport]) -> Result<()> {
    write_file(&out.join("precision.csv"), curves_csv(reports, false))?;
    write_file(&out.join("success.csv"), curves_csv(reports, true))
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let start = Instant::now();
    let dataset = load_dataset(&args.dataset)?;
    let mut reports = Vec::new();
    for dir in &args.results {
        let provider = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("results")
            .to_string();
        let mut outcomes = Vec::new();
        for seq in &dataset {
            let path = dir.join(format!("{}.jsonl", seq.name));
            let outcome = if path.is_file() {
                // a malformed file aborts the evaluation
                let boxes = read_results(&path)?;
                evaluate_sequence(seq, &boxes)
            } else {
                Err(Error::Data(format!("missing results file {}", path.display())))
            };
            outcomes.push((seq.name.clone(), outcome));
        }
        reports.push(build_report(&provider, outcomes));
    }
    create_dir(&args.out)?;
    write_file(&args.out.join("report.json"), to_json(&reports))?;
    write_curves(&args.out, &reports)?;
    let rows = comparison_rows(&reports);
    let mut csv = String::from("provider,sequences,failures,precision_at_20,success_at_50,auc\n");
    println!("{:<24} {:>10} {:>10} {:>8}", "provider", "prec@20", "succ@0.5", "AUC");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.provider, r.sequences, r.failures, r.precision_at_20, r.success_at_50, r.auc
        )
        .expect("writing to a string");
        println!(
            "{:<24} {:>10.3} {:>10.3} {:>8.3}",
            r.provider, r.precision_at_20, r.success_at_50, r.auc
        );
    }
    write_file(&args.out.join("comparison.csv"), csv)?;
    let mut inputs = vec![args.dataset.clone()];
    inputs.extend(args.results.iter().cloned());
    let manifest = RunManifest {
        command: "eval",
        versions: versions(),
        config: (),
        inputs,
        outputs: ["report.json", "precision.csv", "success.csv", "comparison.csv"]
            .map(String::from)
            .to_vec(),
        timing: timing(start, Vec::new()),
    };
    write_atomic(&args.out.join("manifest.json"), to_json(&manifest))
}

fn ranking_table(rows: &[RankRow]) -> String {
    let mut out = format!(
        "{:<5} {:<24} {:>10} {:>10} {:>10}\n",
        "rank", "provider", "precision", "success", "average"
    );
    for r in rows {
        writeln!(
            out,
            "{:<5} {:<24} {:>10.3} {:>10.3} {:>10.3}",
            r.rank, r.provider, r.precision, r.success, r.average
        )
        .expect("writing to a string");
    }
    out
}

pub fn rank(args: &RankArgs, config_file: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let (manifest, base) = load_rank_manifest(&args.manifest, config_file)?;
    let root = args.manifest.parent().unwrap_or(Path::new("."));
    let providers = manifest
        .providers
        .iter()
        .map(|p| p.resolve(&base, root))
        .collect::<Result<Vec<_>>>()?;
    let dataset = load_dataset(&args.dataset)?;
    let reports: Vec<EvalReport> = providers
        .iter()
        .map(|p| {
            log::info!("evaluating provider {}", p.name());
            run_ope(&dataset, p)
        })
        .collect();
    let rows = rank_reports(&reports);
    create_dir(&args.out)?;
    let mut csv = String::from("rank,provider,precision,success,average\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{:.6},{:.6},{:.6}",
            r.rank, r.provider, r.precision, r.success, r.average
        )
        .expect("writing to a string");
    }
    write_file(&args.out.join("ranking.csv"), csv)?;
    write_file(&args.out.join("ranking.json"), to_json(&rows))?;
    write_file(&args.out.join("report.json"), to_json(&reports))?;
    write_curves(&args.out, &reports)?;
    print!("{}", ranking_table(&rows));
    let run = RunManifest {
        command: "rank",
        versions: versions(),
        config: &providers,
        inputs: vec![args.manifest.clone(), args.dataset.clone()],
        outputs: [
            "ranking.csv",
            "ranking.json",
            "report.json",
            "precision.csv",
            "success.csv",
        ]
        .map(String::from)
        .to_vec(),
        timing: timing(start, Vec::new()),
    };
    write_atomic(&args.out.join("manifest.json"), to_json(&run))
}
