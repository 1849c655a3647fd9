use std::path::Path;

use anyhow::{bail, Context, Result};
use radval_core::governance::EvaluationTask;
use radval_core::io::{self, Format, PredictionKind};
use radval_core::metrics::{build_confusion, standard_metrics, Outcome, Verdict};
use radval_core::reporting::{render_pctt, FlowSummary, PcttInput, PcttMetadata, ThresholdSelection};
use radval_core::roc::{operating_point, summarize, CutoffRule, ScoredSample};
use radval_core::study_design::DatasetManifest;
use serde::Serialize;
use serde_json::json;

use crate::args::{CutoffArg, EvaluateArgs};
use crate::output::{parse_json, read, sha256_hex, write_atomic};
use crate::Status;

pub const REPORT_TEXT: &str = "pctt_report.txt";
pub const REPORT_JSON: &str = "pctt_report.json";
pub const ROC_CSV: &str = "roc_curve.csv";
pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
struct GateEntry {
    metric: &'static str,
    estimate: Option<f64>,
    verdict: Option<Verdict>,
}

#[derive(Debug, Serialize)]
struct InputDigest {
    role: &'static str,
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct TimingCheck {
    studies_timed: usize,
    max_seconds: f64,
    limit_seconds: f64,
    within_limit: bool,
}

fn gate_status(gate: &[GateEntry]) -> Status {
    gate.iter()
        .map(|g| match g.verdict {
            Some(Verdict::Admissible) => Status::Ok,
            Some(Verdict::RevisionRequired) | None => Status::Fail,
            Some(Verdict::Unsuitable) => Status::Unsuitable,
        })
        .max()
        .unwrap_or(Status::Ok)
}

fn load(path: &Path, what: &str) -> Result<(Vec<u8>, Format)> {
    let bytes = read(path).with_context(|| format!("{what} file"))?;
    Ok((bytes, Format::from_path(path)))
}

pub fn run(args: &EvaluateArgs, json_out: bool) -> Result<Status> {
    let task = EvaluationTask::from(args.task);
    if matches!(task, EvaluationTask::Segmentation | EvaluationTask::Nlp) {
        bail!("evaluate handles detection and classification tasks; use `radval agreement` for {task:?}");
    }
    let kind = PredictionKind::from(args.kind);

    let (pred_bytes, pred_format) = load(&args.predictions, "predictions")?;
    let (ref_bytes, ref_format) = load(&args.reference, "reference")?;
    let preds = io::load_predictions(pred_bytes.as_slice(), pred_format, kind)
        .with_context(|| format!("in {}", args.predictions.display()))?;
    let refs = io::load_reference(ref_bytes.as_slice(), ref_format)
        .with_context(|| format!("in {}", args.reference.display()))?;
    let joined = io::join_records(&preds, &refs)?;
    if joined.pairs.is_empty() {
        bail!("no study id is shared by {} and {}", args.predictions.display(), args.reference.display());
    }

    let mut inputs = vec![
        InputDigest {
            role: "predictions",
            path: args.predictions.display().to_string(),
            sha256: sha256_hex(&pred_bytes),
        },
        InputDigest { role: "reference", path: args.reference.display().to_string(), sha256: sha256_hex(&ref_bytes) },
    ];

    let manifest = match &args.manifest {
        Some(path) => {
            let m: DatasetManifest = parse_json(path)?;
            m.validate_structure().with_context(|| format!("in {}", path.display()))?;
            inputs.push(InputDigest {
                role: "manifest",
                path: path.display().to_string(),
                sha256: sha256_hex(&read(path)?),
            });
            Some(m)
        }
        None => None,
    };
    let metadata = match &args.metadata {
        Some(path) => {
            inputs.push(InputDigest {
                role: "metadata",
                path: path.display().to_string(),
                sha256: sha256_hex(&read(path)?),
            });
            parse_json::<PcttMetadata>(path)?
        }
        None => PcttMetadata::default(),
    };

    let (cm, roc, curve, threshold) = match kind {
        PredictionKind::Binary => {
            if args.cutoff.is_some() || args.threshold.is_some() {
                eprintln!("warning: cut-off options are ignored for binary predictions");
            }
            (build_confusion(&joined.pairs)?, None, None, None)
        }
        PredictionKind::Scores => {
            let scored: Vec<ScoredSample> =
                joined.pairs.iter().map(|p| ScoredSample::new(p.predicted.as_f64(), p.actual)).collect();
            let (curve, summary) = summarize(&scored, args.confidence)?;
            let rule = match (args.cutoff, args.threshold) {
                (Some(CutoffArg::Fixed), Some(t)) => CutoffRule::Fixed(t),
                (Some(CutoffArg::Fixed), None) => bail!("--cutoff fixed needs --threshold"),
                (_, Some(_)) => bail!("--threshold is only valid with --cutoff fixed"),
                (Some(CutoffArg::Dmin), None) => CutoffRule::Dmin,
                (Some(CutoffArg::Youden), None) => CutoffRule::Youden,
                (None, None) => {
                    eprintln!("warning: no --cutoff given; using the maximum Youden index");
                    CutoffRule::Youden
                }
            };
            let t = match rule {
                CutoffRule::Youden => summary.cutoff_youden.threshold,
                CutoffRule::Dmin => summary.cutoff_dmin.threshold,
                CutoffRule::Fixed(t) => t,
            };
            let cm = operating_point(&scored, t);
            (cm, Some(summary), Some(curve), Some(ThresholdSelection { rule, threshold: t }))
        }
    };

    let metrics = standard_metrics(&cm, args.confidence)?;
    let flow = FlowSummary {
        predictions: preds.len() as u64,
        reference: refs.len() as u64,
        matched: joined.pairs.len() as u64,
        unmatched_predictions: joined.unmatched_predictions.len() as u64,
        unmatched_reference: joined.unmatched_reference.len() as u64,
    };
    for id in joined.unmatched_predictions.iter().chain(&joined.unmatched_reference) {
        eprintln!("warning: study {id} has no counterpart and is excluded");
    }

    let mut gate: Vec<GateEntry> =
        [("sensitivity", &metrics.sensitivity), ("specificity", &metrics.specificity), ("accuracy", &metrics.accuracy)]
            .into_iter()
            .map(|(metric, o)| match o {
                Outcome::Defined(p) => GateEntry { metric, estimate: Some(p.estimate), verdict: Some(p.verdict) },
                Outcome::Undefined { reason } => {
                    eprintln!("warning: {metric} is undefined ({reason}); it cannot pass the gate");
                    GateEntry { metric, estimate: None, verdict: None }
                }
            })
            .collect();
    if let Some(r) = &roc {
        gate.push(GateEntry { metric: "auc", estimate: Some(r.auc), verdict: Some(r.verdict) });
    }
    let status = gate_status(&gate);

    let times: Vec<f64> = {
        let timed: std::collections::HashMap<&str, f64> =
            preds.iter().filter_map(|p| p.processing_time.map(|t| (p.study_id.as_str(), t))).collect();
        joined.pairs.iter().filter_map(|p| timed.get(p.study_id.as_str()).copied()).collect()
    };
    let timing = (!times.is_empty()).then(|| {
        let max = times.iter().copied().fold(0.0, f64::max);
        TimingCheck {
            studies_timed: times.len(),
            max_seconds: max,
            limit_seconds: args.time_limit,
            within_limit: max <= args.time_limit,
        }
    });
    if let Some(t) = timing.as_ref().filter(|t| !t.within_limit) {
        eprintln!("warning: slowest study took {} s, above the {} s limit", t.max_seconds, t.limit_seconds);
    }

    let report = render_pctt(&PcttInput { metadata, manifest, metrics: Some(metrics), roc, threshold, flow })?;
    let out = &args.out_dir;
    let mut outputs = vec![REPORT_TEXT, REPORT_JSON];
    write_atomic(&out.join(REPORT_TEXT), report.to_text().as_bytes())?;
    write_atomic(&out.join(REPORT_JSON), report.to_json()?.as_bytes())?;
    if let Some(curve) = &curve {
        write_atomic(&out.join(ROC_CSV), curve.to_csv().as_bytes())?;
        outputs.push(ROC_CSV);
    }

    let run_manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "task": task,
            "kind": kind,
            "cutoff": threshold.map(|t| t.rule),
            "confidence": args.confidence,
            "time_limit_s": args.time_limit,
        },
        "inputs": inputs,
        "outputs": outputs,
        "threshold": threshold.map(|t| t.threshold).filter(|t| t.is_finite()),
        "gate": gate,
        "timing": timing,
        "exit_code": status as i32,
    });
    write_atomic(&out.join(RUN_MANIFEST), (serde_json::to_string_pretty(&run_manifest)? + "\n").as_bytes())?;

    if json_out {
        println!("{}", serde_json::to_string_pretty(&run_manifest)?);
    } else {
        let cm = report.item_9_result_table;
        println!("TP {}  FN {}  FP {}  TN {}", cm.tp, cm.fn_, cm.fp, cm.tn);
        if let Some(t) = threshold {
            println!("threshold {} ({})", t.threshold, t.rule);
        }
        for g in &gate {
            match (g.estimate, g.verdict) {
                (Some(e), Some(v)) => println!("{:<12} {:.4}  {v}", g.metric, e),
                _ => println!("{:<12} undefined", g.metric),
            }
        }
        println!("reports written to {}", out.display());
    }
    Ok(status)
}
