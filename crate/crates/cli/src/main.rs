//! `radval` command-line tool.
//!
//! Exit status: 0 pass (all gate verdicts admissible), 1 error, 2 fail or
//! revision required, 3 unsuitable.

mod args;
mod evaluate;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use radval_core::agreement::{cohen_kappa, dice, AgreementTable, BinaryMask};
use radval_core::governance::{
    classify_risk, score_admission, score_cqoe, AdmissionAnswers, AdmissionPolicy, CqoeSheet, Deliverable, RiskInput,
    Stage, ValidationPipeline,
};
use radval_core::io::{self, Format, PredictionKind};
use radval_core::metrics::Verdict;
use radval_core::reporting::{check_stard, StudyReport};
use radval_core::roc::{summarize, ScoredSample};
use radval_core::study_design::{
    required_sample_size, validate_manifest, AccuracyTarget, DatasetManifest, PopulationProfile, SampleSizeRequest,
    Severity,
};
use radval_core::Error as CoreError;
use serde::Serialize;

use args::{AgreementCommand, Cli, Command, GovernanceCommand, ReportCommand};
use output::{inline_or_file, parse_json, read, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    Error = 1,
    Fail = 2,
    Unsuitable = 3,
}

impl Status {
    fn from_verdict(v: Verdict) -> Status {
        match v {
            Verdict::Admissible => Status::Ok,
            Verdict::RevisionRequired => Status::Fail,
            Verdict::Unsuitable => Status::Unsuitable,
        }
    }

    fn pass_fail(pass: bool) -> Status {
        if pass {
            Status::Ok
        } else {
            Status::Fail
        }
    }
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

fn roc(a: &args::RocArgs, json: bool) -> Result<Status> {
    let preds = io::load_predictions(
        read(&a.predictions)?.as_slice(),
        Format::from_path(&a.predictions),
        PredictionKind::Scores,
    )
    .with_context(|| format!("in {}", a.predictions.display()))?;
    let refs = io::load_reference(read(&a.reference)?.as_slice(), Format::from_path(&a.reference))
        .with_context(|| format!("in {}", a.reference.display()))?;
    let joined = io::join_records(&preds, &refs)?;
    let scored: Vec<ScoredSample> =
        joined.pairs.iter().map(|p| ScoredSample::new(p.predicted.as_f64(), p.actual)).collect();
    let (curve, summary) = summarize(&scored, a.confidence)?;
    if let Some(path) = &a.curve_csv {
        write_atomic(path, curve.to_csv().as_bytes())?;
    }
    emit(json, &summary, || {
        format!(
            "AUC {:.4} [{:.4}, {:.4}] ({:?}) {}\nn positive {}, n negative {}\nYouden cut-off {} (sens {:.4}, spec {:.4})\nd-min cut-off {} (sens {:.4}, spec {:.4})\n",
            summary.auc,
            summary.auc_ci.low,
            summary.auc_ci.high,
            summary.ci_method,
            summary.verdict,
            summary.n_pos,
            summary.n_neg,
            summary.cutoff_youden.threshold,
            summary.cutoff_youden.sensitivity,
            summary.cutoff_youden.specificity,
            summary.cutoff_dmin.threshold,
            summary.cutoff_dmin.sensitivity,
            summary.cutoff_dmin.specificity,
        )
    })?;
    Ok(Status::from_verdict(summary.verdict))
}

fn parse_mask(arg: &str) -> Result<BinaryMask> {
    let text = inline_or_file(arg)?;
    let text = text.trim();
    if text.starts_with('[') {
        Ok(serde_json::from_str(text).context("mask JSON")?)
    } else {
        Ok(BinaryMask::from_rle(text)?)
    }
}

fn agreement(cmd: &AgreementCommand, json: bool) -> Result<Status> {
    match cmd {
        AgreementCommand::Kappa { table } => {
            let table: AgreementTable =
                serde_json::from_str(inline_or_file(table)?.trim()).context("agreement table")?;
            let k = cohen_kappa(&table)?;
            emit(json, &k, || {
                format!(
                    "kappa {:.4} (observed {:.4}, expected {:.4}) {}\n",
                    k.kappa, k.observed_agreement, k.expected_agreement, k.verdict
                )
            })?;
            Ok(Status::from_verdict(k.verdict))
        }
        AgreementCommand::Dice { a, b } => {
            let d = dice(&parse_mask(a)?, &parse_mask(b)?)?;
            emit(json, &d, || {
                let empty = if d.empty { " (both masks empty)" } else { "" };
                format!(
                    "DSC {:.4} (|A| {}, |B| {}, |A∩B| {}){empty} {}\n",
                    d.dsc, d.size_a, d.size_b, d.intersection, d.verdict
                )
            })?;
            Ok(Status::from_verdict(d.verdict))
        }
    }
}

fn samplesize(a: &args::SampleSizeArgs, json: bool) -> Result<Status> {
    let s = required_sample_size(&SampleSizeRequest {
        expected_proportion: a.p,
        half_width: a.d,
        confidence: a.confidence,
    })?;
    if let Some(w) = &s.warning {
        eprintln!("warning: {w}");
    }
    emit(json, &s, || {
        format!("p = {}, d = {}, confidence = {}, z = {:.6}\nn = {}\n", a.p, a.d, a.confidence, s.z, s.n)
    })?;
    Ok(Status::Ok)
}

fn validate_dataset(a: &args::ValidateDatasetArgs, json: bool) -> Result<Status> {
    let manifest: DatasetManifest = parse_json(&a.manifest)?;
    let profile: PopulationProfile = parse_json(&a.profile)?;
    let targets: Vec<AccuracyTarget> = match &a.targets {
        Some(p) => parse_json(p)?,
        None => vec![],
    };
    let findings = validate_manifest(&manifest, &profile, &targets, a.prevalence_tolerance)
        .with_context(|| format!("in {}", a.manifest.display()))?;
    let blocking = findings.iter().any(|f| f.severity == Severity::Blocking);
    emit(json, &findings, || {
        let mut s: String = findings.iter().map(|f| format!("{:?} {}: {}\n", f.severity, f.item, f.message)).collect();
        s.push_str(if blocking {
            "dataset does not meet the requirements\n"
        } else {
            "dataset meets the requirements\n"
        });
        s
    })?;
    Ok(Status::pass_fail(!blocking))
}

fn governance(cmd: &GovernanceCommand, json: bool) -> Result<Status> {
    match cmd {
        GovernanceCommand::Risk { input } => {
            let r: RiskInput = parse_json(input)?;
            let class = classify_risk(&r)?;
            emit(json, &serde_json::json!({ "class": class }), || format!("class {class}\n"))?;
            Ok(Status::Ok)
        }
        GovernanceCommand::Admission { input, time_limit } => {
            let answers: AdmissionAnswers = parse_json(input)?;
            let policy = AdmissionPolicy { time_limit_s: *time_limit, ..AdmissionPolicy::default() };
            let d = score_admission(&answers, &policy);
            emit(json, &d, || {
                let mut s = format!("admission: {}\n", if d.pass { "pass" } else { "fail" });
                for f in &d.failed_items {
                    s += &format!("failed {}: {}\n", f.clause, f.reason);
                }
                for n in &d.notes {
                    s += &format!("note: {n}\n");
                }
                s
            })?;
            Ok(Status::pass_fail(d.pass))
        }
        GovernanceCommand::Cqoe { input } => {
            let sheet: CqoeSheet = parse_json(input)?;
            let total = score_cqoe(&sheet);
            emit(json, &serde_json::json!({ "items": sheet, "total": total }), || {
                format!("CQOE total {total} / 100\n")
            })?;
            Ok(Status::Ok)
        }
        GovernanceCommand::Pipeline { state, stage, deliverable, output } => {
            let pipeline = match state {
                Some(p) => parse_json(p)?,
                None => ValidationPipeline::new(),
            };
            let stage: Stage = serde_json::from_value(serde_json::Value::String(stage.clone()))
                .with_context(|| format!("unknown stage `{stage}` (expected I..VI)"))?;
            match pipeline.advance(&Deliverable { stage, reference: deliverable.clone() }) {
                Ok(next) => {
                    let text = serde_json::to_string_pretty(&next)? + "\n";
                    if let Some(path) = output {
                        write_atomic(path, text.as_bytes())?;
                    }
                    emit(json, &next, || format!("stage {} recorded; now at {}\n", stage, next.stage()))?;
                    Ok(Status::Ok)
                }
                Err(CoreError::Pipeline(msg)) => {
                    eprintln!("rejected: {msg}");
                    Ok(Status::Fail)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn report(cmd: &ReportCommand, json: bool) -> Result<Status> {
    match cmd {
        ReportCommand::CheckStard { input } => {
            let r: StudyReport = parse_json(input)?;
            let c = check_stard(&r)?;
            emit(json, &c, || {
                if c.complete {
                    "STARD checklist complete\n".into()
                } else {
                    format!("missing items: {}\n", c.missing.join(", "))
                }
            })?;
            Ok(Status::pass_fail(c.complete))
        }
    }
}

fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Evaluate(a) => evaluate::run(a, cli.json),
        Command::Roc(a) => roc(a, cli.json),
        Command::Agreement(c) => agreement(c, cli.json),
        Command::Samplesize(a) => samplesize(a, cli.json),
        Command::ValidateDataset(a) => validate_dataset(a, cli.json),
        Command::Governance(c) => governance(c, cli.json),
        Command::Report(c) => report(c, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors; usage errors map to 1
            return ExitCode::from(if e.use_stderr() { Status::Error as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Error as u8)
        }
    }
}
