//! Decision tables and scoring sheets used to admit software to testing:
//! risk class, admission questionnaire, CQOE score, metric bundle selection
//! and the six-stage analytical validation pipeline.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::ADMISSIBLE_MIN;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Risk classification
// ---------------------------------------------------------------------------

/// Clinical situation category, A being the most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
}

/// Information value of the software output, I being crucial information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InfoValue {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SoftwareClass {
    #[serde(rename = "1")]
    Class1,
    #[serde(rename = "2a")]
    Class2a,
    #[serde(rename = "2b")]
    Class2b,
    #[serde(rename = "3")]
    Class3,
}

impl fmt::Display for SoftwareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SoftwareClass::Class1 => "1",
            SoftwareClass::Class2a => "2a",
            SoftwareClass::Class2b => "2b",
            SoftwareClass::Class3 => "3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provision {
    pub category: Category,
    pub info_value: InfoValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskInput {
    pub provisions: Vec<Provision>,
    /// Whether patients use the software under supervision of trained staff.
    pub supervised_use: bool,
}

/// The 3x3 classification table.
pub fn class_for(category: Category, info_value: InfoValue) -> SoftwareClass {
    use Category::*;
    use InfoValue::*;
    use SoftwareClass::*;
    match (category, info_value) {
        (A, I) => Class3,
        (A, II) => Class2b,
        (A, III) => Class2a,
        (B, I) => Class2b,
        (B, II) => Class2a,
        (B, III) => Class1,
        (C, I) => Class2a,
        (C, II) => Class1,
        (C, III) => Class1,
    }
}

/// Category B becomes A when patients use the software unsupervised.
pub fn escalate(category: Category, supervised_use: bool) -> Category {
    match category {
        Category::B if !supervised_use => Category::A,
        other => other,
    }
}

/// Class of the software: the highest-risk class over all provisions.
pub fn classify_risk(input: &RiskInput) -> Result<SoftwareClass> {
    input
        .provisions
        .iter()
        .map(|p| class_for(escalate(p.category, input.supervised_use), p.info_value))
        .max()
        .ok_or_else(|| Error::InvalidArgument("risk input needs at least one provision".into()))
}

// ---------------------------------------------------------------------------
// Admission questionnaire
// ---------------------------------------------------------------------------

/// Questionnaire clause ids in questionnaire order.
pub const ADMISSION_CLAUSES: [&str; 17] = [
    "1.1", "1.2", "1.3", "1.4", "2.1", "2.2", "2.3", "3.1", "3.2", "3.3", "4.1", "4.2", "4.3", "5.1", "5.2", "5.3",
    "5.4",
];

/// Clauses that are vendor statements about the organisation rather than
/// properties the commission can observe during testing.
const ATTESTED_CLAUSES: [&str; 10] = ["2.1", "2.2", "2.3", "3.1", "3.2", "3.3", "5.1", "5.2", "5.3", "5.4"];

/// Admission criteria with no questionnaire clause; listed for manual review.
const MANUAL_REVIEW: [&str; 5] = [
    "security: personal-data compliance and in-country server capacity",
    "standardization: DICOM analysis, HL7/FHIR messaging, recommended classifications (RADS, MAGNIMS)",
    "integration: seamless integration with PACS/RIS and medical information systems",
    "functionality: stream processing, DICOM SR declaration, RIS status-complete trigger, similar-study search",
    "contract: version preparation and control policy",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub auc: f64,
    pub processing_time_s: f64,
}

/// A yes/no answer written either as a boolean or as 1/0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
enum RawAnswer {
    Flag(bool),
    Digit(u8),
}

#[derive(Deserialize)]
struct RawAdmission {
    answers: BTreeMap<String, RawAnswer>,
    measured: Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAdmission")]
pub struct AdmissionAnswers {
    answers: BTreeMap<String, bool>,
    measured: Measured,
}

impl TryFrom<RawAdmission> for AdmissionAnswers {
    type Error = Error;

    fn try_from(raw: RawAdmission) -> Result<Self> {
        let answers = raw
            .answers
            .into_iter()
            .map(|(k, v)| match v {
                RawAnswer::Flag(b) => Ok((k, b)),
                RawAnswer::Digit(0) => Ok((k, false)),
                RawAnswer::Digit(1) => Ok((k, true)),
                RawAnswer::Digit(d) => Err(Error::InvalidArgument(format!("clause {k}: answer {d} is not 0 or 1"))),
            })
            .collect::<Result<_>>()?;
        AdmissionAnswers::new(answers, raw.measured)
    }
}

impl AdmissionAnswers {
    pub fn new(answers: BTreeMap<String, bool>, measured: Measured) -> Result<Self> {
        if let Some(unknown) = answers.keys().find(|k| !ADMISSION_CLAUSES.contains(&k.as_str())) {
            return Err(Error::UnknownKey(unknown.clone()));
        }
        if let Some(missing) = ADMISSION_CLAUSES.iter().find(|c| !answers.contains_key(**c)) {
            return Err(Error::MissingAnswer(missing.to_string()));
        }
        if !(measured.auc >= 0.0 && measured.auc <= 1.0) {
            return Err(Error::InvalidArgument(format!("measured AUC {} outside [0, 1]", measured.auc)));
        }
        if !(measured.processing_time_s >= 0.0 && measured.processing_time_s.is_finite()) {
            return Err(Error::InvalidArgument("measured processing time must be non-negative".into()));
        }
        Ok(AdmissionAnswers { answers, measured })
    }

    /// All clauses answered yes.
    pub fn all_yes(measured: Measured) -> Self {
        let answers = ADMISSION_CLAUSES.iter().map(|c| (c.to_string(), true)).collect();
        AdmissionAnswers::new(answers, measured).expect("complete answer set")
    }

    pub fn with_answer(mut self, clause: &str, value: bool) -> Result<Self> {
        if !ADMISSION_CLAUSES.contains(&clause) {
            return Err(Error::UnknownKey(clause.into()));
        }
        self.answers.insert(clause.into(), value);
        Ok(self)
    }

    pub fn answer(&self, clause: &str) -> bool {
        self.answers[clause]
    }

    pub fn measured(&self) -> Measured {
        self.measured
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissionPolicy {
    /// Maximum processing time per study, seconds.
    pub time_limit_s: f64,
    pub min_auc: f64,
}

pub const DEFAULT_TIME_LIMIT_S: f64 = 60.0;

impl Default for AdmissionPolicy {
    fn default() -> Self {
        AdmissionPolicy { time_limit_s: DEFAULT_TIME_LIMIT_S, min_auc: ADMISSIBLE_MIN }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedClause {
    pub clause: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionDecision {
    pub pass: bool,
    pub failed_items: Vec<FailedClause>,
    pub notes: Vec<String>,
}

fn section_name(clause: &str) -> &'static str {
    match clause.as_bytes()[0] {
        b'1' => "goals",
        b'2' => "certification",
        b'3' => "evidence",
        b'4' => "functionality",
        _ => "contract",
    }
}

/// Score the questionnaire and measured values against the admission criteria.
pub fn score_admission(answers: &AdmissionAnswers, policy: &AdmissionPolicy) -> AdmissionDecision {
    let mut failed = Vec::new();
    let mut fail = |clause: &str, reason: String| failed.push(FailedClause { clause: clause.into(), reason });

    for clause in ADMISSION_CLAUSES.iter().filter(|c| !c.starts_with('2')) {
        if !answers.answer(clause) {
            fail(clause, format!("{} clause {clause} answered 'no'", section_name(clause)));
        }
    }

    // certification: 2.1, or else both 2.2 and 2.3
    if !answers.answer("2.1") {
        for clause in ["2.2", "2.3"] {
            if !answers.answer(clause) {
                fail(clause, format!("clause 2.1 answered 'no', so clause {clause} must be 'yes'"));
            }
        }
    }

    let m = answers.measured();
    if m.auc < policy.min_auc {
        fail("measured.auc", format!("AUC ≥ {} (classic ROC curve) required; measured {}", policy.min_auc, m.auc));
    }
    if m.processing_time_s > policy.time_limit_s {
        fail(
            "measured.processing_time_s",
            format!(
                "processing time per study must not exceed {} s; measured {} s",
                policy.time_limit_s, m.processing_time_s
            ),
        );
    }

    let mut notes = vec![
        format!(
            "attested: clauses {} are vendor statements, recorded as answered and not verified",
            ATTESTED_CLAUSES.join(", ")
        ),
        format!(
            "AUC threshold {} applied; the vendor questionnaire form states 0.8, the stricter admission criterion governs",
            policy.min_auc
        ),
    ];
    notes.extend(MANUAL_REVIEW.iter().map(|m| format!("manual review: {m}")));

    AdmissionDecision { pass: failed.is_empty(), failed_items: failed, notes }
}

// ---------------------------------------------------------------------------
// CQOE score sheet
// ---------------------------------------------------------------------------

/// Allowed points per item: satisfactory, non-critical remarks, critical
/// remarks, no result.
pub const CQOE_POINTS: [u8; 4] = [20, 15, 5, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct RawCqoe {
    #[serde(rename = "A")]
    patient_safety: u8,
    #[serde(rename = "B")]
    product_quality: u8,
    #[serde(rename = "C")]
    clinical_responsibility: u8,
    #[serde(rename = "D")]
    cybersecurity: u8,
    #[serde(rename = "E")]
    proactive_culture: u8,
}

/// Five item scores A–E.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCqoe", into = "RawCqoe")]
pub struct CqoeSheet {
    items: [u8; 5],
}

impl CqoeSheet {
    pub fn new(items: [u8; 5]) -> Result<Self> {
        for (label, score) in ["A", "B", "C", "D", "E"].iter().zip(items) {
            if !CQOE_POINTS.contains(&score) {
                return Err(Error::InvalidArgument(format!("CQOE item {label}: {score} is not one of 20, 15, 5, 0")));
            }
        }
        Ok(CqoeSheet { items })
    }

    pub fn items(&self) -> [u8; 5] {
        self.items
    }
}

impl TryFrom<RawCqoe> for CqoeSheet {
    type Error = Error;

    fn try_from(r: RawCqoe) -> Result<Self> {
        CqoeSheet::new([
            r.patient_safety,
            r.product_quality,
            r.clinical_responsibility,
            r.cybersecurity,
            r.proactive_culture,
        ])
    }
}

impl From<CqoeSheet> for RawCqoe {
    fn from(s: CqoeSheet) -> Self {
        let [a, b, c, d, e] = s.items;
        RawCqoe {
            patient_safety: a,
            product_quality: b,
            clinical_responsibility: c,
            cybersecurity: d,
            proactive_culture: e,
        }
    }
}

/// Total out of 100.
pub fn score_cqoe(sheet: &CqoeSheet) -> u32 {
    sheet.items.iter().map(|&s| u32::from(s)).sum()
}

// ---------------------------------------------------------------------------
// Metric bundles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationTask {
    Detection,
    Classification,
    Segmentation,
    Nlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFamily {
    StandardSet,
    Roc,
    Dice,
    Kappa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub required: Vec<MetricFamily>,
    pub optional: Vec<MetricFamily>,
}

/// Basic metrics for a task. ROC analysis joins the standard set when the
/// index test emits scores.
pub fn select_metric_bundle(task: EvaluationTask, scores_available: bool) -> MetricBundle {
    use MetricFamily::*;
    match task {
        EvaluationTask::Detection | EvaluationTask::Classification => {
            let mut required = vec![StandardSet];
            if scores_available {
                required.push(Roc);
            }
            MetricBundle { required, optional: vec![] }
        }
        EvaluationTask::Segmentation => MetricBundle { required: vec![Dice], optional: vec![StandardSet] },
        EvaluationTask::Nlp => MetricBundle { required: vec![Kappa], optional: vec![StandardSet] },
    }
}

// ---------------------------------------------------------------------------
// Analytical validation pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "I")]
    Questionnaire,
    #[serde(rename = "II")]
    SelfTest,
    #[serde(rename = "III")]
    Interview,
    #[serde(rename = "IV")]
    OnlineTest,
    #[serde(rename = "V")]
    EvidenceTest,
    #[serde(rename = "VI")]
    FinalEvaluation,
    #[serde(rename = "done")]
    Done,
}

impl Stage {
    pub const ORDER: [Stage; 7] = [
        Stage::Questionnaire,
        Stage::SelfTest,
        Stage::Interview,
        Stage::OnlineTest,
        Stage::EvidenceTest,
        Stage::FinalEvaluation,
        Stage::Done,
    ];

    pub fn next(self) -> Option<Stage> {
        let i = Stage::ORDER.iter().position(|s| *s == self)?;
        Stage::ORDER.get(i + 1).copied()
    }

    /// Expected deliverable for the stage.
    pub fn deliverable(self) -> &'static str {
        match self {
            Stage::Questionnaire => "completed questionnaire",
            Stage::SelfTest => "files with dataset processing results",
            Stage::Interview => "answers to the interview protocol",
            Stage::OnlineTest => "per-study performance report",
            Stage::EvidenceTest => "diagnostic accuracy evaluation",
            Stage::FinalEvaluation => "admission decision with final scores",
            Stage::Done => "none",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Questionnaire => "I questionnaire",
            Stage::SelfTest => "II self-test",
            Stage::Interview => "III interview",
            Stage::OnlineTest => "IV online test",
            Stage::EvidenceTest => "V evidence test",
            Stage::FinalEvaluation => "VI final evaluation",
            Stage::Done => "done",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deliverable {
    pub stage: Stage,
    /// File path, document id or other pointer to the deliverable.
    pub reference: String,
}

/// Progress through the six validation stages. Advancing returns a new value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPipeline")]
pub struct ValidationPipeline {
    stage: Stage,
    deliverables: BTreeMap<Stage, String>,
}

#[derive(Deserialize)]
struct RawPipeline {
    stage: Stage,
    #[serde(default)]
    deliverables: BTreeMap<Stage, String>,
}

impl TryFrom<RawPipeline> for ValidationPipeline {
    type Error = Error;

    fn try_from(raw: RawPipeline) -> Result<Self> {
        let expected: Vec<Stage> = Stage::ORDER.iter().copied().take_while(|s| *s < raw.stage).collect();
        let present: Vec<Stage> = raw.deliverables.keys().copied().collect();
        if present != expected {
            return Err(Error::Pipeline(format!(
                "deliverables must exist exactly for the stages before {}",
                raw.stage
            )));
        }
        Ok(ValidationPipeline { stage: raw.stage, deliverables: raw.deliverables })
    }
}

impl Default for ValidationPipeline {
    fn default() -> Self {
        ValidationPipeline::new()
    }
}

impl ValidationPipeline {
    pub fn new() -> Self {
        ValidationPipeline { stage: Stage::Questionnaire, deliverables: BTreeMap::new() }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn deliverables(&self) -> &BTreeMap<Stage, String> {
        &self.deliverables
    }

    /// Record the deliverable for the current stage and move to the next one.
    pub fn advance(&self, deliverable: &Deliverable) -> Result<ValidationPipeline> {
        if self.stage == Stage::Done {
            return Err(Error::Pipeline("validation is already complete".into()));
        }
        if self.deliverables.contains_key(&deliverable.stage) {
            return Err(Error::Pipeline(format!("stage {} already has a deliverable", deliverable.stage)));
        }
        if deliverable.stage != self.stage {
            return Err(Error::Pipeline(format!(
                "out of order: current stage is {}, deliverable targets {}",
                self.stage, deliverable.stage
            )));
        }
        if deliverable.reference.trim().is_empty() {
            return Err(Error::Pipeline("deliverable reference is empty".into()));
        }
        if self.stage == Stage::FinalEvaluation {
            let missing: Vec<String> = Stage::ORDER[..5]
                .iter()
                .filter(|s| !self.deliverables.contains_key(s))
                .map(|s| s.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(Error::Pipeline(format!("final evaluation needs deliverables for {}", missing.join(", "))));
            }
        }
        let mut next = self.clone();
        next.deliverables.insert(self.stage, deliverable.reference.clone());
        next.stage = self.stage.next().expect("stage before done has a successor");
        Ok(next)
    }
}

/// Free-function form of [`ValidationPipeline::advance`].
pub fn advance_stage(pipeline: &ValidationPipeline, deliverable: &Deliverable) -> Result<ValidationPipeline> {
    pipeline.advance(deliverable)
}
