//! STARD 2015 completeness checking and PCTT report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::metrics::{ConfusionMatrix, Interval, MetricSet, Outcome, Verdict};
use crate::num::extended_f64;
use crate::roc::{CutoffRule, RocSummary};
use crate::study_design::DatasetManifest;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// STARD checklist
// ---------------------------------------------------------------------------

/// Checklist rows in printed order. Sub-items count as separate rows.
pub const STARD_ITEMS: [&str; 34] = [
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "10a", "10b", "11", "12a", "12b", "13a", "13b", "14", "15", "16",
    "17", "18", "19", "20", "21a", "21b", "22", "23", "24", "25", "26", "27", "28", "29", "30",
];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StardEntry {
    pub present: bool,
    #[serde(default)]
    pub text: String,
}

impl StardEntry {
    pub fn filled(text: impl Into<String>) -> Self {
        StardEntry { present: true, text: text.into() }
    }

    fn is_filled(&self) -> bool {
        self.present && !self.text.trim().is_empty()
    }
}

/// Study report keyed by checklist item id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StudyReport {
    pub items: BTreeMap<String, StardEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StardCompleteness {
    pub complete: bool,
    /// Absent or empty items, in checklist order.
    pub missing: Vec<String>,
}

pub fn check_stard(report: &StudyReport) -> Result<StardCompleteness> {
    if let Some(unknown) = report.items.keys().find(|k| !STARD_ITEMS.contains(&k.as_str())) {
        return Err(Error::UnknownKey(format!("STARD item {unknown}")));
    }
    let missing: Vec<String> = STARD_ITEMS
        .iter()
        .filter(|id| !report.items.get(**id).is_some_and(StardEntry::is_filled))
        .map(|id| id.to_string())
        .collect();
    Ok(StardCompleteness { complete: missing.is_empty(), missing })
}

// ---------------------------------------------------------------------------
// PCTT report
// ---------------------------------------------------------------------------

const NOT_PROVIDED: &str = "not provided";
pub const AUC_NOT_APPLICABLE: &str = "not applicable (binary index test)";

const INDEPENDENCE_ATTESTATION: &str = "Attested by the testing institution: no study of the reference dataset \
was used, wholly or partly, to train or calibrate the software under test.";

/// Free-text parts of the report supplied by the testing institution.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcttMetadata {
    pub institution: String,
    pub contact_details: String,
    /// Date range of the tests.
    pub test_dates: String,
    pub summary: String,
    pub purpose: String,
    pub reference_dataset: String,
    pub data_type: String,
    pub dataset_generation: String,
    pub index_test: String,
    pub process: String,
    pub reference_threshold: String,
    pub limitations: String,
    pub conclusions: String,
    pub funding: String,
    pub other_information: String,
    pub researchers: Vec<String>,
    /// Date printed in the report header.
    pub report_date: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub rule: CutoffRule,
    #[serde(with = "extended_f64")]
    pub threshold: f64,
}

/// Record counts from ingestion and joining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FlowSummary {
    pub predictions: u64,
    pub reference: u64,
    pub matched: u64,
    pub unmatched_predictions: u64,
    pub unmatched_reference: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PcttInput {
    pub metadata: PcttMetadata,
    pub manifest: Option<DatasetManifest>,
    pub metrics: Option<MetricSet>,
    pub roc: Option<RocSummary>,
    /// Threshold applied to index test scores; `None` for binary output.
    pub threshold: Option<ThresholdSelection>,
    pub flow: FlowSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Number(#[serde(with = "extended_f64")] pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedMetric {
    pub name: String,
    pub estimate: Option<Number>,
    pub ci: Option<Interval>,
    pub verdict: Option<Verdict>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyParameters {
    pub confidence: f64,
    pub metrics: Vec<ReportedMetric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationThreshold {
    pub index_test: Option<ThresholdSelection>,
    pub reference_test: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcttReport {
    pub report_date: String,
    pub item_1_institution: String,
    pub item_2_contact_details: String,
    pub item_3_dates: String,
    pub item_4_summary: String,
    pub item_5_purpose: String,
    pub item_6_reference_dataset: String,
    pub item_6_1_data_type: String,
    pub item_6_2_cases: String,
    pub item_6_3_population: String,
    pub item_6_4_dataset_and_tagging: String,
    pub item_6_5_pathology: String,
    pub item_6_6_dataset_generation: String,
    pub item_6_7_data_sources: String,
    pub item_6_8_independence: String,
    pub item_7_index_test: String,
    pub item_8_process: String,
    pub item_9_result_table: ConfusionMatrix,
    pub item_10_activation_threshold: ActivationThreshold,
    pub item_11_accuracy: AccuracyParameters,
    pub item_12_limitations: String,
    pub item_13_conclusions: String,
    pub item_14_funding: String,
    pub item_15_other_information: String,
    pub item_16_researchers: Vec<String>,
    pub item_17_signing_date: String,
    pub item_18_responsible_signature: String,
    pub item_19_head_signature: String,
    pub item_20_seal: String,
}

fn or_missing(text: &str) -> String {
    let t = text.trim();
    if t.is_empty() {
        NOT_PROVIDED.to_string()
    } else {
        t.to_string()
    }
}

fn proportion_row(name: &str, outcome: &Outcome<crate::metrics::Proportion>) -> ReportedMetric {
    match outcome {
        Outcome::Defined(p) => ReportedMetric {
            name: name.into(),
            estimate: Some(Number(p.estimate)),
            ci: Some(p.ci),
            verdict: Some(p.verdict),
            note: None,
        },
        Outcome::Undefined { reason } => undefined_row(name, reason),
    }
}

fn ratio_row(name: &str, outcome: &Outcome<crate::metrics::Ratio>) -> ReportedMetric {
    match outcome {
        Outcome::Defined(r) => ReportedMetric {
            name: name.into(),
            estimate: Some(Number(r.estimate)),
            ci: Some(r.ci),
            verdict: None,
            note: r.continuity_corrected.then(|| "interval uses 0.5 continuity correction".to_string()),
        },
        Outcome::Undefined { reason } => undefined_row(name, reason),
    }
}

fn undefined_row(name: &str, reason: &str) -> ReportedMetric {
    ReportedMetric {
        name: name.into(),
        estimate: None,
        ci: None,
        verdict: None,
        note: Some(format!("undefined: {reason}")),
    }
}

fn accuracy_rows(metrics: &MetricSet, roc: Option<&RocSummary>) -> Vec<ReportedMetric> {
    let mut rows = vec![
        proportion_row("sensitivity", &metrics.sensitivity),
        proportion_row("specificity", &metrics.specificity),
        proportion_row("accuracy", &metrics.accuracy),
    ];
    rows.push(match roc {
        Some(r) => ReportedMetric {
            name: "auc".into(),
            estimate: Some(Number(r.auc)),
            ci: Some(r.auc_ci),
            verdict: Some(r.verdict),
            note: Some(format!("{:?} interval", r.ci_method)),
        },
        None => ReportedMetric {
            name: "auc".into(),
            estimate: None,
            ci: None,
            verdict: None,
            note: Some(AUC_NOT_APPLICABLE.into()),
        },
    });
    rows.extend([
        proportion_row("ppv", &metrics.ppv),
        proportion_row("npv", &metrics.npv),
        proportion_row("fpr", &metrics.fpr),
        ratio_row("lr_pos", &metrics.lr_pos),
        ratio_row("lr_neg", &metrics.lr_neg),
    ]);
    rows
}

fn dataset_items(m: Option<&DatasetManifest>, meta: &PcttMetadata) -> [String; 6] {
    let Some(m) = m else {
        return [
            or_missing(&meta.data_type),
            NOT_PROVIDED.into(),
            NOT_PROVIDED.into(),
            NOT_PROVIDED.into(),
            NOT_PROVIDED.into(),
            NOT_PROVIDED.into(),
        ];
    };
    let sc = &m.study_characteristics;
    let mut data_type = format!(
        "modality {}; anatomical region {}; device {}; protocol {}",
        sc.modality, sc.anatomical_region, sc.device, sc.protocol
    );
    if !meta.data_type.trim().is_empty() {
        data_type = format!("{}; {data_type}", meta.data_type.trim());
    }
    let c = &m.counts;
    let cases = format!("{} cases, {} studies, {} images, {} reports", c.cases, c.studies, c.images, c.reports);
    let p = &m.population;
    let mut population = Vec::new();
    if !p.descriptors.is_empty() {
        population.push(p.descriptors.join(", "));
    }
    for (label, v) in [("age", &p.age_range), ("sex ratio", &p.sex_ratio), ("geography", &p.geography)] {
        if let Some(v) = v {
            population.push(format!("{label} {v}"));
        }
    }
    let population = if population.is_empty() { NOT_PROVIDED.to_string() } else { population.join("; ") };
    let tagging = format!(
        "state registration: {}; tagging documents: {}",
        m.registration_certificate.as_deref().unwrap_or(NOT_PROVIDED),
        if m.tagging_refs.is_empty() { NOT_PROVIDED.to_string() } else { m.tagging_refs.join(", ") }
    );
    let groups: Vec<String> = c
        .groups
        .iter()
        .map(|g| match &g.icd_code {
            Some(code) => format!("{} ({code}): {}", g.name, g.studies),
            None => format!("{}: {}", g.name, g.studies),
        })
        .collect();
    let pathology = format!(
        "ICD-10 codes {}; normal:abnormal {}:{}; groups [{}]; verification {}",
        m.icd_codes.join(", "),
        m.normal_to_abnormal.normal,
        m.normal_to_abnormal.abnormal,
        groups.join("; "),
        m.verification_method
    );
    let sources = format!("{} institution(s): {}", m.source_centers.len(), m.source_centers.join(", "));
    [data_type, cases, population, tagging, pathology, sources]
}

fn process_text(meta: &PcttMetadata, flow: &FlowSummary) -> String {
    format!(
        "{}. Flow: {} index test results and {} reference records received; {} studies matched and analysed; \
{} index test results without reference; {} reference records without index test result.",
        or_missing(&meta.process),
        flow.predictions,
        flow.reference,
        flow.matched,
        flow.unmatched_predictions,
        flow.unmatched_reference
    )
}

fn limitations_text(meta: &PcttMetadata, flow: &FlowSummary, rows: &[ReportedMetric]) -> String {
    let mut parts = vec![or_missing(&meta.limitations)];
    let unmatched = flow.unmatched_predictions + flow.unmatched_reference;
    if unmatched > 0 {
        parts.push(format!("{unmatched} record(s) excluded because they could not be matched by study id"));
    }
    for r in rows.iter().filter(|r| r.estimate.is_none() && r.name != "auc") {
        parts.push(format!("{} could not be estimated", r.name));
    }
    parts.join("; ")
}

fn conclusions_text(meta: &PcttMetadata, rows: &[ReportedMetric]) -> String {
    let verdicts: Vec<String> = rows
        .iter()
        .filter(|r| matches!(r.name.as_str(), "sensitivity" | "specificity" | "accuracy" | "auc"))
        .filter_map(|r| r.verdict.map(|v| format!("{} {v}", r.name)))
        .collect();
    let auto = format!("Verdicts: {}", verdicts.join(", "));
    if meta.conclusions.trim().is_empty() {
        auto
    } else {
        format!("{}. {auto}", meta.conclusions.trim())
    }
}

/// Assemble the 20-item report. Fails when there is no confusion matrix.
pub fn render_pctt(input: &PcttInput) -> Result<PcttReport> {
    let metrics = input.metrics.as_ref().ok_or(Error::MissingSection("confusion matrix and accuracy metrics"))?;
    let meta = &input.metadata;
    let rows = accuracy_rows(metrics, input.roc.as_ref());
    let [data_type, cases, population, tagging, pathology, sources] = dataset_items(input.manifest.as_ref(), meta);
    let reference_test = if meta.reference_threshold.trim().is_empty() {
        "reference labels are binary (pathology present / absent)".to_string()
    } else {
        meta.reference_threshold.trim().to_string()
    };

    Ok(PcttReport {
        report_date: or_missing(&meta.report_date),
        item_1_institution: or_missing(&meta.institution),
        item_2_contact_details: or_missing(&meta.contact_details),
        item_3_dates: or_missing(&meta.test_dates),
        item_4_summary: or_missing(&meta.summary),
        item_5_purpose: or_missing(&meta.purpose),
        item_6_reference_dataset: or_missing(&meta.reference_dataset),
        item_6_1_data_type: data_type,
        item_6_2_cases: cases,
        item_6_3_population: population,
        item_6_4_dataset_and_tagging: tagging,
        item_6_5_pathology: pathology,
        item_6_6_dataset_generation: or_missing(&meta.dataset_generation),
        item_6_7_data_sources: sources,
        item_6_8_independence: INDEPENDENCE_ATTESTATION.into(),
        item_7_index_test: or_missing(&meta.index_test),
        item_8_process: process_text(meta, &input.flow),
        item_9_result_table: metrics.confusion,
        item_10_activation_threshold: ActivationThreshold { index_test: input.threshold, reference_test },
        item_12_limitations: limitations_text(meta, &input.flow, &rows),
        item_13_conclusions: conclusions_text(meta, &rows),
        item_11_accuracy: AccuracyParameters { confidence: metrics.confidence, metrics: rows },
        item_14_funding: or_missing(&meta.funding),
        item_15_other_information: or_missing(&meta.other_information),
        item_16_researchers: meta.researchers.clone(),
        item_17_signing_date: "[date of signing]".into(),
        item_18_responsible_signature: "[signature of the person responsible for the tests, full name]".into(),
        item_19_head_signature: "[signature of the head of institution, full name]".into(),
        item_20_seal: "[seal of the institution]".into(),
    })
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.4}")
    }
}

impl PcttReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Human-readable form. Numbers are rounded to four decimals; the JSON
    /// form keeps full precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line("PRELIMINARY CLINICAL AND TECHNICAL TESTS (PCTT) REPORT".into());
        line(format!("Report date: {}", self.report_date));
        line(String::new());
        line(format!("1. Institution: {}", self.item_1_institution));
        line(format!("2. Contact details: {}", self.item_2_contact_details));
        line(format!("3. Dates of PCTT: {}", self.item_3_dates));
        line(format!("4. Summary: {}", self.item_4_summary));
        line(format!("5. Purpose, objectives and endpoints: {}", self.item_5_purpose));
        line(format!("6. Reference test (reference dataset): {}", self.item_6_reference_dataset));
        line(format!("6.1 Data type: {}", self.item_6_1_data_type));
        line(format!("6.2 Number of clinical cases: {}", self.item_6_2_cases));
        line(format!("6.3 Population characteristics: {}", self.item_6_3_population));
        line(format!("6.4 Dataset and tagging characteristics: {}", self.item_6_4_dataset_and_tagging));
        line(format!("6.5 Pathology characteristics: {}", self.item_6_5_pathology));
        line(format!("6.6 Dataset generation: {}", self.item_6_6_dataset_generation));
        line(format!("6.7 Data sources: {}", self.item_6_7_data_sources));
        line(format!("6.8 Independence notice: {}", self.item_6_8_independence));
        line(format!("7. Index test: {}", self.item_7_index_test));
        line(format!("8. PCTT process: {}", self.item_8_process));

        let cm = &self.item_9_result_table;
        line("9. Result table (index test rows, reference test columns):".into());
        line("                     reference +   reference -   total".into());
        line(format!("   index test +  {:>13} {:>13} {:>7}", cm.tp, cm.fp, cm.tp + cm.fp));
        line(format!("   index test -  {:>13} {:>13} {:>7}", cm.fn_, cm.tn, cm.fn_ + cm.tn));
        line(format!("   total         {:>13} {:>13} {:>7}", cm.positives(), cm.negatives(), cm.total()));

        let t = &self.item_10_activation_threshold;
        match &t.index_test {
            Some(sel) => line(format!(
                "10. Activation threshold: index test {} (rule: {}); reference test: {}",
                num(sel.threshold),
                sel.rule,
                t.reference_test
            )),
            None => line(format!(
                "10. Activation threshold: index test output is binary, no threshold applied; reference test: {}",
                t.reference_test
            )),
        }

        let acc = &self.item_11_accuracy;
        let pct = (acc.confidence * 1e6).round() / 1e4;
        line(format!("11. Diagnostic accuracy parameters ({pct}% confidence intervals):"));
        for m in &acc.metrics {
            let mut s = format!("   {:<12}", m.name);
            match (m.estimate, m.ci) {
                (Some(e), Some(ci)) => {
                    let _ = write!(s, " {} [{}, {}]", num(e.0), num(ci.low), num(ci.high));
                }
                (Some(e), None) => {
                    let _ = write!(s, " {}", num(e.0));
                }
                _ => {}
            }
            if let Some(v) = m.verdict {
                let _ = write!(s, " {v}");
            }
            if let Some(n) = &m.note {
                let _ = write!(s, " ({n})");
            }
            line(s.trim_end().to_string());
        }

        line(format!("12. Limitations: {}", self.item_12_limitations));
        line(format!("13. Conclusions: {}", self.item_13_conclusions));
        line(format!("14. Sources of funding: {}", self.item_14_funding));
        line(format!("15. Other information: {}", self.item_15_other_information));
        if self.item_16_researchers.is_empty() {
            line(format!("16. Researchers: {NOT_PROVIDED}"));
        } else {
            line("16. Researchers:".into());
            for r in &self.item_16_researchers {
                line(format!("   - {r}"));
            }
        }
        line(format!("17. Date of signing: {}", self.item_17_signing_date));
        line(format!("18. Responsible person: {}", self.item_18_responsible_signature));
        line(format!("19. Head of institution: {}", self.item_19_head_signature));
        line(format!("20. Seal: {}", self.item_20_seal));
        out
    }
}
