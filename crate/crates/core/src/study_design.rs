//! Reference dataset sizing and manifest checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeRequest {
    /// Expected proportion, e.g. the anticipated sensitivity.
    pub expected_proportion: f64,
    /// Half-width of the confidence interval.
    pub half_width: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    pub n: u64,
    pub z: f64,
    pub request: SampleSizeRequest,
    /// Set when the interval `p ± d` would cross 0 or 1.
    pub warning: Option<String>,
}

/// `n = ceil(z^2 p (1 - p) / d^2)` with `d` the interval half-width.
pub fn required_sample_size(req: &SampleSizeRequest) -> Result<SampleSize> {
    let SampleSizeRequest { expected_proportion: p, half_width: d, confidence } = *req;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("expected proportion {p} must lie in (0, 1)")));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::InvalidArgument(format!("half-width {d} must lie in (0, 1)")));
    }
    let z = num::two_sided_z(confidence)?;
    let raw = z * z * p * (1.0 - p) / (d * d);
    // absorb rounding noise so exact integers are not pushed up by one
    let n = (raw - 1e-9).ceil().max(1.0) as u64;
    let warning = (d >= p.min(1.0 - p)).then(|| {
        format!("half-width {d} reaches past the [0, 1] boundary around p = {p}; the normal approximation is poor")
    });
    Ok(SampleSize { n, z, request: *req, warning })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Population {
    /// Free-text descriptors (race, socio-economic, health indicators...).
    #[serde(default)]
    pub descriptors: Vec<String>,
    #[serde(default)]
    pub age_range: Option<String>,
    #[serde(default)]
    pub sex_ratio: Option<String>,
    #[serde(default)]
    pub geography: Option<String>,
}

impl Population {
    fn has_demographics(&self) -> bool {
        self.age_range.is_some() && self.sex_ratio.is_some() && self.geography.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StudyCharacteristics {
    pub anatomical_region: String,
    pub modality: String,
    pub device: String,
    pub protocol: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticGroup {
    pub name: String,
    #[serde(default)]
    pub icd_code: Option<String>,
    pub studies: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub cases: u64,
    pub studies: u64,
    pub images: u64,
    pub reports: u64,
    #[serde(default)]
    pub groups: Vec<DiagnosticGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalToAbnormal {
    pub normal: f64,
    pub abnormal: f64,
}

impl NormalToAbnormal {
    pub fn prevalence(&self) -> f64 {
        self.abnormal / (self.normal + self.abnormal)
    }
}

/// Reference dataset metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default)]
    pub registration_certificate: Option<String>,
    #[serde(default)]
    pub population: Population,
    #[serde(default)]
    pub source_centers: Vec<String>,
    pub study_characteristics: StudyCharacteristics,
    #[serde(default)]
    pub icd_codes: Vec<String>,
    pub counts: DatasetCounts,
    pub normal_to_abnormal: NormalToAbnormal,
    #[serde(default)]
    pub verification_method: String,
    #[serde(default)]
    pub tagging_refs: Vec<String>,
    pub publicly_available: bool,
}

impl DatasetManifest {
    /// Structural checks that must hold before the manifest is evaluated.
    pub fn validate_structure(&self) -> Result<()> {
        let r = self.normal_to_abnormal;
        if !(r.normal > 0.0 && r.abnormal > 0.0 && r.normal.is_finite() && r.abnormal.is_finite()) {
            return Err(Error::Manifest("normal_to_abnormal components must be positive".into()));
        }
        if self.icd_codes.iter().all(|c| c.trim().is_empty()) {
            return Err(Error::Manifest(
                "icd_codes must list the target pathology when abnormal cases are present".into(),
            ));
        }
        let grouped: u64 = self.counts.groups.iter().map(|g| g.studies).sum();
        if !self.counts.groups.is_empty() && grouped != self.counts.studies {
            return Err(Error::Manifest(format!(
                "diagnostic groups account for {grouped} studies but counts.studies is {}",
                self.counts.studies
            )));
        }
        Ok(())
    }

    /// Abnormal and normal study counts implied by the ratio.
    pub fn class_counts(&self) -> (u64, u64) {
        let abnormal = (self.counts.studies as f64 * self.normal_to_abnormal.prevalence()).round() as u64;
        (abnormal, self.counts.studies - abnormal.min(self.counts.studies))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PopulationProfile {
    /// Prevalence of the target pathology in the intended population.
    pub prevalence: f64,
    #[serde(default)]
    pub descriptors: BTreeMap<String, String>,
}

/// Which class count a claimed accuracy target is sized against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMetric {
    Sensitivity,
    Specificity,
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTarget {
    pub metric: TargetMetric,
    #[serde(flatten)]
    pub request: SampleSizeRequest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Blocking,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Blocking => "blocking",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    /// `requirement-N` for dataset requirements, `content-N` for manifest items.
    pub item: String,
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    fn blocking(item: &str, message: String) -> Self {
        Finding { item: item.into(), severity: Severity::Blocking, message }
    }

    fn warning(item: &str, message: String) -> Self {
        Finding { item: item.into(), severity: Severity::Warning, message }
    }
}

pub const DEFAULT_PREVALENCE_TOLERANCE: f64 = 0.05;

/// Check a manifest against the five dataset requirements plus the advisable
/// content items. Returns findings in requirement order, then content order.
pub fn validate_manifest(
    manifest: &DatasetManifest,
    profile: &PopulationProfile,
    targets: &[AccuracyTarget],
    prevalence_tolerance: f64,
) -> Result<Vec<Finding>> {
    manifest.validate_structure()?;
    if !(profile.prevalence > 0.0 && profile.prevalence < 1.0) {
        return Err(Error::InvalidArgument(format!("population prevalence {} must lie in (0, 1)", profile.prevalence)));
    }
    if prevalence_tolerance.is_nan() || prevalence_tolerance < 0.0 {
        return Err(Error::InvalidArgument("prevalence tolerance must be non-negative".into()));
    }
    let mut findings = Vec::new();

    let dataset_prevalence = manifest.normal_to_abnormal.prevalence();
    let gap = (dataset_prevalence - profile.prevalence).abs();
    if gap > prevalence_tolerance {
        findings.push(Finding::blocking(
            "requirement-1",
            format!(
                "dataset prevalence {dataset_prevalence:.4} differs from population prevalence {:.4} by {gap:.4} (tolerance {prevalence_tolerance})",
                profile.prevalence
            ),
        ));
    }

    let centers: std::collections::BTreeSet<&str> =
        manifest.source_centers.iter().map(|c| c.trim()).filter(|c| !c.is_empty()).collect();
    if centers.len() < 2 {
        findings.push(Finding::blocking(
            "requirement-2",
            format!("dataset is sourced from {} medical center(s); at least 2 are required", centers.len()),
        ));
    }

    if !manifest.population.has_demographics() || manifest.population.descriptors.is_empty() {
        findings.push(Finding::blocking(
            "requirement-3",
            "population description lacks age range, sex ratio, geography or descriptors; correspondence to the target population needs manual review".into(),
        ));
    }

    let (abnormal, normal) = manifest.class_counts();
    for target in targets {
        let needed = required_sample_size(&target.request)?.n;
        let (available, label) = match target.metric {
            TargetMetric::Sensitivity => (abnormal, "abnormal studies"),
            TargetMetric::Specificity => (normal, "normal studies"),
            TargetMetric::Accuracy => (manifest.counts.studies, "studies"),
        };
        if available < needed {
            findings.push(Finding::blocking(
                "requirement-4",
                format!(
                    "{:?} target p={} ±{} at {} needs {needed} {label}; dataset has {available}",
                    target.metric,
                    target.request.expected_proportion,
                    target.request.half_width,
                    target.request.confidence
                ),
            ));
        }
    }

    if manifest.publicly_available {
        findings.push(Finding::blocking(
            "requirement-5",
            "reference dataset is publicly available and may have been used for training".into(),
        ));
    }

    if manifest.registration_certificate.as_deref().is_none_or(|s| s.trim().is_empty()) {
        findings.push(Finding::warning("content-1", "no state registration certificate number (advisable)".into()));
    }
    if manifest.verification_method.trim().is_empty() {
        findings.push(Finding::warning("content-7", "verification method is not described".into()));
    }
    if manifest.tagging_refs.is_empty() {
        findings.push(Finding::warning("content-8", "no tagging methodology references".into()));
    }
    Ok(findings)
}
