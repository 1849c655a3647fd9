//! ROC curves, AUC and activation-threshold selection.
//!
//! A study is called positive when `score >= threshold`. The curve has one
//! point per distinct score, preceded by `(0, 0)` at threshold `+inf`; equal
//! scores form a single diagonal step.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::{self, ConfusionMatrix, Interval, Verdict};
use crate::num::{self, extended_f64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub actual: bool,
}

impl ScoredSample {
    pub fn new(score: f64, actual: bool) -> Self {
        ScoredSample { score, actual }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    #[serde(with = "extended_f64")]
    pub threshold: f64,
    /// Reference positives at or above the threshold.
    pub tp: u64,
    /// Reference negatives at or above the threshold.
    pub fp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub n_pos: u64,
    pub n_neg: u64,
}

fn validate_scores(scored: &[ScoredSample]) -> Result<(u64, u64)> {
    if let Some(s) = scored.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::InvalidArgument(format!("score {} is not finite", s.score)));
    }
    let n_pos = scored.iter().filter(|s| s.actual).count() as u64;
    let n_neg = scored.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined(
            "ROC curve",
            "reference labels must include at least one positive and one negative".into(),
        ));
    }
    Ok((n_pos, n_neg))
}

/// Build the empirical ROC curve.
pub fn roc_curve(scored: &[ScoredSample]) -> Result<RocCurve> {
    let (n_pos, n_neg) = validate_scores(scored)?;
    let mut sorted: Vec<&ScoredSample> = scored.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let point = |tp: u64, fp: u64, threshold: f64| RocPoint {
        fpr: fp as f64 / n_neg as f64,
        tpr: tp as f64 / n_pos as f64,
        threshold,
        tp,
        fp,
    };
    let mut points = vec![point(0, 0, f64::INFINITY)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        while i < sorted.len() && sorted[i].score == threshold {
            if sorted[i].actual {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(point(tp, fp, threshold));
    }
    Ok(RocCurve { points, n_pos, n_neg })
}

impl RocCurve {
    /// Trapezoidal area under the curve, accumulated in integer counts.
    pub fn trapezoidal_area(&self) -> f64 {
        let doubled: u128 =
            self.points.windows(2).map(|w| (w[1].fp - w[0].fp) as u128 * (w[1].tp + w[0].tp) as u128).sum();
        doubled as f64 / (2.0 * self.n_pos as f64 * self.n_neg as f64)
    }

    /// CSV export with columns `threshold,fpr,tpr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            let threshold = if p.threshold.is_infinite() { "inf".to_string() } else { p.threshold.to_string() };
            out.push_str(&format!("{threshold},{},{}\n", p.fpr, p.tpr));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucCiMethod {
    DeLong,
    /// Used when either class has fewer than three members.
    HanleyMcNeil,
}

impl fmt::Display for AucCiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AucCiMethod::DeLong => "DeLong",
            AucCiMethod::HanleyMcNeil => "Hanley-McNeil (fewer than 3 cases in a class)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucEstimate {
    pub auc: f64,
    pub ci: Interval,
    pub ci_method: AucCiMethod,
    pub verdict: Verdict,
}

/// Counts of values in a sorted slice strictly below and equal to `x`.
fn below_and_equal(sorted: &[f64], x: f64) -> (usize, usize) {
    let below = sorted.partition_point(|&v| v < x);
    let upto = sorted.partition_point(|&v| v <= x);
    (below, upto - below)
}

fn delong_variance(scored: &[ScoredSample], area: f64) -> f64 {
    let mut pos: Vec<f64> = scored.iter().filter(|s| s.actual).map(|s| s.score).collect();
    let mut neg: Vec<f64> = scored.iter().filter(|s| !s.actual).map(|s| s.score).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let (m, n) = (pos.len() as f64, neg.len() as f64);

    // structural components: per-positive and per-negative placement values
    let v10 = pos.iter().map(|&x| {
        let (below, eq) = below_and_equal(&neg, x);
        (below as f64 + 0.5 * eq as f64) / n
    });
    let v01 = neg.iter().map(|&y| {
        let (below, eq) = below_and_equal(&pos, y);
        let above = pos.len() - below - eq;
        (above as f64 + 0.5 * eq as f64) / m
    });
    let s10 = v10.map(|v| (v - area).powi(2)).sum::<f64>() / (m - 1.0);
    let s01 = v01.map(|v| (v - area).powi(2)).sum::<f64>() / (n - 1.0);
    s10 / m + s01 / n
}

fn hanley_mcneil_variance(area: f64, n_pos: u64, n_neg: u64) -> f64 {
    let (m, n) = (n_pos as f64, n_neg as f64);
    let q1 = area / (2.0 - area);
    let q2 = 2.0 * area * area / (1.0 + area);
    ((area * (1.0 - area) + (m - 1.0) * (q1 - area * area) + (n - 1.0) * (q2 - area * area)) / (m * n)).max(0.0)
}

/// Area under `curve` with a confidence interval computed from the raw
/// scores the curve was built from.
pub fn auc(curve: &RocCurve, scored: &[ScoredSample], confidence: f64) -> Result<AucEstimate> {
    let (n_pos, n_neg) = validate_scores(scored)?;
    if (n_pos, n_neg) != (curve.n_pos, curve.n_neg) {
        return Err(Error::InvalidArgument("curve was not built from these scores".into()));
    }
    let z = num::two_sided_z(confidence)?;
    let area = curve.trapezoidal_area();
    let (variance, ci_method) = if n_pos < 3 || n_neg < 3 {
        (hanley_mcneil_variance(area, n_pos, n_neg), AucCiMethod::HanleyMcNeil)
    } else {
        (delong_variance(scored, area), AucCiMethod::DeLong)
    };
    let half = z * variance.sqrt();
    Ok(AucEstimate {
        auc: area,
        ci: Interval { low: (area - half).max(0.0), high: (area + half).min(1.0) },
        ci_method,
        verdict: metrics::verdict(area)?,
    })
}

/// Which rule picked an activation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "threshold")]
pub enum CutoffRule {
    /// Maximum Youden index J = sensitivity + specificity - 1.
    Youden,
    /// Minimum distance to the (0, 1) corner.
    Dmin,
    Fixed(f64),
}

impl fmt::Display for CutoffRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffRule::Youden => f.write_str("maximum Youden index"),
            CutoffRule::Dmin => f.write_str("minimum distance to the upper-left corner"),
            CutoffRule::Fixed(t) => write!(f, "fixed threshold {t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    #[serde(with = "extended_f64")]
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// Distance to (0, 1).
    pub distance: f64,
    /// Youden index J.
    pub youden_j: f64,
}

impl Cutoff {
    fn at(p: &RocPoint) -> Cutoff {
        Cutoff {
            threshold: p.threshold,
            sensitivity: p.tpr,
            specificity: 1.0 - p.fpr,
            distance: ((1.0 - p.tpr).powi(2) + p.fpr.powi(2)).sqrt(),
            youden_j: p.tpr - p.fpr,
        }
    }
}

// criterion values closer than this are treated as ties
const TIE_EPS: f64 = 1e-12;

/// Pick the point maximising `score`; ties go to higher TPR, then to the
/// lower threshold.
fn select(curve: &RocCurve, score: impl Fn(&RocPoint) -> f64) -> Cutoff {
    let best = curve.points.iter().map(&score).fold(f64::NEG_INFINITY, f64::max);
    let chosen = curve
        .points
        .iter()
        .filter(|p| score(p) >= best - TIE_EPS)
        .max_by(|a, b| a.tpr.total_cmp(&b.tpr).then(b.threshold.total_cmp(&a.threshold)))
        .expect("curve has points");
    Cutoff::at(chosen)
}

pub fn cutoff_dmin(curve: &RocCurve) -> Cutoff {
    select(curve, |p| -((1.0 - p.tpr).powi(2) + p.fpr.powi(2)).sqrt())
}

pub fn cutoff_youden(curve: &RocCurve) -> Cutoff {
    select(curve, |p| p.tpr - p.fpr)
}

/// Confusion matrix when studies with `score >= threshold` are called positive.
pub fn operating_point(scored: &[ScoredSample], threshold: f64) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for s in scored {
        cm.record(s.score >= threshold, s.actual);
    }
    cm
}

/// Everything the reports need from ROC analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSummary {
    pub auc: f64,
    pub auc_ci: Interval,
    pub ci_method: AucCiMethod,
    pub verdict: Verdict,
    pub cutoff_dmin: Cutoff,
    pub cutoff_youden: Cutoff,
    pub n_pos: u64,
    pub n_neg: u64,
}

pub fn summarize(scored: &[ScoredSample], confidence: f64) -> Result<(RocCurve, RocSummary)> {
    let curve = roc_curve(scored)?;
    let area = auc(&curve, scored, confidence)?;
    let summary = RocSummary {
        auc: area.auc,
        auc_ci: area.ci,
        ci_method: area.ci_method,
        verdict: area.verdict,
        cutoff_dmin: cutoff_dmin(&curve),
        cutoff_youden: cutoff_youden(&curve),
        n_pos: curve.n_pos,
        n_neg: curve.n_neg,
    };
    Ok((curve, summary))
}
