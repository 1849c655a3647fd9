//! Confusion matrix, the standard diagnostic metric set and verdict bands.
//!
//! Proportions carry Wilson score intervals. Likelihood ratios carry
//! log-method intervals; when a zero cell enters the standard error, 0.5 is
//! added to every cell for the interval only, and the side of the interval
//! that is unbounded (LR+ = +inf, LR- = 0) is reported as such.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::io::PairedOutcome;
use crate::num::{self, extended_f64};
use crate::{Error, Result};

/// 2x2 tally of index test against reference test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Reference-positive studies (TP + FN).
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Reference-negative studies (TN + FP).
    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    /// Tally one (predicted, actual) outcome.
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

/// Tally paired binary outcomes. Scores must be thresholded first
/// (see [`crate::roc::operating_point`]).
pub fn build_confusion(pairs: &[PairedOutcome]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for p in pairs {
        let predicted = p.predicted.as_binary().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "study {} has a score prediction; threshold scores before tallying",
                p.study_id
            ))
        })?;
        cm.record(predicted, p.actual);
    }
    Ok(cm)
}

/// Three-level acceptance band for metrics on the [0, 1] scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unsuitable,
    RevisionRequired,
    Admissible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Unsuitable => "Unsuitable",
            Verdict::RevisionRequired => "Revision required",
            Verdict::Admissible => "Admissible",
        })
    }
}

pub const UNSUITABLE_MAX: f64 = 0.60;
pub const ADMISSIBLE_MIN: f64 = 0.81;

/// Band a [0, 1] value: `<= 0.60` unsuitable, `>= 0.81` admissible, revision
/// required in between.
pub fn verdict(value: f64) -> Result<Verdict> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidArgument(format!("verdict value {value} outside [0, 1]")));
    }
    Ok(if value >= ADMISSIBLE_MIN {
        Verdict::Admissible
    } else if value <= UNSUITABLE_MAX {
        Verdict::Unsuitable
    } else {
        Verdict::RevisionRequired
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "extended_f64")]
    pub low: f64,
    #[serde(with = "extended_f64")]
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Wilson score interval for `successes / trials`, clamped to [0, 1].
pub fn proportion_ci(successes: u64, trials: u64, confidence: f64) -> Result<Interval> {
    if trials == 0 {
        return Err(Error::InvalidArgument("proportion interval needs at least one trial".into()));
    }
    if successes > trials {
        return Err(Error::InvalidArgument(format!("{successes} successes exceed {trials} trials")));
    }
    let z = num::two_sided_z(confidence)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok(Interval { low: low.min(p), high: high.max(p) })
}

/// A metric on the [0, 1] scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub estimate: f64,
    pub ci: Interval,
    pub verdict: Verdict,
}

/// A likelihood ratio; `estimate` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    #[serde(with = "extended_f64")]
    pub estimate: f64,
    pub ci: Interval,
    /// True when 0.5 was added to every cell to compute the interval.
    pub continuity_corrected: bool,
}

/// A metric that is either computed or undefined for a stated reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Defined(T),
    Undefined { reason: String },
}

impl<T> Outcome<T> {
    pub fn defined(&self) -> Option<&T> {
        match self {
            Outcome::Defined(v) => Some(v),
            Outcome::Undefined { .. } => None,
        }
    }

    fn undefined(reason: impl Into<String>) -> Self {
        Outcome::Undefined { reason: reason.into() }
    }
}

/// The eight standard diagnostic metrics for one confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub confusion: ConfusionMatrix,
    pub confidence: f64,
    pub sensitivity: Outcome<Proportion>,
    pub specificity: Outcome<Proportion>,
    pub accuracy: Outcome<Proportion>,
    pub ppv: Outcome<Proportion>,
    pub npv: Outcome<Proportion>,
    /// Banded on `1 - fpr` so that a lower false positive rate is better.
    pub fpr: Outcome<Proportion>,
    pub lr_pos: Outcome<Ratio>,
    pub lr_neg: Outcome<Ratio>,
}

impl MetricSet {
    /// The [0, 1] metrics with display names, in reporting order.
    pub fn proportions(&self) -> [(&'static str, &Outcome<Proportion>); 6] {
        [
            ("sensitivity", &self.sensitivity),
            ("specificity", &self.specificity),
            ("accuracy", &self.accuracy),
            ("ppv", &self.ppv),
            ("npv", &self.npv),
            ("fpr", &self.fpr),
        ]
    }
}

fn proportion(successes: u64, trials: u64, confidence: f64, what: &str) -> Result<Outcome<Proportion>> {
    if trials == 0 {
        return Ok(Outcome::undefined(format!("{what} denominator is zero")));
    }
    let estimate = successes as f64 / trials as f64;
    Ok(Outcome::Defined(Proportion {
        estimate,
        ci: proportion_ci(successes, trials, confidence)?,
        verdict: verdict(estimate)?,
    }))
}

/// Log-method interval for a ratio of two proportions `(a / n1) / (b / n2)`.
/// `a` is the numerator count out of `n1`, `b` the denominator count out of
/// `n2`.
fn likelihood_ratio(a: u64, n1: u64, b: u64, n2: u64, z: f64) -> Outcome<Ratio> {
    if n1 == 0 || n2 == 0 {
        return Outcome::undefined("sensitivity or specificity is undefined");
    }
    if a == 0 && b == 0 {
        return Outcome::undefined("ratio is 0/0");
    }
    let estimate = if b == 0 { f64::INFINITY } else { (a as f64 / n1 as f64) / (b as f64 / n2 as f64) };
    let corrected = a == 0 || b == 0;
    let shift = if corrected { 0.5 } else { 0.0 };
    // correction adds 0.5 to each of the four cells, i.e. 1.0 to each margin
    let (a_c, b_c) = (a as f64 + shift, b as f64 + shift);
    let (n1_c, n2_c) = (n1 as f64 + 2.0 * shift, n2 as f64 + 2.0 * shift);
    let log_lr = ((a_c / n1_c) / (b_c / n2_c)).ln();
    let se = (1.0 / a_c - 1.0 / n1_c + 1.0 / b_c - 1.0 / n2_c).max(0.0).sqrt();
    let mut ci = Interval { low: (log_lr - z * se).exp(), high: (log_lr + z * se).exp() };
    if a == 0 {
        ci.low = 0.0;
    }
    if b == 0 {
        ci.high = f64::INFINITY;
    }
    Outcome::Defined(Ratio { estimate, ci, continuity_corrected: corrected })
}

/// Compute sensitivity, specificity, accuracy, PPV, NPV, FPR, LR+ and LR-.
pub fn standard_metrics(cm: &ConfusionMatrix, confidence: f64) -> Result<MetricSet> {
    if cm.total() == 0 {
        return Err(Error::InvalidArgument("confusion matrix is empty".into()));
    }
    let z = num::two_sided_z(confidence)?;
    let ConfusionMatrix { tp, tn, fp, fn_ } = *cm;

    let sensitivity = proportion(tp, tp + fn_, confidence, "sensitivity (TP + FN)")?;
    let specificity = proportion(tn, tn + fp, confidence, "specificity (TN + FP)")?;
    let fpr = match &specificity {
        Outcome::Defined(spec) => {
            let estimate = 1.0 - spec.estimate;
            Outcome::Defined(Proportion {
                estimate,
                ci: Interval { low: 1.0 - spec.ci.high, high: 1.0 - spec.ci.low },
                verdict: spec.verdict,
            })
        }
        Outcome::Undefined { .. } => Outcome::undefined("false positive rate denominator (TN + FP) is zero"),
    };

    Ok(MetricSet {
        confusion: *cm,
        confidence,
        sensitivity,
        specificity,
        accuracy: proportion(tp + tn, cm.total(), confidence, "accuracy")?,
        ppv: proportion(tp, tp + fp, confidence, "PPV (TP + FP)")?,
        npv: proportion(tn, tn + fn_, confidence, "NPV (TN + FN)")?,
        fpr,
        // LR+ = sens / (1 - spec) = (tp / P) / (fp / N)
        lr_pos: likelihood_ratio(tp, tp + fn_, fp, fp + tn, z),
        // LR- = (1 - sens) / spec = (fn / P) / (tn / N)
        lr_neg: likelihood_ratio(fn_, tp + fn_, tn, tn + fp, z),
    })
}

/// Which Mann-Whitney p-value computation was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingComparison {
    pub median_with: f64,
    pub median_without: f64,
    /// Mann-Whitney U of the with-software sample.
    pub u_statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub method: TestMethod,
}

pub const TIMING_ALPHA: f64 = 0.05;

// exact distribution is used when the smaller sample has at most this many
// members and the pooled sample is not larger than EXACT_MAX_POOLED
const EXACT_MAX_SMALL: usize = 8;
const EXACT_MAX_POOLED: usize = 1000;

/// Doubled mid-ranks (so ties stay integral) of the pooled sample, plus the
/// tie group sizes.
fn doubled_ranks(pooled: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j share the mid-rank ((i + 1) + (j + 1)) / 2
        let doubled = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        ties.push((j - i + 1) as u64);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided exact p-value: the probability, over all equally likely
/// assignments of `k` of the pooled ranks to one group, that the group's rank
/// sum lies at least as far from its mean as `observed` does.
fn exact_p_value(ranks: &[u64], k: usize, observed: u64) -> f64 {
    let max_sum: u64 = {
        let mut r = ranks.to_vec();
        r.sort_unstable();
        r.iter().rev().take(k).sum()
    };
    let width = max_sum as usize + 1;
    let mut counts = vec![vec![0.0f64; width]; k + 1];
    counts[0][0] = 1.0;
    let mut reach = 0usize;
    for (taken, &r) in ranks.iter().enumerate() {
        let r = r as usize;
        let top = k.min(taken + 1);
        reach = (reach + r).min(max_sum as usize);
        for j in (1..=top).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let (src, dst) = (&lower[j - 1], &mut upper[0]);
            for s in (r..=reach).rev() {
                let add = src[s - r];
                if add != 0.0 {
                    dst[s] += add;
                }
            }
        }
    }
    let n = ranks.len() as u64;
    // mean of the doubled rank sum: k * (n + 1)
    let mean = k as i128 * (n as i128 + 1);
    let dev = (observed as i128 - mean).abs();
    let dist = &counts[k];
    let total: f64 = dist.iter().sum();
    let tail: f64 = dist.iter().enumerate().filter(|(s, _)| (*s as i128 - mean).abs() >= dev).map(|(_, c)| c).sum();
    (tail / total).min(1.0)
}

/// Compare per-study reporting times with and without the software using a
/// two-sided Mann-Whitney U test.
pub fn compare_timing(with_ai: &[f64], without_ai: &[f64]) -> Result<TimingComparison> {
    if with_ai.is_empty() || without_ai.is_empty() {
        return Err(Error::InvalidArgument("timing samples must be non-empty".into()));
    }
    if with_ai.iter().chain(without_ai).any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidArgument("timings must be non-negative finite seconds".into()));
    }
    let (n1, n2) = (with_ai.len(), without_ai.len());
    let pooled: Vec<f64> = with_ai.iter().chain(without_ai).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let w_with: u64 = ranks[..n1].iter().sum();
    let w_without: u64 = ranks[n1..].iter().sum();
    let u_with = w_with as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    let n = n1 + n2;
    let (p_value, method) = if n1.min(n2) <= EXACT_MAX_SMALL && n <= EXACT_MAX_POOLED {
        let p = match n1.cmp(&n2) {
            Ordering::Greater => exact_p_value(&ranks, n2, w_without),
            _ => exact_p_value(&ranks, n1, w_with),
        };
        (p, TestMethod::Exact)
    } else {
        let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((u_with - n1f * n2f / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
            (2.0 * num::normal_sf(z)).min(1.0)
        };
        (p, TestMethod::NormalApproximation)
    };

    Ok(TimingComparison {
        median_with: num::median(with_ai),
        median_without: num::median(without_ai),
        u_statistic: u_with,
        p_value,
        significant: p_value < TIMING_ALPHA,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::Prediction;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(pred: bool, actual: bool) -> PairedOutcome {
        PairedOutcome { study_id: "x".into(), predicted: Prediction::Binary(pred), actual }
    }

    fn est(o: &Outcome<Proportion>) -> f64 {
        o.defined().unwrap().estimate
    }

    // Independent Wilson evaluation written out term by term.
    fn wilson_oracle(x: f64, n: f64, z: f64) -> (f64, f64) {
        let p = x / n;
        let a = 2.0 * n * p + z * z;
        let b = z * (z * z + 4.0 * n * p * (1.0 - p)).sqrt();
        let c = 2.0 * (n + z * z);
        ((a - b) / c, (a + b) / c)
    }

    #[test]
    fn one_of_each_cell() {
        let cm =
            build_confusion(&[pair(true, true), pair(false, false), pair(true, false), pair(false, true)]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 1));
    }

    #[test]
    fn all_true_positive() {
        let pairs: Vec<_> = (0..50).map(|_| pair(true, true)).collect();
        assert_eq!(build_confusion(&pairs).unwrap(), ConfusionMatrix::new(50, 0, 0, 0));
    }

    #[test]
    fn random_pairs_match_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let raw: Vec<(bool, bool)> = (0..100).map(|_| (rng.gen(), rng.gen())).collect();
        let pairs: Vec<_> = raw.iter().map(|&(p, a)| pair(p, a)).collect();
        let cm = build_confusion(&pairs).unwrap();
        let count = |p: bool, a: bool| raw.iter().filter(|&&x| x == (p, a)).count() as u64;
        assert_eq!(
            cm,
            ConfusionMatrix::new(count(true, true), count(false, false), count(true, false), count(false, true))
        );
        assert_eq!(cm.total(), 100);
    }

    #[test]
    fn scores_rejected_by_tally() {
        let p = PairedOutcome { study_id: "s".into(), predicted: Prediction::Score(0.3), actual: true };
        assert!(build_confusion(&[p]).is_err());
    }

    #[test]
    fn worked_example() {
        let m = standard_metrics(&ConfusionMatrix::new(40, 45, 5, 10), 0.95).unwrap();
        assert!((est(&m.sensitivity) - 0.8).abs() < 1e-12);
        assert!((est(&m.specificity) - 0.9).abs() < 1e-12);
        assert!((est(&m.accuracy) - 0.85).abs() < 1e-12);
        assert!((m.lr_pos.defined().unwrap().estimate - 8.0).abs() < 1e-9);
        assert!((m.lr_neg.defined().unwrap().estimate - 0.2222).abs() < 1e-4);
        assert!((est(&m.ppv) - 0.8889).abs() < 1e-4);
        assert!((est(&m.npv) - 0.8182).abs() < 1e-4);
        assert!((est(&m.fpr) - 0.1).abs() < 1e-12);
        let ci = m.sensitivity.defined().unwrap().ci;
        assert!((ci.low - 0.669).abs() < 1e-3 && (ci.high - 0.888).abs() < 1e-3, "{ci:?}");
    }

    #[test]
    fn perfect_classifier() {
        let m = standard_metrics(&ConfusionMatrix::new(50, 50, 0, 0), 0.95).unwrap();
        for name in [&m.sensitivity, &m.specificity, &m.accuracy] {
            assert_eq!(est(name), 1.0);
        }
        let lr_pos = m.lr_pos.defined().unwrap();
        assert_eq!(lr_pos.estimate, f64::INFINITY);
        assert_eq!(lr_pos.ci.high, f64::INFINITY);
        assert!(lr_pos.ci.low.is_finite() && lr_pos.ci.low > 1.0);
        let lr_neg = m.lr_neg.defined().unwrap();
        assert_eq!(lr_neg.estimate, 0.0);
        assert_eq!(lr_neg.ci.low, 0.0);
        assert!(lr_neg.continuity_corrected);
    }

    #[test]
    fn zero_denominators_are_undefined() {
        let m = standard_metrics(&ConfusionMatrix::new(0, 10, 2, 0), 0.95).unwrap();
        assert!(matches!(m.sensitivity, Outcome::Undefined { .. }));
        assert!(matches!(m.ppv, Outcome::Defined(_)));
        assert!(matches!(m.lr_pos, Outcome::Undefined { .. }));
        assert!(standard_metrics(&ConfusionMatrix::default(), 0.95).is_err());
    }

    #[test]
    fn metric_set_json_round_trip_keeps_infinity() {
        let m = standard_metrics(&ConfusionMatrix::new(50, 50, 0, 0), 0.95).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"inf\""));
        let back: MetricSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn verdict_examples() {
        assert_eq!(verdict(0.85).unwrap(), Verdict::Admissible);
        assert_eq!(verdict(0.59).unwrap(), Verdict::Unsuitable);
        assert_eq!(verdict(0.81).unwrap(), Verdict::Admissible);
        assert_eq!(verdict(0.60).unwrap(), Verdict::Unsuitable);
        assert_eq!(verdict(0.605).unwrap(), Verdict::RevisionRequired);
        assert_eq!(verdict(0.80).unwrap(), Verdict::RevisionRequired);
        assert!(verdict(1.01).is_err());
        assert!(verdict(-0.1).is_err());
        assert!(verdict(f64::NAN).is_err());
    }

    #[test]
    fn wilson_boundaries() {
        assert_eq!(proportion_ci(0, 10, 0.95).unwrap().low, 0.0);
        assert_eq!(proportion_ci(10, 10, 0.95).unwrap().high, 1.0);
        assert!(proportion_ci(0, 0, 0.95).is_err());
        assert!(proportion_ci(3, 2, 0.95).is_err());
    }

    #[test]
    fn wilson_matches_oracle() {
        let z = num::two_sided_z(0.95).unwrap();
        for (x, n) in [(40u64, 50u64), (1, 7), (13, 100), (99, 100)] {
            let ci = proportion_ci(x, n, 0.95).unwrap();
            let (lo, hi) = wilson_oracle(x as f64, n as f64, z);
            assert!((ci.low - lo).abs() < 1e-12 && (ci.high - hi).abs() < 1e-12);
        }
        let ci = proportion_ci(40, 50, 0.95).unwrap();
        assert!((ci.low - 0.669).abs() < 1e-3 && (ci.high - 0.888).abs() < 1e-3);
    }

    #[test]
    fn wilson_coverage_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &p in &[0.1, 0.5, 0.9] {
            for &n in &[30u64, 100] {
                let reps = 10_000;
                let covered = (0..reps)
                    .filter(|_| {
                        let x = (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64;
                        proportion_ci(x, n, 0.95).unwrap().contains(p)
                    })
                    .count();
                let coverage = covered as f64 / reps as f64;
                assert!(coverage >= 0.93, "p={p} n={n} coverage={coverage}");
            }
        }
    }

    #[test]
    fn log_lr_interval_matches_hand_formula() {
        let m = standard_metrics(&ConfusionMatrix::new(40, 45, 5, 10), 0.95).unwrap();
        let z = num::two_sided_z(0.95).unwrap();
        let se: f64 = (1.0 / 40.0 - 1.0 / 50.0 + 1.0 / 5.0 - 1.0 / 50.0_f64).sqrt();
        let lr = m.lr_pos.defined().unwrap();
        assert!((lr.ci.low - (8.0f64.ln() - z * se).exp()).abs() < 1e-9);
        assert!((lr.ci.high - (8.0f64.ln() + z * se).exp()).abs() < 1e-9);
        assert!(!lr.continuity_corrected);
    }

    // Exhaustive permutation oracle: enumerate every subset of pooled
    // positions for the first group.
    fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = pooled.len();
        let rank = |i: usize| -> f64 {
            let less = pooled.iter().filter(|&&v| v < pooled[i]).count() as f64;
            let eq = pooled.iter().filter(|&&v| v == pooled[i]).count() as f64;
            less + (eq + 1.0) / 2.0
        };
        let ranks: Vec<f64> = (0..n).map(rank).collect();
        let k = a.len();
        let mean = k as f64 * (n as f64 + 1.0) / 2.0;
        let observed: f64 = ranks[..k].iter().sum();
        let (mut hits, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let s: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            total += 1;
            if (s - mean).abs() >= (observed - mean).abs() - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn identical_timings() {
        let t = compare_timing(&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(!t.significant);
    }

    #[test]
    fn separated_timings() {
        let t = compare_timing(&[1.0, 2.0, 3.0], &[100.0, 101.0, 102.0]).unwrap();
        assert_eq!(t.u_statistic, 0.0);
        assert_eq!(t.median_with, 2.0);
        assert_eq!(t.median_without, 101.0);
        assert!((t.p_value - 0.1).abs() < 1e-12);
        assert_eq!(t.method, TestMethod::Exact);
    }

    #[test]
    fn three_vs_three_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..10.0)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..10.0)).collect();
            let t = compare_timing(&a, &b).unwrap();
            assert!((t.p_value - permutation_p(&a, &b)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_with_ties_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let na = rng.gen_range(1..6);
            let nb = rng.gen_range(1..8);
            let a: Vec<f64> = (0..na).map(|_| rng.gen_range(0..5) as f64).collect();
            let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(0..5) as f64).collect();
            let t = compare_timing(&a, &b).unwrap();
            assert!((t.p_value - permutation_p(&a, &b)).abs() < 1e-12, "{a:?} {b:?}");
        }
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| 10.0 + i as f64).collect();
        let b: Vec<f64> = (0..40).map(|i| 30.0 + i as f64).collect();
        let t = compare_timing(&a, &b).unwrap();
        assert_eq!(t.method, TestMethod::NormalApproximation);
        assert!(t.significant);
        assert!(compare_timing(&[], &[1.0]).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = ConfusionMatrix> {
        (1u64..200, 0u64..200, 1u64..200, 0u64..200)
            .prop_map(|(tp, tn, fp, fn_)| ConfusionMatrix::new(tp, tn + 1, fp, fn_))
    }

    proptest! {
        #[test]
        fn proportions_in_unit_range_and_ci_contains_estimate(cm in arb_matrix()) {
            let m = standard_metrics(&cm, 0.95).unwrap();
            for (_, o) in m.proportions() {
                let p = o.defined().unwrap();
                prop_assert!((0.0..=1.0).contains(&p.estimate));
                prop_assert!(p.ci.low <= p.estimate && p.estimate <= p.ci.high);
            }
            for lr in [&m.lr_pos, &m.lr_neg] {
                if let Some(r) = lr.defined() {
                    prop_assert!(r.ci.low <= r.estimate && r.estimate <= r.ci.high);
                }
            }
        }

        #[test]
        fn accuracy_is_prevalence_weighted(cm in arb_matrix()) {
            let m = standard_metrics(&cm, 0.95).unwrap();
            let (p, n) = (cm.positives() as f64, cm.negatives() as f64);
            let weighted = (est(&m.sensitivity) * p + est(&m.specificity) * n) / (p + n);
            prop_assert!((est(&m.accuracy) - weighted).abs() < 1e-12);
            prop_assert_eq!(est(&m.fpr), 1.0 - est(&m.specificity));
        }

        #[test]
        fn lr_pos_at_least_one_iff_sens_at_least_fpr(cm in arb_matrix()) {
            let m = standard_metrics(&cm, 0.95).unwrap();
            let lr = m.lr_pos.defined().unwrap().estimate;
            // compare in exact integer arithmetic: tp/P >= fp/N
            let sens_ge_fpr = cm.tp as u128 * cm.negatives() as u128 >= cm.fp as u128 * cm.positives() as u128;
            prop_assert_eq!(lr >= 1.0 - 1e-12, sens_ge_fpr);
        }

        #[test]
        fn verdict_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(verdict(lo).unwrap() <= verdict(hi).unwrap());
        }

        #[test]
        fn wilson_widens_with_confidence(trials in 1u64..500, frac in 0.0f64..=1.0, c1 in 0.5f64..0.99, dc in 0.001f64..0.009) {
            let successes = (frac * trials as f64).round() as u64;
            let narrow = proportion_ci(successes, trials, c1).unwrap();
            let wide = proportion_ci(successes, trials, c1 + dc).unwrap();
            prop_assert!(wide.low <= narrow.low && wide.high >= narrow.high);
            prop_assert!(narrow.contains(successes as f64 / trials as f64));
        }

        #[test]
        fn timing_p_value_symmetric(
            a in proptest::collection::vec(0u8..30, 1..12),
            b in proptest::collection::vec(0u8..30, 1..12),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = compare_timing(&a, &b).unwrap();
            let ba = compare_timing(&b, &a).unwrap();
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            prop_assert_eq!(ab.significant, ab.p_value < TIMING_ALPHA);
            prop_assert!((ab.u_statistic + ba.u_statistic - (a.len() * b.len()) as f64).abs() < 1e-9);
        }
    }
}
