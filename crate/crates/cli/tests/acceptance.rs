//! Acceptance suite. Runs every criterion against an independent oracle,
//! prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radval_core::agreement::{cohen_kappa, dice, AgreementTable, BinaryMask};
use radval_core::governance::{
    classify_risk, score_admission, AdmissionAnswers, AdmissionPolicy, Category, InfoValue, Measured, Provision,
    RiskInput, SoftwareClass,
};
use radval_core::metrics::{proportion_ci, standard_metrics, verdict, ConfusionMatrix, Outcome, Verdict};
use radval_core::reporting::{check_stard, StardEntry, StudyReport, STARD_ITEMS};
use radval_core::roc::{auc, cutoff_dmin, cutoff_youden, roc_curve, ScoredSample};
use radval_core::study_design::{required_sample_size, SampleSizeRequest};

type Check = Result<String, String>;
type Transform = fn(f64) -> f64;
type Criterion = fn() -> Check;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

const Z95: f64 = 1.959963984540054;

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

// ---------------------------------------------------------------------------
// 1. risk table
// ---------------------------------------------------------------------------

fn class_rank(c: SoftwareClass) -> u8 {
    match c {
        SoftwareClass::Class1 => 0,
        SoftwareClass::Class2a => 1,
        SoftwareClass::Class2b => 2,
        SoftwareClass::Class3 => 3,
    }
}

fn criterion_1() -> Check {
    use Category::*;
    use InfoValue::*;
    let cats = [A, B, C];
    let infos = [I, II, III];
    let expected = [["3", "2b", "2a"], ["2b", "2a", "1"], ["2a", "1", "1"]];
    let one = |c, i, supervised| {
        classify_risk(&RiskInput {
            provisions: vec![Provision { category: c, info_value: i }],
            supervised_use: supervised,
        })
        .map_err(|e| e.to_string())
    };
    for (ci, c) in cats.iter().enumerate() {
        for (ii, i) in infos.iter().enumerate() {
            let got = one(*c, *i, true)?.to_string();
            ensure!(got == expected[ci][ii], "cell ({c:?},{i:?}) gave {got}, expected {}", expected[ci][ii]);
        }
    }
    // oracle: escalate B to A when unsupervised, look up the table, take the worst
    let oracle = |ps: &[(usize, usize)], supervised: bool| -> &str {
        ps.iter()
            .map(|&(c, i)| {
                let c = if c == 1 && !supervised { 0 } else { c };
                expected[c][i]
            })
            .max_by_key(|s| ["1", "2a", "2b", "3"].iter().position(|x| x == s))
            .unwrap()
    };
    let mut cases = 0;
    for supervised in [true, false] {
        for a in 0..9 {
            for b in 0..9 {
                let ps = [(a / 3, a % 3), (b / 3, b % 3)];
                let input = RiskInput {
                    provisions: ps
                        .iter()
                        .map(|&(c, i)| Provision { category: cats[c], info_value: infos[i] })
                        .collect(),
                    supervised_use: supervised,
                };
                let got = classify_risk(&input).map_err(|e| e.to_string())?;
                ensure!(got.to_string() == oracle(&ps, supervised), "{ps:?} supervised={supervised}: got {got}");
                let singles = ps.iter().map(|&(c, i)| class_rank(one(cats[c], infos[i], supervised).unwrap())).max();
                ensure!(Some(class_rank(got)) == singles, "aggregation is not the maximum for {ps:?}");
                cases += 1;
            }
        }
    }
    Ok(format!("9 cells exact; {cases} two-provision cases (81 per supervision setting) match"))
}

// ---------------------------------------------------------------------------
// 2. standard metric formulas
// ---------------------------------------------------------------------------

fn wilson_oracle(x: u64, n: u64) -> (f64, f64) {
    let (x, n) = (x as f64, n as f64);
    let p = x / n;
    let a = 2.0 * x + Z95 * Z95;
    let b = Z95 * (Z95 * Z95 + 4.0 * x * (1.0 - p)).sqrt();
    let c = 2.0 * (n + Z95 * Z95);
    let low = if x == 0.0 { 0.0 } else { ((a - b) / c).max(0.0) };
    let high = if x == n { 1.0 } else { ((a + b) / c).min(1.0) };
    (low, high)
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 1000 {
        // per-study outcomes, tallied by brute force
        let n = rng.gen_range(4..400);
        let prevalence: f64 = rng.gen_range(0.05..0.95);
        let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
        let (se, sp): (f64, f64) = (rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0));
        for _ in 0..n {
            let actual = rng.gen_bool(prevalence);
            let predicted = if actual { rng.gen_bool(se) } else { !rng.gen_bool(sp) };
            match (predicted, actual) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
            }
        }
        if tp + fn_ == 0 || tn + fp == 0 || tp + fp == 0 || tn + fn_ == 0 {
            continue;
        }
        checked += 1;
        let m = standard_metrics(&ConfusionMatrix::new(tp, tn, fp, fn_), 0.95).map_err(|e| e.to_string())?;
        let f = |x: u64, y: u64| x as f64 / y as f64;
        let expect = [
            ("sensitivity", tp, tp + fn_),
            ("specificity", tn, tn + fp),
            ("accuracy", tp + tn, tp + tn + fp + fn_),
            ("ppv", tp, tp + fp),
            ("npv", tn, tn + fn_),
            ("fpr", fp, fp + tn),
        ];
        for ((name, outcome), (oname, x, y)) in m.proportions().iter().zip(expect) {
            ensure!(*name == oname, "metric order changed");
            let Outcome::Defined(p) = outcome else { return Err(format!("{name} undefined for {tp}/{tn}/{fp}/{fn_}")) };
            ensure!(close(p.estimate, f(x, y), 1e-12), "{name}: {} vs oracle {}", p.estimate, f(x, y));
            let (lo, hi) = if *name == "fpr" {
                let (l, h) = wilson_oracle(tn, tn + fp);
                (1.0 - h, 1.0 - l)
            } else {
                wilson_oracle(x, y)
            };
            ensure!(
                close(p.ci.low, lo, 1e-12) && close(p.ci.high, hi, 1e-12),
                "{name} CI mismatch for {tp}/{tn}/{fp}/{fn_}"
            );
        }
        let sens = f(tp, tp + fn_);
        let spec = f(tn, tn + fp);
        let lr_pos = if fp == 0 { f64::INFINITY } else { sens / (1.0 - spec) };
        let lr_neg = (1.0 - sens) / spec;
        let got_pos = m.lr_pos.defined().ok_or("LR+ undefined")?.estimate;
        let got_neg = m.lr_neg.defined().map(|r| r.estimate);
        ensure!(close(got_pos, lr_pos, 1e-12 * lr_pos.max(1.0)), "LR+ {got_pos} vs {lr_pos}");
        if tn > 0 {
            let got_neg = got_neg.ok_or("LR- undefined")?;
            ensure!(close(got_neg, lr_neg, 1e-12 * lr_neg.max(1.0)), "LR- {got_neg} vs {lr_neg}");
        }
    }
    Ok(format!("{checked} random matrices: 8 metrics and Wilson intervals within 1e-12"))
}

// ---------------------------------------------------------------------------
// 3. AUC vs pair counting
// ---------------------------------------------------------------------------

fn random_scored(rng: &mut ChaCha8Rng, max: usize) -> Vec<ScoredSample> {
    loop {
        let n = rng.gen_range(2..=max);
        let levels = rng.gen_range(2..12);
        let s: Vec<ScoredSample> = (0..n)
            .map(|_| {
                let actual = rng.gen_bool(0.5);
                let shift = if actual { 2 } else { 0 };
                let level = (rng.gen_range(0..levels) + shift).min(levels + 1);
                ScoredSample::new(level as f64 / (levels + 1) as f64, actual)
            })
            .collect();
        if s.iter().any(|x| x.actual) && s.iter().any(|x| !x.actual) {
            return s;
        }
    }
}

fn pair_count_auc(s: &[ScoredSample]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for p in s.iter().filter(|x| x.actual) {
        for n in s.iter().filter(|x| !x.actual) {
            pairs += 1.0;
            if p.score > n.score {
                wins += 1.0;
            } else if p.score == n.score {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_of(s: &[ScoredSample]) -> Result<f64, String> {
    let curve = roc_curve(s).map_err(|e| e.to_string())?;
    let est = auc(&curve, s, 0.95).map_err(|e| e.to_string())?;
    ensure!(close(est.auc, curve.trapezoidal_area(), 1e-12), "estimate and trapezoid disagree");
    Ok(est.auc)
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let transforms: [(&str, Transform); 4] = [
        ("cube", |x| x * x * x),
        ("exp", f64::exp),
        ("affine", |x| 3.0 * x - 7.0),
        ("logit", |x| (x + 0.01).ln() - (1.01 - x).ln()),
    ];
    for i in 0..500 {
        let s = random_scored(&mut rng, 20);
        let a = auc_of(&s)?;
        let oracle = pair_count_auc(&s);
        ensure!(close(a, oracle, 1e-12), "fixture {i}: AUC {a} vs pair count {oracle}");
        for (name, t) in &transforms {
            let moved: Vec<ScoredSample> = s.iter().map(|x| ScoredSample::new(t(x.score), x.actual)).collect();
            let b = auc_of(&moved)?;
            ensure!(close(a, b, 1e-12), "fixture {i}: {name} transform changed AUC {a} -> {b}");
        }
    }
    Ok("500 fixtures (n <= 20): trapezoid = pair count, 4 monotone transforms invariant, tol 1e-12".into())
}

// ---------------------------------------------------------------------------
// 4. cut-off selection
// ---------------------------------------------------------------------------

struct Candidate {
    threshold: f64,
    tpr: f64,
    fpr: f64,
}

fn exhaustive(s: &[ScoredSample]) -> Vec<Candidate> {
    let mut thresholds: Vec<f64> = s.iter().map(|x| x.score).collect();
    thresholds.push(f64::INFINITY);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let pos = s.iter().filter(|x| x.actual).count() as f64;
    let neg = s.len() as f64 - pos;
    thresholds
        .into_iter()
        .map(|t| {
            let tp = s.iter().filter(|x| x.actual && x.score >= t).count() as f64;
            let fp = s.iter().filter(|x| !x.actual && x.score >= t).count() as f64;
            Candidate { threshold: t, tpr: tp / pos, fpr: fp / neg }
        })
        .collect()
}

/// Best candidate by `score`; ties (within 1e-12) prefer higher TPR, then lower threshold.
fn pick(cands: &[Candidate], score: impl Fn(&Candidate) -> f64) -> &Candidate {
    let best = cands.iter().map(&score).fold(f64::NEG_INFINITY, f64::max);
    let mut tied: Vec<&Candidate> = cands.iter().filter(|c| score(c) >= best - 1e-12).collect();
    tied.sort_by(|a, b| b.tpr.total_cmp(&a.tpr).then(a.threshold.total_cmp(&b.threshold)));
    tied[0]
}

fn youden(c: &Candidate) -> f64 {
    c.tpr - c.fpr
}

fn neg_distance(c: &Candidate) -> f64 {
    -((1.0 - c.tpr).powi(2) + c.fpr.powi(2)).sqrt()
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..200 {
        let s = random_scored(&mut rng, 40);
        let curve = roc_curve(&s).map_err(|e| e.to_string())?;
        let cands = exhaustive(&s);
        let y = cutoff_youden(&curve);
        let oy = pick(&cands, youden);
        ensure!(
            y.threshold == oy.threshold,
            "fixture {i}: Youden threshold {} vs exhaustive {}",
            y.threshold,
            oy.threshold
        );
        ensure!(close(y.youden_j, youden(oy), 1e-12), "fixture {i}: J mismatch");
        let d = cutoff_dmin(&curve);
        let od = pick(&cands, neg_distance);
        ensure!(
            d.threshold == od.threshold,
            "fixture {i}: d-min threshold {} vs exhaustive {}",
            d.threshold,
            od.threshold
        );
        ensure!(close(-d.distance, neg_distance(od), 1e-12), "fixture {i}: distance mismatch");
    }
    // constructed ties: two points share the best J and the best distance
    let ties: [(&[(f64, bool)], f64); 2] = [
        (&[(0.8, true), (0.5, true), (0.5, false), (0.1, false)], 0.5),
        (&[(0.9, true), (0.6, true), (0.7, false), (0.2, false)], 0.6),
    ];
    for (rows, expected) in ties {
        let s: Vec<ScoredSample> = rows.iter().map(|&(x, a)| ScoredSample::new(x, a)).collect();
        let curve = roc_curve(&s).map_err(|e| e.to_string())?;
        let (y, d) = (cutoff_youden(&curve), cutoff_dmin(&curve));
        ensure!(y.threshold == expected, "tie fixture: Youden picked {} not {expected}", y.threshold);
        ensure!(d.threshold == expected, "tie fixture: d-min picked {} not {expected}", d.threshold);
    }
    Ok("200 random fixtures match exhaustive search; 2 tie fixtures resolve to the higher-TPR point".into())
}

// ---------------------------------------------------------------------------
// 5. verdict bands
// ---------------------------------------------------------------------------

fn criterion_5() -> Check {
    use Verdict::*;
    let cases = [
        (0.59, Unsuitable),
        (0.60, Unsuitable),
        (0.605, RevisionRequired),
        (0.80, RevisionRequired),
        (0.81, Admissible),
    ];
    for (v, expected) in cases {
        let got = verdict(v).map_err(|e| e.to_string())?;
        ensure!(got == expected, "{v} banded {got:?}, expected {expected:?}");
    }
    let mut prev = Unsuitable;
    for i in 0..=1000 {
        let v = i as f64 / 1000.0;
        let got = verdict(v).map_err(|e| e.to_string())?;
        ensure!(got >= prev, "verdict decreased at {v}");
        prev = got;
    }
    ensure!(prev == Admissible, "sweep did not end admissible");
    Ok("5 boundary values exact; 1001-point sweep monotone".into())
}

// ---------------------------------------------------------------------------
// 6. kappa and Dice
// ---------------------------------------------------------------------------

fn criterion_6() -> Check {
    let k = cohen_kappa(&AgreementTable::new(vec![vec![40, 10], vec![10, 40]]).unwrap()).map_err(|e| e.to_string())?;
    ensure!(k.kappa == 0.6, "kappa {} != 0.6", k.kappa);
    let a = BinaryMask::from_bools((0..300).map(|i| i < 100).collect());
    let b = BinaryMask::from_bools((0..300).map(|i| (20..120).contains(&i)).collect());
    let d = dice(&a, &b).map_err(|e| e.to_string())?;
    ensure!(d.intersection == 80 && d.size_a == 100 && d.size_b == 100, "mask fixture counts wrong");
    ensure!(d.dsc == 0.8, "DSC {} != 0.8", d.dsc);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..1000 {
        let k = rng.gen_range(2..5);
        let counts: Vec<Vec<u64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(0..30)).collect()).collect();
        let Ok(table) = AgreementTable::new(counts.clone()) else { continue };
        let diag = AgreementTable::new(
            (0..k).map(|r| (0..k).map(|c| if r == c { counts[r][c] + 1 } else { 0 }).collect()).collect(),
        )
        .unwrap();
        match (cohen_kappa(&table), cohen_kappa(&table.transpose())) {
            (Ok(x), Ok(y)) => {
                ensure!(x.kappa == y.kappa, "table {i}: kappa not symmetric");
                ensure!((-1.0..=1.0).contains(&x.kappa), "table {i}: kappa {} out of range", x.kappa);
            }
            (Err(_), Err(_)) => {}
            _ => return Err(format!("table {i}: transpose changed definedness")),
        }
        if let Ok(x) = cohen_kappa(&diag) {
            ensure!(x.kappa == 1.0, "diagonal table {i} has kappa {}", x.kappa);
        }

        let len = rng.gen_range(1..200);
        let density: f64 = rng.gen_range(0.0..1.0);
        let ma = BinaryMask::from_bools((0..len).map(|_| rng.gen_bool(density)).collect());
        let mb = BinaryMask::from_bools((0..len).map(|_| rng.gen_bool(density)).collect());
        let (ab, ba) = (dice(&ma, &mb).unwrap(), dice(&mb, &ma).unwrap());
        ensure!(ab.dsc == ba.dsc, "mask pair {i}: Dice not symmetric");
        ensure!((0.0..=1.0).contains(&ab.dsc), "mask pair {i}: Dice out of range");
        ensure!(dice(&ma, &ma).unwrap().dsc == 1.0, "mask {i}: Dice(A, A) != 1");
    }
    Ok("kappa 0.6 and DSC 0.8 exact; symmetry, range and identity hold on 1000 random tables and mask pairs".into())
}

// ---------------------------------------------------------------------------
// 7. Wilson coverage
// ---------------------------------------------------------------------------

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 1.0f64;
    let mut cells = Vec::new();
    for p in [0.1, 0.5, 0.9] {
        for n in [30u64, 100] {
            let mut covered = 0;
            for _ in 0..10_000 {
                let x = (0..n).filter(|_| rng.gen_bool(p)).count() as u64;
                let ci = proportion_ci(x, n, 0.95).map_err(|e| e.to_string())?;
                if ci.low <= p && p <= ci.high {
                    covered += 1;
                }
            }
            let cov = covered as f64 / 10_000.0;
            worst = worst.min(cov);
            cells.push(format!("p={p} n={n}: {cov:.4}"));
            ensure!(cov.total_cmp(&0.93).is_ge(), "coverage {cov} below 0.93 at p={p}, n={n}");
        }
    }
    Ok(format!("min coverage {worst:.4} ({})", cells.join("; ")))
}

// ---------------------------------------------------------------------------
// 8. sample size
// ---------------------------------------------------------------------------

fn n(p: f64, d: f64, c: f64) -> Result<u64, String> {
    required_sample_size(&SampleSizeRequest { expected_proportion: p, half_width: d, confidence: c })
        .map(|s| s.n)
        .map_err(|e| e.to_string())
}

fn criterion_8() -> Check {
    ensure!(n(0.5, 0.05, 0.95)? == 385, "n(0.5, 0.05) = {}", n(0.5, 0.05, 0.95)?);
    ensure!(n(0.2, 0.05, 0.95)? == 246, "n(0.2, 0.05) = {}", n(0.2, 0.05, 0.95)?);
    let ps = [0.5, 0.4, 0.3, 0.2, 0.1];
    let ds = [0.01, 0.02, 0.03, 0.05, 0.1];
    let cs = [0.8, 0.9, 0.95, 0.99];
    let mut cells = 0;
    for &d in &ds {
        for &c in &cs {
            for w in ps.windows(2) {
                ensure!(
                    n(w[0], d, c)? > n(w[1], d, c)?,
                    "n not decreasing from p={} to p={} (d={d}, c={c})",
                    w[0],
                    w[1]
                );
                ensure!(n(w[1], d, c)? == n(1.0 - w[1], d, c)?, "n not symmetric about 0.5");
            }
            cells += ps.len();
        }
    }
    for &p in &ps {
        for &c in &cs {
            for w in ds.windows(2) {
                ensure!(n(p, w[0], c)? > n(p, w[1], c)?, "n not decreasing in d at p={p}, c={c}");
            }
        }
        for &d in &ds {
            for w in cs.windows(2) {
                ensure!(n(p, d, w[0])? < n(p, d, w[1])?, "n not increasing in confidence at p={p}, d={d}");
            }
        }
    }
    Ok(format!("385 and 246 exact; strict monotonicity over {cells} grid points"))
}

// ---------------------------------------------------------------------------
// 9. admission gate
// ---------------------------------------------------------------------------

fn criterion_9() -> Check {
    let policy = AdmissionPolicy::default();
    let good = Measured { auc: 0.9, processing_time_s: 30.0 };
    for bits in 0..8u8 {
        let (c21, c22, c23) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
        let a = AdmissionAnswers::all_yes(good)
            .with_answer("2.1", c21)
            .and_then(|a| a.with_answer("2.2", c22))
            .and_then(|a| a.with_answer("2.3", c23))
            .map_err(|e| e.to_string())?;
        let pass = score_admission(&a, &policy).pass;
        ensure!(pass == (c21 || (c22 && c23)), "2.1={c21} 2.2={c22} 2.3={c23} gave pass={pass}");
    }
    let boundary = [
        (Measured { auc: 0.8099, processing_time_s: 30.0 }, false),
        (Measured { auc: 0.81, processing_time_s: 30.0 }, true),
        (Measured { auc: 0.9, processing_time_s: 60.0 }, true),
        (Measured { auc: 0.9, processing_time_s: 60.01 }, false),
    ];
    for (m, expected) in boundary {
        let d = score_admission(&AdmissionAnswers::all_yes(m), &policy);
        ensure!(d.pass == expected, "{m:?} gave pass={}", d.pass);
        if m.auc < 0.81 {
            ensure!(d.failed_items.iter().any(|f| f.reason.contains("AUC ≥ 0.81")), "AUC failure reason missing");
        }
    }
    Ok("8-row truth table of 2.1 or (2.2 and 2.3); AUC 0.81 and 60 s boundaries enforced".into())
}

// ---------------------------------------------------------------------------
// 10. determinism and STARD partition
// ---------------------------------------------------------------------------

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn evaluate_into(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_radval"))
        .arg("evaluate")
        .arg("--predictions")
        .arg(fixture("predictions.csv"))
        .arg("--reference")
        .arg(fixture("reference.csv"))
        .arg("--manifest")
        .arg(fixture("manifest.json"))
        .arg("--metadata")
        .arg(fixture("metadata.json"))
        .args(["--cutoff", "youden", "--out-dir"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.code() == Some(0),
        "evaluate exited {:?}: {}",
        status.status.code(),
        String::from_utf8_lossy(&status.stderr)
    );
    Ok(())
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    evaluate_into(&a)?;
    evaluate_into(&b)?;
    for f in ["pctt_report.txt", "pctt_report.json", "run_manifest.json", "roc_curve.csv"] {
        let (x, y) = (fs::read(a.join(f)).map_err(|e| e.to_string())?, fs::read(b.join(f)).map_err(|e| e.to_string())?);
        ensure!(x == y, "{f} differs between runs");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..100 {
        let k = rng.gen_range(0..=STARD_ITEMS.len());
        let mut ids: Vec<&str> = STARD_ITEMS.to_vec();
        ids.shuffle(&mut rng);
        let filled: Vec<&str> = ids[..k].to_vec();
        let mut report = StudyReport::default();
        for id in &filled {
            report.items.insert(id.to_string(), StardEntry::filled("described"));
        }
        // some unfilled items appear as empty entries rather than being absent
        for id in &ids[k..] {
            match rng.gen_range(0..3) {
                0 => {}
                state => {
                    report.items.insert(id.to_string(), StardEntry { present: state == 2, text: String::new() });
                }
            }
        }
        let c = check_stard(&report).map_err(|e| e.to_string())?;
        ensure!(c.missing.len() + filled.len() == STARD_ITEMS.len(), "subset {i}: sizes do not add up");
        for id in STARD_ITEMS {
            ensure!(
                c.missing.iter().any(|m| m == id) != filled.contains(&id),
                "subset {i}: item {id} in both or neither"
            );
        }
        let order: Vec<usize> = c.missing.iter().map(|m| STARD_ITEMS.iter().position(|x| x == m).unwrap()).collect();
        ensure!(order.windows(2).all(|w| w[0] < w[1]), "subset {i}: missing list out of checklist order");
        ensure!(c.complete == (k == STARD_ITEMS.len()), "subset {i}: completeness flag wrong");
    }
    Ok("two evaluate runs byte-identical (text, JSON, manifest, curve); STARD partition holds on 100 subsets".into())
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("risk decision table", criterion_1),
        ("standard metric formulas", criterion_2),
        ("AUC correctness", criterion_3),
        ("cut-off rules", criterion_4),
        ("verdict bands", criterion_5),
        ("kappa and Dice", criterion_6),
        ("Wilson CI coverage", criterion_7),
        ("sample size", criterion_8),
        ("admission gate", criterion_9),
        ("end-to-end determinism", criterion_10),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({why})", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
