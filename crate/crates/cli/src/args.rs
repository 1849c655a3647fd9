use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radval_core::governance::EvaluationTask;
use radval_core::io::PredictionKind;

#[derive(Parser, Debug)]
#[command(name = "radval", version, about = "Diagnostic accuracy validation for AI radiology software")]
pub struct Cli {
    /// Print machine-readable JSON on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Join predictions to reference labels, compute metrics and write the PCTT report.
    Evaluate(EvaluateArgs),
    /// ROC curve, AUC with confidence interval and cut-off points.
    Roc(RocArgs),
    /// Inter-rater and segmentation agreement.
    #[command(subcommand)]
    Agreement(AgreementCommand),
    /// Required reference dataset size for a target proportion and precision.
    Samplesize(SampleSizeArgs),
    /// Check a reference dataset manifest against the dataset requirements.
    ValidateDataset(ValidateDatasetArgs),
    /// Risk class, admission questionnaire, CQOE sheet and validation stages.
    #[command(subcommand)]
    Governance(GovernanceCommand),
    /// Reporting checklists.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskArg {
    Detection,
    Classification,
    Segmentation,
    Nlp,
}

impl From<TaskArg> for EvaluationTask {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Detection => EvaluationTask::Detection,
            TaskArg::Classification => EvaluationTask::Classification,
            TaskArg::Segmentation => EvaluationTask::Segmentation,
            TaskArg::Nlp => EvaluationTask::Nlp,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindArg {
    Scores,
    Binary,
}

impl From<KindArg> for PredictionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Scores => PredictionKind::Scores,
            KindArg::Binary => PredictionKind::Binary,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffArg {
    Youden,
    Dmin,
    Fixed,
}

fn confidence(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    confidence(s)
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be a non-negative number"))
    }
}

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    /// Index test results (CSV or JSON).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Reference labels (CSV or JSON).
    #[arg(long)]
    pub reference: PathBuf,
    /// Reference dataset manifest (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Institution and free-text report fields (JSON).
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "classification")]
    pub task: TaskArg,
    /// What the prediction value column holds.
    #[arg(long, value_enum, default_value = "scores")]
    pub kind: KindArg,
    /// Cut-off rule for score predictions (default: youden).
    #[arg(long, value_enum)]
    pub cutoff: Option<CutoffArg>,
    /// Threshold for `--cutoff fixed`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "0.95", value_parser = confidence)]
    pub confidence: f64,
    /// Maximum processing time per study, seconds.
    #[arg(long, default_value = "60", value_parser = non_negative)]
    pub time_limit: f64,
    /// Directory for report files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct RocArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value = "0.95", value_parser = confidence)]
    pub confidence: f64,
    /// Write the curve points to this CSV file.
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum AgreementCommand {
    /// Cohen's kappa for a square agreement table.
    Kappa {
        /// JSON table `[[a, b], [c, d]]`, inline or as a file path.
        #[arg(long)]
        table: String,
    },
    /// Dice–Sørensen coefficient for two binary masks.
    Dice {
        /// Mask as RLE `"<len> start:len ..."` or JSON 0/1 array, inline or as a file path.
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SampleSizeArgs {
    /// Expected proportion (e.g. anticipated sensitivity).
    #[arg(long, value_parser = open_unit)]
    pub p: f64,
    /// Confidence interval half-width.
    #[arg(long, value_parser = open_unit)]
    pub d: f64,
    #[arg(long, default_value = "0.95", value_parser = confidence)]
    pub confidence: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateDatasetArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Target population profile (JSON).
    #[arg(long)]
    pub profile: PathBuf,
    /// Accuracy targets used for the size check (JSON array).
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long, default_value = "0.05", value_parser = non_negative)]
    pub prevalence_tolerance: f64,
}

#[derive(Subcommand, Debug)]
pub enum GovernanceCommand {
    /// Software risk class from clinical provisions.
    Risk {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score the admission questionnaire and measured values.
    Admission {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "60", value_parser = non_negative)]
        time_limit: f64,
    },
    /// Total of a CQOE score sheet.
    Cqoe {
        #[arg(long)]
        input: PathBuf,
    },
    /// Record a stage deliverable and advance the validation pipeline.
    Pipeline {
        /// Current pipeline state (JSON); a fresh pipeline when omitted.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Stage the deliverable belongs to (I..VI).
        #[arg(long)]
        stage: String,
        /// Pointer to the deliverable (file, document id).
        #[arg(long)]
        deliverable: String,
        /// Write the new state here (atomically).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ReportCommand {
    /// Check a study report for STARD 2015 completeness.
    CheckStard {
        #[arg(long)]
        input: PathBuf,
    },
}
