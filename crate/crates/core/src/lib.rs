//! Validation toolkit for AI diagnostic software evaluated against labeled
//! reference datasets.
//!
//! The crate is organised by concern:
//!
//! - [`io`]: prediction / reference ingestion and joining by study id
//! - [`metrics`]: confusion matrix, the standard diagnostic metric set with
//!   confidence intervals, verdict bands, timing comparison
//! - [`roc`]: ROC curve construction, AUC with confidence interval, cut-off
//!   selection
//! - [`agreement`]: Cohen's kappa and the Dice–Sørensen coefficient
//! - [`study_design`]: reference dataset sizing and manifest checks
//! - [`governance`]: risk classification, admission questionnaire, CQOE sheet,
//!   metric bundle selection and the analytical validation pipeline
//! - [`reporting`]: STARD completeness check and PCTT report rendering
//!
//! Every computation is a pure function of its inputs.

pub mod agreement;
pub mod error;
pub mod governance;
pub mod io;
pub mod metrics;
pub mod reporting;
pub mod roc;
pub mod study_design;

mod num;

pub use error::{Error, Result};
pub use metrics::{ConfusionMatrix, Interval, MetricSet, Verdict};
pub use roc::{RocCurve, RocSummary};
