//! Probit regression of individual listener responses on model deltas,
//! paired bootstrap of its log-likelihood, and figure tables.

mod bootstrap;
mod design;
mod figures;
pub mod normal;
mod probit;

use thiserror::Error;

use crate::corpus::Language;

pub use bootstrap::{
    bootstrap_compare, percentile_interval, resample_responses, write_bootstrap_csv,
    BootstrapOptions, BootstrapResult, ModelInterval, PairInterval, Resample, RESPONSES_PER_ITEM,
};
pub use design::{build_design, delta_scale, DesignRow, ModelDeltas, ProbitDesign};
pub use figures::{f1_row, figure_f2, write_f1_csv, write_f2_csv, F1Row, F2Row, F1_HEADER, F2_HEADER};
pub use probit::{
    design_log_likelihood, fit_design, fit_probit, log_likelihood, score, FitOptions, RegressionFit,
};

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("empty response set")]
    NoResponses,
    #[error("no {language} delta for triplet '{triplet_id}'")]
    MissingDelta { triplet_id: String, language: Language },
    #[error("response refers to triplet '{0}' which is not in the manifest")]
    UnknownTriplet(String),
    #[error("{language} deltas have zero or undefined standard deviation over scored items")]
    DegenerateDelta { language: Language },
    #[error("design row {index}: {message}")]
    InvalidRow { index: usize, message: String },
    #[error("design matrix is rank deficient: column '{column}' is collinear with earlier columns")]
    RankDeficient { column: String },
    #[error("{n_obs} observations for {n_columns} columns")]
    TooFewObservations { n_obs: usize, n_columns: usize },
    #[error("coefficient vector has length {found}, design has {expected} columns")]
    WidthMismatch { expected: usize, found: usize },
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("resample {index}, model '{model_id}': {source}")]
    Resample {
        index: usize,
        model_id: String,
        #[source]
        source: Box<PredictError>,
    },
    #[error("cannot normalize {0}: fewer than two rows or zero standard deviation")]
    DegenerateNormalization(&'static str),
    #[error("invalid option: {0}")]
    InvalidOption(String),
}
