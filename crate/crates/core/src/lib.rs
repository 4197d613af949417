//! Machine ABX phone discrimination and human-comparison scoring for speech
//! representations.
//!
//! The crate is organised the way a run flows:
//!
//! * [`corpus`] loads feature archives, triplet manifests and listener
//!   responses, and cuts stimulus segments out of utterance features.
//! * [`metrics`] holds the frame distances (angular, symmetrised KL) and the
//!   DTW sequence distance normalised by the longer sequence length.
//! * [`abx`] turns distances into signed discriminability scores, machine
//!   decisions, plain accuracies and accuracies reweighted by human item
//!   accuracy.
//! * [`predict`] fits probit regressions of individual listener correctness
//!   on model scores, compares models by log-likelihood and builds paired
//!   bootstrap intervals and figure tables.

pub mod abx;
pub mod corpus;
pub mod metrics;
pub mod predict;

mod fmt;

pub use abx::{AbxError, AccuracyReport, ContrastKey, DeltaRecord, Grouping};
pub use corpus::{
    CorpusError, FeatureArchive, FeatureMatrix, HumanResponse, ItemAccuracy, Language, Manifest,
    SegmentRef, TripletItem, XMatches,
};
pub use fmt::format_sig;
pub use metrics::{DtwResult, FrameMetric, Frames, MetricError, MetricKind};
pub use predict::{BootstrapResult, DesignRow, PredictError, RegressionFit};
