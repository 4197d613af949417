//! Feature archives, triplet manifests and listener responses.

mod features;
mod manifest;
mod responses;
mod validate;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{extract_segment, load_feature_archive, FeatureArchive, FeatureMatrix};
pub use manifest::{
    load_triplets, load_triplets_with, read_triplets, write_triplets, Manifest, ManifestOptions,
    MANIFEST_HEADER,
};
pub use responses::{
    item_human_accuracy, load_responses, read_responses, HumanResponse, ItemAccuracy,
    RESPONSES_HEADER,
};
pub use validate::{validate_dataset, CountCheck, ExpectedCounts, LanguageCounts, ValidationReport};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no feature files found in {0}")]
    NoFeatureFiles(PathBuf),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: non-finite value in field {field}")]
    NonFinite {
        file: String,
        line: usize,
        field: usize,
    },
    #[error("feature dimension mismatch: utterance '{first}' has dim {first_dim}, '{second}' has dim {second_dim}")]
    DimensionMismatch {
        first: String,
        first_dim: usize,
        second: String,
        second_dim: usize,
    },
    #[error("invalid feature matrix for '{utterance}': {message}")]
    InvalidMatrix { utterance: String, message: String },
    #[error("segment of '{utterance}' [{onset}, {offset}] requested from features of '{found}'")]
    UtteranceMismatch {
        utterance: String,
        found: String,
        onset: f64,
        offset: f64,
    },
    #[error("empty segment: no frame of '{utterance}' falls inside [{onset}, {offset}]")]
    EmptySegment {
        utterance: String,
        onset: f64,
        offset: f64,
    },
    #[error("utterance '{0}' not found in feature archive")]
    MissingUtterance(String),
    #[error("{file}: unexpected header: expected `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },
    #[error("{file}: row {row}: {message}")]
    Row {
        file: String,
        row: usize,
        message: String,
    },
    #[error("{file}: row {row}: duplicate triplet_id '{id}'")]
    DuplicateId { file: String, row: usize, id: String },
    #[error("{file}: row {row}: unknown triplet_id '{id}'")]
    UnknownTriplet { file: String, row: usize, id: String },
    #[error("{file}: row {row}: response language {found} does not match triplet '{id}' language {expected}")]
    LanguageMismatch {
        file: String,
        row: usize,
        id: String,
        expected: Language,
        found: Language,
    },
    #[error("subset lists unknown triplet_id '{0}'")]
    UnknownSubsetId(String),
    #[error("empty response set")]
    NoResponses,
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Stimulus language. Listeners are only ever paired with items of their own
/// language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Fr,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::En, Language::Fr];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Fr => "fr",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Language::En),
            "fr" => Ok(Language::Fr),
            other => Err(format!("language must be 'en' or 'fr', got '{other}'")),
        }
    }
}

/// Which reference shares X's centre phone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XMatches {
    A,
    B,
}

impl XMatches {
    pub fn as_str(self) -> &'static str {
        match self {
            XMatches::A => "A",
            XMatches::B => "B",
        }
    }
}

impl FromStr for XMatches {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(XMatches::A),
            "B" => Ok(XMatches::B),
            other => Err(format!("x_matches must be 'A' or 'B', got '{other}'")),
        }
    }
}

/// A stimulus cut out of a larger utterance, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub utterance_id: String,
    pub onset: f64,
    pub offset: f64,
}

impl SegmentRef {
    pub fn new(utterance_id: impl Into<String>, onset: f64, offset: f64) -> Self {
        SegmentRef {
            utterance_id: utterance_id.into(),
            onset,
            offset,
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if !(self.onset.is_finite() && self.offset.is_finite()) {
            return Err(format!("non-finite segment bounds for '{}'", self.utterance_id));
        }
        if self.onset < 0.0 {
            return Err(format!("negative onset {} for '{}'", self.onset, self.utterance_id));
        }
        if self.onset >= self.offset {
            return Err(format!(
                "onset {} not before offset {} for '{}'",
                self.onset, self.offset, self.utterance_id
            ));
        }
        Ok(())
    }
}

/// One A/B/X stimulus triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletItem {
    pub triplet_id: String,
    pub language: Language,
    pub a: SegmentRef,
    pub b: SegmentRef,
    pub x: SegmentRef,
    pub phone_a: String,
    pub phone_b: String,
    pub prev_phone: String,
    pub next_phone: String,
    pub speaker_a: String,
    pub speaker_b: String,
    pub speaker_x: String,
    pub x_matches: XMatches,
}

impl TripletItem {
    /// Flanking context shared by A, B and X.
    pub fn context(&self) -> (&str, &str) {
        (&self.prev_phone, &self.next_phone)
    }
}
