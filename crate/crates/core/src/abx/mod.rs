//! Machine ABX scoring: signed discriminability per triplet, decisions,
//! accuracies and human-reweighted accuracy.

mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    CorpusError, FeatureArchive, ItemAccuracy, Language, Manifest, SegmentRef, TripletItem, XMatches,
};
use crate::metrics::{dtw_distance, FrameMetric, MetricError};

pub use table::{
    read_delta_table, write_accuracy_csv, write_delta_table, write_reweighted_csv, ACCURACY_HEADER,
    DELTA_HEADER,
};

#[derive(Debug, Error)]
pub enum AbxError {
    #[error("triplet '{triplet_id}', segment {segment}: {source}")]
    Segment {
        triplet_id: String,
        segment: char,
        #[source]
        source: CorpusError,
    },
    #[error("triplet '{triplet_id}': {source}")]
    Metric {
        triplet_id: String,
        #[source]
        source: MetricError,
    },
    #[error("non-finite delta {0}")]
    NonFiniteDelta(f64),
    #[error("delta for triplet '{0}' which is not in the manifest")]
    UnknownTriplet(String),
    #[error("delta for triplet '{id}' has language {found}, manifest says {expected}")]
    LanguageMismatch {
        id: String,
        expected: Language,
        found: Language,
    },
    #[error("more than one delta for triplet '{0}'")]
    DuplicateDelta(String),
    #[error("{} manifest items have no delta (first: {}); restrict the run with a subset to score partially", .ids.len(), preview(.ids))]
    MissingDeltas { ids: Vec<String> },
    #[error("{} scored items have no human accuracy: {}", .ids.len(), preview(.ids))]
    MissingHum { ids: Vec<String> },
    #[error("human accuracies sum to zero for language {0}")]
    ZeroDenominator(Language),
    #[error("{file}: {message}")]
    Table { file: String, message: String },
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}

/// One model's score on one triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub model_id: String,
    pub language: Language,
    pub triplet_id: String,
    /// Positive when X is closer to the reference sharing its centre phone.
    pub delta: f64,
    pub d_ax: f64,
    pub d_bx: f64,
}

/// `d_bx - d_ax` when X matches A, `d_ax - d_bx` when it matches B.
pub fn signed_delta(d_ax: f64, d_bx: f64, x_matches: XMatches) -> f64 {
    match x_matches {
        XMatches::A => d_bx - d_ax,
        XMatches::B => d_ax - d_bx,
    }
}

/// Scores one triplet with one model's features.
pub fn compute_delta(
    item: &TripletItem,
    features: &FeatureArchive,
    metric: &FrameMetric,
    model_id: &str,
) -> Result<DeltaRecord, AbxError> {
    let segment = |name: char, seg: &SegmentRef| {
        features
            .get(&seg.utterance_id)
            .and_then(|fm| fm.segment_frames(seg))
            .map_err(|source| AbxError::Segment {
                triplet_id: item.triplet_id.clone(),
                segment: name,
                source,
            })
    };
    let a = segment('A', &item.a)?;
    let b = segment('B', &item.b)?;
    let x = segment('X', &item.x)?;
    let metric_err = |source| AbxError::Metric {
        triplet_id: item.triplet_id.clone(),
        source,
    };
    let d_ax = dtw_distance(a, x, metric).map_err(metric_err)?.distance;
    let d_bx = dtw_distance(b, x, metric).map_err(metric_err)?.distance;
    Ok(DeltaRecord {
        model_id: model_id.to_string(),
        language: item.language,
        triplet_id: item.triplet_id.clone(),
        delta: signed_delta(d_ax, d_bx, item.x_matches),
        d_ax,
        d_bx,
    })
}

/// Scores every item in parallel. Results are sorted by triplet id and the
/// reported error, if any, is the one of the smallest failing id, so output
/// does not depend on scheduling.
pub fn evaluate_triplets<'a>(
    items: impl IntoParallelIterator<Item = &'a TripletItem>,
    features: &FeatureArchive,
    metric: &FrameMetric,
    model_id: &str,
) -> Result<Vec<DeltaRecord>, AbxError> {
    let mut results: Vec<(&str, Result<DeltaRecord, AbxError>)> = items
        .into_par_iter()
        .map(|item| (item.triplet_id.as_str(), compute_delta(item, features, metric, model_id)))
        .collect();
    results.sort_by(|a, b| a.0.cmp(b.0));
    results.into_iter().map(|(_, r)| r).collect()
}

/// The model is right iff `delta > 0`; a tie counts as wrong.
pub fn decide(delta: f64) -> Result<bool, AbxError> {
    if !delta.is_finite() {
        return Err(AbxError::NonFiniteDelta(delta));
    }
    Ok(delta > 0.0)
}

/// Unordered centre-phone pair within one language.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ContrastKey {
    pub language: Language,
    phones: (String, String),
}

impl ContrastKey {
    pub fn new(language: Language, p: &str, q: &str) -> Self {
        let phones = if p <= q {
            (p.to_string(), q.to_string())
        } else {
            (q.to_string(), p.to_string())
        };
        ContrastKey { language, phones }
    }

    pub fn of(item: &TripletItem) -> Self {
        ContrastKey::new(item.language, &item.phone_a, &item.phone_b)
    }

    pub fn phones(&self) -> (&str, &str) {
        (&self.phones.0, &self.phones.1)
    }
}

impl fmt::Display for ContrastKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}~{}", self.phones.0, self.phones.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Global,
    ByContrast,
}

impl Grouping {
    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Global => "global",
            Grouping::ByContrast => "by_contrast",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub language: Language,
    /// `None` for a per-language global row.
    pub contrast: Option<ContrastKey>,
    pub n_correct: u64,
    pub n_items: u64,
}

impl AccuracyRow {
    pub fn key(&self) -> String {
        self.contrast
            .as_ref()
            .map_or_else(|| "all".to_string(), ContrastKey::to_string)
    }

    pub fn accuracy(&self) -> f64 {
        self.n_correct as f64 / self.n_items as f64
    }

    pub fn ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.n_correct), BigInt::from(self.n_items))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub scope: Grouping,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyReport {
    pub fn row(&self, language: Language) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.language == language)
    }
}

/// Indexes deltas by triplet id after checking each against the manifest,
/// and checks that every manifest item is scored.
fn resolve<'a>(
    deltas: &'a [DeltaRecord],
    triplets: &'a Manifest,
) -> Result<Vec<(&'a TripletItem, &'a DeltaRecord)>, AbxError> {
    let mut by_id: BTreeMap<&str, &DeltaRecord> = BTreeMap::new();
    for d in deltas {
        let item = triplets
            .get(&d.triplet_id)
            .ok_or_else(|| AbxError::UnknownTriplet(d.triplet_id.clone()))?;
        if item.language != d.language {
            return Err(AbxError::LanguageMismatch {
                id: d.triplet_id.clone(),
                expected: item.language,
                found: d.language,
            });
        }
        if by_id.insert(&d.triplet_id, d).is_some() {
            return Err(AbxError::DuplicateDelta(d.triplet_id.clone()));
        }
    }
    let missing: Vec<String> = triplets
        .iter()
        .filter(|t| !by_id.contains_key(t.triplet_id.as_str()))
        .map(|t| t.triplet_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(AbxError::MissingDeltas { ids: missing });
    }
    Ok(by_id
        .into_iter()
        .map(|(id, d)| (triplets.get(id).expect("resolved above"), d))
        .collect())
}

/// Fraction of items with `delta > 0`, per language or per contrast.
pub fn accuracy(
    deltas: &[DeltaRecord],
    grouping: Grouping,
    triplets: &Manifest,
) -> Result<AccuracyReport, AbxError> {
    let mut groups: BTreeMap<(Language, Option<ContrastKey>), (u64, u64)> = BTreeMap::new();
    for (item, d) in resolve(deltas, triplets)? {
        let key = match grouping {
            Grouping::Global => None,
            Grouping::ByContrast => Some(ContrastKey::of(item)),
        };
        let e = groups.entry((item.language, key)).or_default();
        e.0 += u64::from(decide(d.delta)?);
        e.1 += 1;
    }
    let rows = groups
        .into_iter()
        .map(|((language, contrast), (n_correct, n_items))| AccuracyRow {
            language,
            contrast,
            n_correct,
            n_items,
        })
        .collect();
    Ok(AccuracyReport { scope: grouping, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReweightedAccuracy {
    pub language: Language,
    /// Exact value of the weighted fraction.
    #[serde(skip)]
    pub value: BigRational,
    pub n_items: u64,
}

impl ReweightedAccuracy {
    pub fn accuracy(&self) -> f64 {
        self.value.to_f64().expect("ratio in [0, 1]")
    }
}

/// Accuracy with each item weighted by the fraction of native listeners who
/// got it right: `sum 1[delta > 0] * hum / sum hum`, per language.
pub fn reweighted_accuracy(
    deltas: &[DeltaRecord],
    hum: &BTreeMap<String, ItemAccuracy>,
) -> Result<Vec<ReweightedAccuracy>, AbxError> {
    let missing: BTreeSet<&str> = deltas
        .iter()
        .filter(|d| !hum.contains_key(&d.triplet_id))
        .map(|d| d.triplet_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(AbxError::MissingHum {
            ids: missing.into_iter().map(String::from).collect(),
        });
    }
    let mut sums: BTreeMap<Language, (BigRational, BigRational, u64)> = BTreeMap::new();
    for d in deltas {
        let h = &hum[&d.triplet_id];
        let w = BigRational::new(BigInt::from(h.n_correct), BigInt::from(h.n_responses));
        let e = sums
            .entry(d.language)
            .or_insert_with(|| (BigRational::zero(), BigRational::zero(), 0));
        if decide(d.delta)? {
            e.0 += &w;
        }
        e.1 += w;
        e.2 += 1;
    }
    sums.into_iter()
        .map(|(language, (num, den, n_items))| {
            if den.is_zero() {
                return Err(AbxError::ZeroDenominator(language));
            }
            Ok(ReweightedAccuracy {
                language,
                value: num / den,
                n_items,
            })
        })
        .collect()
}

/// Deltas keyed by triplet id.
pub fn delta_map(deltas: &[DeltaRecord]) -> BTreeMap<String, f64> {
    deltas.iter().map(|d| (d.triplet_id.clone(), d.delta)).collect()
}

#[cfg(test)]
mod tests;
