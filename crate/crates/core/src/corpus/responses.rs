use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::manifest::{check_header, csv_message};
use super::{CorpusError, Language, Manifest};

pub const RESPONSES_HEADER: [&str; 7] = [
    "triplet_id",
    "participant_id",
    "language",
    "correct",
    "certainty",
    "correct_first",
    "trial_position",
];

/// One listener's answer on one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanResponse {
    pub triplet_id: String,
    pub participant_id: String,
    pub language: Language,
    pub correct: bool,
    /// 1 (unsure) to 3 (sure).
    pub certainty: u8,
    /// The correct reference was played first.
    pub correct_first: bool,
    pub trial_position: u32,
}

impl HumanResponse {
    /// Six-point score: `+certainty` when correct, `-certainty` otherwise.
    pub fn gradient(&self) -> i8 {
        let c = self.certainty as i8;
        if self.correct {
            c
        } else {
            -c
        }
    }
}

/// Fraction of listeners answering one item correctly, kept as the exact
/// pair of counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemAccuracy {
    pub n_correct: u32,
    pub n_responses: u32,
}

impl ItemAccuracy {
    pub fn hum(&self) -> f64 {
        self.n_correct as f64 / self.n_responses as f64
    }
}

#[derive(Debug, Deserialize)]
struct ResponseRow {
    triplet_id: String,
    participant_id: String,
    language: String,
    correct: u8,
    certainty: u8,
    correct_first: u8,
    trial_position: u32,
}

pub fn load_responses(path: &Path, triplets: &Manifest) -> Result<Vec<HumanResponse>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_responses(file, &path.display().to_string(), triplets)
}

pub fn read_responses<R: Read>(
    reader: R,
    name: &str,
    triplets: &Manifest,
) -> Result<Vec<HumanResponse>, CorpusError> {
    let row_err = |row: usize, message: String| CorpusError::Row {
        file: name.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| row_err(0, e.to_string()))?.clone();
    check_header(name, &headers, &RESPONSES_HEADER)?;

    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<ResponseRow>().enumerate() {
        let row = i + 1;
        let r = rec.map_err(|e| row_err(row, csv_message(e)))?;
        let language: Language = r.language.parse().map_err(|m| row_err(row, m))?;
        let flag = |name: &str, v: u8| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(row_err(row, format!("{name} must be 0 or 1, got {v}"))),
        };
        let correct = flag("correct", r.correct)?;
        let correct_first = flag("correct_first", r.correct_first)?;
        if !(1..=3).contains(&r.certainty) {
            return Err(row_err(
                row,
                format!("certainty must be in {{1,2,3}}, got {}", r.certainty),
            ));
        }
        if r.trial_position == 0 {
            return Err(row_err(row, "trial_position must be >= 1".into()));
        }
        let item = triplets.get(&r.triplet_id).ok_or_else(|| CorpusError::UnknownTriplet {
            file: name.to_string(),
            row,
            id: r.triplet_id.clone(),
        })?;
        if item.language != language {
            return Err(CorpusError::LanguageMismatch {
                file: name.to_string(),
                row,
                id: r.triplet_id,
                expected: item.language,
                found: language,
            });
        }
        out.push(HumanResponse {
            triplet_id: r.triplet_id,
            participant_id: r.participant_id,
            language,
            correct,
            certainty: r.certainty,
            correct_first,
            trial_position: r.trial_position,
        });
    }
    Ok(out)
}

/// Per-item fraction of correct responses. Items without responses are
/// absent from the map.
pub fn item_human_accuracy(
    responses: &[HumanResponse],
) -> Result<BTreeMap<String, ItemAccuracy>, CorpusError> {
    if responses.is_empty() {
        return Err(CorpusError::NoResponses);
    }
    let mut acc: BTreeMap<String, ItemAccuracy> = BTreeMap::new();
    for r in responses {
        let e = acc.entry(r.triplet_id.clone()).or_insert(ItemAccuracy {
            n_correct: 0,
            n_responses: 0,
        });
        e.n_responses += 1;
        e.n_correct += u32::from(r.correct);
    }
    Ok(acc)
}
