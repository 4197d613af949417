use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Language, SegmentRef, TripletItem, XMatches};

pub const MANIFEST_HEADER: [&str; 19] = [
    "triplet_id",
    "language",
    "file_a",
    "onset_a",
    "offset_a",
    "file_b",
    "onset_b",
    "offset_b",
    "file_x",
    "onset_x",
    "offset_x",
    "phone_a",
    "phone_b",
    "prev_phone",
    "next_phone",
    "speaker_a",
    "speaker_b",
    "speaker_x",
    "x_matches",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct ManifestOptions {
    /// Reject rows where A and B come from different speakers instead of
    /// only warning.
    pub strict_same_speaker: bool,
}

/// Validated triplet list in file order, indexed by id.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    items: Vec<TripletItem>,
    index: HashMap<String, usize>,
}

impl Manifest {
    pub fn new(items: Vec<TripletItem>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if index.insert(item.triplet_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    file: "<manifest>".into(),
                    row: i + 1,
                    id: item.triplet_id.clone(),
                });
            }
        }
        Ok(Manifest { items, index })
    }

    pub fn items(&self) -> &[TripletItem] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TripletItem> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, triplet_id: &str) -> Option<&TripletItem> {
        self.index.get(triplet_id).map(|&i| &self.items[i])
    }

    pub fn contains(&self, triplet_id: &str) -> bool {
        self.index.contains_key(triplet_id)
    }

    pub fn languages(&self) -> BTreeSet<Language> {
        self.items.iter().map(|t| t.language).collect()
    }

    pub fn of_language(&self, language: Language) -> impl Iterator<Item = &TripletItem> {
        self.items.iter().filter(move |t| t.language == language)
    }

    /// Keeps only the listed ids, preserving manifest order.
    pub fn subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<Manifest, CorpusError> {
        let mut keep = vec![false; self.items.len()];
        for id in ids {
            let id = id.as_ref();
            let &i = self
                .index
                .get(id)
                .ok_or_else(|| CorpusError::UnknownSubsetId(id.to_string()))?;
            keep[i] = true;
        }
        let items = self
            .items
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(item, _)| item.clone())
            .collect();
        Manifest::new(items)
    }
}

impl<'a> IntoIterator for &'a Manifest {
    type Item = &'a TripletItem;
    type IntoIter = std::slice::Iter<'a, TripletItem>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    triplet_id: String,
    language: String,
    file_a: String,
    onset_a: f64,
    offset_a: f64,
    file_b: String,
    onset_b: f64,
    offset_b: f64,
    file_x: String,
    onset_x: f64,
    offset_x: f64,
    phone_a: String,
    phone_b: String,
    prev_phone: String,
    next_phone: String,
    speaker_a: String,
    speaker_b: String,
    speaker_x: String,
    x_matches: String,
}

impl ManifestRow {
    fn into_item(self, opts: ManifestOptions) -> Result<TripletItem, String> {
        let language: Language = self.language.parse()?;
        let x_matches: XMatches = self.x_matches.parse()?;
        if self.triplet_id.is_empty() {
            return Err("empty triplet_id".into());
        }
        if self.phone_a == self.phone_b {
            return Err(format!("centre phones identical ('{}')", self.phone_a));
        }
        if self.speaker_x == self.speaker_a || self.speaker_x == self.speaker_b {
            return Err(format!(
                "across-speaker condition violated (speaker_x '{}' also speaks A or B)",
                self.speaker_x
            ));
        }
        if self.speaker_a != self.speaker_b {
            let msg = format!(
                "A and B speakers differ ('{}' vs '{}')",
                self.speaker_a, self.speaker_b
            );
            if opts.strict_same_speaker {
                return Err(msg);
            }
            log::warn!("triplet '{}': {msg}", self.triplet_id);
        }
        let a = SegmentRef::new(self.file_a, self.onset_a, self.offset_a);
        let b = SegmentRef::new(self.file_b, self.onset_b, self.offset_b);
        let x = SegmentRef::new(self.file_x, self.onset_x, self.offset_x);
        for seg in [&a, &b, &x] {
            seg.check()?;
        }
        Ok(TripletItem {
            triplet_id: self.triplet_id,
            language,
            a,
            b,
            x,
            phone_a: self.phone_a,
            phone_b: self.phone_b,
            prev_phone: self.prev_phone,
            next_phone: self.next_phone,
            speaker_a: self.speaker_a,
            speaker_b: self.speaker_b,
            speaker_x: self.speaker_x,
            x_matches,
        })
    }

    fn from_item(t: &TripletItem) -> Self {
        ManifestRow {
            triplet_id: t.triplet_id.clone(),
            language: t.language.as_str().to_string(),
            file_a: t.a.utterance_id.clone(),
            onset_a: t.a.onset,
            offset_a: t.a.offset,
            file_b: t.b.utterance_id.clone(),
            onset_b: t.b.onset,
            offset_b: t.b.offset,
            file_x: t.x.utterance_id.clone(),
            onset_x: t.x.onset,
            offset_x: t.x.offset,
            phone_a: t.phone_a.clone(),
            phone_b: t.phone_b.clone(),
            prev_phone: t.prev_phone.clone(),
            next_phone: t.next_phone.clone(),
            speaker_a: t.speaker_a.clone(),
            speaker_b: t.speaker_b.clone(),
            speaker_x: t.speaker_x.clone(),
            x_matches: t.x_matches.as_str().to_string(),
        }
    }
}

pub(crate) fn check_header(
    file: &str,
    headers: &csv::StringRecord,
    expected: &[&str],
) -> Result<(), CorpusError> {
    if headers.iter().ne(expected.iter().copied()) {
        return Err(CorpusError::Header {
            file: file.to_string(),
            expected: expected.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

pub fn load_triplets(path: &Path) -> Result<Manifest, CorpusError> {
    load_triplets_with(path, ManifestOptions::default())
}

pub fn load_triplets_with(path: &Path, opts: ManifestOptions) -> Result<Manifest, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_triplets(file, &path.display().to_string(), opts)
}

/// Parses and validates a manifest; `name` is used in error messages.
pub fn read_triplets<R: Read>(
    reader: R,
    name: &str,
    opts: ManifestOptions,
) -> Result<Manifest, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| row_error(name, 0, e.to_string()))?.clone();
    check_header(name, &headers, &MANIFEST_HEADER)?;

    let mut items: Vec<TripletItem> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, rec) in rdr.deserialize::<ManifestRow>().enumerate() {
        let row = i + 1;
        let raw = rec.map_err(|e| row_error(name, row, csv_message(e)))?;
        let item = raw.into_item(opts).map_err(|m| row_error(name, row, m))?;
        if seen.insert(item.triplet_id.clone(), row).is_some() {
            return Err(CorpusError::DuplicateId {
                file: name.to_string(),
                row,
                id: item.triplet_id,
            });
        }
        items.push(item);
    }
    Manifest::new(items)
}

pub fn write_triplets<W: Write>(items: &[TripletItem], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for item in items {
        w.serialize(ManifestRow::from_item(item))?;
    }
    if items.is_empty() {
        w.write_record(MANIFEST_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

fn row_error(file: &str, row: usize, message: String) -> CorpusError {
    CorpusError::Row {
        file: file.to_string(),
        row,
        message,
    }
}

pub(crate) fn csv_message(e: csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(f) => format!("field {}: {}", f + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}
