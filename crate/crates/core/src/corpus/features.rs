use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{CorpusError, SegmentRef};
use crate::metrics::Frames;

/// Extension of per-utterance feature files.
pub const FEATURE_EXTENSION: &str = "fea";

/// A model's representation of one utterance: `n_frames` rows of `dim`
/// values, each stamped with its frame-centre time in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    utterance_id: String,
    times: Vec<f64>,
    data: Vec<f64>,
    dim: usize,
}

impl FeatureMatrix {
    /// `data` is row-major, `times.len()` rows of `dim` values.
    pub fn new(
        utterance_id: impl Into<String>,
        times: Vec<f64>,
        data: Vec<f64>,
        dim: usize,
    ) -> Result<Self, CorpusError> {
        let utterance_id = utterance_id.into();
        let invalid = |message: String| CorpusError::InvalidMatrix {
            utterance: utterance_id.clone(),
            message,
        };
        if times.is_empty() {
            return Err(invalid("no frames".into()));
        }
        if dim == 0 {
            return Err(invalid("zero feature dimension".into()));
        }
        if data.len() != times.len() * dim {
            return Err(invalid(format!(
                "{} values for {} frames of dim {}",
                data.len(),
                times.len(),
                dim
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(invalid(format!("non-finite time at frame {i}")));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite feature value at frame {}", i / dim)));
        }
        if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "times not strictly increasing at frame {} ({} >= {})",
                i + 1,
                times[i],
                times[i + 1]
            )));
        }
        Ok(FeatureMatrix {
            utterance_id,
            times,
            data,
            dim,
        })
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn n_frames(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frames(&self) -> Frames<'_> {
        Frames::new(&self.data, self.dim).expect("validated at construction")
    }

    /// Indices of frames whose centre lies in `[onset, offset]`, or `None`
    /// when that set is empty.
    pub fn segment_range(&self, onset: f64, offset: f64) -> Option<Range<usize>> {
        let lo = self.times.partition_point(|&t| t < onset);
        let hi = self.times.partition_point(|&t| t <= offset);
        (lo < hi).then_some(lo..hi)
    }

    pub fn frames_in(&self, range: Range<usize>) -> Frames<'_> {
        Frames::new(&self.data[range.start * self.dim..range.end * self.dim], self.dim)
            .expect("nonempty range of a validated matrix")
    }

    /// Borrowed view of the frames selected by `seg`.
    pub fn segment_frames(&self, seg: &SegmentRef) -> Result<Frames<'_>, CorpusError> {
        self.check_utterance(seg)?;
        self.segment_range(seg.onset, seg.offset)
            .map(|r| self.frames_in(r))
            .ok_or_else(|| CorpusError::EmptySegment {
                utterance: seg.utterance_id.clone(),
                onset: seg.onset,
                offset: seg.offset,
            })
    }

    fn check_utterance(&self, seg: &SegmentRef) -> Result<(), CorpusError> {
        if seg.utterance_id != self.utterance_id {
            return Err(CorpusError::UtteranceMismatch {
                utterance: seg.utterance_id.clone(),
                found: self.utterance_id.clone(),
                onset: seg.onset,
                offset: seg.offset,
            });
        }
        Ok(())
    }
}

/// Frames of `fm` with `onset <= t <= offset`, in order.
pub fn extract_segment(fm: &FeatureMatrix, seg: &SegmentRef) -> Result<FeatureMatrix, CorpusError> {
    fm.check_utterance(seg)?;
    let range = fm
        .segment_range(seg.onset, seg.offset)
        .ok_or_else(|| CorpusError::EmptySegment {
            utterance: seg.utterance_id.clone(),
            onset: seg.onset,
            offset: seg.offset,
        })?;
    Ok(FeatureMatrix {
        utterance_id: fm.utterance_id.clone(),
        times: fm.times[range.clone()].to_vec(),
        data: fm.data[range.start * fm.dim..range.end * fm.dim].to_vec(),
        dim: fm.dim,
    })
}

/// All utterances of one model on one stimulus set, sharing a dimension.
#[derive(Debug, Clone)]
pub struct FeatureArchive {
    dim: usize,
    utterances: BTreeMap<String, FeatureMatrix>,
}

impl FeatureArchive {
    pub fn from_matrices(
        matrices: impl IntoIterator<Item = FeatureMatrix>,
    ) -> Result<Self, CorpusError> {
        let mut utterances = BTreeMap::new();
        let mut reference: Option<(String, usize)> = None;
        for fm in matrices {
            match &reference {
                None => reference = Some((fm.utterance_id.clone(), fm.dim)),
                Some((first, dim)) if *dim != fm.dim => {
                    return Err(CorpusError::DimensionMismatch {
                        first: first.clone(),
                        first_dim: *dim,
                        second: fm.utterance_id.clone(),
                        second_dim: fm.dim,
                    })
                }
                Some(_) => {}
            }
            if let Some(prev) = utterances.insert(fm.utterance_id.clone(), fm) {
                return Err(CorpusError::InvalidMatrix {
                    utterance: prev.utterance_id,
                    message: "duplicate utterance id".into(),
                });
            }
        }
        let dim = reference.map(|(_, d)| d).unwrap_or(0);
        Ok(FeatureArchive { dim, utterances })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, utterance_id: &str) -> Result<&FeatureMatrix, CorpusError> {
        self.utterances
            .get(utterance_id)
            .ok_or_else(|| CorpusError::MissingUtterance(utterance_id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FeatureMatrix)> {
        self.utterances.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Loads every `*.fea` file in `path` (or the single file `path`), keyed by
/// file stem. Files are parsed in parallel.
pub fn load_feature_archive(path: &Path) -> Result<FeatureArchive, CorpusError> {
    let files: Vec<PathBuf> = if path.is_file() {
        vec![path.to_path_buf()]
    } else {
        let entries = fs::read_dir(path).map_err(|e| CorpusError::io(path, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let p = entry.map_err(|e| CorpusError::io(path, e))?.path();
            if p.is_file() && p.extension().is_some_and(|e| e == FEATURE_EXTENSION) {
                files.push(p);
            }
        }
        files.sort();
        files
    };
    if files.is_empty() {
        return Err(CorpusError::NoFeatureFiles(path.to_path_buf()));
    }
    let parsed: Vec<Result<FeatureMatrix, CorpusError>> =
        files.par_iter().map(|f| read_feature_file(f)).collect();
    // first failure in path order, independent of scheduling
    let matrices = parsed.into_iter().collect::<Result<Vec<_>, _>>()?;
    FeatureArchive::from_matrices(matrices)
}

fn read_feature_file(path: &Path) -> Result<FeatureMatrix, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_feature_text(&stem, &path.display().to_string(), &text)
}

pub(crate) fn parse_feature_text(
    utterance_id: &str,
    file: &str,
    text: &str,
) -> Result<FeatureMatrix, CorpusError> {
    let parse_err = |line: usize, message: String| CorpusError::Parse {
        file: file.to_string(),
        line,
        message,
    };
    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut n_fields = 0;
        for (field, tok) in raw.split_whitespace().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line, format!("field {} is not a number: '{tok}'", field + 1)))?;
            if !v.is_finite() {
                return Err(CorpusError::NonFinite {
                    file: file.to_string(),
                    line,
                    field: field + 1,
                });
            }
            if field == 0 {
                times.push(v);
            } else {
                data.push(v);
            }
            n_fields += 1;
        }
        let row_dim = n_fields - 1;
        if row_dim == 0 {
            return Err(parse_err(line, "frame has a time but no feature values".into()));
        }
        match dim {
            None => dim = Some(row_dim),
            Some(d) if d != row_dim => {
                return Err(parse_err(
                    line,
                    format!("frame has {row_dim} values, previous frames have {d}"),
                ))
            }
            Some(_) => {}
        }
        if let [.., prev, last] = times[..] {
            if last <= prev {
                return Err(parse_err(
                    line,
                    format!("frame time {last} does not increase past {prev}"),
                ));
            }
        }
    }
    let dim = dim.ok_or_else(|| parse_err(0, "file contains no frames".into()))?;
    FeatureMatrix::new(utterance_id, times, data, dim)
}
