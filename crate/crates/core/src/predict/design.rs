use std::collections::{BTreeMap, BTreeSet};

use super::PredictError;
use crate::corpus::{HumanResponse, Language, Manifest};

/// One listener response as a regression row.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub y: bool,
    pub i_fr: u8,
    pub i_en: u8,
    /// French-trained model's delta, zero on English rows.
    pub delta_fr: f64,
    /// English-trained model's delta, zero on French rows.
    pub delta_en: f64,
    pub correct_first: u8,
    /// Trial position divided by the largest observed position.
    pub position: f64,
    /// `<language>:<participant_id>`; participants are nested in language.
    pub participant: String,
}

impl DesignRow {
    pub fn language(&self) -> Language {
        if self.i_fr == 1 {
            Language::Fr
        } else {
            Language::En
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.i_fr > 1 || self.i_en > 1 || self.i_fr + self.i_en != 1 {
            return Err(format!("indicators i_fr={} i_en={} must be one-hot", self.i_fr, self.i_en));
        }
        if self.i_fr == 0 && self.delta_fr != 0.0 {
            return Err("delta_fr must be 0 on an English row".into());
        }
        if self.i_en == 0 && self.delta_en != 0.0 {
            return Err("delta_en must be 0 on a French row".into());
        }
        if self.correct_first > 1 {
            return Err(format!("correct_first={} is not 0/1", self.correct_first));
        }
        if !(self.delta_fr.is_finite() && self.delta_en.is_finite() && self.position.is_finite()) {
            return Err("non-finite predictor".into());
        }
        Ok(())
    }
}

/// The two delta maps one model supplies to the regression.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDeltas {
    pub model_id: String,
    pub fr: BTreeMap<String, f64>,
    pub en: BTreeMap<String, f64>,
}

impl ModelDeltas {
    pub fn new(
        model_id: impl Into<String>,
        fr: BTreeMap<String, f64>,
        en: BTreeMap<String, f64>,
    ) -> Self {
        ModelDeltas {
            model_id: model_id.into(),
            fr,
            en,
        }
    }

    /// A model trained on neither language: one map feeds both columns.
    pub fn shared(model_id: impl Into<String>, deltas: BTreeMap<String, f64>) -> Self {
        ModelDeltas::new(model_id, deltas.clone(), deltas)
    }

    pub fn for_language(&self, language: Language) -> &BTreeMap<String, f64> {
        match language {
            Language::Fr => &self.fr,
            Language::En => &self.en,
        }
    }
}

/// Sample standard deviation of a language's deltas over the manifest items
/// of that language that have one.
pub fn delta_scale(
    deltas: &BTreeMap<String, f64>,
    triplets: &Manifest,
    language: Language,
) -> Result<f64, PredictError> {
    let values: Vec<f64> = triplets
        .of_language(language)
        .filter_map(|t| deltas.get(&t.triplet_id).copied())
        .collect();
    let sd = sample_std(&values);
    match sd {
        Some(sd) if sd > 0.0 && sd.is_finite() => Ok(sd),
        _ => Err(PredictError::DegenerateDelta { language }),
    }
}

pub(super) fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// One row per response. Deltas are divided by their language's standard
/// deviation and positions by the largest position.
pub fn build_design(
    responses: &[HumanResponse],
    deltas_fr: &BTreeMap<String, f64>,
    deltas_en: &BTreeMap<String, f64>,
    triplets: &Manifest,
) -> Result<Vec<DesignRow>, PredictError> {
    if responses.is_empty() {
        return Err(PredictError::NoResponses);
    }
    let languages: BTreeSet<Language> = responses.iter().map(|r| r.language).collect();
    let mut scale = BTreeMap::new();
    for &lang in &languages {
        let map = match lang {
            Language::Fr => deltas_fr,
            Language::En => deltas_en,
        };
        scale.insert(lang, delta_scale(map, triplets, lang)?);
    }
    let max_pos = responses.iter().map(|r| r.trial_position).max().unwrap_or(1).max(1) as f64;

    responses
        .iter()
        .map(|r| {
            let item = triplets
                .get(&r.triplet_id)
                .ok_or_else(|| PredictError::UnknownTriplet(r.triplet_id.clone()))?;
            let map = match item.language {
                Language::Fr => deltas_fr,
                Language::En => deltas_en,
            };
            let delta = *map.get(&r.triplet_id).ok_or_else(|| PredictError::MissingDelta {
                triplet_id: r.triplet_id.clone(),
                language: item.language,
            })?;
            let z = delta / scale[&item.language];
            let fr = item.language == Language::Fr;
            Ok(DesignRow {
                y: r.correct,
                i_fr: u8::from(fr),
                i_en: u8::from(!fr),
                delta_fr: if fr { z } else { 0.0 },
                delta_en: if fr { 0.0 } else { z },
                correct_first: u8::from(r.correct_first),
                position: r.trial_position as f64 / max_pos,
                participant: format!("{}:{}", item.language, r.participant_id),
            })
        })
        .collect()
}

/// Design matrix with a dense block and an optional one-hot group block
/// (each row belongs to at most one non-reference group).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbitDesign {
    pub(super) n: usize,
    pub(super) k: usize,
    pub(super) dense: Vec<f64>,
    pub(super) group: Vec<Option<usize>>,
    pub(super) n_groups: usize,
    pub(super) names: Vec<String>,
    pub(super) y: Vec<bool>,
}

impl ProbitDesign {
    /// `dense` is row-major with `names.len()` columns.
    pub fn new(dense: Vec<f64>, names: Vec<String>, y: Vec<bool>) -> Result<Self, PredictError> {
        let k = names.len();
        let n = y.len();
        if n == 0 {
            return Err(PredictError::NoResponses);
        }
        if dense.len() != n * k {
            return Err(PredictError::WidthMismatch {
                expected: n * k,
                found: dense.len(),
            });
        }
        if let Some(i) = dense.iter().position(|v| !v.is_finite()) {
            return Err(PredictError::InvalidRow {
                index: i / k.max(1),
                message: "non-finite predictor".into(),
            });
        }
        Ok(ProbitDesign {
            n,
            k,
            dense,
            group: vec![None; n],
            n_groups: 0,
            names,
            y,
        })
    }

    /// Adds one-hot group columns; `None` marks a reference-group row.
    pub fn with_groups(
        mut self,
        group: Vec<Option<usize>>,
        group_names: Vec<String>,
    ) -> Result<Self, PredictError> {
        if group.len() != self.n {
            return Err(PredictError::WidthMismatch {
                expected: self.n,
                found: group.len(),
            });
        }
        if let Some(i) = group.iter().position(|g| g.is_some_and(|g| g >= group_names.len())) {
            return Err(PredictError::InvalidRow {
                index: i,
                message: "group index out of range".into(),
            });
        }
        self.group = group;
        self.n_groups = group_names.len();
        self.names.extend(group_names);
        Ok(self)
    }

    /// Columns: language biases and deltas for the languages present,
    /// `c_first`, `c_pos`, then one dummy per non-reference participant.
    pub fn from_rows(rows: &[DesignRow]) -> Result<Self, PredictError> {
        if rows.is_empty() {
            return Err(PredictError::NoResponses);
        }
        for (index, r) in rows.iter().enumerate() {
            r.check().map_err(|message| PredictError::InvalidRow { index, message })?;
        }
        let has_fr = rows.iter().any(|r| r.i_fr == 1);
        let has_en = rows.iter().any(|r| r.i_en == 1);
        let mut names = Vec::new();
        if has_fr {
            names.push("b_fr");
        }
        if has_en {
            names.push("b_en");
        }
        if has_fr {
            names.push("w_fr");
        }
        if has_en {
            names.push("w_en");
        }
        names.extend(["c_first", "c_pos"]);
        let k = names.len();

        let mut dense = Vec::with_capacity(rows.len() * k);
        for r in rows {
            if has_fr {
                dense.push(r.i_fr as f64);
            }
            if has_en {
                dense.push(r.i_en as f64);
            }
            if has_fr {
                dense.push(r.delta_fr);
            }
            if has_en {
                dense.push(r.delta_en);
            }
            dense.push(r.correct_first as f64);
            dense.push(r.position);
        }

        // first participant (in sorted order) of each language is the reference
        let participants: BTreeSet<(Language, &str)> =
            rows.iter().map(|r| (r.language(), r.participant.as_str())).collect();
        let mut index: BTreeMap<&str, Option<usize>> = BTreeMap::new();
        let mut group_names = Vec::new();
        let mut seen = BTreeSet::new();
        for (lang, p) in participants {
            if seen.insert(lang) {
                index.insert(p, None);
            } else {
                index.insert(p, Some(group_names.len()));
                group_names.push(format!("participant[{p}]"));
            }
        }
        let group = rows.iter().map(|r| index[r.participant.as_str()]).collect();
        let y = rows.iter().map(|r| r.y).collect();
        ProbitDesign::new(dense, names.into_iter().map(String::from).collect(), y)?
            .with_groups(group, group_names)
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn n_columns(&self) -> usize {
        self.k + self.n_groups
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub(super) fn row(&self, i: usize) -> &[f64] {
        &self.dense[i * self.k..(i + 1) * self.k]
    }

    pub(super) fn eta(&self, beta: &[f64], i: usize) -> f64 {
        let mut eta: f64 = self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum();
        if let Some(g) = self.group[i] {
            eta += beta[self.k + g];
        }
        eta
    }

    /// Multiplies one dense column by `factor`.
    pub fn scale_column(&mut self, column: usize, factor: f64) {
        assert!(column < self.k, "only dense columns can be scaled");
        for i in 0..self.n {
            self.dense[i * self.k + column] *= factor;
        }
    }
}
