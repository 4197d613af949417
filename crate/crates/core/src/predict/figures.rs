use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::design::sample_std;
use super::PredictError;
use crate::abx::{AccuracyReport, ContrastKey, DeltaRecord};
use crate::corpus::{HumanResponse, Language, Manifest};
use crate::fmt::format_sig;

pub const F1_HEADER: [&str; 3] = ["model_id", "mean_accuracy", "mean_loglik"];
pub const F2_HEADER: [&str; 5] = ["language", "phone_1", "phone_2", "human_score_norm", "delta_norm"];

const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Row {
    pub model_id: String,
    /// Unweighted mean of the per-language global accuracies.
    pub mean_accuracy: f64,
    pub mean_loglik: f64,
}

/// Per-contrast averages, each column divided by its sample standard
/// deviation over all rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F2Row {
    pub contrast: ContrastKey,
    pub human_score_norm: f64,
    pub delta_norm: f64,
}

pub fn f1_row(model_id: &str, global: &AccuracyReport, mean_loglik: f64) -> F1Row {
    let accs: Vec<f64> = Language::ALL
        .iter()
        .filter_map(|&l| global.row(l).map(|r| r.accuracy()))
        .collect();
    F1Row {
        model_id: model_id.to_string(),
        mean_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
        mean_loglik,
    }
}

/// Mean gradient score over a contrast's responses and mean delta over its
/// scored items.
pub fn figure_f2(
    deltas: &[DeltaRecord],
    responses: &[HumanResponse],
    triplets: &Manifest,
) -> Result<Vec<F2Row>, PredictError> {
    let mut human: BTreeMap<ContrastKey, (f64, usize)> = BTreeMap::new();
    for r in responses {
        let item = triplets
            .get(&r.triplet_id)
            .ok_or_else(|| PredictError::UnknownTriplet(r.triplet_id.clone()))?;
        let e = human.entry(ContrastKey::of(item)).or_default();
        e.0 += f64::from(r.gradient());
        e.1 += 1;
    }
    let mut machine: BTreeMap<ContrastKey, (f64, usize)> = BTreeMap::new();
    for d in deltas {
        let item = triplets
            .get(&d.triplet_id)
            .ok_or_else(|| PredictError::UnknownTriplet(d.triplet_id.clone()))?;
        let e = machine.entry(ContrastKey::of(item)).or_default();
        e.0 += d.delta;
        e.1 += 1;
    }
    let keys: Vec<ContrastKey> = human.keys().filter(|k| machine.contains_key(*k)).cloned().collect();
    let h: Vec<f64> = keys.iter().map(|k| human[k].0 / human[k].1 as f64).collect();
    let m: Vec<f64> = keys.iter().map(|k| machine[k].0 / machine[k].1 as f64).collect();
    let sd_h = nonzero_std(&h, "human scores")?;
    let sd_m = nonzero_std(&m, "deltas")?;
    Ok(keys
        .into_iter()
        .zip(h.into_iter().zip(m))
        .map(|(contrast, (h, m))| F2Row {
            contrast,
            human_score_norm: h / sd_h,
            delta_norm: m / sd_m,
        })
        .collect())
}

fn nonzero_std(values: &[f64], what: &'static str) -> Result<f64, PredictError> {
    match sample_std(values) {
        Some(sd) if sd > 0.0 && sd.is_finite() => Ok(sd),
        _ => Err(PredictError::DegenerateNormalization(what)),
    }
}

pub fn write_f1_csv<W: Write>(rows: &[F1Row], writer: W) -> csv::Result<()> {
    let mut sorted: Vec<&F1Row> = rows.iter().collect();
    sorted.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(F1_HEADER)?;
    for r in sorted {
        w.write_record([
            r.model_id.clone(),
            format_sig(r.mean_accuracy, SIG_DIGITS),
            format_sig(r.mean_loglik, SIG_DIGITS),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_f2_csv<W: Write>(rows: &[F2Row], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(F2_HEADER)?;
    for r in rows {
        let (p, q) = r.contrast.phones();
        w.write_record([
            r.contrast.language.as_str(),
            p,
            q,
            &format_sig(r.human_score_norm, SIG_DIGITS),
            &format_sig(r.delta_norm, SIG_DIGITS),
        ])?;
    }
    w.flush()?;
    Ok(())
}
