use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::design::{build_design, ModelDeltas};
use super::probit::fit_probit;
use super::PredictError;
use crate::corpus::{HumanResponse, Manifest};

pub const RESPONSES_PER_ITEM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Resample {
    pub responses: Vec<HumanResponse>,
    pub eligible_items: usize,
    /// Manifest items with fewer than three responses.
    pub excluded_items: usize,
}

/// Draws exactly three responses without replacement from every manifest
/// item that has at least three. Items are visited in triplet-id order and
/// the drawn responses keep their input order within an item.
pub fn resample_responses(responses: &[HumanResponse], triplets: &Manifest, seed: u64) -> Resample {
    let mut by_item: BTreeMap<&str, Vec<&HumanResponse>> =
        triplets.iter().map(|t| (t.triplet_id.as_str(), Vec::new())).collect();
    for r in responses {
        if let Some(v) = by_item.get_mut(r.triplet_id.as_str()) {
            v.push(r);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut eligible = 0;
    let mut excluded = 0;
    for pool in by_item.values() {
        if pool.len() < RESPONSES_PER_ITEM {
            excluded += 1;
            continue;
        }
        eligible += 1;
        let mut idx = rand::seq::index::sample(&mut rng, pool.len(), RESPONSES_PER_ITEM).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| pool[i].clone()));
    }
    if excluded > 0 {
        log::info!("resampling excludes {excluded} items with fewer than {RESPONSES_PER_ITEM} responses");
    }
    Resample {
        responses: out,
        eligible_items: eligible,
        excluded_items: excluded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub n_resamples: usize,
    pub seed: u64,
    pub ci_level: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            n_resamples: 1000,
            seed: 0,
            ci_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInterval {
    pub model_id: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Interval for `LL(model_a) - LL(model_b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairInterval {
    pub model_a: String,
    pub model_b: String,
    pub mean_diff: f64,
    pub lower: f64,
    pub upper: f64,
    /// Fraction of resamples where `model_a` has the higher LL.
    pub a_wins: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub model_ids: Vec<String>,
    /// `ll_samples[r][m]`: model `m` on resample `r`.
    #[serde(skip)]
    pub ll_samples: Vec<Vec<f64>>,
    pub n_resamples: usize,
    pub seed: u64,
    pub ci_level: f64,
    pub models: Vec<ModelInterval>,
    pub pairwise: Vec<PairInterval>,
    /// Responses per resample (three per eligible item).
    pub realized_n: usize,
    pub eligible_items: usize,
    pub excluded_items: usize,
}

impl BootstrapResult {
    pub fn mean_loglik(&self, model_id: &str) -> Option<f64> {
        self.models.iter().find(|m| m.model_id == model_id).map(|m| m.mean)
    }
}

/// Empirical percentile interval with linear interpolation between order
/// statistics.
pub fn percentile_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    (quantile(&v, alpha), quantile(&v, 1.0 - alpha))
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Refits every model on the same resampled response set, `n_resamples`
/// times with seeds `seed, seed + 1, ...`.
pub fn bootstrap_compare(
    models: &[ModelDeltas],
    responses: &[HumanResponse],
    triplets: &Manifest,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult, PredictError> {
    if models.is_empty() {
        return Err(PredictError::InvalidOption("no models to compare".into()));
    }
    if opts.n_resamples == 0 {
        return Err(PredictError::InvalidOption("n_resamples must be at least 1".into()));
    }
    if !(opts.ci_level > 0.0 && opts.ci_level < 1.0) {
        return Err(PredictError::InvalidOption(format!(
            "ci_level {} outside (0, 1)",
            opts.ci_level
        )));
    }
    if responses.is_empty() {
        return Err(PredictError::NoResponses);
    }

    // per resample: LLs, realized N, eligible and excluded item counts
    type Run = (Vec<f64>, usize, usize, usize);
    let runs: Vec<Result<Run, PredictError>> = (0..opts.n_resamples)
        .into_par_iter()
        .map(|index| {
            let rs = resample_responses(responses, triplets, opts.seed.wrapping_add(index as u64));
            let lls = models
                .iter()
                .map(|m| {
                    let annotate = |source| PredictError::Resample {
                        index,
                        model_id: m.model_id.clone(),
                        source: Box::new(source),
                    };
                    let rows = build_design(&rs.responses, &m.fr, &m.en, triplets).map_err(annotate)?;
                    let fit = fit_probit(&rows).map_err(annotate)?;
                    if !fit.converged {
                        return Err(annotate(PredictError::NonConvergence {
                            iterations: fit.iterations,
                        }));
                    }
                    Ok(fit.log_likelihood)
                })
                .collect::<Result<Vec<f64>, _>>()?;
            Ok((lls, rs.responses.len(), rs.eligible_items, rs.excluded_items))
        })
        .collect();

    let mut ll_samples = Vec::with_capacity(opts.n_resamples);
    let mut counts = (0, 0, 0);
    for run in runs {
        let (lls, n, eligible, excluded) = run?;
        ll_samples.push(lls);
        counts = (n, eligible, excluded);
    }

    let column = |m: usize| -> Vec<f64> { ll_samples.iter().map(|r| r[m]).collect() };
    let model_ids: Vec<String> = models.iter().map(|m| m.model_id.clone()).collect();
    let intervals = model_ids
        .iter()
        .enumerate()
        .map(|(m, id)| {
            let v = column(m);
            let (lower, upper) = percentile_interval(&v, opts.ci_level);
            ModelInterval {
                model_id: id.clone(),
                mean: mean(&v),
                lower,
                upper,
            }
        })
        .collect();
    let mut pairwise = Vec::new();
    for a in 0..models.len() {
        for b in a + 1..models.len() {
            let diff: Vec<f64> = ll_samples.iter().map(|r| r[a] - r[b]).collect();
            let (lower, upper) = percentile_interval(&diff, opts.ci_level);
            pairwise.push(PairInterval {
                model_a: model_ids[a].clone(),
                model_b: model_ids[b].clone(),
                mean_diff: mean(&diff),
                lower,
                upper,
                a_wins: diff.iter().filter(|d| **d > 0.0).count() as f64 / diff.len() as f64,
            });
        }
    }
    Ok(BootstrapResult {
        model_ids,
        ll_samples,
        n_resamples: opts.n_resamples,
        seed: opts.seed,
        ci_level: opts.ci_level,
        models: intervals,
        pairwise,
        realized_n: counts.0,
        eligible_items: counts.1,
        excluded_items: counts.2,
    })
}

/// `resample_index,model_id,log_likelihood`, one row per resample and model.
pub fn write_bootstrap_csv<W: Write>(result: &BootstrapResult, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["resample_index", "model_id", "log_likelihood"])?;
    for (r, row) in result.ll_samples.iter().enumerate() {
        for (id, ll) in result.model_ids.iter().zip(row) {
            w.write_record([r.to_string(), id.clone(), ll.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
