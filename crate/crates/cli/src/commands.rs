use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use abxeval::abx::{
    self, delta_map, evaluate_triplets, read_delta_table, reweighted_accuracy, write_accuracy_csv,
    write_delta_table, write_reweighted_csv,
};
use abxeval::corpus::{
    item_human_accuracy, load_feature_archive, load_responses, load_triplets_with, validate_dataset,
    ManifestOptions,
};
use abxeval::predict::{
    bootstrap_compare, build_design, f1_row, figure_f2, fit_probit, resample_responses,
    write_bootstrap_csv, write_f1_csv, write_f2_csv, BootstrapOptions, ModelDeltas, PredictError,
};
use abxeval::{DeltaRecord, Grouping, HumanResponse, Language, Manifest, RegressionFit};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ModelConfig, RunConfig};
use crate::{Failure, EXIT_MISMATCH};

/// The full manifest and the part the run is restricted to.
struct Scope {
    full: Manifest,
    items: Manifest,
}

fn load_scope(cfg: &RunConfig) -> Result<Scope, Failure> {
    let opts = ManifestOptions {
        strict_same_speaker: cfg.strict_same_speaker,
    };
    let full = load_triplets_with(&cfg.manifest, opts).map_err(Failure::data)?;
    let items = match &cfg.subset {
        None => full.clone(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            let ids: Vec<&str> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect();
            let items = full.subset(&ids).map_err(Failure::data)?;
            info!("subset keeps {} of {} triplets", items.len(), full.len());
            items
        }
    };
    Ok(Scope { full, items })
}

/// Responses restricted to the run's items.
fn load_scoped_responses(cfg: &RunConfig, scope: &Scope, why: &str) -> Result<Vec<HumanResponse>, Failure> {
    let path = cfg
        .responses
        .as_ref()
        .ok_or_else(|| Failure::config(format!("{why} needs `responses` in the config")))?;
    let all = load_responses(path, &scope.full).map_err(Failure::data)?;
    Ok(all
        .into_iter()
        .filter(|r| scope.items.contains(&r.triplet_id))
        .collect())
}

fn model_languages(model: &ModelConfig, items: &Manifest) -> Vec<Language> {
    items
        .languages()
        .into_iter()
        .filter(|&l| model.features_for(l).is_some())
        .collect()
}

/// The run's items in the languages a model covers.
fn model_items(model: &ModelConfig, items: &Manifest) -> Result<Manifest, Failure> {
    let langs = model_languages(model, items);
    let ids: Vec<&str> = items
        .iter()
        .filter(|t| langs.contains(&t.language))
        .map(|t| t.triplet_id.as_str())
        .collect();
    items.subset(&ids).map_err(Failure::data)
}

fn delta_path(out: &Path, model_id: &str, language: Language) -> PathBuf {
    out.join("deltas").join(format!("{model_id}.{language}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_with<E: std::fmt::Display>(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
) -> Result<(), Failure> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    w.flush().map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(serde_json::Error::io)
    })
}

/// Deltas of the run's items for the languages the model covers.
fn read_model_deltas(cfg: &RunConfig, model: &ModelConfig, items: &Manifest) -> Result<Vec<DeltaRecord>, Failure> {
    let mut out = Vec::new();
    for lang in model_languages(model, items) {
        let path = delta_path(&cfg.out, &model.id, lang);
        let file = File::open(&path).map_err(|e| {
            Failure::data(format!("{}: {e} (run `abxeval eval` first)", path.display()))
        })?;
        let records = read_delta_table(file, &path.display().to_string()).map_err(Failure::data)?;
        out.extend(records.into_iter().filter(|d| items.contains(&d.triplet_id)));
    }
    Ok(out)
}

pub fn eval(cfg: &RunConfig) -> Result<(), Failure> {
    let scope = load_scope(cfg)?;
    for model in &cfg.models {
        let mut loaded: Option<(PathBuf, abxeval::FeatureArchive)> = None;
        for lang in scope.items.languages() {
            let Some(path) = model.features_for(lang) else {
                warn!("model '{}' has no {lang} features; {lang} items not scored", model.id);
                continue;
            };
            if loaded.as_ref().map(|(p, _)| p.as_path()) != Some(path) {
                let t = Instant::now();
                let archive = load_feature_archive(path).map_err(Failure::data)?;
                info!(
                    "model '{}': loaded {} utterances (dim {}) from {} in {:.2}s",
                    model.id,
                    archive.len(),
                    archive.dim(),
                    path.display(),
                    t.elapsed().as_secs_f64()
                );
                loaded = Some((path.to_path_buf(), archive));
            }
            let archive = &loaded.as_ref().expect("loaded above").1;
            let items: Vec<_> = scope.items.of_language(lang).collect();
            let t = Instant::now();
            let deltas = evaluate_triplets(items, archive, &model.metric, &model.id)
                .map_err(|e| Failure::data(format!("model '{}': {e}", model.id)))?;
            info!(
                "model '{}' {lang}: {} triplets scored in {:.2}s",
                model.id,
                deltas.len(),
                t.elapsed().as_secs_f64()
            );
            write_with(&delta_path(&cfg.out, &model.id, lang), |w| write_delta_table(&deltas, w))?;
        }
    }
    Ok(())
}

fn accuracy_path(out: &Path, model_id: &str, scope: &str) -> PathBuf {
    out.join("accuracy").join(format!("{model_id}.{scope}.csv"))
}

pub fn accuracy(cfg: &RunConfig, reweighted: bool) -> Result<(), Failure> {
    let scope = load_scope(cfg)?;
    let hum = if reweighted {
        let responses = load_scoped_responses(cfg, &scope, "reweighted accuracy (or pass --skip-reweighted)")?;
        Some(item_human_accuracy(&responses).map_err(Failure::data)?)
    } else {
        None
    };
    for model in &cfg.models {
        let items = model_items(model, &scope.items)?;
        let deltas = read_model_deltas(cfg, model, &items)?;
        let err = |e: abx::AbxError| Failure::data(format!("model '{}': {e}", model.id));
        for grouping in [Grouping::Global, Grouping::ByContrast] {
            let report = abx::accuracy(&deltas, grouping, &items).map_err(err)?;
            write_with(&accuracy_path(&cfg.out, &model.id, grouping.as_str()), |w| {
                write_accuracy_csv(&report, w)
            })?;
            if grouping == Grouping::Global {
                for row in &report.rows {
                    info!("model '{}' {}: accuracy {:.4}", model.id, row.language, row.accuracy());
                }
            }
        }
        if let Some(hum) = &hum {
            let rows = reweighted_accuracy(&deltas, hum).map_err(err)?;
            write_with(&accuracy_path(&cfg.out, &model.id, "reweighted"), |w| {
                write_reweighted_csv(&rows, w)
            })?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Coefficient<'a> {
    name: &'a str,
    value: f64,
    std_error: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    model_id: &'a str,
    n_obs: usize,
    log_likelihood: f64,
    converged: bool,
    iterations: usize,
    separation: bool,
    coefficients: Vec<Coefficient<'a>>,
}

impl<'a> FitReport<'a> {
    fn new(model_id: &'a str, fit: &'a RegressionFit) -> Self {
        FitReport {
            model_id,
            n_obs: fit.n_obs,
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            iterations: fit.iterations,
            separation: fit.separation,
            coefficients: fit
                .coefficient_names
                .iter()
                .zip(&fit.coefficients)
                .zip(&fit.std_errors)
                .map(|((name, &value), &std_error)| Coefficient { name, value, std_error })
                .collect(),
        }
    }
}

fn model_delta_maps(model: &ModelConfig, deltas: &[DeltaRecord]) -> ModelDeltas {
    if model.shared_delta {
        return ModelDeltas::shared(&model.id, delta_map(deltas));
    }
    let of = |lang: Language| -> BTreeMap<String, f64> {
        deltas
            .iter()
            .filter(|d| d.language == lang)
            .map(|d| (d.triplet_id.clone(), d.delta))
            .collect()
    };
    ModelDeltas::new(&model.id, of(Language::Fr), of(Language::En))
}

pub fn fit(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.models.is_empty() {
        return Err(Failure::config("no [[model]] entries in the config"));
    }
    let scope = load_scope(cfg)?;
    let responses = load_scoped_responses(cfg, &scope, "fit")?;

    let mut deltas = Vec::with_capacity(cfg.models.len());
    let mut maps = Vec::with_capacity(cfg.models.len());
    for model in &cfg.models {
        let items = model_items(model, &scope.items)?;
        let d = read_model_deltas(cfg, model, &items)?;
        maps.push(model_delta_maps(model, &d));
        deltas.push((items, d));
    }

    let fits: Vec<Result<RegressionFit, Failure>> = maps
        .par_iter()
        .map(|m| {
            let err = |e: PredictError| Failure::data(format!("model '{}': {e}", m.model_id));
            let rows = build_design(&responses, &m.fr, &m.en, &scope.items).map_err(err)?;
            let fit = fit_probit(&rows).map_err(err)?;
            if !fit.converged {
                return Err(err(PredictError::NonConvergence {
                    iterations: fit.iterations,
                }));
            }
            Ok(fit)
        })
        .collect();
    for (m, fit) in maps.iter().zip(fits) {
        let fit = fit?;
        info!(
            "model '{}': log-likelihood {:.4} on {} responses ({} iterations)",
            m.model_id, fit.log_likelihood, fit.n_obs, fit.iterations
        );
        write_json(
            &cfg.out.join("fit").join(format!("{}.json", m.model_id)),
            &FitReport::new(&m.model_id, &fit),
        )?;
    }

    let t = Instant::now();
    let opts = BootstrapOptions {
        n_resamples: cfg.n_resamples,
        seed: cfg.seed,
        ci_level: cfg.ci,
    };
    let boot = bootstrap_compare(&maps, &responses, &scope.items, &opts).map_err(Failure::data)?;
    info!(
        "bootstrap: {} resamples in {:.2}s; realized N = {} ({} eligible items, {} excluded)",
        boot.n_resamples,
        t.elapsed().as_secs_f64(),
        boot.realized_n,
        boot.eligible_items,
        boot.excluded_items
    );
    write_with(&cfg.out.join("bootstrap").join("loglik.csv"), |w| write_bootstrap_csv(&boot, w))?;
    write_json(&cfg.out.join("bootstrap").join("summary.json"), &boot)?;

    let mut f1 = Vec::with_capacity(cfg.models.len());
    for (model, (items, d)) in cfg.models.iter().zip(&deltas) {
        let global = abx::accuracy(d, Grouping::Global, items)
            .map_err(|e| Failure::data(format!("model '{}': {e}", model.id)))?;
        let mean_ll = boot.mean_loglik(&model.id).expect("every model is bootstrapped");
        f1.push(f1_row(&model.id, &global, mean_ll));
        match figure_f2(d, &responses, items) {
            Ok(rows) => write_with(
                &cfg.out.join("figures").join(&model.id).join("f2.csv"),
                |w| write_f2_csv(&rows, w),
            )?,
            Err(e @ PredictError::DegenerateNormalization(_)) => {
                warn!("model '{}': f2.csv not written: {e}", model.id)
            }
            Err(e) => return Err(Failure::data(format!("model '{}': {e}", model.id))),
        }
    }
    write_with(&cfg.out.join("figures").join("f1.csv"), |w| write_f1_csv(&f1, w))
}

pub fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    let scope = load_scope(cfg)?;
    let responses = if cfg.responses.is_some() {
        load_scoped_responses(cfg, &scope, "validate")?
    } else {
        Vec::new()
    };
    let report = validate_dataset(&scope.items, &responses, cfg.expected.as_ref());
    print!("{report}");
    if !responses.is_empty() {
        let ids: HashSet<&str> = responses.iter().map(|r| r.triplet_id.as_str()).collect();
        let rs = resample_responses(&responses, &scope.items, cfg.seed);
        println!(
            "resampling: {} eligible items, realized N = {} ({} items excluded, {} items with responses)",
            rs.eligible_items,
            rs.responses.len(),
            rs.excluded_items,
            ids.len()
        );
    }
    if cfg.expected.is_none() {
        println!("no expected counts configured");
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .failures()
            .map(|c| format!("{} {} vs expected {}", c.name, c.actual, c.expected))
            .collect();
        Err(Failure {
            code: EXIT_MISMATCH,
            message: format!("validation mismatch: {}", failed.join(", ")),
        })
    }
}
