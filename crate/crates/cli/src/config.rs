//! Run configuration: a TOML file plus command-line overrides.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use abxeval::corpus::ExpectedCounts;
use abxeval::{FrameMetric, Language, MetricKind};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    manifest: PathBuf,
    responses: Option<PathBuf>,
    out: Option<PathBuf>,
    metric: Option<String>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    n_resamples: Option<usize>,
    ci: Option<f64>,
    workers: Option<usize>,
    subset: Option<PathBuf>,
    #[serde(default)]
    strict_same_speaker: bool,
    #[serde(default, rename = "model")]
    models: Vec<ModelFile>,
    expected: Option<ExpectedCounts>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    id: String,
    en: Option<PathBuf>,
    fr: Option<PathBuf>,
    shared: Option<PathBuf>,
    metric: Option<String>,
    epsilon: Option<f64>,
    #[serde(default)]
    shared_delta: bool,
}

/// Flags that override config values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub metric: Option<MetricKind>,
    pub epsilon: Option<f64>,
    pub subset: Option<PathBuf>,
    pub n_resamples: Option<usize>,
    pub ci: Option<f64>,
    pub shared_delta: Vec<String>,
}

/// Where a model's features come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    PerLanguage { en: Option<PathBuf>, fr: Option<PathBuf> },
    /// One archive covering the stimuli of both languages.
    Shared(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub id: String,
    pub features: FeatureSource,
    pub metric: FrameMetric,
    /// Fit with one delta map for both languages.
    pub shared_delta: bool,
}

impl ModelConfig {
    pub fn features_for(&self, language: Language) -> Option<&Path> {
        match &self.features {
            FeatureSource::Shared(p) => Some(p),
            FeatureSource::PerLanguage { en, fr } => match language {
                Language::En => en.as_deref(),
                Language::Fr => fr.as_deref(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub responses: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub n_resamples: usize,
    pub ci: f64,
    /// 0 means all available cores.
    pub workers: usize,
    pub subset: Option<PathBuf>,
    pub strict_same_speaker: bool,
    pub models: Vec<ModelConfig>,
    pub expected: Option<ExpectedCounts>,
}

fn config_err(path: &Path, message: impl std::fmt::Display) -> Failure {
    Failure::config(format!("{}: {message}", path.display()))
}

pub fn load(path: &Path, flags: &Overrides) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(path, e))?;
    parse(&text, path, flags)
}

/// Relative paths are taken relative to the config file's directory.
pub fn parse(text: &str, path: &Path, flags: &Overrides) -> Result<RunConfig, Failure> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| config_err(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

    let metric_kind = |s: Option<String>| -> Result<Option<MetricKind>, Failure> {
        s.map(|s| s.parse::<MetricKind>().map_err(|e| config_err(path, e)))
            .transpose()
    };
    let default_kind = flags
        .metric
        .or(metric_kind(file.metric)?)
        .unwrap_or(MetricKind::Angular);
    let default_eps = flags.epsilon.or(file.epsilon).unwrap_or(abxeval::metrics::DEFAULT_EPSILON);

    let mut ids = BTreeSet::new();
    let mut models = Vec::with_capacity(file.models.len());
    for m in file.models {
        if m.id.is_empty() || !m.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(config_err(
                path,
                format!("model id '{}' must be non-empty and use only [A-Za-z0-9._-]", m.id),
            ));
        }
        if !ids.insert(m.id.clone()) {
            return Err(config_err(path, format!("duplicate model id '{}'", m.id)));
        }
        let features = match (m.shared, m.en, m.fr) {
            (Some(s), None, None) => FeatureSource::Shared(resolve(s)),
            (Some(_), _, _) => {
                return Err(config_err(
                    path,
                    format!("model '{}': `shared` excludes `en`/`fr`", m.id),
                ))
            }
            (None, None, None) => {
                return Err(config_err(path, format!("model '{}' has no feature paths", m.id)))
            }
            (None, en, fr) => FeatureSource::PerLanguage {
                en: en.map(resolve),
                fr: fr.map(resolve),
            },
        };
        // a flag sets the metric for every model
        let kind = match flags.metric {
            Some(k) => k,
            None => metric_kind(m.metric)?.unwrap_or(default_kind),
        };
        let epsilon = flags.epsilon.or(m.epsilon).unwrap_or(default_eps);
        let metric = FrameMetric::new(kind, epsilon);
        if kind == MetricKind::SymmetricKl && !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(config_err(path, format!("model '{}': epsilon {epsilon} outside (0, 1)", m.id)));
        }
        models.push(ModelConfig {
            id: m.id,
            features,
            metric,
            shared_delta: m.shared_delta,
        });
    }
    for id in &flags.shared_delta {
        let m = models
            .iter_mut()
            .find(|m| &m.id == id)
            .ok_or_else(|| Failure::config(format!("--shared-delta: unknown model '{id}'")))?;
        m.shared_delta = true;
    }

    let cfg = RunConfig {
        manifest: resolve(file.manifest),
        responses: file.responses.map(resolve),
        out: flags
            .out
            .clone()
            .unwrap_or_else(|| file.out.map(resolve).unwrap_or_else(|| base.join("out"))),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        n_resamples: flags.n_resamples.or(file.n_resamples).unwrap_or(1000),
        ci: flags.ci.or(file.ci).unwrap_or(0.95),
        workers: flags.workers.or(file.workers).unwrap_or(0),
        subset: flags.subset.clone().or(file.subset.map(resolve)),
        strict_same_speaker: file.strict_same_speaker,
        models,
        expected: file.expected,
    };
    if cfg.n_resamples == 0 {
        return Err(config_err(path, "n_resamples must be at least 1"));
    }
    if !(cfg.ci > 0.0 && cfg.ci < 1.0) {
        return Err(config_err(path, format!("ci {} outside (0, 1)", cfg.ci)));
    }
    cfg.check_paths()?;
    Ok(cfg)
}

impl RunConfig {
    fn check_paths(&self) -> Result<(), Failure> {
        let mut paths: Vec<(&str, &Path)> = vec![("manifest", &self.manifest)];
        if let Some(r) = &self.responses {
            paths.push(("responses", r));
        }
        if let Some(s) = &self.subset {
            paths.push(("subset", s));
        }
        for m in &self.models {
            match &m.features {
                FeatureSource::Shared(p) => paths.push(("features", p)),
                FeatureSource::PerLanguage { en, fr } => {
                    paths.extend(en.iter().chain(fr).map(|p| ("features", p.as_path())))
                }
            }
        }
        for (what, p) in paths {
            if !p.exists() {
                return Err(Failure::config(format!("{what} path {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
