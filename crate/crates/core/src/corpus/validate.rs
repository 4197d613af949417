use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{HumanResponse, Language, Manifest};
use crate::abx::ContrastKey;

/// Dataset counts to check a manifest against. Unset fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCounts {
    pub triplets: Option<usize>,
    pub triplets_en: Option<usize>,
    pub triplets_fr: Option<usize>,
    pub contrasts: Option<usize>,
    pub contrasts_en: Option<usize>,
    pub contrasts_fr: Option<usize>,
    pub contexts: Option<usize>,
    pub contexts_en: Option<usize>,
    pub contexts_fr: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LanguageCounts {
    pub triplets: usize,
    /// Distinct unordered centre-phone pairs.
    pub contrasts: usize,
    /// Distinct (previous, next) flanking-phone pairs.
    pub contexts: usize,
    pub responses: usize,
    /// Histogram: number of responses -> number of items with that many.
    pub responses_per_triplet: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountCheck {
    pub name: String,
    pub expected: usize,
    pub actual: usize,
}

impl CountCheck {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub total_triplets: usize,
    pub per_language: BTreeMap<Language, LanguageCounts>,
    pub checks: Vec<CountCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CountCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CountCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    fn count(&self, lang: Option<Language>, f: impl Fn(&LanguageCounts) -> usize) -> usize {
        match lang {
            Some(l) => self.per_language.get(&l).map(&f).unwrap_or(0),
            None => self.per_language.values().map(f).sum(),
        }
    }
}

pub fn validate_dataset(
    triplets: &Manifest,
    responses: &[HumanResponse],
    expected: Option<&ExpectedCounts>,
) -> ValidationReport {
    let mut contrasts: BTreeMap<Language, BTreeSet<ContrastKey>> = BTreeMap::new();
    let mut contexts: BTreeMap<Language, BTreeSet<(&str, &str)>> = BTreeMap::new();
    let mut per_language: BTreeMap<Language, LanguageCounts> = BTreeMap::new();
    for t in triplets {
        per_language.entry(t.language).or_default().triplets += 1;
        contrasts
            .entry(t.language)
            .or_default()
            .insert(ContrastKey::new(t.language, &t.phone_a, &t.phone_b));
        contexts.entry(t.language).or_default().insert(t.context());
    }

    let mut per_item: BTreeMap<&str, usize> = triplets.iter().map(|t| (t.triplet_id.as_str(), 0)).collect();
    for r in responses {
        if let Some(n) = per_item.get_mut(r.triplet_id.as_str()) {
            *n += 1;
        }
        per_language.entry(r.language).or_default().responses += 1;
    }
    for t in triplets {
        let n = per_item[t.triplet_id.as_str()];
        *per_language
            .entry(t.language)
            .or_default()
            .responses_per_triplet
            .entry(n)
            .or_default() += 1;
    }
    for (lang, counts) in per_language.iter_mut() {
        counts.contrasts = contrasts.get(lang).map_or(0, BTreeSet::len);
        counts.contexts = contexts.get(lang).map_or(0, BTreeSet::len);
    }

    let mut report = ValidationReport {
        total_triplets: triplets.len(),
        per_language,
        checks: Vec::new(),
    };
    if let Some(exp) = expected {
        let (en, fr) = (Some(Language::En), Some(Language::Fr));
        let wanted: [(&str, Option<usize>, usize); 9] = [
            ("triplets", exp.triplets, report.total_triplets),
            ("triplets_en", exp.triplets_en, report.count(en, |c| c.triplets)),
            ("triplets_fr", exp.triplets_fr, report.count(fr, |c| c.triplets)),
            ("contrasts", exp.contrasts, report.count(None, |c| c.contrasts)),
            ("contrasts_en", exp.contrasts_en, report.count(en, |c| c.contrasts)),
            ("contrasts_fr", exp.contrasts_fr, report.count(fr, |c| c.contrasts)),
            ("contexts", exp.contexts, report.count(None, |c| c.contexts)),
            ("contexts_en", exp.contexts_en, report.count(en, |c| c.contexts)),
            ("contexts_fr", exp.contexts_fr, report.count(fr, |c| c.contexts)),
        ];
        report.checks = wanted
            .into_iter()
            .filter_map(|(name, exp, actual)| {
                exp.map(|expected| CountCheck {
                    name: name.to_string(),
                    expected,
                    actual,
                })
            })
            .collect();
    }
    report
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} triplets", self.total_triplets)?;
        for (lang, c) in &self.per_language {
            writeln!(
                f,
                "  {lang}: {} triplets, {} contrasts, {} contexts, {} responses",
                c.triplets, c.contrasts, c.contexts, c.responses
            )?;
            let hist: Vec<String> = c
                .responses_per_triplet
                .iter()
                .map(|(n, items)| format!("{n}x{items}"))
                .collect();
            writeln!(f, "  {lang}: responses per triplet (count x items): {}", hist.join(" "))?;
        }
        for check in &self.checks {
            let status = if check.passed() { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "[{status}] {}: {} (expected {})",
                check.name, check.actual, check.expected
            )?;
        }
        Ok(())
    }
}
