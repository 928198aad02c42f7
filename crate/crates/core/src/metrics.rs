//! Recall, coverage and cosine similarity between a profile and a later window.
//!
//! Recall and coverage compare item *sets*; cosine compares token *frequency*
//! vectors indexed over the union of profile and window items, with a zero for
//! any item absent on one side. Zero denominators give `None`, never 0 or 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::ProfileCategory;
use crate::ingest::{Span, TokenWindow};
use crate::profile::{self, CategoryCounts, Extraction, LexicalProfile, NgramCounts, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("evaluation window [{window_start}, ..) starts before the construction span ends at {construction_end}")]
    SpanOverlap { window_start: f64, construction_end: f64 },
    #[error("lemmatised matching needs lemmas, but `{item}` has none")]
    MissingLemmas { item: String },
    #[error("evaluation window was extracted with different settings than the profile")]
    ExtractionMismatch,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    Lemmatised,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Exact => "exact",
            MatchMode::Lemmatised => "lemmatised",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MatchMode::Exact),
            "lemmatised" | "lemmatized" => Ok(MatchMode::Lemmatised),
            _ => Err(format!("unknown match mode `{s}`")),
        }
    }
}

/// What a metric record is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Category(ProfileCategory),
    Ngram(usize),
    Aggregate,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Category(c) => write!(f, "{c}"),
            Scope::Ngram(n) => write!(f, "ngram{n}"),
            Scope::Aggregate => f.write_str("AGGREGATE"),
        }
    }
}

/// How per-scope values combine into the aggregate record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Plain mean over scopes with a defined value.
    #[default]
    Unweighted,
    /// Recall weighted by profile-set size, coverage by window-set size,
    /// cosine by window token mass.
    FrequencyWeighted,
}

/// Scopes left out of the aggregate because their value was undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MissingTally {
    pub recall: usize,
    pub coverage: usize,
    pub cosine: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub window_index: usize,
    pub scope: Scope,
    pub mode: MatchMode,
    pub recall: Option<f64>,
    pub coverage: Option<f64>,
    pub cosine: Option<f64>,
    pub missing: MissingTally,
}

/// Window counts keyed the way one match mode compares them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCounts {
    pub items: BTreeMap<ProfileCategory, BTreeMap<String, usize>>,
    pub ngrams: BTreeMap<usize, BTreeMap<Vec<String>, usize>>,
}

/// Item and n-gram counts of a later time span, with no thresholds applied.
#[derive(Debug, Clone)]
pub struct EvaluationWindow {
    pub index: usize,
    pub span: Span,
    /// No interviewee tokens fell in the span.
    pub empty: bool,
    pub items: CategoryCounts,
    pub ngrams: NgramCounts,
    pub extraction: Extraction,
    exact: ProjectedCounts,
    lemmatised: OnceLock<Result<ProjectedCounts, MetricsError>>,
}

impl EvaluationWindow {
    pub fn from_tokens(index: usize, window: &TokenWindow, extraction: Extraction) -> EvaluationWindow {
        // Untagged windows still contribute n-grams; their vocabulary is simply empty.
        let items = profile::count_vocabulary(window, extraction.mapping).unwrap_or_else(|_| {
            ProfileCategory::ALL.iter().map(|&c| (c, BTreeMap::new())).collect()
        });
        let ngrams = profile::count_ngrams(window, extraction.ngram_n_range, extraction.marker_policy);
        let exact = project_window(&items, &ngrams, MatchMode::Exact).expect("exact keys always exist");
        EvaluationWindow {
            index,
            span: window.span,
            empty: window.is_empty(),
            items,
            ngrams,
            extraction,
            exact,
            lemmatised: OnceLock::new(),
        }
    }

    /// Counts keyed for `mode`; lemmatised keys need a lemma on every item.
    pub fn projected(&self, mode: MatchMode) -> Result<&ProjectedCounts, MetricsError> {
        match mode {
            MatchMode::Exact => Ok(&self.exact),
            MatchMode::Lemmatised => self
                .lemmatised
                .get_or_init(|| project_window(&self.items, &self.ngrams, MatchMode::Lemmatised))
                .as_ref()
                .map_err(Clone::clone),
        }
    }
}

impl PartialEq for EvaluationWindow {
    // The projections are derived from the counts.
    fn eq(&self, other: &Self) -> bool {
        (self.index, self.span, self.empty, &self.items, &self.ngrams, self.extraction)
            == (other.index, other.span, other.empty, &other.items, &other.ngrams, other.extraction)
    }
}

fn project_window(items: &CategoryCounts, ngrams: &NgramCounts, mode: MatchMode) -> Result<ProjectedCounts, MetricsError> {
    let items = items
        .iter()
        .map(|(&c, table)| {
            let projected = project_items(
                table.iter().map(|(k, t)| ProjectedItem { exact: k, lemma: t.lemma.as_deref().map(fold_lemma), count: t.tally.count }),
                mode,
            )?;
            Ok((c, projected))
        })
        .collect::<Result<_, MetricsError>>()?;
    let ngrams = ngrams
        .iter()
        .map(|(&n, table)| {
            let projected = project_items(
                table.iter().map(|(k, t)| ProjectedItem { exact: k, lemma: t.lemmas.as_deref().map(fold_lemmas), count: t.tally.count }),
                mode,
            )?;
            Ok((n, projected))
        })
        .collect::<Result<_, MetricsError>>()?;
    Ok(ProjectedCounts { items, ngrams })
}

/// |P ∩ E| / |P|.
pub fn recall<K: Ord>(p: &BTreeSet<K>, e: &BTreeSet<K>) -> Option<f64> {
    if p.is_empty() {
        return None;
    }
    Some(p.intersection(e).count() as f64 / p.len() as f64)
}

/// |P ∩ E| / |E|.
pub fn coverage<K: Ord>(p: &BTreeSet<K>, e: &BTreeSet<K>) -> Option<f64> {
    if e.is_empty() {
        return None;
    }
    Some(p.intersection(e).count() as f64 / e.len() as f64)
}

/// Cosine similarity of two sparse non-negative frequency vectors.
pub fn cosine<K: Ord>(p: &BTreeMap<K, f64>, e: &BTreeMap<K, f64>) -> Option<f64> {
    cosine_by(p, e, |&v| v)
}

fn cosine_by<K: Ord, V>(p: &BTreeMap<K, V>, e: &BTreeMap<K, V>, value: impl Fn(&V) -> f64) -> Option<f64> {
    let norm_p = p.values().map(|v| value(v) * value(v)).sum::<f64>().sqrt();
    let norm_e = e.values().map(|v| value(v) * value(v)).sum::<f64>().sqrt();
    if norm_p == 0.0 || norm_e == 0.0 {
        return None;
    }
    let dot: f64 = p.iter().filter_map(|(k, pv)| e.get(k).map(|ev| value(pv) * value(ev))).sum();
    Some((dot / (norm_p * norm_e)).clamp(0.0, 1.0))
}

/// One item to project: its exact key, its lemma key if known, and its count.
pub struct ProjectedItem<'a, K> {
    pub exact: &'a K,
    pub lemma: Option<K>,
    pub count: usize,
}

/// Keys items by case-folded surface (exact) or case-folded lemma (lemmatised),
/// summing counts of items that share a key.
pub fn project_items<'a, K, I>(items: I, mode: MatchMode) -> Result<BTreeMap<K, usize>, MetricsError>
where
    K: Ord + Clone + fmt::Debug + 'a,
    I: IntoIterator<Item = ProjectedItem<'a, K>>,
{
    let mut out = BTreeMap::new();
    for item in items {
        let key = match mode {
            MatchMode::Exact => item.exact.clone(),
            MatchMode::Lemmatised => item.lemma.ok_or_else(|| MetricsError::MissingLemmas { item: format!("{:?}", item.exact) })?,
        };
        *out.entry(key).or_insert(0) += item.count;
    }
    Ok(out)
}

fn fold_lemma(l: &str) -> String {
    l.to_lowercase()
}

fn fold_lemmas(ls: &[String]) -> Vec<String> {
    ls.iter().map(|l| fold_lemma(l)).collect()
}

struct ScopeValues {
    recall: Option<f64>,
    coverage: Option<f64>,
    cosine: Option<f64>,
    profile_size: usize,
    window_size: usize,
    window_mass: usize,
}

/// Same quantities as [`recall`], [`coverage`] and [`cosine`], read straight off the count maps.
fn score<K: Ord>(p: &BTreeMap<K, usize>, e: &BTreeMap<K, usize>, with_cosine: bool) -> ScopeValues {
    let hits = p.keys().filter(|k| e.contains_key(*k)).count();
    ScopeValues {
        recall: (!p.is_empty()).then(|| hits as f64 / p.len() as f64),
        coverage: (!e.is_empty()).then(|| hits as f64 / e.len() as f64),
        cosine: if with_cosine { cosine_by(p, e, |&c| c as f64) } else { None },
        profile_size: p.len(),
        window_size: e.len(),
        window_mass: e.values().sum(),
    }
}

pub fn evaluate_profile(p: &LexicalProfile, w: &EvaluationWindow, mode: MatchMode) -> Result<Vec<MetricRecord>, MetricsError> {
    evaluate_profile_with(p, w, mode, Aggregation::Unweighted)
}

/// One record per category, one per n-gram order, then the aggregate.
pub fn evaluate_profile_with(
    p: &LexicalProfile,
    w: &EvaluationWindow,
    mode: MatchMode,
    aggregation: Aggregation,
) -> Result<Vec<MetricRecord>, MetricsError> {
    if w.span.start_s < p.construction_span.end_s {
        return Err(MetricsError::SpanOverlap { window_start: w.span.start_s, construction_end: p.construction_span.end_s });
    }
    if w.extraction != p.config.extraction() {
        return Err(MetricsError::ExtractionMismatch);
    }

    let window = w.projected(mode)?;
    let mut scored: Vec<(Scope, ScopeValues)> = Vec::new();
    for category in ProfileCategory::ALL {
        let entries = p.vocab.get(&category).map(Vec::as_slice).unwrap_or_default();
        let prof = project_items(
            entries.iter().map(|e| ProjectedItem { exact: &e.surface, lemma: e.lemma.as_deref().map(fold_lemma), count: e.count }),
            mode,
        )?;
        let empty = BTreeMap::new();
        scored.push((Scope::Category(category), score(&prof, window.items.get(&category).unwrap_or(&empty), true)));
    }
    for n in p.config.ngram_n_range.orders() {
        let entries = p.ngrams.get(&n).map(Vec::as_slice).unwrap_or_default();
        let prof = project_items(
            entries.iter().map(|e| ProjectedItem { exact: &e.tokens, lemma: e.lemmas.as_deref().map(fold_lemmas), count: e.count }),
            mode,
        )?;
        let empty = BTreeMap::new();
        scored.push((Scope::Ngram(n), score(&prof, window.ngrams.get(&n).unwrap_or(&empty), false)));
    }

    let mut records: Vec<MetricRecord> = scored
        .iter()
        .map(|(scope, v)| MetricRecord {
            window_index: w.index,
            scope: *scope,
            mode,
            recall: v.recall,
            coverage: v.coverage,
            cosine: v.cosine,
            missing: MissingTally::default(),
        })
        .collect();
    records.push(aggregate_scopes(&scored, w.index, mode, aggregation));
    Ok(records)
}

fn weighted_mean(values: impl Iterator<Item = (Option<f64>, f64)>, missing: &mut usize) -> Option<f64> {
    let (mut sum, mut weight) = (0.0, 0.0);
    for (v, wgt) in values {
        match v {
            Some(v) => {
                sum += v * wgt;
                weight += wgt;
            }
            None => *missing += 1,
        }
    }
    (weight > 0.0).then(|| sum / weight)
}

fn aggregate_scopes(scored: &[(Scope, ScopeValues)], window_index: usize, mode: MatchMode, aggregation: Aggregation) -> MetricRecord {
    let weigh = |w: usize| match aggregation {
        Aggregation::Unweighted => 1.0,
        Aggregation::FrequencyWeighted => w as f64,
    };
    let mut missing = MissingTally::default();
    let recall = weighted_mean(scored.iter().map(|(_, v)| (v.recall, weigh(v.profile_size))), &mut missing.recall);
    let coverage = weighted_mean(scored.iter().map(|(_, v)| (v.coverage, weigh(v.window_size))), &mut missing.coverage);
    let cosine = weighted_mean(
        scored.iter().filter(|(s, _)| matches!(s, Scope::Category(_))).map(|(_, v)| (v.cosine, weigh(v.window_mass))),
        &mut missing.cosine,
    );
    MetricRecord { window_index, scope: Scope::Aggregate, mode, recall, coverage, cosine, missing }
}
