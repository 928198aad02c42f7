//! The evaluation grid: construction timepoints × profile sizes × window sizes ×
//! match modes, evaluated over contiguous later windows for every speaker.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotate::ProfileCategory;
use crate::ingest::{self, SpeakerRole, Transcript};
use crate::metrics::{self, Aggregation, EvaluationWindow, MatchMode, MetricRecord, MetricsError, Scope};
use crate::profile::{self, uniform_k, Extraction, MarkerPolicy, NgramRange, ProfileConfig, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
}

/// Contiguous windows of `window_s` seconds starting at `after_s`, each ending
/// no later than the transcript duration (and the cutoff, when given).
///
/// Windows hold interviewee speech only; a window without any is still emitted
/// with `empty` set. A non-positive `window_s` yields no windows.
pub fn make_windows(t: &Transcript, after_s: f64, window_s: f64, cutoff_s: Option<f64>, extraction: Extraction) -> Vec<EvaluationWindow> {
    if window_s.is_nan() || window_s <= 0.0 || !after_s.is_finite() || after_s < 0.0 {
        return Vec::new();
    }
    let limit = cutoff_s.map_or(t.duration(), |c| c.min(t.duration()));
    let mut out = Vec::new();
    for index in 0.. {
        let start = after_s + index as f64 * window_s;
        let end = start + window_s;
        if end > limit {
            break;
        }
        let tokens = ingest::slice(t, start, end, SpeakerRole::Interviewee).expect("window span is valid");
        out.push(EvaluationWindow::from_tokens(index, &tokens, extraction));
    }
    out
}

/// Per-category profile sizes under a stable name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KAssignment {
    pub id: String,
    pub items_per_category: BTreeMap<ProfileCategory, usize>,
}

impl KAssignment {
    pub fn uniform(k: usize) -> KAssignment {
        KAssignment { id: format!("k{k}"), items_per_category: uniform_k(k) }
    }

    pub fn optimal() -> KAssignment {
        KAssignment { id: "optimal".into(), items_per_category: paper_optimal_config().1 }
    }
}

/// Construction timepoint (minutes) and per-category sizes that balance
/// stability against data requirements.
pub fn paper_optimal_config() -> (u32, BTreeMap<ProfileCategory, usize>) {
    use ProfileCategory::*;
    let sizes = [(Adjective, 5), (Conjunction, 5), (Adverb, 10), (Noun, 10), (Pronoun, 10), (Verb, 10)];
    (10, sizes.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub timepoints_min: Vec<u32>,
    /// Uniform profile sizes, each becoming assignment `k<value>`.
    pub k_values: Vec<usize>,
    /// Additional per-category assignments, evaluated after the uniform ones.
    pub k_assignments: Vec<KAssignment>,
    pub window_minutes: Vec<u32>,
    pub modes: Vec<MatchMode>,
    pub analysis_cutoff_min: Option<u32>,
    pub marker_policy: MarkerPolicy,
    pub include_aux: bool,
    pub include_propn: bool,
    pub vocab_min_count: usize,
    pub ngram_n_range: NgramRange,
    pub ngrams_per_n: usize,
    pub ngram_min_count: usize,
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let base = ProfileConfig::default();
        SweepConfig {
            timepoints_min: vec![5, 10, 15, 20, 25, 30],
            k_values: vec![3, 5, 10, 15, 20],
            k_assignments: Vec::new(),
            window_minutes: vec![10, 30],
            modes: vec![MatchMode::Exact, MatchMode::Lemmatised],
            analysis_cutoff_min: Some(115),
            marker_policy: base.marker_policy,
            include_aux: base.include_aux,
            include_propn: base.include_propn,
            vocab_min_count: base.vocab_min_count,
            ngram_n_range: base.ngram_n_range,
            ngrams_per_n: base.ngrams_per_n,
            ngram_min_count: base.ngram_min_count,
            aggregation: Aggregation::Unweighted,
            seed: 0,
        }
    }
}

impl SweepConfig {
    /// The held-out evaluation shape: one timepoint, the optimal sizes, 10-minute windows.
    pub fn holdout() -> SweepConfig {
        SweepConfig {
            timepoints_min: vec![paper_optimal_config().0],
            k_values: Vec::new(),
            k_assignments: vec![KAssignment::optimal()],
            window_minutes: vec![10],
            ..SweepConfig::default()
        }
    }

    pub fn assignments(&self) -> Vec<KAssignment> {
        self.k_values.iter().map(|&k| KAssignment::uniform(k)).chain(self.k_assignments.iter().cloned()).collect()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.to_string()));
        if self.timepoints_min.is_empty() || self.timepoints_min[0] == 0 || self.timepoints_min.windows(2).any(|w| w[0] >= w[1]) {
            return bad("timepoints must be positive and strictly increasing");
        }
        if let Some(cutoff) = self.analysis_cutoff_min {
            if cutoff <= *self.timepoints_min.last().expect("non-empty") {
                return bad("analysis cutoff must exceed the last timepoint");
            }
        }
        if self.window_minutes.is_empty() || self.window_minutes.contains(&0) {
            return bad("window sizes must be positive");
        }
        if self.modes.is_empty() {
            return bad("at least one match mode is required");
        }
        let assignments = self.assignments();
        if assignments.is_empty() {
            return bad("at least one profile size is required");
        }
        let ids: BTreeSet<&str> = assignments.iter().map(|a| a.id.as_str()).collect();
        if ids.len() != assignments.len() {
            return bad("profile size assignment ids must be unique");
        }
        for a in &assignments {
            self.profile_config(self.timepoints_min[0], a).validate().map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub fn profile_config(&self, timepoint_min: u32, assignment: &KAssignment) -> ProfileConfig {
        ProfileConfig {
            items_per_category: assignment.items_per_category.clone(),
            vocab_min_count: self.vocab_min_count,
            ngram_n_range: self.ngram_n_range,
            ngrams_per_n: self.ngrams_per_n,
            ngram_min_count: self.ngram_min_count,
            marker_policy: self.marker_policy,
            construction_minutes: timepoint_min,
            include_aux: self.include_aux,
            include_propn: self.include_propn,
        }
    }

    pub fn extraction(&self) -> Extraction {
        self.profile_config(1, &KAssignment::uniform(1)).extraction()
    }

    fn sorted_window_sizes(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.window_minutes.iter().copied().collect();
        set.into_iter().collect()
    }

    fn sorted_modes(&self) -> Vec<MatchMode> {
        let set: BTreeSet<MatchMode> = self.modes.iter().copied().collect();
        set.into_iter().collect()
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serialises").as_bytes())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub speaker_id: String,
    pub timepoint_min: u32,
    pub k_assignment: String,
    pub window_minutes: u32,
    pub window_start_s: f64,
    pub window_empty: bool,
    pub metric: MetricRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    EmptyConstructionWindow(String),
    UntaggedInput,
    NoEvaluationWindows,
    MissingLemmas(String),
    Failed(String),
}

impl SkipReason {
    pub fn code(&self) -> &'static str {
        match self {
            SkipReason::EmptyConstructionWindow(_) => "empty_construction_window",
            SkipReason::UntaggedInput => "untagged_input",
            SkipReason::NoEvaluationWindows => "no_evaluation_windows",
            SkipReason::MissingLemmas(_) => "missing_lemmas",
            SkipReason::Failed(_) => "failed",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A grid cell (speaker × timepoint × size × window size × mode) that produced no records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipRecord {
    pub speaker_id: String,
    pub timepoint_min: u32,
    pub k_assignment: String,
    pub window_minutes: u32,
    pub mode: MatchMode,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridShape {
    pub speakers: usize,
    pub timepoints_min: Vec<u32>,
    pub k_assignments: Vec<String>,
    pub window_minutes: Vec<u32>,
    pub modes: Vec<MatchMode>,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub config_hash: String,
    pub corpus_hash: String,
    /// Hash of the manifest file the corpus was loaded from, when there was one.
    pub manifest_hash: Option<String>,
    pub seed: u64,
    pub grid: GridShape,
    pub records: usize,
    pub skipped_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub skips: Vec<SkipRecord>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn k_assignment_order(&self) -> &[String] {
        &self.provenance.grid.k_assignments
    }
}

/// Hash over the CoNLL-U rendering of every transcript, in corpus order.
pub fn corpus_hash(corpus: &[Transcript]) -> String {
    let mut hasher = Sha256::new();
    for t in corpus {
        hasher.update(ingest::write_conllu(t).as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(hasher.finalize())
}

struct Cell<'a> {
    transcript: &'a Transcript,
    speaker: usize,
    timepoint: u32,
    assignment: &'a KAssignment,
}

/// Runs the full grid. Cells are independent and run in parallel; the output
/// order is fixed: speaker id, timepoint, size assignment, window size, mode,
/// window index, scope.
pub fn run_sweep(corpus: &[Transcript], sc: &SweepConfig) -> Result<SweepResult, ExperimentError> {
    sc.validate()?;
    let assignments = sc.assignments();
    let window_sizes = sc.sorted_window_sizes();
    let modes = sc.sorted_modes();
    let extraction = sc.extraction();
    let cutoff_s = sc.analysis_cutoff_min.map(|m| f64::from(m) * 60.0);

    let mut order: Vec<&Transcript> = corpus.iter().collect();
    order.sort_by(|a, b| a.speaker_id().cmp(b.speaker_id()));

    // windows[speaker][timepoint][window size]
    let windows: Vec<Vec<Vec<Vec<EvaluationWindow>>>> = order
        .par_iter()
        .map(|t| {
            sc.timepoints_min
                .iter()
                .map(|&tp| {
                    window_sizes
                        .iter()
                        .map(|&ws| make_windows(t, f64::from(tp) * 60.0, f64::from(ws) * 60.0, cutoff_s, extraction))
                        .collect()
                })
                .collect()
        })
        .collect();

    let cells: Vec<Cell> = order
        .iter()
        .enumerate()
        .flat_map(|(si, t)| {
            let assignments = &assignments;
            sc.timepoints_min.iter().flat_map(move |&tp| {
                assignments.iter().map(move |a| Cell { transcript: t, speaker: si, timepoint: tp, assignment: a })
            })
        })
        .collect();

    let results: Vec<(Vec<SweepRecord>, Vec<SkipRecord>)> = cells
        .par_iter()
        .map(|cell| {
            let tp_index = sc.timepoints_min.iter().position(|&x| x == cell.timepoint).expect("timepoint in grid");
            evaluate_cell(cell, sc, &window_sizes, &modes, &windows[cell.speaker][tp_index])
        })
        .collect();

    let mut records = Vec::new();
    let mut skips = Vec::new();
    for (r, s) in results {
        records.extend(r);
        skips.extend(s);
    }

    let grid = GridShape {
        speakers: corpus.len(),
        timepoints_min: sc.timepoints_min.clone(),
        k_assignments: assignments.iter().map(|a| a.id.clone()).collect(),
        window_minutes: window_sizes.clone(),
        modes: modes.clone(),
        cells: corpus.len() * sc.timepoints_min.len() * assignments.len() * window_sizes.len() * modes.len(),
    };
    let provenance = Provenance {
        tool: concat!("lexiprof ", env!("CARGO_PKG_VERSION")).to_string(),
        config_hash: sc.hash(),
        corpus_hash: corpus_hash(corpus),
        manifest_hash: None,
        seed: sc.seed,
        grid,
        records: records.len(),
        skipped_cells: skips.len(),
    };
    Ok(SweepResult { records, skips, provenance })
}

fn evaluate_cell(
    cell: &Cell,
    sc: &SweepConfig,
    window_sizes: &[u32],
    modes: &[MatchMode],
    windows_by_size: &[Vec<EvaluationWindow>],
) -> (Vec<SweepRecord>, Vec<SkipRecord>) {
    let speaker_id = cell.transcript.speaker_id();
    let mut records = Vec::new();
    let mut skips = Vec::new();
    let skip = |ws: u32, mode: MatchMode, reason: SkipReason| SkipRecord {
        speaker_id: speaker_id.to_string(),
        timepoint_min: cell.timepoint,
        k_assignment: cell.assignment.id.clone(),
        window_minutes: ws,
        mode,
        reason,
    };

    let config = sc.profile_config(cell.timepoint, cell.assignment);
    let profile = match profile::build_profile(cell.transcript, &config) {
        Ok(p) => p,
        Err(e) => {
            let reason = match e {
                ProfileError::EmptyConstructionWindow(m) => SkipReason::EmptyConstructionWindow(m),
                ProfileError::UntaggedInput => SkipReason::UntaggedInput,
                other => SkipReason::Failed(other.to_string()),
            };
            for &ws in window_sizes {
                for &mode in modes {
                    skips.push(skip(ws, mode, reason.clone()));
                }
            }
            return (records, skips);
        }
    };

    for (&ws, windows) in window_sizes.iter().zip(windows_by_size) {
        for &mode in modes {
            if windows.is_empty() {
                skips.push(skip(ws, mode, SkipReason::NoEvaluationWindows));
                continue;
            }
            let mut cell_records = Vec::new();
            let mut failure = None;
            for w in windows {
                match metrics::evaluate_profile_with(&profile, w, mode, sc.aggregation) {
                    Ok(recs) => cell_records.extend(recs.into_iter().map(|metric| SweepRecord {
                        speaker_id: speaker_id.to_string(),
                        timepoint_min: cell.timepoint,
                        k_assignment: cell.assignment.id.clone(),
                        window_minutes: ws,
                        window_start_s: w.span.start_s,
                        window_empty: w.empty,
                        metric,
                    })),
                    Err(e) => {
                        failure = Some(match e {
                            MetricsError::MissingLemmas { item } => SkipReason::MissingLemmas(item),
                            other => SkipReason::Failed(other.to_string()),
                        });
                        break;
                    }
                }
            }
            match failure {
                Some(reason) => skips.push(skip(ws, mode, reason)),
                None => records.extend(cell_records),
            }
        }
    }
    (records, skips)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Recall,
    Coverage,
    Cosine,
}

impl MetricName {
    pub const ALL: [MetricName; 3] = [MetricName::Recall, MetricName::Coverage, MetricName::Cosine];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Recall => "recall",
            MetricName::Coverage => "coverage",
            MetricName::Cosine => "cosine",
        }
    }

    pub fn value(self, r: &MetricRecord) -> Option<f64> {
        match self {
            MetricName::Recall => r.recall,
            MetricName::Coverage => r.coverage,
            MetricName::Cosine => r.cosine,
        }
    }

    /// Cosine is not defined for n-gram scopes.
    pub fn applies_to(self, scope: Scope) -> bool {
        !(self == MetricName::Cosine && matches!(scope, Scope::Ngram(_)))
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Cross-speaker statistics for one grid cell, window index, scope and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub timepoint_min: u32,
    pub k_assignment: String,
    pub window_minutes: u32,
    pub mode: MatchMode,
    pub window_index: usize,
    pub scope: Scope,
    pub metric: MetricName,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
    pub defined: usize,
    pub speakers: usize,
}

/// Mean and population standard deviation of the defined values.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn aggregate(r: &SweepResult) -> Vec<SummaryRow> {
    let k_pos: BTreeMap<&str, usize> = r.k_assignment_order().iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    type Key<'a> = (u32, usize, &'a str, u32, MatchMode, usize, Scope, MetricName);
    let mut groups: BTreeMap<Key, Vec<Option<f64>>> = BTreeMap::new();
    for rec in &r.records {
        let kp = k_pos.get(rec.k_assignment.as_str()).copied().unwrap_or(usize::MAX);
        for metric in MetricName::ALL {
            if !metric.applies_to(rec.metric.scope) {
                continue;
            }
            let key = (
                rec.timepoint_min,
                kp,
                rec.k_assignment.as_str(),
                rec.window_minutes,
                rec.metric.mode,
                rec.metric.window_index,
                rec.metric.scope,
                metric,
            );
            groups.entry(key).or_default().push(metric.value(&rec.metric));
        }
    }
    groups
        .into_iter()
        .map(|((tp, _, k, ws, mode, wi, scope, metric), values)| {
            let defined: Vec<f64> = values.iter().flatten().copied().collect();
            let stats = mean_std(&defined);
            SummaryRow {
                timepoint_min: tp,
                k_assignment: k.to_string(),
                window_minutes: ws,
                mode,
                window_index: wi,
                scope,
                metric,
                mean: stats.map(|s| s.0),
                std: stats.map(|s| s.1),
                defined: defined.len(),
                speakers: values.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Token, Upos, Utterance};

    fn speaker(id: &str, minutes: u32) -> Transcript {
        // One interviewee utterance per minute cycling through a tiny vocabulary.
        let words = [("huis", Upos::Noun), ("ik", Upos::Pron), ("groot", Upos::Adj), ("en", Upos::Cconj), ("liep", Upos::Verb), ("toen", Upos::Adv)];
        let us = (0..minutes)
            .map(|m| {
                let toks = words.iter().map(|&(s, p)| Token::word(s, Some(s.to_string()), p).unwrap()).collect();
                Utterance::new(SpeakerRole::Interviewee, f64::from(m) * 60.0, toks).unwrap()
            })
            .collect();
        Transcript::new(id, us, f64::from(minutes) * 60.0).unwrap()
    }

    #[test]
    fn tiling_arithmetic() {
        let t = speaker("a", 60);
        let ext = ProfileConfig::default().extraction();
        let ws = make_windows(&t, 600.0, 600.0, None, ext);
        assert_eq!(ws.len(), 5);
        assert_eq!((ws[0].span.start_s, ws[4].span.end_s), (600.0, 3600.0));
        assert!(ws.windows(2).all(|p| p[0].span.end_s == p[1].span.start_s));
        assert!(make_windows(&t, 3300.0, 600.0, None, ext).is_empty());
        assert!(make_windows(&t, 600.0, 0.0, None, ext).is_empty());
    }

    #[test]
    fn cutoff_truncates_tiling() {
        let t = speaker("a", 124);
        let ext = ProfileConfig::default().extraction();
        assert_eq!(make_windows(&t, 600.0, 600.0, None, ext).len(), 11);
        let cut = make_windows(&t, 600.0, 600.0, Some(6900.0), ext);
        assert_eq!(cut.len(), 10);
        assert!(cut.last().unwrap().span.end_s <= 6900.0);
    }

    #[test]
    fn empty_windows_are_flagged() {
        let u = Utterance::new(SpeakerRole::Interviewee, 0.0, vec![Token::word("huis", None, Upos::Noun).unwrap()]).unwrap();
        let t = Transcript::new("a", vec![u], 1800.0).unwrap();
        let ws = make_windows(&t, 600.0, 600.0, None, ProfileConfig::default().extraction());
        assert_eq!(ws.len(), 2);
        assert!(ws.iter().all(|w| w.empty));
    }

    #[test]
    fn optimal_config_values() {
        let (tp, k) = paper_optimal_config();
        assert_eq!(tp, 10);
        assert_eq!(k.len(), 6);
        assert_eq!(k[&ProfileCategory::Adjective], 5);
        assert_eq!(k[&ProfileCategory::Conjunction], 5);
        for c in [ProfileCategory::Adverb, ProfileCategory::Noun, ProfileCategory::Pronoun, ProfileCategory::Verb] {
            assert_eq!(k[&c], 10);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let c = SweepConfig { timepoints_min: vec![10, 5], ..SweepConfig::default() };
        assert!(c.validate().is_err());
        let c = SweepConfig { analysis_cutoff_min: Some(30), ..SweepConfig::default() };
        assert!(c.validate().is_err());
        let c = SweepConfig { k_values: vec![5, 5], ..SweepConfig::default() };
        assert!(c.validate().is_err());
        let c = SweepConfig { k_values: vec![0], ..SweepConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: SweepConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, SweepConfig::default());
        let c: SweepConfig = serde_json::from_str(r#"{"analysis_cutoff_min": null}"#).unwrap();
        assert_eq!(c.analysis_cutoff_min, None);
    }

    #[test]
    fn single_cell_record_count() {
        let t = speaker("a", 60);
        let sc = SweepConfig {
            timepoints_min: vec![10],
            k_values: vec![5],
            window_minutes: vec![10],
            modes: vec![MatchMode::Exact],
            analysis_cutoff_min: None,
            ..SweepConfig::default()
        };
        let r = run_sweep(&[t], &sc).unwrap();
        // 5 windows × (6 categories + 4 n-gram orders + aggregate) × 1 mode
        assert_eq!(r.records.len(), 5 * 11);
        assert!(r.skips.is_empty());
    }

    #[test]
    fn short_transcripts_are_skipped_not_fatal() {
        let sc = SweepConfig { modes: vec![MatchMode::Exact], ..SweepConfig::default() };
        let r = run_sweep(&[speaker("short", 8), speaker("long", 60)], &sc).unwrap();
        let short_skips = r.skips.iter().filter(|s| s.speaker_id == "short").count();
        // short: every (timepoint, k, window size) cell is skipped.
        assert_eq!(short_skips, 6 * 5 * 2);
        assert!(r.records.iter().all(|rec| rec.speaker_id == "long"));
        assert_eq!(r.provenance.grid.cells, 2 * 6 * 5 * 2);
    }

    #[test]
    fn empty_corpus() {
        let r = run_sweep(&[], &SweepConfig::default()).unwrap();
        assert!(r.records.is_empty() && r.skips.is_empty());
        assert_eq!(r.provenance.config_hash.len(), 64);
        assert!(aggregate(&r).is_empty());
    }

    #[test]
    fn aggregate_statistics() {
        assert_eq!(mean_std(&[0.7]), Some((0.7, 0.0)));
        let (m, s) = mean_std(&[0.4, 0.6]).unwrap();
        assert!((m - 0.5).abs() < 1e-15 && (s - 0.1).abs() < 1e-15);
        assert_eq!(mean_std(&[]), None);
    }

    #[test]
    fn aggregate_counts_undefined_cells() {
        let sc = SweepConfig {
            timepoints_min: vec![10],
            k_values: vec![5],
            window_minutes: vec![10],
            modes: vec![MatchMode::Exact],
            analysis_cutoff_min: None,
            ..SweepConfig::default()
        };
        let r = run_sweep(&[speaker("a", 30), speaker("b", 30)], &sc).unwrap();
        let rows = aggregate(&r);
        let noun = rows
            .iter()
            .find(|s| s.scope == Scope::Category(ProfileCategory::Noun) && s.metric == MetricName::Recall && s.window_index == 0)
            .unwrap();
        assert_eq!((noun.speakers, noun.defined, noun.mean, noun.std), (2, 2, Some(1.0), Some(0.0)));
    }
}
