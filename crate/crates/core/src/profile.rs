//! Lexical profile construction: top-k vocabulary per category and top n-grams.
//!
//! Ranking everywhere is count descending, then first occurrence ascending,
//! then the item itself in lexicographic order.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{PosMapping, ProfileCategory};
use crate::ingest::{self, SpeakerRole, Span, Token, TokenWindow, Transcript, Upos};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("input is untagged (every word carries UPOS X)")]
    UntaggedInput,
    #[error("invalid profile config: {0}")]
    InvalidConfig(String),
    #[error("empty construction window: {0}")]
    EmptyConstructionWindow(String),
    #[error("invalid profile document: {0}")]
    InvalidDocument(String),
}

/// What happens to PAUSE/BREAK tokens during n-gram extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MarkerPolicy {
    /// Markers are ordinary tokens.
    #[default]
    Retain,
    /// Markers are removed before windowing.
    DropToken,
    /// N-grams containing a marker are discarded after counting.
    ExcludeNgram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRange {
    pub min: usize,
    pub max: usize,
}

impl Default for NgramRange {
    fn default() -> Self {
        NgramRange { min: 2, max: 5 }
    }
}

impl NgramRange {
    pub fn orders(self) -> impl Iterator<Item = usize> {
        self.min..=self.max
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileConfig {
    pub items_per_category: BTreeMap<ProfileCategory, usize>,
    pub vocab_min_count: usize,
    pub ngram_n_range: NgramRange,
    pub ngrams_per_n: usize,
    pub ngram_min_count: usize,
    pub marker_policy: MarkerPolicy,
    pub construction_minutes: u32,
    pub include_aux: bool,
    pub include_propn: bool,
}

pub const DEFAULT_ITEMS_PER_CATEGORY: usize = 5;

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            items_per_category: uniform_k(DEFAULT_ITEMS_PER_CATEGORY),
            vocab_min_count: 5,
            ngram_n_range: NgramRange::default(),
            ngrams_per_n: 3,
            ngram_min_count: 3,
            marker_policy: MarkerPolicy::Retain,
            construction_minutes: 10,
            include_aux: false,
            include_propn: false,
        }
    }
}

pub fn uniform_k(k: usize) -> BTreeMap<ProfileCategory, usize> {
    ProfileCategory::ALL.iter().map(|&c| (c, k)).collect()
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |m: String| Err(ProfileError::InvalidConfig(m));
        for c in ProfileCategory::ALL {
            match self.items_per_category.get(&c) {
                None => return bad(format!("items_per_category has no entry for {c}")),
                Some(0) => return bad(format!("items_per_category[{c}] must be at least 1")),
                Some(_) => {}
            }
        }
        if self.vocab_min_count == 0 || self.ngrams_per_n == 0 || self.ngram_min_count == 0 {
            return bad("counts and caps must be at least 1".into());
        }
        if self.ngram_n_range.min < 2 || self.ngram_n_range.min > self.ngram_n_range.max {
            return bad(format!("n-gram range {}..={} must satisfy 2 <= min <= max", self.ngram_n_range.min, self.ngram_n_range.max));
        }
        if self.construction_minutes == 0 {
            return bad("construction_minutes must be positive".into());
        }
        Ok(())
    }

    pub fn mapping(&self) -> PosMapping {
        PosMapping { include_aux: self.include_aux, include_propn: self.include_propn }
    }

    /// The settings that decide which items a window contributes.
    pub fn extraction(&self) -> Extraction {
        Extraction { mapping: self.mapping(), ngram_n_range: self.ngram_n_range, marker_policy: self.marker_policy }
    }

    pub fn construction_span(&self) -> Span {
        Span { start_s: 0.0, end_s: f64::from(self.construction_minutes) * 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub mapping: PosMapping,
    pub ngram_n_range: NgramRange,
    pub marker_policy: MarkerPolicy,
}

/// Occurrence count and window offset of the first occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tally {
    pub count: usize,
    pub first_index: usize,
}

impl AsRef<Tally> for Tally {
    fn as_ref(&self) -> &Tally {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemTally {
    pub tally: Tally,
    /// Lemma at the first occurrence.
    pub lemma: Option<String>,
}

impl AsRef<Tally> for ItemTally {
    fn as_ref(&self) -> &Tally {
        &self.tally
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramTally {
    pub tally: Tally,
    /// Per-position lemmas at the first occurrence; `None` if any position lacks one.
    pub lemmas: Option<Vec<String>>,
}

impl AsRef<Tally> for NgramTally {
    fn as_ref(&self) -> &Tally {
        &self.tally
    }
}

pub type CategoryCounts = BTreeMap<ProfileCategory, BTreeMap<String, ItemTally>>;
pub type NgramCounts = BTreeMap<usize, BTreeMap<Vec<String>, NgramTally>>;

/// Item identity: lower-cased surface. Markers keep their upper-case form.
pub fn fold_token(tok: &Token) -> String {
    if tok.is_marker() {
        tok.surface().to_string()
    } else {
        tok.surface().to_lowercase()
    }
}

/// True when the tokens contain words and every word is tagged `X`.
pub fn is_untagged(tokens: &[Token]) -> bool {
    let mut words = tokens.iter().filter(|t| !t.is_marker()).peekable();
    words.peek().is_some() && words.all(|t| t.pos() == Upos::X)
}

/// Per-category counts of case-folded surfaces. Every category has an entry.
pub fn count_vocabulary(w: &TokenWindow, mapping: PosMapping) -> Result<CategoryCounts, ProfileError> {
    if is_untagged(w.tokens()) {
        return Err(ProfileError::UntaggedInput);
    }
    let mut counts: CategoryCounts = ProfileCategory::ALL.iter().map(|&c| (c, BTreeMap::new())).collect();
    for (index, tok) in w.tokens().iter().enumerate() {
        if tok.is_marker() {
            continue;
        }
        let Some(category) = mapping.map(tok.pos()) else { continue };
        let entry = counts
            .get_mut(&category)
            .expect("all categories present")
            .entry(fold_token(tok))
            .or_insert_with(|| ItemTally { tally: Tally { count: 0, first_index: index }, lemma: tok.lemma().map(str::to_string) });
        entry.tally.count += 1;
    }
    Ok(counts)
}

fn rank_order<K: Ord>(a: (&K, &Tally), b: (&K, &Tally)) -> Ordering {
    b.1.count
        .cmp(&a.1.count)
        .then(a.1.first_index.cmp(&b.1.first_index))
        .then_with(|| a.0.cmp(b.0))
}

/// Items with at least `min_count` occurrences, ranked, at most `k` of them.
pub fn select_top_k<K: Ord, V: AsRef<Tally>>(freqs: &BTreeMap<K, V>, k: usize, min_count: usize) -> Vec<(&K, &V)> {
    let mut candidates: Vec<(&K, &V)> = freqs.iter().filter(|(_, v)| v.as_ref().count >= min_count).collect();
    candidates.sort_by(|a, b| rank_order((a.0, a.1.as_ref()), (b.0, b.1.as_ref())));
    candidates.truncate(k);
    candidates
}

/// All n-grams of every order in `range`, counted within utterances.
pub fn count_ngrams(w: &TokenWindow, range: NgramRange, policy: MarkerPolicy) -> NgramCounts {
    let mut counts: NgramCounts = range.orders().map(|n| (n, BTreeMap::new())).collect();
    for (offset, segment) in w.segments() {
        let seq: Vec<(usize, &Token)> = segment
            .iter()
            .enumerate()
            .filter(|(_, t)| policy != MarkerPolicy::DropToken || !t.is_marker())
            .map(|(i, t)| (offset + i, t))
            .collect();
        for n in range.orders() {
            let table = counts.get_mut(&n).expect("all orders present");
            for gram in seq.windows(n) {
                if policy == MarkerPolicy::ExcludeNgram && gram.iter().any(|(_, t)| t.is_marker()) {
                    continue;
                }
                let key: Vec<String> = gram.iter().map(|(_, t)| fold_token(t)).collect();
                let entry = table.entry(key).or_insert_with(|| NgramTally {
                    tally: Tally { count: 0, first_index: gram[0].0 },
                    lemmas: gram.iter().map(|(_, t)| t.lemma().map(str::to_string)).collect(),
                });
                entry.tally.count += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub surface: String,
    pub lemma: Option<String>,
    pub category: ProfileCategory,
    pub count: usize,
    pub first_occurrence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramEntry {
    pub tokens: Vec<String>,
    pub lemmas: Option<Vec<String>>,
    pub n: usize,
    pub count: usize,
    pub first_occurrence_index: usize,
}

/// Top n-grams per order, thresholded by `ngram_min_count` and capped at `ngrams_per_n`.
pub fn extract_ngrams(w: &TokenWindow, config: &ProfileConfig) -> Result<BTreeMap<usize, Vec<NgramEntry>>, ProfileError> {
    config.validate()?;
    let counts = count_ngrams(w, config.ngram_n_range, config.marker_policy);
    Ok(counts
        .iter()
        .map(|(&n, table)| {
            let ranked = select_top_k(table, config.ngrams_per_n, config.ngram_min_count)
                .into_iter()
                .map(|(tokens, t)| NgramEntry {
                    tokens: tokens.clone(),
                    lemmas: t.lemmas.clone(),
                    n,
                    count: t.tally.count,
                    first_occurrence_index: t.tally.first_index,
                })
                .collect();
            (n, ranked)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalProfile {
    pub speaker_id: String,
    pub construction_span: Span,
    pub config: ProfileConfig,
    pub vocab: BTreeMap<ProfileCategory, Vec<VocabEntry>>,
    pub ngrams: BTreeMap<usize, Vec<NgramEntry>>,
}

impl LexicalProfile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<LexicalProfile, ProfileError> {
        let p: LexicalProfile = serde_json::from_str(text).map_err(|e| ProfileError::InvalidDocument(e.to_string()))?;
        p.config.validate()?;
        p.check_invariants().map_err(ProfileError::InvalidDocument)?;
        Ok(p)
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (c, entries) in &self.vocab {
            let cap = self.config.items_per_category.get(c).copied().unwrap_or(0);
            if entries.len() > cap {
                return Err(format!("{c} holds {} items, cap is {cap}", entries.len()));
            }
            if entries.iter().any(|e| e.count < self.config.vocab_min_count || e.category != *c) {
                return Err(format!("{c} holds an entry below the occurrence threshold or of another category"));
            }
            if entries.windows(2).any(|w| w[0].count < w[1].count) {
                return Err(format!("{c} entries are not ranked by count"));
            }
        }
        for (n, entries) in &self.ngrams {
            if entries.len() > self.config.ngrams_per_n {
                return Err(format!("{n}-grams exceed the cap"));
            }
            if entries.iter().any(|e| e.n != *n || e.tokens.len() != *n || e.count < self.config.ngram_min_count) {
                return Err(format!("malformed {n}-gram entry"));
            }
            if entries.windows(2).any(|w| w[0].count < w[1].count) {
                return Err(format!("{n}-grams are not ranked by count"));
            }
        }
        Ok(())
    }

    pub fn total_items(&self) -> usize {
        self.vocab.values().map(Vec::len).sum::<usize>() + self.ngrams.values().map(Vec::len).sum::<usize>()
    }
}

/// Profile over the interviewee's speech in `[0, construction_minutes)`.
pub fn build_profile(t: &Transcript, config: &ProfileConfig) -> Result<LexicalProfile, ProfileError> {
    config.validate()?;
    let span = config.construction_span();
    if t.duration() < span.end_s {
        return Err(ProfileError::EmptyConstructionWindow(format!(
            "transcript lasts {}s, construction window needs {}s",
            t.duration(),
            span.end_s
        )));
    }
    let window = ingest::slice(t, span.start_s, span.end_s, SpeakerRole::Interviewee).expect("construction span is valid");
    if window.tokens().iter().all(Token::is_marker) {
        return Err(ProfileError::EmptyConstructionWindow(format!("no interviewee words before {}s", span.end_s)));
    }
    let counts = count_vocabulary(&window, config.mapping())?;
    let vocab = counts
        .iter()
        .map(|(&category, table)| {
            let k = config.items_per_category[&category];
            let entries = select_top_k(table, k, config.vocab_min_count)
                .into_iter()
                .map(|(surface, t)| VocabEntry {
                    surface: surface.clone(),
                    lemma: t.lemma.clone(),
                    category,
                    count: t.tally.count,
                    first_occurrence_index: t.tally.first_index,
                })
                .collect();
            (category, entries)
        })
        .collect();
    let ngrams = extract_ngrams(&window, config)?;
    Ok(LexicalProfile { speaker_id: t.speaker_id().to_string(), construction_span: span, config: config.clone(), vocab, ngrams })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Marker, Utterance};

    fn tok(surface: &str, pos: Upos) -> Token {
        Token::word(surface, Some(surface.to_lowercase()), pos).unwrap()
    }

    fn window_of(segments: Vec<Vec<Token>>) -> TokenWindow {
        let mut w = TokenWindow::new("s", Span::new(0.0, 600.0).unwrap());
        for s in &segments {
            w.push_utterance(s);
        }
        w
    }

    fn words(text: &str) -> Vec<Token> {
        text.split_whitespace()
            .map(|w| if w == "PAUSE" { Token::marker(Marker::Pause) } else { tok(w, Upos::Noun) })
            .collect()
    }

    fn tallies(items: &[(&str, usize, usize)]) -> BTreeMap<String, Tally> {
        items.iter().map(|&(s, count, first_index)| (s.to_string(), Tally { count, first_index })).collect()
    }

    fn keys<V>(ranked: Vec<(&String, V)>) -> Vec<&str> {
        ranked.into_iter().map(|(k, _)| k.as_str()).collect()
    }

    #[test]
    fn vocabulary_filters_categories() {
        let w = window_of(vec![vec![tok("de", Upos::Det), tok("man", Upos::Noun), tok("man", Upos::Noun)]]);
        let counts = count_vocabulary(&w, PosMapping::default()).unwrap();
        let nouns = &counts[&ProfileCategory::Noun];
        assert_eq!(nouns.len(), 1);
        assert_eq!(nouns["man"].tally, Tally { count: 2, first_index: 1 });
        assert!(counts.values().map(BTreeMap::len).sum::<usize>() == 1);
    }

    #[test]
    fn vocabulary_folds_case() {
        let w = window_of(vec![vec![tok("Man", Upos::Noun), tok("man", Upos::Noun)]]);
        let counts = count_vocabulary(&w, PosMapping::default()).unwrap();
        assert_eq!(counts[&ProfileCategory::Noun]["man"].tally.count, 2);
    }

    #[test]
    fn vocabulary_ignores_markers() {
        let w = window_of(vec![vec![Token::marker(Marker::Pause), Token::marker(Marker::Pause)]]);
        let counts = count_vocabulary(&w, PosMapping::default()).unwrap();
        assert!(counts.values().all(BTreeMap::is_empty));
    }

    #[test]
    fn vocabulary_rejects_untagged() {
        let w = window_of(vec![vec![Token::untagged("man").unwrap()]]);
        assert_eq!(count_vocabulary(&w, PosMapping::default()), Err(ProfileError::UntaggedInput));
    }

    #[test]
    fn same_surface_counts_per_category() {
        let w = window_of(vec![vec![tok("dat", Upos::Pron), tok("dat", Upos::Sconj), tok("dat", Upos::Pron)]]);
        let counts = count_vocabulary(&w, PosMapping::default()).unwrap();
        assert_eq!(counts[&ProfileCategory::Pronoun]["dat"].tally.count, 2);
        assert_eq!(counts[&ProfileCategory::Conjunction]["dat"].tally.count, 1);
    }

    #[test]
    fn top_k_threshold_and_order() {
        let f = tallies(&[("de", 7, 3), ("man", 6, 0), ("huis", 5, 1), ("boot", 4, 2)]);
        assert_eq!(keys(select_top_k(&f, 5, 5)), ["de", "man", "huis"]);
        assert!(select_top_k(&BTreeMap::<String, Tally>::new(), 5, 1).is_empty());
    }

    #[test]
    fn top_k_tie_breaks() {
        let f = tallies(&[("b", 5, 0), ("a", 5, 4)]);
        assert_eq!(keys(select_top_k(&f, 1, 5)), ["b"]);
        let f = tallies(&[("b", 5, 0), ("a", 5, 0)]);
        assert_eq!(keys(select_top_k(&f, 2, 1)), ["a", "b"]);
    }

    #[test]
    fn repeated_phrase_bigram() {
        let w = window_of(vec![words("ik denk dat ik denk dat ik denk dat")]);
        let grams = extract_ngrams(&w, &ProfileConfig::default()).unwrap();
        let top = &grams[&2][0];
        assert_eq!(top.tokens, ["ik", "denk"]);
        assert_eq!(top.count, 3);
        // "dat ik" occurs twice only.
        assert!(grams[&2].iter().all(|g| g.tokens != ["dat", "ik"]));
    }

    #[test]
    fn ngrams_stay_inside_utterances() {
        let w = window_of(vec![words("a b"), words("a b"), words("a b")]);
        let counts = count_ngrams(&w, NgramRange::default(), MarkerPolicy::Retain);
        assert_eq!(counts[&2].len(), 1);
        assert!(counts[&3].is_empty());
    }

    #[test]
    fn marker_policies() {
        let seg = || words("ik PAUSE denk");
        let w = window_of(vec![seg(), seg(), seg()]);
        let with = |policy| ProfileConfig { marker_policy: policy, ..ProfileConfig::default() };
        let retain = extract_ngrams(&w, &with(MarkerPolicy::Retain)).unwrap();
        assert_eq!(retain[&3][0].tokens, ["ik", "PAUSE", "denk"]);
        let exclude = extract_ngrams(&w, &with(MarkerPolicy::ExcludeNgram)).unwrap();
        assert!(exclude[&3].is_empty() && exclude[&2].is_empty());
        let dropped = extract_ngrams(&w, &with(MarkerPolicy::DropToken)).unwrap();
        assert_eq!(dropped[&2][0].tokens, ["ik", "denk"]);
        assert!(dropped[&3].is_empty());
    }

    #[test]
    fn config_validation() {
        let mut c = ProfileConfig::default();
        assert!(c.validate().is_ok());
        c.ngram_n_range = NgramRange { min: 1, max: 5 };
        assert!(c.validate().is_err());
        let mut c = ProfileConfig::default();
        c.items_per_category.remove(&ProfileCategory::Verb);
        assert!(c.validate().is_err());
        assert!(extract_ngrams(&window_of(vec![]), &c).is_err());
    }

    #[test]
    fn default_config_values() {
        let c = ProfileConfig::default();
        assert!(c.items_per_category.values().all(|&k| k == 5));
        assert_eq!(c.items_per_category.len(), 6);
        assert_eq!((c.vocab_min_count, c.ngrams_per_n, c.ngram_min_count), (5, 3, 3));
        assert_eq!(c.ngram_n_range, NgramRange { min: 2, max: 5 });
        assert_eq!(c.marker_policy, MarkerPolicy::Retain);
    }

    #[test]
    fn empty_construction_window() {
        let u = Utterance::new(SpeakerRole::Interviewee, 700.0, vec![tok("man", Upos::Noun)]).unwrap();
        let t = Transcript::new("s", vec![u], 3600.0).unwrap();
        assert!(matches!(build_profile(&t, &ProfileConfig::default()), Err(ProfileError::EmptyConstructionWindow(_))));
        let short = Transcript::new("s", vec![], 300.0).unwrap();
        assert!(matches!(build_profile(&short, &ProfileConfig::default()), Err(ProfileError::EmptyConstructionWindow(_))));
    }

    #[test]
    fn profile_json_is_stable_and_validated() {
        let seg: Vec<Token> = (0..6).flat_map(|_| [tok("huis", Upos::Noun), tok("groot", Upos::Adj)]).collect();
        let u = Utterance::new(SpeakerRole::Interviewee, 0.0, seg).unwrap();
        let t = Transcript::new("s1", vec![u], 1200.0).unwrap();
        let p = build_profile(&t, &ProfileConfig::default()).unwrap();
        assert_eq!(p.vocab[&ProfileCategory::Noun][0].surface, "huis");
        let json = p.to_json();
        let first_keys: Vec<usize> = ["\"speaker_id\"", "\"construction_span\"", "\"config\"", "\"vocab\"", "\"ngrams\""]
            .iter()
            .map(|k| json.find(k).unwrap())
            .collect();
        assert!(first_keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(LexicalProfile::from_json(&json).unwrap(), p);
        assert_eq!(build_profile(&t, &ProfileConfig::default()).unwrap().to_json(), json);
    }
}
