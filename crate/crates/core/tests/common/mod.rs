//! Test-only reference implementations and random fixtures.
//!
//! The oracles recompute everything from plain token lists with linear scans
//! and a full sort, sharing no code with the library beyond its data types.

#![allow(dead_code)]

use std::collections::BTreeMap;

use lexiprof::ingest::Span;
use lexiprof::profile::NgramRange;
use lexiprof::{LexicalProfile, MarkerPolicy, MatchMode, PosMapping, ProfileCategory, SpeakerRole, Token, TokenWindow, Transcript, Upos, Utterance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Fixtures

/// Small vocabulary so random windows contain many repeats and ties. The
/// lemma is a function of the lower-cased surface.
pub const WORDS: &[(&str, &str, Upos)] = &[
    ("huis", "huis", Upos::Noun),
    ("Huis", "huis", Upos::Noun),
    ("huizen", "huis", Upos::Noun),
    ("man", "man", Upos::Noun),
    ("ik", "ik", Upos::Pron),
    ("ze", "ze", Upos::Pron),
    ("dat", "dat", Upos::Pron),
    ("groot", "groot", Upos::Adj),
    ("grote", "groot", Upos::Adj),
    ("en", "en", Upos::Cconj),
    ("omdat", "omdat", Upos::Sconj),
    ("liep", "lopen", Upos::Verb),
    ("loopt", "lopen", Upos::Verb),
    ("is", "zijn", Upos::Aux),
    ("toen", "toen", Upos::Adv),
    ("de", "de", Upos::Det),
    ("jan", "jan", Upos::Propn),
    ("in", "in", Upos::Adp),
];

pub fn random_token(rng: &mut ChaCha8Rng, marker_rate: f64) -> Token {
    if rng.random_bool(marker_rate) {
        return Token::marker(if rng.random_bool(0.5) { lexiprof::Marker::Pause } else { lexiprof::Marker::Break });
    }
    let (s, l, p) = WORDS[rng.random_range(0..WORDS.len())];
    Token::word(s, Some(l.to_string()), p).unwrap()
}

/// A window of up to `max_tokens` tokens split into utterances.
pub fn random_window(rng: &mut ChaCha8Rng, max_tokens: usize) -> TokenWindow {
    let total = rng.random_range(0..=max_tokens);
    let mut w = TokenWindow::new("s", Span::new(600.0, 1200.0).unwrap());
    let mut left = total;
    while left > 0 {
        let n = rng.random_range(1..=left.min(25));
        let seg: Vec<Token> = (0..n).map(|_| random_token(rng, 0.08)).collect();
        w.push_utterance(&seg);
        left -= n;
    }
    w
}

/// Interviewee speech in [0, minutes) with some interviewer turns, one
/// utterance every few seconds.
pub fn random_transcript(rng: &mut ChaCha8Rng, minutes: u32, words_per_utterance: usize) -> Transcript {
    let mut us = Vec::new();
    let mut t = 0.0;
    let end = f64::from(minutes) * 60.0;
    while t < end {
        let role = if rng.random_bool(0.2) { SpeakerRole::Interviewer } else { SpeakerRole::Interviewee };
        let n = rng.random_range(1..=words_per_utterance);
        let toks = (0..n).map(|_| random_token(rng, 0.05)).collect();
        us.push(Utterance::new(role, t, toks).unwrap());
        t += rng.random_range(1.0..8.0);
    }
    Transcript::new("r", us, end).unwrap()
}

// ---------------------------------------------------------------------------
// Ranking oracle

/// (key, count, first index), sorted by count desc, first index asc, key asc.
pub type Ranked<K> = Vec<(K, usize, usize)>;

fn tally<K: PartialEq + Clone>(items: impl IntoIterator<Item = (K, usize)>) -> Ranked<K> {
    let mut out: Ranked<K> = Vec::new();
    for (key, index) in items {
        match out.iter_mut().find(|(k, _, _)| *k == key) {
            Some(slot) => slot.1 += 1,
            None => out.push((key, 1, index)),
        }
    }
    out
}

fn rank<K: Ord + Clone>(mut items: Ranked<K>, k: usize, min_count: usize) -> Ranked<K> {
    items.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
    items.into_iter().filter(|x| x.1 >= min_count).take(k).collect()
}

fn category_of(pos: Upos, mapping: PosMapping) -> Option<ProfileCategory> {
    match pos {
        Upos::Noun => Some(ProfileCategory::Noun),
        Upos::Propn if mapping.include_propn => Some(ProfileCategory::Noun),
        Upos::Pron => Some(ProfileCategory::Pronoun),
        Upos::Adj => Some(ProfileCategory::Adjective),
        Upos::Cconj | Upos::Sconj => Some(ProfileCategory::Conjunction),
        Upos::Verb => Some(ProfileCategory::Verb),
        Upos::Aux if mapping.include_aux => Some(ProfileCategory::Verb),
        Upos::Adv => Some(ProfileCategory::Adverb),
        _ => None,
    }
}

pub fn fold(t: &Token) -> String {
    if t.is_marker() {
        t.surface().to_string()
    } else {
        t.surface().to_lowercase()
    }
}

/// Top-k vocabulary of one category, enumerated token by token.
pub fn oracle_vocab(tokens: &[Token], mapping: PosMapping, category: ProfileCategory, k: usize, min_count: usize) -> Ranked<String> {
    let items = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_marker() && category_of(t.pos(), mapping) == Some(category))
        .map(|(i, t)| (fold(t), i));
    rank(tally(items), k, min_count)
}

/// Every n-gram of order `n` inside each utterance, by window offset of its first token.
pub fn all_ngrams(segments: &[(usize, Vec<Token>)], n: usize, policy: MarkerPolicy) -> Vec<(Vec<String>, usize)> {
    let mut out = Vec::new();
    for (offset, seg) in segments {
        let kept: Vec<(usize, &Token)> = seg
            .iter()
            .enumerate()
            .filter(|(_, t)| !(policy == MarkerPolicy::DropToken && t.is_marker()))
            .map(|(i, t)| (offset + i, t))
            .collect();
        if kept.len() < n {
            continue;
        }
        for start in 0..=kept.len() - n {
            let gram = &kept[start..start + n];
            if policy == MarkerPolicy::ExcludeNgram && gram.iter().any(|(_, t)| t.is_marker()) {
                continue;
            }
            out.push((gram.iter().map(|(_, t)| fold(t)).collect(), gram[0].0));
        }
    }
    out
}

pub fn oracle_ngrams(segments: &[(usize, Vec<Token>)], n: usize, policy: MarkerPolicy, per_n: usize, min_count: usize) -> Ranked<Vec<String>> {
    rank(tally(all_ngrams(segments, n, policy)), per_n, min_count)
}

pub fn segments_of(w: &TokenWindow) -> Vec<(usize, Vec<Token>)> {
    w.segments().map(|(o, s)| (o, s.to_vec())).collect()
}

// ---------------------------------------------------------------------------
// Metric oracle

/// Distinct values, first-seen order.
fn distinct<K: PartialEq + Clone>(xs: &[K]) -> Vec<K> {
    let mut out: Vec<K> = Vec::new();
    for x in xs {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

pub fn oracle_recall<K: PartialEq + Clone>(p: &[K], e: &[K]) -> Option<f64> {
    let (p, e) = (distinct(p), distinct(e));
    if p.is_empty() {
        return None;
    }
    let hits = p.iter().filter(|x| e.contains(x)).count();
    Some(hits as f64 / p.len() as f64)
}

pub fn oracle_coverage<K: PartialEq + Clone>(p: &[K], e: &[K]) -> Option<f64> {
    let (p, e) = (distinct(p), distinct(e));
    if e.is_empty() {
        return None;
    }
    let hits = e.iter().filter(|x| p.contains(x)).count();
    Some(hits as f64 / e.len() as f64)
}

/// Σ pᵢeᵢ / (√Σpᵢ² √Σeᵢ²) over the explicit union of keys, entries with equal
/// keys summed first.
pub fn oracle_cosine<K: PartialEq + Clone>(p: &[(K, f64)], e: &[(K, f64)]) -> Option<f64> {
    let mut union: Vec<K> = Vec::new();
    for (k, _) in p.iter().chain(e) {
        if !union.contains(k) {
            union.push(k.clone());
        }
    }
    let weight = |v: &[(K, f64)], k: &K| v.iter().filter(|(x, _)| x == k).map(|(_, c)| *c).sum::<f64>();
    let (mut dot, mut pp, mut ee) = (0.0, 0.0, 0.0);
    for k in &union {
        let (a, b) = (weight(p, k), weight(e, k));
        dot += a * b;
        pp += a * a;
        ee += b * b;
    }
    if pp == 0.0 || ee == 0.0 {
        return None;
    }
    Some((dot / (pp.sqrt() * ee.sqrt())).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleScores {
    pub recall: Option<f64>,
    pub coverage: Option<f64>,
    pub cosine: Option<f64>,
}

/// Scores of every category, then every n-gram order, then the unweighted aggregate,
/// recomputed from the profile document and the window's raw tokens.
pub fn oracle_evaluate(p: &LexicalProfile, w: &TokenWindow, mode: MatchMode) -> Vec<OracleScores> {
    let mapping = PosMapping { include_aux: p.config.include_aux, include_propn: p.config.include_propn };
    let mut out = Vec::new();
    for category in ProfileCategory::ALL {
        let prof: Vec<(String, f64)> = p.vocab[&category]
            .iter()
            .map(|e| {
                let key = match mode {
                    MatchMode::Exact => e.surface.clone(),
                    MatchMode::Lemmatised => e.lemma.clone().unwrap().to_lowercase(),
                };
                (key, e.count as f64)
            })
            .collect();
        let win: Vec<(String, f64)> = w
            .tokens()
            .iter()
            .filter(|t| !t.is_marker() && category_of(t.pos(), mapping) == Some(category))
            .map(|t| {
                let key = match mode {
                    MatchMode::Exact => fold(t),
                    MatchMode::Lemmatised => t.lemma().unwrap().to_lowercase(),
                };
                (key, 1.0)
            })
            .collect();
        let pk: Vec<String> = prof.iter().map(|x| x.0.clone()).collect();
        let ek: Vec<String> = win.iter().map(|x| x.0.clone()).collect();
        out.push(OracleScores { recall: oracle_recall(&pk, &ek), coverage: oracle_coverage(&pk, &ek), cosine: oracle_cosine(&prof, &win) });
    }
    let segments = segments_of(w);
    for n in p.config.ngram_n_range.orders() {
        let key_of = |tokens: &[String], lemmas: Option<&Vec<String>>| -> Vec<String> {
            match mode {
                MatchMode::Exact => tokens.to_vec(),
                MatchMode::Lemmatised => lemmas.unwrap().iter().map(|l| l.to_lowercase()).collect(),
            }
        };
        let pk: Vec<Vec<String>> = p.ngrams[&n].iter().map(|e| key_of(&e.tokens, e.lemmas.as_ref())).collect();
        let ek: Vec<Vec<String>> = match mode {
            MatchMode::Exact => all_ngrams(&segments, n, p.config.marker_policy).into_iter().map(|g| g.0).collect(),
            MatchMode::Lemmatised => lemma_ngrams(&segments, n, p.config.marker_policy),
        };
        out.push(OracleScores { recall: oracle_recall(&pk, &ek), coverage: oracle_coverage(&pk, &ek), cosine: None });
    }
    let mean = |f: &dyn Fn(&OracleScores) -> Option<f64>, scores: &[OracleScores]| {
        let vals: Vec<f64> = scores.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let aggregate = OracleScores {
        recall: mean(&|s| s.recall, &out),
        coverage: mean(&|s| s.coverage, &out),
        cosine: mean(&|s| s.cosine, &out[..6]),
    };
    out.push(aggregate);
    out
}

/// Lower-cased lemma n-grams; markers stand for themselves.
fn lemma_ngrams(segments: &[(usize, Vec<Token>)], n: usize, policy: MarkerPolicy) -> Vec<Vec<String>> {
    let lemma_segments: Vec<(usize, Vec<Token>)> = segments
        .iter()
        .map(|(o, seg)| {
            let toks = seg
                .iter()
                .map(|t| if t.is_marker() { t.clone() } else { Token::word(t.lemma().unwrap(), None, t.pos()).unwrap() })
                .collect();
            (*o, toks)
        })
        .collect();
    all_ngrams(&lemma_segments, n, policy)
        .into_iter()
        .map(|(g, _)| g.into_iter().map(|s| s.to_lowercase()).collect())
        .collect()
}

pub fn default_range() -> NgramRange {
    NgramRange { min: 2, max: 5 }
}

/// Least-squares slope of `ys` over 0, 1, 2, ...
pub fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

pub fn population_std(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let m = ys.iter().sum::<f64>() / n;
    (ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / n).sqrt()
}

pub fn counts_of<K: Clone + Ord>(ranked: &Ranked<K>) -> BTreeMap<K, usize> {
    ranked.iter().map(|(k, c, _)| (k.clone(), *c)).collect()
}
