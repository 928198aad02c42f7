//! POS tagging and lemmatisation behind a small tagger abstraction, and the
//! mapping from UPOS tags onto the six profile categories.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{self, IngestError, Token, Transcript, Upos};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("cannot load lexicon {path}: {message}")]
    LexiconLoad { path: String, message: String },
    #[error("pass-through tagging requested but token `{surface}` has no POS tag")]
    PassthroughOnUntagged { surface: String },
    #[error("invalid tagger spec: {0}")]
    InvalidSpec(String),
    #[error("tagging bridge failed: {0}")]
    Bridge(String),
    #[error("tagging bridge output does not match the input at token {index}: expected `{expected}`, found `{found}`")]
    BridgeMismatch { index: usize, expected: String, found: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// The six word classes a profile is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProfileCategory {
    Noun,
    Pronoun,
    Adjective,
    Conjunction,
    Verb,
    Adverb,
}

impl ProfileCategory {
    pub const ALL: [ProfileCategory; 6] = [
        ProfileCategory::Noun,
        ProfileCategory::Pronoun,
        ProfileCategory::Adjective,
        ProfileCategory::Conjunction,
        ProfileCategory::Verb,
        ProfileCategory::Adverb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileCategory::Noun => "NOUN",
            ProfileCategory::Pronoun => "PRONOUN",
            ProfileCategory::Adjective => "ADJECTIVE",
            ProfileCategory::Conjunction => "CONJUNCTION",
            ProfileCategory::Verb => "VERB",
            ProfileCategory::Adverb => "ADVERB",
        }
    }
}

impl fmt::Display for ProfileCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown profile category `{s}`"))
    }
}

/// UPOS → profile category.
///
/// CCONJ and SCONJ both map to conjunctions; PROPN never maps; AUX maps to
/// verbs only when `include_aux` is set.
pub fn map_pos(upos: Upos, include_aux: bool) -> Option<ProfileCategory> {
    PosMapping { include_aux, include_propn: false }.map(upos)
}

/// Category mapping with the optional classes switched on or off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PosMapping {
    pub include_aux: bool,
    pub include_propn: bool,
}

impl PosMapping {
    pub fn map(self, upos: Upos) -> Option<ProfileCategory> {
        match upos {
            Upos::Noun => Some(ProfileCategory::Noun),
            Upos::Propn if self.include_propn => Some(ProfileCategory::Noun),
            Upos::Pron => Some(ProfileCategory::Pronoun),
            Upos::Adj => Some(ProfileCategory::Adjective),
            Upos::Cconj | Upos::Sconj => Some(ProfileCategory::Conjunction),
            Upos::Verb => Some(ProfileCategory::Verb),
            Upos::Aux if self.include_aux => Some(ProfileCategory::Verb),
            Upos::Adv => Some(ProfileCategory::Adverb),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaggerKind {
    /// Input already carries tags (CoNLL-U); verify and keep.
    PretaggedPassthrough,
    /// Word list lookup with suffix fallback. Meant for tests and small demos.
    BuiltinLexicon,
    /// Round-trip through an external `tagbridge`-style program producing CoNLL-U.
    ExternalConllu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerSpec {
    pub kind: TaggerKind,
    pub lexicon_path: Option<PathBuf>,
    /// Program invoked for `ExternalConllu`; `tagbridge` when unset.
    #[serde(default)]
    pub bridge_program: Option<String>,
    /// Model identifier passed to the bridge.
    #[serde(default)]
    pub bridge_model: Option<String>,
}

impl TaggerSpec {
    pub fn passthrough() -> TaggerSpec {
        TaggerSpec { kind: TaggerKind::PretaggedPassthrough, lexicon_path: None, bridge_program: None, bridge_model: None }
    }

    pub fn lexicon(path: impl Into<PathBuf>) -> TaggerSpec {
        TaggerSpec { kind: TaggerKind::BuiltinLexicon, lexicon_path: Some(path.into()), bridge_program: None, bridge_model: None }
    }

    pub fn external(program: impl Into<String>, model: Option<String>) -> TaggerSpec {
        TaggerSpec {
            kind: TaggerKind::ExternalConllu,
            lexicon_path: None,
            bridge_program: Some(program.into()),
            bridge_model: model,
        }
    }

    pub fn validate(&self) -> Result<(), AnnotateError> {
        match (self.kind, &self.lexicon_path) {
            (TaggerKind::BuiltinLexicon, None) => Err(AnnotateError::InvalidSpec("builtin lexicon tagger needs a lexicon path".into())),
            (TaggerKind::BuiltinLexicon, Some(_)) => Ok(()),
            (_, Some(_)) => Err(AnnotateError::InvalidSpec("a lexicon path is only valid for the builtin lexicon tagger".into())),
            (_, None) => Ok(()),
        }
    }
}

/// Word → (UPOS, lemma) table loaded from `surface<TAB>UPOS<TAB>lemma` lines.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, (Upos, String)>,
}

/// Suffix fallback for words missing from the lexicon: (suffix, tag, minimum stem length).
const SUFFIX_RULES: &[(&str, Upos, usize)] = &[
    ("heid", Upos::Noun, 2),
    ("ing", Upos::Noun, 3),
    ("tje", Upos::Noun, 2),
    ("schap", Upos::Noun, 2),
    ("lijk", Upos::Adj, 2),
    ("isch", Upos::Adj, 2),
    ("baar", Upos::Adj, 2),
    ("ig", Upos::Adj, 3),
    ("erwijs", Upos::Adv, 2),
];

impl Lexicon {
    pub fn load(path: &Path) -> Result<Lexicon, AnnotateError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AnnotateError::LexiconLoad { path: path.display().to_string(), message: e.to_string() })?;
        Lexicon::parse(&text).map_err(|message| AnnotateError::LexiconLoad { path: path.display().to_string(), message })
    }

    /// Later duplicates of a surface are ignored.
    pub fn parse(text: &str) -> Result<Lexicon, String> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [surface, upos, lemma] = cols[..] else {
                return Err(format!("line {}: expected surface<TAB>UPOS<TAB>lemma", idx + 1));
            };
            if surface.is_empty() || lemma.is_empty() {
                return Err(format!("line {}: empty surface or lemma", idx + 1));
            }
            let upos: Upos = upos.parse().map_err(|_| format!("line {}: invalid UPOS `{upos}`", idx + 1))?;
            entries.entry(surface.to_string()).or_insert((upos, lemma.to_string()));
        }
        Ok(Lexicon { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact match, then lower-cased match, then suffix rules, then `X`.
    pub fn lookup(&self, surface: &str) -> (Upos, String) {
        if let Some((upos, lemma)) = self.entries.get(surface) {
            return (*upos, lemma.clone());
        }
        let folded = surface.to_lowercase();
        if let Some((upos, lemma)) = self.entries.get(&folded) {
            return (*upos, lemma.clone());
        }
        for &(suffix, upos, min_stem) in SUFFIX_RULES {
            if let Some(stem) = folded.strip_suffix(suffix) {
                if stem.chars().count() >= min_stem {
                    return (upos, folded);
                }
            }
        }
        (Upos::X, surface.to_string())
    }

    /// Tags every untagged word; already tagged words and markers are kept.
    pub fn tag(&self, t: &Transcript) -> Transcript {
        map_tokens(t, |tok| {
            if tok.is_marker() || tok.pos() != Upos::X {
                tok.clone()
            } else {
                let (upos, lemma) = self.lookup(tok.surface());
                tok.annotated(upos, lemma)
            }
        })
    }
}

fn map_tokens(t: &Transcript, mut f: impl FnMut(&Token) -> Token) -> Transcript {
    let utterances = t.utterances().iter().map(|u| u.with_tokens(u.tokens().iter().map(&mut f).collect())).collect();
    t.with_utterances(utterances)
}

pub fn tag_transcript(t: &Transcript, spec: &TaggerSpec) -> Result<Transcript, AnnotateError> {
    spec.validate()?;
    match spec.kind {
        TaggerKind::PretaggedPassthrough => {
            if let Some(tok) = t.tokens().find(|tok| !tok.is_marker() && tok.pos() == Upos::X) {
                return Err(AnnotateError::PassthroughOnUntagged { surface: tok.surface().to_string() });
            }
            Ok(t.clone())
        }
        TaggerKind::BuiltinLexicon => {
            let path = spec.lexicon_path.as_deref().expect("validated");
            Ok(Lexicon::load(path)?.tag(t))
        }
        TaggerKind::ExternalConllu => tag_with_bridge(t, spec),
    }
}

/// Writes the transcript in the raw format, runs
/// `<program> --input raw.txt --output out.conllu [--model <id>]`, and copies
/// tags and lemmas back onto the original tokens position by position.
fn tag_with_bridge(t: &Transcript, spec: &TaggerSpec) -> Result<Transcript, AnnotateError> {
    let program = spec.bridge_program.clone().unwrap_or_else(|| "tagbridge".to_string());
    let dir = tempfile::tempdir().map_err(|e| AnnotateError::Bridge(e.to_string()))?;
    let input = dir.path().join("input.txt");
    let output = dir.path().join("output.conllu");
    fs::write(&input, ingest::write_raw(t)?).map_err(|e| AnnotateError::Bridge(e.to_string()))?;

    let mut cmd = Command::new(&program);
    cmd.arg("--input").arg(&input).arg("--output").arg(&output);
    if let Some(model) = &spec.bridge_model {
        cmd.arg("--model").arg(model);
    }
    let result = cmd.output().map_err(|e| AnnotateError::Bridge(format!("cannot run `{program}`: {e}")))?;
    if !result.status.success() {
        let stderr = String::from_utf8_lossy(&result.stderr);
        return Err(AnnotateError::Bridge(format!("`{program}` exited with {}: {}", result.status, stderr.trim())));
    }
    let text = fs::read_to_string(&output).map_err(|e| AnnotateError::Bridge(format!("cannot read bridge output: {e}")))?;
    let tagged = ingest::parse_conllu(&text)?;

    let mut annotated = tagged.tokens();
    let mut index = 0;
    let mut mismatch = None;
    let out = map_tokens(t, |tok| {
        let found = annotated.next();
        if mismatch.is_none() {
            match found {
                Some(other) if other.surface() == tok.surface() => {}
                other => {
                    mismatch = Some(AnnotateError::BridgeMismatch {
                        index,
                        expected: tok.surface().to_string(),
                        found: other.map_or_else(|| "<end of output>".to_string(), |o| o.surface().to_string()),
                    })
                }
            }
        }
        index += 1;
        match found {
            Some(other) if !tok.is_marker() && other.surface() == tok.surface() => {
                tok.annotated(other.pos(), other.lemma_or_surface().to_string())
            }
            _ => tok.clone(),
        }
    });
    if let Some(err) = mismatch {
        return Err(err);
    }
    if let Some(extra) = annotated.next() {
        return Err(AnnotateError::BridgeMismatch { index, expected: "<end of input>".into(), found: extra.surface().to_string() });
    }
    let mut out = out;
    for (k, v) in tagged.meta() {
        out.meta_mut().entry(k.clone()).or_insert_with(|| v.clone());
    }
    Ok(out)
}
