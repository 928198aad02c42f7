//! Transcript model, raw-transcript and CoNLL-U readers, and time slicing.
//!
//! Raw transcripts look like this:
//!
//! ```text
//! #speaker-id: vet017
//! [00:00:00]
//! INT: hoe was dat toen?
//! SPK: ik was ... daar in de wo- woning
//! [00:05:00]
//! SPK: en toen ...
//! ```
//!
//! Ellipses ("..." or U+2026) become `PAUSE` tokens and a word-final or
//! standalone hyphen becomes a `BREAK` token after the stripped word. Every
//! content line takes the time of the closest time marker above it. A trailing
//! marker with no content below it marks the end of the recording.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAUSE: &str = "PAUSE";
pub const BREAK: &str = "BREAK";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: malformed time marker `{text}`")]
    MalformedTimeMarker { line: usize, text: String },
    #[error("line {line}: content line without `INT:` or `SPK:` prefix")]
    MissingSpeakerPrefix { line: usize },
    #[error("line {line}: time {current}s is earlier than preceding time {previous}s")]
    NonMonotonicTime { line: usize, previous: f64, current: f64 },
    #[error("line {line}: sentence is missing `# {key} = ...` metadata")]
    MissingMetadata { line: usize, key: &'static str },
    #[error("line {line}: invalid UPOS tag `{tag}`")]
    InvalidUpos { line: usize, tag: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid span [{start}, {end})")]
    InvalidSpan { start: f64, end: f64 },
    #[error("{0}")]
    Invariant(String),
}

/// Universal POS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Upos {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Upos::ALL.iter().copied().find(|u| u.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Marker {
    None,
    Pause,
    Break,
}

impl Marker {
    fn surface(self) -> Option<&'static str> {
        match self {
            Marker::None => None,
            Marker::Pause => Some(PAUSE),
            Marker::Break => Some(BREAK),
        }
    }

    fn from_surface(s: &str) -> Marker {
        match s {
            PAUSE => Marker::Pause,
            BREAK => Marker::Break,
            _ => Marker::None,
        }
    }
}

/// One transcribed word or transcription marker.
///
/// A token is a marker exactly when its surface is `PAUSE` or `BREAK` and its
/// tag is `X`. Untagged words carry tag `X` and no lemma; [`Token::lemma_or_surface`]
/// falls back to the surface for them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    surface: String,
    lemma: Option<String>,
    pos: Upos,
    marker: Marker,
}

impl Token {
    pub fn word(surface: impl Into<String>, lemma: Option<String>, pos: Upos) -> Result<Token, IngestError> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(IngestError::Invariant("token surface is empty".into()));
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(IngestError::Invariant(format!("token surface `{surface}` contains whitespace")));
        }
        let marker = if pos == Upos::X { Marker::from_surface(&surface) } else { Marker::None };
        if marker != Marker::None {
            return Ok(Token::marker(marker));
        }
        Ok(Token { surface, lemma, pos, marker })
    }

    pub fn untagged(surface: impl Into<String>) -> Result<Token, IngestError> {
        Token::word(surface, None, Upos::X)
    }

    /// A `PAUSE` or `BREAK` token. Panics on `Marker::None`.
    pub fn marker(marker: Marker) -> Token {
        let surface = marker.surface().expect("Marker::None is not a marker token");
        Token { surface: surface.to_string(), lemma: Some(surface.to_string()), pos: Upos::X, marker }
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn lemma(&self) -> Option<&str> {
        self.lemma.as_deref()
    }

    pub fn lemma_or_surface(&self) -> &str {
        self.lemma.as_deref().unwrap_or(&self.surface)
    }

    pub fn pos(&self) -> Upos {
        self.pos
    }

    pub fn marker_kind(&self) -> Marker {
        self.marker
    }

    pub fn is_marker(&self) -> bool {
        self.marker != Marker::None
    }

    /// Same surface with a new tag and lemma. Markers are returned unchanged.
    pub fn annotated(&self, pos: Upos, lemma: String) -> Token {
        if self.is_marker() {
            return self.clone();
        }
        Token { surface: self.surface.clone(), lemma: Some(lemma), pos, marker: Marker::None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SpeakerRole {
    Interviewee,
    Interviewer,
    Other,
}

impl SpeakerRole {
    /// Speaker code used in both file formats.
    pub fn code(self) -> &'static str {
        match self {
            SpeakerRole::Interviewee => "SPK",
            SpeakerRole::Interviewer => "INT",
            SpeakerRole::Other => "OTH",
        }
    }

    pub fn from_code(code: &str) -> Option<SpeakerRole> {
        match code {
            "SPK" => Some(SpeakerRole::Interviewee),
            "INT" => Some(SpeakerRole::Interviewer),
            "OTH" => Some(SpeakerRole::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    role: SpeakerRole,
    start_time: f64,
    tokens: Vec<Token>,
}

impl Utterance {
    pub fn new(role: SpeakerRole, start_time: f64, tokens: Vec<Token>) -> Result<Utterance, IngestError> {
        if tokens.is_empty() {
            return Err(IngestError::Invariant("utterance has no tokens".into()));
        }
        if !start_time.is_finite() || start_time < 0.0 {
            return Err(IngestError::Invariant(format!("utterance start time {start_time} is not a finite non-negative number")));
        }
        Ok(Utterance { role, start_time, tokens })
    }

    pub fn role(&self) -> SpeakerRole {
        self.role
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Same role and timing, replaced tokens. The token count must not change.
    pub(crate) fn with_tokens(&self, tokens: Vec<Token>) -> Utterance {
        debug_assert_eq!(tokens.len(), self.tokens.len());
        Utterance { role: self.role, start_time: self.start_time, tokens }
    }
}

/// One transcribed interview.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    speaker_id: String,
    utterances: Vec<Utterance>,
    duration: f64,
    meta: BTreeMap<String, String>,
}

impl Transcript {
    pub fn new(speaker_id: impl Into<String>, utterances: Vec<Utterance>, duration: f64) -> Result<Transcript, IngestError> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(IngestError::Invariant(format!("duration {duration} is not a finite non-negative number")));
        }
        let mut previous = 0.0;
        for u in &utterances {
            if u.start_time < previous {
                return Err(IngestError::Invariant(format!(
                    "utterance start times decrease ({previous} then {})",
                    u.start_time
                )));
            }
            previous = u.start_time;
        }
        if duration < previous {
            return Err(IngestError::Invariant(format!("duration {duration} is before the last utterance at {previous}")));
        }
        Ok(Transcript { speaker_id: speaker_id.into(), utterances, duration, meta: BTreeMap::new() })
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn set_speaker_id(&mut self, id: impl Into<String>) {
        self.speaker_id = id.into();
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Free-form document metadata (`# key = value` comments in CoNLL-U).
    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.meta
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.utterances.iter().flat_map(|u| u.tokens.iter())
    }

    pub(crate) fn with_utterances(&self, utterances: Vec<Utterance>) -> Transcript {
        Transcript { speaker_id: self.speaker_id.clone(), utterances, duration: self.duration, meta: self.meta.clone() }
    }
}

/// Half-open time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start_s: f64,
    pub end_s: f64,
}

impl Span {
    pub fn new(start_s: f64, end_s: f64) -> Result<Span, IngestError> {
        if !(start_s.is_finite() && end_s.is_finite()) || start_s < 0.0 || start_s >= end_s {
            return Err(IngestError::InvalidSpan { start: start_s, end: end_s });
        }
        Ok(Span { start_s, end_s })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }
}

/// Tokens of one speaker role within a time span, with utterance boundaries kept.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenWindow {
    pub speaker_id: String,
    pub span: Span,
    tokens: Vec<Token>,
    utterance_starts: Vec<usize>,
}

impl TokenWindow {
    pub fn new(speaker_id: impl Into<String>, span: Span) -> TokenWindow {
        TokenWindow { speaker_id: speaker_id.into(), span, tokens: Vec::new(), utterance_starts: Vec::new() }
    }

    /// Appends one utterance worth of tokens. Empty slices are ignored.
    pub fn push_utterance(&mut self, tokens: &[Token]) {
        if tokens.is_empty() {
            return;
        }
        self.utterance_starts.push(self.tokens.len());
        self.tokens.extend_from_slice(tokens);
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Per-utterance token runs paired with the window offset of their first token.
    pub fn segments(&self) -> impl Iterator<Item = (usize, &[Token])> {
        self.utterance_starts.iter().enumerate().map(move |(i, &start)| {
            let end = self.utterance_starts.get(i + 1).copied().unwrap_or(self.tokens.len());
            (start, &self.tokens[start..end])
        })
    }
}

/// Tokens of `role` from utterances starting in `[start_s, end_s)`.
pub fn slice(t: &Transcript, start_s: f64, end_s: f64, role: SpeakerRole) -> Result<TokenWindow, IngestError> {
    let span = Span::new(start_s, end_s)?;
    let mut window = TokenWindow::new(t.speaker_id.clone(), span);
    for u in t.utterances.iter().filter(|u| u.role == role && span.contains(u.start_time)) {
        window.push_utterance(&u.tokens);
    }
    Ok(window)
}

// ---------------------------------------------------------------------------
// Raw transcript format

const HEADER_PREFIX: &str = "#speaker-id:";

/// Parses the raw transcript format into an untagged transcript.
pub fn parse_raw_transcript(text: &str) -> Result<Transcript, IngestError> {
    let mut speaker_id = String::new();
    let mut utterances = Vec::new();
    let mut current_time: f64 = 0.0;
    let mut seen_content = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix(HEADER_PREFIX) {
            if seen_content {
                return Err(IngestError::Parse { line: line_no, message: "speaker-id header must be the first line".into() });
            }
            speaker_id = id.trim().to_string();
            seen_content = true;
            continue;
        }
        seen_content = true;
        if line.starts_with('[') {
            let t = parse_time_marker(line).ok_or_else(|| IngestError::MalformedTimeMarker { line: line_no, text: line.to_string() })?;
            if t < current_time {
                return Err(IngestError::NonMonotonicTime { line: line_no, previous: current_time, current: t });
            }
            current_time = t;
            continue;
        }
        let (role, content) = split_speaker_prefix(line).ok_or(IngestError::MissingSpeakerPrefix { line: line_no })?;
        let tokens = tokenize_raw(content);
        if tokens.is_empty() {
            continue;
        }
        utterances.push(Utterance::new(role, current_time, tokens)?);
    }

    Transcript::new(speaker_id, utterances, current_time)
}

/// `[HH:MM:SS]` to seconds.
fn parse_time_marker(line: &str) -> Option<f64> {
    let inner = line.strip_prefix('[')?.strip_suffix(']')?;
    let parts: Vec<&str> = inner.split(':').collect();
    if parts.len() != 3 || parts.iter().any(|p| p.len() != 2 || !p.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let h: u32 = parts[0].parse().ok()?;
    let m: u32 = parts[1].parse().ok()?;
    let s: u32 = parts[2].parse().ok()?;
    if m >= 60 || s >= 60 {
        return None;
    }
    Some(f64::from(h * 3600 + m * 60 + s))
}

fn split_speaker_prefix(line: &str) -> Option<(SpeakerRole, &str)> {
    let (code, rest) = line.split_once(':')?;
    match code {
        "INT" => Some((SpeakerRole::Interviewer, rest.trim())),
        "SPK" => Some((SpeakerRole::Interviewee, rest.trim())),
        _ => None,
    }
}

const LEADING_PUNCT: &[char] = &['"', '(', '\u{201C}'];
const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', ')', '\u{201D}'];

/// Whitespace tokenisation with punctuation split off and PAUSE/BREAK substitution.
fn tokenize_raw(content: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in content.split_whitespace() {
        for piece in split_ellipses(chunk) {
            match piece {
                Piece::Pause => out.push(Token::marker(Marker::Pause)),
                Piece::Text(text) => push_word_with_punct(text, &mut out),
            }
        }
    }
    out
}

enum Piece<'a> {
    Pause,
    Text(&'a str),
}

/// Splits on runs of three or more ASCII dots and on U+2026.
fn split_ellipses(chunk: &str) -> Vec<Piece<'_>> {
    let mut pieces = Vec::new();
    let bytes = chunk.as_bytes();
    let mut text_start = 0;
    let mut i = 0;
    while i < chunk.len() {
        if chunk[i..].starts_with('\u{2026}') {
            if text_start < i {
                pieces.push(Piece::Text(&chunk[text_start..i]));
            }
            let mut j = i;
            while chunk[j..].starts_with('\u{2026}') {
                j += '\u{2026}'.len_utf8();
            }
            pieces.push(Piece::Pause);
            i = j;
            text_start = j;
        } else if bytes[i] == b'.' {
            let mut j = i;
            while j < bytes.len() && bytes[j] == b'.' {
                j += 1;
            }
            if j - i >= 3 {
                if text_start < i {
                    pieces.push(Piece::Text(&chunk[text_start..i]));
                }
                pieces.push(Piece::Pause);
                text_start = j;
            }
            i = j;
        } else {
            i += chunk[i..].chars().next().map_or(1, char::len_utf8);
        }
    }
    if text_start < chunk.len() {
        pieces.push(Piece::Text(&chunk[text_start..]));
    }
    pieces
}

fn push_word_with_punct(text: &str, out: &mut Vec<Token>) {
    let mut rest = text;
    while let Some(c) = rest.chars().next().filter(|c| LEADING_PUNCT.contains(c)) {
        out.push(Token::untagged(c.to_string()).expect("punctuation is non-empty"));
        rest = &rest[c.len_utf8()..];
    }
    // Peel punctuation and hyphen runs off the end in any order: "a.-" is a, ., BREAK.
    let mut trailing = Vec::new();
    loop {
        match rest.chars().next_back() {
            Some(c) if TRAILING_PUNCT.contains(&c) => {
                trailing.push(Token::untagged(c.to_string()).expect("punctuation is non-empty"));
                rest = &rest[..rest.len() - c.len_utf8()];
            }
            Some('-') => {
                trailing.push(Token::marker(Marker::Break));
                rest = rest.trim_end_matches('-');
            }
            _ => break,
        }
    }
    if !rest.is_empty() {
        push_plain_word(rest, out);
    }
    out.extend(trailing.into_iter().rev());
}

fn push_plain_word(word: &str, out: &mut Vec<Token>) {
    out.push(Token::untagged(word).expect("non-empty whitespace-free word"));
}

/// Renders a transcript in the raw format, markers as literal `PAUSE`/`BREAK`.
///
/// Times are truncated to whole seconds; utterances with the `Other` role cannot
/// be represented and are rejected.
pub fn write_raw(t: &Transcript) -> Result<String, IngestError> {
    let mut out = String::new();
    if !t.speaker_id.is_empty() {
        let _ = writeln!(out, "{HEADER_PREFIX} {}", t.speaker_id);
    }
    let mut last_marker: Option<u64> = None;
    for u in &t.utterances {
        let code = match u.role {
            SpeakerRole::Interviewee => "SPK",
            SpeakerRole::Interviewer => "INT",
            SpeakerRole::Other => {
                return Err(IngestError::Invariant("the raw format has no code for the OTHER role".into()));
            }
        };
        let secs = u.start_time.floor() as u64;
        if last_marker != Some(secs) {
            let _ = writeln!(out, "{}", format_time_marker(secs));
            last_marker = Some(secs);
        }
        let words: Vec<&str> = u.tokens.iter().map(Token::surface).collect();
        let _ = writeln!(out, "{code}: {}", words.join(" "));
    }
    let end = t.duration.floor() as u64;
    if last_marker.is_none_or(|m| m < end) {
        let _ = writeln!(out, "{}", format_time_marker(end));
    }
    Ok(out)
}

fn format_time_marker(secs: u64) -> String {
    format!("[{:02}:{:02}:{:02}]", secs / 3600, (secs / 60) % 60, secs % 60)
}

// ---------------------------------------------------------------------------
// CoNLL-U

const KEY_SPEAKER: &str = "speaker";
const KEY_START: &str = "start_time";
const KEY_DOC_ID: &str = "newdoc id";
const KEY_DURATION: &str = "duration";
const SENTENCE_KEYS: &[&str] = &[KEY_SPEAKER, KEY_START, "sent_id", "text"];

#[derive(Default)]
struct SentenceBuf {
    first_line: usize,
    speaker: Option<SpeakerRole>,
    start_time: Option<f64>,
    tokens: Vec<Token>,
    has_content: bool,
}

/// Parses a CoNLL-U document with one interview, one sentence per utterance.
///
/// Sentences need `# speaker = INT|SPK|OTH` and `# start_time = <seconds>`.
/// `# newdoc id` sets the speaker id and `# duration` the recording length
/// (defaults to the last start time). Other `key = value` comments become
/// document metadata. Multiword-token ranges and empty nodes are skipped.
pub fn parse_conllu(text: &str) -> Result<Transcript, IngestError> {
    let mut speaker_id = String::new();
    let mut duration: Option<f64> = None;
    let mut meta = BTreeMap::new();
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut buf = SentenceBuf::default();

    let flush = |buf: &mut SentenceBuf, utterances: &mut Vec<Utterance>| -> Result<(), IngestError> {
        let taken = std::mem::take(buf);
        if taken.tokens.is_empty() {
            if taken.speaker.is_some() || taken.start_time.is_some() {
                return Err(IngestError::Parse { line: taken.first_line, message: "sentence has no token lines".into() });
            }
            return Ok(());
        }
        let role = taken.speaker.ok_or(IngestError::MissingMetadata { line: taken.first_line, key: KEY_SPEAKER })?;
        let start = taken.start_time.ok_or(IngestError::MissingMetadata { line: taken.first_line, key: KEY_START })?;
        if let Some(prev) = utterances.last() {
            if start < prev.start_time {
                return Err(IngestError::NonMonotonicTime { line: taken.first_line, previous: prev.start_time, current: start });
            }
        }
        utterances.push(Utterance::new(role, start, taken.tokens)?);
        Ok(())
    };

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut buf, &mut utterances)?;
            continue;
        }
        if !buf.has_content {
            buf.first_line = line_no;
            buf.has_content = true;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            match key {
                KEY_SPEAKER => {
                    let role = SpeakerRole::from_code(value).ok_or_else(|| IngestError::Parse {
                        line: line_no,
                        message: format!("unknown speaker code `{value}`"),
                    })?;
                    buf.speaker = Some(role);
                }
                KEY_START => buf.start_time = Some(parse_seconds(value, line_no)?),
                KEY_DOC_ID => speaker_id = value.to_string(),
                KEY_DURATION => duration = Some(parse_seconds(value, line_no)?),
                k if SENTENCE_KEYS.contains(&k) => {}
                k => {
                    meta.entry(k.to_string()).or_insert_with(|| value.to_string());
                }
            }
            continue;
        }
        if let Some(token) = parse_token_line(line, line_no)? {
            buf.tokens.push(token);
        }
    }
    flush(&mut buf, &mut utterances)?;

    let last = utterances.last().map_or(0.0, |u| u.start_time);
    let mut t = Transcript::new(speaker_id, utterances, duration.unwrap_or(last))?;
    t.meta = meta;
    Ok(t)
}

fn parse_seconds(value: &str, line: usize) -> Result<f64, IngestError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(IngestError::Parse { line, message: format!("`{value}` is not a non-negative number of seconds") }),
    }
}

fn parse_token_line(line: &str, line_no: usize) -> Result<Option<Token>, IngestError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(IngestError::Parse { line: line_no, message: format!("expected 10 tab-separated columns, found {}", cols.len()) });
    }
    let id = cols[0];
    if id.contains('-') || id.contains('.') {
        return Ok(None);
    }
    if id.parse::<u32>().is_err() {
        return Err(IngestError::Parse { line: line_no, message: format!("invalid token id `{id}`") });
    }
    let form = cols[1];
    if form.is_empty() || form.chars().any(char::is_whitespace) {
        return Err(IngestError::Parse { line: line_no, message: "empty or whitespace-containing FORM".into() });
    }
    let lemma = match cols[2] {
        "_" if form != "_" => None,
        "" => None,
        l => Some(l.to_string()),
    };
    let pos = match cols[3] {
        "_" => Upos::X,
        tag => tag.parse().map_err(|_| IngestError::InvalidUpos { line: line_no, tag: tag.to_string() })?,
    };
    let marker = cols[9]
        .split('|')
        .filter_map(|kv| kv.strip_prefix("Marker="))
        .next()
        .map(|v| match v {
            "Pause" => Ok(Marker::Pause),
            "Break" => Ok(Marker::Break),
            other => Err(IngestError::Parse { line: line_no, message: format!("unknown marker `{other}`") }),
        })
        .transpose()?;
    match marker {
        Some(m) => {
            if Some(form) != m.surface() || pos != Upos::X {
                return Err(IngestError::Parse {
                    line: line_no,
                    message: format!("marker token must have FORM {} and UPOS X", m.surface().unwrap_or_default()),
                });
            }
            Ok(Some(Token::marker(m)))
        }
        None => Token::word(form, lemma, pos).map(Some).map_err(|e| IngestError::Parse { line: line_no, message: e.to_string() }),
    }
}

/// Serialises a transcript to CoNLL-U. [`parse_conllu`] reads it back unchanged.
pub fn write_conllu(t: &Transcript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {KEY_DOC_ID} = {}", t.speaker_id);
    let _ = writeln!(out, "# {KEY_DURATION} = {}", t.duration);
    for (k, v) in &t.meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    if t.utterances.is_empty() {
        out.push('\n');
    }
    for (i, u) in t.utterances.iter().enumerate() {
        let _ = writeln!(out, "# sent_id = {}", i + 1);
        let _ = writeln!(out, "# {KEY_SPEAKER} = {}", u.role.code());
        let _ = writeln!(out, "# {KEY_START} = {}", u.start_time);
        let text: Vec<&str> = u.tokens.iter().map(Token::surface).collect();
        let _ = writeln!(out, "# text = {}", text.join(" "));
        for (j, tok) in u.tokens.iter().enumerate() {
            let misc = match tok.marker {
                Marker::None => "_",
                Marker::Pause => "Marker=Pause",
                Marker::Break => "Marker=Break",
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t_\t_\t_\t{}",
                j + 1,
                tok.surface,
                tok.lemma.as_deref().unwrap_or("_"),
                tok.pos,
                misc
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(t: &Transcript) -> Vec<&str> {
        t.tokens().map(Token::surface).collect()
    }

    #[test]
    fn ellipsis_becomes_pause_and_inherits_marker_time() {
        let t = parse_raw_transcript("[00:05:00]\nSPK: ik was ... daar\n").unwrap();
        assert_eq!(surfaces(&t), ["ik", "was", "PAUSE", "daar"]);
        assert_eq!(t.utterances()[0].start_time(), 300.0);
        assert!(t.tokens().nth(2).unwrap().is_marker());
        assert_eq!(t.duration(), 300.0);
    }

    #[test]
    fn word_final_hyphen_becomes_break() {
        let t = parse_raw_transcript("SPK: de wo- woning").unwrap();
        assert_eq!(surfaces(&t), ["de", "wo", "BREAK", "woning"]);
        assert_eq!(t.tokens().nth(2).unwrap().marker_kind(), Marker::Break);
    }

    #[test]
    fn standalone_hyphen_and_unicode_ellipsis() {
        let t = parse_raw_transcript("SPK: ja - nou\u{2026}goed").unwrap();
        assert_eq!(surfaces(&t), ["ja", "BREAK", "nou", "PAUSE", "goed"]);
    }

    #[test]
    fn mid_word_hyphen_is_left_intact() {
        let t = parse_raw_transcript("SPK: wo-ning").unwrap();
        assert_eq!(surfaces(&t), ["wo-ning"]);
    }

    #[test]
    fn punctuation_is_split_off() {
        let t = parse_raw_transcript("INT: hoe was dat, toen?").unwrap();
        assert_eq!(surfaces(&t), ["hoe", "was", "dat", ",", "toen", "?"]);
        let t = parse_raw_transcript("SPK: daar...").unwrap();
        assert_eq!(surfaces(&t), ["daar", "PAUSE"]);
    }

    #[test]
    fn punctuation_and_break_in_either_order() {
        let t = parse_raw_transcript("SPK: wo.- (huis-) ja--").unwrap();
        assert_eq!(surfaces(&t), ["wo", ".", "BREAK", "(", "huis", "BREAK", ")", "ja", "BREAK"]);
    }

    #[test]
    fn empty_document() {
        let t = parse_raw_transcript("").unwrap();
        assert!(t.utterances().is_empty());
        assert_eq!(t.duration(), 0.0);
    }

    #[test]
    fn header_and_roles() {
        let t = parse_raw_transcript("#speaker-id: vet01\n[00:00:00]\nINT: vraag\nSPK: antwoord\n[00:10:00]\n").unwrap();
        assert_eq!(t.speaker_id(), "vet01");
        assert_eq!(t.utterances()[0].role(), SpeakerRole::Interviewer);
        assert_eq!(t.utterances()[1].role(), SpeakerRole::Interviewee);
        assert_eq!(t.duration(), 600.0);
    }

    #[test]
    fn raw_errors() {
        assert!(matches!(parse_raw_transcript("[00:5:00]\n"), Err(IngestError::MalformedTimeMarker { line: 1, .. })));
        assert!(matches!(parse_raw_transcript("[00:61:00]\n"), Err(IngestError::MalformedTimeMarker { .. })));
        assert!(matches!(parse_raw_transcript("hallo daar\n"), Err(IngestError::MissingSpeakerPrefix { line: 1 })));
        assert!(matches!(parse_raw_transcript("XYZ: hallo\n"), Err(IngestError::MissingSpeakerPrefix { .. })));
        assert!(matches!(
            parse_raw_transcript("[00:10:00]\nSPK: a\n[00:05:00]\n"),
            Err(IngestError::NonMonotonicTime { line: 3, .. })
        ));
    }

    const CONLLU: &str = "# speaker = SPK\n# start_time = 312.5\n\
1\tik\tik\tPRON\t_\t_\t_\t_\t_\t_\n\
2\tPAUSE\tPAUSE\tX\t_\t_\t_\t_\t_\tMarker=Pause\n\
3\tliep\tlopen\tVERB\t_\t_\t_\t_\t_\tSpaceAfter=No\n\n";

    #[test]
    fn conllu_sentence_to_utterance() {
        let t = parse_conllu(CONLLU).unwrap();
        let u = &t.utterances()[0];
        assert_eq!(u.start_time(), 312.5);
        assert_eq!(u.tokens().len(), 3);
        assert_eq!(u.tokens()[1].marker_kind(), Marker::Pause);
        assert_eq!(u.tokens()[2].lemma(), Some("lopen"));
        assert_eq!(u.tokens()[2].pos(), Upos::Verb);
    }

    #[test]
    fn conllu_errors() {
        let decreasing = "# speaker = SPK\n# start_time = 600\n1\ta\ta\tX\t_\t_\t_\t_\t_\t_\n\n\
# speaker = SPK\n# start_time = 300\n1\tb\tb\tX\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(parse_conllu(decreasing), Err(IngestError::NonMonotonicTime { line: 5, .. })));
        let no_time = "# speaker = SPK\n1\ta\ta\tX\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(parse_conllu(no_time), Err(IngestError::MissingMetadata { key: "start_time", .. })));
        let bad_upos = "# speaker = SPK\n# start_time = 0\n1\ta\ta\tNOUNS\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(parse_conllu(bad_upos), Err(IngestError::InvalidUpos { line: 3, .. })));
        let short = "# speaker = SPK\n# start_time = 0\n1\ta\ta\n";
        assert!(matches!(parse_conllu(short), Err(IngestError::Parse { line: 3, .. })));
    }

    #[test]
    fn conllu_skips_multiword_ranges_and_keeps_meta() {
        let doc = "# newdoc id = s7\n# tagger = nl-pipeline 3.7\n# speaker = SPK\n# start_time = 0\n\
1-2\tzo'n\t_\t_\t_\t_\t_\t_\t_\t_\n1\tzo\tzo\tADV\t_\t_\t_\t_\t_\t_\n2\teen\teen\tDET\t_\t_\t_\t_\t_\t_\n";
        let t = parse_conllu(doc).unwrap();
        assert_eq!(t.speaker_id(), "s7");
        assert_eq!(t.meta().get("tagger").map(String::as_str), Some("nl-pipeline 3.7"));
        assert_eq!(t.tokens().count(), 2);
    }

    #[test]
    fn conllu_roundtrip() {
        let t = parse_conllu(CONLLU).unwrap();
        let text = write_conllu(&t);
        assert_eq!(parse_conllu(&text).unwrap(), t);
        assert_eq!(write_conllu(&parse_conllu(&text).unwrap()), text);
    }

    #[test]
    fn slice_boundaries_and_roles() {
        let t = parse_raw_transcript("[00:04:50]\nSPK: binnen\nINT: vraag\n[00:05:00]\nSPK: buiten\n").unwrap();
        let w = slice(&t, 0.0, 300.0, SpeakerRole::Interviewee).unwrap();
        let got: Vec<&str> = w.tokens().iter().map(Token::surface).collect();
        assert_eq!(got, ["binnen"]);
        assert!(matches!(slice(&t, 300.0, 300.0, SpeakerRole::Interviewee), Err(IngestError::InvalidSpan { .. })));
    }

    #[test]
    fn raw_writer_roundtrips_surfaces() {
        let t = parse_raw_transcript("#speaker-id: a\n[00:00:10]\nSPK: ik was ... daar , wo- woning\nINT: ja\n[00:05:00]\n").unwrap();
        let again = parse_raw_transcript(&write_raw(&t).unwrap()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn token_marker_invariant() {
        let t = Token::word("PAUSE", None, Upos::X).unwrap();
        assert!(t.is_marker());
        let t = Token::word("PAUSE", Some("pause".into()), Upos::Noun).unwrap();
        assert!(!t.is_marker());
        assert!(Token::untagged("").is_err());
    }
}
