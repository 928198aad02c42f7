//! Seeded synthetic interviews: Zipfian per-class vocabularies, recurring
//! phrases, injected pauses and breaks, and optional topic drift.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Marker, SpeakerRole, Token, Transcript, Upos, Utterance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid speaker model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub surface: String,
    pub lemma: String,
}

/// Words of one UPOS class, most frequent first. `share` is the class's
/// relative weight among all classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordClass {
    pub upos: Upos,
    pub share: f64,
    pub entries: Vec<LexEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseToken {
    pub surface: String,
    pub lemma: String,
    pub upos: Upos,
}

/// A fixed expression inserted into an utterance with probability `rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phrase {
    pub tokens: Vec<PhraseToken>,
    pub rate: f64,
}

fn default_drift_targets() -> Vec<Upos> {
    vec![Upos::Noun, Upos::Adj]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    None,
    /// From `at_minute` on, the most frequent words of the target classes,
    /// covering `replacement_fraction` of each class's probability mass, are
    /// swapped for unseen words at the same ranks.
    TopicShift {
        at_minute: f64,
        replacement_fraction: f64,
        #[serde(default = "default_drift_targets")]
        targets: Vec<Upos>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeakerModel {
    pub speaker_id: String,
    pub classes: Vec<WordClass>,
    pub phrases: Vec<Phrase>,
    pub zipf_exponent: f64,
    pub mean_utterance_tokens: f64,
    /// Tokens per minute, markers included, both speakers together.
    pub speech_rate_tpm: f64,
    pub interviewer_turn_prob: f64,
    pub drift: Drift,
    /// Per-word probability of a following PAUSE.
    pub pause_rate: f64,
    /// Per-word probability of a following BREAK.
    pub break_rate: f64,
    pub seed: u64,
}

impl Default for SpeakerModel {
    fn default() -> Self {
        SpeakerModel {
            speaker_id: "synthetic".into(),
            classes: Vec::new(),
            phrases: Vec::new(),
            zipf_exponent: 1.1,
            mean_utterance_tokens: 12.0,
            speech_rate_tpm: 110.0,
            interviewer_turn_prob: 0.15,
            drift: Drift::None,
            pause_rate: 0.03,
            break_rate: 0.01,
            seed: 0,
        }
    }
}

fn probability(name: &str, p: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SynthError::InvalidModel(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl SpeakerModel {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidModel(m));
        if self.classes.is_empty() {
            return bad("at least one word class is required".into());
        }
        for c in &self.classes {
            if !(c.share > 0.0 && c.share.is_finite()) {
                return bad(format!("share of {} must be positive", c.upos));
            }
            if c.entries.is_empty() {
                return bad(format!("word class {} has no entries", c.upos));
            }
            if let Some(e) = c.entries.iter().find(|e| !is_plain_word(&e.surface) || e.lemma.trim().is_empty()) {
                return bad(format!("invalid entry `{}` in class {}", e.surface, c.upos));
            }
        }
        for p in &self.phrases {
            probability("phrase rate", p.rate)?;
            if p.tokens.is_empty() || p.tokens.iter().any(|t| !is_plain_word(&t.surface)) {
                return bad("phrases need at least one plain word token".into());
            }
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return bad("zipf exponent must be non-negative".into());
        }
        if !(self.mean_utterance_tokens >= 1.0 && self.mean_utterance_tokens.is_finite()) {
            return bad("mean utterance length must be at least 1".into());
        }
        if !(self.speech_rate_tpm > 0.0 && self.speech_rate_tpm.is_finite()) {
            return bad("speech rate must be positive".into());
        }
        probability("interviewer turn probability", self.interviewer_turn_prob)?;
        probability("pause rate", self.pause_rate)?;
        probability("break rate", self.break_rate)?;
        if let Drift::TopicShift { at_minute, replacement_fraction, .. } = self.drift {
            probability("replacement fraction", replacement_fraction)?;
            if !(at_minute >= 0.0 && at_minute.is_finite()) {
                return bad("topic shift minute must be non-negative".into());
            }
        }
        Ok(())
    }

    /// A Dutch interviewee with hand-picked word lists whose frequency ranks
    /// are shuffled per seed.
    pub fn dutch_demo(speaker_id: impl Into<String>, seed: u64) -> SpeakerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_1e71);
        let classes = DEMO_CLASSES
            .iter()
            .map(|&(upos, share, words)| {
                let mut entries: Vec<LexEntry> = words
                    .iter()
                    .map(|w| {
                        let (surface, lemma) = w.split_once('/').unwrap_or((w, w));
                        LexEntry { surface: surface.into(), lemma: lemma.into() }
                    })
                    .collect();
                entries.shuffle(&mut rng);
                WordClass { upos, share, entries }
            })
            .collect();
        let phrases = DEMO_PHRASES
            .iter()
            .map(|&(words, rate)| Phrase {
                tokens: words
                    .split(' ')
                    .map(|w| {
                        let mut parts = w.split('/');
                        let surface = parts.next().expect("surface");
                        let upos = parts.next().expect("upos").parse().expect("valid upos");
                        let lemma = parts.next().unwrap_or(surface);
                        PhraseToken { surface: surface.into(), lemma: lemma.into(), upos }
                    })
                    .collect(),
                rate,
            })
            .collect();
        SpeakerModel { speaker_id: speaker_id.into(), classes, phrases, seed, ..SpeakerModel::default() }
    }
}

fn is_plain_word(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace) && s != crate::ingest::PAUSE && s != crate::ingest::BREAK
}

const DEMO_CLASSES: &[(Upos, f64, &[&str])] = &[
    (Upos::Noun, 0.16, &[
        "huis", "moment", "school", "werk", "vader", "moeder", "kind", "kinderen/kind", "jaar", "jaren/jaar", "dag",
        "dagen/dag", "tijd", "man", "vrouw", "broer", "zus", "familie", "straat", "stad", "dorp", "kerk", "winkel",
        "fiets", "auto", "trein", "boek", "brief", "oorlog", "baas", "fabriek", "kantoor", "geld", "brood", "tuin",
        "hond", "kat", "feest", "vakantie", "zee", "strand", "boerderij", "koe", "paard", "buurman", "buurvrouw",
        "vriend", "vrienden/vriend", "leraar", "dokter", "ziekenhuis", "keuken", "kamer", "bed", "radio", "krant",
        "muziek", "dans", "zondag", "week",
    ]),
    (Upos::Propn, 0.01, &["amsterdam", "jan", "marie", "rotterdam", "limburg"]),
    (Upos::Verb, 0.14, &[
        "ging/gaan", "gaan", "gaat/gaan", "kwam/komen", "komen", "komt/komen", "zei/zeggen", "zeggen", "zegt/zeggen",
        "deed/doen", "doen", "doet/doen", "zag/zien", "zien", "ziet/zien", "weet/weten", "wist/weten", "weten",
        "denk/denken", "dacht/denken", "werkte/werken", "werken", "woonde/wonen", "wonen", "speelde/spelen", "spelen",
        "liep/lopen", "lopen", "loopt/lopen", "kreeg/krijgen", "krijgen", "vond/vinden", "vinden", "maakte/maken",
        "maken", "hoorde/horen", "praten", "leerde/leren", "geloof/geloven", "trouwde/trouwen",
    ]),
    (Upos::Aux, 0.07, &[
        "is/zijn", "was/zijn", "zijn", "waren/zijn", "heb/hebben", "had/hebben", "hebben", "heeft/hebben",
        "moest/moeten", "moet/moeten", "kon/kunnen", "kan/kunnen", "wilde/willen", "wil/willen", "werd/worden",
        "zou/zullen",
    ]),
    (Upos::Pron, 0.17, &[
        "ik", "je", "jij", "hij", "zij", "ze", "wij", "we", "mij", "me", "hem", "haar", "ons", "jullie", "het", "die",
        "dat", "dit", "wat", "iets", "niemand", "iedereen", "men",
    ]),
    (Upos::Adj, 0.07, &[
        "groot", "grote/groot", "klein", "kleine/klein", "mooi", "mooie/mooi", "oud", "oude/oud", "jong", "goed",
        "slecht", "leuk", "lekker", "moeilijk", "makkelijk", "zwaar", "druk", "rustig", "blij", "boos", "bang", "ziek",
        "arm", "rijk", "lang", "kort", "warm", "koud", "nieuw", "nieuwe/nieuw", "gezellig", "aardig", "streng", "vreemd",
    ]),
    (Upos::Adv, 0.13, &[
        "toen", "nog", "wel", "niet", "ook", "al", "nu", "dan", "daar", "hier", "er", "heel", "erg", "echt", "gewoon",
        "altijd", "nooit", "vaak", "soms", "eigenlijk", "natuurlijk", "dus", "zo", "weer", "even", "misschien",
        "gisteren", "later", "vroeger", "samen",
    ]),
    (Upos::Cconj, 0.04, &["en", "maar", "of", "want"]),
    (Upos::Sconj, 0.03, &["dat", "als", "omdat", "wanneer", "terwijl", "voordat", "nadat", "hoewel", "zodat", "tot"]),
    (Upos::Det, 0.08, &["de", "een", "deze", "elke", "mijn/mijn", "onze/ons"]),
    (Upos::Adp, 0.07, &["in", "op", "met", "van", "naar", "voor", "bij", "aan", "uit", "over", "om", "door"]),
    (Upos::Num, 0.01, &["twee", "drie", "vier", "tien", "honderd"]),
    (Upos::Intj, 0.02, &["ja", "nee", "nou", "oh"]),
];

const DEMO_PHRASES: &[(&str, f64)] = &[
    ("ik/PRON denk/VERB/denken dat/SCONJ", 0.25),
    ("en/CCONJ toen/ADV", 0.25),
    ("dat/PRON weet/VERB/weten ik/PRON niet/ADV", 0.12),
    ("op/ADP een/DET gegeven/VERB/geven moment/NOUN", 0.08),
    ("ik/PRON weet/VERB/weten het/PRON niet/ADV meer/ADV", 0.06),
    ("ja/INTJ ja/INTJ", 0.1),
];

/// Frequency-ranked vocabulary for one class, ready to sample.
struct ClassSampler {
    upos: Upos,
    entries: Vec<LexEntry>,
    zipf: Zipf<f64>,
}

impl ClassSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> &LexEntry {
        let rank = self.zipf.sample(rng) as usize;
        &self.entries[rank.clamp(1, self.entries.len()) - 1]
    }
}

/// Zipf weights of ranks 1..=n, normalised.
fn zipf_masses(n: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Pronounceable pseudo-words that collide with nothing already in use.
fn fresh_word(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>) -> String {
    const ONSETS: &[&str] = &["b", "br", "d", "dr", "f", "g", "gr", "k", "kl", "l", "m", "n", "p", "pl", "r", "s", "sl", "st", "t", "tr", "v", "w", "z"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "aa", "ee", "oo", "ui", "ij", "ou"];
    const CODAS: &[&str] = &["", "k", "l", "m", "n", "p", "r", "s", "t", "rt", "nk", "ld"];
    loop {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        w.push_str(CODAS[rng.random_range(0..CODAS.len())]);
        if used.insert(w.clone()) {
            return w;
        }
    }
}

struct Lexicon {
    classes: Vec<ClassSampler>,
    class_index: WeightedIndex<f64>,
    phrases: Vec<Phrase>,
}

impl Lexicon {
    fn new(m: &SpeakerModel) -> Lexicon {
        let classes = m
            .classes
            .iter()
            .map(|c| ClassSampler {
                upos: c.upos,
                entries: c.entries.clone(),
                zipf: Zipf::new(c.entries.len() as f64, m.zipf_exponent).expect("validated zipf parameters"),
            })
            .collect();
        let class_index = WeightedIndex::new(m.classes.iter().map(|c| c.share)).expect("validated shares");
        Lexicon { classes, class_index, phrases: m.phrases.clone() }
    }

    /// The lexicon after a topic shift. Lemmas of replaced entries become the
    /// new surface; phrase tokens of replaced words follow the replacement.
    fn shifted(&self, m: &SpeakerModel, fraction: f64, targets: &[Upos], rng: &mut ChaCha8Rng) -> Lexicon {
        let mut used: BTreeSet<String> = self
            .classes
            .iter()
            .flat_map(|c| c.entries.iter().flat_map(|e| [e.surface.to_lowercase(), e.lemma.to_lowercase()]))
            .chain(self.phrases.iter().flat_map(|p| p.tokens.iter().map(|t| t.surface.to_lowercase())))
            .collect();
        let mut replaced: BTreeMap<(Upos, String), LexEntry> = BTreeMap::new();
        let classes = self
            .classes
            .iter()
            .map(|c| {
                let mut entries = c.entries.clone();
                if targets.contains(&c.upos) && fraction > 0.0 {
                    let mut covered = 0.0;
                    for (entry, mass) in entries.iter_mut().zip(zipf_masses(c.entries.len(), m.zipf_exponent)) {
                        if covered >= fraction - 1e-12 {
                            break;
                        }
                        covered += mass;
                        let w = fresh_word(rng, &mut used);
                        let fresh = LexEntry { surface: w.clone(), lemma: w };
                        replaced.insert((c.upos, entry.surface.clone()), fresh.clone());
                        *entry = fresh;
                    }
                }
                ClassSampler { upos: c.upos, entries, zipf: c.zipf }
            })
            .collect();
        let phrases = self
            .phrases
            .iter()
            .map(|p| Phrase {
                tokens: p
                    .tokens
                    .iter()
                    .map(|t| match replaced.get(&(t.upos, t.surface.clone())) {
                        Some(e) => PhraseToken { surface: e.surface.clone(), lemma: e.lemma.clone(), upos: t.upos },
                        None => t.clone(),
                    })
                    .collect(),
                rate: p.rate,
            })
            .collect();
        Lexicon { classes, class_index: self.class_index.clone(), phrases }
    }

    fn utterance(&self, m: &SpeakerModel, role: SpeakerRole, rng: &mut ChaCha8Rng) -> Vec<Token> {
        let extra = m.mean_utterance_tokens - 1.0;
        let n = 1 + if extra > 0.0 { Poisson::new(extra).expect("validated mean").sample(rng) as usize } else { 0 };
        let mut words: Vec<Token> = (0..n)
            .map(|_| {
                let class = &self.classes[self.class_index.sample(rng)];
                let e = class.sample(rng);
                Token::word(e.surface.clone(), Some(e.lemma.clone()), class.upos).expect("plain word")
            })
            .collect();
        if role == SpeakerRole::Interviewee {
            for p in &self.phrases {
                if rng.random_bool(p.rate) {
                    let at = rng.random_range(0..=words.len());
                    let toks = p.tokens.iter().map(|t| Token::word(t.surface.clone(), Some(t.lemma.clone()), t.upos).expect("plain word"));
                    words.splice(at..at, toks);
                }
            }
        }
        let mut out = Vec::with_capacity(words.len() + 2);
        for w in words {
            out.push(w);
            if rng.random_bool(m.pause_rate) {
                out.push(Token::marker(Marker::Pause));
            } else if rng.random_bool(m.break_rate) {
                out.push(Token::marker(Marker::Break));
            }
        }
        out
    }
}

/// A tagged transcript of `duration_min` minutes drawn from `m`. The same
/// model and duration always give the same transcript.
pub fn generate_transcript(m: &SpeakerModel, duration_min: f64) -> Result<Transcript, SynthError> {
    m.validate()?;
    if !(duration_min >= 1.0 && duration_min.is_finite()) {
        return Err(SynthError::InvalidModel(format!("duration must be at least 1 minute, got {duration_min}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    let base = Lexicon::new(m);
    let (shift_at, shifted) = match &m.drift {
        Drift::None => (f64::INFINITY, None),
        Drift::TopicShift { at_minute, replacement_fraction, targets } => {
            let mut drift_rng = ChaCha8Rng::seed_from_u64(m.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
            (at_minute * 60.0, Some(base.shifted(m, *replacement_fraction, targets, &mut drift_rng)))
        }
    };

    let duration_s = duration_min * 60.0;
    let tokens_per_s = m.speech_rate_tpm / 60.0;
    let mut clock = 0.0;
    let mut utterances = Vec::new();
    while clock < duration_s {
        let role = if rng.random_bool(m.interviewer_turn_prob) { SpeakerRole::Interviewer } else { SpeakerRole::Interviewee };
        let lexicon = match &shifted {
            Some(s) if clock >= shift_at => s,
            _ => &base,
        };
        let tokens = lexicon.utterance(m, role, &mut rng);
        let jitter: f64 = rng.random_range(0.9..1.1);
        let advance = tokens.len() as f64 / tokens_per_s * jitter;
        // Millisecond resolution keeps the CoNLL-U rendering short.
        let start = (clock * 1000.0).round() / 1000.0;
        utterances.push(Utterance::new(role, start, tokens).expect("monotonic clock"));
        clock += advance;
    }
    let mut t = Transcript::new(m.speaker_id.clone(), utterances, duration_s).expect("generated transcript is valid");
    t.meta_mut().insert("generator".into(), concat!("lexiprof-synth ", env!("CARGO_PKG_VERSION")).into());
    t.meta_mut().insert("seed".into(), m.seed.to_string());
    Ok(t)
}
