//! Personalised lexical profiles from time-annotated dialogue transcripts.
//!
//! A profile holds a speaker's most frequent vocabulary items per word class
//! and their most frequent word n-grams, built from the first minutes of an
//! interview. Profiles are scored against later stretches of the same
//! interview with recall, coverage and cosine similarity, under exact or
//! lemmatised matching.
//!
//! Pipeline:
//!
//! - [`ingest`] parses raw transcripts and CoNLL-U into [`ingest::Transcript`]
//!   and slices them into time windows.
//! - [`annotate`] attaches POS tags and lemmas, and maps UPOS tags onto the six
//!   profile categories.
//! - [`profile`] builds a [`profile::LexicalProfile`] from a construction window.
//! - [`metrics`] scores a profile against an [`metrics::EvaluationWindow`].
//! - [`experiment`] runs the construction-timepoint × profile-size × window grid
//!   and aggregates across speakers.
//! - [`synth`] generates seeded synthetic transcripts with controllable drift.
//! - [`report`] writes deterministic long-format CSV tables.
//! - [`cli`] is the `lexiprof` command-line front end.

pub mod annotate;
pub mod cli;
pub mod experiment;
pub mod ingest;
pub mod metrics;
pub mod profile;
pub mod report;
pub mod synth;

pub use annotate::{map_pos, tag_transcript, Lexicon, PosMapping, ProfileCategory, TaggerKind, TaggerSpec};
pub use experiment::{aggregate, make_windows, paper_optimal_config, run_sweep, SweepConfig, SweepResult};
pub use ingest::{parse_conllu, parse_raw_transcript, slice, Marker, SpeakerRole, Token, TokenWindow, Transcript, Upos, Utterance};
pub use metrics::{coverage, cosine, evaluate_profile, recall, EvaluationWindow, MatchMode, MetricRecord, Scope};
pub use profile::{build_profile, count_vocabulary, extract_ngrams, select_top_k, LexicalProfile, MarkerPolicy, ProfileConfig};
pub use synth::{generate_transcript, SpeakerModel};
