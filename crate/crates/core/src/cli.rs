//! The `lexiprof` command line.
//!
//! Every failure prints one line `error[E_CODE]: message` on stderr and exits
//! with the code of its class:
//!
//! | exit | codes |
//! |------|-------|
//! | 1 | `E_IO` |
//! | 2 | `E_USAGE`, `E_PARSE`, `E_INVALID`, `E_UNTAGGED`, `E_TAGGER`, `E_CORPUS` |
//! | 3 | `E_EMPTY_CONSTRUCTION` |
//! | 4 | `E_SPAN_OVERLAP` |
//! | 5 | `E_MISSING_LEMMAS` |

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Deserialize;

use crate::annotate::{self, AnnotateError, TaggerSpec};
use crate::experiment::{self, sha256_hex, SweepConfig};
use crate::ingest::{self, IngestError, Transcript};
use crate::metrics::{self, MatchMode, MetricsError};
use crate::profile::{self, uniform_k, LexicalProfile, ProfileConfig, ProfileError};
use crate::report::{self, RowContext};
use crate::synth::{self, SpeakerModel, SynthError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: &'static str,
    pub exit: i32,
    pub message: String,
}

impl CliError {
    fn new(code: &'static str, exit: i32, message: impl Into<String>) -> CliError {
        CliError { code, exit, message: message.into() }
    }

    fn io(path: &Path, e: io::Error) -> CliError {
        CliError::new("E_IO", 1, format!("{}: {e}", path.display()))
    }

    fn invalid(message: impl Into<String>) -> CliError {
        CliError::new("E_INVALID", 2, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Keep the message on one line whatever the source error looked like.
        let msg = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {msg}", self.code)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::new("E_PARSE", 2, e.to_string())
    }
}

impl From<AnnotateError> for CliError {
    fn from(e: AnnotateError) -> Self {
        match e {
            AnnotateError::Ingest(e) => e.into(),
            AnnotateError::PassthroughOnUntagged { .. } => CliError::new("E_UNTAGGED", 2, e.to_string()),
            other => CliError::new("E_TAGGER", 2, other.to_string()),
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::EmptyConstructionWindow(_) => CliError::new("E_EMPTY_CONSTRUCTION", 3, e.to_string()),
            ProfileError::UntaggedInput => CliError::new("E_UNTAGGED", 2, e.to_string()),
            ProfileError::InvalidConfig(_) | ProfileError::InvalidDocument(_) => CliError::invalid(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::SpanOverlap { .. } => CliError::new("E_SPAN_OVERLAP", 4, e.to_string()),
            MetricsError::MissingLemmas { .. } => CliError::new("E_MISSING_LEMMAS", 5, e.to_string()),
            MetricsError::ExtractionMismatch => CliError::invalid(e.to_string()),
            MetricsError::Profile(p) => p.into(),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::invalid(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "lexiprof", version, about = "Personalised lexical profiles and their stability over an interview")]
pub struct Cli {
    /// JSON config: profile config for `build`, sweep config for `sweep`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed recorded in sweep provenance; overrides the model seed for `synth`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file (directory for `sweep`); stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `.conllu` files are CoNLL-U, anything else raw.
    #[default]
    Auto,
    Conllu,
    Raw,
}

#[derive(Debug, Args, Clone, Default)]
pub struct TaggingArgs {
    /// Input format.
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Tag untagged words with this `surface<TAB>UPOS<TAB>lemma` word list.
    #[arg(long, conflicts_with = "bridge")]
    pub lexicon: Option<PathBuf>,
    /// Tag raw input with an external program taking `--input --output [--model]`.
    #[arg(long)]
    pub bridge: Option<String>,
    /// Model identifier passed to the bridge.
    #[arg(long, requires = "bridge")]
    pub model: Option<String>,
    /// Speaker id to use instead of the one in the file.
    #[arg(long)]
    pub speaker_id: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a profile from the start of a transcript and write it as JSON.
    Build {
        input: PathBuf,
        #[command(flatten)]
        tagging: TaggingArgs,
    },
    /// Score a profile against later windows of a transcript (CSV).
    Eval {
        profile: PathBuf,
        transcript: PathBuf,
        #[arg(long, default_value_t = 10)]
        window_minutes: u32,
        #[arg(long, default_value = "exact")]
        mode: MatchMode,
        /// Start of the first window; defaults to the end of the construction span.
        #[arg(long)]
        start_minutes: Option<f64>,
        /// Ignore speech after this point.
        #[arg(long)]
        cutoff_minutes: Option<f64>,
        #[command(flatten)]
        tagging: TaggingArgs,
    },
    /// Run the full grid over a corpus manifest; writes rows.csv, aggregate.csv, provenance.json.
    Sweep { manifest: PathBuf },
    /// Generate a synthetic tagged transcript (CoNLL-U) from a speaker model.
    Synth {
        /// Speaker model JSON.
        #[arg(required_unless_present = "demo")]
        model: Option<PathBuf>,
        /// Use the built-in Dutch demo model with this speaker id instead of a model file.
        #[arg(long, conflicts_with = "model")]
        demo: Option<String>,
        /// Print the model instead of generating from it.
        #[arg(long)]
        print_model: bool,
        #[arg(long, default_value_t = 120.0)]
        duration: f64,
    },
    /// Check that CoNLL-U files meet the interchange contract.
    Tagcheck {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

/// Parses arguments, runs, reports errors and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let summary: Vec<&str> = text.lines().take_while(|l| !l.starts_with("Usage:")).map(str::trim).filter(|l| !l.is_empty()).collect();
            eprintln!("{}", CliError::new("E_USAGE", 2, summary.join(" ").trim_start_matches("error: ").to_string()));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::default().filter_or("LEXIPROF_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::invalid("--jobs must be at least 1"));
        }
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match &cli.command {
        Command::Build { input, tagging } => cmd_build(cli, input, tagging),
        Command::Eval { profile, transcript, window_minutes, mode, start_minutes, cutoff_minutes, tagging } => {
            cmd_eval(cli, profile, transcript, *window_minutes, *mode, *start_minutes, *cutoff_minutes, tagging)
        }
        Command::Sweep { manifest } => cmd_sweep(cli, manifest),
        Command::Synth { model, demo, print_model, duration } => cmd_synth(cli, model.as_deref(), demo.as_deref(), *print_model, *duration),
        Command::Tagcheck { files } => cmd_tagcheck(files),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

/// Writes to `--output` (created only after the content exists) or stdout.
fn emit(output: Option<&Path>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, content).map_err(|e| CliError::io(path, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(content.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::new("E_IO", 1, e.to_string()))
        }
    }
}

/// Reads, parses and tags one transcript.
pub fn load_transcript(path: &Path, args: &TaggingArgs) -> Result<Transcript, CliError> {
    let text = read(path)?;
    let conllu = match args.format {
        InputFormat::Conllu => true,
        InputFormat::Raw => false,
        InputFormat::Auto => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("conllu")),
    };
    let mut t = if conllu { ingest::parse_conllu(&text) } else { ingest::parse_raw_transcript(&text) }
        .map_err(|e| CliError::new("E_PARSE", 2, format!("{}: {e}", path.display())))?;
    if let Some(id) = &args.speaker_id {
        t.set_speaker_id(id.clone());
    } else if t.speaker_id().is_empty() {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        t.set_speaker_id(stem);
    }
    let spec = if let Some(lexicon) = &args.lexicon {
        Some(TaggerSpec::lexicon(lexicon))
    } else {
        args.bridge.as_ref().map(|program| TaggerSpec::external(program.clone(), args.model.clone()))
    };
    match spec {
        Some(spec) => Ok(annotate::tag_transcript(&t, &spec)?),
        None => Ok(t),
    }
}

fn cmd_build(cli: &Cli, input: &Path, tagging: &TaggingArgs) -> Result<(), CliError> {
    let config: ProfileConfig = match &cli.config {
        Some(path) => read_json(path)?,
        None => ProfileConfig::default(),
    };
    config.validate()?;
    let t = load_transcript(input, tagging)?;
    let p = profile::build_profile(&t, &config)?;
    info!("built profile for {} with {} items", p.speaker_id, p.total_items());
    emit(cli.output.as_deref(), &p.to_json())
}

/// Stable id for a profile's per-category sizes in report rows.
pub fn k_assignment_id(config: &ProfileConfig) -> String {
    let optimal = experiment::KAssignment::optimal();
    if config.items_per_category == optimal.items_per_category {
        return optimal.id;
    }
    let mut sizes = config.items_per_category.values();
    match sizes.next() {
        Some(&k) if config.items_per_category == uniform_k(k) => format!("k{k}"),
        _ => "custom".into(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    cli: &Cli,
    profile_path: &Path,
    transcript: &Path,
    window_minutes: u32,
    mode: MatchMode,
    start_minutes: Option<f64>,
    cutoff_minutes: Option<f64>,
    tagging: &TaggingArgs,
) -> Result<(), CliError> {
    if window_minutes == 0 {
        return Err(CliError::invalid("--window-minutes must be positive"));
    }
    let p = LexicalProfile::from_json(&read(profile_path)?)?;
    let t = load_transcript(transcript, tagging)?;
    if t.speaker_id() != p.speaker_id {
        warn!("profile speaker `{}` differs from transcript speaker `{}`", p.speaker_id, t.speaker_id());
    }
    let construction_end = p.construction_span.end_s;
    let start_s = start_minutes.map_or(construction_end, |m| m * 60.0);
    if start_s < construction_end {
        return Err(MetricsError::SpanOverlap { window_start: start_s, construction_end }.into());
    }
    let windows = experiment::make_windows(
        &t,
        start_s,
        f64::from(window_minutes) * 60.0,
        cutoff_minutes.map(|m| m * 60.0),
        p.config.extraction(),
    );
    if windows.is_empty() {
        eprintln!("warning: no complete {window_minutes}-minute window after {:.1} min; writing header only", start_s / 60.0);
    }
    let mut records = Vec::new();
    for w in &windows {
        records.extend(metrics::evaluate_profile(&p, w, mode)?);
    }
    let ctx = RowContext {
        speaker_id: p.speaker_id.clone(),
        timepoint_min: p.config.construction_minutes,
        k_assignment: k_assignment_id(&p.config),
        window_minutes,
    };
    emit(cli.output.as_deref(), &report::rows_to_string(&report::metric_rows(&ctx, &records)))
}

/// One corpus file in a sweep manifest. Paths are relative to the manifest.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub format: InputFormat,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub speaker_id: Option<String>,
}

fn cmd_sweep(cli: &Cli, manifest: &Path) -> Result<(), CliError> {
    let manifest_text = read(manifest)?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&manifest_text).map_err(|e| CliError::invalid(format!("{}: {e}", manifest.display())))?;
    if entries.is_empty() {
        return Err(CliError::new("E_CORPUS", 2, format!("{}: manifest lists no files", manifest.display())));
    }
    let mut sc: SweepConfig = match &cli.config {
        Some(path) => read_json(path)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    sc.validate().map_err(|e| CliError::invalid(e.to_string()))?;

    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut corpus = Vec::new();
    for entry in &entries {
        let args = TaggingArgs {
            format: entry.format,
            lexicon: entry.lexicon.as_ref().map(|l| base.join(l)),
            speaker_id: entry.speaker_id.clone(),
            ..TaggingArgs::default()
        };
        match load_transcript(&base.join(&entry.path), &args) {
            Ok(t) => corpus.push(t),
            Err(e) => warn!("skipping {}: {}", entry.path.display(), e.message),
        }
    }
    if corpus.is_empty() {
        return Err(CliError::new("E_CORPUS", 2, "no corpus file could be loaded"));
    }

    let mut result = experiment::run_sweep(&corpus, &sc).map_err(|e| CliError::invalid(e.to_string()))?;
    result.provenance.manifest_hash = Some(sha256_hex(manifest_text.as_bytes()));
    for s in &result.skips {
        info!("skipped {} t={} {} w={} {}: {:?}", s.speaker_id, s.timepoint_min, s.k_assignment, s.window_minutes, s.mode, s.reason);
    }
    if result.records.is_empty() {
        return Err(CliError::new("E_CORPUS", 2, "every grid cell was skipped"));
    }

    let out_dir = cli.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> io::Result<()>| -> Result<(), CliError> {
        let path = out_dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| CliError::io(&path, e))
    };
    write("rows.csv", &|b| report::write_rows(b, &report::sweep_rows(&result)))?;
    write("aggregate.csv", &|b| report::write_aggregate(b, &experiment::aggregate(&result)))?;
    write("provenance.json", &|b| {
        serde_json::to_writer_pretty(&mut *b, &result.provenance)?;
        b.push(b'\n');
        Ok(())
    })?;
    info!("{} records, {} skipped cells", result.records.len(), result.skips.len());
    Ok(())
}

fn cmd_synth(cli: &Cli, model: Option<&Path>, demo: Option<&str>, print_model: bool, duration: f64) -> Result<(), CliError> {
    let mut m = match (model, demo) {
        (Some(path), _) => read_json::<SpeakerModel>(path)?,
        (None, Some(id)) => SpeakerModel::dutch_demo(id, cli.seed.unwrap_or(0)),
        (None, None) => return Err(CliError::new("E_USAGE", 2, "a model file or --demo is required")),
    };
    if let Some(seed) = cli.seed {
        m.seed = seed;
    }
    if print_model {
        let mut json = serde_json::to_string_pretty(&m).expect("model serialises");
        json.push('\n');
        return emit(cli.output.as_deref(), &json);
    }
    let t = synth::generate_transcript(&m, duration)?;
    emit(cli.output.as_deref(), &ingest::write_conllu(&t))
}

fn cmd_tagcheck(files: &[PathBuf]) -> Result<(), CliError> {
    let mut failed = Vec::new();
    for path in files {
        let outcome = read(path).and_then(|text| {
            ingest::parse_conllu(&text).map_err(|e| CliError::new("E_PARSE", 2, format!("{}: {e}", path.display())))
        });
        match outcome {
            Ok(t) => println!("ok {}: {} utterances, {} tokens", path.display(), t.utterances().len(), t.tokens().count()),
            Err(e) => {
                eprintln!("{e}");
                failed.push(e);
            }
        }
    }
    match failed.first() {
        None => Ok(()),
        Some(e) => Err(CliError::new(e.code, e.exit, format!("{} of {} files failed the check", failed.len(), files.len()))),
    }
}
