//! `emothaw` command-line tool: corpus validation, feature extraction, feature
//! ranking, cross-validated accuracy, synthetic corpora and label cross tables.
//!
//! Exit codes: 0 on success, 1 when a command fails or validation finds
//! broken files, 2 on usage errors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use emothaw::model::{read_labels_file, severity_level};
use emothaw::{
    assemble_feature_matrix, chi_square_2x2, cross_tabulate, dichotomize, format_cv_table,
    format_top_k_table, generate_corpus, load_corpus, rank_features, repeated_cv, write_corpus,
    write_cv_csv, ChiSquare64, DassScores, FeatureColumn, FeatureMatrix64, FileStatus,
    ForestConfig, LabelPair, MissingTaskPolicy, ModelError, ParseMode, RankConfig, Scale,
    SynthConfig,
};

const CORPUS_ENV: &str = "EMOTHAW_CORPUS";

#[derive(Debug, Parser)]
#[command(
    name = "emothaw",
    version,
    about = "Emotional-state analysis of handwriting recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse every recording of a corpus and report pass/warn/fail per file.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Extract the 20-column feature matrix of a corpus as CSV.
    Features {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print per-feature means to stderr, durations in seconds.
        #[arg(long)]
        summary: bool,
    },
    /// Rank features by importance aggregated over an ensemble of forests.
    Rank {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_parser = parse_scale)]
        target: Scale,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long, default_value_t = 50)]
        n_forests: usize,
        /// Rows of the printed table.
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Full ranking as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated leave-one-out accuracy per target.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        /// A scale name or `all`.
        #[arg(long, default_value = "all", value_parser = parse_targets)]
        target: Targets,
        #[command(flatten)]
        forest: ForestArgs,
        /// Number of leave-one-out repetitions.
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with planted effects.
    Synth {
        /// JSON configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured participant count.
        #[arg(long)]
        n_participants: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Co-occurrence tables and χ² tests for the three label pairs.
    Crosstab {
        #[arg(long)]
        labels: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Corpus root holding labels.csv and one directory per participant.
    #[arg(env = CORPUS_ENV)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Strict)]
    mode: Mode,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Feature matrix CSV as written by `features`.
    #[arg(long)]
    features: PathBuf,
    /// Labels CSV with DASS scores.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n_tree: usize,
    #[arg(long, default_value_t = 5)]
    mtry: usize,
}

impl ForestArgs {
    fn config(&self) -> ForestConfig {
        ForestConfig {
            n_tree: self.n_tree,
            mtry: self.mtry,
            seed: self.seed,
            ..ForestConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Lenient,
}

impl From<Mode> for ParseMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Strict => ParseMode::Strict,
            Mode::Lenient => ParseMode::Lenient,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Strict,
    Drop,
}

#[derive(Debug, Clone)]
struct Targets(Vec<Scale>);

fn parse_scale(s: &str) -> Result<Scale, ModelError> {
    s.parse()
}

fn parse_targets(s: &str) -> Result<Targets, ModelError> {
    if s.eq_ignore_ascii_case("all") {
        Ok(Targets(Scale::ALL.to_vec()))
    } else {
        Ok(Targets(vec![s.parse()?]))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn cmd_validate(args: &CorpusArgs) -> Result<bool> {
    let loaded = load_corpus(&args.corpus, args.mode.into())?;
    let mut out = io::stdout().lock();
    for f in &loaded.files {
        let path = f.path.display();
        match &f.status {
            FileStatus::Pass => writeln!(out, "pass    {path}")?,
            FileStatus::Missing => writeln!(out, "missing {path}")?,
            FileStatus::Fail(reason) => writeln!(out, "fail    {path}: {reason}")?,
            FileStatus::Warn(warnings) => {
                writeln!(out, "warn    {path}")?;
                for w in warnings {
                    writeln!(out, "          {w}")?;
                }
            }
        }
    }
    for d in &loaded.unlabeled_dirs {
        writeln!(
            out,
            "note    directory {d} has no label row and was skipped"
        )?;
    }
    let failures = loaded.n_failures();
    writeln!(
        out,
        "{} participants, {} files: {} failed, {} with warnings",
        loaded.sessions.len(),
        loaded.files.len(),
        failures,
        loaded.n_warnings()
    )?;
    Ok(failures == 0)
}

fn print_summary(matrix: &FeatureMatrix64) {
    eprintln!("{} participants", matrix.n_rows());
    for j in 0..matrix.n_features() {
        let col = matrix.column(j);
        let mean = col.iter().sum::<f64>() / col.len().max(1) as f64;
        let name = matrix.display_name(j);
        match FeatureColumn::from_name(&matrix.column_names[j]) {
            Some(c) if c.kind.is_duration() => eprintln!("{name:<40} {:>8.1} s", mean / 1000.0),
            _ => eprintln!("{name:<40} {mean:>8.1}"),
        }
    }
}

fn cmd_features(
    corpus: &CorpusArgs,
    policy: Policy,
    out: Option<&Path>,
    summary: bool,
) -> Result<()> {
    let loaded = load_corpus(&corpus.corpus, corpus.mode.into())?;
    for f in loaded
        .files
        .iter()
        .filter(|f| matches!(f.status, FileStatus::Fail(_)))
    {
        if let FileStatus::Fail(reason) = &f.status {
            log::warn!("{}: {reason}", f.path.display());
        }
    }
    let policy = match policy {
        Policy::Strict => MissingTaskPolicy::Strict,
        Policy::Drop => MissingTaskPolicy::DropParticipant,
    };
    let assembled = assemble_feature_matrix::<f64>(&loaded.sessions, policy)?;
    for d in &assembled.dropped {
        eprintln!("dropped {}: missing {:?}", d.participant_id, d.missing);
    }
    match out {
        Some(path) => {
            let mut w = create(path)?;
            assembled.matrix.write_csv(&mut w)?;
            w.flush()?;
        }
        None => assembled.matrix.write_csv(io::stdout().lock())?,
    }
    if summary {
        print_summary(&assembled.matrix);
    }
    Ok(())
}

/// Loads the feature matrix and the labels, which must cover the same participant ids.
fn load_aligned(data: &DataArgs) -> Result<(FeatureMatrix64, BTreeMap<String, DassScores>)> {
    let matrix = FeatureMatrix64::read_csv_file(&data.features)?;
    let labels = read_labels_file(&data.labels)?;
    let in_matrix: BTreeSet<&str> = matrix.participant_ids.iter().map(String::as_str).collect();
    let in_labels: BTreeSet<&str> = labels.keys().map(String::as_str).collect();
    if in_matrix != in_labels {
        let only_m: Vec<_> = in_matrix.difference(&in_labels).take(5).collect();
        let only_l: Vec<_> = in_labels.difference(&in_matrix).take(5).collect();
        bail!(
            "IdMismatch: feature and label files cover different participants \
             (only in features: {only_m:?}, only in labels: {only_l:?})"
        );
    }
    Ok((matrix, labels))
}

fn target_labels(
    matrix: &FeatureMatrix64,
    labels: &BTreeMap<String, DassScores>,
    target: Scale,
) -> Vec<bool> {
    matrix
        .participant_ids
        .iter()
        .map(|id| dichotomize(&labels[id]).get(target))
        .collect()
}

fn validate_scores(labels: &BTreeMap<String, DassScores>) -> Result<()> {
    for (id, s) in labels {
        s.validate().with_context(|| format!("participant {id}"))?;
    }
    Ok(())
}

struct RankRequest<'a> {
    data: &'a DataArgs,
    target: Scale,
    forest: &'a ForestArgs,
    n_forests: usize,
    top_k: usize,
    out: Option<&'a Path>,
}

fn cmd_rank(req: RankRequest<'_>) -> Result<()> {
    let (matrix, labels) = load_aligned(req.data)?;
    validate_scores(&labels)?;
    let y = target_labels(&matrix, &labels, req.target);
    let config = RankConfig {
        n_forests: req.n_forests,
        forest: req.forest.config(),
        master_seed: req.forest.seed,
    };
    let report = rank_features(&matrix, &y, &config)?;
    let top = report.top_k(req.top_k.min(report.features.len()))?;
    print!("{}", format_top_k_table(req.target.name(), &top));
    if let Some(path) = req.out {
        let mut w = create(path)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_cv(
    data: &DataArgs,
    targets: &Targets,
    forest: &ForestArgs,
    reps: usize,
    out: Option<&Path>,
) -> Result<()> {
    let (matrix, labels) = load_aligned(data)?;
    validate_scores(&labels)?;
    let config = forest.config();
    let mut reports = Vec::new();
    for &target in &targets.0 {
        let y = target_labels(&matrix, &labels, target);
        let report = repeated_cv(&matrix, &y, &config, reps, forest.seed)
            .with_context(|| format!("{target} model"))?
            .with_target(target);
        reports.push(report);
    }
    print!("{}", format_cv_table(&reports));
    if let Some(path) = out {
        let mut w = create(path)?;
        write_cv_csv(&mut w, &reports)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_synth(config: Option<&Path>, seed: Option<u64>, n: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            SynthConfig::from_json(&text)?
        }
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = n {
        cfg.n_participants = n;
    }
    let corpus = generate_corpus(&cfg)?;
    write_corpus(&corpus, out)?;
    let summary = corpus.score_summary()?;
    println!(
        "wrote {} participants to {}",
        summary.n_participants,
        out.display()
    );
    for (scale, count) in &summary.positive_counts {
        println!(
            "{:<12} {count:>4} positive ({:.1}%)",
            scale.name(),
            100.0 * summary.prevalence[scale]
        );
    }
    Ok(())
}

fn cmd_crosstab(path: &Path) -> Result<()> {
    let scores = read_labels_file(path)?;
    for (id, s) in &scores {
        for scale in Scale::ALL {
            severity_level(scale, s.get(scale)).with_context(|| format!("participant {id}"))?;
        }
    }
    let labels: Vec<_> = scores.values().map(dichotomize).collect();
    let mut out = io::stdout().lock();
    for pair in LabelPair::ALL {
        let table = cross_tabulate(&labels, pair)?;
        let (a, b) = pair.scales();
        writeln!(out, "{pair} (n = {})", table.total())?;
        writeln!(
            out,
            "{:<16} {:>16} {:>16}",
            "",
            format!("not {}", b.name()),
            b.name()
        )?;
        for (i, row_name) in [format!("not {}", a.name()), a.name().to_string()]
            .iter()
            .enumerate()
        {
            let cell =
                |j: usize| format!("{} ({:.1}%)", table.counts[i][j], table.percentages[i][j]);
            writeln!(out, "{row_name:<16} {:>16} {:>16}", cell(0), cell(1))?;
        }
        match chi_square_2x2::<f64>(table.counts) {
            Ok(ChiSquare64 { statistic, p_value }) => {
                writeln!(out, "chi2 = {statistic:.3}, p = {p_value:.4e}")?;
            }
            Err(ModelError::DegenerateMarginal { .. }) => {
                writeln!(
                    out,
                    "chi2 undefined: degenerate marginal (a row or column is empty)"
                )?;
            }
            Err(e) => return Err(e.into()),
        }
        writeln!(out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Validate { corpus } => return cmd_validate(&corpus),
        Command::Features {
            corpus,
            policy,
            out,
            summary,
        } => cmd_features(&corpus, policy, out.as_deref(), summary)?,
        Command::Rank {
            data,
            target,
            forest,
            n_forests,
            top_k,
            out,
        } => cmd_rank(RankRequest {
            data: &data,
            target,
            forest: &forest,
            n_forests,
            top_k,
            out: out.as_deref(),
        })?,
        Command::Cv {
            data,
            target,
            forest,
            reps,
            out,
        } => cmd_cv(&data, &target, &forest, reps, out.as_deref())?,
        Command::Synth {
            config,
            seed,
            n_participants,
            out,
        } => cmd_synth(config.as_deref(), seed, n_participants, &out)?,
        Command::Crosstab { labels } => cmd_crosstab(&labels)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
