//! The `embedlens` command line.
//!
//! Every report embeds the toolkit version, the resolved run configuration
//! (command, arguments, seed, format) and a generation timestamp. `embedlens
//! rerun REPORT --out NEW` replays the embedded configuration; apart from
//! the timestamp the new report is byte-identical to the old one.
//!
//! JSON reports carry the metadata in an envelope object, CSV reports in
//! leading `#` comment lines, and JSON-lines prompt manifests in a sidecar
//! `<out>.run.json`. Commands that write embedding sets take `--out` as a
//! directory and write `run.json` there.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation or domain error,
//! 3 numerical failure.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classify::{self, CellOutcome, Method, SkipList};
use crate::dataset::{self, EmbeddingSet, LabelOverrideFile};
use crate::error::{Error, ErrorKind, Result};
use crate::metrics::{self, MeanTerm};
use crate::promptgen::{self, ModifierLexicon};
use crate::separability;
use crate::simulator::{self, ClusterSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

pub const THREADS_ENV: &str = "EMBEDLENS_THREADS";
const TIMESTAMP_KEY: &str = "generated_at_unix";
const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Parser)]
#[command(name = "embedlens", version, about = "Diagnostics for labeled embedding sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice (tie-breaking, splits, sampling).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (or directory for `simulate` and `split`); stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Load sets and report their shape; exit 2 on any invariant violation.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Centroid Distance per class and per set; with a second set, per-class
    /// centroid shift and Fréchet distance.
    Metrics {
        set: PathBuf,
        other: Option<PathBuf>,
    },
    /// Every method on every (train reference, eval query) pair.
    Matrix {
        #[arg(required = true)]
        sets: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "centroid,knn1,knn5", value_parser = parse_method)]
        methods: Vec<Method>,
        /// Skip every cell whose query set has this name.
        #[arg(long = "skip-query")]
        skip_queries: Vec<String>,
        /// Skip one cell, given as REFERENCE:QUERY set names.
        #[arg(long = "skip-pair")]
        skip_pairs: Vec<String>,
    },
    /// Per-class failure tags from natural vs. synthetic query accuracy.
    Diagnose {
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        natural: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        /// Accuracy (fraction) below which a class is failing.
        #[arg(long, default_value_t = 0.6)]
        low: f64,
        /// Synthetic accuracy (fraction) at or above which a class is healthy.
        #[arg(long, default_value_t = 0.8)]
        high: f64,
        #[arg(long, default_value = "centroid", value_parser = parse_method)]
        method: Method,
    },
    /// Perceptron probe for linear separability of two pooled sets (JSON).
    Separability {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = separability::DEFAULT_MAX_EPOCHS)]
        max_epochs: usize,
    },
    /// Average nearest-centroid similarity for every ordered pair of sets.
    Similarity {
        #[arg(required = true, num_args = 2..)]
        sets: Vec<PathBuf>,
    },
    /// Augmented prompts as a JSON-lines manifest.
    Promptgen {
        /// JSON array of {id, name}.
        #[arg(long)]
        classes: PathBuf,
        /// Lexicon JSON; the bundled default if absent.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Label overrides (JSON array of {id, prompt}) applied first.
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        per_class: usize,
    },
    /// Synthetic reference and query sets.
    Simulate {
        #[arg(long, default_value_t = 16)]
        dimension: usize,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        spread: f64,
        #[arg(long, default_value_t = 0.0)]
        shift_degrees: f64,
        #[arg(long, default_value_t = 0.0)]
        outlier_fraction: f64,
        /// Offset the queries along a random direction, tagging them PRMT.
        #[arg(long)]
        gap_offset: Option<f64>,
    },
    /// Split a set into train and eval parts.
    Split {
        set: PathBuf,
        #[arg(long, default_value_t = 0.04)]
        eval_fraction: f64,
    },
    /// Replay the configuration embedded in a report.
    Rerun { report: PathBuf },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// The part of an invocation that determines a report's content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    pub command: Command,
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    toolkit: String,
    version: String,
    generated_at_unix: u64,
    config: RunConfig,
    result: T,
}

fn now_unix() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn envelope<T: Serialize>(config: &RunConfig, result: T) -> Result<Vec<u8>> {
    let env = Envelope {
        toolkit: "embedlens".into(),
        version: crate::VERSION.into(),
        generated_at_unix: now_unix(),
        config: config.clone(),
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&env).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_report(config: &RunConfig, header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let config_json = serde_json::to_string(config).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    writeln!(out, "# embedlens {}", crate::VERSION).ok();
    writeln!(out, "{CONFIG_PREFIX}{config_json}").ok();
    writeln!(out, "# {TIMESTAMP_KEY}: {}", now_unix()).ok();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let write_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(header).map_err(write_err)?;
        for r in rows {
            w.write_record(&r).map_err(write_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
    }
    Ok(out)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Extracts the run configuration embedded in any report this tool writes.
pub fn read_embedded_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |m: String| Error::ManifestParse {
        path: path.to_path_buf(),
        message: m,
    };
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        let config = v
            .get("config")
            .cloned()
            .ok_or_else(|| parse_err("no `config` field".into()))?;
        return serde_json::from_value(config).map_err(|e| parse_err(e.to_string()));
    }
    let line = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(CONFIG_PREFIX))
        .ok_or_else(|| parse_err("no embedded config line".into()))?;
    serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))
}

/// Removes the timestamp from a report so two runs can be compared.
pub fn strip_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.contains(TIMESTAMP_KEY))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.global.threads {
        // a second call in one process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let out = cli.global.out.clone();
    let config = match cli.command {
        Command::Rerun { report } => match read_embedded_config(&report) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        },
        command => RunConfig {
            seed: cli.global.seed,
            format: cli.global.format,
            command,
        },
    };
    match execute(&config, out.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one configuration, writing its report to `out` (stdout if `None`).
pub fn execute(config: &RunConfig, out: Option<&Path>) -> Result<u8> {
    match &config.command {
        Command::Validate { paths } => cmd_validate(config, paths, out),
        Command::Metrics { set, other } => cmd_metrics(config, set, other.as_deref(), out),
        Command::Matrix {
            sets,
            methods,
            skip_queries,
            skip_pairs,
        } => cmd_matrix(config, sets, methods, skip_queries, skip_pairs, out),
        Command::Diagnose {
            refs,
            natural,
            synthetic,
            low,
            high,
            method,
        } => cmd_diagnose(config, refs, natural, synthetic, *low, *high, *method, out),
        Command::Separability { a, b, max_epochs } => cmd_separability(config, a, b, *max_epochs, out),
        Command::Similarity { sets } => cmd_similarity(config, sets, out),
        Command::Promptgen {
            classes,
            lexicon,
            overrides,
            per_class,
        } => cmd_promptgen(config, classes, lexicon.as_deref(), overrides.as_deref(), *per_class, out),
        Command::Simulate {
            dimension,
            classes,
            samples,
            spread,
            shift_degrees,
            outlier_fraction,
            gap_offset,
        } => {
            let spec = ClusterSpec {
                dimension: *dimension,
                classes: *classes,
                samples: *samples,
                spread: *spread,
                shift_degrees: *shift_degrees,
                outlier_fraction: *outlier_fraction,
                seed: config.seed,
            };
            cmd_simulate(config, &spec, *gap_offset, out)
        }
        Command::Split { set, eval_fraction } => cmd_split(config, set, *eval_fraction, out),
        Command::Rerun { .. } => Err(Error::InvalidArgument("a report cannot embed `rerun`".into())),
    }
}

#[derive(Debug, Serialize)]
struct SetSummary {
    path: PathBuf,
    valid: bool,
    error: Option<String>,
    name: Option<String>,
    dimension: Option<usize>,
    modality: Option<String>,
    split: Option<String>,
    classes: Option<usize>,
    rows: Option<usize>,
    class_sizes: BTreeMap<u32, usize>,
}

fn cmd_validate(config: &RunConfig, paths: &[PathBuf], out: Option<&Path>) -> Result<u8> {
    let mut summaries = Vec::new();
    let mut code = EXIT_OK;
    for p in paths {
        let mut s = SetSummary {
            path: p.clone(),
            valid: false,
            error: None,
            name: None,
            dimension: None,
            modality: None,
            split: None,
            classes: None,
            rows: None,
            class_sizes: BTreeMap::new(),
        };
        match dataset::load_set(p) {
            Ok(set) => {
                s.valid = true;
                s.name = Some(set.name().to_string());
                s.dimension = Some(set.dimension());
                s.modality = Some(set.modality().to_string());
                s.split = Some(set.split().to_string());
                s.classes = Some(set.classes().len());
                s.rows = Some(set.len());
                s.class_sizes = set.classes().iter().map(|c| (c.id(), c.len())).collect();
            }
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                code = match (code, exit_code(&e)) {
                    (EXIT_VALIDATION, _) | (_, EXIT_VALIDATION) => EXIT_VALIDATION,
                    (_, c) => c,
                };
                s.error = Some(e.to_string());
            }
        }
        summaries.push(s);
    }
    let bytes = match config.format {
        Format::Json => envelope(config, &summaries)?,
        Format::Csv => {
            let opt = |o: Option<String>| o.unwrap_or_default();
            let rows = summaries
                .iter()
                .map(|s| {
                    vec![
                        s.path.display().to_string(),
                        if s.valid { "ok" } else { "invalid" }.to_string(),
                        opt(s.name.clone()),
                        opt(s.dimension.map(|d| d.to_string())),
                        opt(s.modality.clone()),
                        opt(s.split.clone()),
                        opt(s.classes.map(|d| d.to_string())),
                        opt(s.rows.map(|d| d.to_string())),
                        opt(s.class_sizes.values().min().map(|d| d.to_string())),
                        opt(s.class_sizes.values().max().map(|d| d.to_string())),
                        opt(s.error.clone()),
                    ]
                })
                .collect();
            csv_report(
                config,
                &[
                    "path", "status", "name", "dimension", "modality", "split", "classes", "rows",
                    "min_class_size", "max_class_size", "error",
                ],
                rows,
            )?
        }
    };
    emit(out, &bytes)?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct ClassMetricsRow {
    class_id: u32,
    class_name: String,
    n: usize,
    centroid_distance: f64,
    other_n: Option<usize>,
    other_centroid_distance: Option<f64>,
    centroid_shift: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MetricsReport {
    set: String,
    set_centroid_distance: f64,
    other: Option<String>,
    other_set_centroid_distance: Option<f64>,
    mean_centroid_shift: Option<f64>,
    frechet_squared: Option<metrics::FrechetDistance>,
    frechet_absolute: Option<metrics::FrechetDistance>,
    classes: Vec<ClassMetricsRow>,
}

fn cmd_metrics(config: &RunConfig, set_path: &Path, other: Option<&Path>, out: Option<&Path>) -> Result<u8> {
    let set = dataset::load_set(set_path)?;
    let m = metrics::set_centroid_distance(&set)?;
    let mut report = MetricsReport {
        set: set.name().to_string(),
        set_centroid_distance: m.set_centroid_distance,
        other: None,
        other_set_centroid_distance: None,
        mean_centroid_shift: None,
        frechet_squared: None,
        frechet_absolute: None,
        classes: m
            .classes
            .iter()
            .zip(set.classes())
            .map(|(cm, c)| ClassMetricsRow {
                class_id: cm.class_id,
                class_name: c.label().name.clone(),
                n: cm.n,
                centroid_distance: cm.centroid_distance,
                other_n: None,
                other_centroid_distance: None,
                centroid_shift: None,
            })
            .collect(),
    };
    if let Some(p) = other {
        let b = dataset::load_set(p)?;
        let mb = metrics::set_centroid_distance(&b)?;
        let shifts: BTreeMap<u32, f64> = metrics::class_shifts(&set, &b)?
            .into_iter()
            .map(|s| (s.class_id, s.shift))
            .collect();
        let other_classes: BTreeMap<u32, &metrics::ClassMetrics> =
            mb.classes.iter().map(|c| (c.class_id, c)).collect();
        for row in &mut report.classes {
            if let Some(c) = other_classes.get(&row.class_id) {
                row.other_n = Some(c.n);
                row.other_centroid_distance = Some(c.centroid_distance);
            }
            row.centroid_shift = shifts.get(&row.class_id).copied();
        }
        report.other = Some(b.name().to_string());
        report.other_set_centroid_distance = Some(mb.set_centroid_distance);
        if !shifts.is_empty() {
            report.mean_centroid_shift = Some(shifts.values().sum::<f64>() / shifts.len() as f64);
        }
        report.frechet_squared = Some(metrics::frechet_distance(set.rows(), b.rows(), MeanTerm::Squared)?);
        report.frechet_absolute = Some(metrics::frechet_distance(set.rows(), b.rows(), MeanTerm::Absolute)?);
    }

    let bytes = match config.format {
        Format::Json => envelope(config, &report)?,
        Format::Csv => {
            let o = |x: Option<f64>| x.map(num).unwrap_or_default();
            let mut rows: Vec<Vec<String>> = report
                .classes
                .iter()
                .map(|r| {
                    vec![
                        "class".into(),
                        r.class_id.to_string(),
                        r.class_name.clone(),
                        r.n.to_string(),
                        num(r.centroid_distance),
                        r.other_n.map(|n| n.to_string()).unwrap_or_default(),
                        o(r.other_centroid_distance),
                        o(r.centroid_shift),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]
                })
                .collect();
            rows.push(vec![
                "set".into(),
                String::new(),
                report.set.clone(),
                set.len().to_string(),
                num(report.set_centroid_distance),
                String::new(),
                o(report.other_set_centroid_distance),
                o(report.mean_centroid_shift),
                o(report.frechet_squared.map(|f| f.total)),
                o(report.frechet_absolute.map(|f| f.total)),
                o(report.frechet_squared.map(|f| f.trace_term)),
            ]);
            csv_report(
                config,
                &[
                    "scope", "class_id", "name", "n", "centroid_distance", "other_n",
                    "other_centroid_distance", "centroid_shift", "frechet_squared",
                    "frechet_absolute", "frechet_trace_term",
                ],
                rows,
            )?
        }
    };
    emit(out, &bytes)?;
    Ok(EXIT_OK)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<EmbeddingSet>> {
    paths.iter().map(dataset::load_set).collect()
}

fn cmd_matrix(
    config: &RunConfig,
    paths: &[PathBuf],
    methods: &[Method],
    skip_queries: &[String],
    skip_pairs: &[String],
    out: Option<&Path>,
) -> Result<u8> {
    let sets = load_all(paths)?;
    let mut skip = SkipList {
        queries: skip_queries.iter().cloned().collect(),
        pairs: BTreeSet::new(),
    };
    for p in skip_pairs {
        let (r, q) = p
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("skip pair `{p}` is not REFERENCE:QUERY")))?;
        skip.pairs.insert((r.to_string(), q.to_string()));
    }
    let cells = classify::run_experiment_matrix(&sets, methods, config.seed, &skip)?;
    let any_ok = cells.iter().any(|c| matches!(c.outcome, CellOutcome::Ok(_)));

    let bytes = match config.format {
        Format::Json => envelope(config, &cells)?,
        Format::Csv => {
            let rows = cells
                .iter()
                .map(|c| {
                    let (acc, sim, err) = match &c.outcome {
                        CellOutcome::Ok(r) => (pct(r.accuracy), format!("{:.4}", r.avg_cos_similarity), String::new()),
                        CellOutcome::Skipped => ("n/a".into(), "n/a".into(), "skipped".into()),
                        CellOutcome::Failed { error } => (String::new(), String::new(), error.clone()),
                    };
                    vec![
                        c.experiment.to_string(),
                        c.reference.clone(),
                        c.query.clone(),
                        c.method.to_string(),
                        acc,
                        sim,
                        err,
                    ]
                })
                .collect();
            csv_report(
                config,
                &["experiment", "reference", "query", "method", "accuracy_pct", "avg_cos_similarity", "errors"],
                rows,
            )?
        }
    };
    emit(out, &bytes)?;
    Ok(if any_ok { EXIT_OK } else { EXIT_VALIDATION })
}

#[allow(clippy::too_many_arguments)]
fn cmd_diagnose(
    config: &RunConfig,
    refs: &Path,
    natural: &Path,
    synthetic: &Path,
    low: f64,
    high: f64,
    method: Method,
    out: Option<&Path>,
) -> Result<u8> {
    let refs = dataset::load_set(refs)?;
    let natural = dataset::load_set(natural)?;
    let synthetic = dataset::load_set(synthetic)?;
    let a = classify::run_method(&refs, &natural, method, config.seed)?;
    let b = classify::run_method(&refs, &synthetic, method, config.seed)?;
    let diagnoses = classify::diagnose_class_failures(&a, &b, low, high)?;
    let names: BTreeMap<u32, String> = refs.labels().into_iter().map(|l| (l.id, l.name)).collect();

    let bytes = match config.format {
        Format::Json => envelope(
            config,
            json!({
                "natural_accuracy": a.accuracy,
                "synthetic_accuracy": b.accuracy,
                "classes": diagnoses,
            }),
        )?,
        Format::Csv => {
            let rows = diagnoses
                .iter()
                .map(|d| {
                    vec![
                        d.class_id.to_string(),
                        names.get(&d.class_id).cloned().unwrap_or_default(),
                        pct(d.natural_accuracy),
                        pct(d.synthetic_accuracy),
                        d.tag.to_string(),
                    ]
                })
                .collect();
            csv_report(
                config,
                &["class_id", "name", "natural_accuracy_pct", "synthetic_accuracy_pct", "tag"],
                rows,
            )?
        }
    };
    emit(out, &bytes)?;
    Ok(EXIT_OK)
}

fn cmd_separability(config: &RunConfig, a: &Path, b: &Path, max_epochs: usize, out: Option<&Path>) -> Result<u8> {
    let a = dataset::load_set(a)?;
    let b = dataset::load_set(b)?;
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let unit = |s: &EmbeddingSet| -> Result<Vec<_>> { s.rows().map(crate::geometry::unit_normalize).collect() };
    let probe = separability::train_linear_probe(&unit(&a)?, &unit(&b)?, max_epochs, config.seed)?;
    let bytes = envelope(
        config,
        json!({ "a": a.name(), "b": b.name(), "probe": probe }),
    )?;
    emit(out, &bytes)?;
    Ok(EXIT_OK)
}

fn cmd_similarity(config: &RunConfig, paths: &[PathBuf], out: Option<&Path>) -> Result<u8> {
    let sets = load_all(paths)?;
    let summary = separability::modality_similarity_summary(&sets)?;
    let bytes = match config.format {
        Format::Json => envelope(config, &summary)?,
        Format::Csv => {
            let block = |b: separability::SimilarityBlock| {
                serde_json::to_value(b)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default()
            };
            let mut rows: Vec<Vec<String>> = summary
                .rows
                .iter()
                .map(|r| vec![block(r.block), r.reference.clone(), r.query.clone(), format!("{:.4}", r.similarity)])
                .collect();
            rows.extend(summary.blocks.iter().map(|b| {
                vec![block(b.block), "*".into(), "*".into(), format!("{:.4}", b.mean_similarity)]
            }));
            csv_report(config, &["block", "reference", "query", "avg_cos_similarity"], rows)?
        }
    };
    emit(out, &bytes)?;
    Ok(EXIT_OK)
}

fn cmd_promptgen(
    config: &RunConfig,
    classes: &Path,
    lexicon: Option<&Path>,
    overrides: Option<&Path>,
    per_class: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let mut labels = dataset::load_class_labels(classes)?;
    if let Some(p) = overrides {
        labels = dataset::apply_label_overrides(&labels, &LabelOverrideFile::load(p)?)?;
    }
    let lexicon = match lexicon {
        Some(p) => ModifierLexicon::load(p)?,
        None => ModifierLexicon::default(),
    };
    let records = promptgen::generate_prompt_set(&labels, per_class, &lexicon, config.seed)?;
    let mut bytes = Vec::new();
    for r in &records {
        serde_json::to_writer(&mut bytes, r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        bytes.push(b'\n');
    }
    emit(out, &bytes)?;
    if let Some(p) = out {
        let meta = envelope(
            config,
            json!({ "records": records.len(), "classes": labels.len() }),
        )?;
        let mut side = p.as_os_str().to_owned();
        side.push(".run.json");
        let side = PathBuf::from(side);
        fs::write(&side, meta).map_err(|e| Error::io(&side, e))?;
    }
    Ok(EXIT_OK)
}

fn require_dir(out: Option<&Path>) -> Result<&Path> {
    let dir = out.ok_or_else(|| Error::InvalidArgument("--out DIR is required".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn cmd_simulate(config: &RunConfig, spec: &ClusterSpec, gap_offset: Option<f64>, out: Option<&Path>) -> Result<u8> {
    let dir = require_dir(out)?;
    let (refs, mut queries) = simulator::simulate_experiment(spec)?;
    if let Some(offset) = gap_offset {
        let direction = simulator::random_direction(spec.dimension, spec.seed);
        queries = simulator::apply_modality_gap(&queries, &direction, offset)?;
    }
    dataset::save_set(&refs, dir.join("ref.json"))?;
    dataset::save_set(&queries, dir.join("query.json"))?;
    let meta = envelope(
        config,
        json!({ "spec": spec, "references": "ref.json", "queries": "query.json" }),
    )?;
    let run = dir.join("run.json");
    fs::write(&run, meta).map_err(|e| Error::io(&run, e))?;
    Ok(EXIT_OK)
}

fn cmd_split(config: &RunConfig, set: &Path, eval_fraction: f64, out: Option<&Path>) -> Result<u8> {
    let dir = require_dir(out)?;
    let set = dataset::load_set(set)?;
    let (train, eval) = dataset::split_set(&set, eval_fraction, config.seed)?;
    dataset::save_set(&train, dir.join("train.json"))?;
    dataset::save_set(&eval, dir.join("eval.json"))?;
    let meta = envelope(
        config,
        json!({ "train": "train.json", "eval": "eval.json", "train_rows": train.len(), "eval_rows": eval.len() }),
    )?;
    let run = dir.join("run.json");
    fs::write(&run, meta).map_err(|e| Error::io(&run, e))?;
    Ok(EXIT_OK)
}
