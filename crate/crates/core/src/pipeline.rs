//! End-to-end pipeline steps behind the `coocsketch` command line.
//!
//! Configuration is a line-based `key = value` file; command-line flags are
//! applied on top of it and win. Every step reads and writes plain files in
//! the output directory:
//!
//! | file               | written by | contents                                  |
//! |--------------------|------------|-------------------------------------------|
//! | `corpus.txt`       | textify    | one corpus line per table row             |
//! | `table.json`       | textify    | primary-key column and numeric clusters   |
//! | `sketch.csr`       | build      | sparse sketch (`COOCSKB1`)                |
//! | `shadow.bloom`     | build      | shadow filter (`COOCSHB1`)                |
//! | `stats.json`       | build      | per-column score summaries                |
//! | `dictionary.json`  | build      | column-value dictionary                   |

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::build::{build_from_lines, BuildConfig, ShadowConfig};
use crate::corpus::{
    stream_corpus, CorpusSchema, NumericClusterInfo, TableSpec, TextifyOptions, TokenFormat,
};
use crate::error::{Error, Result};
use crate::evaluate::{
    read_queries, run_accuracy_sweep, run_scaling_bench, write_results_csv, ExperimentResult,
    Penalty, ScalingRow, SweepConfig,
};
use crate::interpret::{
    model_report, AggregateResult, InterpretOptions, Interpreter, ModelReport, QuerySpec,
    RankedInterpretation, DEFAULT_MAX_COLUMNS, DEFAULT_TOP_K,
};
use crate::persist::{
    export_table, load_csr_file, load_shadow_file, save_csr_file, save_shadow_file, MAX_CELLS,
};
use crate::sketch::{
    CoocSketch, ShadowFilter, DEFAULT_DEPTH, DEFAULT_FALSE_POSITIVE_RATE, DEFAULT_WIDTH,
};
use crate::stats::{summarize, ColumnSummary, ColumnValueDictionary, StatsAccumulator};

pub const CORPUS_FILE: &str = "corpus.txt";
pub const TABLE_FILE: &str = "table.json";
pub const SKETCH_FILE: &str = "sketch.csr";
pub const SHADOW_FILE: &str = "shadow.bloom";
pub const STATS_FILE: &str = "stats.json";
pub const DICTIONARY_FILE: &str = "dictionary.json";

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub table: Option<PathBuf>,
    pub column_spec: Option<PathBuf>,
    /// Defaults to `<out_dir>/corpus.txt`.
    pub corpus: Option<PathBuf>,
    pub depth: usize,
    pub width: usize,
    /// Cells below `threshold * median(nonzero)` are dropped; 0 keeps all.
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub threads: usize,
    pub top_k: usize,
    pub columns: Vec<String>,
    pub out_dir: PathBuf,
    pub seed_set: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            table: None,
            column_spec: None,
            corpus: None,
            depth: DEFAULT_DEPTH,
            width: DEFAULT_WIDTH,
            threshold: 0.0,
            false_positive_rate: DEFAULT_FALSE_POSITIVE_RATE,
            threads: 1,
            top_k: DEFAULT_TOP_K,
            columns: Vec::new(),
            out_dir: PathBuf::from("out"),
            seed_set: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}` expects a number, got `{value}`")))
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 12] = [
        "table",
        "column_spec",
        "corpus",
        "depth",
        "width",
        "threshold",
        "fpr",
        "threads",
        "top_k",
        "columns",
        "out_dir",
        "seed_set",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "table" => self.table = Some(value.into()),
            "column_spec" => self.column_spec = Some(value.into()),
            "corpus" => self.corpus = Some(value.into()),
            "depth" => self.depth = parse_num(key, value)?,
            "width" => self.width = parse_num(key, value)?,
            "threshold" => self.threshold = parse_num(key, value)?,
            "fpr" => self.false_positive_rate = parse_num(key, value)?,
            "threads" => self.threads = parse_num(key, value)?,
            "top_k" => self.top_k = parse_num(key, value)?,
            "columns" => {
                self.columns = value
                    .split(',')
                    .map(str::trim)
                    .filter(|c| !c.is_empty())
                    .map(String::from)
                    .collect()
            }
            "out_dir" => self.out_dir = value.into(),
            "seed_set" => self.seed_set = parse_num(key, value)?,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown key `{key}`; expected one of {}",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", i + 1))
            })?;
            config.set(key.trim(), value)?;
        }
        Ok(config)
    }

    /// Config file (if any), then overrides in order, then validation.
    pub fn resolve(file: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut config = match file {
            Some(path) => {
                Self::parse(&fs::read_to_string(path).map_err(|e| Error::file(path, e))?)?
            }
            None => Self::default(),
        };
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(1..=64).contains(&self.depth) {
            return bad(format!("depth must be in 1..=64, got {}", self.depth));
        }
        if self.width == 0 || (self.depth as u64) * (self.width as u64) > MAX_CELLS {
            return bad(format!(
                "width must be >= 1 with depth * width <= {MAX_CELLS}, got {}",
                self.width
            ));
        }
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return bad(format!("threshold must be >= 0, got {}", self.threshold));
        }
        if !(self.false_positive_rate > 0.0 && self.false_positive_rate < 1.0) {
            return bad(format!(
                "fpr must be in (0, 1), got {}",
                self.false_positive_rate
            ));
        }
        if !(1..=1024).contains(&self.threads) {
            return bad(format!("threads must be in 1..=1024, got {}", self.threads));
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1".into());
        }
        if self.columns.len() > DEFAULT_MAX_COLUMNS {
            return bad(format!("at most {DEFAULT_MAX_COLUMNS} columns of interest"));
        }
        let paths: Vec<PathBuf> = [&self.table, &self.column_spec]
            .into_iter()
            .flatten()
            .cloned()
            .chain([self.corpus_path(), self.out_dir.clone()])
            .collect();
        for (i, a) in paths.iter().enumerate() {
            if paths[i + 1..].contains(a) {
                return bad(format!("path `{}` is used for two roles", a.display()));
            }
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus
            .clone()
            .unwrap_or_else(|| self.out_dir.join(CORPUS_FILE))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn build_config(&self) -> BuildConfig {
        BuildConfig {
            depth: self.depth,
            width: self.width,
            seed_set: self.seed_set,
            threads: self.threads,
            shadow: Some(ShadowConfig {
                false_positive_rate: self.false_positive_rate,
                expected_items: None,
            }),
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("`{key}` is not set")))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| Error::file(path, e))?,
    ))
}

fn ensure_out_dir(config: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::file(&config.out_dir, e))
}

/// Sidecar written next to the corpus: what build needs to know about the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    pub primary_column: String,
    pub rows: usize,
    pub tokens: usize,
    pub clusters: Vec<NumericClusterInfo>,
}

pub fn cmd_textify(config: &PipelineConfig) -> Result<TableInfo> {
    let table_path = required(&config.table, "table")?;
    let spec = TableSpec::from_json_file(required(&config.column_spec, "column_spec")?)?;
    let source = fs::File::open(table_path).map_err(|e| Error::file(table_path, e))?;
    let options = TextifyOptions::default();
    let table = stream_corpus(BufReader::new(source), &spec, &options)?;
    ensure_out_dir(config)?;
    let corpus_path = config.corpus_path();
    let summary = table.write_corpus(create(&corpus_path)?)?;
    let info = TableInfo {
        primary_column: table.schema().primary_column,
        rows: summary.rows,
        tokens: summary.tokens,
        clusters: table.clusters(),
    };
    write_text(
        &config.out(TABLE_FILE),
        &serde_json::to_string_pretty(&info)?,
    )?;
    info!(
        "wrote {} rows ({} tokens) to {}",
        info.rows,
        info.tokens,
        corpus_path.display()
    );
    Ok(info)
}

/// Column spec wins over the textify sidecar.
fn corpus_schema(config: &PipelineConfig) -> Result<(CorpusSchema, Vec<NumericClusterInfo>)> {
    let sidecar = config.out(TABLE_FILE);
    let info: Option<TableInfo> = if sidecar.exists() {
        Some(serde_json::from_str(&read_text(&sidecar)?)?)
    } else {
        None
    };
    let clusters = info
        .as_ref()
        .map(|i| i.clusters.clone())
        .unwrap_or_default();
    let primary = match (&config.column_spec, info) {
        (Some(path), _) => TableSpec::from_json_file(path)?.primary_column(),
        (None, Some(info)) => info.primary_column,
        (None, None) => {
            return Err(Error::InvalidConfig(format!(
                "cannot tell the primary-key column: set `column_spec` or run textify to write {}",
                sidecar.display()
            )))
        }
    };
    Ok((CorpusSchema::new(TokenFormat::default(), primary), clusters))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildReport {
    pub lines: usize,
    pub pair_insertions: u64,
    pub nnz: usize,
    pub sparsity: f64,
    pub threshold_cutoff: u32,
    pub sketch_bytes: usize,
    pub shadow_bytes: usize,
}

pub fn cmd_build(config: &PipelineConfig) -> Result<BuildReport> {
    let (schema, _) = corpus_schema(config)?;
    let text = read_text(&config.corpus_path())?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        warn!(
            "corpus {} is empty; writing an empty sketch",
            config.corpus_path().display()
        );
    }

    let mut acc = StatsAccumulator::new();
    for (i, line) in lines.iter().enumerate() {
        let parsed = schema.parse_line(line).map_err(|e| Error::Ingestion {
            row: i + 1,
            message: e.to_string(),
        })?;
        acc.push(&parsed)?;
    }
    let (stats, dictionary) = acc.finish();

    let out = build_from_lines(&lines, &schema, &config.build_config())?;
    let sketch = if config.threshold > 0.0 {
        out.sketch.threshold(config.threshold)?
    } else {
        out.sketch
    };
    let shadow = out.shadow.expect("shadow configured");

    ensure_out_dir(config)?;
    let sketch_bytes = save_csr_file(&sketch, &config.out(SKETCH_FILE))?;
    let shadow_bytes = save_shadow_file(&shadow, &config.out(SHADOW_FILE))?;
    write_text(
        &config.out(STATS_FILE),
        &serde_json::to_string_pretty(&summarize(&stats))?,
    )?;
    write_text(&config.out(DICTIONARY_FILE), &dictionary.to_json_pretty()?)?;
    Ok(BuildReport {
        lines: out.lines,
        pair_insertions: out.pair_insertions,
        nnz: sketch.nnz(),
        sparsity: sketch.sparsity(),
        threshold_cutoff: sketch.threshold_cutoff(),
        sketch_bytes,
        shadow_bytes,
    })
}

/// Everything interpretation reads back from a build.
pub struct Artifacts {
    pub sketch: CoocSketch,
    pub shadow: ShadowFilter,
    pub dictionary: ColumnValueDictionary,
    pub format: TokenFormat,
}

impl Artifacts {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        Ok(Self {
            sketch: load_csr_file(&config.out(SKETCH_FILE))?,
            shadow: load_shadow_file(&config.out(SHADOW_FILE))?,
            dictionary: ColumnValueDictionary::from_json(&read_text(
                &config.out(DICTIONARY_FILE),
            )?)?,
            format: TokenFormat::default(),
        })
    }

    pub fn interpreter(&self) -> Interpreter<'_> {
        Interpreter::new(&self.sketch, &self.shadow, &self.dictionary, &self.format)
    }
}

pub fn cmd_interpret(config: &PipelineConfig, query: &QuerySpec) -> Result<RankedInterpretation> {
    let artifacts = Artifacts::load(config)?;
    let options = InterpretOptions {
        top_k: config.top_k,
        max_columns: DEFAULT_MAX_COLUMNS,
    };
    artifacts
        .interpreter()
        .interpret_query(query, &config.columns, &options)
}

pub fn cmd_aggregate(
    config: &PipelineConfig,
    token: &str,
    column: &str,
) -> Result<AggregateResult> {
    Artifacts::load(config)?
        .interpreter()
        .aggregate_stats(token, column)
}

/// Model report over the corpus: scores per column, numeric clusters, and
/// columns ranked by impact.
pub fn cmd_stats(config: &PipelineConfig) -> Result<ModelReport> {
    let (schema, clusters) = corpus_schema(config)?;
    let text = read_text(&config.corpus_path())?;
    let mut acc = StatsAccumulator::new();
    for (i, line) in text.lines().enumerate() {
        let parsed = schema.parse_line(line).map_err(|e| Error::Ingestion {
            row: i + 1,
            message: e.to_string(),
        })?;
        acc.push(&parsed)?;
    }
    let (stats, _) = acc.finish();
    Ok(model_report(&stats, &clusters))
}

/// Reads the per-column summaries written by build.
pub fn load_stats(config: &PipelineConfig) -> Result<Vec<ColumnSummary>> {
    Ok(serde_json::from_str(&read_text(&config.out(STATS_FILE))?)?)
}

pub fn cmd_export_table(config: &PipelineConfig, output: &Path) -> Result<usize> {
    let sketch = load_csr_file(&config.out(SKETCH_FILE))?;
    let mut sink = create(output)?;
    let rows = export_table(&sketch, &mut sink)?;
    sink.flush().map_err(|e| Error::file(output, e))?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub queries: PathBuf,
    /// Widths to sweep; the configured width alone when empty.
    pub widths: Vec<usize>,
    pub dataset: String,
    pub penalty: Penalty,
}

/// Accuracy sweep; writes `experiments.csv` and `experiments.json`.
pub fn cmd_evaluate(
    config: &PipelineConfig,
    options: &EvaluateOptions,
) -> Result<Vec<ExperimentResult>> {
    let (schema, _) = corpus_schema(config)?;
    let text = read_text(&config.corpus_path())?;
    let lines: Vec<&str> = text.lines().collect();
    let source = fs::File::open(&options.queries).map_err(|e| Error::file(&options.queries, e))?;
    let queries = read_queries(BufReader::new(source))?;
    let widths = if options.widths.is_empty() {
        vec![config.width]
    } else {
        options.widths.clone()
    };
    let sweep = SweepConfig {
        dataset: options.dataset.clone(),
        depth: config.depth,
        seed_set: config.seed_set,
        threads: config.threads,
        top_k: config.top_k,
        penalty: options.penalty,
        false_positive_rate: config.false_positive_rate,
        threshold: config.threshold,
        ..SweepConfig::default()
    };
    let results = run_accuracy_sweep(&lines, &schema, &widths, &queries, &sweep)?;
    ensure_out_dir(config)?;
    write_results_csv(&results, create(&config.out("experiments.csv"))?)?;
    write_text(
        &config.out("experiments.json"),
        &serde_json::to_string_pretty(&results)?,
    )?;
    Ok(results)
}

/// Build-time scaling over thread counts; writes `bench.csv`.
pub fn cmd_bench(
    config: &PipelineConfig,
    thread_counts: &[usize],
    repeats: usize,
) -> Result<Vec<ScalingRow>> {
    let (schema, _) = corpus_schema(config)?;
    let text = read_text(&config.corpus_path())?;
    let lines: Vec<&str> = text.lines().collect();
    let rows = run_scaling_bench(
        &lines,
        &schema,
        thread_counts,
        config.depth,
        config.width,
        config.seed_set,
        repeats,
    )?;
    ensure_out_dir(config)?;
    let mut w = csv::Writer::from_writer(create(&config.out("bench.csv"))?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}
