//! Accuracy, space and build-scaling experiments.
//!
//! Ranked lists are compared with an NDCG variant that grades relevance by
//! baseline position (`rel(x) = k - idx_B(x)`) and optionally damps every hit
//! by `1 / (1 + |i - idx_B(x)|)`, its displacement from the baseline position.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::build::{build_from_lines, BuildConfig, ShadowConfig};
use crate::corpus::CorpusSchema;
use crate::error::{Error, Result};
use crate::interpret::Interpreter;
use crate::oracle::build_exact_limited;
use crate::persist::{csr_file_size, dense_size, save_csr};
use crate::ranking::tokens;
use crate::stats::StatsAccumulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    None,
    #[default]
    ReciprocalDisplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NdcgConfig {
    pub k: usize,
    pub penalty: Penalty,
}

impl NdcgConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            penalty: Penalty::default(),
        }
    }
}

fn dcg<S: AsRef<str>>(positions: &HashMap<&str, usize>, list: &[S], config: &NdcgConfig) -> f64 {
    list.iter()
        .take(config.k)
        .enumerate()
        .filter_map(|(i, x)| {
            let idx = *positions.get(x.as_ref())?;
            let rel = (config.k - idx) as f64;
            let p = match config.penalty {
                Penalty::None => 1.0,
                Penalty::ReciprocalDisplacement => 1.0 / (1.0 + i.abs_diff(idx) as f64),
            };
            Some(rel * p / ((i + 2) as f64).log2())
        })
        .fold(0.0, |acc, g| acc + g)
}

fn check_distinct<S: AsRef<str>>(list: &[S], which: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for x in list {
        if !seen.insert(x.as_ref()) {
            return Err(Error::InvalidConfig(format!(
                "{which} list repeats `{}`",
                x.as_ref()
            )));
        }
    }
    Ok(())
}

/// NDCG of `candidate` against `baseline`, both truncated to `k`.
pub fn ndcg<S: AsRef<str>, T: AsRef<str>>(
    baseline: &[S],
    candidate: &[T],
    config: &NdcgConfig,
) -> Result<f64> {
    if config.k == 0 {
        return Err(Error::InvalidConfig(
            "NDCG cutoff k must be at least 1".into(),
        ));
    }
    if baseline.is_empty() {
        return Err(Error::UndefinedScore("empty baseline list".into()));
    }
    check_distinct(baseline, "baseline")?;
    check_distinct(candidate, "candidate")?;
    let positions: HashMap<&str, usize> = baseline
        .iter()
        .take(config.k)
        .enumerate()
        .map(|(i, x)| (x.as_ref(), i))
        .collect();
    let ideal = dcg(&positions, baseline, config);
    Ok(dcg(&positions, candidate, config) / ideal)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// One `(token, column)` interpretation query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub token: String,
    pub column: String,
}

/// Parses a query file: one `token,column` per line; blank lines and `#`
/// comments are skipped.
pub fn read_queries<R: BufRead>(source: R) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (token, column) = line.rsplit_once(',').ok_or_else(|| Error::Ingestion {
            row: i + 1,
            message: format!("expected `token,column`, got `{line}`"),
        })?;
        out.push(Query {
            token: token.trim().to_string(),
            column: column.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn write_queries<W: Write>(queries: &[Query], mut out: W) -> Result<()> {
    for q in queries {
        writeln!(out, "{},{}", q.token, q.column)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub dataset: String,
    pub width: usize,
    pub depth: usize,
    pub mean_ndcg: f64,
    pub queries_scored: usize,
    pub nnz: usize,
    pub full_size_bytes: usize,
    pub sparse_size_bytes: usize,
    pub sparsity_pct: f64,
    pub build_ms: f64,
    pub threads: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub dataset: String,
    pub depth: usize,
    pub seed_set: u64,
    pub threads: usize,
    pub top_k: usize,
    pub penalty: Penalty,
    pub false_positive_rate: f64,
    pub threshold: f64,
    /// Refuse to run the exact oracle past this many distinct pairs.
    pub max_exact_pairs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dataset: "corpus".into(),
            depth: crate::sketch::DEFAULT_DEPTH,
            seed_set: 0,
            threads: 1,
            top_k: crate::interpret::DEFAULT_TOP_K,
            penalty: Penalty::default(),
            false_positive_rate: crate::sketch::DEFAULT_FALSE_POSITIVE_RATE,
            threshold: 0.0,
            max_exact_pairs: Some(50_000_000),
        }
    }
}

/// For each width: build the sketch, then average NDCG of sketch top-k
/// against exact top-k over the queries. Queries whose exact list is empty
/// are not scored.
pub fn run_accuracy_sweep(
    lines: &[&str],
    schema: &CorpusSchema,
    widths: &[usize],
    queries: &[Query],
    config: &SweepConfig,
) -> Result<Vec<ExperimentResult>> {
    let exact = build_exact_limited(lines, schema, config.max_exact_pairs)?;
    let mut acc = StatsAccumulator::new();
    for line in lines {
        acc.push(&schema.parse_line(line)?)?;
    }
    let (_, dictionary) = acc.finish();
    let ndcg_config = NdcgConfig {
        k: config.top_k,
        penalty: config.penalty,
    };

    let mut baselines = Vec::with_capacity(queries.len());
    for q in queries {
        baselines.push(exact.exact_top_k(&q.token, &q.column, config.top_k)?);
    }
    let expected_pairs = exact.len() as u64;

    let mut results = Vec::with_capacity(widths.len());
    for &width in widths {
        let mut result = ExperimentResult {
            dataset: config.dataset.clone(),
            width,
            depth: config.depth,
            mean_ndcg: 0.0,
            queries_scored: 0,
            nnz: 0,
            full_size_bytes: dense_size(config.depth, width),
            sparse_size_bytes: 0,
            sparsity_pct: 0.0,
            build_ms: 0.0,
            threads: config.threads,
            error: None,
        };
        let build = BuildConfig {
            depth: config.depth,
            width,
            seed_set: config.seed_set,
            threads: config.threads,
            shadow: Some(ShadowConfig {
                false_positive_rate: config.false_positive_rate,
                expected_items: Some(expected_pairs),
            }),
        };
        let start = Instant::now();
        let built = build_from_lines(lines, schema, &build).and_then(|out| {
            let sketch = if config.threshold > 0.0 {
                out.sketch.threshold(config.threshold)?
            } else {
                out.sketch
            };
            Ok((sketch, out.shadow.expect("shadow configured")))
        });
        result.build_ms = start.elapsed().as_secs_f64() * 1e3;
        let (sketch, shadow) = match built {
            Ok(v) => v,
            Err(e) => {
                result.error = Some(e.to_string());
                results.push(result);
                continue;
            }
        };
        result.nnz = sketch.nnz();
        result.sparse_size_bytes = csr_file_size(sketch.depth(), result.nnz);
        result.sparsity_pct = 100.0 * sketch.sparsity();

        let interp = Interpreter::new(&sketch, &shadow, &dictionary, &schema.format);
        let mut total = 0.0;
        for (q, baseline) in queries.iter().zip(&baselines) {
            if baseline.is_empty() {
                continue;
            }
            let score = match interp.sketch_top_k(&q.token, &q.column, config.top_k) {
                Ok(list) => ndcg(&tokens(baseline), &tokens(&list), &ndcg_config)?,
                Err(_) => 0.0,
            };
            total += score;
            result.queries_scored += 1;
        }
        if result.queries_scored > 0 {
            result.mean_ndcg = total / result.queries_scored as f64;
        } else {
            result.error = Some("no query has a non-empty exact list".into());
        }
        results.push(result);
    }
    Ok(results)
}

pub fn write_results_csv<W: Write>(results: &[ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub threads: usize,
    pub build_ms: f64,
    /// Relative to the first entry of the thread list.
    pub speedup: f64,
    pub csr_bytes: usize,
    /// CSR bytes equal those of the first entry.
    pub identical: bool,
}

/// Times sketch construction for each thread count (best of `repeats`).
pub fn run_scaling_bench(
    lines: &[&str],
    schema: &CorpusSchema,
    thread_counts: &[usize],
    depth: usize,
    width: usize,
    seed_set: u64,
    repeats: usize,
) -> Result<Vec<ScalingRow>> {
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(thread_counts.len());
    let mut reference: Option<Vec<u8>> = None;
    for &threads in thread_counts {
        let config = BuildConfig {
            depth,
            width,
            seed_set,
            threads,
            shadow: None,
        };
        let mut best = f64::INFINITY;
        let mut bytes = Vec::new();
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            let out = build_from_lines(lines, schema, &config)?;
            best = best.min(start.elapsed().as_secs_f64() * 1e3);
            bytes = save_csr(&out.sketch);
        }
        let identical = match &reference {
            None => {
                reference = Some(bytes.clone());
                true
            }
            Some(r) => *r == bytes,
        };
        let base = rows.first().map_or(best, |r| r.build_ms);
        rows.push(ScalingRow {
            threads,
            build_ms: best,
            speedup: base / best,
            csr_bytes: bytes.len(),
            identical,
        });
    }
    Ok(rows)
}
