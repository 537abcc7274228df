//! Chunked parallel construction of the sketch and shadow filter.
//!
//! The corpus is split into contiguous, non-overlapping line ranges. Every
//! worker fills a private sketch (and filter) with the same dimensions and
//! seeds; the partial results are summed after all workers join. Addition is
//! commutative, so the merged sketch is identical for any thread count.

use std::thread;

use crate::corpus::CorpusSchema;
use crate::error::{Error, Result};
use crate::sketch::{
    for_each_pair, pair_count, CoocSketch, PairScratch, ShadowFilter, DEFAULT_DEPTH,
    DEFAULT_FALSE_POSITIVE_RATE, DEFAULT_WIDTH,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowConfig {
    pub false_positive_rate: f64,
    /// Upper bound on distinct pairs; the pre-scanned insertion count when `None`.
    pub expected_items: Option<u64>,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        Self {
            false_positive_rate: DEFAULT_FALSE_POSITIVE_RATE,
            expected_items: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub depth: usize,
    pub width: usize,
    pub seed_set: u64,
    pub threads: usize,
    pub shadow: Option<ShadowConfig>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            depth: DEFAULT_DEPTH,
            width: DEFAULT_WIDTH,
            seed_set: 0,
            threads: 1,
            shadow: Some(ShadowConfig::default()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub sketch: CoocSketch,
    pub shadow: Option<ShadowFilter>,
    pub lines: usize,
    pub pair_insertions: u64,
}

/// Total pair insertions the corpus will produce, `sum C(j, 2)` over lines.
pub fn count_pair_insertions(lines: &[&str], schema: &CorpusSchema) -> u64 {
    lines
        .iter()
        .map(|l| pair_count(schema.internal_tokens(l).count()))
        .sum()
}

/// Splits `0..len` into `parts` contiguous ranges whose sizes differ by at most one.
pub fn chunk_ranges(len: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.clamp(1, len.max(1));
    let base = len / parts;
    let extra = len % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let end = start + base + usize::from(i < extra);
            let r = start..end;
            start = end;
            r
        })
        .collect()
}

fn fill(
    lines: &[&str],
    schema: &CorpusSchema,
    mut sketch: CoocSketch,
    mut shadow: Option<ShadowFilter>,
) -> (CoocSketch, Option<ShadowFilter>) {
    let mut scratch = PairScratch::default();
    for line in lines {
        for_each_pair(line, schema, &mut scratch, |_, _, key| {
            sketch.update_bytes(key, 1);
            if let Some(f) = shadow.as_mut() {
                f.insert_bytes(key);
            }
        });
    }
    (sketch, shadow)
}

pub fn build_from_lines(
    lines: &[&str],
    schema: &CorpusSchema,
    config: &BuildConfig,
) -> Result<BuildOutput> {
    if config.threads == 0 {
        return Err(Error::InvalidConfig(
            "thread count must be at least 1".into(),
        ));
    }
    let empty_sketch = CoocSketch::with_seed_set(config.depth, config.width, config.seed_set)?;
    let empty_shadow = match &config.shadow {
        None => None,
        Some(sc) => {
            let expected = match sc.expected_items {
                Some(n) => n,
                None => count_pair_insertions(lines, schema),
            };
            Some(ShadowFilter::with_capacity(
                expected,
                sc.false_positive_rate,
                config.seed_set,
            )?)
        }
    };

    let ranges = chunk_ranges(lines.len(), config.threads);
    let (sketch, shadow) = if ranges.len() == 1 {
        fill(lines, schema, empty_sketch, empty_shadow)
    } else {
        let parts: Vec<(CoocSketch, Option<ShadowFilter>)> = thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|r| {
                    let chunk = &lines[r.clone()];
                    let (s, f) = (empty_sketch.clone(), empty_shadow.clone());
                    scope.spawn(move || fill(chunk, schema, s, f))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sketch worker panicked"))
                .collect()
        });
        let mut parts = parts.into_iter();
        let (mut sketch, mut shadow) = parts.next().expect("at least one chunk");
        for (s, f) in parts {
            sketch.merge_from(&s)?;
            if let (Some(acc), Some(f)) = (shadow.as_mut(), f.as_ref()) {
                acc.union_from(f)?;
            }
        }
        (sketch, shadow)
    };
    if sketch.saturation_events() > 0 {
        log::warn!(
            "{} sketch increments saturated at u32::MAX",
            sketch.saturation_events()
        );
    }
    let pair_insertions = sketch.total_insertions();
    Ok(BuildOutput {
        sketch,
        shadow,
        lines: lines.len(),
        pair_insertions,
    })
}
