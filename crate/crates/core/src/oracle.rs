//! Exact in-memory co-occurrence counts, the ground truth the sketch is
//! validated against. Desk-scale only.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{CorpusLine, CorpusSchema, TokenFormat};
use crate::error::{Error, Result};
use crate::ranking::{top_k, RankedToken};
use crate::sketch::{for_each_pair, PairKey, PairScratch};

#[derive(Debug, Clone, Default)]
pub struct ExactCounts {
    format: TokenFormat,
    pairs: HashMap<PairKey, u64>,
    neighbors: HashMap<String, HashMap<String, u64>>,
    max_pairs: Option<usize>,
}

impl ExactCounts {
    pub fn new(format: TokenFormat) -> Self {
        Self {
            format,
            ..Self::default()
        }
    }

    /// Fails with a capacity error once more than `max_pairs` distinct pairs
    /// would be held.
    pub fn with_capacity_limit(mut self, max_pairs: usize) -> Self {
        self.max_pairs = Some(max_pairs);
        self
    }

    fn touch(&mut self, token: &str) {
        if !self.neighbors.contains_key(token) {
            self.neighbors.insert(token.to_string(), HashMap::new());
        }
    }

    fn add_pair(&mut self, a: &str, b: &str) -> Result<()> {
        let key = PairKey::new(a, b);
        match self.pairs.get_mut(&key) {
            Some(n) => *n += 1,
            None => {
                if let Some(max) = self.max_pairs {
                    if self.pairs.len() >= max {
                        return Err(Error::Capacity(format!(
                            "exact counting exceeds {max} distinct pairs; use the sketch instead"
                        )));
                    }
                }
                self.pairs.insert(key, 1);
            }
        }
        *self
            .neighbors
            .get_mut(a)
            .expect("token registered")
            .entry(b.to_string())
            .or_insert(0) += 1;
        *self
            .neighbors
            .get_mut(b)
            .expect("token registered")
            .entry(a.to_string())
            .or_insert(0) += 1;
        Ok(())
    }

    pub fn add_text_line(
        &mut self,
        line: &str,
        schema: &CorpusSchema,
        scratch: &mut PairScratch,
    ) -> Result<()> {
        for tok in schema.internal_tokens(line) {
            self.touch(tok);
        }
        let mut result = Ok(());
        for_each_pair(line, schema, scratch, |a, b, _| {
            if result.is_ok() {
                result = self.add_pair(a, b);
            }
        });
        result
    }

    pub fn add_line(&mut self, line: &CorpusLine) -> Result<()> {
        let tokens: Vec<String> = line
            .internal_tokens()
            .map(|t| t.render(&self.format))
            .collect();
        for t in &tokens {
            self.touch(t);
        }
        for (i, a) in tokens.iter().enumerate() {
            for b in &tokens[i + 1..] {
                self.add_pair(a, b)?;
            }
        }
        Ok(())
    }

    pub fn format(&self) -> &TokenFormat {
        &self.format
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.pairs.values().sum()
    }

    pub fn count(&self, key: &PairKey) -> u64 {
        self.pairs.get(key).copied().unwrap_or(0)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PairKey, u64)> {
        self.pairs.iter().map(|(k, &n)| (k, n))
    }

    pub fn knows(&self, token: &str) -> bool {
        self.neighbors.contains_key(token)
    }

    /// Every internal token seen, sorted.
    pub fn tokens(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.neighbors.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn neighbors(&self, token: &str) -> Option<&HashMap<String, u64>> {
        self.neighbors.get(token)
    }

    /// Top-`k` neighbors of `token` restricted to `column`.
    pub fn exact_top_k(&self, token: &str, column: &str, k: usize) -> Result<Vec<RankedToken>> {
        let neighbors = self
            .neighbors
            .get(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        let entries = neighbors
            .iter()
            .filter(|(n, _)| self.format.split(n).is_some_and(|(c, _)| c == column))
            .map(|(n, &c)| RankedToken::new(n.clone(), c))
            .collect();
        Ok(top_k(entries, k))
    }

    /// JSON object `{token: {column: [{token, count}, ...]}}` for offline diffing.
    pub fn dump_top_k(&self, queries: &[(String, String)], k: usize) -> Result<String> {
        let mut out: BTreeMap<&str, BTreeMap<&str, Vec<RankedToken>>> = BTreeMap::new();
        for (token, column) in queries {
            let list = self.exact_top_k(token, column, k)?;
            out.entry(token).or_default().insert(column, list);
        }
        Ok(serde_json::to_string_pretty(&out)?)
    }
}

/// Exact counts over a rendered corpus.
pub fn build_exact(lines: &[&str], schema: &CorpusSchema) -> Result<ExactCounts> {
    build_exact_limited(lines, schema, None)
}

pub fn build_exact_limited(
    lines: &[&str],
    schema: &CorpusSchema,
    max_pairs: Option<usize>,
) -> Result<ExactCounts> {
    let mut counts = ExactCounts::new(schema.format.clone());
    counts.max_pairs = max_pairs;
    let mut scratch = PairScratch::default();
    for line in lines {
        counts.add_text_line(line, schema, &mut scratch)?;
    }
    Ok(counts)
}
