//! Per-column token occurrence statistics and the scores derived from them.
//!
//! * influence: `1 - emt / total`
//! * column discriminatory: `unique / total`
//! * token discriminatory: `1 - occurrences / total`
//!
//! EMT tokens count toward `total` and `emt` only; they are never stored per
//! token and never counted as unique values.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusLine, TokenKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ColumnStats {
    pub column: String,
    pub primary: bool,
    pub total_tokens: u64,
    pub emt_tokens: u64,
    pub unique_tokens: u64,
    pub per_token_occurrences: BTreeMap<String, u64>,
}

impl ColumnStats {
    pub fn new(column: impl Into<String>) -> Self {
        Self {
            column: column.into(),
            ..Self::default()
        }
    }

    pub fn record(&mut self, value: &str, kind: TokenKind) {
        self.total_tokens += 1;
        match kind {
            TokenKind::Empty => self.emt_tokens += 1,
            TokenKind::Primary | TokenKind::Internal => {
                let n = self
                    .per_token_occurrences
                    .entry(value.to_string())
                    .or_insert(0);
                if *n == 0 {
                    self.unique_tokens += 1;
                }
                *n += 1;
            }
        }
    }

    pub fn occurrences(&self, value: &str) -> u64 {
        self.per_token_occurrences.get(value).copied().unwrap_or(0)
    }
}

/// Valid internal values per non-key column.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ColumnValueDictionary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_key: Option<String>,
    pub columns: BTreeMap<String, BTreeSet<String>>,
}

impl ColumnValueDictionary {
    pub fn values(&self, column: &str) -> Option<&BTreeSet<String>> {
        self.columns.get(column)
    }

    pub fn contains_column(&self, column: &str) -> bool {
        self.columns.contains_key(column)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Single-writer accumulator behind [`accumulate`].
#[derive(Debug, Default)]
pub struct StatsAccumulator {
    columns: Vec<ColumnStats>,
    dictionary: ColumnValueDictionary,
    lines: u64,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, line: &CorpusLine) -> Result<()> {
        if self.lines == 0 {
            for t in &line.tokens {
                let mut stats = ColumnStats::new(&t.column);
                stats.primary = t.kind == TokenKind::Primary;
                if stats.primary {
                    self.dictionary.primary_key = Some(t.column.clone());
                } else {
                    self.dictionary.columns.entry(t.column.clone()).or_default();
                }
                self.columns.push(stats);
            }
        } else if line.tokens.len() != self.columns.len()
            || line
                .tokens
                .iter()
                .zip(&self.columns)
                .any(|(t, c)| t.column != c.column)
        {
            return Err(Error::Schema(format!(
                "corpus line {} has a different column set than line 1",
                self.lines + 1
            )));
        }
        for (t, stats) in line.tokens.iter().zip(self.columns.iter_mut()) {
            if (t.kind == TokenKind::Primary) != stats.primary {
                return Err(Error::Schema(format!(
                    "column `{}` changes key role at corpus line {}",
                    t.column,
                    self.lines + 1
                )));
            }
            stats.record(&t.value, t.kind);
            if t.kind == TokenKind::Internal {
                if let Some(set) = self.dictionary.columns.get_mut(&t.column) {
                    if !set.contains(&t.value) {
                        set.insert(t.value.clone());
                    }
                }
            }
        }
        self.lines += 1;
        Ok(())
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    pub fn finish(self) -> (Vec<ColumnStats>, ColumnValueDictionary) {
        (self.columns, self.dictionary)
    }
}

pub fn accumulate<'a, I>(corpus: I) -> Result<(Vec<ColumnStats>, ColumnValueDictionary)>
where
    I: IntoIterator<Item = &'a CorpusLine>,
{
    let mut acc = StatsAccumulator::new();
    for line in corpus {
        acc.push(line)?;
    }
    Ok(acc.finish())
}

fn require_tokens(stats: &ColumnStats) -> Result<f64> {
    if stats.total_tokens == 0 {
        return Err(Error::UndefinedScore(format!(
            "column `{}` has no tokens",
            stats.column
        )));
    }
    Ok(stats.total_tokens as f64)
}

pub fn influence_score(stats: &ColumnStats) -> Result<f64> {
    let total = require_tokens(stats)?;
    Ok(1.0 - stats.emt_tokens as f64 / total)
}

pub fn column_discriminatory_score(stats: &ColumnStats) -> Result<f64> {
    let total = require_tokens(stats)?;
    Ok(stats.unique_tokens as f64 / total)
}

pub fn token_discriminatory_score(token_count: u64, stats: &ColumnStats) -> Result<f64> {
    let total = require_tokens(stats)?;
    if token_count == 0 {
        return Err(Error::UnknownToken(format!(
            "zero-count token in column `{}`",
            stats.column
        )));
    }
    if token_count > stats.total_tokens {
        return Err(Error::UndefinedScore(format!(
            "token count {token_count} exceeds column total {}",
            stats.total_tokens
        )));
    }
    Ok(1.0 - token_count as f64 / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token: String,
    pub occurrences: u64,
    pub score: f64,
}

/// Least and most discriminatory values of a column, ties broken by the
/// lexicographically smaller value.
pub fn min_max_discriminatory_tokens(stats: &ColumnStats) -> Result<(TokenScore, TokenScore)> {
    let mut entries = stats.per_token_occurrences.iter();
    let first = entries
        .next()
        .ok_or_else(|| Error::NoInternalTokens(stats.column.clone()))?;
    let (mut most, mut least) = (first, first);
    // BTreeMap iterates in value order, so strict comparisons keep the
    // lexicographically first value on ties.
    for e in entries {
        if e.1 > most.1 {
            most = e;
        }
        if e.1 < least.1 {
            least = e;
        }
    }
    let score = |(token, &n): (&String, &u64)| -> Result<TokenScore> {
        Ok(TokenScore {
            token: token.clone(),
            occurrences: n,
            score: token_discriminatory_score(n, stats)?,
        })
    };
    Ok((score(most)?, score(least)?))
}

/// One entry of the stats file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub primary: bool,
    pub total: u64,
    pub emt: u64,
    pub unique: u64,
    pub influence: Option<f64>,
    pub discriminatory: Option<f64>,
    pub min_token: Option<TokenScore>,
    pub max_token: Option<TokenScore>,
}

impl ColumnSummary {
    pub fn from_stats(stats: &ColumnStats) -> Self {
        let min_max = min_max_discriminatory_tokens(stats).ok();
        Self {
            name: stats.column.clone(),
            primary: stats.primary,
            total: stats.total_tokens,
            emt: stats.emt_tokens,
            unique: stats.unique_tokens,
            influence: influence_score(stats).ok(),
            discriminatory: column_discriminatory_score(stats).ok(),
            min_token: min_max.as_ref().map(|m| m.0.clone()),
            max_token: min_max.map(|m| m.1),
        }
    }
}

pub fn summarize(stats: &[ColumnStats]) -> Vec<ColumnSummary> {
    stats.iter().map(ColumnSummary::from_stats).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use proptest::prelude::*;

    fn column(values: &[(&str, u64)], emt: u64) -> ColumnStats {
        let mut s = ColumnStats::new("A");
        for (v, n) in values {
            for _ in 0..*n {
                s.record(v, TokenKind::Internal);
            }
        }
        for _ in 0..emt {
            s.record("EMT", TokenKind::Empty);
        }
        s
    }

    fn line(values: &[(&str, &str, TokenKind)]) -> CorpusLine {
        CorpusLine {
            tokens: values
                .iter()
                .map(|(c, v, k)| Token {
                    column: c.to_string(),
                    value: v.to_string(),
                    kind: *k,
                })
                .collect(),
        }
    }

    #[test]
    fn hand_counted_fixture() {
        let mut lines = Vec::new();
        let vals = ["x", "x", "x", "x", "x", "x", "x", "y", "y", "EMT"];
        for (i, v) in vals.iter().enumerate() {
            let kind = if *v == "EMT" {
                TokenKind::Empty
            } else {
                TokenKind::Internal
            };
            let id = i.to_string();
            lines.push(line(&[("ID", &id, TokenKind::Primary), ("A", v, kind)]));
        }
        let (stats, dict) = accumulate(&lines).unwrap();
        let a = &stats[1];
        assert_eq!((a.total_tokens, a.emt_tokens, a.unique_tokens), (10, 1, 2));
        assert_eq!(a.occurrences("x"), 7);
        assert_eq!(dict.primary_key.as_deref(), Some("ID"));
        assert_eq!(
            dict.values("A").unwrap().iter().collect::<Vec<_>>(),
            ["x", "y"]
        );
        assert!(!dict.contains_column("ID"));
        assert_eq!(column_discriminatory_score(&stats[0]).unwrap(), 1.0);
    }

    #[test]
    fn empty_corpus() {
        let (stats, dict) = accumulate(&[]).unwrap();
        assert!(stats.is_empty());
        assert!(dict.columns.is_empty());
    }

    #[test]
    fn inconsistent_columns_rejected() {
        let a = line(&[
            ("ID", "1", TokenKind::Primary),
            ("A", "x", TokenKind::Internal),
        ]);
        let b = line(&[
            ("ID", "2", TokenKind::Primary),
            ("B", "x", TokenKind::Internal),
        ]);
        assert!(matches!(accumulate(&[a, b]), Err(Error::Schema(_))));
    }

    #[test]
    fn influence_values() {
        assert_eq!(influence_score(&column(&[("a", 10)], 0)).unwrap(), 1.0);
        assert_eq!(influence_score(&column(&[], 4)).unwrap(), 0.0);
        assert!((influence_score(&column(&[("a", 8)], 2)).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(
            influence_score(&ColumnStats::new("A")),
            Err(Error::UndefinedScore(_))
        ));
    }

    #[test]
    fn column_discriminatory_values() {
        let all_unique = column(&[("a", 1), ("b", 1), ("c", 1)], 0);
        assert_eq!(column_discriminatory_score(&all_unique).unwrap(), 1.0);
        let n = 7;
        let one_value = column(&[("a", n)], 0);
        assert_eq!(
            column_discriminatory_score(&one_value).unwrap(),
            1.0 / n as f64
        );
        let s = column(&[("a", 4), ("b", 4), ("c", 4)], 0);
        assert_eq!(column_discriminatory_score(&s).unwrap(), 0.25);
    }

    #[test]
    fn token_discriminatory_values() {
        let n = 9u64;
        let s = column(&[("a", 1), ("b", n - 1)], 0);
        assert_eq!(
            token_discriminatory_score(1, &s).unwrap(),
            (n - 1) as f64 / n as f64
        );
        let whole = column(&[("a", 5)], 0);
        assert_eq!(token_discriminatory_score(5, &whole).unwrap(), 0.0);
        let s = column(&[("a", 4), ("b", 6)], 0);
        assert!((token_discriminatory_score(4, &s).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(
            token_discriminatory_score(0, &s),
            Err(Error::UnknownToken(_))
        ));
    }

    #[test]
    fn min_max_tokens() {
        let (min, max) = min_max_discriminatory_tokens(&column(&[("a", 9), ("b", 1)], 0)).unwrap();
        assert_eq!(min.token, "a");
        assert!((min.score - 0.1).abs() < 1e-12);
        assert_eq!(max.token, "b");
        assert!((max.score - 0.9).abs() < 1e-12);

        let (min, max) = min_max_discriminatory_tokens(&column(&[("z", 3)], 0)).unwrap();
        assert_eq!((min.token.as_str(), max.token.as_str()), ("z", "z"));

        let (min, max) = min_max_discriminatory_tokens(&column(&[("b", 5), ("a", 5)], 0)).unwrap();
        assert_eq!((min.token.as_str(), max.token.as_str()), ("a", "a"));

        assert!(matches!(
            min_max_discriminatory_tokens(&column(&[], 3)),
            Err(Error::NoInternalTokens(_))
        ));
    }

    proptest! {
        #[test]
        fn scores_scale_free_and_consistent(
            counts in prop::collection::vec(1u64..20, 1..8),
            emt in 0u64..10,
            dup in 2u64..4,
        ) {
            let names: Vec<String> = (0..counts.len()).map(|i| format!("v{i}")).collect();
            let vals: Vec<(&str, u64)> = names.iter().map(String::as_str).zip(counts.iter().copied()).collect();
            let s = column(&vals, emt);
            let scaled: Vec<(&str, u64)> = vals.iter().map(|(v, n)| (*v, n * dup)).collect();
            let s2 = column(&scaled, emt * dup);

            let infl = influence_score(&s).unwrap();
            prop_assert_eq!(infl + s.emt_tokens as f64 / s.total_tokens as f64, 1.0);
            prop_assert!((infl - influence_score(&s2).unwrap()).abs() < 1e-12);
            prop_assert!(
                (token_discriminatory_score(counts[0], &s).unwrap()
                    - token_discriminatory_score(counts[0] * dup, &s2).unwrap()).abs() < 1e-12
            );
            // unique/total is not invariant under duplication; only the per-value ratios are.
            let (min, max) = min_max_discriminatory_tokens(&s).unwrap();
            let most = *counts.iter().max().unwrap();
            let least = *counts.iter().min().unwrap();
            prop_assert_eq!(min.occurrences, most);
            prop_assert_eq!(max.occurrences, least);
            for (v, n) in &vals {
                let sc = token_discriminatory_score(*n, &s).unwrap();
                prop_assert!(sc >= min.score && sc <= max.score, "{} {}", v, sc);
            }
        }
    }
}
