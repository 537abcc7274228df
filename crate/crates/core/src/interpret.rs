//! Model (query-agnostic) and function (query-specific) interpretability.
//!
//! Function interpretability never enumerates the sketch. Candidate neighbors
//! come from the column-value dictionary, each candidate pair is first checked
//! against the shadow filter, and only shadow-positive pairs are looked up in
//! the sketch.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{NumericClusterInfo, TokenFormat};
use crate::error::{Error, Result};
use crate::ranking::{rank_order, top_k, RankedToken};
use crate::sketch::{encode_pair, CoocSketch, ShadowFilter};
use crate::stats::{summarize, ColumnStats, ColumnSummary, ColumnValueDictionary};

pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_MAX_COLUMNS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnImpact {
    pub column: String,
    /// `influence * discriminatory`; a heuristic ordering, not a probability.
    pub impact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub columns: Vec<ColumnSummary>,
    pub numeric_clusters: Vec<NumericClusterInfo>,
    pub impact_ranking: Vec<ColumnImpact>,
}

pub fn model_report(stats: &[ColumnStats], clusters: &[NumericClusterInfo]) -> ModelReport {
    let columns = summarize(stats);
    let mut impact_ranking: Vec<ColumnImpact> = columns
        .iter()
        .filter(|c| !c.primary)
        .map(|c| ColumnImpact {
            column: c.name.clone(),
            impact: c.influence.unwrap_or(0.0) * c.discriminatory.unwrap_or(0.0),
        })
        .collect();
    impact_ranking.sort_by(|a, b| {
        b.impact
            .total_cmp(&a.impact)
            .then_with(|| a.column.cmp(&b.column))
    });
    ModelReport {
        columns,
        numeric_clusters: clusters.to_vec(),
        impact_ranking,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub token: String,
    pub column: String,
    pub max: RankedToken,
    pub median_count: f64,
    pub candidates_checked: usize,
}

/// Everything function interpretability reads, borrowed immutably.
#[derive(Debug, Clone, Copy)]
pub struct Interpreter<'a> {
    pub sketch: &'a CoocSketch,
    pub shadow: &'a ShadowFilter,
    pub dictionary: &'a ColumnValueDictionary,
    pub format: &'a TokenFormat,
}

impl<'a> Interpreter<'a> {
    pub fn new(
        sketch: &'a CoocSketch,
        shadow: &'a ShadowFilter,
        dictionary: &'a ColumnValueDictionary,
        format: &'a TokenFormat,
    ) -> Self {
        Self {
            sketch,
            shadow,
            dictionary,
            format,
        }
    }

    fn check_token(&self, token: &str) -> Result<()> {
        let (column, value) = self
            .format
            .split(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        if self.dictionary.primary_key.as_deref() == Some(column) {
            return Err(Error::PrimaryKeyToken(token.to_string()));
        }
        if value == self.format.emt {
            return Err(Error::EmptyToken(token.to_string()));
        }
        if !self
            .dictionary
            .values(column)
            .is_some_and(|v| v.contains(value))
        {
            return Err(Error::UnknownToken(token.to_string()));
        }
        Ok(())
    }

    /// Shadow-positive candidates of `column` with their sketch counts.
    fn candidates(&self, token: &str, column: &str) -> Result<Vec<RankedToken>> {
        self.check_token(token)?;
        let values = self
            .dictionary
            .values(column)
            .ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
        let mut key = Vec::new();
        let mut out = Vec::new();
        for v in values {
            let neighbor = self.format.render(column, v);
            if neighbor == token {
                continue;
            }
            encode_pair(&mut key, token, &neighbor);
            if !self.shadow.contains_bytes(&key) {
                continue;
            }
            let count = self.sketch.query_bytes(&key);
            out.push(RankedToken::new(neighbor, u64::from(count)));
        }
        Ok(out)
    }

    /// Top-`k` neighbors of `token` in `column` by approximate count.
    pub fn sketch_top_k(&self, token: &str, column: &str, k: usize) -> Result<Vec<RankedToken>> {
        let found = self
            .candidates(token, column)?
            .into_iter()
            .filter(|r| r.count > 0)
            .collect();
        Ok(top_k(found, k))
    }

    pub fn interpret_query(
        &self,
        query: &QuerySpec,
        columns: &[String],
        options: &InterpretOptions,
    ) -> Result<RankedInterpretation> {
        if columns.is_empty() {
            return Err(Error::InvalidConfig("no columns of interest given".into()));
        }
        if columns.len() > options.max_columns {
            return Err(Error::InvalidConfig(format!(
                "{} columns of interest exceed the limit of {}",
                columns.len(),
                options.max_columns
            )));
        }
        let mut cooc: BTreeMap<String, BTreeMap<String, Vec<RankedToken>>> = BTreeMap::new();
        let mut errors: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let tokens = std::iter::once(&query.ip).chain(&query.op);
        for token in tokens {
            if cooc.contains_key(token) || errors.contains_key(token) {
                continue;
            }
            if let Err(e) = self.check_token(token) {
                errors.entry(token.clone()).or_default().push(e.to_string());
                continue;
            }
            let per_column = cooc.entry(token.clone()).or_default();
            for column in columns {
                match self.sketch_top_k(token, column, options.top_k) {
                    Ok(list) => {
                        per_column.insert(column.clone(), list);
                    }
                    Err(e) => errors
                        .entry(token.clone())
                        .or_default()
                        .push(format!("{column}: {e}")),
                }
            }
        }
        Ok(RankedInterpretation {
            query_id: query.id.clone(),
            ip: query.ip.clone(),
            op: query.op.clone(),
            columns: columns.to_vec(),
            top_k: options.top_k,
            cooc,
            errors,
        })
    }

    /// Maximum and median co-occurrence of `token` with the values of `column`.
    pub fn aggregate_stats(&self, token: &str, column: &str) -> Result<AggregateResult> {
        let mut found = self.candidates(token, column)?;
        if found.is_empty() {
            return Err(Error::NoData(format!(
                "no value of `{column}` co-occurs with `{token}`"
            )));
        }
        found.sort_by(rank_order);
        let mut counts: Vec<u64> = found.iter().map(|r| r.count).collect();
        counts.sort_unstable();
        let n = counts.len();
        let median_count = if n % 2 == 1 {
            counts[n / 2] as f64
        } else {
            (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
        };
        Ok(AggregateResult {
            token: token.to_string(),
            column: column.to_string(),
            max: found[0].clone(),
            median_count,
            candidates_checked: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub id: String,
    pub ip: String,
    pub op: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterpretOptions {
    pub top_k: usize,
    pub max_columns: usize,
}

impl Default for InterpretOptions {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            max_columns: DEFAULT_MAX_COLUMNS,
        }
    }
}

/// Per-query report, serialized as `{"<query_id>": {"ip", "op", "columns",
/// "top_k", "cooc", "errors"}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedInterpretation {
    pub query_id: String,
    pub ip: String,
    pub op: Vec<String>,
    pub columns: Vec<String>,
    pub top_k: usize,
    pub cooc: BTreeMap<String, BTreeMap<String, Vec<RankedToken>>>,
    pub errors: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize)]
struct InterpretationBody<'a> {
    ip: &'a str,
    op: &'a [String],
    columns: &'a [String],
    top_k: usize,
    cooc: &'a BTreeMap<String, BTreeMap<String, Vec<RankedToken>>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    errors: &'a BTreeMap<String, Vec<String>>,
}

impl Serialize for RankedInterpretation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        map.serialize_entry(
            &self.query_id,
            &InterpretationBody {
                ip: &self.ip,
                op: &self.op,
                columns: &self.columns,
                top_k: self.top_k,
                cooc: &self.cooc,
                errors: &self.errors,
            },
        )?;
        map.end()
    }
}

impl RankedInterpretation {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
