//! Textification of relational tables.
//!
//! Each table row becomes one corpus line: a space-separated sequence of typed
//! tokens of the form `COLUMN!!VALUE`. Numeric cells are replaced by the id of
//! the equal-frequency bin they fall into (`c3`), NULL cells become the `EMT`
//! sentinel, and the primary-key cell is tagged so that later stages can leave
//! it out of co-occurrence counting.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Separator byte between the two halves of a serialized token pair.
pub const PAIR_SEPARATOR: u8 = 0x1F;

pub const DEFAULT_DELIMITER: &str = "!!";
pub const DEFAULT_EMT: &str = "EMT";
pub const DEFAULT_CLUSTER_COUNT: usize = 10;

/// Column name used for the synthesized row key when no primary key is declared.
pub const ROWID_COLUMN: &str = "ROWID";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    PrimaryKey,
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
    /// Number of equal-frequency bins; only meaningful for numeric columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_count: Option<usize>,
}

impl ColumnSpec {
    pub fn primary_key(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            role: ColumnRole::PrimaryKey,
            cluster_count: None,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            role: ColumnRole::Categorical,
            cluster_count: None,
        }
    }

    pub fn numeric(name: impl Into<String>, cluster_count: usize) -> Self {
        Self {
            name: name.into(),
            role: ColumnRole::Numeric,
            cluster_count: Some(cluster_count),
        }
    }

    fn clusters(&self) -> usize {
        self.cluster_count.unwrap_or(DEFAULT_CLUSTER_COUNT)
    }
}

/// Ordered column declarations for one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableSpec {
    pub columns: Vec<ColumnSpec>,
}

impl TableSpec {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let spec = Self { columns };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let spec: TableSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("table spec declares no columns".into()));
        }
        let mut seen = HashSet::new();
        let mut pk = 0;
        for col in &self.columns {
            let name = col.name.trim();
            if name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if name.contains(DEFAULT_DELIMITER) || name.as_bytes().contains(&PAIR_SEPARATOR) {
                return Err(Error::Schema(format!(
                    "column `{name}` contains a reserved delimiter"
                )));
            }
            if !seen.insert(column_token_name(name)) {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
            match col.role {
                ColumnRole::PrimaryKey => pk += 1,
                ColumnRole::Numeric if col.cluster_count == Some(0) => {
                    return Err(Error::InvalidConfig(format!(
                        "column `{name}`: cluster_count must be at least 1"
                    )))
                }
                _ => {}
            }
        }
        if pk > 1 {
            return Err(Error::Schema(format!(
                "{pk} primary-key columns declared; composite keys are not supported"
            )));
        }
        if pk == 0 && seen.contains(ROWID_COLUMN) {
            return Err(Error::Schema(format!(
                "no primary key declared and column `{ROWID_COLUMN}` would collide with the synthesized key"
            )));
        }
        Ok(())
    }

    /// Token column name of the row key, declared or synthesized.
    pub fn primary_column(&self) -> String {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::PrimaryKey)
            .map(|c| column_token_name(&c.name))
            .unwrap_or_else(|| ROWID_COLUMN.to_string())
    }

    fn has_declared_key(&self) -> bool {
        self.columns
            .iter()
            .any(|c| c.role == ColumnRole::PrimaryKey)
    }
}

/// Rendering parameters shared by every stage that reads or writes tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenFormat {
    pub delimiter: String,
    pub emt: String,
}

impl Default for TokenFormat {
    fn default() -> Self {
        Self {
            delimiter: DEFAULT_DELIMITER.to_string(),
            emt: DEFAULT_EMT.to_string(),
        }
    }
}

impl TokenFormat {
    pub fn render(&self, column: &str, value: &str) -> String {
        let mut s = String::with_capacity(column.len() + self.delimiter.len() + value.len());
        s.push_str(column);
        s.push_str(&self.delimiter);
        s.push_str(value);
        s
    }

    /// Splits a rendered token at its first delimiter.
    pub fn split<'a>(&self, token: &'a str) -> Option<(&'a str, &'a str)> {
        let at = token.find(&self.delimiter)?;
        Some((&token[..at], &token[at + self.delimiter.len()..]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Primary,
    Empty,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub column: String,
    pub value: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn render(&self, format: &TokenFormat) -> String {
        format.render(&self.column, &self.value)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.column, DEFAULT_DELIMITER, self.value)
    }
}

/// One textified table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLine {
    pub tokens: Vec<Token>,
}

impl CorpusLine {
    pub fn render(&self, format: &TokenFormat) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.column);
            out.push_str(&format.delimiter);
            out.push_str(&t.value);
        }
        out
    }

    pub fn internal_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.kind == TokenKind::Internal)
    }
}

/// Knows how to classify rendered tokens read back from a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSchema {
    pub format: TokenFormat,
    pub primary_column: String,
}

impl CorpusSchema {
    pub fn new(format: TokenFormat, primary_column: impl Into<String>) -> Self {
        Self {
            format,
            primary_column: primary_column.into(),
        }
    }

    pub fn for_spec(spec: &TableSpec, format: TokenFormat) -> Self {
        Self::new(format, spec.primary_column())
    }

    pub fn classify(&self, column: &str, value: &str) -> TokenKind {
        if column == self.primary_column {
            TokenKind::Primary
        } else if value == self.format.emt {
            TokenKind::Empty
        } else {
            TokenKind::Internal
        }
    }

    pub fn parse_token(&self, raw: &str) -> Result<Token> {
        let (column, value) = self
            .format
            .split(raw)
            .ok_or_else(|| Error::Schema(format!("token `{raw}` has no delimiter")))?;
        Ok(Token {
            kind: self.classify(column, value),
            column: column.to_string(),
            value: value.to_string(),
        })
    }

    pub fn parse_line(&self, line: &str) -> Result<CorpusLine> {
        let tokens = line
            .split_ascii_whitespace()
            .map(|t| self.parse_token(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(CorpusLine { tokens })
    }

    /// Rendered internal tokens of a corpus line, borrowed from the line text.
    ///
    /// Tokens without a delimiter are skipped.
    pub fn internal_tokens<'a>(&'a self, line: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        line.split_ascii_whitespace().filter(move |raw| {
            matches!(self.format.split(raw), Some((c, v)) if self.classify(c, v) == TokenKind::Internal)
        })
    }
}

/// Per-cluster metadata of one numeric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericClusterInfo {
    pub column: String,
    pub cluster_id: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub size: usize,
}

/// Fitted equal-frequency bins of one numeric column.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericClusters {
    pub column: String,
    /// Lower bounds of clusters 1.., strictly increasing.
    thresholds: Vec<f64>,
    pub info: Vec<NumericClusterInfo>,
}

impl NumericClusters {
    pub fn fit(column: &str, values: &[Option<f64>], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig(format!(
                "column `{column}`: cluster count must be at least 1"
            )));
        }
        let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
        if sorted.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidConfig(format!(
                "column `{column}`: NaN cannot be clustered"
            )));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();

        let mut thresholds: Vec<f64> = Vec::new();
        if n > 0 {
            for j in 1..k {
                let idx = (j * n).div_ceil(k);
                if idx >= n {
                    break;
                }
                let t = sorted[idx];
                if t > sorted[0] && thresholds.last().is_none_or(|&last| t > last) {
                    thresholds.push(t);
                }
            }
        }

        let mut clusters = Self {
            column: column.to_string(),
            thresholds,
            info: Vec::new(),
        };
        let mut start = 0;
        while start < n {
            let id = clusters.assign(sorted[start]);
            let mut end = start;
            while end < n && clusters.assign(sorted[end]) == id {
                end += 1;
            }
            let members = &sorted[start..end];
            clusters.info.push(NumericClusterInfo {
                column: column.to_string(),
                cluster_id: id,
                min: members[0],
                max: members[members.len() - 1],
                median: median_sorted(members),
                size: members.len(),
            });
            start = end;
        }
        Ok(clusters)
    }

    pub fn assign(&self, value: f64) -> usize {
        self.thresholds.partition_point(|&t| t <= value)
    }

    pub fn len(&self) -> usize {
        self.info.len()
    }

    pub fn is_empty(&self) -> bool {
        self.info.is_empty()
    }
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Equal-frequency binning of a numeric column.
///
/// Non-null values get a cluster id in `0..k'` with `k' <= k`; equal values
/// always share a cluster and ids are monotone in the value.
pub fn cluster_numeric_column(
    values: &[Option<f64>],
    k: usize,
) -> Result<(Vec<Option<usize>>, Vec<NumericClusterInfo>)> {
    let clusters = NumericClusters::fit("", values, k)?;
    let assignment = values
        .iter()
        .map(|v| v.map(|v| clusters.assign(v)))
        .collect();
    Ok((assignment, clusters.info))
}

pub fn cluster_token_value(id: usize) -> String {
    format!("c{id}")
}

/// Column names keep their case; only whitespace is normalized.
pub fn column_token_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}

/// Trim, collapse whitespace runs to `_`, upper-case.
pub fn sanitize_value(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_uppercase()
}

pub fn is_null_cell(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("NULL")
}

fn check_reserved(value: &str, format: &TokenFormat) -> Result<()> {
    if value.contains(&format.delimiter) || value.as_bytes().contains(&PAIR_SEPARATOR) {
        return Err(Error::Schema(format!(
            "value `{value}` contains a reserved delimiter"
        )));
    }
    Ok(())
}

/// Textifies one row. `row_number` is 1-based and only used for the
/// synthesized `ROWID` token; `cluster_of` maps a numeric cell of the named
/// column to its cluster id.
pub fn textify_row<F>(
    row: &[Option<&str>],
    spec: &TableSpec,
    format: &TokenFormat,
    row_number: usize,
    cluster_of: F,
) -> Result<CorpusLine>
where
    F: Fn(&str, f64) -> usize,
{
    if row.len() != spec.columns.len() {
        return Err(Error::Schema(format!(
            "row has {} cells but the spec declares {} columns",
            row.len(),
            spec.columns.len()
        )));
    }
    let mut tokens = Vec::with_capacity(row.len() + 1);
    if !spec.has_declared_key() {
        tokens.push(Token {
            column: ROWID_COLUMN.to_string(),
            value: row_number.to_string(),
            kind: TokenKind::Primary,
        });
    }
    for (cell, col) in row.iter().zip(&spec.columns) {
        let column = column_token_name(&col.name);
        let cell = cell.filter(|c| !is_null_cell(c));
        let token = match (col.role, cell) {
            (ColumnRole::PrimaryKey, None) => {
                return Err(Error::Schema(format!("primary key `{column}` is NULL")))
            }
            (ColumnRole::PrimaryKey, Some(raw)) => {
                let value = raw.split_whitespace().collect::<Vec<_>>().join("_");
                check_reserved(&value, format)?;
                Token {
                    column,
                    value,
                    kind: TokenKind::Primary,
                }
            }
            (_, None) => Token {
                column,
                value: format.emt.clone(),
                kind: TokenKind::Empty,
            },
            (ColumnRole::Numeric, Some(raw)) => {
                let v = parse_numeric(raw).ok_or_else(|| {
                    Error::Schema(format!("`{raw}` in `{column}` is not numeric"))
                })?;
                let id = cluster_of(&column, v);
                Token {
                    column,
                    value: cluster_token_value(id),
                    kind: TokenKind::Internal,
                }
            }
            (ColumnRole::Categorical, Some(raw)) => {
                let mut value = sanitize_value(raw);
                if value == format.emt {
                    // keep real values distinct from the NULL sentinel
                    value.insert(0, '_');
                }
                check_reserved(&value, format)?;
                Token {
                    column,
                    value,
                    kind: TokenKind::Internal,
                }
            }
        };
        tokens.push(token);
    }
    Ok(CorpusLine { tokens })
}

fn parse_numeric(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| !v.is_nan())
}

#[derive(Debug, Clone)]
pub struct TextifyOptions {
    /// Field separator of the input table.
    pub separator: u8,
    pub format: TokenFormat,
}

impl Default for TextifyOptions {
    fn default() -> Self {
        Self {
            separator: b',',
            format: TokenFormat::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub rows: usize,
    pub tokens: usize,
}

/// A table read into memory with its numeric clusters fitted, ready to be
/// streamed out as corpus lines.
#[derive(Debug)]
pub struct TextifiedTable {
    spec: TableSpec,
    format: TokenFormat,
    records: Vec<Vec<Option<String>>>,
    clusters: Vec<Option<NumericClusters>>,
}

impl TextifiedTable {
    pub fn row_count(&self) -> usize {
        self.records.len()
    }

    pub fn spec(&self) -> &TableSpec {
        &self.spec
    }

    pub fn schema(&self) -> CorpusSchema {
        CorpusSchema::for_spec(&self.spec, self.format.clone())
    }

    /// Cluster metadata of every numeric column, in column order.
    pub fn clusters(&self) -> Vec<NumericClusterInfo> {
        self.clusters
            .iter()
            .flatten()
            .flat_map(|c| c.info.iter().cloned())
            .collect()
    }

    /// Corpus lines in input order.
    pub fn lines(&self) -> impl Iterator<Item = Result<CorpusLine>> + '_ {
        let by_column: std::collections::HashMap<String, &NumericClusters> = self
            .clusters
            .iter()
            .flatten()
            .map(|c| (c.column.clone(), c))
            .collect();
        self.records.iter().enumerate().map(move |(i, rec)| {
            let row: Vec<Option<&str>> = rec.iter().map(|c| c.as_deref()).collect();
            textify_row(&row, &self.spec, &self.format, i + 1, |col, v| {
                by_column.get(col).map_or(0, |c| c.assign(v))
            })
            .map_err(|e| Error::Ingestion {
                row: i + 1,
                message: e.to_string(),
            })
        })
    }

    pub fn write_corpus<W: Write>(&self, mut out: W) -> Result<CorpusSummary> {
        let mut summary = CorpusSummary { rows: 0, tokens: 0 };
        for line in self.lines() {
            let line = line?;
            summary.rows += 1;
            summary.tokens += line.tokens.len();
            out.write_all(line.render(&self.format).as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(summary)
    }
}

/// Reads a delimited table (header line first) and prepares its corpus.
///
/// Header names are matched against the spec after whitespace normalization,
/// case-insensitively, in any order. Row numbers in errors are 1-based data
/// rows.
pub fn stream_corpus<R: Read>(
    source: R,
    spec: &TableSpec,
    options: &TextifyOptions,
) -> Result<TextifiedTable> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.separator)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Ingestion {
            row: 0,
            message: format!("unreadable header: {e}"),
        })?
        .iter()
        .map(|h| column_token_name(h).to_lowercase())
        .collect();
    let mut positions = Vec::with_capacity(spec.columns.len());
    for col in &spec.columns {
        let want = column_token_name(&col.name).to_lowercase();
        let pos = header.iter().position(|h| *h == want).ok_or_else(|| {
            Error::Schema(format!("column `{}` not found in table header", col.name))
        })?;
        positions.push(pos);
    }
    if header.len() != spec.columns.len() {
        let extra = header
            .iter()
            .enumerate()
            .find(|(i, _)| !positions.contains(i))
            .map(|(_, h)| h.clone())
            .unwrap_or_default();
        return Err(Error::Schema(format!(
            "table header column `{extra}` is not declared in the spec"
        )));
    }

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Ingestion {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::Ingestion {
                row,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        records.push(
            positions
                .iter()
                .map(|&p| {
                    let cell = &rec[p];
                    (!is_null_cell(cell)).then(|| cell.to_string())
                })
                .collect::<Vec<_>>(),
        );
    }

    let mut clusters = Vec::with_capacity(spec.columns.len());
    for (ci, col) in spec.columns.iter().enumerate() {
        if col.role != ColumnRole::Numeric {
            clusters.push(None);
            continue;
        }
        let column = column_token_name(&col.name);
        let mut values = Vec::with_capacity(records.len());
        for (ri, rec) in records.iter().enumerate() {
            match rec[ci].as_deref() {
                None => values.push(None),
                Some(raw) => values.push(Some(parse_numeric(raw).ok_or_else(|| {
                    Error::Ingestion {
                        row: ri + 1,
                        message: format!("`{raw}` in `{column}` is not numeric"),
                    }
                })?)),
            }
        }
        clusters.push(Some(NumericClusters::fit(
            &column,
            &values,
            col.clusters(),
        )?));
    }

    Ok(TextifiedTable {
        spec: spec.clone(),
        format: options.format.clone(),
        records,
        clusters,
    })
}
