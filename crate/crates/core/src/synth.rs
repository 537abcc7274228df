//! Deterministic synthetic tables for experiments, benchmarks and tests.
//!
//! Categorical columns draw Zipf-distributed values; a column may follow a
//! parent column with some fidelity, which plants strong co-occurrences.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};

use crate::corpus::{stream_corpus, ColumnSpec, CorpusSchema, TableSpec, TextifyOptions};
use crate::error::{Error, Result};
use crate::evaluate::Query;
use crate::oracle::ExactCounts;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthKind {
    Categorical {
        cardinality: usize,
        zipf_exponent: f64,
        /// `(parent column index, probability of copying the parent's value)`.
        follows: Option<(usize, f64)>,
    },
    Numeric {
        clusters: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthColumn {
    pub name: String,
    pub kind: SynthKind,
}

impl SynthColumn {
    pub fn categorical(name: &str, cardinality: usize, zipf_exponent: f64) -> Self {
        Self {
            name: name.into(),
            kind: SynthKind::Categorical {
                cardinality,
                zipf_exponent,
                follows: None,
            },
        }
    }

    pub fn following(name: &str, cardinality: usize, parent: usize, fidelity: f64) -> Self {
        Self {
            name: name.into(),
            kind: SynthKind::Categorical {
                cardinality,
                zipf_exponent: 1.0,
                follows: Some((parent, fidelity)),
            },
        }
    }

    pub fn numeric(name: &str, clusters: usize) -> Self {
        Self {
            name: name.into(),
            kind: SynthKind::Numeric { clusters },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub rows: usize,
    pub columns: Vec<SynthColumn>,
    pub null_rate: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// A random shape: 2 to 6 non-key columns, small cardinalities.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let mut columns = Vec::with_capacity(n);
        for i in 0..n {
            let name = format!("col{i}");
            let col = match rng.random_range(0..4) {
                0 => SynthColumn::numeric(&name, rng.random_range(2..=8)),
                1 if i > 0 => SynthColumn::following(
                    &name,
                    rng.random_range(2..=40),
                    rng.random_range(0..i),
                    rng.random_range(0.3..0.9),
                ),
                _ => SynthColumn::categorical(
                    &name,
                    rng.random_range(2..=40),
                    rng.random_range(0.5..1.5),
                ),
            };
            columns.push(col);
        }
        Self {
            rows: rng.random_range(100..=600),
            columns,
            null_rate: rng.random_range(0.0..0.15),
            seed,
        }
    }

    /// The mixed benchmark shape: skewed low-cardinality columns, two
    /// followers, a long-tail column and one numeric column.
    pub fn mixed(rows: usize, seed: u64) -> Self {
        Self {
            rows,
            columns: vec![
                SynthColumn::categorical("region", 40, 1.1),
                SynthColumn::following("plan", 12, 0, 0.7),
                SynthColumn::categorical("device", 25, 1.3),
                SynthColumn::following("channel", 8, 2, 0.6),
                SynthColumn::categorical("merchant", 5_000, 1.0),
                SynthColumn::numeric("spend", 10),
            ],
            null_rate: 0.03,
            seed,
        }
    }

    /// Column spec for the generated table; the key column is `ID`.
    pub fn table_spec(&self) -> Result<TableSpec> {
        let mut cols = vec![ColumnSpec::primary_key("ID")];
        for c in &self.columns {
            cols.push(match c.kind {
                SynthKind::Categorical { .. } => ColumnSpec::categorical(c.name.clone()),
                SynthKind::Numeric { clusters } => ColumnSpec::numeric(c.name.clone(), clusters),
            });
        }
        TableSpec::new(cols)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.null_rate) {
            return Err(Error::InvalidConfig("null rate must be in [0, 1)".into()));
        }
        for (i, c) in self.columns.iter().enumerate() {
            match c.kind {
                SynthKind::Categorical {
                    cardinality,
                    zipf_exponent,
                    follows,
                } => {
                    if cardinality == 0 || zipf_exponent <= 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "column `{}` needs cardinality >= 1 and a positive exponent",
                            c.name
                        )));
                    }
                    if follows.is_some_and(|(p, _)| p >= i) {
                        return Err(Error::InvalidConfig(format!(
                            "column `{}` must follow an earlier column",
                            c.name
                        )));
                    }
                }
                SynthKind::Numeric { clusters: 0 } => {
                    return Err(Error::InvalidConfig(format!(
                        "column `{}` needs at least one cluster",
                        c.name
                    )));
                }
                SynthKind::Numeric { .. } => {}
            }
        }
        Ok(())
    }

    /// Raw cell draws, one row per call: categorical value indexes, or a
    /// numeric sample, `None` for NULL.
    fn rows(&self) -> Result<impl Iterator<Item = Vec<Option<f64>>> + '_> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let zipfs: Vec<Option<Zipf<f64>>> = self
            .columns
            .iter()
            .map(|c| match c.kind {
                SynthKind::Categorical {
                    cardinality,
                    zipf_exponent,
                    ..
                } => Zipf::new(cardinality as f64, zipf_exponent).ok(),
                SynthKind::Numeric { .. } => None,
            })
            .collect();
        let normal = Normal::new(0.0, 1.0).expect("valid normal");
        Ok((0..self.rows).map(move |_| {
            let mut row: Vec<Option<f64>> = Vec::with_capacity(self.columns.len());
            for (i, c) in self.columns.iter().enumerate() {
                let cell = match c.kind {
                    SynthKind::Categorical {
                        cardinality,
                        follows,
                        ..
                    } => {
                        let copied = follows.and_then(|(p, fidelity)| {
                            let parent = row[p]?;
                            rng.random_bool(fidelity)
                                .then(|| ((parent as usize * 7 + 3) % cardinality) as f64)
                        });
                        copied.unwrap_or_else(|| {
                            zipfs[i].as_ref().expect("categorical").sample(&mut rng) - 1.0
                        })
                    }
                    // mean shifts with the first column so clusters correlate
                    SynthKind::Numeric { .. } => {
                        let shift = row.first().copied().flatten().unwrap_or(0.0);
                        10.0 * shift + normal.sample(&mut rng)
                    }
                };
                let null = self.null_rate > 0.0 && rng.random_bool(self.null_rate);
                row.push((!null).then_some(cell));
            }
            row
        }))
    }

    /// The table as CSV text with a header row.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("ID");
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for (r, row) in self.rows()?.enumerate() {
            write!(out, "{}", r + 1).expect("string write");
            for (c, cell) in self.columns.iter().zip(row) {
                out.push(',');
                match (cell, &c.kind) {
                    (None, _) => {}
                    (Some(v), SynthKind::Categorical { .. }) => {
                        write!(out, "v{}", v as usize).expect("string write")
                    }
                    (Some(v), SynthKind::Numeric { .. }) => {
                        write!(out, "{v:.4}").expect("string write")
                    }
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Runs the table through textification and returns rendered corpus lines.
    pub fn corpus(&self) -> Result<(CorpusSchema, Vec<String>)> {
        let csv = self.to_csv()?;
        let options = TextifyOptions::default();
        let table = stream_corpus(csv.as_bytes(), &self.table_spec()?, &options)?;
        let lines = table
            .lines()
            .map(|l| l.map(|l| l.render(&options.format)))
            .collect::<Result<Vec<_>>>()?;
        Ok((table.schema(), lines))
    }

    /// Corpus lines rendered directly, skipping CSV and clustering. Numeric
    /// samples are bucketed by `floor`. Meant for large benchmark corpora.
    pub fn fast_corpus(&self) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(self.rows);
        for (r, row) in self.rows()?.enumerate() {
            let mut line = format!("ID!!{}", r + 1);
            for (c, cell) in self.columns.iter().zip(row) {
                match (cell, &c.kind) {
                    (None, _) => write!(line, " {}!!EMT", c.name),
                    (Some(v), SynthKind::Categorical { .. }) => {
                        write!(line, " {}!!V{}", c.name, v as usize)
                    }
                    (Some(v), SynthKind::Numeric { clusters }) => {
                        let b = (v.floor() as i64).rem_euclid(*clusters as i64);
                        write!(line, " {}!!c{b}", c.name)
                    }
                }
                .expect("string write");
            }
            out.push(line);
        }
        Ok(out)
    }
}

/// Picks `n` distinct `(token, column)` queries whose exact neighbor list in
/// `column` is non-empty. Deterministic in `seed`.
pub fn sample_queries(exact: &ExactCounts, n: usize, seed: u64) -> Vec<Query> {
    let format = exact.format();
    let mut candidates: Vec<Query> = Vec::new();
    for token in exact.tokens() {
        let Some(neighbors) = exact.neighbors(token) else {
            continue;
        };
        let Some((own, _)) = format.split(token) else {
            continue;
        };
        let mut cols: Vec<&str> = neighbors
            .keys()
            .filter_map(|n| format.split(n).map(|(c, _)| c))
            .filter(|c| *c != own)
            .collect();
        cols.sort_unstable();
        cols.dedup();
        candidates.extend(cols.into_iter().map(|c| Query {
            token: token.to_string(),
            column: c.to_string(),
        }));
    }
    shuffle_take(candidates, n, seed)
}

/// Like [`sample_queries`], restricted to queries whose exact top-`k` order
/// is fully determined by counts: no two of the first `k + 1` neighbors tie.
/// Tied lists are ordered by token name, which an approximate count cannot
/// be expected to reproduce.
pub fn sample_ranked_queries(exact: &ExactCounts, n: usize, k: usize, seed: u64) -> Vec<Query> {
    let all = sample_queries(exact, usize::MAX, seed);
    let defined: Vec<Query> = all
        .into_iter()
        .filter(|q| {
            let list = exact
                .exact_top_k(&q.token, &q.column, k + 1)
                .expect("sampled token is known");
            list.windows(2).all(|w| w[0].count != w[1].count)
        })
        .collect();
    shuffle_take(defined, n, seed)
}

fn shuffle_take(mut candidates: Vec<Query>, n: usize, seed: u64) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = n.min(candidates.len());
    for i in 0..take {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
    }
    candidates.truncate(take);
    candidates
}
