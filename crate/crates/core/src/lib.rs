//! Count-Min co-occurrence sketches over textified relational tables.
//!
//! A table is turned into a corpus of `COLUMN!!VALUE` lines ([`corpus`]),
//! every unordered pair of internal tokens on a line is counted in a
//! [`sketch::CoocSketch`] guarded by a [`sketch::ShadowFilter`], and the
//! result answers "which values of column C co-occur most with token T"
//! ([`interpret`]). Exact counts ([`oracle`]) and NDCG ([`evaluate`]) measure
//! how far the sketch drifts from ground truth.

pub mod build;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod interpret;
pub mod oracle;
pub mod persist;
pub mod pipeline;
pub mod ranking;
pub mod sketch;
pub mod stats;
pub mod synth;

pub use build::{build_from_lines, BuildConfig, BuildOutput, ShadowConfig};
pub use corpus::{
    stream_corpus, ColumnRole, ColumnSpec, CorpusLine, CorpusSchema, TableSpec, TextifyOptions,
    Token, TokenFormat, TokenKind,
};
pub use error::{Error, Result};
pub use evaluate::{ndcg, NdcgConfig, Penalty};
pub use interpret::{Interpreter, QuerySpec, RankedInterpretation};
pub use oracle::{build_exact, ExactCounts};
pub use ranking::RankedToken;
pub use sketch::{CoocSketch, PairKey, ShadowFilter};
pub use stats::{ColumnStats, ColumnValueDictionary, StatsAccumulator};
