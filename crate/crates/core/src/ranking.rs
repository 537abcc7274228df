use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// A neighbor token and its (exact or approximate) co-occurrence count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankedToken {
    pub token: String,
    pub count: u64,
}

impl RankedToken {
    pub fn new(token: impl Into<String>, count: u64) -> Self {
        Self {
            token: token.into(),
            count,
        }
    }
}

/// Count descending, then token ascending.
pub fn rank_order(a: &RankedToken, b: &RankedToken) -> Ordering {
    b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token))
}

pub fn top_k(mut entries: Vec<RankedToken>, k: usize) -> Vec<RankedToken> {
    entries.sort_by(rank_order);
    entries.truncate(k);
    entries
}

pub fn tokens(list: &[RankedToken]) -> Vec<&str> {
    list.iter().map(|r| r.token.as_str()).collect()
}
