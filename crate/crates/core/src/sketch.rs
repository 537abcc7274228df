//! Count-Min co-occurrence sketch and its Bloom shadow filter.
//!
//! Keys are unordered token pairs serialized as `lo 0x1F hi` with `lo < hi`.
//! Row `i` of the sketch indexes a key at `xxh64(key, seeds[i]) mod d`; the
//! shadow filter uses its own independent seed list the same way.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use crate::corpus::{CorpusLine, CorpusSchema, TokenFormat, PAIR_SEPARATOR};
use crate::error::{Error, Result};

pub const DEFAULT_DEPTH: usize = 5;
pub const DEFAULT_WIDTH: usize = 1 << 20;
pub const DEFAULT_FALSE_POSITIVE_RATE: f64 = 0.01;

/// Canonical unordered token pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    lo: String,
    hi: String,
}

impl PairKey {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> &str {
        &self.lo
    }

    pub fn hi(&self) -> &str {
        &self.hi
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        encode_pair(&mut buf, &self.lo, &self.hi);
        buf
    }
}

/// Writes the canonical byte form of the pair `{a, b}` into `buf`.
pub fn encode_pair(buf: &mut Vec<u8>, a: &str, b: &str) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    buf.clear();
    buf.reserve(lo.len() + hi.len() + 1);
    buf.extend_from_slice(lo.as_bytes());
    buf.push(PAIR_SEPARATOR);
    buf.extend_from_slice(hi.as_bytes());
}

/// All unordered pairs over the internal tokens of a line.
pub fn pairs_of_line(line: &CorpusLine, format: &TokenFormat) -> Vec<PairKey> {
    let tokens: Vec<String> = line.internal_tokens().map(|t| t.render(format)).collect();
    let mut pairs = Vec::with_capacity(tokens.len() * tokens.len().saturating_sub(1) / 2);
    for (i, a) in tokens.iter().enumerate() {
        for b in &tokens[i + 1..] {
            pairs.push(PairKey::new(a.clone(), b.clone()));
        }
    }
    pairs
}

/// Calls `f` with the encoded bytes of every internal pair of a rendered
/// corpus line, without allocating per pair.
pub fn for_each_pair<F>(line: &str, schema: &CorpusSchema, scratch: &mut PairScratch, mut f: F)
where
    F: FnMut(&str, &str, &[u8]),
{
    scratch.tokens.clear();
    // offsets, so the scratch buffer holds no borrows between calls
    for tok in schema.internal_tokens(line) {
        let start = tok.as_ptr() as usize - line.as_ptr() as usize;
        scratch.tokens.push((start, start + tok.len()));
    }
    let n = scratch.tokens.len();
    for i in 0..n {
        let a = &line[scratch.tokens[i].0..scratch.tokens[i].1];
        for j in i + 1..n {
            let b = &line[scratch.tokens[j].0..scratch.tokens[j].1];
            encode_pair(&mut scratch.key, a, b);
            f(a, b, &scratch.key);
        }
    }
}

/// Reusable buffers for [`for_each_pair`].
#[derive(Debug, Default)]
pub struct PairScratch {
    tokens: Vec<(usize, usize)>,
    key: Vec<u8>,
}

/// Number of pair insertions a line contributes.
pub fn pair_count(internal_tokens: usize) -> u64 {
    let n = internal_tokens as u64;
    n * n.saturating_sub(1) / 2
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn seed_stream(base: u64, set_id: u64, n: usize) -> Vec<u64> {
    let mut state = base ^ set_id.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    (0..n).map(|_| splitmix64(&mut state)).collect()
}

/// Row seeds of seed set `set_id`: the SplitMix64 stream started at
/// `0x243F6A8885A308D3 ^ set_id * 0xD6E8FEB86659FD93`.
pub fn sketch_seeds(set_id: u64, depth: usize) -> Vec<u64> {
    seed_stream(0x243F_6A88_85A3_08D3, set_id, depth)
}

/// Shadow filter seeds of seed set `set_id`, from base `0x13198A2E03707344`.
pub fn shadow_seeds(set_id: u64, hashes: usize) -> Vec<u64> {
    seed_stream(0x1319_8A2E_0370_7344, set_id, hashes)
}

/// `h x d` table of saturating 32-bit counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoocSketch {
    depth: usize,
    width: usize,
    seeds: Vec<u64>,
    counts: Vec<u32>,
    total_insertions: u64,
    threshold_cutoff: u32,
    saturation_events: u64,
}

impl CoocSketch {
    pub fn new(depth: usize, width: usize, seeds: Vec<u64>) -> Result<Self> {
        if depth == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!(
                "sketch dimensions must be positive, got {depth}x{width}"
            )));
        }
        if seeds.len() != depth {
            return Err(Error::InvalidConfig(format!(
                "{} seeds supplied for {depth} hash rows",
                seeds.len()
            )));
        }
        let cells = depth.checked_mul(width).ok_or_else(|| {
            Error::InvalidConfig(format!("sketch of {depth}x{width} cells is too large"))
        })?;
        Ok(Self {
            depth,
            width,
            seeds,
            counts: vec![0; cells],
            total_insertions: 0,
            threshold_cutoff: 0,
            saturation_events: 0,
        })
    }

    pub fn with_seed_set(depth: usize, width: usize, set_id: u64) -> Result<Self> {
        Self::new(depth, width, sketch_seeds(set_id, depth))
    }

    /// Reassembles a sketch from its parts, e.g. after deserialization.
    pub(crate) fn from_parts(
        depth: usize,
        width: usize,
        seeds: Vec<u64>,
        counts: Vec<u32>,
        threshold_cutoff: u32,
    ) -> Result<Self> {
        let mut s = Self::new(depth, width, seeds)?;
        if counts.len() != s.counts.len() {
            return Err(Error::Corrupt("count matrix has the wrong size".into()));
        }
        s.counts = counts;
        s.threshold_cutoff = threshold_cutoff;
        // every insertion lands once in each row, so a row sum is the
        // insertion count unless cells were thresholded away
        s.total_insertions = (0..depth)
            .map(|r| s.row(r).iter().map(|&c| u64::from(c)).sum::<u64>())
            .max()
            .unwrap_or(0);
        Ok(s)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn total_insertions(&self) -> u64 {
        self.total_insertions
    }

    pub fn threshold_cutoff(&self) -> u32 {
        self.threshold_cutoff
    }

    /// Number of increments that hit a saturated counter.
    pub fn saturation_events(&self) -> u64 {
        self.saturation_events
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.counts[row * self.width..(row + 1) * self.width]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn nnz(&self) -> usize {
        self.counts.iter().filter(|&&c| c != 0).count()
    }

    /// Fraction of zero cells, `1 - nnz / (h d)`.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.nnz() as f64 / self.counts.len() as f64
    }

    /// Column hit by `key` in each row.
    pub fn positions<'a>(&'a self, key: &'a [u8]) -> impl Iterator<Item = usize> + 'a {
        let width = self.width as u64;
        self.seeds
            .iter()
            .map(move |&seed| (xxh64(key, seed) % width) as usize)
    }

    pub fn update(&mut self, key: &PairKey, amount: u32) {
        self.update_bytes(&key.to_bytes(), amount);
    }

    pub fn update_bytes(&mut self, key: &[u8], amount: u32) {
        if amount == 0 {
            return;
        }
        let width = self.width as u64;
        for (row, &seed) in self.seeds.iter().enumerate() {
            let idx = row * self.width + (xxh64(key, seed) % width) as usize;
            let cell = &mut self.counts[idx];
            match cell.checked_add(amount) {
                Some(v) => *cell = v,
                None => {
                    *cell = u32::MAX;
                    self.saturation_events += 1;
                }
            }
        }
        self.total_insertions += u64::from(amount);
    }

    pub fn query(&self, key: &PairKey) -> u32 {
        self.query_bytes(&key.to_bytes())
    }

    pub fn query_bytes(&self, key: &[u8]) -> u32 {
        self.positions(key)
            .enumerate()
            .map(|(row, col)| self.counts[row * self.width + col])
            .min()
            .unwrap_or(0)
    }

    pub fn is_compatible(&self, other: &CoocSketch) -> bool {
        self.depth == other.depth && self.width == other.width && self.seeds == other.seeds
    }

    fn check_compatible(&self, other: &CoocSketch) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::Merge(format!(
                "{}x{} sketch cannot absorb {}x{} sketch with different seeds or dimensions",
                self.depth, self.width, other.depth, other.width
            )))
        }
    }

    /// Element-wise saturating sum of two compatible sketches.
    pub fn merge(&self, other: &CoocSketch) -> Result<CoocSketch> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &CoocSketch) -> Result<()> {
        self.check_compatible(other)?;
        for (a, &b) in self.counts.iter_mut().zip(&other.counts) {
            match a.checked_add(b) {
                Some(v) => *a = v,
                None => {
                    *a = u32::MAX;
                    self.saturation_events += 1;
                }
            }
        }
        self.total_insertions += other.total_insertions;
        self.saturation_events += other.saturation_events;
        self.threshold_cutoff = self.threshold_cutoff.max(other.threshold_cutoff);
        Ok(())
    }

    /// Median of the nonzero cells; the mean of the middle two for an even count.
    pub fn nonzero_median(&self) -> Option<f64> {
        let mut cells: Vec<u32> = self.counts.iter().copied().filter(|&c| c != 0).collect();
        if cells.is_empty() {
            return None;
        }
        cells.sort_unstable();
        let n = cells.len();
        Some(if n % 2 == 1 {
            f64::from(cells[n / 2])
        } else {
            (f64::from(cells[n / 2 - 1]) + f64::from(cells[n / 2])) / 2.0
        })
    }

    /// Zeroes every cell below `ceil(fraction * median of nonzero cells)`.
    pub fn threshold(&self, fraction: f64) -> Result<CoocSketch> {
        if fraction.is_nan() || fraction < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "threshold fraction must be non-negative, got {fraction}"
            )));
        }
        let Some(median) = self.nonzero_median() else {
            return Ok(self.clone());
        };
        let cutoff = (fraction * median).ceil();
        let cutoff = if cutoff >= f64::from(u32::MAX) {
            u32::MAX
        } else {
            cutoff as u32
        };
        Ok(self.threshold_at(cutoff))
    }

    /// Zeroes every cell below `cutoff`.
    pub fn threshold_at(&self, cutoff: u32) -> CoocSketch {
        let mut out = self.clone();
        for c in out.counts.iter_mut() {
            if *c < cutoff {
                *c = 0;
            }
        }
        out.threshold_cutoff = out.threshold_cutoff.max(cutoff);
        out
    }
}

/// Bloom filter over encoded pair keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowFilter {
    bits: Vec<u64>,
    len: u64,
    seeds: Vec<u64>,
}

impl ShadowFilter {
    pub fn new(bits: u64, seeds: Vec<u64>) -> Result<Self> {
        if bits == 0 || seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "shadow filter needs at least one bit and one hash".into(),
            ));
        }
        let words = usize::try_from(bits.div_ceil(64))
            .map_err(|_| Error::InvalidConfig(format!("{bits} bits do not fit in memory")))?;
        Ok(Self {
            bits: vec![0; words],
            len: bits,
            seeds,
        })
    }

    /// Sized for `expected_items` keys at false-positive rate `fpr`:
    /// `m = ceil(-n ln(fpr) / ln(2)^2)`, `k = round(m / n * ln 2)`.
    pub fn with_capacity(expected_items: u64, fpr: f64, set_id: u64) -> Result<Self> {
        let (bits, hashes) = Self::optimal_params(expected_items, fpr)?;
        Self::new(bits, shadow_seeds(set_id, hashes))
    }

    pub fn optimal_params(expected_items: u64, fpr: f64) -> Result<(u64, usize)> {
        if !(fpr > 0.0 && fpr < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "false-positive rate must be in (0, 1), got {fpr}"
            )));
        }
        let n = expected_items.max(1) as f64;
        let ln2 = std::f64::consts::LN_2;
        let bits = (-n * fpr.ln() / (ln2 * ln2)).ceil().max(64.0);
        let hashes = ((bits / n) * ln2).round().max(1.0);
        Ok((bits as u64, hashes as usize))
    }

    pub(crate) fn from_parts(len: u64, seeds: Vec<u64>, bits: Vec<u64>) -> Result<Self> {
        let mut f = Self::new(len, seeds)?;
        if bits.len() != f.bits.len() {
            return Err(Error::Corrupt("shadow bit array has the wrong size".into()));
        }
        f.bits = bits;
        Ok(f)
    }

    pub fn bit_len(&self) -> u64 {
        self.len
    }

    pub fn hash_count(&self) -> usize {
        self.seeds.len()
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn insert(&mut self, key: &PairKey) {
        self.insert_bytes(&key.to_bytes());
    }

    pub fn insert_bytes(&mut self, key: &[u8]) {
        for &seed in &self.seeds {
            let bit = xxh64(key, seed) % self.len;
            self.bits[(bit / 64) as usize] |= 1 << (bit % 64);
        }
    }

    pub fn contains(&self, key: &PairKey) -> bool {
        self.contains_bytes(&key.to_bytes())
    }

    pub fn contains_bytes(&self, key: &[u8]) -> bool {
        self.seeds.iter().all(|&seed| {
            let bit = xxh64(key, seed) % self.len;
            self.bits[(bit / 64) as usize] & (1 << (bit % 64)) != 0
        })
    }

    /// Bitwise OR of two filters built with identical parameters.
    pub fn union_from(&mut self, other: &ShadowFilter) -> Result<()> {
        if self.len != other.len || self.seeds != other.seeds {
            return Err(Error::Merge(
                "shadow filters differ in size or seeds".into(),
            ));
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    pub fn ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }
}
