//! On-disk forms of the sketch.
//!
//! CSR sketch file, all integers little-endian:
//!
//! ```text
//! magic            8 bytes  "COOCSKB1"
//! version          u32      1
//! h                u32
//! d                u64
//! seeds            h x u64
//! threshold_cutoff u32
//! row_ptr          (h+1) x u64
//! col_idx          nnz x u64   strictly increasing within a row
//! values           nnz x u32   all > 0
//! ```
//!
//! The shadow filter goes to a sibling file with the same discipline:
//! magic `"COOCSHB1"`, version u32, hash count k u32, bit length m u64,
//! k seeds u64, word count u64, then the bit words as u64.
//!
//! The relational export is CSV with header `hash_row,position,count`, one row
//! per nonzero cell in row-major order.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh64::xxh64;

use crate::error::{Error, Result};
use crate::sketch::{CoocSketch, ShadowFilter};

pub const CSR_MAGIC: &[u8; 8] = b"COOCSKB1";
pub const SHADOW_MAGIC: &[u8; 8] = b"COOCSHB1";
pub const FORMAT_VERSION: u32 = 1;

/// Loads refuse sketches larger than this many cells.
pub const MAX_CELLS: u64 = 1 << 32;

/// Bytes of a CSR file with `h` rows and `nnz` nonzeros.
pub fn csr_file_size(h: usize, nnz: usize) -> usize {
    8 + 4 + 4 + 8 + 8 * h + 4 + 8 * (h + 1) + 12 * nnz
}

/// Bytes of the dense `h x d` counter matrix.
pub fn dense_size(h: usize, d: usize) -> usize {
    4 * h * d
}

pub fn save_csr(sketch: &CoocSketch) -> Vec<u8> {
    let h = sketch.depth();
    let nnz = sketch.nnz();
    let mut out = Vec::with_capacity(csr_file_size(h, nnz));
    out.extend_from_slice(CSR_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(sketch.width() as u64).to_le_bytes());
    for s in sketch.seeds() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(&sketch.threshold_cutoff().to_le_bytes());

    let mut row_ptr = 0u64;
    out.extend_from_slice(&row_ptr.to_le_bytes());
    for r in 0..h {
        row_ptr += sketch.row(r).iter().filter(|&&c| c != 0).count() as u64;
        out.extend_from_slice(&row_ptr.to_le_bytes());
    }
    for r in 0..h {
        for (j, &c) in sketch.row(r).iter().enumerate() {
            if c != 0 {
                out.extend_from_slice(&(j as u64).to_le_bytes());
            }
        }
    }
    for &c in sketch.counts() {
        if c != 0 {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn write_csr<W: Write>(sketch: &CoocSketch, mut out: W) -> Result<usize> {
    let bytes = save_csr(sketch);
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(bytes.len())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Corrupt(format!("truncated while reading {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u64s(&mut self, n: usize, what: &str) -> Result<Vec<u64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| too_big(what))?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        let found = self.take(8, "magic")?;
        if found != magic {
            return Err(Error::Corrupt(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(found),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn too_big(what: &str) -> Error {
    Error::Corrupt(format!("{what} length overflows"))
}

pub fn load_csr(bytes: &[u8]) -> Result<CoocSketch> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    cur.header(CSR_MAGIC)?;
    let h = cur.u32("h")? as usize;
    let d = cur.u64("d")?;
    if h == 0 || d == 0 {
        return Err(Error::Corrupt(format!("degenerate dimensions {h}x{d}")));
    }
    if (h as u64).saturating_mul(d) > MAX_CELLS {
        return Err(Error::Corrupt(format!(
            "{h}x{d} sketch exceeds the load limit"
        )));
    }
    let seeds = cur.u64s(h, "seeds")?;
    let cutoff = cur.u32("threshold cutoff")?;
    let row_ptr = cur.u64s(h + 1, "row pointers")?;
    if row_ptr[0] != 0 || row_ptr.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Corrupt(
            "row pointers are not non-decreasing from 0".into(),
        ));
    }
    let nnz = usize::try_from(row_ptr[h]).map_err(|_| too_big("nnz"))?;
    if nnz as u64 > h as u64 * d {
        return Err(Error::Corrupt(format!(
            "{nnz} nonzeros in a {h}x{d} matrix"
        )));
    }
    // check the remaining length up front so no partial matrix is built
    let remaining = bytes.len() - cur.pos;
    if remaining != nnz.checked_mul(12).ok_or_else(|| too_big("arrays"))? {
        return Err(Error::Corrupt(format!(
            "expected {} bytes of column indices and values, found {remaining}",
            nnz * 12
        )));
    }
    let col_idx = cur.u64s(nnz, "column indices")?;
    let values = cur.take(nnz * 4, "values")?;
    cur.finish()?;

    let width = d as usize;
    let mut counts = vec![0u32; h * width];
    for r in 0..h {
        let (start, end) = (row_ptr[r] as usize, row_ptr[r + 1] as usize);
        let mut prev: Option<u64> = None;
        for i in start..end {
            let col = col_idx[i];
            if col >= d || prev.is_some_and(|p| col <= p) {
                return Err(Error::Corrupt(format!(
                    "column index {col} out of order or range in row {r}"
                )));
            }
            prev = Some(col);
            let v = u32::from_le_bytes(values[i * 4..i * 4 + 4].try_into().unwrap());
            if v == 0 {
                return Err(Error::Corrupt(format!("explicit zero stored in row {r}")));
            }
            counts[r * width + col as usize] = v;
        }
    }
    CoocSketch::from_parts(h, width, seeds, counts, cutoff)
}

pub fn save_csr_file(sketch: &CoocSketch, path: &Path) -> Result<usize> {
    let bytes = save_csr(sketch);
    std::fs::write(path, &bytes).map_err(|e| Error::file(path, e))?;
    Ok(bytes.len())
}

pub fn load_csr_file(path: &Path) -> Result<CoocSketch> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    load_csr(&bytes)
}

pub fn save_shadow(filter: &ShadowFilter) -> Vec<u8> {
    let words = filter.words();
    let mut out = Vec::with_capacity(32 + 8 * (filter.hash_count() + words.len()));
    out.extend_from_slice(SHADOW_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(filter.hash_count() as u32).to_le_bytes());
    out.extend_from_slice(&filter.bit_len().to_le_bytes());
    for s in filter.seeds() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(&(words.len() as u64).to_le_bytes());
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn load_shadow(bytes: &[u8]) -> Result<ShadowFilter> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    cur.header(SHADOW_MAGIC)?;
    let k = cur.u32("hash count")? as usize;
    let m = cur.u64("bit length")?;
    if k == 0 || m == 0 {
        return Err(Error::Corrupt("degenerate shadow filter parameters".into()));
    }
    let seeds = cur.u64s(k, "seeds")?;
    let words = cur.u64("word count")?;
    if words != m.div_ceil(64) {
        return Err(Error::Corrupt(format!("{words} words for {m} bits")));
    }
    let words = usize::try_from(words).map_err(|_| too_big("bit words"))?;
    let bits = cur.u64s(words, "bit words")?;
    cur.finish()?;
    ShadowFilter::from_parts(m, seeds, bits)
}

pub fn save_shadow_file(filter: &ShadowFilter, path: &Path) -> Result<usize> {
    let bytes = save_shadow(filter);
    std::fs::write(path, &bytes).map_err(|e| Error::file(path, e))?;
    Ok(bytes.len())
}

pub fn load_shadow_file(path: &Path) -> Result<ShadowFilter> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    load_shadow(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationalExportRow {
    pub hash_row: u32,
    pub position: u64,
    pub count: u32,
}

/// Writes one CSV row per nonzero cell; returns the number of data rows.
pub fn export_table<W: Write>(sketch: &CoocSketch, sink: W) -> Result<usize> {
    // header written by hand so an empty sketch still gets one
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink);
    w.write_record(["hash_row", "position", "count"])?;
    let mut rows = 0;
    for r in 0..sketch.depth() {
        for (j, &c) in sketch.row(r).iter().enumerate() {
            if c != 0 {
                w.serialize(RelationalExportRow {
                    hash_row: r as u32,
                    position: j as u64,
                    count: c,
                })?;
                rows += 1;
            }
        }
    }
    w.flush()?;
    Ok(rows)
}

/// The exported relational table, loaded back for point lookups.
#[derive(Debug, Clone, Default)]
pub struct RelationalTable {
    cells: HashMap<(u32, u64), u32>,
}

impl RelationalTable {
    pub fn read<R: Read>(source: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let mut cells = HashMap::new();
        for row in r.deserialize::<RelationalExportRow>() {
            let row = row?;
            if cells
                .insert((row.hash_row, row.position), row.count)
                .is_some()
            {
                return Err(Error::Corrupt(format!(
                    "duplicate cell ({}, {})",
                    row.hash_row, row.position
                )));
            }
        }
        Ok(Self { cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Hashes the key with each row seed, looks up `(row, position)` and
    /// takes the minimum; missing rows count as zero.
    pub fn query(&self, seeds: &[u64], width: u64, key: &[u8]) -> u32 {
        seeds
            .iter()
            .enumerate()
            .map(|(r, &seed)| {
                let pos = xxh64(key, seed) % width;
                self.cells.get(&(r as u32, pos)).copied().unwrap_or(0)
            })
            .min()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::PairKey;
    use proptest::prelude::*;

    fn sketch_with(keys: &[(&str, &str, u32)], width: usize) -> CoocSketch {
        let mut s = CoocSketch::with_seed_set(5, width, 0).unwrap();
        for (a, b, n) in keys {
            s.update(&PairKey::new(*a, *b), *n);
        }
        s
    }

    #[test]
    fn empty_sketch_is_header_only() {
        let s = CoocSketch::with_seed_set(5, 100, 0).unwrap();
        let bytes = save_csr(&s);
        assert_eq!(bytes.len(), csr_file_size(5, 0));
        assert_eq!(&bytes[..8], CSR_MAGIC);
        assert_eq!(load_csr(&bytes).unwrap(), s);
    }

    #[test]
    fn three_nonzeros() {
        let mut s = CoocSketch::new(1, 10, vec![1]).unwrap();
        s.update_bytes(b"a", 1);
        s.update_bytes(b"b", 2);
        s.update_bytes(b"c", 3);
        let nnz = s.nnz();
        let bytes = save_csr(&s);
        assert_eq!(bytes.len(), csr_file_size(1, nnz));
        let back = load_csr(&bytes).unwrap();
        assert_eq!(back.counts(), s.counts());
        assert_eq!(back.total_insertions(), 6);
    }

    #[test]
    fn exact_layout() {
        let mut s = CoocSketch::new(1, 4, vec![0xAB]).unwrap();
        s.update_bytes(b"x", 7);
        let pos = s.positions(b"x").next().unwrap() as u64;
        let bytes = save_csr(&s);
        let mut want = Vec::new();
        want.extend_from_slice(b"COOCSKB1");
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&4u64.to_le_bytes());
        want.extend_from_slice(&0xABu64.to_le_bytes());
        want.extend_from_slice(&0u32.to_le_bytes());
        want.extend_from_slice(&0u64.to_le_bytes());
        want.extend_from_slice(&1u64.to_le_bytes());
        want.extend_from_slice(&pos.to_le_bytes());
        want.extend_from_slice(&7u32.to_le_bytes());
        assert_eq!(bytes, want);
    }

    #[test]
    fn rejects_damage() {
        let s = sketch_with(&[("a", "b", 3), ("c", "d", 1)], 64);
        let bytes = save_csr(&s);
        for cut in [0, 7, 12, 30, bytes.len() - 1] {
            assert!(
                matches!(load_csr(&bytes[..cut]), Err(Error::Corrupt(_))),
                "cut {cut}"
            );
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(load_csr(&bad), Err(Error::Corrupt(_))));
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(
            load_csr(&v2),
            Err(Error::UnsupportedVersion {
                found: 2,
                expected: 1
            })
        ));
        let mut zero = bytes.clone();
        let n = zero.len();
        zero[n - 4..].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(load_csr(&zero), Err(Error::Corrupt(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(load_csr(&extra).is_err());
    }

    #[test]
    fn shadow_round_trip_and_damage() {
        let mut f = ShadowFilter::with_capacity(100, 0.01, 2).unwrap();
        f.insert(&PairKey::new("a", "b"));
        let bytes = save_shadow(&f);
        let back = load_shadow(&bytes).unwrap();
        assert_eq!(back, f);
        assert!(back.contains(&PairKey::new("b", "a")));
        assert!(load_shadow(&bytes[..bytes.len() - 3]).is_err());
        assert!(load_shadow(&save_csr(&sketch_with(&[], 4))).is_err());
    }

    #[test]
    fn export_counts_and_queries() {
        let empty = sketch_with(&[], 32);
        let mut out = Vec::new();
        assert_eq!(export_table(&empty, &mut out).unwrap(), 0);
        assert_eq!(String::from_utf8(out).unwrap(), "hash_row,position,count\n");

        let mut s = CoocSketch::new(1, 100, vec![3]).unwrap();
        for k in [b"a", b"b", b"c", b"d", b"e"] {
            s.update_bytes(k, 1);
        }
        let nnz = s.nnz();
        let mut out = Vec::new();
        assert_eq!(export_table(&s, &mut out).unwrap(), nnz);
        let table = RelationalTable::read(out.as_slice()).unwrap();
        assert_eq!(table.len(), nnz);
        assert_eq!(table.query(s.seeds(), 100, b"a"), s.query_bytes(b"a"));
    }

    proptest! {
        #[test]
        fn round_trip_preserves_queries(
            keys in prop::collection::vec((0u16..200, 0u16..200, 1u32..5), 0..300),
            width in 1usize..500,
            fraction in prop::option::of(0.0f64..2.0),
        ) {
            let mut s = CoocSketch::with_seed_set(4, width, 1).unwrap();
            for (a, b, n) in &keys {
                s.update(&PairKey::new(a.to_string(), format!("x{b}")), *n);
            }
            if let Some(f) = fraction {
                s = s.threshold(f).unwrap();
            }
            let bytes = save_csr(&s);
            prop_assert_eq!(bytes.len(), csr_file_size(4, s.nnz()));
            let back = load_csr(&bytes).unwrap();
            prop_assert_eq!(back.counts(), s.counts());
            prop_assert_eq!(back.threshold_cutoff(), s.threshold_cutoff());
            for (a, b, _) in &keys {
                let k = PairKey::new(a.to_string(), format!("x{b}"));
                prop_assert_eq!(back.query(&k), s.query(&k));
            }
        }
    }
}
