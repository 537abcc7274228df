//! Shadow filter sizing and its measured false-positive rate.
//!
//! cargo run --release --example shadow_filter

use coocsketch::sketch::encode_pair;
use coocsketch::ShadowFilter;

fn main() -> coocsketch::Result<()> {
    for fpr in [0.1, 0.01, 0.001] {
        let n = 50_000u64;
        let mut filter = ShadowFilter::with_capacity(n, fpr, 0)?;
        let mut key = Vec::new();
        for i in 0..n {
            encode_pair(&mut key, &format!("A!!{i}"), &format!("B!!{i}"));
            filter.insert_bytes(&key);
        }
        let probes = 200_000;
        let hits = (0..probes)
            .filter(|i| {
                encode_pair(&mut key, &format!("A!!{i}"), &format!("Z!!{i}"));
                filter.contains_bytes(&key)
            })
            .count();
        println!(
            "target {:>6.3}%  m = {:>7} bits  k = {}  measured {:.3}%",
            100.0 * fpr,
            filter.bit_len(),
            filter.hash_count(),
            100.0 * hits as f64 / probes as f64
        );
    }
    Ok(())
}
