//! The displacement-penalized NDCG used to score sketch rankings.
//!
//! cargo run --example ndcg

use coocsketch::{ndcg, NdcgConfig, Penalty};

fn main() -> coocsketch::Result<()> {
    let baseline = ["a", "b", "c", "d", "e"];
    let candidates: [&[&str]; 5] = [
        &["a", "b", "c", "d", "e"],
        &["a", "b", "c", "e", "d"],
        &["b", "a", "c", "d", "e"],
        &["a", "x", "c", "d", "e"],
        &["v", "w", "x", "y", "z"],
    ];
    let penalized = NdcgConfig::new(5);
    let plain = NdcgConfig {
        k: 5,
        penalty: Penalty::None,
    };
    println!("{:<12} {:>9} {:>9}", "candidate", "penalized", "plain");
    for c in candidates {
        println!(
            "{:<12} {:>9.4} {:>9.4}",
            c.concat(),
            ndcg(&baseline, c, &penalized)?,
            ndcg(&baseline, c, &plain)?
        );
    }
    Ok(())
}
