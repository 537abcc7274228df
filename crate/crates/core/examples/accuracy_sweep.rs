//! Sketch accuracy and size as the width grows, on a synthetic corpus.
//!
//! cargo run --release --example accuracy_sweep -- [rows] [seed] [depth]

use coocsketch::evaluate::{run_accuracy_sweep, SweepConfig};
use coocsketch::oracle::build_exact;
use coocsketch::synth::{sample_queries, sample_ranked_queries, SynthSpec};

fn main() -> coocsketch::Result<()> {
    let mut args = std::env::args().skip(1);
    let rows = args.next().and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(42);
    let depth = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);

    let (schema, lines) = SynthSpec::mixed(rows, seed).corpus()?;
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let exact = build_exact(&refs, &schema)?;
    let pairs = exact.len();
    println!("{rows} rows, {pairs} distinct pairs");

    let widths: Vec<usize> = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 10.0]
        .iter()
        .map(|f| ((f * pairs as f64).ceil() as usize).max(1))
        .collect();
    let config = SweepConfig {
        depth,
        ..SweepConfig::default()
    };
    let query_sets = [
        (
            "rank-defined",
            sample_ranked_queries(&exact, 10, config.top_k, seed),
        ),
        ("uniform", sample_queries(&exact, 10, seed)),
    ];
    for (label, queries) in query_sets {
        println!("\n{label} queries");
        let results = run_accuracy_sweep(&refs, &schema, &widths, &queries, &config)?;
        println!(
            "{:>9} {:>8} {:>10} {:>10} {:>9}",
            "width", "ndcg", "csr_bytes", "dict_bytes", "sparsity"
        );
        for r in &results {
            println!(
                "{:>9} {:>8.4} {:>10} {:>10} {:>8.2}%",
                r.width,
                r.mean_ndcg,
                r.sparse_size_bytes,
                16 * pairs,
                r.sparsity_pct
            );
        }
    }
    Ok(())
}
