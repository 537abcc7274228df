//! Chunked multi-threaded build: same bytes, different wall time.
//!
//! cargo run --release --example parallel_build -- [rows]

use coocsketch::evaluate::run_scaling_bench;
use coocsketch::synth::SynthSpec;
use coocsketch::{CorpusSchema, TokenFormat};

fn main() -> coocsketch::Result<()> {
    let rows = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200_000);
    let lines = SynthSpec::mixed(rows, 1).fast_corpus()?;
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
    let schema = CorpusSchema::new(TokenFormat::default(), "ID");
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{rows} rows, {cores} core(s) available");
    for r in run_scaling_bench(&refs, &schema, &[1, 2, 4, 8], 5, 1 << 20, 0, 3)? {
        println!(
            "{} threads: {:>7.1} ms  speedup {:.2}x  identical {}",
            r.threads, r.build_ms, r.speedup, r.identical
        );
    }
    Ok(())
}
