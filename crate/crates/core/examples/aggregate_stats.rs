//! Strongest and median co-occurrence of a token with a column's values.
//!
//! cargo run --example aggregate_stats

use coocsketch::{
    build_from_lines, BuildConfig, CorpusSchema, Interpreter, StatsAccumulator, TokenFormat,
};

fn main() -> coocsketch::Result<()> {
    let mut corpus = Vec::new();
    for (internet, payment, n) in [
        ("FIBER", "E_CHECK", 40),
        ("FIBER", "MAILED", 12),
        ("FIBER", "CARD", 7),
        ("DSL", "CARD", 20),
        ("DSL", "MAILED", 5),
    ] {
        for _ in 0..n {
            corpus.push(format!(
                "ID!!{} Internet!!{internet} Payment!!{payment}",
                corpus.len()
            ));
        }
    }
    let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
    let schema = CorpusSchema::new(TokenFormat::default(), "ID");
    let out = build_from_lines(
        &refs,
        &schema,
        &BuildConfig {
            width: 1024,
            ..BuildConfig::default()
        },
    )?;
    let shadow = out.shadow.expect("shadow filter");
    let mut acc = StatsAccumulator::new();
    for line in &refs {
        acc.push(&schema.parse_line(line)?)?;
    }
    let (_, dictionary) = acc.finish();
    let interpreter = Interpreter::new(&out.sketch, &shadow, &dictionary, &schema.format);
    for token in ["Internet!!FIBER", "Internet!!DSL"] {
        let agg = interpreter.aggregate_stats(token, "Payment")?;
        println!(
            "{token}: max {} ({}), median {} over {} values",
            agg.max.token, agg.max.count, agg.median_count, agg.candidates_checked
        );
    }
    Ok(())
}
