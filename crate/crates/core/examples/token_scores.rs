//! Influence and discriminatory scores per column, plus the model report.
//!
//! cargo run --example token_scores

use coocsketch::interpret::model_report;
use coocsketch::{CorpusSchema, StatsAccumulator, TokenFormat};

const CORPUS: &[&str] = &[
    "ID!!1 Contract!!MONTHLY Internet!!FIBER Payment!!E_CHECK",
    "ID!!2 Contract!!MONTHLY Internet!!FIBER Payment!!E_CHECK",
    "ID!!3 Contract!!MONTHLY Internet!!DSL Payment!!MAILED",
    "ID!!4 Contract!!YEARLY Internet!!DSL Payment!!EMT",
    "ID!!5 Contract!!YEARLY Internet!!EMT Payment!!CARD",
];

fn main() -> coocsketch::Result<()> {
    let schema = CorpusSchema::new(TokenFormat::default(), "ID");
    let mut acc = StatsAccumulator::new();
    for line in CORPUS {
        acc.push(&schema.parse_line(line)?)?;
    }
    let (stats, _) = acc.finish();
    let report = model_report(&stats, &[]);
    for c in &report.columns {
        let (min, max) = (c.min_token.as_ref(), c.max_token.as_ref());
        println!(
            "{:<9} influence {:.2}  discriminatory {:.2}  least {:<8} most {}",
            c.name,
            c.influence.unwrap_or(f64::NAN),
            c.discriminatory.unwrap_or(f64::NAN),
            min.map_or("-", |t| &t.token),
            max.map_or("-", |t| &t.token),
        );
    }
    println!("impact order:");
    for c in &report.impact_ranking {
        println!("  {:<9} {:.3}", c.column, c.impact);
    }
    Ok(())
}
