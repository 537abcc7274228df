//! Explain a query result: which values co-occur with its tokens.
//!
//! cargo run --example interpret_query

use coocsketch::interpret::InterpretOptions;
use coocsketch::synth::{SynthColumn, SynthSpec};
use coocsketch::{build_from_lines, BuildConfig, Interpreter, QuerySpec, StatsAccumulator};

fn main() -> coocsketch::Result<()> {
    let spec = SynthSpec {
        rows: 5_000,
        columns: vec![
            SynthColumn::categorical("segment", 6, 1.2),
            SynthColumn::following("product", 10, 0, 0.75),
            SynthColumn::categorical("region", 8, 0.8),
            SynthColumn::numeric("spend", 4),
        ],
        null_rate: 0.02,
        seed: 3,
    };
    let (schema, lines) = spec.corpus()?;
    let refs: Vec<&str> = lines.iter().map(String::as_str).collect();

    let out = build_from_lines(
        &refs,
        &schema,
        &BuildConfig {
            width: 1 << 14,
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
    let query = QuerySpec {
        id: "similar_to_segment_v0".into(),
        ip: "segment!!V0".into(),
        op: vec!["segment!!V2".into(), "ID!!17".into()],
    };
    let columns = ["product".to_string(), "spend".to_string()];
    let options = InterpretOptions {
        top_k: 3,
        ..InterpretOptions::default()
    };
    let report = interpreter.interpret_query(&query, &columns, &options)?;
    println!("{}", report.to_json_pretty()?);
    Ok(())
}
