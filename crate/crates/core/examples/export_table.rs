//! Export a sketch as a relational table and query it without the sketch.
//!
//! cargo run --example export_table

use coocsketch::persist::{export_table, RelationalTable};
use coocsketch::{build_from_lines, BuildConfig, CorpusSchema, PairKey, TokenFormat};

fn main() -> coocsketch::Result<()> {
    let corpus = ["ID!!1 A!!x B!!y", "ID!!2 A!!x B!!y", "ID!!3 A!!x B!!z"];
    let schema = CorpusSchema::new(TokenFormat::default(), "ID");
    let config = BuildConfig {
        depth: 3,
        width: 64,
        shadow: None,
        ..BuildConfig::default()
    };
    let sketch = build_from_lines(&corpus, &schema, &config)?.sketch;

    let mut csv = Vec::new();
    let rows = export_table(&sketch, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    println!("{rows} rows");

    let table = RelationalTable::read(csv.as_slice())?;
    for (a, b) in [("A!!x", "B!!y"), ("A!!x", "B!!z")] {
        let key = PairKey::new(a, b).to_bytes();
        println!(
            "{a} ~ {b}: table {}, sketch {}",
            table.query(sketch.seeds(), sketch.width() as u64, &key),
            sketch.query_bytes(&key)
        );
    }
    Ok(())
}
