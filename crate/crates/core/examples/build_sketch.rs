//! Build a sketch and its shadow filter, save both, load them back.
//!
//! cargo run --example build_sketch

use coocsketch::persist::{csr_file_size, load_csr, load_shadow, save_csr, save_shadow};
use coocsketch::{build_from_lines, BuildConfig, CorpusSchema, PairKey, TokenFormat};

fn main() -> coocsketch::Result<()> {
    let corpus = [
        "ID!!1 A!!x B!!y C!!z",
        "ID!!2 A!!x B!!y C!!EMT",
        "ID!!3 A!!w B!!y C!!z",
    ];
    let schema = CorpusSchema::new(TokenFormat::default(), "ID");
    let config = BuildConfig {
        width: 1 << 12,
        ..BuildConfig::default()
    };
    let out = build_from_lines(&corpus, &schema, &config)?;
    let shadow = out
        .shadow
        .expect("shadow filter requested by default config");
    println!(
        "{} lines, {} pair insertions, {} nonzero cells of {}x{}",
        out.lines,
        out.pair_insertions,
        out.sketch.nnz(),
        out.sketch.depth(),
        out.sketch.width()
    );

    let csr = save_csr(&out.sketch);
    assert_eq!(
        csr.len(),
        csr_file_size(out.sketch.depth(), out.sketch.nnz())
    );
    let sketch = load_csr(&csr)?;
    let shadow = load_shadow(&save_shadow(&shadow))?;
    println!(
        "CSR file {} bytes (dense would be {})",
        csr.len(),
        4 * sketch.depth() * sketch.width()
    );

    for (a, b) in [
        ("A!!x", "B!!y"),
        ("B!!y", "C!!z"),
        ("A!!w", "C!!z"),
        ("A!!x", "C!!nope"),
    ] {
        let key = PairKey::new(a, b);
        println!(
            "{a} ~ {b}: seen {}, count {}",
            shadow.contains(&key),
            sketch.query(&key)
        );
    }
    Ok(())
}
