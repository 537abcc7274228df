//! Turn a small table into corpus lines.
//!
//! cargo run --example textify_table

use coocsketch::{stream_corpus, ColumnSpec, TableSpec, TextifyOptions};

const TABLE: &str = "\
customerID,Contract,InternetService,MonthlyCharges
7590-VHVEG,Month-to-month,DSL,29.85
5575-GNVDE,One year,DSL,56.95
3668-QPYBK,Month-to-month,Fiber optic,
9237-HQITU,Month-to-month,Fiber optic,70.70
";

fn main() -> coocsketch::Result<()> {
    let spec = TableSpec::new(vec![
        ColumnSpec::primary_key("customerID"),
        ColumnSpec::categorical("Contract"),
        ColumnSpec::categorical("InternetService"),
        ColumnSpec::numeric("MonthlyCharges", 2),
    ])?;
    let table = stream_corpus(TABLE.as_bytes(), &spec, &TextifyOptions::default())?;

    let mut corpus = Vec::new();
    let summary = table.write_corpus(&mut corpus)?;
    print!("{}", String::from_utf8_lossy(&corpus));
    println!("{} rows, {} tokens", summary.rows, summary.tokens);
    for c in table.clusters() {
        println!(
            "{}!!c{}: {} values in [{}, {}], median {}",
            c.column, c.cluster_id, c.size, c.min, c.max, c.median
        );
    }
    Ok(())
}
