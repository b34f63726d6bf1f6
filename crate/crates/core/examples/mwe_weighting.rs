//! Harvests labelled expressions from the annotated fixture records and
//! builds their per-document weights.
//!
//! `cargo run --example mwe_weighting`

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use finmwe::lingdata::{read_records, LabelClass};
use finmwe::mwe::{harvest, mask_all, mwef_idf, weight_matrix, MwefIdfConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let records = read_records(BufReader::new(File::open(data.join("annotated.jsonl"))?))?;
    let masked = mask_all(&records)?;

    let classes = [LabelClass::ExpressiveSubjectivity];
    let table = harvest(&masked, Some(&classes));
    println!("{} expressions over {} documents", table.entries.len(), table.documents.len());

    let mut top: Vec<_> = table.entries.iter().collect();
    top.sort_by(|a, b| b.total_freq.cmp(&a.total_freq).then(a.text.cmp(&b.text)));
    for e in top.iter().take(8) {
        println!("  {:>3} {:>3}  {}", e.total_freq, e.doc_freq, e.text);
    }

    let cfg = MwefIdfConfig::default();
    let selected: Vec<String> = top.iter().take(3).map(|e| e.text.clone()).collect();
    let w = weight_matrix(&table, Some(&selected), &cfg)?;
    println!("\n{:<10} {}", "document", w.expressions.join(" | "));
    for (doc, row) in w.documents.iter().zip(&w.values).filter(|(_, r)| r.iter().any(|v| *v > 0.0)).take(10) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("{doc:<10} {}", cells.join("  "));
    }

    let docs = table.documents.len();
    println!("\nweight by frequency in the document (rows) and document frequency (columns):");
    for f in 1..=3 {
        let cells: Vec<String> = [1, 5, 10, docs]
            .iter()
            .map(|&n| mwef_idf(f, n, docs, &cfg).map(|w| format!("{w:.4}")))
            .collect::<Result<_, _>>()?;
        println!("  f {f}: {}", cells.join("  "));
    }
    Ok(())
}
