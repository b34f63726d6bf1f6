//! Ranks expressions from a table of printed coefficients and p-values.
//!
//! `cargo run --example rank_coefficients`

use std::path::Path;

use finmwe::econ::{rank_from, rank_mwe, Significance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/coefficients.tsv");
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').from_path(path)?;
    println!("{:<6} {:>8} {:>6} {:>8} {:>6}  rank", "id", "neg", "p", "pos", "p");
    for row in reader.records() {
        let row = row?;
        let num = |i: usize| row[i].parse::<f64>();
        let (cn, pn, cp, pp) = (num(1)?, num(2)?, num(3)?, num(4)?);
        let rank = rank_mwe(cn, pn, cp, pp, 0.1);
        println!("{:<6} {cn:>8.3} {pn:>6.3} {cp:>8.3} {pp:>6.3}  {rank}", &row[0]);
    }

    println!("\nneg\\pos  +    -    NSS");
    for neg in Significance::ALL {
        let cells: Vec<String> = Significance::ALL.iter().map(|pos| format!("{:<4}", rank_from(neg, *pos))).collect();
        println!("{:<8}  {}", neg.symbol(), cells.join(" "));
    }
    Ok(())
}
