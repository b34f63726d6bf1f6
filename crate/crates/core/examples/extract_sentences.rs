//! Candidate opinion sentences from one bundled filing.
//!
//! `cargo run --example extract_sentences [path/to/company_year.html]`

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use finmwe::textprep::{extract_filing, ExtractConfig, Lexicon, RawFiling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| data.join("filings/acme_2004.html"));

    let lexicon = Lexicon::from_reader(BufReader::new(File::open(data.join("lexicon.txt"))?))?;
    let filing = RawFiling::read(&path)?;
    let sentences = extract_filing(&filing, &lexicon, None, &ExtractConfig::default())?;

    println!("{} {}: {} candidates", filing.company_id, filing.fiscal_year, sentences.len());
    for s in &sentences {
        println!("{:>3} [{:>2} words] {}", s.index, s.token_count, s.text);
    }
    Ok(())
}
