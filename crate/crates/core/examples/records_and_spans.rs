//! Reading annotated records and turning IOB layers into spans.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use finmwe::lingdata::{iob_spans, read_records, serialize_record, spans_to_iob, Tag};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/annotated.jsonl");
    let records = read_records(BufReader::new(File::open(path)?))?;
    println!("{} records", records.len());

    let rec = &records[0];
    let tags = rec.labels.as_ref().expect("fixture records are labelled");
    for span in iob_spans(tags) {
        println!("{:<26} {}", span.class.as_str(), rec.tokens[span.start..span.end].join(" "));
    }

    // spans and tags carry the same information
    let back: Vec<Tag> = spans_to_iob(&iob_spans(tags), tags.len())?;
    assert_eq!(&back, tags);

    // orphan I- tags are repaired on read
    let mut noisy = serialize_record(rec);
    noisy = noisy.replacen("\"B-agent\"", "\"I-agent\"", 1);
    let repaired = finmwe::lingdata::parse_record(&noisy)?;
    println!("repaired first tag: {}", repaired.labels.unwrap()[0]);
    Ok(())
}
