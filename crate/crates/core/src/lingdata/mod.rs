//! Sentence records carrying every annotation layer, and IOB span utilities.

mod iob;
mod record;

pub use iob::{iob_spans, repair_iob, repair_iob_strings, spans_to_iob, LabelClass, LabelSpan, Tag};
pub use record::{
    parse_record, read_records, serialize_record, write_records, ArgSpan, Dependency,
    SentenceRecord, SrlFrame, Voice,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LingError {
    #[error("layer '{layer}' has {got} entries for {expected} tokens")]
    LengthMismatch {
        layer: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("malformed parse tree: {0}")]
    MalformedTree(String),
    #[error("malformed label '{0}'")]
    MalformedLabel(String),
    #[error("spans overlap at token {0}")]
    OverlappingSpans(usize),
    #[error("span [{start}, {end}) out of bounds for length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error("record line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<LingError>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
