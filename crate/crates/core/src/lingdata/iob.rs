//! IOB opinion tags and span conversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LingError;

/// The five opinion classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelClass {
    Agent,
    ExpressiveSubjectivity,
    ObjectiveSpeechEvent,
    DirectSubjective,
    Target,
}

impl LabelClass {
    pub const ALL: [LabelClass; 5] = [
        LabelClass::Agent,
        LabelClass::ExpressiveSubjectivity,
        LabelClass::ObjectiveSpeechEvent,
        LabelClass::DirectSubjective,
        LabelClass::Target,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelClass::Agent => "agent",
            LabelClass::ExpressiveSubjectivity => "expressive-subjectivity",
            LabelClass::ObjectiveSpeechEvent => "objective-speech-event",
            LabelClass::DirectSubjective => "direct-subjective",
            LabelClass::Target => "target",
        }
    }
}

impl fmt::Display for LabelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelClass {
    type Err = LingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Ok(match norm.as_str() {
            "agent" => LabelClass::Agent,
            "expressive-subjectivity" | "expressive" | "ese" => LabelClass::ExpressiveSubjectivity,
            "objective-speech-event" | "obj" | "ose" => LabelClass::ObjectiveSpeechEvent,
            "direct-subjective" | "dse" => LabelClass::DirectSubjective,
            "target" => LabelClass::Target,
            _ => return Err(LingError::MalformedLabel(s.to_string())),
        })
    }
}

/// One IOB tag over the opinion classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(LabelClass),
    I(LabelClass),
}

impl Tag {
    pub fn class(self) -> Option<LabelClass> {
        match self {
            Tag::O => None,
            Tag::B(c) | Tag::I(c) => Some(c),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(c) => write!(f, "B-{c}"),
            Tag::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl FromStr for Tag {
    type Err = LingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "O" {
            return Ok(Tag::O);
        }
        match t.split_once('-') {
            Some(("B", rest)) => Ok(Tag::B(rest.parse()?)),
            Some(("I", rest)) => Ok(Tag::I(rest.parse()?)),
            _ => Err(LingError::MalformedLabel(s.to_string())),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for LabelClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LabelClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A labelled phrase `[start, end)` over token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSpan {
    pub class: LabelClass,
    pub start: usize,
    pub end: usize,
}

impl LabelSpan {
    pub fn new(class: LabelClass, start: usize, end: usize) -> Self {
        LabelSpan { class, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Decodes maximal spans. An `I-X` that does not continue an `X` span opens a
/// new span, exactly as if it were `B-X`.
pub fn iob_spans(tags: &[Tag]) -> Vec<LabelSpan> {
    let mut spans = Vec::new();
    let mut open: Option<LabelSpan> = None;
    for (i, tag) in tags.iter().enumerate() {
        match *tag {
            Tag::O => {
                spans.extend(open.take());
            }
            Tag::B(c) => {
                spans.extend(open.take());
                open = Some(LabelSpan::new(c, i, i + 1));
            }
            Tag::I(c) => match open.as_mut() {
                Some(span) if span.class == c => span.end = i + 1,
                _ => {
                    spans.extend(open.take());
                    open = Some(LabelSpan::new(c, i, i + 1));
                }
            },
        }
    }
    spans.extend(open);
    spans
}

/// Encodes spans back into tags. Spans may come in any order but must be
/// non-empty, in bounds and pairwise disjoint.
pub fn spans_to_iob(spans: &[LabelSpan], len: usize) -> Result<Vec<Tag>, LingError> {
    let mut tags = vec![Tag::O; len];
    let mut taken = vec![false; len];
    for span in spans {
        if span.is_empty() || span.end > len {
            return Err(LingError::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len,
            });
        }
        for i in span.start..span.end {
            if taken[i] {
                return Err(LingError::OverlappingSpans(i));
            }
            taken[i] = true;
            tags[i] = if i == span.start {
                Tag::B(span.class)
            } else {
                Tag::I(span.class)
            };
        }
    }
    Ok(tags)
}

/// Rewrites orphan `I-X` tags to `B-X` so the sequence is well formed.
pub fn repair_iob(tags: &mut [Tag]) {
    let mut prev: Option<LabelClass> = None;
    for tag in tags.iter_mut() {
        if let Tag::I(c) = *tag {
            if prev != Some(c) {
                *tag = Tag::B(c);
            }
        }
        prev = tag.class();
    }
}

/// String-level repair for arbitrary `B-`/`I-` layers such as base chunks.
pub fn repair_iob_strings(tags: &mut [String]) {
    let mut prev: Option<String> = None;
    for tag in tags.iter_mut() {
        let class = tag
            .strip_prefix("B-")
            .or_else(|| tag.strip_prefix("I-"))
            .map(str::to_string);
        if let Some(rest) = tag.strip_prefix("I-") {
            if prev.as_deref() != Some(rest) {
                *tag = format!("B-{rest}");
            }
        }
        prev = class;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn according_to_is_one_span() {
        let spans = iob_spans(&tags("B-obj I-obj O"));
        assert_eq!(
            spans,
            vec![LabelSpan::new(LabelClass::ObjectiveSpeechEvent, 0, 2)]
        );
    }

    #[test]
    fn adjacent_begins_are_separate_spans() {
        let spans = iob_spans(&tags("B-agent B-agent"));
        assert_eq!(
            spans,
            vec![
                LabelSpan::new(LabelClass::Agent, 0, 1),
                LabelSpan::new(LabelClass::Agent, 1, 2)
            ]
        );
    }

    #[test]
    fn orphan_inside_opens_span() {
        let spans = iob_spans(&tags("I-agent O"));
        assert_eq!(spans, vec![LabelSpan::new(LabelClass::Agent, 0, 1)]);
        let spans = iob_spans(&tags("B-agent I-target"));
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[1], LabelSpan::new(LabelClass::Target, 1, 2));
    }

    #[test]
    fn encode_examples() {
        assert_eq!(spans_to_iob(&[], 3).unwrap(), vec![Tag::O; 3]);
        let t = spans_to_iob(&[LabelSpan::new(LabelClass::Agent, 0, 2)], 3).unwrap();
        assert_eq!(t, tags("B-agent I-agent O"));
    }

    #[test]
    fn overlap_is_rejected() {
        let err = spans_to_iob(
            &[
                LabelSpan::new(LabelClass::Agent, 0, 2),
                LabelSpan::new(LabelClass::Target, 1, 3),
            ],
            3,
        )
        .unwrap_err();
        assert!(matches!(err, LingError::OverlappingSpans(1)));
    }

    #[test]
    fn repair_matches_decoding() {
        let mut t = tags("I-agent I-agent O I-target B-agent I-target");
        let before = iob_spans(&t);
        repair_iob(&mut t);
        assert_eq!(t, tags("B-agent I-agent O B-target B-agent B-target"));
        assert_eq!(iob_spans(&t), before);
    }

    #[test]
    fn chunk_repair() {
        let mut c: Vec<String> = ["I-NP", "I-NP", "I-VP", "O"].iter().map(|s| s.to_string()).collect();
        repair_iob_strings(&mut c);
        assert_eq!(c, ["B-NP", "I-NP", "B-VP", "O"]);
    }

    #[test]
    fn class_aliases() {
        assert_eq!(
            "objective speech event".parse::<LabelClass>().unwrap(),
            LabelClass::ObjectiveSpeechEvent
        );
        assert!("B-nonsense".parse::<Tag>().is_err());
        assert_eq!(Tag::B(LabelClass::DirectSubjective).to_string(), "B-direct-subjective");
    }
}
