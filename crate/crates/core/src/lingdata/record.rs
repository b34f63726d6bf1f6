use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::iob::{repair_iob, repair_iob_strings, Tag};
use super::LingError;
use crate::features::tree::ConstituencyTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Voice {
    Active,
    Passive,
}

impl Voice {
    pub fn as_str(self) -> &'static str {
        match self {
            Voice::Active => "active",
            Voice::Passive => "passive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpan {
    pub role: String,
    pub start: usize,
    pub end: usize,
}

/// One predicate frame from a semantic role labeller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    pub predicate: usize,
    pub voice: Voice,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<ArgSpan>,
}

/// A typed dependency between token indices, serialized as
/// `[head, dependent, relation]`. Root attachments are not represented.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize, String)", into = "(usize, usize, String)")]
pub struct Dependency {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

impl From<(usize, usize, String)> for Dependency {
    fn from((head, dependent, relation): (usize, usize, String)) -> Self {
        Dependency {
            head,
            dependent,
            relation,
        }
    }
}

impl From<Dependency> for (usize, usize, String) {
    fn from(d: Dependency) -> Self {
        (d.head, d.dependent, d.relation)
    }
}

/// One sentence with all of its annotation layers. Optional layers that the
/// upstream tools did not produce are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SentenceRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deps: Option<Vec<Dependency>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srl: Option<Vec<SrlFrame>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb_cluster: Option<Vec<Option<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<Option<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Tag>>,
}

/// Wire form: labels stay strings so a bad tag surfaces as `MalformedLabel`
/// instead of a generic JSON error.
#[derive(Deserialize)]
struct RawRecord {
    #[serde(default)]
    doc_id: Option<String>,
    tokens: Vec<String>,
    #[serde(default)]
    lemmas: Option<Vec<String>>,
    #[serde(default)]
    pos: Option<Vec<String>>,
    #[serde(default)]
    chunks: Option<Vec<String>>,
    #[serde(default)]
    ner: Option<Vec<String>>,
    #[serde(default)]
    parse: Option<String>,
    #[serde(default)]
    deps: Option<Vec<Dependency>>,
    #[serde(default)]
    srl: Option<Vec<SrlFrame>>,
    #[serde(default)]
    verb_cluster: Option<Vec<Option<String>>>,
    #[serde(default)]
    frame: Option<Vec<Option<String>>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl SentenceRecord {
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        SentenceRecord {
            tokens: tokens.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tree(&self) -> Option<Result<ConstituencyTree, LingError>> {
        self.parse.as_deref().map(|p| {
            ConstituencyTree::parse(p).map_err(|e| LingError::MalformedTree(e.to_string()))
        })
    }

    /// Checks every layer against the token count and repairs IOB layers.
    pub fn validate(&mut self) -> Result<(), LingError> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(LingError::Invalid("record has no tokens".into()));
        }
        check_len("lemmas", n, self.lemmas.as_ref().map(Vec::len))?;
        check_len("pos", n, self.pos.as_ref().map(Vec::len))?;
        check_len("chunks", n, self.chunks.as_ref().map(Vec::len))?;
        check_len("ner", n, self.ner.as_ref().map(Vec::len))?;
        check_len("verb_cluster", n, self.verb_cluster.as_ref().map(Vec::len))?;
        check_len("frame", n, self.frame.as_ref().map(Vec::len))?;
        check_len("labels", n, self.labels.as_ref().map(Vec::len))?;
        if let Some(tree) = self.tree() {
            let tree = tree?;
            if tree.leaf_count() != n {
                return Err(LingError::LengthMismatch {
                    layer: "parse",
                    expected: n,
                    got: tree.leaf_count(),
                });
            }
        }
        if let Some(deps) = &self.deps {
            if let Some(d) = deps.iter().find(|d| d.head >= n || d.dependent >= n) {
                return Err(LingError::Invalid(format!(
                    "dependency ({}, {}, {}) out of range",
                    d.head, d.dependent, d.relation
                )));
            }
        }
        if let Some(srl) = &self.srl {
            for f in srl {
                if f.predicate >= n || f.args.iter().any(|a| a.start >= a.end || a.end > n) {
                    return Err(LingError::Invalid(format!(
                        "srl frame for predicate {} out of range",
                        f.predicate
                    )));
                }
            }
        }
        if let Some(chunks) = self.chunks.as_mut() {
            repair_iob_strings(chunks);
        }
        if let Some(labels) = self.labels.as_mut() {
            repair_iob(labels);
        }
        Ok(())
    }
}

fn check_len(layer: &'static str, expected: usize, got: Option<usize>) -> Result<(), LingError> {
    match got {
        Some(got) if got != expected => Err(LingError::LengthMismatch {
            layer,
            expected,
            got,
        }),
        _ => Ok(()),
    }
}

/// Parses and validates one JSON-lines record.
pub fn parse_record(line: &str) -> Result<SentenceRecord, LingError> {
    let raw: RawRecord = serde_json::from_str(line)?;
    let labels = raw
        .labels
        .map(|ls| ls.iter().map(|l| l.parse::<Tag>()).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let mut rec = SentenceRecord {
        doc_id: raw.doc_id,
        tokens: raw.tokens,
        lemmas: raw.lemmas,
        pos: raw.pos,
        chunks: raw.chunks,
        ner: raw.ner,
        parse: raw.parse,
        deps: raw.deps,
        srl: raw.srl,
        verb_cluster: raw.verb_cluster,
        frame: raw.frame,
        labels,
    };
    rec.validate()?;
    Ok(rec)
}

pub fn serialize_record(record: &SentenceRecord) -> String {
    serde_json::to_string(record).expect("records always serialize")
}

/// Reads a record file, skipping blank lines.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<SentenceRecord>, LingError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_record(&line).map_err(|e| LingError::AtLine {
            line: i + 1,
            source: Box::new(e),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records<W: Write>(mut writer: W, records: &[SentenceRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(writer, "{}", serialize_record(r))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingdata::{iob_spans, LabelClass, LabelSpan};

    pub(crate) const BOLD_DECISIONS: &str = r#"{"tokens":["We","decided","to","make","some","bold","decisions"],"lemmas":["we","decide","to","make","some","bold","decision"],"pos":["PRP","VBD","TO","VB","DT","JJ","NNS"],"chunks":["B-NP","B-VP","I-VP","I-VP","B-NP","I-NP","I-NP"],"ner":["O","O","O","O","O","O","O"],"parse":"(ROOT (S (NP (PRP We)) (VP (VBD decided) (S (VP (TO to) (VP (VB make) (NP (DT some) (JJ bold) (NNS decisions))))))))","deps":[[1,0,"nsubj"],[3,2,"aux"],[1,3,"xcomp"],[6,4,"det"],[6,5,"amod"],[3,6,"dobj"]],"srl":[{"predicate":1,"voice":"active","args":[{"role":"A0","start":0,"end":1},{"role":"A1","start":2,"end":7}]}],"labels":["B-agent","B-direct-subjective","B-expressive-subjectivity","I-expressive-subjectivity","I-expressive-subjectivity","I-expressive-subjectivity","I-expressive-subjectivity"]}"#;

    #[test]
    fn minimal_record() {
        let r = parse_record(r#"{"tokens":["a","b"],"labels":["O","B-agent"]}"#).unwrap();
        assert!(r.parse.is_none() && r.deps.is_none() && r.srl.is_none());
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn bold_decisions_record_spans() {
        let r = parse_record(BOLD_DECISIONS).unwrap();
        assert_eq!(r.len(), 7);
        let spans = iob_spans(r.labels.as_ref().unwrap());
        assert_eq!(
            spans,
            vec![
                LabelSpan::new(LabelClass::Agent, 0, 1),
                LabelSpan::new(LabelClass::DirectSubjective, 1, 2),
                LabelSpan::new(LabelClass::ExpressiveSubjectivity, 2, 7),
            ]
        );
    }

    #[test]
    fn short_pos_layer_is_length_mismatch() {
        let line = r#"{"tokens":["a","b","c","d","e","f","g"],"pos":["A","B","C","D","E","F"]}"#;
        assert!(matches!(
            parse_record(line),
            Err(LingError::LengthMismatch { layer: "pos", expected: 7, got: 6 })
        ));
    }

    #[test]
    fn bad_tree_and_label() {
        let line = r#"{"tokens":["a"],"parse":"(S (X a)"}"#;
        assert!(matches!(parse_record(line), Err(LingError::MalformedTree(_))));
        let line = r#"{"tokens":["a","b"],"parse":"(S (X a))"}"#;
        assert!(matches!(
            parse_record(line),
            Err(LingError::LengthMismatch { layer: "parse", .. })
        ));
        let line = r#"{"tokens":["a"],"labels":["B-bogus"]}"#;
        assert!(matches!(parse_record(line), Err(LingError::MalformedLabel(_))));
    }

    #[test]
    fn orphan_labels_are_repaired_on_parse() {
        let r = parse_record(r#"{"tokens":["a","b"],"labels":["I-agent","O"]}"#).unwrap();
        assert_eq!(r.labels.unwrap()[0], Tag::B(LabelClass::Agent));
    }

    #[test]
    fn serialize_round_trip() {
        let r = parse_record(BOLD_DECISIONS).unwrap();
        let again = parse_record(&serialize_record(&r)).unwrap();
        assert_eq!(r, again);
    }
}
