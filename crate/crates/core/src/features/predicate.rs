//! Predicate-argument (f6 to f8) and dependency (f15) features.

use super::heads::HeadRules;
use super::syntax::{detect_voice, main_verb};
use super::FeatureError;
use crate::lingdata::{SentenceRecord, Voice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Before,
    Predicate,
    After,
}

impl Position {
    pub fn as_str(self) -> &'static str {
        match self {
            Position::Before => "before",
            Position::Predicate => "predicate",
            Position::After => "after",
        }
    }
}

/// Features of every token relative to one predicate frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub predicate: usize,
    pub voice: Voice,
    /// The frame was inferred from the parse instead of an SRL layer.
    pub fallback: bool,
    /// Signed token offset `token - predicate`.
    pub distance: Vec<i64>,
    pub position: Vec<Position>,
}

impl FrameFeatures {
    fn new(len: usize, predicate: usize, voice: Voice, fallback: bool) -> Self {
        let distance = (0..len).map(|i| i as i64 - predicate as i64).collect();
        let position = (0..len)
            .map(|i| match i.cmp(&predicate) {
                std::cmp::Ordering::Less => Position::Before,
                std::cmp::Ordering::Equal => Position::Predicate,
                std::cmp::Ordering::Greater => Position::After,
            })
            .collect();
        FrameFeatures {
            predicate,
            voice,
            fallback,
            distance,
            position,
        }
    }
}

/// One [`FrameFeatures`] per SRL frame. Without an SRL layer and with
/// `fallback` set, a single frame is built from the parse: the main verb found
/// by head percolation, with voice from the auxiliary rule.
pub fn predicate_features(
    record: &SentenceRecord,
    rules: &HeadRules,
    fallback: bool,
) -> Result<Vec<FrameFeatures>, FeatureError> {
    let n = record.len();
    if let Some(srl) = &record.srl {
        return Ok(srl
            .iter()
            .map(|f| FrameFeatures::new(n, f.predicate, f.voice, false))
            .collect());
    }
    if !fallback {
        return Err(FeatureError::MissingSrlLayer);
    }
    let tree = record.tree().ok_or(FeatureError::MissingParseLayer)??;
    let verb = main_verb(rules, &tree);
    Ok(vec![FrameFeatures::new(n, verb, detect_voice(&tree, verb), true)])
}

/// The sentence's main predicate: the first SRL frame when present, otherwise
/// the head-percolated main verb.
pub fn main_predicate(record: &SentenceRecord, rules: &HeadRules) -> Option<usize> {
    if let Some(f) = record.srl.as_ref().and_then(|s| s.first()) {
        return Some(f.predicate);
    }
    let tree = record.tree()?.ok()?;
    Some(main_verb(rules, &tree))
}

fn relation_group(rel: &str) -> Option<&'static str> {
    match rel {
        "nsubj" | "nsubjpass" | "nsubj:pass" => Some("nsubj"),
        "amod" => Some("amod"),
        "advmod" => Some("advmod"),
        "dobj" | "obj" => Some("dobj"),
        _ => None,
    }
}

/// Per-token tags such as `nsubj-dep` or `amod-gov` for the subject,
/// modifier and direct-object relations. Other relations are ignored.
pub fn dependency_flags(record: &SentenceRecord) -> Result<Vec<Vec<String>>, FeatureError> {
    let deps = record.deps.as_ref().ok_or(FeatureError::MissingDepsLayer)?;
    let mut tags = vec![Vec::new(); record.len()];
    for d in deps {
        if let Some(group) = relation_group(&d.relation) {
            tags[d.head].push(format!("{group}-gov"));
            tags[d.dependent].push(format!("{group}-dep"));
        }
    }
    for t in &mut tags {
        t.sort();
        t.dedup();
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingdata::parse_record;

    const BOLD_DECISIONS: &str = r#"{"tokens":["We","decided","to","make","some","bold","decisions"],"parse":"(S (NP (PRP We)) (VP (VBD decided) (S (VP (TO to) (VP (VB make) (NP (DT some) (JJ bold) (NNS decisions)))))))","deps":[[1,0,"nsubj"],[6,5,"amod"],[3,6,"dobj"],[3,2,"aux"]],"srl":[{"predicate":1,"voice":"active"}]}"#;

    #[test]
    fn before_and_after_decided() {
        let r = parse_record(BOLD_DECISIONS).unwrap();
        let f = predicate_features(&r, &HeadRules::default(), false).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].position[0], Position::Before);
        assert!(f[0].position[2..].iter().all(|&p| p == Position::After));
        assert_eq!(f[0].distance[0], -1);
        assert_eq!(f[0].distance[6], 5);
        assert_eq!(f[0].voice, Voice::Active);
    }

    #[test]
    fn fallback_finds_passive() {
        let r = parse_record(
            r#"{"tokens":["John","is","chased","by","Peter"],"parse":"(S (NP (NNP John)) (VP (VBZ is) (VP (VBN chased) (PP (IN by) (NP (NNP Peter))))))"}"#,
        )
        .unwrap();
        let rules = HeadRules::default();
        assert!(matches!(
            predicate_features(&r, &rules, false),
            Err(FeatureError::MissingSrlLayer)
        ));
        let f = predicate_features(&r, &rules, true).unwrap();
        assert_eq!(f[0].predicate, 2);
        assert_eq!(f[0].voice, Voice::Passive);
        assert!(f[0].fallback);
    }

    #[test]
    fn fallback_matches_srl_on_bold_decisions() {
        let mut r = parse_record(BOLD_DECISIONS).unwrap();
        r.srl = None;
        let f = predicate_features(&r, &HeadRules::default(), true).unwrap();
        assert_eq!(f[0].predicate, 1);
        assert_eq!(f[0].voice, Voice::Active);
    }

    #[test]
    fn dependency_roles() {
        let r = parse_record(BOLD_DECISIONS).unwrap();
        let tags = dependency_flags(&r).unwrap();
        assert_eq!(tags[0], ["nsubj-dep"]);
        assert_eq!(tags[5], ["amod-dep"]);
        assert_eq!(tags[1], ["nsubj-gov"]);
        assert!(tags[4].is_empty());
        let bare = parse_record(r#"{"tokens":["x"]}"#).unwrap();
        assert!(matches!(dependency_flags(&bare), Err(FeatureError::MissingDepsLayer)));
    }
}
