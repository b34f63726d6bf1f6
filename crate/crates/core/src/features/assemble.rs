use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::heads::{head_word, HeadRules};
use super::lexicon::{lexicon_class, LookupTable, SubjectivityLexicon};
use super::ortho::orthographic_flags;
use super::predicate::{dependency_flags, main_predicate, predicate_features};
use super::syntax::{clause_patterns, node_path, phrase_type_levels, subcategorization, syntactic_path};
use super::tree::ConstituencyTree;
use super::FeatureError;
use crate::lingdata::SentenceRecord;

/// Value emitted for a family whose source layer is missing.
pub const ABSENT: &str = "absent";
const NOT_HEAD: &str = "O";

/// Feature family identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
    F11,
    F12,
    F13,
    F14,
    F15,
    F16,
    F17,
    F18,
    F19,
    Pos,
}

impl Family {
    pub const ALL: [Family; 20] = [
        Family::F1,
        Family::F2,
        Family::F3,
        Family::F4,
        Family::F5,
        Family::F6,
        Family::F7,
        Family::F8,
        Family::F9,
        Family::F10,
        Family::F11,
        Family::F12,
        Family::F13,
        Family::F14,
        Family::F15,
        Family::F16,
        Family::F17,
        Family::F18,
        Family::F19,
        Family::Pos,
    ];

    pub fn id(self) -> &'static str {
        const IDS: [&str; 20] = [
            "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10", "f11", "f12", "f13",
            "f14", "f15", "f16", "f17", "f18", "f19", "pos",
        ];
        IDS[self as usize]
    }

    /// Family of an attribute name such as `f10.parent` or `f6.0`.
    pub fn of_attribute(name: &str) -> Option<Family> {
        name.split('.').next()?.parse().ok()
    }

    fn needs_parse(self) -> bool {
        matches!(
            self,
            Family::F9 | Family::F10 | Family::F11 | Family::F12 | Family::F14
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.id() == s)
            .ok_or(FeatureError::UnknownFamily(s))
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Which families to compute, and how to treat missing layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub families: BTreeSet<Family>,
    /// Infer one predicate frame from the parse when the SRL layer is absent.
    #[serde(default = "yes")]
    pub srl_fallback: bool,
    /// Fail on missing layers instead of emitting `absent` values.
    #[serde(default)]
    pub strict_layers: bool,
    #[serde(default = "three")]
    pub phrase_levels: usize,
}

fn yes() -> bool {
    true
}

fn three() -> usize {
    3
}

impl FeatureConfig {
    pub fn new(families: impl IntoIterator<Item = Family>) -> Self {
        FeatureConfig {
            families: families.into_iter().collect(),
            srl_fallback: true,
            strict_layers: false,
            phrase_levels: 3,
        }
    }

    pub fn has(&self, f: Family) -> bool {
        self.families.contains(&f)
    }
}

/// A named feature-set row: its families and whether target labels are
/// removed from the data before training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSetDef {
    pub name: &'static str,
    pub families: Vec<Family>,
    pub drop_target: bool,
}

pub const FEATURE_SET_NAMES: [&str; 23] = [
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M", "N", "O", "P", "Q", "R", "S",
    "T", "U", "V", "W",
];

/// Named feature sets A to W.
pub fn feature_set(name: &str) -> Result<FeatureSetDef, FeatureError> {
    use Family::*;
    let full: Vec<Family> = vec![
        F1, F2, F6, F7, F8, F9, F10, F11, F12, F13, F14, F15, F16, F17, F18, F19,
    ];
    let without = |drop: &[Family]| -> Vec<Family> {
        full.iter().copied().filter(|f| !drop.contains(f)).collect()
    };
    let upper = name.trim().to_ascii_uppercase();
    let families = match upper.as_str() {
        "A" => vec![F1, F2],
        "B" => vec![F1, F3, F4, F5],
        "C" => vec![F1, Pos],
        "D" => vec![F1, Pos, F16],
        "E" => vec![F1, Pos, F15],
        "F" => vec![F1, F13],
        "G" => vec![F1, F2, Pos, F13, F15, F16, F17],
        "H" => vec![F1, F2, F3, F4, F5, Pos, F13, F15, F16, F17],
        "I" => vec![F1, F2, Pos, F13, F14, F15, F16, F17],
        "J" => vec![F1, F11],
        "K" => vec![F1, F10],
        "L" => vec![F1, F11, F12],
        "M" => vec![F1, F12],
        "N" => vec![F1, F10, F12],
        "O" => vec![F1, F10, F11],
        "P" => without(&[F15]),
        "Q" => without(&[F16]),
        "R" => without(&[F12]),
        "S" => without(&[F10]),
        "T" => vec![F1, F2, F10, F11, F12, F13, F14, F15, F16, F17],
        "U" => without(&[F12, F15]),
        "V" | "W" => full.clone(),
        _ => return Err(FeatureError::UnknownFeatureSet(name.to_string())),
    };
    let name = FEATURE_SET_NAMES
        .iter()
        .find(|&&n| n == upper)
        .expect("matched above");
    Ok(FeatureSetDef {
        name,
        families,
        drop_target: upper == "W",
    })
}

/// Lookup resources shared across sentences.
#[derive(Debug, Clone, Default)]
pub struct FeatureResources {
    pub head_rules: HeadRules,
    pub lexicon: Option<SubjectivityLexicon>,
    pub verb_clusters: Option<LookupTable>,
    pub frames: Option<LookupTable>,
}

/// Per-token `(attribute, value)` rows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeMatrix {
    pub families: BTreeSet<Family>,
    pub rows: Vec<Vec<(String, String)>>,
}

impl AttributeMatrix {
    pub fn new(families: BTreeSet<Family>, len: usize) -> Self {
        AttributeMatrix {
            families,
            rows: vec![Vec::new(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: usize, name: impl Into<String>, value: impl Into<String>) {
        self.rows[row].push((name.into(), value.into()));
    }

    /// Values of attribute `name` at `row` (several for multi-valued attributes).
    pub fn values<'a>(&'a self, row: usize, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.rows[row]
            .iter()
            .filter(move |(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn value(&self, row: usize, name: &str) -> Option<&str> {
        self.rows[row]
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    /// Every attribute name used in any row.
    pub fn attribute_names(&self) -> BTreeSet<String> {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|(n, _)| n.clone()))
            .collect()
    }

    fn fill(&mut self, name: &str, value: &str) {
        for r in 0..self.rows.len() {
            self.push(r, name, value);
        }
    }
}

fn missing(strict: bool, err: FeatureError) -> Result<(), FeatureError> {
    if strict {
        Err(err)
    } else {
        Ok(())
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Builds the attribute matrix for the families enabled in `config`.
pub fn assemble_attributes(
    record: &SentenceRecord,
    config: &FeatureConfig,
    resources: &FeatureResources,
) -> Result<AttributeMatrix, FeatureError> {
    use Family::*;
    let n = record.len();
    let strict = config.strict_layers;
    let mut m = AttributeMatrix::new(config.families.clone(), n);
    let tree = match record.tree() {
        Some(t) => Some(t?),
        None => None,
    };
    let rules = &resources.head_rules;

    let token_layer = |m: &mut AttributeMatrix,
                       fam: Family,
                       layer: Option<&Vec<String>>,
                       name: &'static str|
     -> Result<(), FeatureError> {
        match layer {
            Some(vals) => {
                for (i, v) in vals.iter().enumerate() {
                    m.push(i, fam.id(), v.clone());
                }
            }
            None => {
                missing(strict, FeatureError::MissingLayer(name))?;
                m.fill(fam.id(), ABSENT);
            }
        }
        Ok(())
    };

    for &fam in &config.families {
        if fam.needs_parse() && tree.is_none() {
            missing(strict, FeatureError::MissingParseLayer)?;
            let names: &[&str] = match fam {
                F10 => &["f10", "f10.parent", "f10.pp"],
                F11 => &["f11.0", "f11.1", "f11.2"],
                F12 => &["f12.full", "f12.partial", "f12.parent"],
                F14 => &["f14.clause", "f14.npvp"],
                _ => &["f9"],
            };
            for name in names {
                m.fill(name, ABSENT);
            }
            continue;
        }
        match fam {
            F1 => {
                for (i, t) in record.tokens.iter().enumerate() {
                    m.push(i, "f1", t.clone());
                }
            }
            F2 => token_layer(&mut m, F2, record.lemmas.as_ref(), "lemmas")?,
            Pos => match (&record.pos, &tree) {
                (Some(_), _) => token_layer(&mut m, Pos, record.pos.as_ref(), "pos")?,
                (None, Some(t)) => {
                    for i in 0..n {
                        m.push(i, "pos", t.pos(i).to_string());
                    }
                }
                (None, None) => token_layer(&mut m, Pos, None, "pos")?,
            },
            F3 | F4 | F5 => {
                for (i, t) in record.tokens.iter().enumerate() {
                    let o = orthographic_flags(t);
                    match fam {
                        F3 => {
                            m.push(i, "f3.initcap", flag(o.initcap));
                            m.push(i, "f3.allcaps", flag(o.allcaps));
                        }
                        F4 => m.push(i, "f4", flag(o.alnum_mix)),
                        _ => m.push(i, "f5", flag(o.punct)),
                    }
                }
            }
            F6 | F7 | F8 => match predicate_features(record, rules, config.srl_fallback) {
                Ok(frames) if frames.is_empty() => m.fill(&format!("{fam}.0"), "none"),
                Ok(frames) => {
                    for (k, f) in frames.iter().enumerate() {
                        let name = format!("{fam}.{k}");
                        for i in 0..n {
                            let v = match fam {
                                F6 => f.distance[i].to_string(),
                                F7 => f.position[i].as_str().to_string(),
                                _ if f.fallback => format!("{}:fallback", f.voice.as_str()),
                                _ => f.voice.as_str().to_string(),
                            };
                            m.push(i, name.clone(), v);
                        }
                    }
                }
                Err(FeatureError::MissingParseLayer) if !strict => {
                    m.fill(&format!("{fam}.0"), ABSENT)
                }
                Err(e) => return Err(e),
            },
            F9 => {
                let t = tree.as_ref().expect("checked above");
                let v = main_predicate(record, rules)
                    .and_then(|p| subcategorization(t, p).ok())
                    .unwrap_or_else(|| "none".to_string());
                m.fill("f9", &v);
            }
            F10 => {
                let t = tree.as_ref().expect("checked above");
                for i in 0..n {
                    let pre = t.preterminal(i);
                    m.push(i, "f10", head_word(rules, t, pre).head.render());
                    let parent = t.parent(pre).filter(|&p| rules.head_token(t, p) == i);
                    let pv = parent
                        .map(|p| head_word(rules, t, p).head.render())
                        .unwrap_or_else(|| NOT_HEAD.to_string());
                    m.push(i, "f10.parent", pv);
                    let pp = t
                        .ancestors(pre)
                        .find(|&a| super::heads::base_category(t.label(a)) == "PP")
                        .and_then(|a| head_word(rules, t, a).content)
                        .map(|c| c.render())
                        .unwrap_or_else(|| NOT_HEAD.to_string());
                    m.push(i, "f10.pp", pp);
                }
            }
            F11 => {
                let t = tree.as_ref().expect("checked above");
                let levels = config.phrase_levels.max(1);
                for i in 0..n {
                    let lv = phrase_type_levels(rules, t, i, levels);
                    for k in 0..levels {
                        let v = lv.get(k).map(String::as_str).unwrap_or(NOT_HEAD);
                        m.push(i, format!("f11.{k}"), v);
                    }
                }
            }
            F12 => {
                let t = tree.as_ref().expect("checked above");
                match main_predicate(record, rules) {
                    Some(p) => path_attributes(&mut m, t, rules, p),
                    None => {
                        for name in ["f12.full", "f12.partial", "f12.parent"] {
                            m.fill(name, "none");
                        }
                    }
                }
            }
            F13 => token_layer(&mut m, F13, record.chunks.as_ref(), "chunks")?,
            F14 => {
                let t = tree.as_ref().expect("checked above");
                for (i, f) in clause_patterns(t).iter().enumerate() {
                    m.push(i, "f14.clause", flag(f.clause_after_verb));
                    m.push(i, "f14.npvp", flag(f.np_before_vp));
                }
            }
            F15 => match dependency_flags(record) {
                Ok(tags) => {
                    for (i, ts) in tags.into_iter().enumerate() {
                        if ts.is_empty() {
                            m.push(i, "f15", "none");
                        }
                        for tag in ts {
                            m.push(i, "f15", tag);
                        }
                    }
                }
                Err(e) if strict => return Err(e),
                Err(_) => m.fill("f15", ABSENT),
            },
            F16 => token_layer(&mut m, F16, record.ner.as_ref(), "ner")?,
            F17 => {
                let empty = SubjectivityLexicon::default();
                let lex = resources.lexicon.as_ref().unwrap_or(&empty);
                for (i, t) in record.tokens.iter().enumerate() {
                    let lemma = record.lemmas.as_ref().map(|l| l[i].as_str());
                    m.push(i, "f17", lexicon_class(t, lemma, lex).to_string());
                }
            }
            F18 => {
                for i in 0..n {
                    m.push(i, "f18", verb_cluster(record, resources, tree.as_ref(), i));
                }
            }
            F19 => {
                let v = main_predicate(record, rules)
                    .and_then(|p| frame_name(record, resources, p))
                    .unwrap_or_else(|| "none".to_string());
                m.fill("f19", &v);
            }
        }
    }
    Ok(m)
}

fn path_attributes(m: &mut AttributeMatrix, t: &ConstituencyTree, rules: &HeadRules, pred: usize) {
    let target = t.preterminal(pred);
    for i in 0..m.len() {
        let p = syntactic_path(t, i, pred);
        m.push(i, "f12.full", p.full);
        m.push(i, "f12.partial", p.partial);
        let parent = t
            .parent(t.preterminal(i))
            .filter(|&par| rules.head_token(t, par) == i);
        let v = match parent {
            Some(par) => node_path(t, par, target).partial,
            None => NOT_HEAD.to_string(),
        };
        m.push(i, "f12.parent", v);
    }
}

fn is_verb(record: &SentenceRecord, tree: Option<&ConstituencyTree>, i: usize) -> bool {
    match (&record.pos, tree) {
        (Some(p), _) => p[i].starts_with("VB"),
        (None, Some(t)) => t.pos(i).starts_with("VB"),
        _ => false,
    }
}

fn lemma_or_token(record: &SentenceRecord, i: usize) -> &str {
    record
        .lemmas
        .as_ref()
        .map(|l| l[i].as_str())
        .unwrap_or(&record.tokens[i])
}

fn verb_cluster(
    record: &SentenceRecord,
    resources: &FeatureResources,
    tree: Option<&ConstituencyTree>,
    i: usize,
) -> String {
    if let Some(c) = record.verb_cluster.as_ref().and_then(|v| v[i].clone()) {
        return c;
    }
    if is_verb(record, tree, i) {
        if let Some(c) = resources
            .verb_clusters
            .as_ref()
            .and_then(|t| t.get(lemma_or_token(record, i)))
        {
            return c.to_string();
        }
    }
    "none".to_string()
}

fn frame_name(record: &SentenceRecord, resources: &FeatureResources, pred: usize) -> Option<String> {
    record
        .frame
        .as_ref()
        .and_then(|f| f[pred].clone())
        .or_else(|| {
            resources
                .frames
                .as_ref()
                .and_then(|t| t.get(lemma_or_token(record, pred)))
                .map(str::to_string)
        })
}
