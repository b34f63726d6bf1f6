//! Multiword-expression harvesting, weighting and co-occurrence counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lingdata::{iob_spans, repair_iob, repair_iob_strings, LabelClass, SentenceRecord, Tag};

#[derive(Debug, Error)]
pub enum MweError {
    #[error("record {0} has no NER layer")]
    MissingNerLayer(usize),
    #[error("document frequency {n} is invalid for {docs} documents and term frequency {f}")]
    DomainError { f: usize, n: usize, docs: usize },
    #[error("invalid weighting constants: {0}")]
    InvalidConfig(String),
    #[error("record {0}: {1}")]
    BadRecord(usize, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Entity placeholder for an NER tag, ignoring any `B-`/`I-` prefix.
pub fn entity_placeholder(tag: &str) -> Option<&'static str> {
    let bare = tag
        .strip_prefix("B-")
        .or_else(|| tag.strip_prefix("I-"))
        .unwrap_or(tag);
    match bare.to_ascii_uppercase().as_str() {
        "PERSON" | "PER" => Some("PERSON"),
        "ORGANIZATION" | "ORG" => Some("ORG"),
        "LOCATION" | "LOC" | "GPE" => Some("LOC"),
        _ => None,
    }
}

/// Maximal entity spans `(start, end, placeholder)`.
fn entity_spans(ner: &[String]) -> Vec<(usize, usize, &'static str)> {
    let mut spans: Vec<(usize, usize, &'static str)> = Vec::new();
    for (i, tag) in ner.iter().enumerate() {
        let Some(ph) = entity_placeholder(tag) else {
            continue;
        };
        match spans.last_mut() {
            Some(last) if last.1 == i && last.2 == ph && !tag.starts_with("B-") => last.1 = i + 1,
            _ => spans.push((i, i + 1, ph)),
        }
    }
    spans
}

fn collapse<T: Clone>(layer: &mut Vec<T>, groups: &[(usize, usize)], pick: impl Fn(&[T]) -> T) {
    *layer = groups.iter().map(|&(a, b)| pick(&layer[a..b])).collect();
}

/// Replaces each maximal person, organization or location span with a single
/// `PERSON`, `ORG` or `LOC` token and realigns every layer.
pub fn mask_entities(record: &SentenceRecord) -> Result<SentenceRecord, MweError> {
    let ner = record.ner.as_ref().ok_or(MweError::MissingNerLayer(0))?;
    let spans = entity_spans(ner);
    if spans.is_empty() {
        return Ok(record.clone());
    }
    let n = record.len();
    // Groups of old tokens that become one new token.
    let mut groups = Vec::new();
    let mut placeholder = BTreeMap::new();
    let mut i = 0;
    let mut it = spans.iter().peekable();
    while i < n {
        match it.peek() {
            Some(&&(a, b, ph)) if a == i => {
                placeholder.insert(groups.len(), ph);
                groups.push((a, b));
                i = b;
                it.next();
            }
            _ => {
                groups.push((i, i + 1));
                i += 1;
            }
        }
    }
    let mut new_index = vec![0; n];
    for (g, &(a, b)) in groups.iter().enumerate() {
        new_index[a..b].iter_mut().for_each(|x| *x = g);
    }
    let first = |xs: &[String]| xs[0].clone();
    let mut r = record.clone();
    collapse(&mut r.tokens, &groups, first);
    for (&g, ph) in &placeholder {
        r.tokens[g] = ph.to_string();
    }
    if let Some(l) = r.lemmas.as_mut() {
        collapse(l, &groups, first);
        for (&g, ph) in &placeholder {
            l[g] = ph.to_string();
        }
    }
    if let Some(p) = r.pos.as_mut() {
        collapse(p, &groups, first);
        for &g in placeholder.keys() {
            p[g] = "NNP".to_string();
        }
    }
    if let Some(c) = r.chunks.as_mut() {
        collapse(c, &groups, first);
        repair_iob_strings(c);
    }
    if let Some(e) = r.ner.as_mut() {
        collapse(e, &groups, first);
    }
    if let Some(v) = r.verb_cluster.as_mut() {
        collapse(v, &groups, |xs| xs.iter().find_map(Clone::clone));
    }
    if let Some(f) = r.frame.as_mut() {
        collapse(f, &groups, |xs| xs.iter().find_map(Clone::clone));
    }
    if let Some(tags) = r.labels.as_mut() {
        collapse(tags, &groups, |xs: &[Tag]| {
            if xs[0] != Tag::O {
                return xs[0];
            }
            xs.iter()
                .find_map(|t| t.class())
                .map_or(Tag::O, Tag::B)
        });
        repair_iob(tags);
    }
    if let Some(tree) = record.tree() {
        let mut tree = tree.map_err(|e| MweError::BadRecord(0, e.to_string()))?;
        for &(a, b, ph) in spans.iter().rev() {
            tree.collapse_leaves(a, b, ph, "NNP");
        }
        r.parse = Some(tree.to_bracketed());
    }
    if let Some(deps) = r.deps.as_mut() {
        let mut seen = BTreeSet::new();
        deps.retain_mut(|d| {
            d.head = new_index[d.head];
            d.dependent = new_index[d.dependent];
            d.head != d.dependent && seen.insert((d.head, d.dependent, d.relation.clone()))
        });
    }
    if let Some(srl) = r.srl.as_mut() {
        for f in srl {
            f.predicate = new_index[f.predicate];
            for a in &mut f.args {
                a.start = new_index[a.start];
                a.end = new_index[a.end - 1] + 1;
            }
        }
    }
    Ok(r)
}

/// [`mask_entities`] over a corpus, reporting the failing record index.
pub fn mask_all(records: &[SentenceRecord]) -> Result<Vec<SentenceRecord>, MweError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            mask_entities(r).map_err(|e| match e {
                MweError::MissingNerLayer(_) => MweError::MissingNerLayer(i),
                MweError::BadRecord(_, m) => MweError::BadRecord(i, m),
                other => other,
            })
        })
        .collect()
}

/// Lowercased lemmas (or tokens when there are no lemmas) of `start..end`.
pub fn canonical_text(record: &SentenceRecord, start: usize, end: usize) -> String {
    canonical_tokens(record)[start..end].join(" ")
}

fn canonical_tokens(record: &SentenceRecord) -> Vec<String> {
    record
        .lemmas
        .as_ref()
        .unwrap_or(&record.tokens)
        .iter()
        .map(|w| w.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweEntry {
    pub text: String,
    pub class: LabelClass,
    pub total_freq: usize,
    pub doc_freq: usize,
    pub per_doc_freq: BTreeMap<String, usize>,
}

/// Harvested expressions plus the document universe they came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MweTable {
    pub entries: Vec<MweEntry>,
    pub documents: BTreeSet<String>,
}

fn doc_key(record: &SentenceRecord) -> String {
    record.doc_id.clone().unwrap_or_default()
}

/// Collects every decoded span of the requested classes (all classes when
/// `classes` is `None`). Records without a document id share the empty id.
/// Entries are sorted by class, then frequency descending, then text.
pub fn harvest(records: &[SentenceRecord], classes: Option<&[LabelClass]>) -> MweTable {
    let mut acc: BTreeMap<(LabelClass, String), BTreeMap<String, usize>> = BTreeMap::new();
    let mut documents = BTreeSet::new();
    for r in records {
        let doc = doc_key(r);
        documents.insert(doc.clone());
        let Some(tags) = &r.labels else {
            continue;
        };
        let canon = canonical_tokens(r);
        for span in iob_spans(tags) {
            if classes.is_some_and(|cs| !cs.contains(&span.class)) {
                continue;
            }
            let text = canon[span.start..span.end].join(" ");
            *acc.entry((span.class, text)).or_default().entry(doc.clone()).or_default() += 1;
        }
    }
    let mut entries: Vec<MweEntry> = acc
        .into_iter()
        .map(|((class, text), per_doc_freq)| MweEntry {
            total_freq: per_doc_freq.values().sum(),
            doc_freq: per_doc_freq.len(),
            text,
            class,
            per_doc_freq,
        })
        .collect();
    entries.sort_by(|a, b| {
        a.class
            .cmp(&b.class)
            .then(b.total_freq.cmp(&a.total_freq))
            .then(a.text.cmp(&b.text))
    });
    MweTable { entries, documents }
}

impl MweTable {
    pub fn class(&self, class: LabelClass) -> impl Iterator<Item = &MweEntry> {
        self.entries.iter().filter(move |e| e.class == class)
    }

    pub fn get(&self, class: LabelClass, text: &str) -> Option<&MweEntry> {
        self.entries.iter().find(|e| e.class == class && e.text == text)
    }

    /// `class, text, total_freq, doc_freq` rows.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("class\ttext\ttotal_freq\tdoc_freq\n");
        for e in &self.entries {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", e.class, e.text, e.total_freq, e.doc_freq);
        }
        s
    }

    /// `class, text, doc_id, freq` rows.
    pub fn per_doc_tsv(&self) -> String {
        let mut s = String::from("class\ttext\tdoc_id\tfreq\n");
        for e in &self.entries {
            for (d, f) in &e.per_doc_freq {
                let _ = writeln!(s, "{}\t{}\t{}\t{}", e.class, e.text, d, f);
            }
        }
        s
    }

    /// The `top` most frequent expressions of a class as `expression, freq`.
    pub fn frequency_table(&self, class: LabelClass, top: usize) -> String {
        let mut s = String::from("expression\tfreq\n");
        for e in self.class(class).take(top) {
            let _ = writeln!(s, "{}\t{}", e.text, e.total_freq);
        }
        s
    }
}

/// Constants of the weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MwefIdfConfig {
    /// Divides the raw frequency in the term part.
    pub tf_scale: f64,
    /// Multiplies the frequency inside the logarithm.
    pub idf_boost: f64,
}

impl Default for MwefIdfConfig {
    fn default() -> Self {
        MwefIdfConfig {
            tf_scale: 20.0,
            idf_boost: 40.0,
        }
    }
}

/// `(f/q) · ln(max(1, l·f·N/n))`, and 0 when `f = 0`.
pub fn mwef_idf(f: usize, n: usize, docs: usize, cfg: &MwefIdfConfig) -> Result<f64, MweError> {
    if !(cfg.tf_scale > 0.0 && cfg.idf_boost > 0.0) {
        return Err(MweError::InvalidConfig(format!("{cfg:?}")));
    }
    if f == 0 {
        return Ok(0.0);
    }
    if n == 0 || n > docs {
        return Err(MweError::DomainError { f, n, docs });
    }
    let f = f as f64;
    let inner = cfg.idf_boost * f * docs as f64 / n as f64;
    Ok(f / cfg.tf_scale * inner.max(1.0).ln())
}

/// Documents × expressions weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub documents: Vec<String>,
    pub expressions: Vec<String>,
    /// `values[d][e]`
    pub values: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("doc_id");
        for e in &self.expressions {
            s.push('\t');
            s.push_str(e);
        }
        s.push('\n');
        for (d, row) in self.documents.iter().zip(&self.values) {
            s.push_str(d);
            for v in row {
                let _ = write!(s, "\t{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self, MweError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| MweError::BadRecord(0, "empty matrix".into()))?;
        let expressions: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
        let mut documents = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut cols = line.split('\t');
            documents.push(cols.next().unwrap_or_default().to_string());
            let row = cols
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MweError::BadRecord(i + 1, e.to_string()))?;
            if row.len() != expressions.len() {
                return Err(MweError::BadRecord(i + 1, "wrong number of columns".into()));
            }
            values.push(row);
        }
        Ok(WeightMatrix {
            documents,
            expressions,
            values,
        })
    }

    pub fn column(&self, expression: &str) -> Option<usize> {
        self.expressions.iter().position(|e| e == expression)
    }
}

/// Weights of `selected` expressions (all when `None`) in every document.
/// Frequencies of one text are pooled across classes.
pub fn weight_matrix(
    table: &MweTable,
    selected: Option<&[String]>,
    cfg: &MwefIdfConfig,
) -> Result<WeightMatrix, MweError> {
    let mut pooled: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for e in &table.entries {
        let p = pooled.entry(e.text.as_str()).or_default();
        for (d, f) in &e.per_doc_freq {
            *p.entry(d.as_str()).or_default() += f;
        }
    }
    let expressions: Vec<String> = match selected {
        Some(s) => s.to_vec(),
        None => pooled.keys().map(|k| k.to_string()).collect(),
    };
    let docs = table.documents.len();
    let documents: Vec<String> = table.documents.iter().cloned().collect();
    let mut values = vec![vec![0.0; expressions.len()]; documents.len()];
    for (j, expr) in expressions.iter().enumerate() {
        let Some(per_doc) = pooled.get(expr.as_str()) else {
            continue;
        };
        let n = per_doc.len();
        for (i, d) in documents.iter().enumerate() {
            let f = per_doc.get(d.as_str()).copied().unwrap_or(0);
            values[i][j] = mwef_idf(f, n, docs, cfg)?;
        }
    }
    Ok(WeightMatrix {
        documents,
        expressions,
        values,
    })
}

/// One expression per line; blank lines and `#` comments are skipped.
pub fn read_allow_list<R: BufRead>(reader: R) -> Result<Vec<String>, MweError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push(t.to_lowercase());
        }
    }
    Ok(out)
}

fn contains_seq(hay: &[String], needle: &[&str]) -> bool {
    !needle.is_empty()
        && hay
            .windows(needle.len())
            .any(|w| w.iter().zip(needle).all(|(a, b)| a == b))
}

/// Sentences with an agent span containing one of `agent_terms` and a
/// decoded span equal to `mwe`, as `(sentences, distinct documents)`.
/// Matching is on lowercased lemma sequences.
pub fn cooccurrence(records: &[SentenceRecord], agent_terms: &[&str], mwe: &str) -> (usize, usize) {
    let terms: Vec<Vec<String>> = agent_terms
        .iter()
        .map(|t| t.split_whitespace().map(str::to_lowercase).collect())
        .collect();
    let target: Vec<String> = mwe.split_whitespace().map(str::to_lowercase).collect();
    let mut sentences = 0;
    let mut docs = BTreeSet::new();
    for r in records {
        let Some(tags) = &r.labels else {
            continue;
        };
        let canon = canonical_tokens(r);
        let spans = iob_spans(tags);
        let has_mwe = spans.iter().any(|s| canon[s.start..s.end] == target[..]);
        let agent_hit = spans
            .iter()
            .filter(|s| s.class == LabelClass::Agent)
            .any(|s| {
                terms.iter().any(|t| {
                    let t: Vec<&str> = t.iter().map(String::as_str).collect();
                    contains_seq(&canon[s.start..s.end], &t)
                })
            });
        if has_mwe && agent_hit {
            sentences += 1;
            docs.insert(doc_key(r));
        }
    }
    (sentences, docs.len())
}
