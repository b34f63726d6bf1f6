//! Tagging evaluation and corpus transforms.
//!
//! Phrase scores use exact span matching: a predicted span is correct only if
//! its class, start and end all agree with a gold span. Runs of `O` tags form
//! spans of the extra class `Other`. Scores are percentages.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lingdata::{iob_spans, LabelClass, SentenceRecord, Tag};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("sentence {index}: {gold} gold tags but {predicted} predicted")]
    LengthMismatch {
        index: usize,
        gold: usize,
        predicted: usize,
    },
    #[error("{gold} gold sentences but {predicted} predicted")]
    CountMismatch { gold: usize, predicted: usize },
    #[error("record {0} has no labels")]
    MissingLabels(usize),
    #[error("train fraction {0} is not in (0, 1)")]
    InvalidFraction(f64),
}

pub const OTHER: &str = "Other";

/// Row order of the per-class table.
const CLASS_ORDER: [LabelClass; 5] = [
    LabelClass::Agent,
    LabelClass::ObjectiveSpeechEvent,
    LabelClass::DirectSubjective,
    LabelClass::ExpressiveSubjectivity,
    LabelClass::Target,
];

/// `(1+α)·p·r / (α·p + r)`, or 0 when both are 0.
pub fn f_measure(p: f64, r: f64, alpha: f64) -> f64 {
    if p == 0.0 && r == 0.0 {
        return 0.0;
    }
    (1.0 + alpha) * p * r / (alpha * p + r)
}

/// Percentage of positions with identical tags.
pub fn token_accuracy<T: PartialEq>(gold: &[T], predicted: &[T]) -> Result<f64, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            index: 0,
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Ok(100.0);
    }
    let same = gold.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(100.0 * same as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub p: f64,
    pub r: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl ClassScore {
    fn from_counts(class: &str, gold: usize, predicted: usize, correct: usize) -> Self {
        let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
        let (p, r) = (pct(correct, predicted), pct(correct, gold));
        ClassScore {
            class: class.to_string(),
            p,
            r,
            f: f_measure(p, r, 1.0),
            gold,
            predicted,
            correct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Classes with at least one gold or predicted span, `Other` last.
    pub classes: Vec<ClassScore>,
    pub micro: ClassScore,
    #[serde(rename = "macro")]
    pub macro_avg: ClassScore,
    pub token_accuracy: f64,
    pub sentences: usize,
}

impl EvalReport {
    pub fn class(&self, name: &str) -> Option<&ClassScore> {
        self.classes.iter().find(|c| c.class == name)
    }

    /// Tab-separated `class, p, r, F` rows with a token-accuracy footer.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("class\tp\tr\tF\n");
        let row = |s: &mut String, c: &ClassScore, name: &str| {
            s.push_str(&format!("{name}\t{:.2}\t{:.2}\t{:.2}\n", c.p, c.r, c.f));
        };
        for c in &self.classes {
            row(&mut s, c, &c.class);
        }
        row(&mut s, &self.micro, "Average");
        row(&mut s, &self.macro_avg, "Average (macro)");
        s.push_str(&format!("token_accuracy\t{:.2}\n", self.token_accuracy));
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

type SpanKey = (Option<LabelClass>, usize, usize);

fn spans_with_other(tags: &[Tag]) -> Vec<SpanKey> {
    let mut out: Vec<SpanKey> = iob_spans(tags)
        .into_iter()
        .map(|s| (Some(s.class), s.start, s.end))
        .collect();
    let mut i = 0;
    while i < tags.len() {
        if tags[i] == Tag::O {
            let start = i;
            while i < tags.len() && tags[i] == Tag::O {
                i += 1;
            }
            out.push((None, start, i));
        } else {
            i += 1;
        }
    }
    out
}

/// Exact-match phrase scores over aligned tag sequences.
pub fn phrase_prf(gold: &[Vec<Tag>], predicted: &[Vec<Tag>]) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::CountMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    // (gold, predicted, correct) per class; None is Other.
    let mut counts: BTreeMap<Option<LabelClass>, (usize, usize, usize)> = BTreeMap::new();
    let (mut same, mut total) = (0usize, 0usize);
    for (index, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::LengthMismatch {
                index,
                gold: g.len(),
                predicted: p.len(),
            });
        }
        same += g.iter().zip(p).filter(|(a, b)| a == b).count();
        total += g.len();
        let gs = spans_with_other(g);
        let ps = spans_with_other(p);
        let gset: HashSet<SpanKey> = gs.iter().copied().collect();
        for s in &gs {
            counts.entry(s.0).or_default().0 += 1;
        }
        for s in &ps {
            let e = counts.entry(s.0).or_default();
            e.1 += 1;
            if gset.contains(s) {
                e.2 += 1;
            }
        }
    }
    let mut classes = Vec::new();
    let order = CLASS_ORDER.iter().map(|&c| Some(c)).chain([None]);
    for key in order {
        if let Some(&(g, p, c)) = counts.get(&key) {
            let name = key.map_or(OTHER, LabelClass::as_str);
            classes.push(ClassScore::from_counts(name, g, p, c));
        }
    }
    let (g, p, c) = counts
        .values()
        .fold((0, 0, 0), |acc, v| (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2));
    let micro = ClassScore::from_counts("Average", g, p, c);
    let k = classes.len().max(1) as f64;
    let mp = classes.iter().map(|c| c.p).sum::<f64>() / k;
    let mr = classes.iter().map(|c| c.r).sum::<f64>() / k;
    let macro_avg = ClassScore {
        class: "Average (macro)".into(),
        p: mp,
        r: mr,
        f: classes.iter().map(|c| c.f).sum::<f64>() / k,
        gold: g,
        predicted: p,
        correct: c,
    };
    Ok(EvalReport {
        classes,
        micro,
        macro_avg,
        token_accuracy: if total == 0 {
            100.0
        } else {
            100.0 * same as f64 / total as f64
        },
        sentences: gold.len(),
    })
}

/// [`phrase_prf`] over the label layers of two aligned record lists.
pub fn phrase_prf_records(
    gold: &[SentenceRecord],
    predicted: &[SentenceRecord],
) -> Result<EvalReport, EvalError> {
    let labels = |rs: &[SentenceRecord]| -> Result<Vec<Vec<Tag>>, EvalError> {
        rs.iter()
            .enumerate()
            .map(|(i, r)| r.labels.clone().ok_or(EvalError::MissingLabels(i)))
            .collect()
    };
    phrase_prf(&labels(gold)?, &labels(predicted)?)
}

fn has_explicit_expression(r: &SentenceRecord) -> bool {
    let Some(tags) = &r.labels else {
        return false;
    };
    let classes: HashSet<LabelClass> = tags.iter().filter_map(|t| t.class()).collect();
    classes.contains(&LabelClass::Agent)
        && classes.contains(&LabelClass::DirectSubjective)
        && (classes.contains(&LabelClass::ExpressiveSubjectivity)
            || classes.contains(&LabelClass::ObjectiveSpeechEvent))
}

/// Records with an agent, a direct-subjective and an expressive-subjectivity
/// or objective-speech-event span.
pub fn select_explicit(records: &[SentenceRecord]) -> Vec<SentenceRecord> {
    records
        .iter()
        .filter(|r| has_explicit_expression(r))
        .cloned()
        .collect()
}

/// Relabels every target tag as `O`.
pub fn drop_target(records: &[SentenceRecord]) -> Vec<SentenceRecord> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let Some(tags) = &mut r.labels {
                for t in tags.iter_mut() {
                    if t.class() == Some(LabelClass::Target) {
                        *t = Tag::O;
                    }
                }
            }
            r
        })
        .collect()
}

/// Seeded shuffle split. The training part gets `floor(n · fraction)` items;
/// both parts keep the input order.
pub fn split_heldout<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), EvalError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EvalError::InvalidFraction(fraction));
    }
    let n = items.len();
    let n_train = ((n as f64) * fraction + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train: Vec<usize> = idx[..n_train].to_vec();
    let mut test: Vec<usize> = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((
        train.into_iter().map(|i| items[i].clone()).collect(),
        test.into_iter().map(|i| items[i].clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn harmonic_means() {
        assert!((f_measure(70.84, 38.28, 1.0) - 49.70).abs() < 0.01);
        assert!((f_measure(58.66, 39.69, 1.0) - 47.35).abs() < 0.01);
        assert!((f_measure(42.0, 42.0, 1.0) - 42.0).abs() < 1e-12);
        assert_eq!(f_measure(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn four_of_five_tokens() {
        let gold = tags("B-dse I-dse I-dse I-dse I-dse");
        let pred = tags("B-dse I-dse I-dse I-dse O");
        assert_eq!(token_accuracy(&gold, &pred).unwrap(), 80.0);
        let r = phrase_prf(&[gold], &[pred]).unwrap();
        assert_eq!(r.class("direct-subjective").unwrap().p, 0.0);
        assert_eq!(r.micro.p, 0.0);
        assert_eq!(r.token_accuracy, 80.0);
    }

    #[test]
    fn perfect_and_disjoint() {
        let g = tags("B-agent I-agent O B-ese O B-target");
        let r = phrase_prf(&[g.clone()], &[g.clone()]).unwrap();
        assert!(r.classes.iter().all(|c| c.p == 100.0 && c.r == 100.0 && c.f == 100.0));
        assert_eq!(r.classes.last().unwrap().class, OTHER);
        assert_eq!(token_accuracy(&tags("O O"), &tags("B-agent B-agent")).unwrap(), 0.0);
        assert!(matches!(token_accuracy(&g, &g[..2]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn tsv_layout() {
        let g = tags("B-agent O");
        let r = phrase_prf(&[g.clone()], &[g]).unwrap();
        let tsv = r.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "class\tp\tr\tF");
        assert_eq!(lines[1], "agent\t100.00\t100.00\t100.00");
        assert_eq!(*lines.last().unwrap(), "token_accuracy\t100.00");
    }

    fn rec(labels: &str) -> SentenceRecord {
        let t = tags(labels);
        let mut r = SentenceRecord::from_tokens((0..t.len()).map(|i| format!("w{i}")));
        r.labels = Some(t);
        r
    }

    #[test]
    fn explicit_selection() {
        let keep = rec("B-agent B-dse B-ese O");
        let drop = rec("B-agent O O");
        let ose_keep = rec("B-agent B-dse B-ose");
        let out = select_explicit(&[keep.clone(), drop, ose_keep.clone()]);
        assert_eq!(out, vec![keep, ose_keep]);
        assert_eq!(select_explicit(&out), out);
        assert!(select_explicit(&[]).is_empty());
    }

    #[test]
    fn target_removal() {
        let out = drop_target(&[rec("B-target I-target O"), rec("B-agent B-target I-target B-dse")]);
        assert_eq!(out[0].labels, Some(tags("O O O")));
        assert_eq!(out[1].labels, Some(tags("B-agent O O B-dse")));
    }

    #[test]
    fn heldout_floor_rule() {
        let items: Vec<usize> = (0..10).collect();
        let (a, b) = split_heldout(&items, 0.7, 1).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(split_heldout(&items, 0.7, 1).unwrap(), (a, b));
        let big: Vec<usize> = (0..10325).collect();
        let (a, b) = split_heldout(&big, 0.7, 9).unwrap();
        assert_eq!((a.len(), b.len()), (7227, 3098));
        assert!(split_heldout(&items, 1.0, 0).is_err());
    }
}
