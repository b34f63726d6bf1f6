use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CrfError;
use crate::features::{AttributeMatrix, Family};

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// Which labels a template's observation is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelContext {
    Current,
    Transition,
}

/// A conjunction of `(attribute, offset)` tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureTemplate {
    pub conjuncts: Vec<(String, i32)>,
    pub labels: LabelContext,
}

impl FeatureTemplate {
    pub fn unigram(attribute: impl Into<String>, offset: i32) -> Self {
        FeatureTemplate {
            conjuncts: vec![(attribute.into(), offset)],
            labels: LabelContext::Current,
        }
    }

    pub fn conjunction<S: Into<String>>(parts: impl IntoIterator<Item = (S, i32)>) -> Self {
        FeatureTemplate {
            conjuncts: parts.into_iter().map(|(a, o)| (a.into(), o)).collect(),
            labels: LabelContext::Current,
        }
    }

    pub fn with_labels(mut self, labels: LabelContext) -> Self {
        self.labels = labels;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub templates: Vec<FeatureTemplate>,
    /// Label-bigram (and for order 2, label-trigram) weights.
    pub transitions: bool,
    pub window: i32,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: Vec::new(),
            transitions: true,
            window: 2,
        }
    }
}

impl TemplateSet {
    /// Every attribute at every offset in `-window..=window`, paired with the
    /// current label.
    pub fn for_attributes<S: AsRef<str>>(names: impl IntoIterator<Item = S>, window: i32) -> Self {
        let mut templates = Vec::new();
        for name in names {
            for off in -window..=window {
                templates.push(FeatureTemplate::unigram(name.as_ref(), off));
            }
        }
        TemplateSet {
            templates,
            transitions: true,
            window,
        }
    }

    /// Default set for the attribute names seen in `matrices`.
    pub fn default_for<'a>(matrices: impl IntoIterator<Item = &'a AttributeMatrix>) -> Self {
        let names: BTreeSet<String> = matrices
            .into_iter()
            .flat_map(|m| m.attribute_names())
            .collect();
        Self::for_attributes(names, 2)
    }

    pub fn validate(&self) -> Result<(), CrfError> {
        if self.window < 0 {
            return Err(CrfError::InvalidTemplate("negative window".into()));
        }
        for t in &self.templates {
            if t.conjuncts.is_empty() {
                return Err(CrfError::InvalidTemplate("template without conjuncts".into()));
            }
            if let Some((a, o)) = t.conjuncts.iter().find(|(_, o)| o.abs() > self.window) {
                return Err(CrfError::InvalidTemplate(format!(
                    "{a}[{o}] lies outside the ±{} window",
                    self.window
                )));
            }
        }
        Ok(())
    }
}

/// Instantiated observation strings at each position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observations {
    /// `(labels, feature string)` per position.
    pub positions: Vec<Vec<(LabelContext, String)>>,
}

impl Observations {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn attribute_known(matrix: &AttributeMatrix, names: &BTreeSet<String>, attr: &str) -> bool {
    Family::of_attribute(attr).is_some_and(|f| matrix.families.contains(&f)) || names.contains(attr)
}

/// Expands `templates` over `matrix`. Offsets past either end read the
/// boundary sentinels; multi-valued attributes yield one string per value
/// combination; an attribute with no value at a position yields nothing.
pub fn instantiate(matrix: &AttributeMatrix, templates: &TemplateSet) -> Result<Observations, CrfError> {
    templates.validate()?;
    let names = matrix.attribute_names();
    for t in &templates.templates {
        for (a, _) in &t.conjuncts {
            if !attribute_known(matrix, &names, a) {
                return Err(CrfError::UnknownAttribute(a.clone()));
            }
        }
    }
    let n = matrix.len() as i64;
    let mut positions = Vec::with_capacity(matrix.len());
    for i in 0..n {
        let mut feats = Vec::new();
        for t in &templates.templates {
            let mut partial = vec![String::new()];
            for (k, (attr, off)) in t.conjuncts.iter().enumerate() {
                let j = i + *off as i64;
                let values: Vec<&str> = if j < 0 {
                    vec![BOS]
                } else if j >= n {
                    vec![EOS]
                } else {
                    matrix.values(j as usize, attr).collect()
                };
                let mut next = Vec::with_capacity(partial.len() * values.len());
                for p in &partial {
                    for v in &values {
                        let sep = if k == 0 { "" } else { "|" };
                        next.push(format!("{p}{sep}{attr}[{off}]={v}"));
                    }
                }
                partial = next;
            }
            feats.extend(partial.into_iter().map(|s| (t.labels, s)));
        }
        positions.push(feats);
    }
    Ok(Observations { positions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(tokens: &[&str], pos: &[&str]) -> AttributeMatrix {
        let mut m = AttributeMatrix::new([Family::F1, Family::Pos].into_iter().collect(), tokens.len());
        for (i, (t, p)) in tokens.iter().zip(pos).enumerate() {
            m.push(i, "f1", *t);
            m.push(i, "pos", *p);
        }
        m
    }

    fn strings(o: &Observations, i: usize) -> Vec<&str> {
        o.positions[i].iter().map(|(_, s)| s.as_str()).collect()
    }

    #[test]
    fn single_unigram() {
        let set = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f1", 0)],
            ..Default::default()
        };
        let o = instantiate(&matrix(&["a", "b"], &["X", "Y"]), &set).unwrap();
        assert_eq!(strings(&o, 0), ["f1[0]=a"]);
        assert_eq!(strings(&o, 1), ["f1[0]=b"]);
    }

    #[test]
    fn boundary_sentinels() {
        let set = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f1", -1), FeatureTemplate::unigram("f1", 2)],
            ..Default::default()
        };
        let o = instantiate(&matrix(&["a", "b"], &["X", "Y"]), &set).unwrap();
        assert_eq!(strings(&o, 0), ["f1[-1]=<BOS>", "f1[2]=<EOS>"]);
        assert_eq!(strings(&o, 1), ["f1[-1]=a", "f1[2]=<EOS>"]);
    }

    #[test]
    fn unknown_attribute_and_window() {
        let m = matrix(&["a"], &["X"]);
        let set = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f10", 0)],
            ..Default::default()
        };
        assert!(matches!(instantiate(&m, &set), Err(CrfError::UnknownAttribute(a)) if a == "f10"));
        let set = TemplateSet {
            templates: vec![FeatureTemplate::unigram("f1", 3)],
            ..Default::default()
        };
        assert!(matches!(instantiate(&m, &set), Err(CrfError::InvalidTemplate(_))));
    }

    #[test]
    fn bigram_conjunction_matches_enumeration() {
        let tokens = ["a", "b", "c", "d"];
        let mut m = matrix(&tokens, &["N", "V", "N", "D"]);
        m.push(1, "pos", "X");
        let set = TemplateSet {
            templates: vec![FeatureTemplate::conjunction([("pos", 0), ("pos", 1)])],
            ..Default::default()
        };
        let o = instantiate(&m, &set).unwrap();
        for i in 0..tokens.len() {
            let here: Vec<&str> = m.values(i, "pos").collect();
            let there: Vec<&str> = if i + 1 < tokens.len() {
                m.values(i + 1, "pos").collect()
            } else {
                vec![EOS]
            };
            let mut expected = BTreeSet::new();
            for a in &here {
                for b in &there {
                    expected.insert(format!("pos[0]={a}|pos[1]={b}"));
                }
            }
            let got: BTreeSet<String> = strings(&o, i).into_iter().map(String::from).collect();
            assert_eq!(got, expected, "position {i}");
        }
        assert_eq!(o.positions[0].len(), 2);
        assert_eq!(o.positions[1].len(), 2);
    }

    #[test]
    fn default_set_covers_window() {
        let set = TemplateSet::default_for([&matrix(&["a"], &["X"])]);
        assert_eq!(set.templates.len(), 10);
        assert!(set.transitions);
        set.validate().unwrap();
    }
}
