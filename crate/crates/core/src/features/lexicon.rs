use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strength {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
            Polarity::Positive => "positive",
        }
    }
}

/// One of the seven subjectivity × polarity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LexClass {
    Objective,
    Subjective(Strength, Polarity),
}

impl fmt::Display for LexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexClass::Objective => f.write_str("objective"),
            LexClass::Subjective(s, p) => {
                let s = match s {
                    Strength::Weak => "weak",
                    Strength::Strong => "strong",
                };
                write!(f, "{s}-{}", p.as_str())
            }
        }
    }
}

fn parse_class(subj: &str, pol: &str) -> Option<LexClass> {
    let strength = match subj.trim().to_ascii_lowercase().as_str() {
        "objective" | "obj" => return Some(LexClass::Objective),
        "weak" | "weaksubj" => Strength::Weak,
        "strong" | "strongsubj" => Strength::Strong,
        _ => return None,
    };
    let polarity = match pol.trim().to_ascii_lowercase().as_str() {
        "negative" | "neg" => Polarity::Negative,
        "neutral" | "both" | "" => Polarity::Neutral,
        "positive" | "pos" => Polarity::Positive,
        _ => return None,
    };
    Some(LexClass::Subjective(strength, polarity))
}

/// Word → subjectivity class, read from `word<TAB>subjectivity<TAB>polarity`.
#[derive(Debug, Clone, Default)]
pub struct SubjectivityLexicon {
    entries: HashMap<String, LexClass>,
}

impl SubjectivityLexicon {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, FeatureError> {
        let mut entries = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let class = match cols.as_slice() {
                [w, s, p, ..] => parse_class(s, p).map(|c| (w, c)),
                [w, s] => parse_class(s, "").map(|c| (w, c)),
                _ => None,
            };
            let (word, class) = class.ok_or_else(|| {
                FeatureError::BadTable(format!("lexicon line {}: '{}'", n + 1, line))
            })?;
            entries.insert(word.trim().to_lowercase(), class);
        }
        Ok(SubjectivityLexicon { entries })
    }

    pub fn insert(&mut self, word: &str, class: LexClass) {
        self.entries.insert(word.to_lowercase(), class);
    }

    pub fn get(&self, word: &str) -> Option<LexClass> {
        self.entries.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Class of a token, trying the surface form before the lemma. Unknown words
/// are objective.
pub fn lexicon_class(token: &str, lemma: Option<&str>, lexicon: &SubjectivityLexicon) -> LexClass {
    lexicon
        .get(token)
        .or_else(|| lemma.and_then(|l| lexicon.get(l)))
        .unwrap_or(LexClass::Objective)
}

/// Flat `key<TAB>value` map, used for verb clusters and frame names.
#[derive(Debug, Clone, Default)]
pub struct LookupTable {
    map: HashMap<String, String>,
}

impl LookupTable {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, FeatureError> {
        let mut map = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('\t').ok_or_else(|| {
                FeatureError::BadTable(format!("lookup line {}: missing tab", n + 1))
            })?;
            map.insert(k.trim().to_lowercase(), v.trim().to_string());
        }
        Ok(LookupTable { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(&key.to_lowercase()).map(String::as_str)
    }
}
