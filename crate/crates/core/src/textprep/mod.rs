//! From HTML filings to candidate opinion sentences.
//!
//! The stages are [`strip_markup`], [`clean_lines`], [`segment_sentences`] and
//! [`filter_candidates`]; [`extract_filing`] runs all of them.

mod html;
mod segment;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use html::{html_to_text, strip_markup, trim_item_sections};
pub use segment::{
    clean_lines, non_alpha_ratio, segment_sentences, sentence_spans, tokenize, word_count,
    CleanConfig,
};

use crate::lingdata::SentenceRecord;

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("no text left after markup removal")]
    EmptyDocument,
    #[error("file name '{0}' is not <company>_<year>.html")]
    BadFileName(String),
    #[error("fiscal year {0} is outside the configured range")]
    YearOutOfRange(i32),
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("bad sentence line {0}")]
    BadLine(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFiling {
    pub company_id: String,
    pub fiscal_year: i32,
    pub body: String,
}

/// Splits `<company>_<year>.html` at the last underscore.
pub fn parse_filing_name(path: &Path) -> Result<(String, i32), TextprepError> {
    let bad = || TextprepError::BadFileName(path.display().to_string());
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if !ext.eq_ignore_ascii_case("html") && !ext.eq_ignore_ascii_case("htm") {
        return Err(bad());
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(bad)?;
    let (company, year) = stem.rsplit_once('_').ok_or_else(bad)?;
    if company.is_empty() {
        return Err(bad());
    }
    let year: i32 = year.parse().map_err(|_| bad())?;
    Ok((company.to_string(), year))
}

impl RawFiling {
    pub fn read(path: &Path) -> Result<Self, TextprepError> {
        let (company_id, fiscal_year) = parse_filing_name(path)?;
        let bytes = std::fs::read(path)?;
        Ok(RawFiling {
            company_id,
            fiscal_year,
            body: String::from_utf8_lossy(&bytes).into_owned(),
        })
    }
}

/// Case-insensitive word set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: HashSet<String>,
}

impl Lexicon {
    pub fn from_words<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Self {
        Lexicon {
            words: words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).collect(),
        }
    }

    /// One word per line, optionally followed by a tab and a class column.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TextprepError> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.split('\t').next().unwrap_or("").trim();
            if !word.is_empty() && !word.starts_with('#') {
                words.insert(word.to_lowercase());
            }
        }
        Ok(Lexicon { words })
    }

    pub fn extend(&mut self, other: Lexicon) {
        self.words.extend(other.words);
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub clean: CleanConfig,
    /// Inclusive fiscal-year range; filings outside it are rejected.
    pub years: Option<(i32, i32)>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            min_tokens: 8,
            max_tokens: 100,
            clean: CleanConfig::default(),
            years: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSentence {
    pub text: String,
    pub token_count: usize,
    pub company_id: String,
    pub fiscal_year: i32,
    /// Position among all sentences segmented from the filing.
    pub index: usize,
}

impl CandidateSentence {
    /// `company<TAB>year<TAB>index<TAB>text`
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.company_id, self.fiscal_year, self.index, self.text)
    }

    pub fn from_line(line: &str, line_no: usize) -> Result<Self, TextprepError> {
        let bad = || TextprepError::BadLine(line_no);
        let mut parts = line.splitn(4, '\t');
        let company_id = parts.next().filter(|s| !s.is_empty()).ok_or_else(bad)?.to_string();
        let fiscal_year = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let index = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let text = parts.next().ok_or_else(bad)?.to_string();
        Ok(CandidateSentence {
            token_count: word_count(&text),
            text,
            company_id,
            fiscal_year,
            index,
        })
    }

    pub fn doc_id(&self) -> String {
        format!("{}_{}", self.company_id, self.fiscal_year)
    }
}

pub fn read_candidates<R: BufRead>(reader: R) -> Result<Vec<CandidateSentence>, TextprepError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(CandidateSentence::from_line(&line, i + 1)?);
        }
    }
    Ok(out)
}

fn has_lexicon_hit(sentence: &str, lexicon: &Lexicon, lemmas: Option<&HashMap<String, String>>) -> bool {
    tokenize(sentence).iter().any(|t| {
        let t = t.to_lowercase();
        lexicon.contains(&t) || lemmas.and_then(|m| m.get(&t)).is_some_and(|l| lexicon.contains(l))
    })
}

/// Sentences with a lexicon word and a word count within the bounds, paired
/// with their index in `sentences`.
pub fn filter_candidates<'a>(
    sentences: &'a [String],
    lexicon: &Lexicon,
    lemmas: Option<&HashMap<String, String>>,
    min_tokens: usize,
    max_tokens: usize,
) -> Result<Vec<(usize, &'a str)>, TextprepError> {
    if lexicon.is_empty() {
        return Err(TextprepError::EmptyLexicon);
    }
    Ok(sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let n = word_count(s);
            (min_tokens..=max_tokens).contains(&n) && has_lexicon_hit(s, lexicon, lemmas)
        })
        .map(|(i, s)| (i, s.as_str()))
        .collect())
}

/// Runs the whole chain on one filing.
pub fn extract_filing(
    filing: &RawFiling,
    lexicon: &Lexicon,
    lemmas: Option<&HashMap<String, String>>,
    cfg: &ExtractConfig,
) -> Result<Vec<CandidateSentence>, TextprepError> {
    if let Some((lo, hi)) = cfg.years {
        if !(lo..=hi).contains(&filing.fiscal_year) {
            return Err(TextprepError::YearOutOfRange(filing.fiscal_year));
        }
    }
    let text = strip_markup(&filing.body)?;
    let lines = clean_lines(&text, &cfg.clean).join("\n");
    let sentences = segment_sentences(&lines);
    Ok(filter_candidates(&sentences, lexicon, lemmas, cfg.min_tokens, cfg.max_tokens)?
        .into_iter()
        .map(|(index, s)| CandidateSentence {
            text: s.to_string(),
            token_count: word_count(s),
            company_id: filing.company_id.clone(),
            fiscal_year: filing.fiscal_year,
            index,
        })
        .collect())
}

/// Tokenized records keyed by `company_year`.
pub fn records_from_sentences(sentences: &[CandidateSentence]) -> Vec<SentenceRecord> {
    sentences
        .iter()
        .map(|s| {
            let mut r = SentenceRecord::from_tokens(tokenize(&s.text));
            r.doc_id = Some(s.doc_id());
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        assert_eq!(
            parse_filing_name(Path::new("dir/acme_corp_2003.html")).unwrap(),
            ("acme_corp".to_string(), 2003)
        );
        assert!(parse_filing_name(Path::new("acme.html")).is_err());
        assert!(parse_filing_name(Path::new("acme_x.html")).is_err());
        assert!(parse_filing_name(Path::new("acme_2003.txt")).is_err());
    }

    #[test]
    fn candidate_filter() {
        let lex = Lexicon::from_words(["believe", "adverse"]);
        let s: Vec<String> = [
            "We believe margins will improve over the next year.",
            "We believe margins improve.",
            "Revenue was recorded in the fourth quarter of the year.",
            "Results could be adversely affected by several factors.",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let kept = filter_candidates(&s, &lex, None, 8, 100).unwrap();
        assert_eq!(kept.iter().map(|k| k.0).collect::<Vec<_>>(), [0]);
        let kept = filter_candidates(&s, &lex, None, 4, 100).unwrap();
        assert_eq!(kept.iter().map(|k| k.0).collect::<Vec<_>>(), [0, 1]);
        let lemmas: HashMap<String, String> = [("adversely".to_string(), "adverse".to_string())].into();
        let kept = filter_candidates(&s, &lex, Some(&lemmas), 8, 100).unwrap();
        assert_eq!(kept.iter().map(|k| k.0).collect::<Vec<_>>(), [0, 3]);
        assert!(matches!(
            filter_candidates(&s, &Lexicon::default(), None, 8, 100),
            Err(TextprepError::EmptyLexicon)
        ));
    }

    #[test]
    fn lexicon_files_and_lines() {
        let lex = Lexicon::from_reader("Believe\tweak\n\n# c\nrisk\n".as_bytes()).unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex.contains("BELIEVE"));
        let c = CandidateSentence {
            text: "We believe.".into(),
            token_count: 2,
            company_id: "acme".into(),
            fiscal_year: 2001,
            index: 4,
        };
        assert_eq!(CandidateSentence::from_line(&c.to_line(), 1).unwrap(), c);
        assert_eq!(records_from_sentences(&[c])[0].doc_id.as_deref(), Some("acme_2001"));
    }

    #[test]
    fn whole_filing() {
        let filing = RawFiling {
            company_id: "acme".into(),
            fiscal_year: 2004,
            body: "<html><body><p>FORM 10-K</p><p>We believe nothing here matters at all today.</p>\
                   <p>ITEM 1. BUSINESS</p><p>We believe our products will continue to gain market share. \
                   Sales rose.</p><table><tr><td>We believe tables are dropped entirely from the text.</td></tr></table>\
                   <p>......... 1,234 ........</p><p>SIGNATURES</p><p>We believe signatures are not part of it.</p></body></html>"
                .into(),
        };
        let lex = Lexicon::from_words(["believe"]);
        let out = extract_filing(&filing, &lex, None, &ExtractConfig::default()).unwrap();
        assert_eq!(out.len(), 1, "{out:?}");
        assert_eq!(out[0].text, "We believe our products will continue to gain market share.");
        assert_eq!(out[0].index, 2);
        let cfg = ExtractConfig {
            years: Some((1996, 2003)),
            ..Default::default()
        };
        assert!(matches!(
            extract_filing(&filing, &lex, None, &cfg),
            Err(TextprepError::YearOutOfRange(2004))
        ));
    }
}
