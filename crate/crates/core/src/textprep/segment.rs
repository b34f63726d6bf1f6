use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    /// Lines whose non-alphabetic share is strictly above this are dropped.
    pub max_non_alpha: f64,
    pub min_alpha: usize,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            max_non_alpha: 0.5,
            min_alpha: 3,
        }
    }
}

/// Share of non-alphabetic characters. A single space between two
/// non-space characters is a separator and is not counted; longer
/// whitespace runs count in full.
pub fn non_alpha_ratio(line: &str) -> f64 {
    let chars: Vec<char> = line.trim().chars().collect();
    let mut counted = 0usize;
    let mut alpha = 0usize;
    for (i, &c) in chars.iter().enumerate() {
        if c == ' ' {
            let lone = i > 0 && i + 1 < chars.len() && chars[i - 1] != ' ' && chars[i + 1] != ' ';
            if lone {
                continue;
            }
        }
        counted += 1;
        if c.is_alphabetic() {
            alpha += 1;
        }
    }
    if counted == 0 {
        return 1.0;
    }
    (counted - alpha) as f64 / counted as f64
}

/// Drops lines dominated by symbols, digits or spacing.
pub fn clean_lines(text: &str, cfg: &CleanConfig) -> Vec<String> {
    text.lines()
        .filter(|l| {
            let alpha = l.chars().filter(|c| c.is_alphabetic()).count();
            alpha >= cfg.min_alpha && non_alpha_ratio(l) <= cfg.max_non_alpha
        })
        .map(|l| l.trim().to_string())
        .collect()
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "inc", "corp", "co", "ltd", "llc", "plc", "jr", "sr", "st",
    "no", "nos", "vs", "approx", "dept", "fig", "figs", "jan", "feb", "mar", "apr", "jun", "jul",
    "aug", "sep", "sept", "oct", "nov", "dec", "est", "vol", "pp", "ave", "bros", "cf", "e.g",
    "i.e", "u.s", "u.k", "mo", "yr", "yrs", "sec", "art",
];

fn is_abbreviation(word: &str) -> bool {
    let w = word
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_ascii_lowercase();
    if w.chars().count() == 1 && w.chars().all(|c| c.is_alphabetic()) {
        return true;
    }
    ABBREVIATIONS.contains(&w.as_str())
        || (w.contains('.') && w.len() <= 6 && w.chars().all(|c| c.is_alphabetic() || c == '.'))
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '(' | '[' | '“' | '‘' | '$')
}

/// Byte ranges of sentences, trimmed of surrounding whitespace. Line breaks
/// always end a sentence. Otherwise a sentence ends at `.`, `!` or `?`
/// (plus closing quotes or brackets) followed by whitespace and a capital,
/// digit or opening quote, unless the `.` ends a known abbreviation or
/// single initial. A `.` between digits never ends a sentence.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        line_spans(line, offset, &mut spans);
        offset += line.len();
    }
    spans
}

fn line_spans(line: &str, base: usize, spans: &mut Vec<Range<usize>>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && (is_closer(chars[j].1) || matches!(chars[j].1, '.' | '!' | '?')) {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let at_end = k >= chars.len();
            let gap = k > j;
            let boundary = if at_end {
                true
            } else if !gap || !opens_sentence(chars[k].1) {
                false
            } else if c == '.' {
                let word_start = chars[..i]
                    .iter()
                    .rposition(|(_, ch)| ch.is_whitespace())
                    .map_or(0, |p| p + 1);
                let word: String = chars[word_start..i].iter().map(|(_, ch)| ch).collect();
                !is_abbreviation(&word)
            } else {
                true
            };
            if boundary {
                push_trimmed(line, base, chars[start].0, byte_end(&chars, j, line), spans);
                start = k.min(chars.len());
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if start < chars.len() {
        push_trimmed(line, base, chars[start].0, line.len(), spans);
    }
}

fn byte_end(chars: &[(usize, char)], j: usize, line: &str) -> usize {
    chars.get(j).map_or(line.len(), |(b, _)| *b)
}

fn push_trimmed(line: &str, base: usize, from: usize, to: usize, spans: &mut Vec<Range<usize>>) {
    let s = &line[from..to];
    let lead = s.len() - s.trim_start().len();
    let trimmed = s.trim();
    if !trimmed.is_empty() {
        let a = base + from + lead;
        spans.push(a..a + trimmed.len());
    }
}

pub fn segment_sentences(text: &str) -> Vec<String> {
    sentence_spans(text)
        .into_iter()
        .map(|r| text[r].to_string())
        .collect()
}

/// Whitespace-separated words that contain a letter or digit.
pub fn word_count(sentence: &str) -> usize {
    sentence
        .split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric() && !matches!(c, '$' | '%' | '&' | '-')
}

/// Splits words and peels leading and trailing punctuation into separate
/// tokens. Inner punctuation (`1,234.5`, `U.S.`, `year-end`) stays attached.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in sentence.split_whitespace() {
        let lead: Vec<char> = w.chars().take_while(|&c| is_edge_punct(c)).collect();
        let rest = &w[lead.iter().map(|c| c.len_utf8()).sum::<usize>()..];
        let mut core = rest;
        let mut tail = Vec::new();
        while let Some(c) = core.chars().last() {
            let keep_period = c == '.' && core.len() > 1 && {
                let inner = &core[..core.len() - 1];
                inner.contains('.') && is_abbreviation(core.trim_end_matches('.'))
            };
            if !is_edge_punct(c) || keep_period {
                break;
            }
            tail.push(c);
            core = &core[..core.len() - c.len_utf8()];
        }
        out.extend(lead.iter().map(|c| c.to_string()));
        if !core.is_empty() {
            out.push(core.to_string());
        }
        out.extend(tail.iter().rev().map(|c| c.to_string()));
    }
    out
}
