//! Lexical heads by head-percolation tables.

use std::collections::HashMap;

use super::tree::{ConstituencyTree, NodeId};
use super::FeatureError;

const DEFAULT_RULES: &str = include_str!("../../data/head_rules.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Left,
    Right,
    LeftDis,
    RightDis,
    Last,
}

#[derive(Debug, Clone)]
struct Search {
    mode: Mode,
    labels: Vec<String>,
}

/// A head-percolation table keyed by phrase category.
#[derive(Debug, Clone)]
pub struct HeadRules {
    rules: HashMap<String, Vec<Search>>,
}

impl Default for HeadRules {
    fn default() -> Self {
        HeadRules::parse(DEFAULT_RULES).expect("bundled head rules are valid")
    }
}

/// Strips function tags and indices: `NP-SBJ-1` → `NP`.
pub fn base_category(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    label.split(['-', '=']).next().unwrap_or(label)
}

impl HeadRules {
    /// Parses a table in the bundled text format.
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut rules: HashMap<String, Vec<Search>> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let cat = parts.next().unwrap_or_default();
            let mode = match parts.next() {
                Some("left") => Mode::Left,
                Some("right") => Mode::Right,
                Some("leftdis") => Mode::LeftDis,
                Some("rightdis") => Mode::RightDis,
                Some("last") => Mode::Last,
                other => {
                    return Err(FeatureError::BadTable(format!(
                        "head rules line {}: unknown mode {:?}",
                        n + 1,
                        other
                    )))
                }
            };
            rules.entry(cat.to_string()).or_default().push(Search {
                mode,
                labels: parts.map(str::to_string).collect(),
            });
        }
        Ok(HeadRules { rules })
    }

    /// The child of `node` that carries its head.
    pub fn head_child(&self, tree: &ConstituencyTree, node: NodeId) -> NodeId {
        let kids = tree.children(node);
        if kids.len() == 1 {
            return kids[0];
        }
        let cat = base_category(tree.label(node));
        let Some(searches) = self.rules.get(cat) else {
            return kids[0];
        };
        let label_of = |c: NodeId| base_category(tree.label(c));
        for s in searches {
            let found = match s.mode {
                Mode::Left => s
                    .labels
                    .iter()
                    .find_map(|l| kids.iter().copied().find(|&c| label_of(c) == l)),
                Mode::Right => s
                    .labels
                    .iter()
                    .find_map(|l| kids.iter().rev().copied().find(|&c| label_of(c) == l)),
                Mode::LeftDis => kids
                    .iter()
                    .copied()
                    .find(|&c| s.labels.iter().any(|l| label_of(c) == l)),
                Mode::RightDis => kids
                    .iter()
                    .rev()
                    .copied()
                    .find(|&c| s.labels.iter().any(|l| label_of(c) == l)),
                Mode::Last => {
                    let last = *kids.last().expect("non-empty");
                    s.labels.iter().any(|l| label_of(last) == l).then_some(last)
                }
            };
            if let Some(c) = found {
                return c;
            }
        }
        match searches[0].mode {
            Mode::Left | Mode::LeftDis => kids[0],
            _ => *kids.last().expect("non-empty"),
        }
    }

    /// Token index of the lexical head of `node`.
    pub fn head_token(&self, tree: &ConstituencyTree, node: NodeId) -> usize {
        let mut cur = node;
        while !tree.node(cur).is_leaf {
            cur = self.head_child(tree, cur);
        }
        tree.node(cur).span.0
    }
}

/// A head word with its POS tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadWord {
    pub token: usize,
    pub word: String,
    pub pos: String,
}

impl HeadWord {
    fn at(tree: &ConstituencyTree, token: usize) -> Self {
        HeadWord {
            token,
            word: tree.label(tree.leaf(token)).to_string(),
            pos: tree.pos(token).to_string(),
        }
    }

    /// `POS:word` rendering used in attribute values.
    pub fn render(&self) -> String {
        format!("{}:{}", self.pos, self.word.to_lowercase())
    }
}

/// Head of a node, plus the content word for prepositional phrases: the head
/// of the PP's noun-phrase object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseHead {
    pub head: HeadWord,
    pub content: Option<HeadWord>,
}

pub fn head_word(rules: &HeadRules, tree: &ConstituencyTree, node: NodeId) -> PhraseHead {
    let head = HeadWord::at(tree, rules.head_token(tree, node));
    let content = (base_category(tree.label(node)) == "PP")
        .then(|| {
            tree.children(node)
                .iter()
                .find(|&&c| base_category(tree.label(c)) == "NP")
                .map(|&np| HeadWord::at(tree, rules.head_token(tree, np)))
        })
        .flatten();
    PhraseHead { head, content }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECIDED_TREE: &str = "(S (NP (PRP We)) (VP (VBD decided) (S (VP (TO to) (VP (VB make) (NP (DT some) (JJ bold) (NNS decisions)))))))";

    fn node_with_span(t: &ConstituencyTree, label: &str, span: (usize, usize)) -> NodeId {
        t.internal_nodes()
            .into_iter()
            .find(|&n| t.label(n) == label && t.node(n).span == span)
            .unwrap()
    }

    #[test]
    fn np_head_is_final_noun() {
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        let rules = HeadRules::default();
        let np = node_with_span(&t, "NP", (4, 7));
        assert_eq!(head_word(&rules, &t, np).head.word, "decisions");
    }

    #[test]
    fn leaf_heads_itself() {
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        let rules = HeadRules::default();
        let h = head_word(&rules, &t, t.leaf(2));
        assert_eq!(h.head.token, 2);
        let h = head_word(&rules, &t, t.preterminal(5));
        assert_eq!(h.head.render(), "JJ:bold");
    }

    #[test]
    fn pp_content_word() {
        let t = ConstituencyTree::parse("(PP (IN of) (NP (DT the) (NN company)))").unwrap();
        let rules = HeadRules::default();
        let h = head_word(&rules, &t, t.root());
        assert_eq!(h.head.word, "of");
        assert_eq!(h.content.unwrap().word, "company");
    }

    #[test]
    fn verb_heads_clause_and_infinitive() {
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        let rules = HeadRules::default();
        assert_eq!(rules.head_token(&t, t.root()), 1);
        let inf = node_with_span(&t, "VP", (2, 7));
        assert_eq!(rules.head_token(&t, inf), 3);
    }

    #[test]
    fn function_tags_are_ignored() {
        let t = ConstituencyTree::parse("(S (NP-SBJ (NNP Acme)) (VP (VBD rose)))").unwrap();
        assert_eq!(HeadRules::default().head_token(&t, t.root()), 1);
        assert_eq!(base_category("NP-SBJ-1"), "NP");
        assert_eq!(base_category("-NONE-"), "-NONE-");
    }

    #[test]
    fn custom_table_overrides() {
        let rules = HeadRules::parse("S right NP").unwrap();
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        assert_eq!(rules.head_token(&t, t.root()), 0);
        assert!(HeadRules::parse("S sideways NP").is_err());
    }
}
