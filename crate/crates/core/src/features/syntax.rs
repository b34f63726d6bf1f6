//! Tree-derived syntactic features: sub-categorization, phrase-type levels,
//! syntactic paths and clause patterns.

use super::heads::{base_category, HeadRules};
use super::tree::{ConstituencyTree, NodeId};
use super::FeatureError;
use crate::lingdata::Voice;

pub const UP: char = '↑';
pub const DOWN: char = '↓';

/// The VP that most closely dominates the predicate's POS node.
pub fn governing_vp(tree: &ConstituencyTree, predicate: usize) -> Option<NodeId> {
    tree.ancestors(tree.preterminal(predicate))
        .find(|&n| base_category(tree.label(n)) == "VP")
}

/// Rule string `VP→VBD-S` for the predicate's governing VP.
pub fn subcategorization(tree: &ConstituencyTree, predicate: usize) -> Result<String, FeatureError> {
    let vp = governing_vp(tree, predicate).ok_or(FeatureError::NoGoverningVp(predicate))?;
    let kids: Vec<&str> = tree
        .children(vp)
        .iter()
        .map(|&c| base_category(tree.label(c)))
        .collect();
    Ok(format!("{}→{}", base_category(tree.label(vp)), kids.join("-")))
}

/// Categories of up to `max_levels` nodes above token `leaf`, starting with its
/// POS node, kept only while the token stays the lexical head.
pub fn phrase_type_levels(
    rules: &HeadRules,
    tree: &ConstituencyTree,
    leaf: usize,
    max_levels: usize,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut node = Some(tree.preterminal(leaf));
    while let Some(n) = node {
        if out.len() >= max_levels || rules.head_token(tree, n) != leaf {
            break;
        }
        out.push(base_category(tree.label(n)).to_string());
        node = tree.parent(n);
    }
    out
}

/// Full and partial syntactic paths between two constituents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntacticPath {
    pub full: String,
    pub partial: String,
}

/// Path from node `from` to node `to`: up to their lowest common ancestor,
/// then down. The partial path is the upward part ending at the ancestor.
pub fn node_path(tree: &ConstituencyTree, from: NodeId, to: NodeId) -> SyntacticPath {
    let cat = |n: NodeId| base_category(tree.label(n)).to_string();
    if from == to {
        let c = cat(from);
        return SyntacticPath {
            full: c.clone(),
            partial: c,
        };
    }
    let lca = tree.lowest_common_ancestor(from, to);
    let mut up = vec![cat(from)];
    let mut n = from;
    while n != lca {
        n = tree.parent(n).expect("lca is an ancestor");
        up.push(cat(n));
    }
    let mut down = Vec::new();
    let mut n = to;
    while n != lca {
        down.push(cat(n));
        n = tree.parent(n).expect("lca is an ancestor");
    }
    down.reverse();
    let partial = up.join(&UP.to_string());
    let mut full = partial.clone();
    for d in down {
        full.push(DOWN);
        full.push_str(&d);
    }
    SyntacticPath { full, partial }
}

/// Path from token `leaf` to token `predicate`, both taken at their POS nodes.
pub fn syntactic_path(tree: &ConstituencyTree, leaf: usize, predicate: usize) -> SyntacticPath {
    node_path(tree, tree.preterminal(leaf), tree.preterminal(predicate))
}

/// Per-token clause-pattern flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClauseFlags {
    /// A verb whose VP takes a following S/SBAR complement.
    pub clause_after_verb: bool,
    /// Inside an NP that precedes a sibling VP.
    pub np_before_vp: bool,
}

pub fn clause_patterns(tree: &ConstituencyTree) -> Vec<ClauseFlags> {
    let mut flags = vec![ClauseFlags::default(); tree.leaf_count()];
    for node in tree.internal_nodes() {
        let kids = tree.children(node);
        let cats: Vec<&str> = kids.iter().map(|&c| base_category(tree.label(c))).collect();
        if base_category(tree.label(node)) == "VP" {
            for (i, &c) in kids.iter().enumerate() {
                if tree.is_preterminal(c) && cats[i].starts_with("VB") {
                    let later_clause = cats[i + 1..].iter().any(|&k| k == "S" || k == "SBAR");
                    if later_clause {
                        flags[tree.node(c).span.0].clause_after_verb = true;
                    }
                }
            }
        }
        for (i, &c) in kids.iter().enumerate() {
            if cats[i] == "NP" && cats[i + 1..].contains(&"VP") {
                let (s, e) = tree.node(c).span;
                for f in &mut flags[s..e] {
                    f.np_before_vp = true;
                }
            }
        }
    }
    flags
}

const AUXILIARIES: &[&str] = &[
    "be", "is", "are", "was", "were", "been", "being", "am", "'s", "'re", "'m", "have", "has",
    "had", "having", "do", "does", "did", "will", "would", "shall", "should", "can", "could",
    "may", "might", "must", "get", "gets", "got", "gotten", "getting",
];

const PASSIVE_AUX: &[&str] = &[
    "be", "is", "are", "was", "were", "been", "being", "am", "'s", "'re", "'m", "get", "gets",
    "got", "gotten", "getting",
];

/// The main verb: the lexical head of the root, stepping past auxiliaries into
/// their VP complements.
pub fn main_verb(rules: &HeadRules, tree: &ConstituencyTree) -> usize {
    let mut head = rules.head_token(tree, tree.root());
    loop {
        let word = tree.label(tree.leaf(head)).to_lowercase();
        let pos = tree.pos(head);
        if !(AUXILIARIES.contains(&word.as_str()) || pos == "MD" || pos == "TO") {
            return head;
        }
        let Some(vp) = tree.parent(tree.preterminal(head)) else {
            return head;
        };
        let inner = tree
            .children(vp)
            .iter()
            .copied()
            .find(|&c| base_category(tree.label(c)) == "VP");
        match inner {
            Some(c) => head = rules.head_token(tree, c),
            None => return head,
        }
    }
}

/// Passive iff the predicate is VBN with a be/get form to its left inside the
/// chain of VPs that dominate it.
pub fn detect_voice(tree: &ConstituencyTree, predicate: usize) -> Voice {
    if tree.pos(predicate) != "VBN" {
        return Voice::Active;
    }
    let mut top = None;
    for n in tree.ancestors(tree.preterminal(predicate)) {
        if base_category(tree.label(n)) == "VP" {
            top = Some(n);
        } else {
            break;
        }
    }
    let Some(top) = top else {
        return Voice::Active;
    };
    let start = tree.node(top).span.0;
    let passive = (start..predicate).any(|i| {
        PASSIVE_AUX.contains(&tree.label(tree.leaf(i)).to_lowercase().as_str())
    });
    if passive {
        Voice::Passive
    } else {
        Voice::Active
    }
}
