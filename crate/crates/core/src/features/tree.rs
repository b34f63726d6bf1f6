//! Penn-style constituency trees stored in an arena.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("malformed tree: {0}")]
    Malformed(String),
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Syntactic category, or the word for a leaf.
    pub label: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    /// Token interval `[start, end)` covered by the node.
    pub span: (usize, usize),
    pub is_leaf: bool,
}

/// A constituency tree whose leaves are aligned with token indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstituencyTree {
    nodes: Vec<Node>,
    root: NodeId,
    leaves: Vec<NodeId>,
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(s: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push(Tok::Open);
                i += 1;
            }
            b')' => {
                out.push(Tok::Close);
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                {
                    i += 1;
                }
                out.push(Tok::Atom(&s[start..i]));
            }
        }
    }
    out
}

impl ConstituencyTree {
    /// Parses a bracketed tree such as `(S (NP (PRP We)) (VP (VBD slept)))`.
    /// An unlabeled or `ROOT`/`TOP` wrapper with a single child is dropped.
    pub fn parse(s: &str) -> Result<Self, TreeError> {
        let toks = lex(s);
        let mut nodes: Vec<Node> = Vec::new();
        let mut pos = 0;
        let root = parse_node(&toks, &mut pos, &mut nodes, None)?;
        if pos != toks.len() {
            return Err(TreeError::Malformed("trailing input after tree".into()));
        }
        let mut tree = ConstituencyTree {
            nodes,
            root,
            leaves: Vec::new(),
        };
        tree.unwrap_root();
        tree.reindex();
        Ok(tree)
    }

    fn unwrap_root(&mut self) {
        loop {
            let r = &self.nodes[self.root];
            let wrapper = r.label.is_empty() || r.label == "ROOT" || r.label == "TOP";
            if wrapper && r.children.len() == 1 && !self.nodes[r.children[0]].is_leaf {
                let child = r.children[0];
                self.nodes[child].parent = None;
                self.root = child;
            } else {
                break;
            }
        }
    }

    /// Recomputes leaf order and spans from the structure.
    fn reindex(&mut self) {
        self.leaves.clear();
        let root = self.root;
        self.assign(root);
    }

    fn assign(&mut self, id: NodeId) {
        if self.nodes[id].is_leaf {
            let i = self.leaves.len();
            self.leaves.push(id);
            self.nodes[id].span = (i, i + 1);
            return;
        }
        let start = self.leaves.len();
        let children = self.nodes[id].children.clone();
        for c in children {
            self.assign(c);
        }
        self.nodes[id].span = (start, self.leaves.len());
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id].label
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf node of token `i`.
    pub fn leaf(&self, i: usize) -> NodeId {
        self.leaves[i]
    }

    pub fn words(&self) -> Vec<&str> {
        self.leaves.iter().map(|&l| self.label(l)).collect()
    }

    /// The node directly above the leaf of token `i` (its POS node).
    pub fn preterminal(&self, i: usize) -> NodeId {
        self.parent(self.leaves[i]).expect("leaf below root")
    }

    pub fn pos(&self, i: usize) -> &str {
        self.label(self.preterminal(i))
    }

    pub fn is_preterminal(&self, id: NodeId) -> bool {
        let n = &self.nodes[id];
        n.children.len() == 1 && self.nodes[n.children[0]].is_leaf
    }

    /// Ancestors of `id` from its parent up to the root.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parent(id), move |&n| self.parent(n))
    }

    pub fn lowest_common_ancestor(&self, a: NodeId, b: NodeId) -> NodeId {
        let mut chain_a: Vec<NodeId> = vec![a];
        chain_a.extend(self.ancestors(a));
        let mut cur = Some(b);
        while let Some(n) = cur {
            if chain_a.contains(&n) {
                return n;
            }
            cur = self.parent(n);
        }
        self.root
    }

    /// Internal nodes in pre-order.
    pub fn internal_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if self.nodes[n].is_leaf {
                continue;
            }
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Removes the leaves of tokens `start+1..end` and renames the leaf of
    /// `start` to `word` (with POS node relabelled to `pos`). Internal nodes
    /// left without children are pruned.
    pub fn collapse_leaves(&mut self, start: usize, end: usize, word: &str, pos: &str) {
        let keep = self.leaves[start];
        self.nodes[keep].label = word.to_string();
        let pre = self.parent(keep).expect("leaf below root");
        self.nodes[pre].label = pos.to_string();
        let doomed: Vec<NodeId> = self.leaves[start + 1..end].to_vec();
        for leaf in doomed {
            let mut child = leaf;
            while let Some(p) = self.nodes[child].parent {
                self.nodes[p].children.retain(|&c| c != child);
                self.nodes[child].parent = None;
                if !self.nodes[p].children.is_empty() || p == self.root {
                    break;
                }
                child = p;
            }
        }
        self.reindex();
    }

    /// Serializes back to the bracketed format.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root, &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        let n = &self.nodes[id];
        if n.is_leaf {
            out.push_str(&n.label);
            return;
        }
        let _ = write!(out, "({}", n.label);
        for &c in &n.children {
            out.push(' ');
            self.write_node(c, out);
        }
        out.push(')');
    }
}

fn parse_node(
    toks: &[Tok<'_>],
    pos: &mut usize,
    nodes: &mut Vec<Node>,
    parent: Option<NodeId>,
) -> Result<NodeId, TreeError> {
    if toks.get(*pos) != Some(&Tok::Open) {
        return Err(TreeError::Malformed(format!("expected '(' at token {}", *pos)));
    }
    *pos += 1;
    let label = match toks.get(*pos) {
        Some(Tok::Atom(a)) => {
            *pos += 1;
            a.to_string()
        }
        Some(_) => String::new(),
        None => return Err(TreeError::Malformed("unexpected end of input".into())),
    };
    let id = nodes.len();
    nodes.push(Node {
        label,
        children: Vec::new(),
        parent,
        span: (0, 0),
        is_leaf: false,
    });
    loop {
        match toks.get(*pos) {
            Some(Tok::Close) => {
                *pos += 1;
                break;
            }
            Some(Tok::Open) => {
                let child = parse_node(toks, pos, nodes, Some(id))?;
                nodes[id].children.push(child);
            }
            Some(Tok::Atom(w)) => {
                let leaf = nodes.len();
                nodes.push(Node {
                    label: w.to_string(),
                    children: Vec::new(),
                    parent: Some(id),
                    span: (0, 0),
                    is_leaf: true,
                });
                nodes[id].children.push(leaf);
                *pos += 1;
            }
            None => return Err(TreeError::Malformed("unbalanced parentheses".into())),
        }
    }
    if nodes[id].children.is_empty() {
        return Err(TreeError::Malformed(format!(
            "node '{}' has no children",
            nodes[id].label
        )));
    }
    let leaf_kids = nodes[id].children.iter().filter(|&&c| nodes[c].is_leaf).count();
    if leaf_kids > 0 && nodes[id].children.len() > 1 {
        return Err(TreeError::Malformed(format!(
            "node '{}' mixes words and phrases",
            nodes[id].label
        )));
    }
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DECIDED_TREE: &str = "(ROOT (S (NP (PRP We)) (VP (VBD decided) (S (VP (TO to) (VP (VB make) (NP (DT some) (JJ bold) (NNS decisions))))))))";

    #[test]
    fn parses_and_aligns() {
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        assert_eq!(t.label(t.root()), "S");
        assert_eq!(t.leaf_count(), 7);
        assert_eq!(t.words()[6], "decisions");
        assert_eq!(t.pos(1), "VBD");
        let np = t.parent(t.preterminal(6)).unwrap();
        assert_eq!(t.node(np).span, (4, 7));
    }

    #[test]
    fn round_trips_bracketing() {
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        let again = ConstituencyTree::parse(&t.to_bracketed()).unwrap();
        assert_eq!(t.to_bracketed(), again.to_bracketed());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConstituencyTree::parse("(S (NP (PRP We))").is_err());
        assert!(ConstituencyTree::parse("(S (NP) )").is_err());
        assert!(ConstituencyTree::parse("(S (NP (PRP We))) extra").is_err());
        assert!(ConstituencyTree::parse("(NP word (DT x))").is_err());
    }

    #[test]
    fn collapse_prunes_empty_nodes() {
        let mut t = ConstituencyTree::parse("(S (NP (NNP John) (NNP Smith)) (VP (VBD resigned)))").unwrap();
        t.collapse_leaves(0, 2, "PERSON", "NNP");
        assert_eq!(t.to_bracketed(), "(S (NP (NNP PERSON)) (VP (VBD resigned)))");
        assert_eq!(t.leaf_count(), 2);
    }

    #[test]
    fn lca_of_we_and_decided_is_s() {
        let t = ConstituencyTree::parse(DECIDED_TREE).unwrap();
        let lca = t.lowest_common_ancestor(t.preterminal(0), t.preterminal(1));
        assert_eq!(t.label(lca), "S");
        assert_eq!(lca, t.root());
    }
}
