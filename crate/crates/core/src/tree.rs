//! Core tree types shared by all modules.
//!
//! A [`ConstituentTree`] stores terminals plus an arena of internal nodes
//! whose yields are index *sets*, so discontinuous constituents are
//! representable. A [`DependencyTree`] stores one head and one label per
//! token, with the artificial ROOT at position 0. An [`AugmentedDepTree`] is
//! a dependency tree whose labels carry `SYMBOL#k` constituent encodings.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("token {index} has an empty form")]
    EmptyForm { index: usize },
    #[error("terminal {index} is attached {count} times (must be exactly once)")]
    TerminalParents { index: usize, count: usize },
    #[error("node {label:?} is attached {count} times (must be exactly once)")]
    NodeParents { label: String, count: usize },
    #[error("node {label:?} has no children")]
    EmptyNode { label: String },
    #[error("root yield covers {got} of {want} terminals")]
    RootYield { got: usize, want: usize },
    #[error("child reference out of range")]
    DanglingChild,
    #[error("head {head} of token {token} is out of range 0..={n}")]
    HeadOutOfRange { token: usize, head: usize, n: usize },
    #[error("token {token} is its own head")]
    SelfHead { token: usize },
    #[error("token {token} does not reach ROOT (cycle in heads)")]
    HeadCycle { token: usize },
    #[error("expected {expected} labels/heads for {n} tokens, got {got}")]
    LengthMismatch { expected: usize, n: usize, got: usize },
}

/// A terminal of the sentence. `index` is the 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub pos: Option<String>,
}

impl Token {
    pub fn new(index: usize, form: impl Into<String>) -> Self {
        Token {
            index,
            form: form.into(),
            pos: None,
        }
    }

    pub fn with_pos(index: usize, form: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            index,
            form: form.into(),
            pos: Some(pos.into()),
        }
    }
}

/// Index of an internal node in a [`ConstituentTree`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

/// A child of an internal node: either a terminal (1-based index) or
/// another internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Terminal(usize),
    Node(NodeId),
}

#[derive(Debug, Clone)]
struct NodeData {
    label: String,
    children: Vec<Child>,
}

/// An ordered labelled tree over terminals whose node yields are index sets.
///
/// Invariants enforced at construction: every terminal and every non-root
/// node has exactly one parent, every node has at least one child, and the
/// root yield is `{1..n}`. Unary nodes are allowed at this layer.
#[derive(Debug, Clone)]
pub struct ConstituentTree {
    terminals: Vec<Token>,
    nodes: Vec<NodeData>,
    yields: Vec<Vec<usize>>,
    root: NodeId,
}

impl ConstituentTree {
    pub fn len(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminals.is_empty()
    }

    pub fn terminals(&self) -> &[Token] {
        &self.terminals
    }

    pub fn token(&self, index: usize) -> &Token {
        &self.terminals[index - 1]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    pub fn children(&self, id: NodeId) -> &[Child] {
        &self.nodes[id.0].children
    }

    /// Sorted terminal indices covered by the node.
    pub fn yield_of(&self, id: NodeId) -> &[usize] {
        &self.yields[id.0]
    }

    /// Lowest terminal index in the node's yield.
    pub fn min_index(&self, child: Child) -> usize {
        match child {
            Child::Terminal(t) => t,
            Child::Node(n) => self.yields[n.0][0],
        }
    }

    /// Children sorted by the lowest terminal index of their yields.
    pub fn children_by_position(&self, id: NodeId) -> Vec<Child> {
        let mut cs = self.nodes[id.0].children.clone();
        cs.sort_by_key(|c| self.min_index(*c));
        cs
    }

    fn eq_rec(&self, a: NodeId, other: &ConstituentTree, b: NodeId) -> bool {
        if self.label(a) != other.label(b) {
            return false;
        }
        let ca = self.children_by_position(a);
        let cb = other.children_by_position(b);
        if ca.len() != cb.len() {
            return false;
        }
        ca.iter().zip(cb.iter()).all(|(x, y)| match (x, y) {
            (Child::Terminal(i), Child::Terminal(j)) => i == j,
            (Child::Node(n), Child::Node(m)) => self.eq_rec(*n, other, *m),
            _ => false,
        })
    }
}

/// Structural equality: same terminals and same labelled structure, with
/// sibling order normalised by yield position.
impl PartialEq for ConstituentTree {
    fn eq(&self, other: &Self) -> bool {
        self.terminals == other.terminals && self.eq_rec(self.root, other, other.root)
    }
}

impl Eq for ConstituentTree {}

/// Incremental builder for a [`ConstituentTree`]; `build` validates all
/// invariants and computes node yields.
pub struct TreeBuilder {
    terminals: Vec<Token>,
    nodes: Vec<NodeData>,
}

impl TreeBuilder {
    pub fn new(terminals: Vec<Token>) -> Self {
        TreeBuilder {
            terminals,
            nodes: Vec::new(),
        }
    }

    pub fn node(&mut self, label: impl Into<String>, children: Vec<Child>) -> NodeId {
        self.nodes.push(NodeData {
            label: label.into(),
            children,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn build(self, root: NodeId) -> Result<ConstituentTree, TreeError> {
        let n = self.terminals.len();
        for (i, tok) in self.terminals.iter().enumerate() {
            if tok.form.is_empty() {
                return Err(TreeError::EmptyForm { index: i + 1 });
            }
        }
        let mut term_parents = vec![0usize; n];
        let mut node_parents = vec![0usize; self.nodes.len()];
        for data in &self.nodes {
            if data.children.is_empty() {
                return Err(TreeError::EmptyNode {
                    label: data.label.clone(),
                });
            }
            for child in &data.children {
                match *child {
                    Child::Terminal(t) => {
                        if t == 0 || t > n {
                            return Err(TreeError::DanglingChild);
                        }
                        term_parents[t - 1] += 1;
                    }
                    Child::Node(m) => {
                        if m.0 >= self.nodes.len() {
                            return Err(TreeError::DanglingChild);
                        }
                        node_parents[m.0] += 1;
                    }
                }
            }
        }
        if root.0 >= self.nodes.len() {
            return Err(TreeError::DanglingChild);
        }
        for (i, &count) in term_parents.iter().enumerate() {
            if count != 1 {
                return Err(TreeError::TerminalParents {
                    index: i + 1,
                    count,
                });
            }
        }
        for (i, &count) in node_parents.iter().enumerate() {
            let expected = if i == root.0 { 0 } else { 1 };
            if count != expected {
                return Err(TreeError::NodeParents {
                    label: self.nodes[i].label.clone(),
                    count,
                });
            }
        }
        // Bottom-up yield computation. Parent counts above guarantee a
        // forest, so a post-order pass terminates.
        let mut yields: Vec<Option<Vec<usize>>> = vec![None; self.nodes.len()];
        fn fill(nodes: &[NodeData], yields: &mut Vec<Option<Vec<usize>>>, id: usize) {
            if yields[id].is_some() {
                return;
            }
            let mut y = Vec::new();
            for child in nodes[id].children.clone() {
                match child {
                    Child::Terminal(t) => y.push(t),
                    Child::Node(m) => {
                        fill(nodes, yields, m.0);
                        y.extend_from_slice(yields[m.0].as_ref().unwrap());
                    }
                }
            }
            y.sort_unstable();
            yields[id] = Some(y);
        }
        for id in 0..self.nodes.len() {
            fill(&self.nodes, &mut yields, id);
        }
        let yields: Vec<Vec<usize>> = yields.into_iter().map(|y| y.unwrap()).collect();
        let got = yields[root.0].len();
        if got != n {
            return Err(TreeError::RootYield { got, want: n });
        }
        Ok(ConstituentTree {
            terminals: self.terminals,
            nodes: self.nodes,
            yields,
            root,
        })
    }
}

/// A constituent tree in which every internal node designates one head child.
#[derive(Debug, Clone)]
pub struct HeadedTree {
    tree: ConstituentTree,
    /// Per node: position of the head child within `children`.
    head_child: Vec<usize>,
}

impl HeadedTree {
    /// Panics when `head_child` does not name one child per node.
    pub fn new(tree: ConstituentTree, head_child: Vec<usize>) -> Self {
        assert_eq!(tree.node_count(), head_child.len());
        for (i, &pos) in head_child.iter().enumerate() {
            assert!(pos < tree.children(NodeId(i)).len());
        }
        HeadedTree { tree, head_child }
    }

    pub fn tree(&self) -> &ConstituentTree {
        &self.tree
    }

    pub fn into_tree(self) -> ConstituentTree {
        self.tree
    }

    pub fn head_child(&self, id: NodeId) -> Child {
        self.tree.children(id)[self.head_child[id.0]]
    }

    /// Position of the head child within `children(id)`.
    pub fn head_child_index(&self, id: NodeId) -> usize {
        self.head_child[id.0]
    }

    /// The terminal reached by following head children from `id`.
    pub fn head_word(&self, id: NodeId) -> usize {
        let mut cur = self.head_child(id);
        loop {
            match cur {
                Child::Terminal(t) => return t,
                Child::Node(m) => cur = self.head_child(m),
            }
        }
    }

    fn eq_rec(&self, a: NodeId, other: &HeadedTree, b: NodeId) -> bool {
        if self.tree.label(a) != other.tree.label(b)
            || self.head_word(a) != other.head_word(b)
        {
            return false;
        }
        let ca = self.tree.children_by_position(a);
        let cb = other.tree.children_by_position(b);
        if ca.len() != cb.len() {
            return false;
        }
        ca.iter().zip(cb.iter()).all(|(x, y)| match (x, y) {
            (Child::Terminal(i), Child::Terminal(j)) => i == j,
            (Child::Node(n), Child::Node(m)) => self.eq_rec(*n, other, *m),
            _ => false,
        })
    }
}

/// Structural equality plus head-word agreement on every matched node.
impl PartialEq for HeadedTree {
    fn eq(&self, other: &Self) -> bool {
        self.tree.terminals == other.tree.terminals
            && self.eq_rec(self.tree.root, other, other.tree.root)
    }
}

impl Eq for HeadedTree {}

/// A dependency tree: one head in `0..=n` and one label per token, where
/// head 0 is the artificial ROOT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTree {
    tokens: Vec<Token>,
    heads: Vec<usize>,
    labels: Vec<String>,
}

impl DependencyTree {
    pub fn new(
        tokens: Vec<Token>,
        heads: Vec<usize>,
        labels: Vec<String>,
    ) -> Result<Self, TreeError> {
        let n = tokens.len();
        if heads.len() != n || labels.len() != n {
            return Err(TreeError::LengthMismatch {
                expected: n,
                n,
                got: heads.len().min(labels.len()),
            });
        }
        for (i, tok) in tokens.iter().enumerate() {
            if tok.form.is_empty() {
                return Err(TreeError::EmptyForm { index: i + 1 });
            }
        }
        for (i, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(TreeError::HeadOutOfRange {
                    token: i + 1,
                    head: h,
                    n,
                });
            }
            if h == i + 1 {
                return Err(TreeError::SelfHead { token: i + 1 });
            }
        }
        // Every token must reach ROOT.
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = heads[cur - 1];
                steps += 1;
                if steps > n {
                    return Err(TreeError::HeadCycle { token: start });
                }
            }
        }
        Ok(DependencyTree {
            tokens,
            heads,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// The 1-based token `i`.
    pub fn token(&self, i: usize) -> &Token {
        &self.tokens[i - 1]
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Head of the 1-based token `i`.
    pub fn head(&self, i: usize) -> usize {
        self.heads[i - 1]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i - 1]
    }
}

/// Label used on the arc from the artificial ROOT.
pub const ROOT_LABEL: &str = "root";

/// Splits an augmented label `SYMBOL#k` into its symbol and 1-based index.
/// Returns `None` when the label does not have that shape.
pub fn split_augmented_label(label: &str) -> Option<(&str, usize)> {
    let (sym, k) = label.rsplit_once('#')?;
    if sym.is_empty() {
        return None;
    }
    match k.parse::<usize>() {
        Ok(k) if k >= 1 => Some((sym, k)),
        _ => None,
    }
}

/// Joins a symbol and index into an augmented label.
pub fn join_augmented_label(symbol: &str, k: usize) -> String {
    format!("{symbol}#{k}")
}

/// A dependency tree whose labels encode constituents (`SYMBOL#k`), plus the
/// per-token leaf unary chains removed during collapsing (`A+B`, outermost
/// first, innermost last).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedDepTree {
    pub base: DependencyTree,
    pub leaf_unaries: Vec<Option<String>>,
}

impl AugmentedDepTree {
    pub fn new(base: DependencyTree, leaf_unaries: Vec<Option<String>>) -> Result<Self, TreeError> {
        if leaf_unaries.len() != base.len() {
            return Err(TreeError::LengthMismatch {
                expected: base.len(),
                n: base.len(),
                got: leaf_unaries.len(),
            });
        }
        Ok(AugmentedDepTree { base, leaf_unaries })
    }

    pub fn without_unaries(base: DependencyTree) -> Self {
        let n = base.len();
        AugmentedDepTree {
            base,
            leaf_unaries: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Checks the gold-tree invariants: per head word the indices on
    /// outgoing arcs form `{1..K}` without gaps and symbols agree within a
    /// level. Predicted trees may violate these; `encoding::decode` repairs
    /// them instead.
    pub fn is_well_formed(&self) -> bool {
        let n = self.len();
        let mut by_head: HashMap<usize, HashMap<usize, String>> = HashMap::new();
        let mut roots = 0;
        for i in 1..=n {
            let h = self.base.head(i);
            let label = self.base.label(i);
            if h == 0 {
                roots += 1;
                if label != ROOT_LABEL {
                    return false;
                }
                continue;
            }
            let Some((sym, k)) = split_augmented_label(label) else {
                return false;
            };
            match by_head.entry(h).or_default().entry(k) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    if e.get() != sym {
                        return false;
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(sym.to_string());
                }
            }
        }
        if roots != 1 {
            return false;
        }
        by_head
            .values()
            .all(|levels| (1..=levels.len()).all(|k| levels.contains_key(&k)))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.form)
    }
}
