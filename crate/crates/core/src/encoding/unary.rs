//! Unary-chain collapsing and the inverse expansion helpers.
//!
//! Non-leaf unary chains are merged into their first multi-child descendant
//! (`ROOT` over `S` becomes one node labelled `ROOT+S`, outermost first).
//! Unary chains sitting directly above a terminal are removed entirely and
//! recorded per token as a `+`-joined leaf unary chain, again outermost
//! first (innermost last).

use crate::tree::{Child, ConstituentTree, HeadedTree, NodeId, TreeBuilder};

/// Joins chain labels outermost-first.
pub(crate) fn join_chain(labels: &[&str]) -> String {
    labels.join("+")
}

/// Splits a collapsed label back into its chain, outermost first.
pub(crate) fn split_chain(label: &str) -> Vec<&str> {
    label.split('+').collect()
}

/// Collapses all unary chains of `headed`.
///
/// Returns the collapsed tree and the per-token leaf unary chains. The tree
/// is `None` in exactly one degenerate case: a single-token sentence whose
/// nodes form one unary chain down to the terminal, which moves entirely
/// into the leaf unary chain and leaves no internal node behind.
pub fn collapse_unary_chains(
    headed: &HeadedTree,
) -> (Option<HeadedTree>, Vec<Option<String>>) {
    let old = headed.tree();
    let mut leaf_unaries: Vec<Option<String>> = vec![None; old.len()];
    let mut builder = TreeBuilder::new(old.terminals().to_vec());
    let mut head_out: Vec<usize> = Vec::new();

    // Walks the unary chain starting at `id`; returns the collected labels
    // and the chain end (a terminal or a multi-child node).
    enum ChainEnd {
        Terminal(usize),
        Branch(NodeId),
    }
    fn resolve(old: &ConstituentTree, id: NodeId) -> (Vec<&str>, ChainEnd) {
        let mut labels = Vec::new();
        let mut cur = id;
        loop {
            let children = old.children(cur);
            if children.len() != 1 {
                return (labels, ChainEnd::Branch(cur));
            }
            labels.push(old.label(cur));
            match children[0] {
                Child::Terminal(t) => return (labels, ChainEnd::Terminal(t)),
                Child::Node(m) => cur = m,
            }
        }
    }

    fn rebuild(
        headed: &HeadedTree,
        id: NodeId,
        builder: &mut TreeBuilder,
        head_out: &mut Vec<usize>,
        leaf_unaries: &mut Vec<Option<String>>,
    ) -> Child {
        let old = headed.tree();
        let (labels, end) = resolve(old, id);
        match end {
            ChainEnd::Terminal(t) => {
                leaf_unaries[t - 1] = Some(join_chain(&labels));
                Child::Terminal(t)
            }
            ChainEnd::Branch(branch) => {
                let label = if labels.is_empty() {
                    old.label(branch).to_string()
                } else {
                    format!("{}+{}", join_chain(&labels), old.label(branch))
                };
                let children: Vec<Child> = old
                    .children(branch)
                    .iter()
                    .map(|child| match *child {
                        Child::Terminal(t) => Child::Terminal(t),
                        Child::Node(m) => rebuild(headed, m, builder, head_out, leaf_unaries),
                    })
                    .collect();
                // Children map one-to-one onto the branch node's children,
                // so the head position carries over unchanged.
                let head_pos = headed.head_child_index(branch);
                let node = builder.node(label, children);
                debug_assert_eq!(node.0, head_out.len());
                head_out.push(head_pos);
                Child::Node(node)
            }
        }
    }

    match rebuild(headed, old.root(), &mut builder, &mut head_out, &mut leaf_unaries) {
        Child::Node(root) => {
            let tree = builder.build(root).expect("collapse preserves validity");
            (Some(HeadedTree::new(tree, head_out)), leaf_unaries)
        }
        Child::Terminal(_) => (None, leaf_unaries),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::heads::{assign_heads, HeadRuleSet};
    use crate::treebank::{parse_constituent, ConstFormat};

    fn headed(text: &str, rules: &str) -> HeadedTree {
        let tree = &parse_constituent(text, ConstFormat::Bracketed).unwrap()[0];
        assign_heads(tree, &rules.parse::<HeadRuleSet>().unwrap())
    }

    const FIG1A: &str = "(ROOT (S (NP (PRP She)) (VP (VBZ is) (ADVP (RB still)) \
                         (ADJP (JJ cautious))) (. .)))";

    #[test]
    fn figure_1a_collapse() {
        let h = headed(FIG1A, "S left VP\nVP left VBZ\n");
        let (collapsed, lu) = collapse_unary_chains(&h);
        let collapsed = collapsed.unwrap();
        let tree = collapsed.tree();
        assert_eq!(tree.label(tree.root()), "ROOT+S");
        assert_eq!(
            lu,
            vec![
                Some("NP".into()),
                None,
                Some("ADVP".into()),
                Some("ADJP".into()),
                None
            ]
        );
        // No unary nodes remain.
        assert!(tree.node_ids().all(|id| tree.children(id).len() > 1));
        // Head words survive collapsing.
        assert_eq!(collapsed.head_word(tree.root()), 2);
    }

    #[test]
    fn no_unaries_is_identity() {
        let h = headed("(S (a b) (VP (c d) (e f)))", "default left\n");
        let (collapsed, lu) = collapse_unary_chains(&h);
        assert_eq!(collapsed.unwrap(), h);
        assert!(lu.iter().all(Option::is_none));
    }

    #[test]
    fn leaf_chain_outermost_first() {
        // X over Y over terminal w (with a sibling so the tree survives).
        let h = headed("(S (X (Y (T w))) (T2 v))", "default left\n");
        let (collapsed, lu) = collapse_unary_chains(&h);
        assert_eq!(lu[0].as_deref(), Some("X+Y"));
        assert_eq!(lu[1], None);
        let collapsed = collapsed.unwrap();
        assert_eq!(collapsed.tree().node_count(), 1);
    }

    #[test]
    fn single_token_chain_collapses_to_nothing() {
        let tree = &parse_constituent("(ROOT (NP (X w)))", ConstFormat::Bracketed).unwrap()[0];
        let h = assign_heads(tree, &HeadRuleSet::default());
        let (collapsed, lu) = collapse_unary_chains(&h);
        assert!(collapsed.is_none());
        assert_eq!(lu[0].as_deref(), Some("ROOT+NP"));
    }

    #[test]
    fn mixed_chain_merges_into_branch() {
        // A over B over a 2-child C: one node labelled A+B+C.
        let h = headed("(A (B (C (t1 w1) (t2 w2))))", "default right\n");
        let (collapsed, _) = collapse_unary_chains(&h);
        let collapsed = collapsed.unwrap();
        let tree = collapsed.tree();
        assert_eq!(tree.label(tree.root()), "A+B+C");
        assert_eq!(collapsed.head_word(tree.root()), 2);
    }
}
