//! Constituent trees as dependency structures.
//!
//! A headed, unariless constituent tree maps to a dependency tree with one
//! arc per token: for every constituent `(X, C, w_h)`, each non-head child
//! headed by `w_d` becomes the arc `(w_h, w_d, X#k)`, where `k` is the
//! 1-based position of `X` in the bottom-up chain of constituents headed by
//! the same word `w_h` (innermost first). The head word of the root node
//! attaches to position 0 with the label `root`. Discontinuous constituents
//! come out as non-projective arcs and vice versa.
//!
//! [`decode`] is the inverse on well-formed input and is total over valid
//! dependency trees: predicted structures that violate the gold invariants
//! are repaired (see the function docs).

mod heads;
mod unary;

pub use heads::{assign_heads, Direction, HeadRule, HeadRuleError, HeadRuleSet};
pub use unary::collapse_unary_chains;

use std::collections::HashMap;

use thiserror::Error;

use crate::tree::{
    join_augmented_label, split_augmented_label, AugmentedDepTree, Child, ConstituentTree,
    DependencyTree, HeadedTree, NodeId, TreeBuilder, ROOT_LABEL,
};

/// Label given to synthesized repair nodes and extra root attachments.
const REPAIR_SYMBOL: &str = "VROOT";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("tree still contains the unary node {label:?}; collapse unary chains first")]
    UnaryNode { label: String },
}

/// True iff every node's yield is an interval of terminal positions.
pub fn is_continuous(tree: &ConstituentTree) -> bool {
    tree.node_ids().all(|id| {
        let y = tree.yield_of(id);
        y[y.len() - 1] - y[0] + 1 == y.len()
    })
}

/// True iff no two arcs cross when drawn above the sentence with the
/// artificial ROOT at position 0; equivalently, for every arc `(h, d)`
/// every token strictly between `h` and `d` is a descendant of `h`.
pub fn is_projective(tree: &DependencyTree) -> bool {
    let spans: Vec<(usize, usize)> = (1..=tree.len())
        .map(|d| {
            let h = tree.head(d);
            (h.min(d), h.max(d))
        })
        .collect();
    for (i, &(l1, r1)) in spans.iter().enumerate() {
        for &(l2, r2) in &spans[i + 1..] {
            let crossing = (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1);
            if crossing {
                return false;
            }
        }
    }
    true
}

/// Encodes a headed tree without unary nodes into an augmented dependency
/// tree (leaf unary chains are left empty; see [`encode_constituent`] for
/// the full pipeline).
pub fn encode(headed: &HeadedTree) -> Result<AugmentedDepTree, EncodeError> {
    let tree = headed.tree();
    for id in tree.node_ids() {
        if tree.children(id).len() == 1 {
            return Err(EncodeError::UnaryNode {
                label: tree.label(id).to_string(),
            });
        }
    }
    let n = tree.len();
    // Bottom-up chain of nodes per head word, innermost first. Strict
    // nesting makes yield sizes distinct within a chain.
    let mut chains: HashMap<usize, Vec<NodeId>> = HashMap::new();
    for id in tree.node_ids() {
        chains.entry(headed.head_word(id)).or_default().push(id);
    }
    for chain in chains.values_mut() {
        chain.sort_by_key(|id| tree.yield_of(*id).len());
    }
    let mut level: HashMap<NodeId, usize> = HashMap::new();
    for chain in chains.values() {
        for (i, id) in chain.iter().enumerate() {
            level.insert(*id, i + 1);
        }
    }
    let mut heads = vec![usize::MAX; n];
    let mut labels = vec![String::new(); n];
    for id in tree.node_ids() {
        let h = headed.head_word(id);
        let label = join_augmented_label(tree.label(id), level[&id]);
        for child in tree.children(id) {
            let d = match *child {
                Child::Terminal(t) => t,
                Child::Node(m) => headed.head_word(m),
            };
            if d != h {
                heads[d - 1] = h;
                labels[d - 1] = label.clone();
            }
        }
    }
    let root_word = headed.head_word(tree.root());
    heads[root_word - 1] = 0;
    labels[root_word - 1] = ROOT_LABEL.to_string();
    debug_assert!(heads.iter().all(|&h| h != usize::MAX));
    let base = DependencyTree::new(tree.terminals().to_vec(), heads, labels)
        .expect("encoding a valid tree yields a valid dependency tree");
    Ok(AugmentedDepTree::without_unaries(base))
}

/// Full §-pipeline: assign heads, collapse unary chains, encode, and attach
/// the recorded leaf unary chains.
pub fn encode_constituent(
    tree: &ConstituentTree,
    rules: &HeadRuleSet,
) -> Result<AugmentedDepTree, EncodeError> {
    let headed = assign_heads(tree, rules);
    let (collapsed, leaf_unaries) = collapse_unary_chains(&headed);
    match collapsed {
        Some(collapsed) => {
            let mut aug = encode(&collapsed)?;
            aug.leaf_unaries = leaf_unaries;
            Ok(aug)
        }
        None => {
            // Single-token sentence whose whole structure moved into the
            // leaf unary chain: only the root arc remains.
            let base = DependencyTree::new(
                tree.terminals().to_vec(),
                vec![0],
                vec![ROOT_LABEL.to_string()],
            )
            .expect("single-token tree");
            Ok(AugmentedDepTree { base, leaf_unaries })
        }
    }
}

/// Decodes an augmented dependency tree back into a headed constituent
/// tree. Total over valid dependency trees: predicted structures are
/// repaired rather than rejected —
///
/// * extra arcs to position 0 are re-attached to the first root word with
///   label `VROOT#1`;
/// * labels without a valid `SYMBOL#k` shape count as `label#1`;
/// * gaps in a head word's `k` sequence are compressed to consecutive
///   ranks;
/// * conflicting symbols within one level resolve to the symbol of the
///   leftmost dependent;
/// * collapsed `A+B` labels are re-expanded into unary chains and leaf
///   unary chains are re-inserted above their terminals;
/// * a bare single-token sentence with no recorded chain gets a `VROOT`
///   node so the result is a valid tree.
pub fn decode(aug: &AugmentedDepTree) -> HeadedTree {
    let n = aug.len();
    let base = &aug.base;
    let mut heads: Vec<usize> = base.heads().to_vec();
    let mut parsed: Vec<(String, usize)> = (1..=n)
        .map(|i| {
            let label = base.label(i);
            match split_augmented_label(label) {
                Some((sym, k)) => (sym.to_string(), k),
                None => (label.to_string(), 1),
            }
        })
        .collect();

    // Single root: keep the first arc to 0, re-attach the rest.
    let roots: Vec<usize> = (1..=n).filter(|&i| heads[i - 1] == 0).collect();
    let root_word = roots[0];
    for &extra in &roots[1..] {
        heads[extra - 1] = root_word;
        parsed[extra - 1] = (REPAIR_SYMBOL.to_string(), 1);
    }

    // Group dependents by head and compress ranks.
    let mut dependents: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + 1]; // (k, dep)
    for d in 1..=n {
        if d != root_word {
            dependents[heads[d - 1]].push((parsed[d - 1].1, d));
        }
    }
    struct Levels {
        /// Per rank (0-based): label and dependents in sentence order.
        ranks: Vec<(String, Vec<usize>)>,
    }
    let mut levels: Vec<Levels> = Vec::with_capacity(n + 1);
    for h in 0..=n {
        let mut ks: Vec<usize> = dependents[h].iter().map(|&(k, _)| k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut ranks = Vec::with_capacity(ks.len());
        for &k in &ks {
            let mut deps: Vec<usize> = dependents[h]
                .iter()
                .filter(|&&(dk, _)| dk == k)
                .map(|&(_, d)| d)
                .collect();
            deps.sort_unstable();
            let symbol = parsed[deps[0] - 1].0.clone();
            ranks.push((symbol, deps));
        }
        levels.push(Levels { ranks });
    }

    let mut builder = TreeBuilder::new(base.tokens().to_vec());
    let mut head_out: Vec<usize> = Vec::new();

    // Builds the maximal projection of token `d`: its leaf unary chain,
    // then one node per rank with the previous projection as head child.
    fn project(
        d: usize,
        levels: &[Levels],
        leaf_unaries: &[Option<String>],
        builder: &mut TreeBuilder,
        head_out: &mut Vec<usize>,
    ) -> Child {
        let mut core = Child::Terminal(d);
        if let Some(chain) = &leaf_unaries[d - 1] {
            for label in unary::split_chain(chain).iter().rev() {
                core = unary_node(label, core, builder, head_out);
            }
        }
        for (symbol, deps) in &levels[d].ranks {
            let mut children = vec![core];
            for &dep in deps {
                children.push(project(dep, levels, leaf_unaries, builder, head_out));
            }
            core = chain_node(symbol, children, builder, head_out);
        }
        core
    }

    fn unary_node(
        label: &str,
        child: Child,
        builder: &mut TreeBuilder,
        head_out: &mut Vec<usize>,
    ) -> Child {
        let id = builder.node(label, vec![child]);
        debug_assert_eq!(id.0, head_out.len());
        head_out.push(0);
        Child::Node(id)
    }

    /// Builds a node for a possibly collapsed `A+B` label: the innermost
    /// symbol takes the children (head child first), outer symbols wrap it
    /// as unary nodes.
    fn chain_node(
        symbol: &str,
        children: Vec<Child>,
        builder: &mut TreeBuilder,
        head_out: &mut Vec<usize>,
    ) -> Child {
        let chain = unary::split_chain(symbol);
        let (innermost, outer) = chain.split_last().expect("labels are non-empty");
        let id = builder.node(*innermost, children);
        debug_assert_eq!(id.0, head_out.len());
        head_out.push(0);
        let mut core = Child::Node(id);
        for label in outer.iter().rev() {
            core = unary_node(label, core, builder, head_out);
        }
        core
    }

    let top = project(root_word, &levels, &aug.leaf_unaries, &mut builder, &mut head_out);
    let root = match top {
        Child::Node(id) => id,
        Child::Terminal(t) => {
            // n = 1 with no structure at all.
            match unary_node(REPAIR_SYMBOL, Child::Terminal(t), &mut builder, &mut head_out) {
                Child::Node(id) => id,
                Child::Terminal(_) => unreachable!(),
            }
        }
    };
    let tree = builder.build(root).expect("decode builds a valid tree");
    HeadedTree::new(tree, head_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Token;
    use crate::treebank::{parse_constituent, parse_dependency, ConstFormat};

    const FIG1A: &str = "(ROOT (S (NP (PRP She)) (VP (VBZ is) (ADVP (RB still)) \
                         (ADJP (JJ cautious))) (. .)))";
    const FIG1A_RULES: &str = "S left VP\nVP left VBZ\n";
    const FIG1D: &str = "(VROOT (S (NP (PPER 0=Es) (NP (PIAT 2=nichts) (NN 3=Interessantes))) \
                         (VVFIN 1=kam)) ($. 4=.))";
    const FIG1D_RULES: &str = "VROOT left S\nS left-to-right VVFIN\nNP right-to-left NN NP\n";

    fn fig1a_aug() -> AugmentedDepTree {
        let tree = &parse_constituent(FIG1A, ConstFormat::Bracketed).unwrap()[0];
        encode_constituent(tree, &FIG1A_RULES.parse().unwrap()).unwrap()
    }

    fn fig1d_aug() -> AugmentedDepTree {
        let tree = &parse_constituent(FIG1D, ConstFormat::Discbracket).unwrap()[0];
        encode_constituent(tree, &FIG1D_RULES.parse().unwrap()).unwrap()
    }

    #[test]
    fn figure_1b_arcs() {
        let aug = fig1a_aug();
        assert_eq!(aug.base.heads(), &[2, 0, 2, 2, 2]);
        assert_eq!(
            aug.base.labels(),
            &["ROOT+S#2", "root", "VP#1", "VP#1", "ROOT+S#2"]
        );
        assert!(aug.is_well_formed());
    }

    #[test]
    fn figure_1e_arcs() {
        let aug = fig1d_aug();
        assert_eq!(aug.base.heads(), &[4, 0, 4, 2, 2]);
        assert_eq!(
            aug.base.labels(),
            &["NP#2", "root", "NP#1", "S#1", "VROOT#2"]
        );
        assert!(aug.is_well_formed());
    }

    #[test]
    fn single_constituent_k1() {
        // X over (w1, w2) with head w2.
        let tree = &parse_constituent("(X w1 w2)", ConstFormat::Bracketed).unwrap()[0];
        let rules: HeadRuleSet = "default right\n".parse().unwrap();
        let aug = encode_constituent(tree, &rules).unwrap();
        assert_eq!(aug.base.heads(), &[2, 0]);
        assert_eq!(aug.base.labels(), &["X#1", "root"]);
    }

    #[test]
    fn encode_rejects_unary_nodes() {
        let tree = &parse_constituent("(S (X (a w)) (b v))", ConstFormat::Bracketed).unwrap()[0];
        let headed = assign_heads(tree, &HeadRuleSet::default());
        assert_eq!(
            encode(&headed).unwrap_err(),
            EncodeError::UnaryNode { label: "X".into() }
        );
    }

    #[test]
    fn encode_emits_exactly_n_arcs() {
        assert_eq!(fig1a_aug().len(), 5);
        assert_eq!(fig1d_aug().len(), 5);
    }

    #[test]
    fn figure_round_trips() {
        for (text, format, rules) in [
            (FIG1A, ConstFormat::Bracketed, FIG1A_RULES),
            (FIG1D, ConstFormat::Discbracket, FIG1D_RULES),
        ] {
            let tree = &parse_constituent(text, format).unwrap()[0];
            let rules: HeadRuleSet = rules.parse().unwrap();
            let headed = assign_heads(tree, &rules);
            let aug = encode_constituent(tree, &rules).unwrap();
            let back = decode(&aug);
            assert_eq!(back, headed, "round trip of {text}");
        }
    }

    #[test]
    fn decode_single_root_arc_with_chain() {
        let base = DependencyTree::new(
            vec![Token::new(1, "w")],
            vec![0],
            vec![ROOT_LABEL.to_string()],
        )
        .unwrap();
        let aug = AugmentedDepTree::new(base, vec![Some("ROOT+NP".into())]).unwrap();
        let headed = decode(&aug);
        let tree = headed.tree();
        assert_eq!(tree.label(tree.root()), "ROOT");
        let inner = match tree.children(tree.root())[0] {
            Child::Node(id) => id,
            _ => panic!("expected unary chain"),
        };
        assert_eq!(tree.label(inner), "NP");
        assert_eq!(tree.children(inner), &[Child::Terminal(1)]);
    }

    #[test]
    fn decode_bare_single_token_synthesizes_root() {
        let base = DependencyTree::new(
            vec![Token::new(1, "w")],
            vec![0],
            vec![ROOT_LABEL.to_string()],
        )
        .unwrap();
        let headed = decode(&AugmentedDepTree::without_unaries(base));
        assert_eq!(headed.tree().label(headed.tree().root()), "VROOT");
    }

    #[test]
    fn decode_repairs_rank_gap() {
        // Levels 1 and 3 with no 2: compressed to 1 and 2.
        let base = DependencyTree::new(
            vec![Token::new(1, "a"), Token::new(2, "b"), Token::new(3, "c")],
            vec![3, 3, 0],
            vec!["X#1".into(), "Y#3".into(), ROOT_LABEL.into()],
        )
        .unwrap();
        let headed = decode(&AugmentedDepTree::without_unaries(base));
        let tree = headed.tree();
        assert_eq!(tree.node_count(), 2);
        assert_eq!(tree.label(tree.root()), "Y");
    }

    #[test]
    fn decode_repairs_symbol_conflict_leftmost_wins() {
        let base = DependencyTree::new(
            vec![Token::new(1, "a"), Token::new(2, "b"), Token::new(3, "c")],
            vec![3, 3, 0],
            vec!["X#1".into(), "Y#1".into(), ROOT_LABEL.into()],
        )
        .unwrap();
        let headed = decode(&AugmentedDepTree::without_unaries(base));
        let tree = headed.tree();
        assert_eq!(tree.label(tree.root()), "X");
    }

    #[test]
    fn decode_repairs_multiple_roots() {
        let base = DependencyTree::new(
            vec![Token::new(1, "a"), Token::new(2, "b")],
            vec![0, 0],
            vec![ROOT_LABEL.into(), ROOT_LABEL.into()],
        )
        .unwrap();
        let headed = decode(&AugmentedDepTree::without_unaries(base));
        let tree = headed.tree();
        assert_eq!(tree.label(tree.root()), "VROOT");
        assert_eq!(tree.yield_of(tree.root()), &[1, 2]);
    }

    #[test]
    fn continuity_predicate() {
        let fig1a = &parse_constituent(FIG1A, ConstFormat::Bracketed).unwrap()[0];
        assert!(is_continuous(fig1a));
        let fig1d = &parse_constituent(FIG1D, ConstFormat::Discbracket).unwrap()[0];
        assert!(!is_continuous(fig1d));
        let single = &parse_constituent("(X w)", ConstFormat::Bracketed).unwrap()[0];
        assert!(is_continuous(single));
    }

    #[test]
    fn projectivity_predicate() {
        let fig1c = "1\tShe\t_\tPRP\tPRP\t_\t4\tnsubj\t_\t_\n\
                     2\tis\t_\tVBZ\tVBZ\t_\t4\tcop\t_\t_\n\
                     3\tstill\t_\tRB\tRB\t_\t4\tadvmod\t_\t_\n\
                     4\tcautious\t_\tJJ\tJJ\t_\t0\troot\t_\t_\n\
                     5\t.\t_\t.\t.\t_\t4\tpunct\t_\t_\n";
        assert!(is_projective(&parse_dependency(fig1c).unwrap()[0]));
        let fig1f = "1\tEs\t_\t_\t_\t_\t4\tAPP\t_\t_\n\
                     2\tkam\t_\t_\t_\t_\t0\troot\t_\t_\n\
                     3\tnichts\t_\t_\t_\t_\t4\tDET\t_\t_\n\
                     4\tInteressantes\t_\t_\t_\t_\t2\tSUBJ\t_\t_\n\
                     5\t.\t_\t_\t_\t_\t2\tpunct\t_\t_\n";
        assert!(!is_projective(&parse_dependency(fig1f).unwrap()[0]));
    }

    #[test]
    fn encoded_figures_match_projectivity() {
        assert!(is_projective(&fig1a_aug().base));
        assert!(!is_projective(&fig1d_aug().base));
    }
}
