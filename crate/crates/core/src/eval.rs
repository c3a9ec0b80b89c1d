//! Scoring: attachment accuracy, labelled bracketing F1, discontinuous F1,
//! and the model-selection harmonic mean.
//!
//! Punctuation handling follows the two conventions used in practice:
//! either all tokens count, or tokens whose gold POS tag is in a
//! caller-supplied set are discarded. For bracketing scores the discarded
//! terminals are removed from every yield and the remaining terminals are
//! renumbered consecutively (so gaps consisting only of punctuation close);
//! constituents left with an empty yield are dropped.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::tree::{ConstituentTree, DependencyTree};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold and prediction differ in size ({gold} vs {pred} {unit})")]
    Alignment {
        gold: usize,
        pred: usize,
        unit: &'static str,
    },
    #[error("sentence {sentence}: terminal {index} differs between gold and prediction")]
    TerminalMismatch { sentence: usize, index: usize },
    #[error("punctuation exclusion requires a non-empty POS set")]
    EmptyPunctSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PunctuationPolicy {
    IncludeAll,
    ExcludeByPos(BTreeSet<String>),
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub punctuation: PunctuationPolicy,
    pub ignore_root_symbol: bool,
}

/// The conventional PTB punctuation tag set.
pub const PTB_PUNCT_TAGS: [&str; 5] = ["``", "''", ":", ",", "."];

impl EvalConfig {
    pub fn new(
        punctuation: PunctuationPolicy,
        ignore_root_symbol: bool,
    ) -> Result<Self, EvalError> {
        if let PunctuationPolicy::ExcludeByPos(set) = &punctuation {
            if set.is_empty() {
                return Err(EvalError::EmptyPunctSet);
            }
        }
        Ok(EvalConfig {
            punctuation,
            ignore_root_symbol,
        })
    }

    /// Count every token; keep root symbols.
    pub fn include_all() -> Self {
        EvalConfig {
            punctuation: PunctuationPolicy::IncludeAll,
            ignore_root_symbol: false,
        }
    }

    /// PTB convention: discard the standard punctuation tags.
    pub fn ptb() -> Self {
        EvalConfig {
            punctuation: PunctuationPolicy::ExcludeByPos(
                PTB_PUNCT_TAGS.iter().map(|s| s.to_string()).collect(),
            ),
            ignore_root_symbol: false,
        }
    }

    fn is_punct(&self, pos: Option<&str>) -> bool {
        match &self.punctuation {
            PunctuationPolicy::IncludeAll => false,
            PunctuationPolicy::ExcludeByPos(set) => {
                pos.is_some_and(|p| set.contains(p))
            }
        }
    }
}

fn percent(hit: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * hit as f64 / total as f64
    }
}

/// Raw per-sentence attachment counts: (scored tokens, correct heads,
/// correct heads with correct labels).
pub fn attachment_counts(
    gold: &DependencyTree,
    pred: &DependencyTree,
    config: &EvalConfig,
) -> Result<(usize, usize, usize), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Alignment {
            gold: gold.len(),
            pred: pred.len(),
            unit: "tokens",
        });
    }
    let mut scored = 0;
    let mut head_hits = 0;
    let mut label_hits = 0;
    for i in 1..=gold.len() {
        if config.is_punct(gold.tokens()[i - 1].pos.as_deref()) {
            continue;
        }
        scored += 1;
        if gold.head(i) == pred.head(i) {
            head_hits += 1;
            if gold.label(i) == pred.label(i) {
                label_hits += 1;
            }
        }
    }
    Ok((scored, head_hits, label_hits))
}

/// Unlabelled and labelled attachment scores over a corpus.
pub fn attachment_scores_corpus(
    gold: &[DependencyTree],
    pred: &[DependencyTree],
    config: &EvalConfig,
) -> Result<(f64, f64), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Alignment {
            gold: gold.len(),
            pred: pred.len(),
            unit: "sentences",
        });
    }
    let mut scored = 0;
    let mut head_hits = 0;
    let mut label_hits = 0;
    for (g, p) in gold.iter().zip(pred) {
        let (s, h, l) = attachment_counts(g, p, config)?;
        scored += s;
        head_hits += h;
        label_hits += l;
    }
    Ok((percent(head_hits, scored), percent(label_hits, scored)))
}

/// (UAS, LAS) for a single sentence pair.
pub fn attachment_scores(
    gold: &DependencyTree,
    pred: &DependencyTree,
    config: &EvalConfig,
) -> Result<(f64, f64), EvalError> {
    attachment_scores_corpus(
        std::slice::from_ref(gold),
        std::slice::from_ref(pred),
        config,
    )
}

/// A scored constituent: label plus (renumbered) terminal yield.
type Item = (String, Vec<usize>);

/// Extracts the comparable constituents of one tree under `config`.
/// Punctuation terminals are dropped from yields and the remaining
/// positions renumbered; empty constituents disappear; the root node is
/// skipped when `ignore_root_symbol` is set.
fn scored_items(tree: &ConstituentTree, config: &EvalConfig) -> Vec<Item> {
    let mut rank = vec![0usize; tree.len() + 1];
    let mut kept = 0;
    for tok in tree.terminals() {
        if !config.is_punct(tok.pos.as_deref()) {
            kept += 1;
            rank[tok.index] = kept;
        }
    }
    let mut items = Vec::new();
    for id in tree.node_ids() {
        if config.ignore_root_symbol && id == tree.root() {
            continue;
        }
        let mapped: Vec<usize> = tree
            .yield_of(id)
            .iter()
            .filter_map(|&t| (rank[t] > 0).then_some(rank[t]))
            .collect();
        if !mapped.is_empty() {
            items.push((tree.label(id).to_string(), mapped));
        }
    }
    items
}

fn is_interval(y: &[usize]) -> bool {
    y[y.len() - 1] - y[0] + 1 == y.len()
}

fn multiset(items: Vec<Item>) -> HashMap<Item, usize> {
    let mut counts = HashMap::new();
    for item in items {
        *counts.entry(item).or_insert(0) += 1;
    }
    counts
}

fn prf(matched: usize, gold_total: usize, pred_total: usize) -> (f64, f64, f64) {
    if gold_total == 0 && pred_total == 0 {
        return (100.0, 100.0, 100.0);
    }
    let p = if pred_total == 0 {
        0.0
    } else {
        100.0 * matched as f64 / pred_total as f64
    };
    let r = if gold_total == 0 {
        0.0
    } else {
        100.0 * matched as f64 / gold_total as f64
    };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

fn check_terminals(
    gold: &ConstituentTree,
    pred: &ConstituentTree,
    sentence: usize,
) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Alignment {
            gold: gold.len(),
            pred: pred.len(),
            unit: "tokens",
        });
    }
    for (g, p) in gold.terminals().iter().zip(pred.terminals()) {
        if g.form != p.form {
            return Err(EvalError::TerminalMismatch {
                sentence,
                index: g.index,
            });
        }
    }
    Ok(())
}

/// Raw bracketing counts for one sentence pair: (matched, gold total,
/// predicted total), with `disco_only` restricting both sides to
/// non-interval yields.
pub fn bracketing_counts(
    gold: &ConstituentTree,
    pred: &ConstituentTree,
    config: &EvalConfig,
    disco_only: bool,
) -> Result<(usize, usize, usize), EvalError> {
    check_terminals(gold, pred, 1)?;
    let keep = |items: Vec<Item>| -> Vec<Item> {
        if disco_only {
            items.into_iter().filter(|(_, y)| !is_interval(y)).collect()
        } else {
            items
        }
    };
    let g_items = multiset(keep(scored_items(gold, config)));
    let p_items = multiset(keep(scored_items(pred, config)));
    let gold_total = g_items.values().sum::<usize>();
    let pred_total = p_items.values().sum::<usize>();
    let mut matched = 0;
    for (item, gc) in &g_items {
        if let Some(pc) = p_items.get(item) {
            matched += gc.min(pc);
        }
    }
    Ok((matched, gold_total, pred_total))
}

fn bracketing_counts_corpus(
    gold: &[ConstituentTree],
    pred: &[ConstituentTree],
    config: &EvalConfig,
    disco_only: bool,
) -> Result<(usize, usize, usize), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::Alignment {
            gold: gold.len(),
            pred: pred.len(),
            unit: "sentences",
        });
    }
    let mut matched = 0;
    let mut gold_total = 0;
    let mut pred_total = 0;
    for (s, (g, p)) in gold.iter().zip(pred).enumerate() {
        let (m, gt, pt) = bracketing_counts(g, p, config, disco_only).map_err(|e| match e {
            EvalError::TerminalMismatch { index, .. } => EvalError::TerminalMismatch {
                sentence: s + 1,
                index,
            },
            other => other,
        })?;
        matched += m;
        gold_total += gt;
        pred_total += pt;
    }
    Ok((matched, gold_total, pred_total))
}

/// Labelled bracketing precision, recall and F1 over a corpus.
pub fn constituency_f1_corpus(
    gold: &[ConstituentTree],
    pred: &[ConstituentTree],
    config: &EvalConfig,
) -> Result<(f64, f64, f64), EvalError> {
    let (m, g, p) = bracketing_counts_corpus(gold, pred, config, false)?;
    Ok(prf(m, g, p))
}

pub fn constituency_f1(
    gold: &ConstituentTree,
    pred: &ConstituentTree,
    config: &EvalConfig,
) -> Result<(f64, f64, f64), EvalError> {
    constituency_f1_corpus(
        std::slice::from_ref(gold),
        std::slice::from_ref(pred),
        config,
    )
}

/// F1 restricted to discontinuous constituents (non-interval yields, each
/// side filtered by its own tree). With no discontinuous constituents on
/// either side the score is 100 by convention; one-sided emptiness yields
/// P or R = 0.
pub fn discontinuous_f1_corpus(
    gold: &[ConstituentTree],
    pred: &[ConstituentTree],
    config: &EvalConfig,
) -> Result<f64, EvalError> {
    let (m, g, p) = bracketing_counts_corpus(gold, pred, config, true)?;
    Ok(prf(m, g, p).2)
}

pub fn discontinuous_f1(
    gold: &ConstituentTree,
    pred: &ConstituentTree,
    config: &EvalConfig,
) -> Result<f64, EvalError> {
    discontinuous_f1_corpus(
        std::slice::from_ref(gold),
        std::slice::from_ref(pred),
        config,
    )
}

/// `2ab / (a + b)`, and 0 when both inputs are 0.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Child, Token, TreeBuilder};
    use crate::treebank::{parse_constituent, parse_dependency, ConstFormat};

    fn dep(heads: &[usize], labels: &[&str]) -> DependencyTree {
        let tokens = (1..=heads.len())
            .map(|i| Token::new(i, format!("w{i}")))
            .collect();
        DependencyTree::new(
            tokens,
            heads.to_vec(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_prediction_scores_100() {
        let g = dep(&[2, 0, 2], &["a", "root", "b"]);
        let (uas, las) = attachment_scores(&g, &g, &EvalConfig::include_all()).unwrap();
        assert_eq!((uas, las), (100.0, 100.0));
    }

    #[test]
    fn four_of_five_heads_three_labelled() {
        // 5 tokens, 4 correct heads of which 3 correctly labelled.
        let g = dep(&[2, 0, 2, 2, 2], &["a", "root", "b", "c", "d"]);
        let p = dep(&[2, 0, 2, 2, 3], &["a", "root", "b", "x", "d"]);
        let (uas, las) = attachment_scores(&g, &p, &EvalConfig::include_all()).unwrap();
        assert_eq!((uas, las), (80.0, 60.0));
    }

    #[test]
    fn token_mismatch_is_alignment_error() {
        let g = dep(&[0], &["root"]);
        let p = dep(&[2, 0], &["a", "root"]);
        assert!(attachment_scores(&g, &p, &EvalConfig::include_all()).is_err());
    }

    #[test]
    fn punctuation_policy_changes_scored_tokens() {
        let mut tokens: Vec<Token> = (1..=3)
            .map(|i| Token::with_pos(i, format!("w{i}"), "NN"))
            .collect();
        tokens[2] = Token::with_pos(3, ".", ".");
        let g = DependencyTree::new(
            tokens.clone(),
            vec![2, 0, 2],
            vec!["a".into(), "root".into(), "punct".into()],
        )
        .unwrap();
        let p = DependencyTree::new(
            tokens,
            vec![2, 0, 1],
            vec!["a".into(), "root".into(), "punct".into()],
        )
        .unwrap();
        let all = EvalConfig::include_all();
        let ptb = EvalConfig::ptb();
        assert_eq!(
            attachment_scores(&g, &p, &all).unwrap().0,
            100.0 * 2.0 / 3.0
        );
        assert_eq!(attachment_scores(&g, &p, &ptb).unwrap().0, 100.0);
    }

    fn tree_s_vp() -> ConstituentTree {
        // gold {S:{1..5}, VP:{2,3,4}}
        let tokens = (1..=5).map(|i| Token::new(i, format!("w{i}"))).collect();
        let mut b = TreeBuilder::new(tokens);
        let vp = b.node(
            "VP",
            vec![Child::Terminal(2), Child::Terminal(3), Child::Terminal(4)],
        );
        let s = b.node(
            "S",
            vec![Child::Terminal(1), Child::Node(vp), Child::Terminal(5)],
        );
        b.build(s).unwrap()
    }

    fn tree_s_np() -> ConstituentTree {
        // pred {S:{1..5}, NP:{2,3}}
        let tokens = (1..=5).map(|i| Token::new(i, format!("w{i}"))).collect();
        let mut b = TreeBuilder::new(tokens);
        let np = b.node("NP", vec![Child::Terminal(2), Child::Terminal(3)]);
        let s = b.node(
            "S",
            vec![
                Child::Terminal(1),
                Child::Node(np),
                Child::Terminal(4),
                Child::Terminal(5),
            ],
        );
        b.build(s).unwrap()
    }

    #[test]
    fn f1_half_match() {
        let (p, r, f1) =
            constituency_f1(&tree_s_vp(), &tree_s_np(), &EvalConfig::include_all()).unwrap();
        assert_eq!((p, r, f1), (50.0, 50.0, 50.0));
    }

    #[test]
    fn f1_perfect_on_figure_1a() {
        let fig1a = "(ROOT (S (NP (PRP She)) (VP (VBZ is) (ADVP (RB still)) \
                     (ADJP (JJ cautious))) (. .)))";
        let t = &parse_constituent(fig1a, ConstFormat::Bracketed).unwrap()[0];
        let (_, _, f1) = constituency_f1(t, t, &EvalConfig::include_all()).unwrap();
        assert_eq!(f1, 100.0);
    }

    #[test]
    fn df1_conventions() {
        let cfg = EvalConfig::include_all();
        // Fully continuous on both sides: 100 by convention.
        assert_eq!(
            discontinuous_f1(&tree_s_vp(), &tree_s_vp(), &cfg).unwrap(),
            100.0
        );
        // Figure 1(d) against itself: its discontinuous NP matches.
        let fig1d = "(VROOT (S (NP (PPER 0=Es) (NP (PIAT 2=nichts) (NN 3=Interessantes))) \
                     (VVFIN 1=kam)) ($. 4=.))";
        let t = &parse_constituent(fig1d, ConstFormat::Discbracket).unwrap()[0];
        assert_eq!(discontinuous_f1(t, t, &cfg).unwrap(), 100.0);
        // One-sided emptiness.
        assert_eq!(discontinuous_f1(t, &continuous_variant(), &cfg).unwrap(), 0.0);
    }

    fn continuous_variant() -> ConstituentTree {
        let fig1d_flat = "(VROOT (S (NP (PPER 0=Es)) (VVFIN 1=kam) (NP (PIAT 2=nichts) \
                          (NN 3=Interessantes))) ($. 4=.))";
        parse_constituent(fig1d_flat, ConstFormat::Discbracket)
            .unwrap()
            .remove(0)
    }

    #[test]
    fn hand_computed_df1_pairs() {
        // Three hand-constructed pairs, computed by hand with the same
        // convention used by disco-dop (punct removed, roots ignorable).
        let cfg = EvalConfig::include_all();
        let disco = |text: &str| {
            parse_constituent(text, ConstFormat::Discbracket)
                .unwrap()
                .remove(0)
        };
        // Pair 1: gold has X:{1,3}, pred has X:{1,3} -> DF1 = 100.
        let g1 = disco("(R (X 0=a 2=c) 1=b)");
        assert_eq!(discontinuous_f1(&g1, &g1, &cfg).unwrap(), 100.0);
        // Pair 2: gold X:{1,3}, pred Y:{1,3} -> label mismatch, DF1 = 0.
        let p2 = disco("(R (Y 0=a 2=c) 1=b)");
        assert_eq!(discontinuous_f1(&g1, &p2, &cfg).unwrap(), 0.0);
        // Pair 3: gold {X:{1,3}, X:{1,3,4}}, pred {X:{1,3}, Y:{1,3,4}}:
        // matched 1 of 2 on each side -> P = R = 50, DF1 = 50.
        let g3 = disco("(R (X (X 0=a 2=c) 3=d) 1=b)");
        let p3 = disco("(R (Y (X 0=a 2=c) 3=d) 1=b)");
        assert_eq!(discontinuous_f1(&g3, &p3, &cfg).unwrap(), 50.0);
    }

    #[test]
    fn ignore_root_symbol_drops_root_node() {
        let cfg = EvalConfig {
            punctuation: PunctuationPolicy::IncludeAll,
            ignore_root_symbol: true,
        };
        let mk = |root_label: &str| {
            let tokens = (1..=2).map(|i| Token::new(i, format!("w{i}"))).collect();
            let mut b = TreeBuilder::new(tokens);
            let x = b.node("X", vec![Child::Terminal(1), Child::Terminal(2)]);
            let r = b.node(root_label, vec![Child::Node(x)]);
            b.build(r).unwrap()
        };
        let (_, _, f1) = constituency_f1(&mk("ROOT"), &mk("VROOT"), &cfg).unwrap();
        assert_eq!(f1, 100.0);
    }

    #[test]
    fn harmonic_mean_examples() {
        assert_eq!(harmonic_mean(90.0, 90.0), 90.0);
        assert_eq!(harmonic_mean(100.0, 0.0), 0.0);
        assert_eq!(harmonic_mean(0.0, 0.0), 0.0);
        let hm = harmonic_mean(94.64, 93.93);
        assert!((hm - 94.28).abs() < 0.005, "{hm}");
    }

    #[test]
    fn empty_punct_set_rejected() {
        assert_eq!(
            EvalConfig::new(PunctuationPolicy::ExcludeByPos(BTreeSet::new()), false)
                .unwrap_err(),
            EvalError::EmptyPunctSet
        );
    }
}
