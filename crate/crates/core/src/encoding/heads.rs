//! Head-rule sets and head assignment.
//!
//! Rules live in a plain-text file, one rule per line:
//!
//! ```text
//! # comment
//! default left
//! S    left    VP VBZ
//! NP   right   NN NNS NP
//! ```
//!
//! `left` scans children left to right, `right` scans right to left (long
//! forms `left-to-right` / `right-to-left` are accepted). Categories are
//! tried in priority order; for each category the children are scanned in
//! the rule's direction and the first child whose label (for nodes) or POS
//! tag (for terminals) matches becomes the head. Repeated lines for one
//! symbol form an ordered list of fallback rules; a rule without categories
//! picks the first child in its direction. When nothing matches, the first
//! child under the default direction is the head.

use std::collections::HashMap;
use std::str::FromStr;

use thiserror::Error;

use crate::tree::{Child, ConstituentTree, HeadedTree, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl Direction {
    fn parse(word: &str) -> Option<Direction> {
        match word {
            "left" | "left-to-right" | "l2r" => Some(Direction::LeftToRight),
            "right" | "right-to-left" | "r2l" => Some(Direction::RightToLeft),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeadRule {
    pub direction: Direction,
    pub categories: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeadRuleError {
    #[error("line {line}: expected 'SYMBOL direction [categories...]'")]
    MissingFields { line: usize },
    #[error("line {line}: unknown direction {word:?}")]
    BadDirection { line: usize, word: String },
}

/// Per-symbol ordered head rules with a global fallback direction.
#[derive(Debug, Clone)]
pub struct HeadRuleSet {
    rules: HashMap<String, Vec<HeadRule>>,
    default_direction: Direction,
}

impl Default for HeadRuleSet {
    /// No rules at all: every node's head is its leftmost child.
    fn default() -> Self {
        HeadRuleSet {
            rules: HashMap::new(),
            default_direction: Direction::LeftToRight,
        }
    }
}

impl FromStr for HeadRuleSet {
    type Err = HeadRuleError;

    fn from_str(text: &str) -> Result<Self, HeadRuleError> {
        let mut set = HeadRuleSet::default();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let symbol = fields.next().expect("non-empty line");
            let dir_word = fields
                .next()
                .ok_or(HeadRuleError::MissingFields { line: lineno })?;
            let direction =
                Direction::parse(dir_word).ok_or_else(|| HeadRuleError::BadDirection {
                    line: lineno,
                    word: dir_word.to_string(),
                })?;
            let categories: Vec<String> = fields.map(str::to_string).collect();
            if symbol == "default" {
                set.default_direction = direction;
            } else {
                set.rules.entry(symbol.to_string()).or_default().push(HeadRule {
                    direction,
                    categories,
                });
            }
        }
        Ok(set)
    }
}

impl HeadRuleSet {
    /// Picks the head among `categories` (one per child, in sentence order).
    /// Returns the position of the chosen child. Never fails: the default
    /// direction always applies.
    pub fn pick(&self, symbol: &str, categories: &[&str]) -> usize {
        debug_assert!(!categories.is_empty());
        let scan = |dir: Direction| -> Vec<usize> {
            match dir {
                Direction::LeftToRight => (0..categories.len()).collect(),
                Direction::RightToLeft => (0..categories.len()).rev().collect(),
            }
        };
        if let Some(rules) = self.rules.get(symbol) {
            for rule in rules {
                let order = scan(rule.direction);
                if rule.categories.is_empty() {
                    return order[0];
                }
                for cat in &rule.categories {
                    if let Some(&i) = order.iter().find(|&&i| categories[i] == cat) {
                        return i;
                    }
                }
            }
        }
        scan(self.default_direction)[0]
    }
}

/// Assigns a head child to every internal node. Deterministic and total.
pub fn assign_heads(tree: &ConstituentTree, rules: &HeadRuleSet) -> HeadedTree {
    let mut head_child = vec![0usize; tree.node_count()];
    for id in tree.node_ids() {
        head_child[id.0] = pick_head(tree, id, rules);
    }
    HeadedTree::new(tree.clone(), head_child)
}

fn pick_head(tree: &ConstituentTree, id: NodeId, rules: &HeadRuleSet) -> usize {
    let stored = tree.children(id);
    if stored.len() == 1 {
        return 0;
    }
    // Scan in sentence order, then map the pick back to storage position.
    let mut order: Vec<usize> = (0..stored.len()).collect();
    order.sort_by_key(|&i| tree.min_index(stored[i]));
    let categories: Vec<&str> = order
        .iter()
        .map(|&i| match stored[i] {
            Child::Node(m) => tree.label(m),
            Child::Terminal(t) => tree.token(t).pos.as_deref().unwrap_or(""),
        })
        .collect();
    order[rules.pick(tree.label(id), &categories)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{parse_constituent, ConstFormat};

    const FIG1A: &str = "(ROOT (S (NP (PRP She)) (VP (VBZ is) (ADVP (RB still)) \
                         (ADJP (JJ cautious))) (. .)))";

    #[test]
    fn figure_1a_head_word_is_is() {
        let tree = &parse_constituent(FIG1A, ConstFormat::Bracketed).unwrap()[0];
        let rules: HeadRuleSet = "S left VP\nVP left VBZ\n".parse().unwrap();
        let headed = assign_heads(tree, &rules);
        for id in tree.node_ids() {
            let label = tree.label(id);
            if label == "S" || label == "VP" {
                assert_eq!(headed.head_word(id), 2, "head word of {label}");
                assert_eq!(tree.token(headed.head_word(id)).form, "is");
            }
        }
    }

    #[test]
    fn unary_node_head_is_only_child() {
        let tree = &parse_constituent("(X (Y (a b)))", ConstFormat::Bracketed).unwrap()[0];
        let headed = assign_heads(tree, &HeadRuleSet::default());
        assert_eq!(headed.head_word(tree.root()), 1);
    }

    #[test]
    fn right_to_left_noun_preference() {
        // A 3-child NP with a right-to-left noun-preferring rule picks the
        // rightmost noun.
        let tree = &parse_constituent(
            "(NP (NN dog) (CC and) (NN cat))",
            ConstFormat::Bracketed,
        )
        .unwrap()[0];
        let rules: HeadRuleSet = "NP right NN\n".parse().unwrap();
        let headed = assign_heads(tree, &rules);
        assert_eq!(headed.head_word(tree.root()), 3);
    }

    #[test]
    fn hand_applied_rule_table() {
        // Twenty nodes checked by hand against the rule table below. Each
        // entry is (bracketing, expected head terminal index).
        let rules: HeadRuleSet = "default left\n\
                                  S left VP VBZ VBD\n\
                                  VP left VBZ VBD VB VP\n\
                                  NP right NN NNS NP\n\
                                  PP left IN\n\
                                  ADVP right RB\n"
            .parse()
            .unwrap();
        let cases: &[(&str, usize)] = &[
            ("(S (NP (NN dog)) (VP (VBZ runs)))", 2),
            ("(S (VP (VBD ran)) (NP (NN dog)))", 1),
            ("(NP (DT the) (NN dog))", 2),
            ("(NP (DT the) (JJ big) (NN dog))", 3),
            ("(NP (NN trade) (NN deficit))", 2),
            ("(NP (NP (NN war)) (PP (IN of) (NN words)))", 1),
            ("(PP (IN under) (NP (NN fire)))", 1),
            ("(PP (RB out) (IN of) (NN reach))", 2),
            ("(VP (VBZ is) (ADVP (RB here)))", 1),
            ("(VP (RB not) (VB go))", 2),
            ("(VP (VB try) (VP (VB again)))", 1),
            ("(ADVP (RB very) (RB fast))", 2),
            ("(S (NP (NN it)) (VP (VBZ works)) (. .))", 2),
            ("(X (NN a) (NN b))", 1),
            ("(NP (NNS dogs) (CC and) (NNS cats))", 3),
            ("(S (VBZ is) (NP (NN it)))", 1),
            ("(VP (VP (VB eat)) (CC and) (VP (VB run)))", 1),
            ("(NP (JJ red) (JJ blue))", 1),
            ("(PP (TO to) (NP (NN town)))", 1),
            ("(ADVP (IN at) (RB least))", 2),
        ];
        for (text, expected) in cases {
            let tree = &parse_constituent(text, ConstFormat::Bracketed).unwrap()[0];
            let headed = assign_heads(tree, &rules);
            assert_eq!(
                headed.head_word(tree.root()),
                *expected,
                "head of root in {text}"
            );
        }
    }

    #[test]
    fn dsl_errors() {
        assert_eq!(
            "S\n".parse::<HeadRuleSet>().unwrap_err(),
            HeadRuleError::MissingFields { line: 1 }
        );
        assert_eq!(
            "S sideways VP\n".parse::<HeadRuleSet>().unwrap_err(),
            HeadRuleError::BadDirection {
                line: 1,
                word: "sideways".into()
            }
        );
    }
}
