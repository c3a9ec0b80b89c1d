//! Vocabularies built from the training corpus. Index 0 of the word, char
//! and POS tables is reserved for UNK/padding; the label sets contain only
//! symbols seen in training; the leaf unary tag set always contains NONE
//! at index 0.

use std::collections::HashMap;

use crate::tree::Token;

use super::train::ParallelSentence;

pub const UNK: &str = "<unk>";
pub const NONE_TAG: &str = "NONE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Lexicon {
    fn with_reserved(reserved: &str) -> Self {
        let mut lex = Lexicon {
            entries: Vec::new(),
            ids: HashMap::new(),
        };
        lex.insert(reserved);
        lex
    }

    fn open() -> Self {
        Lexicon {
            entries: Vec::new(),
            ids: HashMap::new(),
        }
    }

    pub fn insert(&mut self, entry: &str) -> usize {
        if let Some(&id) = self.ids.get(entry) {
            return id;
        }
        self.entries.push(entry.to_string());
        self.ids.insert(entry.to_string(), self.entries.len() - 1);
        self.entries.len() - 1
    }

    pub fn id(&self, entry: &str) -> Option<usize> {
        self.ids.get(entry).copied()
    }

    /// Id of `entry`, with 0 (the reserved slot) for unknown entries.
    pub fn id_or_unk(&self, entry: &str) -> usize {
        self.id(entry).unwrap_or(0)
    }

    pub fn entry(&self, id: usize) -> &str {
        &self.entries[id]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn from_entries(entries: Vec<String>) -> Self {
        let ids = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Lexicon { entries, ids }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub words: Lexicon,
    pub chars: Lexicon,
    pub pos: Lexicon,
    pub dep_labels: Lexicon,
    pub const_labels: Lexicon,
    pub unary_tags: Lexicon,
    /// Training words seen exactly once (candidates for UNK replacement).
    pub singletons: Vec<bool>,
}

impl Vocab {
    pub fn build(corpus: &[ParallelSentence]) -> Vocab {
        let mut words = Lexicon::with_reserved(UNK);
        let mut chars = Lexicon::with_reserved(UNK);
        let mut pos = Lexicon::with_reserved(UNK);
        let mut dep_labels = Lexicon::open();
        let mut const_labels = Lexicon::open();
        let mut unary_tags = Lexicon::with_reserved(NONE_TAG);
        let mut freq: HashMap<usize, usize> = HashMap::new();
        for sent in corpus {
            for tok in sent.dep.tokens() {
                let id = words.insert(&tok.form);
                *freq.entry(id).or_insert(0) += 1;
                for ch in tok.form.chars() {
                    chars.insert(&ch.to_string());
                }
                if let Some(p) = &tok.pos {
                    pos.insert(p);
                }
            }
            for label in sent.dep.labels() {
                dep_labels.insert(label);
            }
            for label in sent.aug.base.labels() {
                const_labels.insert(label);
            }
            for lu in &sent.aug.leaf_unaries {
                if let Some(chain) = lu {
                    unary_tags.insert(chain);
                }
            }
        }
        let singletons = (0..words.len())
            .map(|id| id != 0 && freq.get(&id).copied().unwrap_or(0) == 1)
            .collect();
        Vocab {
            words,
            chars,
            pos,
            dep_labels,
            const_labels,
            unary_tags,
            singletons,
        }
    }

    pub fn word_ids(&self, tokens: &[Token]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.words.id_or_unk(&t.form))
            .collect()
    }

    pub fn char_ids(&self, form: &str) -> Vec<usize> {
        form.chars()
            .map(|c| self.chars.id_or_unk(&c.to_string()))
            .collect()
    }

    pub fn pos_ids(&self, tokens: &[Token]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| t.pos.as_deref().map_or(0, |p| self.pos.id_or_unk(p)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{AugmentedDepTree, DependencyTree};

    fn sentence(forms: &[&str]) -> ParallelSentence {
        let tokens: Vec<Token> = forms
            .iter()
            .enumerate()
            .map(|(i, f)| Token::new(i + 1, *f))
            .collect();
        let n = forms.len();
        let heads: Vec<usize> = (0..n).map(|i| if i == n - 1 { 0 } else { n }).collect();
        let labels: Vec<String> = (0..n)
            .map(|i| if i == n - 1 { "root".into() } else { "X#1".into() })
            .collect();
        let dep = DependencyTree::new(tokens, heads, labels).unwrap();
        let aug = AugmentedDepTree::without_unaries(dep.clone());
        ParallelSentence::new(dep, aug).unwrap()
    }

    #[test]
    fn reserved_slots() {
        let corpus = vec![sentence(&["a", "b", "a"])];
        let v = Vocab::build(&corpus);
        assert_eq!(v.words.entry(0), UNK);
        assert_eq!(v.chars.entry(0), UNK);
        assert_eq!(v.unary_tags.entry(0), NONE_TAG);
        assert_eq!(v.words.id_or_unk("never-seen"), 0);
    }

    #[test]
    fn singletons_marked() {
        let corpus = vec![sentence(&["a", "b", "a"])];
        let v = Vocab::build(&corpus);
        let a = v.words.id("a").unwrap();
        let b = v.words.id("b").unwrap();
        assert!(!v.singletons[a]);
        assert!(v.singletons[b]);
        assert!(!v.singletons[0]);
    }
}
