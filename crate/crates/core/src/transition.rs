//! The left-to-right SHIFT-ATTACH-p transition system.
//!
//! A sentence of length `n` is parsed in exactly `n` transitions: at step
//! `t` the current focus word `w_t` attaches to a pointed position `p` in
//! `0..=n` (0 is the artificial ROOT) and the focus advances. [`oracle`]
//! extracts the gold pointer sequence, [`legal_heads`] gives the positions
//! that keep the partial graph acyclic (and, in projective mode,
//! crossing-free), and [`greedy_parse`] decodes from an arbitrary score
//! provider, falling back to the next highest-scoring legal position when
//! the argmax is forbidden.

use thiserror::Error;

use crate::encoding::is_projective;
use crate::tree::{DependencyTree, Token, TreeError};

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("pointer sequence has {got} entries for {expected} tokens")]
    LengthMismatch { expected: usize, got: usize },
    #[error("step {step}: position {position} is not a legal head")]
    IllegalPointer { step: usize, position: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Partial parse: tokens before `focus` have heads, the rest do not.
#[derive(Debug, Clone)]
pub struct ParserState {
    n: usize,
    focus: usize,
    heads: Vec<Option<usize>>,
}

impl ParserState {
    pub fn new(n: usize) -> Self {
        ParserState {
            n,
            focus: 1,
            heads: vec![None; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The next unattached token, in `1..=n`; `n + 1` when complete.
    pub fn focus(&self) -> usize {
        self.focus
    }

    pub fn is_complete(&self) -> bool {
        self.focus > self.n
    }

    pub fn head_of(&self, token: usize) -> Option<usize> {
        self.heads[token - 1]
    }

    /// Attaches the focus word to `p` and advances. Legality is the
    /// caller's responsibility; see [`legal_heads`].
    pub fn attach(&mut self, p: usize) {
        debug_assert!(!self.is_complete());
        debug_assert!(p != self.focus && p <= self.n);
        self.heads[self.focus - 1] = Some(p);
        self.focus += 1;
    }

    fn into_heads(self) -> Vec<usize> {
        self.heads.into_iter().map(|h| h.unwrap()).collect()
    }
}

/// One pointer per token; replaying them left to right rebuilds the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSequence(pub Vec<usize>);

impl TransitionSequence {
    pub fn pointers(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gold pointer sequence: token `i` points at its gold head.
pub fn oracle(gold: &DependencyTree) -> TransitionSequence {
    TransitionSequence(gold.heads().to_vec())
}

/// Applies a pointer sequence, validating each step against the acyclicity
/// constraint, and rebuilds the labelled tree.
pub fn replay(
    seq: &TransitionSequence,
    tokens: Vec<Token>,
    labels: Vec<String>,
) -> Result<DependencyTree, TransitionError> {
    let n = tokens.len();
    if seq.len() != n {
        return Err(TransitionError::LengthMismatch {
            expected: n,
            got: seq.len(),
        });
    }
    let mut state = ParserState::new(n);
    for (step, &p) in seq.pointers().iter().enumerate() {
        if p > n || !legal_mask(&state, false)[p] {
            return Err(TransitionError::IllegalPointer {
                step: step + 1,
                position: p,
            });
        }
        state.attach(p);
    }
    Ok(DependencyTree::new(tokens, state.into_heads(), labels)?)
}

/// Positions that may head the focus word: the arc must keep the partial
/// graph acyclic and, in projective mode, must not cross any existing arc
/// (root arcs count as arcs from position 0). Never empty.
pub fn legal_heads(state: &ParserState, projective_mode: bool) -> Vec<usize> {
    legal_mask(state, projective_mode)
        .iter()
        .enumerate()
        .filter_map(|(p, &ok)| ok.then_some(p))
        .collect()
}

/// Boolean mask over positions `0..=n`.
fn legal_mask(state: &ParserState, projective_mode: bool) -> Vec<bool> {
    let n = state.n;
    let f = state.focus;
    let mut mask = vec![true; n + 1];
    if f <= n {
        mask[f] = false;
    }

    // Acyclicity: exclude every token whose head chain reaches the focus
    // word. Memoised walks keep the whole sweep linear.
    const UNKNOWN: u8 = 0;
    const REACHES: u8 = 1;
    const ESCAPES: u8 = 2;
    let mut memo = vec![UNKNOWN; n + 1];
    for p in 1..f {
        if memo[p] != UNKNOWN {
            if memo[p] == REACHES {
                mask[p] = false;
            }
            continue;
        }
        let mut path = Vec::new();
        let mut cur = p;
        let verdict = loop {
            if cur == f {
                break REACHES;
            }
            if memo[cur] != UNKNOWN {
                break memo[cur];
            }
            path.push(cur);
            match state.heads[cur - 1] {
                Some(0) | None => break ESCAPES,
                Some(h) => cur = h,
            }
        };
        for q in path {
            memo[q] = verdict;
        }
        if verdict == REACHES {
            mask[p] = false;
        }
    }

    if projective_mode && f <= n {
        // The candidate arc spans [min(p, f), max(p, f)]. An existing arc
        // [l, r] forbids exactly the candidate positions that would cross
        // it; arcs sharing the endpoint f forbid nothing. Interval marks
        // via a difference array keep this linear per step.
        let mut diff = vec![0i32; n + 2];
        let mut forbid = |lo: usize, hi: usize| {
            if lo <= hi {
                diff[lo] += 1;
                diff[hi + 1] -= 1;
            }
        };
        for d in 1..f {
            let h = state.heads[d - 1].expect("tokens before focus are attached");
            let (l, r) = (h.min(d), h.max(d));
            if l < f && f < r {
                if l > 0 {
                    forbid(0, l - 1);
                }
                forbid(r + 1, n);
            } else if r < f {
                forbid(l + 1, r.saturating_sub(1));
            } else if l > f {
                forbid(l + 1, r.saturating_sub(1));
            }
        }
        let mut acc = 0;
        for p in 0..=n {
            acc += diff[p];
            if acc > 0 {
                mask[p] = false;
            }
        }
    }
    mask
}

/// Decoding switches shared by both task decoders.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Reject arcs that would cross an existing arc.
    pub projective: bool,
    /// Allow at most one dependent of position 0.
    pub single_root: bool,
}

/// Greedy decoding: for each focus word, attach to the highest-scoring
/// legal position (ties break towards the smaller position). `scores` is
/// called once per step and must return one finite score per position in
/// `0..=n`.
pub fn greedy_heads(
    n: usize,
    mut scores: impl FnMut(&ParserState) -> Vec<f64>,
    options: ParseOptions,
) -> Vec<usize> {
    let mut masked: Vec<(usize, usize)> = Vec::new();
    let mut attempts = 0;
    loop {
        let mut state = ParserState::new(n);
        let mut root_used = false;
        while !state.is_complete() {
            let mut mask = legal_mask(&state, options.projective);
            for &(dep, head) in &masked {
                if dep == state.focus() {
                    mask[head] = false;
                }
            }
            if options.single_root && root_used {
                mask[0] = false;
            }
            if !mask.iter().any(|&ok| ok) {
                // The single-root restriction (or an accumulated repair
                // mask) can starve the set; the base constraints alone
                // cannot. Fall back to the plain legal set.
                mask = legal_mask(&state, options.projective);
            }
            let row = scores(&state);
            debug_assert_eq!(row.len(), n + 1);
            let mut best: Option<usize> = None;
            for p in 0..=n {
                if mask[p] && best.is_none_or(|b| row[p] > row[b]) {
                    best = Some(p);
                }
            }
            let best = best.expect("legal set is never empty");
            if best == 0 {
                root_used = true;
            }
            state.attach(best);
        }
        let heads = state.into_heads();
        if !options.projective || attempts >= n {
            return heads;
        }
        // The incremental filter admits only pairwise non-crossing arcs, so
        // this verification holds by construction; if it ever failed, the
        // offending arc is masked and decoding restarts.
        match first_crossing(&heads) {
            None => return heads,
            Some(dep) => {
                masked.push((dep, heads[dep - 1]));
                attempts += 1;
            }
        }
    }
}

fn first_crossing(heads: &[usize]) -> Option<usize> {
    let spans: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| (h.min(i + 1), h.max(i + 1)))
        .collect();
    for d in 1..=heads.len() {
        let (l1, r1) = spans[d - 1];
        for &(l2, r2) in &spans[..d - 1] {
            if (l1 < l2 && l2 < r1 && r1 < r2) || (l2 < l1 && l1 < r2 && r2 < r1) {
                return Some(d);
            }
        }
    }
    None
}

/// Greedy decoding over the given tokens; labels are left as `_` (labelling
/// is the model's job).
pub fn greedy_parse(
    tokens: &[Token],
    scores: impl FnMut(&ParserState) -> Vec<f64>,
    options: ParseOptions,
) -> DependencyTree {
    let heads = greedy_heads(tokens.len(), scores, options);
    let labels = vec!["_".to_string(); tokens.len()];
    let tree = DependencyTree::new(tokens.to_vec(), heads, labels)
        .expect("greedy decoding yields a valid tree");
    if options.projective {
        debug_assert!(is_projective(&tree));
    }
    tree
}
