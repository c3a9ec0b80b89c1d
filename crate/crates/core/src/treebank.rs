//! Treebank readers and writers.
//!
//! Three on-disk formats are supported:
//!
//! * PTB-style bracketed trees, one balanced-parenthesis record per tree.
//!   Terminal order in the text defines the (contiguous) terminal indices.
//! * discbracket: like bracketed, but terminals are written `index=form`
//!   with 0-based indices on disk (1-based in memory), which allows
//!   discontinuous constituents.
//! * CoNLL-X dependency records: 10 tab-separated columns, blank-line
//!   sentence separation. Only ID, FORM, POSTAG, FEATS, HEAD and DEPREL are
//!   interpreted; `#` comment lines are skipped.
//!
//! A bracket `(X w)` whose only child is a single terminal is read as a
//! preterminal: `X` becomes the token's POS tag, not a tree node. The
//! outermost bracket of a record is always a node, so `(X w)` alone is a
//! single-node tree over a POS-less token.

use std::fmt::Write as _;

use thiserror::Error;

use crate::tree::{
    AugmentedDepTree, Child, ConstituentTree, DependencyTree, Token, TreeBuilder, TreeError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstFormat {
    Bracketed,
    Discbracket,
}

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("tree {record}: {msg}")]
    Structure { record: usize, msg: String },
    #[error("sentence {sentence}: {source}")]
    Validation {
        sentence: usize,
        source: TreeError,
    },
    #[error("tree {record} is discontinuous; bracketed output cannot represent it")]
    UnsupportedFormat { record: usize },
}

fn syntax(line: usize, msg: impl Into<String>) -> TreebankError {
    TreebankError::Syntax {
        line,
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------------
// Bracketed / discbracket
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Open,
    Close,
    Atom(String),
}

fn lex(text: &str) -> Vec<(Lexeme, usize)> {
    let mut out = Vec::new();
    let mut atom = String::new();
    let mut line = 1;
    let mut atom_line = 1;
    for ch in text.chars() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if !atom.is_empty() {
                out.push((Lexeme::Atom(std::mem::take(&mut atom)), atom_line));
            }
            match ch {
                '(' => out.push((Lexeme::Open, line)),
                ')' => out.push((Lexeme::Close, line)),
                '\n' => line += 1,
                _ => {}
            }
        } else {
            if atom.is_empty() {
                atom_line = line;
            }
            atom.push(ch);
        }
    }
    if !atom.is_empty() {
        out.push((Lexeme::Atom(atom), atom_line));
    }
    out
}

enum RawChild {
    Word(String, usize),
    Node(RawNode),
}

struct RawNode {
    label: String,
    children: Vec<RawChild>,
}

/// Parses one `(LABEL child*)` group starting at `pos` (which must point at
/// the `(`). Returns the node and the position one past its `)`.
fn parse_group(
    lexemes: &[(Lexeme, usize)],
    mut pos: usize,
) -> Result<(RawNode, usize), TreebankError> {
    let open_line = lexemes[pos].1;
    pos += 1;
    let label = match lexemes.get(pos) {
        Some((Lexeme::Atom(a), _)) => {
            pos += 1;
            a.clone()
        }
        Some((_, line)) => return Err(syntax(*line, "expected node label after '('")),
        None => return Err(syntax(open_line, "unbalanced parentheses: unclosed '('")),
    };
    let mut children = Vec::new();
    loop {
        match lexemes.get(pos) {
            Some((Lexeme::Open, _)) => {
                let (node, next) = parse_group(lexemes, pos)?;
                children.push(RawChild::Node(node));
                pos = next;
            }
            Some((Lexeme::Atom(a), line)) => {
                children.push(RawChild::Word(a.clone(), *line));
                pos += 1;
            }
            Some((Lexeme::Close, line)) => {
                if children.is_empty() {
                    return Err(syntax(*line, format!("node {label:?} has no children")));
                }
                return Ok((RawNode { label, children }, pos + 1));
            }
            None => return Err(syntax(open_line, "unbalanced parentheses: unclosed '('")),
        }
    }
}

struct TerminalEntry {
    disk_index: Option<usize>,
    form: String,
    pos: Option<String>,
}

/// Flattens a raw record into terminal entries plus a skeleton that refers
/// to terminals by their order of appearance. Preterminals (single bare
/// word under a label) are folded into the terminal's POS field.
enum Skeleton {
    Terminal(usize),
    Node(String, Vec<Skeleton>),
}

fn flatten(
    raw: &RawNode,
    is_root: bool,
    format: ConstFormat,
    terminals: &mut Vec<TerminalEntry>,
    record_line: usize,
) -> Result<Skeleton, TreebankError> {
    // Preterminal fold: single bare-word child, not the record root.
    if !is_root && raw.children.len() == 1 {
        if let RawChild::Word(w, line) = &raw.children[0] {
            let (disk_index, form) = split_terminal(w, format, *line)?;
            terminals.push(TerminalEntry {
                disk_index,
                form,
                pos: Some(raw.label.clone()),
            });
            return Ok(Skeleton::Terminal(terminals.len() - 1));
        }
    }
    let mut children = Vec::new();
    for child in &raw.children {
        match child {
            RawChild::Word(w, line) => {
                let (disk_index, form) = split_terminal(w, format, *line)?;
                terminals.push(TerminalEntry {
                    disk_index,
                    form,
                    pos: None,
                });
                children.push(Skeleton::Terminal(terminals.len() - 1));
            }
            RawChild::Node(node) => {
                children.push(flatten(node, false, format, terminals, record_line)?);
            }
        }
    }
    Ok(Skeleton::Node(raw.label.clone(), children))
}

fn split_terminal(
    word: &str,
    format: ConstFormat,
    line: usize,
) -> Result<(Option<usize>, String), TreebankError> {
    match format {
        ConstFormat::Bracketed => Ok((None, word.to_string())),
        ConstFormat::Discbracket => {
            let (idx, form) = word
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("terminal {word:?} is not 'index=form'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| syntax(line, format!("terminal index {idx:?} is not a number")))?;
            if form.is_empty() {
                return Err(syntax(line, format!("terminal {word:?} has an empty form")));
            }
            Ok((Some(idx), form.to_string()))
        }
    }
}

/// Parses a treebank text into constituent trees, one per
/// balanced-parenthesis record.
pub fn parse_constituent(
    text: &str,
    format: ConstFormat,
) -> Result<Vec<ConstituentTree>, TreebankError> {
    let lexemes = lex(text);
    let mut trees = Vec::new();
    let mut pos = 0;
    while pos < lexemes.len() {
        match &lexemes[pos] {
            (Lexeme::Open, line) => {
                let record_line = *line;
                let (raw, next) = parse_group(&lexemes, pos)?;
                pos = next;
                trees.push(build_tree(&raw, format, trees.len() + 1, record_line)?);
            }
            (Lexeme::Close, line) => {
                return Err(syntax(*line, "unbalanced parentheses: stray ')'"))
            }
            (Lexeme::Atom(a), line) => {
                return Err(syntax(*line, format!("unexpected token {a:?} between trees")))
            }
        }
    }
    Ok(trees)
}

fn build_tree(
    raw: &RawNode,
    format: ConstFormat,
    record: usize,
    record_line: usize,
) -> Result<ConstituentTree, TreebankError> {
    let mut entries = Vec::new();
    let skeleton = flatten(raw, true, format, &mut entries, record_line)?;
    let n = entries.len();
    // Map each entry to its 1-based sentence position.
    let mut positions = vec![0usize; n];
    match format {
        ConstFormat::Bracketed => {
            for (i, p) in positions.iter_mut().enumerate() {
                *p = i + 1;
            }
        }
        ConstFormat::Discbracket => {
            let mut seen = vec![false; n];
            for (i, entry) in entries.iter().enumerate() {
                let disk = entry.disk_index.unwrap();
                if disk >= n {
                    return Err(TreebankError::Structure {
                        record,
                        msg: format!(
                            "terminal index {disk} out of range for {n} terminals \
                             (missing index {})",
                            (0..n).find(|i| {
                                !entries.iter().any(|e| e.disk_index == Some(*i))
                            })
                            .unwrap_or(0)
                        ),
                    });
                }
                if seen[disk] {
                    return Err(TreebankError::Structure {
                        record,
                        msg: format!("duplicate terminal index {disk}"),
                    });
                }
                seen[disk] = true;
                positions[i] = disk + 1;
            }
        }
    }
    let mut tokens: Vec<Option<Token>> = (0..n).map(|_| None).collect();
    for (entry, &position) in entries.iter().zip(&positions) {
        tokens[position - 1] = Some(Token {
            index: position,
            form: entry.form.clone(),
            pos: entry.pos.clone(),
        });
    }
    let tokens: Vec<Token> = tokens.into_iter().map(|t| t.unwrap()).collect();
    let mut builder = TreeBuilder::new(tokens);
    fn emit(b: &mut TreeBuilder, positions: &[usize], s: &Skeleton) -> Child {
        match s {
            Skeleton::Terminal(i) => Child::Terminal(positions[*i]),
            Skeleton::Node(label, children) => {
                let kids = children.iter().map(|c| emit(b, positions, c)).collect();
                Child::Node(b.node(label.clone(), kids))
            }
        }
    }
    let root = match emit(&mut builder, &positions, &skeleton) {
        Child::Node(id) => id,
        Child::Terminal(_) => unreachable!("record root is always a node"),
    };
    builder
        .build(root)
        .map_err(|source| TreebankError::Validation {
            sentence: record,
            source,
        })
}

/// Serializes one constituent tree. `Bracketed` output requires every yield
/// to be contiguous.
pub fn serialize_constituent(
    tree: &ConstituentTree,
    format: ConstFormat,
) -> Result<String, TreebankError> {
    serialize_constituent_record(tree, format, 1)
}

/// Serializes a whole treebank, one tree per line.
pub fn serialize_constituent_all(
    trees: &[ConstituentTree],
    format: ConstFormat,
) -> Result<String, TreebankError> {
    let mut out = String::new();
    for (i, tree) in trees.iter().enumerate() {
        out.push_str(&serialize_constituent_record(tree, format, i + 1)?);
        out.push('\n');
    }
    Ok(out)
}

fn serialize_constituent_record(
    tree: &ConstituentTree,
    format: ConstFormat,
    record: usize,
) -> Result<String, TreebankError> {
    if format == ConstFormat::Bracketed && !crate::encoding::is_continuous(tree) {
        return Err(TreebankError::UnsupportedFormat { record });
    }
    let mut out = String::new();
    fn write_terminal(out: &mut String, tok: &Token, format: ConstFormat) {
        let form = match format {
            ConstFormat::Bracketed => tok.form.clone(),
            ConstFormat::Discbracket => format!("{}={}", tok.index - 1, tok.form),
        };
        match &tok.pos {
            Some(pos) => {
                let _ = write!(out, "({pos} {form})");
            }
            None => out.push_str(&form),
        }
    }
    fn write_node(
        out: &mut String,
        tree: &ConstituentTree,
        id: crate::tree::NodeId,
        format: ConstFormat,
    ) {
        let _ = write!(out, "({}", tree.label(id));
        for child in tree.children_by_position(id) {
            out.push(' ');
            match child {
                Child::Terminal(t) => write_terminal(out, tree.token(t), format),
                Child::Node(m) => write_node(out, tree, m, format),
            }
        }
        out.push(')');
    }
    write_node(&mut out, tree, tree.root(), format);
    Ok(out)
}

// ---------------------------------------------------------------------------
// CoNLL-X
// ---------------------------------------------------------------------------

const ABSENT: &str = "_";

struct ConllRow {
    id: usize,
    form: String,
    pos: Option<String>,
    feats: Option<String>,
    head: usize,
    deprel: String,
}

fn parse_conll_rows(text: &str) -> Result<Vec<Vec<ConllRow>>, TreebankError> {
    let mut sentences = Vec::new();
    let mut current: Vec<ConllRow> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(syntax(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| syntax(lineno, format!("ID {:?} is not a number", cols[0])))?;
        if id != current.len() + 1 {
            return Err(syntax(
                lineno,
                format!("ID {} out of order (expected {})", id, current.len() + 1),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| syntax(lineno, format!("HEAD {:?} is not a number", cols[6])))?;
        let opt = |s: &str| {
            if s == ABSENT {
                None
            } else {
                Some(s.to_string())
            }
        };
        current.push(ConllRow {
            id,
            form: cols[1].to_string(),
            pos: opt(cols[4]),
            feats: opt(cols[5]),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

fn rows_to_tree(rows: &[ConllRow], sentence: usize) -> Result<DependencyTree, TreebankError> {
    let tokens: Vec<Token> = rows
        .iter()
        .map(|r| Token {
            index: r.id,
            form: r.form.clone(),
            pos: r.pos.clone(),
        })
        .collect();
    let heads: Vec<usize> = rows.iter().map(|r| r.head).collect();
    let labels: Vec<String> = rows.iter().map(|r| r.deprel.clone()).collect();
    DependencyTree::new(tokens, heads, labels)
        .map_err(|source| TreebankError::Validation { sentence, source })
}

/// Parses a CoNLL-X file into dependency trees.
pub fn parse_dependency(text: &str) -> Result<Vec<DependencyTree>, TreebankError> {
    parse_conll_rows(text)?
        .iter()
        .enumerate()
        .map(|(i, rows)| rows_to_tree(rows, i + 1))
        .collect()
}

/// Parses a CoNLL-X file carrying augmented labels; leaf unary chains are
/// read from a `lu=...` entry in the FEATS column.
pub fn parse_augmented(text: &str) -> Result<Vec<AugmentedDepTree>, TreebankError> {
    let sentences = parse_conll_rows(text)?;
    let mut out = Vec::new();
    for (i, rows) in sentences.iter().enumerate() {
        let base = rows_to_tree(rows, i + 1)?;
        let leaf_unaries: Vec<Option<String>> = rows
            .iter()
            .map(|r| {
                r.feats.as_deref().and_then(|feats| {
                    feats
                        .split('|')
                        .find_map(|f| f.strip_prefix("lu=").map(str::to_string))
                })
            })
            .collect();
        out.push(AugmentedDepTree::new(base, leaf_unaries).expect("lengths match by construction"));
    }
    Ok(out)
}

fn write_conll_sentence(
    out: &mut String,
    tree: &DependencyTree,
    leaf_unaries: Option<&[Option<String>]>,
) {
    for (i, tok) in tree.tokens().iter().enumerate() {
        let pos = tok.pos.as_deref().unwrap_or(ABSENT);
        let feats = match leaf_unaries.and_then(|lu| lu[i].as_deref()) {
            Some(chain) => format!("lu={chain}"),
            None => ABSENT.to_string(),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            tok.form,
            ABSENT,
            pos,
            pos,
            feats,
            tree.head(i + 1),
            tree.label(i + 1),
            ABSENT,
            ABSENT,
        );
    }
    out.push('\n');
}

/// Serializes dependency trees as CoNLL-X (LF line endings, blank line after
/// every sentence).
pub fn serialize_dependency(trees: &[DependencyTree]) -> String {
    let mut out = String::new();
    for tree in trees {
        write_conll_sentence(&mut out, tree, None);
    }
    out
}

/// Serializes augmented dependency trees; leaf unary chains go into FEATS.
pub fn serialize_augmented(trees: &[AugmentedDepTree]) -> String {
    let mut out = String::new();
    for tree in trees {
        write_conll_sentence(&mut out, &tree.base, Some(&tree.leaf_unaries));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracketed_two_terminals() {
        let trees = parse_constituent("(S (NP (PRP She)) (VP (VBZ is)))", ConstFormat::Bracketed)
            .unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.len(), 2);
        assert_eq!(t.yield_of(t.root()), &[1, 2]);
        assert_eq!(t.label(t.root()), "S");
        assert_eq!(t.token(1).form, "She");
        assert_eq!(t.token(1).pos.as_deref(), Some("PRP"));
        // NP and VP survive as unary nodes over the POS-tagged terminals.
        assert_eq!(t.node_count(), 3);
    }

    #[test]
    fn discbracket_discontinuous_yield() {
        let text = "(S (VP 1=kam (S 3=Interessantes)) 0=Es 2=nichts)";
        let trees = parse_constituent(text, ConstFormat::Discbracket).unwrap();
        let t = &trees[0];
        let vp = t
            .node_ids()
            .find(|id| t.label(*id) == "VP")
            .expect("VP node");
        assert_eq!(t.yield_of(vp), &[2, 4]);
        assert!(!crate::encoding::is_continuous(t));
    }

    #[test]
    fn discbracket_missing_index_is_structural_error() {
        let text = "(S (VP 1=kam (S 3=Interessantes)) 0=Es)";
        let err = parse_constituent(text, ConstFormat::Discbracket).unwrap_err();
        assert!(matches!(err, TreebankError::Structure { .. }), "{err}");
    }

    #[test]
    fn discbracket_duplicate_index_is_structural_error() {
        let err =
            parse_constituent("(S 0=a 0=b)", ConstFormat::Discbracket).unwrap_err();
        assert!(matches!(err, TreebankError::Structure { .. }));
    }

    #[test]
    fn unbalanced_parens_reports_line() {
        let err = parse_constituent("(S (NP a)\n(VP b)", ConstFormat::Bracketed).unwrap_err();
        match err {
            TreebankError::Syntax { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn single_token_tree_round_trip() {
        let trees = parse_constituent("(ROOT (X w))", ConstFormat::Bracketed).unwrap();
        let t = &trees[0];
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.token(1).pos.as_deref(), Some("X"));
        let text = serialize_constituent(t, ConstFormat::Bracketed).unwrap();
        assert_eq!(text, "(ROOT (X w))");
    }

    #[test]
    fn discontinuous_tree_rejected_by_bracketed_writer() {
        let text = "(S (VP 1=kam (S 3=Interessantes)) 0=Es 2=nichts)";
        let t = &parse_constituent(text, ConstFormat::Discbracket).unwrap()[0];
        let err = serialize_constituent(t, ConstFormat::Bracketed).unwrap_err();
        assert!(matches!(err, TreebankError::UnsupportedFormat { .. }));
    }

    #[test]
    fn discbracket_writer_canonicalizes() {
        let text = "(S (VP 1=kam (S 3=Interessantes)) 0=Es 2=nichts)";
        let t = &parse_constituent(text, ConstFormat::Discbracket).unwrap()[0];
        let once = serialize_constituent(t, ConstFormat::Discbracket).unwrap();
        let t2 = &parse_constituent(&once, ConstFormat::Discbracket).unwrap()[0];
        assert_eq!(t, t2);
        let twice = serialize_constituent(t2, ConstFormat::Discbracket).unwrap();
        assert_eq!(once, twice);
    }

    fn conll_fig1c() -> String {
        let rows = [
            (1, "She", "PRP", 4, "nsubj"),
            (2, "is", "VBZ", 4, "cop"),
            (3, "still", "RB", 4, "advmod"),
            (4, "cautious", "JJ", 0, "root"),
            (5, ".", ".", 4, "punct"),
        ];
        let mut text = String::new();
        for (id, form, pos, head, rel) in rows {
            text.push_str(&format!(
                "{id}\t{form}\t_\t{pos}\t{pos}\t_\t{head}\t{rel}\t_\t_\n"
            ));
        }
        text
    }

    #[test]
    fn conll_parse_heads_and_labels() {
        let trees = parse_dependency(&conll_fig1c()).unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.heads(), &[4, 4, 4, 0, 4]);
        assert_eq!(
            t.labels(),
            &["nsubj", "cop", "advmod", "root", "punct"]
        );
        assert_eq!(t.token(2).pos.as_deref(), Some("VBZ"));
    }

    #[test]
    fn conll_single_token() {
        let trees = parse_dependency("1\tw\t_\t_\t_\t_\t0\troot\t_\t_\n").unwrap();
        assert_eq!(trees[0].heads(), &[0]);
    }

    #[test]
    fn conll_cycle_names_sentence() {
        let text = "1\ta\t_\t_\t_\t_\t2\tx\t_\t_\n2\tb\t_\t_\t_\t_\t1\ty\t_\t_\n";
        let err = parse_dependency(text).unwrap_err();
        match err {
            TreebankError::Validation { sentence, source } => {
                assert_eq!(sentence, 1);
                assert!(matches!(source, TreeError::HeadCycle { .. }));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn conll_head_out_of_range() {
        let err = parse_dependency("1\ta\t_\t_\t_\t_\t9\tx\t_\t_\n").unwrap_err();
        assert!(matches!(err, TreebankError::Validation { .. }));
    }

    #[test]
    fn conll_comments_and_round_trip() {
        let text = format!("# a comment\n{}", conll_fig1c());
        let trees = parse_dependency(&text).unwrap();
        let written = serialize_dependency(&trees);
        assert_eq!(parse_dependency(&written).unwrap(), trees);
    }

    #[test]
    fn conll_empty_input() {
        assert!(parse_dependency("").unwrap().is_empty());
        assert_eq!(serialize_dependency(&[]), "");
    }

    #[test]
    fn augmented_feats_round_trip() {
        let base = DependencyTree::new(
            vec![Token::new(1, "a"), Token::new(2, "b")],
            vec![2, 0],
            vec!["X#1".into(), "root".into()],
        )
        .unwrap();
        let aug = AugmentedDepTree::new(base, vec![Some("NP".into()), None]).unwrap();
        let text = serialize_augmented(std::slice::from_ref(&aug));
        assert!(text.contains("lu=NP"));
        let back = parse_augmented(&text).unwrap();
        assert_eq!(back[0], aug);
    }

    #[test]
    fn pos_underscore_reads_as_absent() {
        let trees = parse_dependency("1\tw\t_\t_\t_\t_\t0\troot\t_\t_\n").unwrap();
        assert_eq!(trees[0].token(1).pos, None);
    }
}
