//! Parse trees, the recursive difference metrics every reward is built on,
//! and the parenthesized text format used by dataset files.

use std::fmt::Write as _;

use thiserror::Error;

use crate::vocab::{Label, Vocab};

/// An ordered rooted tree of labels. Leaves are terminals (shifted tokens)
/// or childless non-terminals.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ParseTree {
    pub root: Label,
    pub children: Vec<ParseTree>,
}

impl ParseTree {
    pub fn leaf(root: Label) -> Self {
        ParseTree {
            root,
            children: Vec::new(),
        }
    }

    pub fn new(root: Label, children: Vec<ParseTree>) -> Self {
        ParseTree { root, children }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Total node count, root included.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ParseTree::size).sum::<usize>()
    }

    /// Every node of the tree taken as a subtree root, preorder.
    pub fn subtrees(&self) -> Vec<&ParseTree> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(t.children.iter().rev());
        }
        out
    }

    pub fn display<'a>(&'a self, vocab: &'a Vocab) -> TreeDisplay<'a> {
        TreeDisplay { tree: self, vocab }
    }
}

/// Recursive label-mismatch count between two trees: +1 if the roots differ,
/// aligned children compared recursively, surplus children on the longer
/// side charged by their node counts.
pub fn diff(a: &ParseTree, b: &ParseTree) -> u64 {
    let mut sum = u64::from(a.root != b.root);
    let shared = a.children.len().min(b.children.len());
    for i in 0..shared {
        sum += diff(&a.children[i], &b.children[i]);
    }
    for c in &a.children[shared..] {
        sum += c.size() as u64;
    }
    for c in &b.children[shared..] {
        sum += c.size() as u64;
    }
    sum
}

/// Minimum of `diff(sub, s)` over every subtree `s` of `target`.
///
/// A partially built tree that will end up inside the ground truth scores 0.
pub fn mindiff(sub: &ParseTree, target: &ParseTree) -> u64 {
    target
        .subtrees()
        .into_iter()
        .map(|s| diff(sub, s))
        .min()
        .expect("target tree has at least its root")
}

/// Render in the canonical parenthesized form: internal nodes as
/// `(Label child child ...)`, leaves as bare names.
pub fn serialize(tree: &ParseTree, vocab: &Vocab) -> String {
    let mut out = String::new();
    write_tree(tree, vocab, &mut out);
    out
}

fn write_tree(tree: &ParseTree, vocab: &Vocab, out: &mut String) {
    if tree.is_leaf() {
        out.push_str(vocab.name(tree.root));
    } else {
        let _ = write!(out, "({}", vocab.name(tree.root));
        for c in &tree.children {
            out.push(' ');
            write_tree(c, vocab, out);
        }
        out.push(')');
    }
}

pub struct TreeDisplay<'a> {
    tree: &'a ParseTree,
    vocab: &'a Vocab,
}

impl std::fmt::Display for TreeDisplay<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&serialize(self.tree, self.vocab))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeTextError {
    #[error("unbalanced parentheses at byte {0}")]
    Unbalanced(usize),
    #[error("unknown label {name:?} at byte {at}")]
    UnknownLabel { name: String, at: usize },
    #[error("expected a label at byte {0}")]
    ExpectedLabel(usize),
    #[error("trailing input at byte {0}")]
    Trailing(usize),
    #[error("empty input")]
    Empty,
}

/// Parse the parenthesized form back into a tree. Whitespace-insensitive.
pub fn parse_tree(text: &str, vocab: &Vocab) -> Result<ParseTree, TreeTextError> {
    let mut lexer = Lexer {
        text,
        pos: 0,
    };
    let tree = parse_node(&mut lexer, vocab)?;
    match lexer.next()? {
        None => Ok(tree),
        Some((at, _)) => Err(TreeTextError::Trailing(at)),
    }
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<Option<(usize, Tok<'a>)>, TreeTextError> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return Ok(None);
        }
        let at = self.pos;
        match bytes[self.pos] {
            b'(' => {
                self.pos += 1;
                Ok(Some((at, Tok::Open)))
            }
            b')' => {
                self.pos += 1;
                Ok(Some((at, Tok::Close)))
            }
            _ => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && !bytes[self.pos].is_ascii_whitespace()
                    && bytes[self.pos] != b'('
                    && bytes[self.pos] != b')'
                {
                    self.pos += 1;
                }
                Ok(Some((at, Tok::Atom(&self.text[start..self.pos]))))
            }
        }
    }
}

fn parse_node(lexer: &mut Lexer, vocab: &Vocab) -> Result<ParseTree, TreeTextError> {
    match lexer.next()? {
        None => Err(TreeTextError::Empty),
        Some((at, Tok::Close)) => Err(TreeTextError::Unbalanced(at)),
        Some((at, Tok::Atom(name))) => {
            let root = vocab.lookup(name).ok_or_else(|| TreeTextError::UnknownLabel {
                name: name.to_string(),
                at,
            })?;
            Ok(ParseTree::leaf(root))
        }
        Some((open_at, Tok::Open)) => {
            let (at, root_name) = match lexer.next()? {
                Some((at, Tok::Atom(name))) => (at, name),
                Some((at, _)) => return Err(TreeTextError::ExpectedLabel(at)),
                None => return Err(TreeTextError::Unbalanced(open_at)),
            };
            let root = vocab
                .lookup(root_name)
                .ok_or_else(|| TreeTextError::UnknownLabel {
                    name: root_name.to_string(),
                    at,
                })?;
            let mut children = Vec::new();
            loop {
                let save = lexer.pos;
                match lexer.next()? {
                    Some((_, Tok::Close)) => break,
                    None => return Err(TreeTextError::Unbalanced(open_at)),
                    _ => {
                        lexer.pos = save;
                        children.push(parse_node(lexer, vocab)?);
                    }
                }
            }
            Ok(ParseTree::new(root, children))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn am_vocab() -> Vocab {
        Vocab::new(vec!["x", "y", "0", "1", "+", "*"], vec!["Id", "Lit", "Op+", "Op*"]).unwrap()
    }

    fn t(vocab: &Vocab, text: &str) -> ParseTree {
        parse_tree(text, vocab).unwrap()
    }

    #[test]
    fn size_counts_nodes() {
        let v = am_vocab();
        assert_eq!(t(&v, "x").size(), 1);
        // Op+ over two unary Id trees, five nodes in total.
        assert_eq!(t(&v, "(Op+ (Id x) (Id y))").size(), 5);
        assert_eq!(t(&v, "Id").size(), 1); // childless non-terminal
    }

    #[test]
    fn diff_identity_and_mismatches() {
        let v = am_vocab();
        let a = t(&v, "(Op+ (Id x) (Id y))");
        assert_eq!(diff(&a, &a), 0);
        // roots equal, first children equal, second children differ by root
        assert_eq!(diff(&t(&v, "(Op+ Id Lit)"), &t(&v, "(Op+ Id Id)")), 1);
        // surplus children charged by size
        assert_eq!(diff(&t(&v, "(Op+ x y 0)"), &t(&v, "(Op+ x)")), 2);
        assert_eq!(diff(&t(&v, "(Op+ x)"), &t(&v, "(Op+ x y 0)")), 2);
    }

    #[test]
    fn mindiff_examples() {
        let v = am_vocab();
        let target = t(&v, "(Op+ (Id x) (Id y))");
        // a leaf that occurs inside the target
        assert_eq!(mindiff(&t(&v, "x"), &target), 0);
        // any subtree of the target scores 0
        assert_eq!(mindiff(&t(&v, "(Id y)"), &target), 0);
        // best match is the whole tree with a root mismatch
        assert_eq!(mindiff(&t(&v, "(Op* (Id x) (Id y))"), &target), 1);
    }

    #[test]
    fn serialize_canonical_form() {
        let v = am_vocab();
        let tree = t(&v, "  ( Op+ (Id x)(Id y) ) ");
        assert_eq!(serialize(&tree, &v), "(Op+ (Id x) (Id y))");
    }

    #[test]
    fn parse_errors_report_position() {
        let v = am_vocab();
        assert_eq!(parse_tree("(Id", &v), Err(TreeTextError::Unbalanced(0)));
        assert_eq!(parse_tree(")", &v), Err(TreeTextError::Unbalanced(0)));
        assert!(matches!(
            parse_tree("(Zap x)", &v),
            Err(TreeTextError::UnknownLabel { at: 1, .. })
        ));
        assert_eq!(
            parse_tree("(Id x) y", &v),
            Err(TreeTextError::Trailing(7))
        );
        assert_eq!(parse_tree("", &v), Err(TreeTextError::Empty));
    }

    fn arb_tree() -> impl Strategy<Value = ParseTree> {
        let leaf = prop_oneof![
            (0u16..6).prop_map(|i| ParseTree::leaf(Label::Terminal(i))),
            (0u16..4).prop_map(|i| ParseTree::leaf(Label::NonTerminal(i))),
        ];
        leaf.prop_recursive(4, 20, 3, |inner| {
            ((0u16..4), prop::collection::vec(inner, 1..4))
                .prop_map(|(i, children)| ParseTree::new(Label::NonTerminal(i), children))
        })
    }

    proptest! {
        #[test]
        fn diff_is_zero_iff_equal(a in arb_tree(), b in arb_tree()) {
            prop_assert_eq!(diff(&a, &a), 0);
            prop_assert_eq!(diff(&a, &b) == 0, a == b);
        }

        #[test]
        fn mindiff_bounded_by_diff(a in arb_tree(), b in arb_tree()) {
            prop_assert!(mindiff(&a, &b) <= diff(&a, &b));
        }

        // mindiff via the subtree scan equals an independently written
        // enumeration of all subtree roots.
        #[test]
        fn mindiff_matches_explicit_enumeration(a in arb_tree(), b in arb_tree()) {
            fn collect<'t>(t: &'t ParseTree, out: &mut Vec<&'t ParseTree>) {
                out.push(t);
                for c in &t.children {
                    collect(c, out);
                }
            }
            let mut subs = Vec::new();
            collect(&b, &mut subs);
            let expect = subs.iter().map(|s| diff(&a, s)).min().unwrap();
            prop_assert_eq!(mindiff(&a, &b), expect);
        }

        #[test]
        fn text_roundtrip(a in arb_tree()) {
            let v = am_vocab();
            let text = serialize(&a, &v);
            prop_assert_eq!(parse_tree(&text, &v).unwrap(), a);
        }
    }
}
