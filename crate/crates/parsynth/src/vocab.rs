//! Terminal / non-terminal vocabularies.
//!
//! Terminals and non-terminals live in disjoint id spaces; a [`Label`]
//! carries both the kind and the index into the owning [`Vocab`].

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// A node label: either a terminal token or a non-terminal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Label {
    Terminal(u16),
    NonTerminal(u16),
}

impl Label {
    pub fn is_terminal(self) -> bool {
        matches!(self, Label::Terminal(_))
    }

    pub fn is_non_terminal(self) -> bool {
        matches!(self, Label::NonTerminal(_))
    }

    /// Index within its own (terminal or non-terminal) space.
    pub fn index(self) -> usize {
        match self {
            Label::Terminal(i) | Label::NonTerminal(i) => i as usize,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("duplicate name {0:?} in vocabulary")]
    Duplicate(String),
    #[error("terminal and non-terminal sets must be disjoint, both contain {0:?}")]
    Overlap(String),
}

/// Name <-> id maps for one grammar's label sets.
#[derive(Clone, Debug)]
pub struct Vocab {
    terminals: Vec<String>,
    non_terminals: Vec<String>,
    by_name: HashMap<String, Label>,
}

impl Vocab {
    pub fn new<S: Into<String>>(
        terminals: impl IntoIterator<Item = S>,
        non_terminals: impl IntoIterator<Item = S>,
    ) -> Result<Self, VocabError> {
        let mut vocab = Vocab {
            terminals: Vec::new(),
            non_terminals: Vec::new(),
            by_name: HashMap::new(),
        };
        for name in terminals {
            let name = name.into();
            let label = Label::Terminal(vocab.terminals.len() as u16);
            if vocab.by_name.insert(name.clone(), label).is_some() {
                return Err(VocabError::Duplicate(name));
            }
            vocab.terminals.push(name);
        }
        for name in non_terminals {
            let name = name.into();
            let label = Label::NonTerminal(vocab.non_terminals.len() as u16);
            match vocab.by_name.insert(name.clone(), label) {
                Some(Label::Terminal(_)) => return Err(VocabError::Overlap(name)),
                Some(Label::NonTerminal(_)) => return Err(VocabError::Duplicate(name)),
                None => {}
            }
            vocab.non_terminals.push(name);
        }
        Ok(vocab)
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn num_non_terminals(&self) -> usize {
        self.non_terminals.len()
    }

    pub fn lookup(&self, name: &str) -> Option<Label> {
        self.by_name.get(name).copied()
    }

    pub fn terminal(&self, name: &str) -> Option<Label> {
        self.lookup(name).filter(|l| l.is_terminal())
    }

    pub fn non_terminal(&self, name: &str) -> Option<Label> {
        self.lookup(name).filter(|l| l.is_non_terminal())
    }

    pub fn name(&self, label: Label) -> &str {
        match label {
            Label::Terminal(i) => &self.terminals[i as usize],
            Label::NonTerminal(i) => &self.non_terminals[i as usize],
        }
    }

    pub fn terminal_names(&self) -> &[String] {
        &self.terminals
    }

    pub fn non_terminal_names(&self) -> &[String] {
        &self.non_terminals
    }

    /// All non-terminal labels in id order.
    pub fn non_terminal_labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.non_terminals.len()).map(|i| Label::NonTerminal(i as u16))
    }

    /// Split a whitespace-separated token string against the terminal set.
    pub fn tokenize(&self, text: &str) -> Result<Vec<Label>, UnknownToken> {
        text.split_whitespace()
            .map(|t| {
                self.terminal(t).ok_or_else(|| UnknownToken {
                    token: t.to_string(),
                })
            })
            .collect()
    }

    /// Render a token sequence back to space-separated text.
    pub fn detokenize(&self, tokens: &[Label]) -> String {
        tokens
            .iter()
            .map(|&l| self.name(l))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown token {token:?}")]
pub struct UnknownToken {
    pub token: String,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Terminal(i) => write!(f, "t{i}"),
            Label::NonTerminal(i) => write!(f, "n{i}"),
        }
    }
}
