//! The three concrete languages, their deterministic reference parsers,
//! random program generators, and dataset builders.

mod dataset;
mod generate;
mod oracle;

pub use dataset::{
    build_dataset, load_dataset, save_dataset, Dataset, DatasetError, DatasetKind, DatasetSpec,
    Example,
};
pub use generate::{generate_program, GenError};
pub use oracle::{oracle_parse, reference_controller, OracleError};

use std::fmt;
use std::str::FromStr;

use crate::machine::MachineConfig;
use crate::vocab::{Label, Vocab};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GrammarName {
    Am,
    While,
    Lambda,
}

impl fmt::Display for GrammarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrammarName::Am => "am",
            GrammarName::While => "while",
            GrammarName::Lambda => "lambda",
        })
    }
}

impl FromStr for GrammarName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "am" => Ok(GrammarName::Am),
            "while" => Ok(GrammarName::While),
            "lambda" => Ok(GrammarName::Lambda),
            other => Err(format!("unknown grammar {other:?} (am | while | lambda)")),
        }
    }
}

/// One symbol on a production's right-hand side.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sym {
    Terminal(Label),
    NonTerminal(Label),
}

impl Sym {
    pub fn label(self) -> Label {
        match self {
            Sym::Terminal(l) | Sym::NonTerminal(l) => l,
        }
    }
}

/// A single production alternative.
#[derive(Clone, Debug)]
pub struct Rule {
    pub lhs: Label,
    pub rhs: Vec<Sym>,
}

/// A concrete language: vocabulary, machine sizing, and generation templates.
#[derive(Clone, Debug)]
pub struct Grammar {
    pub name: GrammarName,
    pub vocab: Vocab,
    /// K, the frame-list capacity this language needs.
    pub max_list_len: usize,
    /// F, the number of function IDs given to the machine.
    pub num_fids: usize,
    rules: Vec<Rule>,
}

impl Grammar {
    pub fn by_name(name: GrammarName) -> Grammar {
        match name {
            GrammarName::Am => am(),
            GrammarName::While => while_lang(),
            GrammarName::Lambda => lambda(),
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn machine_config(&self, max_steps: usize) -> MachineConfig {
        MachineConfig::new(self.max_list_len, self.num_fids, max_steps)
    }

    pub fn machine_config_for_input(&self, input_len: usize) -> MachineConfig {
        self.machine_config(MachineConfig::default_max_steps(input_len))
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<Label>, crate::vocab::UnknownToken> {
        self.vocab.tokenize(text)
    }
}

/// Build the rule list from (lhs, rhs-as-space-separated-names) pairs.
fn rules_from_text(vocab: &Vocab, specs: &[(&str, &str)]) -> Vec<Rule> {
    specs
        .iter()
        .map(|(lhs, rhs)| Rule {
            lhs: vocab
                .non_terminal(lhs)
                .unwrap_or_else(|| panic!("unknown non-terminal {lhs}")),
            rhs: rhs
                .split_whitespace()
                .map(|s| match vocab.lookup(s) {
                    Some(l @ Label::Terminal(_)) => Sym::Terminal(l),
                    Some(l @ Label::NonTerminal(_)) => Sym::NonTerminal(l),
                    None => panic!("unknown symbol {s}"),
                })
                .collect(),
        })
        .collect()
}

/// The Addition-Multiplication toy language: expressions over x, y, 0, 1
/// with + and *, where * binds tighter and both operators associate left.
pub fn am() -> Grammar {
    let vocab = Vocab::new(
        vec!["x", "y", "0", "1", "+", "*"],
        vec!["Id", "Lit", "Op+", "Op*"],
    )
    .unwrap();
    let rules = rules_from_text(
        &vocab,
        &[
            ("Id", "x"),
            ("Id", "y"),
            ("Lit", "0"),
            ("Lit", "1"),
            ("Op*", "Id * Id"),
            ("Op*", "Id * Lit"),
            ("Op*", "Lit * Id"),
            ("Op*", "Lit * Lit"),
            ("Op*", "Op* * Id"),
            ("Op*", "Op* * Lit"),
            ("Op+", "Id + Id"),
            ("Op+", "Id + Lit"),
            ("Op+", "Id + Op*"),
            ("Op+", "Lit + Id"),
            ("Op+", "Lit + Lit"),
            ("Op+", "Lit + Op*"),
            ("Op+", "Op+ + Id"),
            ("Op+", "Op+ + Lit"),
            ("Op+", "Op+ + Op*"),
            ("Op+", "Op* + Id"),
            ("Op+", "Op* + Lit"),
            ("Op+", "Op* + Op*"),
        ],
    );
    Grammar {
        name: GrammarName::Am,
        vocab,
        max_list_len: 3,
        num_fids: 3,
        rules,
    }
}

/// The imperative WHILE language: 73 production alternatives over
/// assignments, conditionals, sequencing, and while loops.
pub fn while_lang() -> Grammar {
    let vocab = Vocab::new(
        vec![
            "x", "y", "0", "1", "+", "*", "==", "=", "if", ";", "while", "{", "}",
        ],
        vec![
            "Identifier",
            "Literal",
            "Op*",
            "Op+",
            "Eq",
            "Assign",
            "If",
            "Seq",
            "Block",
            "While",
        ],
    )
    .unwrap();
    let mut specs: Vec<(&str, &str)> = vec![("Identifier", "x"), ("Identifier", "y")];
    specs.push(("Literal", "0"));
    specs.push(("Literal", "1"));
    specs.extend([
        ("Op*", "Identifier * Identifier"),
        ("Op*", "Identifier * Literal"),
        ("Op*", "Literal * Identifier"),
        ("Op*", "Literal * Literal"),
        ("Op*", "Op* * Identifier"),
        ("Op*", "Op* * Literal"),
    ]);
    specs.extend([
        ("Op+", "Identifier + Identifier"),
        ("Op+", "Identifier + Literal"),
        ("Op+", "Identifier + Op*"),
        ("Op+", "Literal + Identifier"),
        ("Op+", "Literal + Literal"),
        ("Op+", "Literal + Op*"),
        ("Op+", "Op+ + Identifier"),
        ("Op+", "Op+ + Literal"),
        ("Op+", "Op+ + Op*"),
        ("Op+", "Op* + Identifier"),
        ("Op+", "Op* + Literal"),
        ("Op+", "Op* + Op*"),
    ]);
    specs.extend([
        ("Eq", "Identifier == Identifier"),
        ("Eq", "Identifier == Literal"),
        ("Eq", "Identifier == Op+"),
        ("Eq", "Identifier == Op*"),
        ("Eq", "Literal == Identifier"),
        ("Eq", "Literal == Literal"),
        ("Eq", "Literal == Op+"),
        ("Eq", "Literal == Op*"),
        ("Eq", "Op+ == Identifier"),
        ("Eq", "Op+ == Literal"),
        ("Eq", "Op+ == Op+"),
        ("Eq", "Op+ == Op*"),
        ("Eq", "Op* == Identifier"),
        ("Eq", "Op* == Literal"),
        ("Eq", "Op* == Op+"),
        ("Eq", "Op* == Op*"),
    ]);
    specs.extend([
        ("Assign", "Identifier = Identifier"),
        ("Assign", "Identifier = Literal"),
        ("Assign", "Identifier = Op+"),
        ("Assign", "Identifier = Op*"),
    ]);
    specs.extend([
        ("If", "Assign if Identifier"),
        ("If", "Assign if Literal"),
        ("If", "Assign if Op+"),
        ("If", "Assign if Op*"),
        ("If", "Assign if Eq"),
        ("If", "If if Identifier"),
        ("If", "If if Literal"),
        ("If", "If if Op+"),
        ("If", "If if Op*"),
        ("If", "If if Eq"),
    ]);
    specs.extend([
        ("Seq", "Assign ; Assign"),
        ("Seq", "Assign ; If"),
        ("Seq", "Assign ; While"),
        ("Seq", "If ; Assign"),
        ("Seq", "If ; If"),
        ("Seq", "If ; While"),
        ("Seq", "While ; Assign"),
        ("Seq", "While ; If"),
        ("Seq", "While ; While"),
        ("Seq", "Seq ; Assign"),
        ("Seq", "Seq ; If"),
        ("Seq", "Seq ; While"),
    ]);
    specs.extend([
        ("Block", "{ Assign }"),
        ("Block", "{ If }"),
        ("Block", "{ While }"),
        ("Block", "{ Seq }"),
    ]);
    specs.extend([
        ("While", "while Identifier Block"),
        ("While", "while Literal Block"),
        ("While", "while Op+ Block"),
        ("While", "while Op* Block"),
        ("While", "while Eq Block"),
    ]);
    let rules = rules_from_text(&vocab, &specs);
    debug_assert_eq!(rules.len(), 73);
    Grammar {
        name: GrammarName::While,
        vocab,
        max_list_len: 3,
        num_fids: 10,
        rules,
    }
}

/// The functional LAMBDA language: 66 production alternatives over
/// variables, application, lambda abstraction, and let bindings.
pub fn lambda() -> Grammar {
    let letters: Vec<String> = (b'a'..=b'z').map(|c| (c as char).to_string()).collect();
    let mut terminals: Vec<String> = letters.clone();
    terminals.extend(["lam", "let", "in", "=", "."].map(String::from));
    let vocab = Vocab::new(
        terminals,
        ["Var", "App", "Bind", "Lam", "LetExpr", "Let"]
            .map(String::from)
            .to_vec(),
    )
    .unwrap();
    let mut specs: Vec<(String, String)> = Vec::new();
    for l in &letters {
        specs.push(("Var".into(), l.clone()));
    }
    specs.push(("App".into(), "Var Var".into()));
    specs.push(("App".into(), "App Var".into()));
    for l in &letters {
        specs.push(("Bind".into(), format!("lam {l}")));
    }
    for body in ["Var", "App", "Lam", "Let"] {
        specs.push(("Lam".into(), format!("Bind . {body}")));
    }
    for value in ["Var", "App", "Lam", "Let"] {
        specs.push(("LetExpr".into(), format!("Var = {value}")));
    }
    for body in ["Var", "App", "Lam", "Let"] {
        specs.push(("Let".into(), format!("let LetExpr in {body}")));
    }
    let spec_refs: Vec<(&str, &str)> = specs
        .iter()
        .map(|(l, r)| (l.as_str(), r.as_str()))
        .collect();
    let rules = rules_from_text(&vocab, &spec_refs);
    debug_assert_eq!(rules.len(), 66);
    Grammar {
        name: GrammarName::Lambda,
        vocab,
        max_list_len: 4,
        num_fids: 10,
        rules,
    }
}
