//! Training and test pools: curricula, random pools, and the line-oriented
//! dataset file format.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::machine::Instruction;
use crate::tree::{parse_tree, serialize, ParseTree};
use crate::vocab::Label;

use super::{generate_program, oracle_parse, Grammar, GrammarName};

/// One training or test instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub tokens: Vec<Label>,
    pub tree: ParseTree,
    pub oracle_trace: Option<Vec<Instruction>>,
}

impl Example {
    pub fn input_text(&self, grammar: &Grammar) -> String {
        grammar.vocab.detokenize(&self.tokens)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    /// Length-ordered lessons trained in sequence.
    Curriculum,
    /// A flat pool of examples.
    Pool,
}

/// What to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetSpec {
    Curriculum,
    /// Curriculum plus `count` random programs averaging `avg_len` tokens.
    Std { avg_len: usize, count: usize },
    /// `count` random programs averaging `avg_len` tokens, disjoint from the
    /// curriculum built with the same seed.
    Test { avg_len: usize, count: usize },
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub grammar_name: GrammarName,
    pub kind: DatasetKind,
    pub lessons: Vec<Vec<Example>>,
    pub seed: u64,
}

impl Dataset {
    pub fn examples(&self) -> impl Iterator<Item = &Example> {
        self.lessons.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.lessons.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean_input_len(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let total: usize = self.examples().map(|e| e.tokens.len()).sum();
        total as f64 / self.len() as f64
    }
}

/// Derive a per-item generator from the dataset seed.
pub(crate) fn derived_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Build a dataset. Deterministic given (grammar, spec, seed).
pub fn build_dataset(grammar: &Grammar, spec: DatasetSpec, seed: u64) -> Dataset {
    match spec {
        DatasetSpec::Curriculum => build_curriculum(grammar, seed),
        DatasetSpec::Std { avg_len, count } => {
            let curriculum = build_curriculum(grammar, seed);
            let mut seen: HashSet<Vec<Label>> = curriculum
                .examples()
                .map(|e| e.tokens.clone())
                .collect();
            let mut pool: Vec<Example> =
                curriculum.lessons.into_iter().flatten().collect();
            pool.extend(random_pool(grammar, avg_len, count, seed, &mut seen));
            Dataset {
                name: format!("{}-std-{avg_len}", grammar.name),
                grammar_name: grammar.name,
                kind: DatasetKind::Pool,
                lessons: vec![pool],
                seed,
            }
        }
        DatasetSpec::Test { avg_len, count } => {
            // keep test pools disjoint from the training samples built with
            // the same seed
            let curriculum = build_curriculum(grammar, seed);
            let mut seen: HashSet<Vec<Label>> = curriculum
                .examples()
                .map(|e| e.tokens.clone())
                .collect();
            let pool = random_pool(grammar, avg_len, count, seed.wrapping_add(0x7E57), &mut seen);
            Dataset {
                name: format!("{}-test-{avg_len}", grammar.name),
                grammar_name: grammar.name,
                kind: DatasetKind::Pool,
                lessons: vec![pool],
                seed,
            }
        }
    }
}

fn random_pool(
    grammar: &Grammar,
    avg_len: usize,
    count: usize,
    seed: u64,
    seen: &mut HashSet<Vec<Label>>,
) -> Vec<Example> {
    let mut out = Vec::with_capacity(count);
    let mut index = 0u64;
    while out.len() < count {
        let mut rng = derived_rng(seed, index);
        index += 1;
        let tokens = match generate_program(grammar, avg_len, &mut rng) {
            Ok(t) => t,
            Err(e) => panic!("generation failed for {}: {e}", grammar.name),
        };
        if !seen.insert(tokens.clone()) {
            continue;
        }
        let example = oracle_parse(grammar, tokens)
            .expect("generated program must parse under the reference controller");
        out.push(example);
    }
    out
}

/// The fixed 24-example AM curriculum, lessons of 6 / 10 / 8 examples at
/// input lengths 3 / 5 / 7.
const AM_CURRICULUM: [&[&str]; 3] = [
    &["x + y", "x * y", "x + 0", "x * 0", "0 + 1", "0 * 1"],
    &[
        "y + x + 0",
        "y + 0 + x",
        "0 + x + y",
        "y * x * 0",
        "y * 0 * x",
        "0 * x * y",
        "y * x + 0",
        "y + x * 0",
        "0 * 1 + x",
        "0 + 1 * x",
    ],
    &[
        "y + 1 + x + 0",
        "y + 1 + x * 0",
        "y + 1 * x + 0",
        "y + 1 * x * 0",
        "y * 1 + x + 0",
        "y * 1 + x * 0",
        "y * 1 * x + 0",
        "y * 1 * x * 0",
    ],
];

fn build_curriculum(grammar: &Grammar, seed: u64) -> Dataset {
    let lessons = match grammar.name {
        GrammarName::Am => AM_CURRICULUM
            .iter()
            .map(|lesson| {
                lesson
                    .iter()
                    .map(|text| {
                        oracle_parse(grammar, grammar.tokenize(text).unwrap())
                            .expect("AM curriculum entries parse")
                    })
                    .collect()
            })
            .collect(),
        GrammarName::While => constructor_curriculum(grammar, seed, &[3, 5, 7, 9, 12, 16]),
        GrammarName::Lambda => constructor_curriculum(grammar, seed, &[2, 4, 6, 9, 12, 16]),
    };
    Dataset {
        name: format!("{}-curriculum", grammar.name),
        grammar_name: grammar.name,
        kind: DatasetKind::Curriculum,
        lessons,
        seed,
    }
}

/// Cover every production alternative at the root with minimal
/// sub-expansions, then bucket by token length into lessons.
fn constructor_curriculum(grammar: &Grammar, seed: u64, buckets: &[usize]) -> Vec<Vec<Example>> {
    const LO: usize = 100;
    const HI: usize = 150;
    let mut seen: HashSet<Vec<Label>> = HashSet::new();
    let mut examples: Vec<Example> = Vec::new();
    let mut round = 0u64;
    while examples.len() < LO && round < 16 {
        for (rule_idx, rule) in grammar.rules().iter().enumerate() {
            if examples.len() >= HI {
                break;
            }
            let mut rng = derived_rng(seed, (round << 32) | rule_idx as u64);
            let tokens = super::generate::expand_rule_minimal(grammar, rule, &mut rng);
            if seen.insert(tokens.clone()) {
                let example = oracle_parse(grammar, tokens)
                    .expect("curriculum expansion must parse under the reference controller");
                examples.push(example);
            }
        }
        round += 1;
    }
    assert!(
        (LO..=HI).contains(&examples.len()),
        "curriculum for {} has {} examples",
        grammar.name,
        examples.len()
    );
    // bucket by token length; lessons end up ordered by length
    let mut lessons: Vec<Vec<Example>> = vec![Vec::new(); buckets.len()];
    for example in examples {
        let len = example.tokens.len();
        let slot = buckets
            .iter()
            .position(|&b| len <= b)
            .unwrap_or_else(|| panic!("curriculum example of length {len} exceeds buckets"));
        lessons[slot].push(example);
    }
    lessons.retain(|l| !l.is_empty());
    for lesson in &mut lessons {
        lesson.sort_by_key(|e| (e.tokens.len(), e.tokens.clone()));
    }
    lessons
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Write the line format: `<tokens> \t <tree> [\t <trace>]` with `# lesson N`
/// separators for curricula.
pub fn save_dataset(path: &Path, grammar: &Grammar, dataset: &Dataset) -> Result<(), DatasetError> {
    let mut out = String::new();
    let _ = writeln!(out, "# parsynth dataset v1");
    let _ = writeln!(out, "# grammar: {}", dataset.grammar_name);
    let _ = writeln!(
        out,
        "# kind: {}",
        match dataset.kind {
            DatasetKind::Curriculum => "curriculum",
            DatasetKind::Pool => "pool",
        }
    );
    let _ = writeln!(out, "# name: {}", dataset.name);
    let _ = writeln!(out, "# seed: {}", dataset.seed);
    for (i, lesson) in dataset.lessons.iter().enumerate() {
        if dataset.kind == DatasetKind::Curriculum {
            let _ = writeln!(out, "# lesson {}", i + 1);
        }
        for example in lesson {
            let tokens = grammar.vocab.detokenize(&example.tokens);
            let tree = serialize(&example.tree, &grammar.vocab);
            match &example.oracle_trace {
                Some(trace) => {
                    let trace_text = trace
                        .iter()
                        .map(|inst| inst.display(&grammar.vocab).to_string())
                        .collect::<Vec<_>>()
                        .join(" ; ");
                    let _ = writeln!(out, "{tokens}\t{tree}\t{trace_text}");
                }
                None => {
                    let _ = writeln!(out, "{tokens}\t{tree}");
                }
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load a dataset file; the grammar is recovered from the header.
pub fn load_dataset(path: &Path) -> Result<(Grammar, Dataset), DatasetError> {
    let text = std::fs::read_to_string(path)?;
    let mut grammar: Option<Grammar> = None;
    let mut kind = DatasetKind::Pool;
    let mut name = String::new();
    let mut seed = 0u64;
    let mut lessons: Vec<Vec<Example>> = vec![Vec::new()];
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(value) = rest.strip_prefix("grammar:") {
                let parsed = value.trim().parse::<GrammarName>().map_err(|e| {
                    DatasetError::Malformed {
                        line: lineno,
                        message: e,
                    }
                })?;
                grammar = Some(Grammar::by_name(parsed));
            } else if let Some(value) = rest.strip_prefix("kind:") {
                kind = match value.trim() {
                    "curriculum" => DatasetKind::Curriculum,
                    "pool" => DatasetKind::Pool,
                    other => {
                        return Err(DatasetError::Malformed {
                            line: lineno,
                            message: format!("unknown kind {other:?}"),
                        })
                    }
                };
            } else if let Some(value) = rest.strip_prefix("name:") {
                name = value.trim().to_string();
            } else if let Some(value) = rest.strip_prefix("seed:") {
                seed = value.trim().parse().unwrap_or(0);
            } else if let Some(value) = rest.strip_prefix("lesson") {
                let n: usize = value.trim().parse().map_err(|_| DatasetError::Malformed {
                    line: lineno,
                    message: "bad lesson number".into(),
                })?;
                while lessons.len() < n {
                    lessons.push(Vec::new());
                }
            }
            continue;
        }
        let grammar = grammar.as_ref().ok_or_else(|| DatasetError::Malformed {
            line: lineno,
            message: "example before grammar header".into(),
        })?;
        let mut fields = line.split('\t');
        let tokens_text = fields.next().unwrap_or_default();
        let tree_text = fields.next().ok_or_else(|| DatasetError::Malformed {
            line: lineno,
            message: "missing tree field".into(),
        })?;
        let tokens = grammar
            .vocab
            .tokenize(tokens_text)
            .map_err(|e| DatasetError::Malformed {
                line: lineno,
                message: e.to_string(),
            })?;
        let tree = parse_tree(tree_text, &grammar.vocab).map_err(|e| DatasetError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        let oracle_trace = match fields.next() {
            Some(trace_text) => Some(
                trace_text
                    .split(" ; ")
                    .map(|part| Instruction::parse(part, &grammar.vocab))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| DatasetError::Malformed {
                        line: lineno,
                        message: e.to_string(),
                    })?,
            ),
            None => None,
        };
        lessons.last_mut().unwrap().push(Example {
            tokens,
            tree,
            oracle_trace,
        });
    }
    let grammar = grammar.ok_or(DatasetError::Malformed {
        line: 0,
        message: "missing grammar header".into(),
    })?;
    lessons.retain(|l| !l.is_empty());
    let dataset = Dataset {
        name,
        grammar_name: grammar.name,
        kind,
        lessons,
        seed,
    };
    Ok((grammar, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{am, lambda, while_lang};
    use crate::machine::replay_trace;

    #[test]
    fn am_curriculum_matches_the_fixed_training_set() {
        let g = am();
        let ds = build_dataset(&g, DatasetSpec::Curriculum, 0);
        assert_eq!(ds.len(), 24);
        let sizes: Vec<usize> = ds.lessons.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![6, 10, 8]);
        let lesson1: Vec<String> = ds.lessons[0]
            .iter()
            .map(|e| e.input_text(&g))
            .collect();
        assert_eq!(
            lesson1,
            vec!["x + y", "x * y", "x + 0", "x * 0", "0 + 1", "0 * 1"]
        );
    }

    #[test]
    fn constructor_curricula_cover_every_rule_at_the_root() {
        for grammar in [while_lang(), lambda()] {
            let ds = build_dataset(&grammar, DatasetSpec::Curriculum, 42);
            assert!(
                (100..=150).contains(&ds.len()),
                "{}: {} examples",
                grammar.name,
                ds.len()
            );
            // every production alternative appears as the root rule of some
            // example: check root label plus child labels against the rule
            for rule in grammar.rules() {
                let covered = ds.examples().any(|e| root_matches_rule(&grammar, e, rule));
                assert!(
                    covered,
                    "{}: rule {} ::= {:?} uncovered",
                    grammar.name,
                    grammar.vocab.name(rule.lhs),
                    rule.rhs
                        .iter()
                        .map(|s| grammar.vocab.name(s.label()))
                        .collect::<Vec<_>>()
                );
            }
            // lessons ordered by non-decreasing input length
            let maxima: Vec<usize> = ds
                .lessons
                .iter()
                .map(|l| l.iter().map(|e| e.tokens.len()).max().unwrap())
                .collect();
            let minima: Vec<usize> = ds
                .lessons
                .iter()
                .map(|l| l.iter().map(|e| e.tokens.len()).min().unwrap())
                .collect();
            for i in 1..maxima.len() {
                assert!(minima[i] >= maxima[i - 1]);
            }
        }
    }

    /// Does the example's tree use `rule` at the root? The machine drops
    /// operator tokens, so compare the non-terminal children in order and
    /// the terminal children for unit rules.
    fn root_matches_rule(grammar: &Grammar, example: &Example, rule: &super::super::Rule) -> bool {
        use super::super::Sym;
        if example.tree.root != rule.lhs {
            return false;
        }
        let rhs_nts: Vec<Label> = rule
            .rhs
            .iter()
            .filter_map(|s| match s {
                Sym::NonTerminal(l) => Some(*l),
                Sym::Terminal(_) => None,
            })
            .collect();
        if rhs_nts.is_empty() {
            // unit rule over terminals: children are the kept terminals
            let rhs_terms: Vec<Label> = rule.rhs.iter().map(|s| s.label()).collect();
            return example
                .tree
                .children
                .iter()
                .all(|c| rhs_terms.contains(&c.root))
                && !example.tree.children.is_empty();
        }
        let child_roots: Vec<Label> = example.tree.children.iter().map(|c| c.root).collect();
        // If-roots store (condition, body) with the body derived from the
        // rule's first non-terminal; everything else keeps rule order.
        let mut expect = rhs_nts;
        if grammar.vocab.name(rule.lhs) == "If" {
            expect.reverse();
        }
        child_roots == expect
    }

    #[test]
    fn datasets_are_deterministic_and_disjoint() {
        let g = while_lang();
        let a = build_dataset(&g, DatasetSpec::Test { avg_len: 10, count: 50 }, 9);
        let b = build_dataset(&g, DatasetSpec::Test { avg_len: 10, count: 50 }, 9);
        assert_eq!(a.lessons[0], b.lessons[0]);
        let curriculum = build_dataset(&g, DatasetSpec::Curriculum, 9);
        let train: HashSet<Vec<Label>> =
            curriculum.examples().map(|e| e.tokens.clone()).collect();
        assert!(a.examples().all(|e| !train.contains(&e.tokens)));
        let mean = a.mean_input_len();
        assert!((8.0..=12.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn std_pool_includes_the_curriculum() {
        let g = am();
        let ds = build_dataset(&g, DatasetSpec::Std { avg_len: 10, count: 30 }, 3);
        assert_eq!(ds.len(), 24 + 30);
        assert_eq!(ds.kind, DatasetKind::Pool);
    }

    #[test]
    fn file_roundtrip_preserves_everything() {
        let g = lambda();
        let ds = build_dataset(&g, DatasetSpec::Curriculum, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lambda.tsv");
        save_dataset(&path, &g, &ds).unwrap();
        let (g2, loaded) = load_dataset(&path).unwrap();
        assert_eq!(g2.name, GrammarName::Lambda);
        assert_eq!(loaded.kind, DatasetKind::Curriculum);
        assert_eq!(loaded.lessons.len(), ds.lessons.len());
        for (a, b) in loaded.examples().zip(ds.examples()) {
            assert_eq!(a, b);
        }
        // byte-identical on re-save
        let path2 = dir.path().join("again.tsv");
        save_dataset(&path2, &g2, &loaded).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn curriculum_traces_replay_to_their_trees() {
        let g = while_lang();
        let ds = build_dataset(&g, DatasetSpec::Curriculum, 1);
        for example in ds.examples() {
            let config = g.machine_config_for_input(example.tokens.len());
            let tree = replay_trace(
                example.tokens.clone(),
                &config,
                example.oracle_trace.as_ref().unwrap(),
            )
            .unwrap();
            assert_eq!(tree, example.tree, "{}", example.input_text(&g));
        }
    }
}
