//! Budget-directed random sentence generation.
//!
//! Top-down rule expansion with a token budget: each non-terminal slot gets
//! its minimal footprint plus a share of the remaining slack, and the sample
//! is rejected unless the final length lands within +/-20% of the target.

use rand::Rng;
use thiserror::Error;

use crate::vocab::Label;

use super::{Grammar, Rule, Sym};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("target length {target} is unreachable for {grammar}")]
    Unreachable { target: usize, grammar: String },
    #[error("gave up after {attempts} attempts targeting length {target}")]
    GaveUp { attempts: usize, target: usize },
}

/// Per-grammar tables the sampler needs; cheap to build, so built on demand.
struct GenTables {
    /// Minimal sentence length for each non-terminal.
    min_len: Vec<usize>,
    /// Whether each non-terminal can derive arbitrarily long sentences.
    growable: Vec<bool>,
    /// Maximal sentence length for non-growable non-terminals.
    max_len: Vec<usize>,
}

const INF: usize = usize::MAX / 4;

impl GenTables {
    fn build(grammar: &Grammar) -> GenTables {
        let n = grammar.vocab.num_non_terminals();
        let mut min_len = vec![INF; n];
        loop {
            let mut changed = false;
            for rule in grammar.rules() {
                let total: usize = rule
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Sym::Terminal(_) => 1,
                        Sym::NonTerminal(l) => min_len[l.index()],
                    })
                    .fold(0, usize::saturating_add);
                let slot = &mut min_len[rule.lhs.index()];
                if total < *slot {
                    *slot = total;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // a non-terminal can derive unboundedly long sentences exactly when
        // it reaches a derivation cycle
        let mut reach = vec![vec![false; n]; n];
        for rule in grammar.rules() {
            for sym in &rule.rhs {
                if let Sym::NonTerminal(l) = sym {
                    reach[rule.lhs.index()][l.index()] = true;
                }
            }
        }
        for via in 0..n {
            for a in 0..n {
                if reach[a][via] {
                    for b in 0..n {
                        if reach[via][b] {
                            reach[a][b] = true;
                        }
                    }
                }
            }
        }
        let growable: Vec<bool> = (0..n)
            .map(|a| reach[a][a] || (0..n).any(|b| reach[a][b] && reach[b][b]))
            .collect();
        // finite maxima exist only over the non-growable sub-grammar, which
        // is acyclic, so n rounds of relaxation converge
        let mut max_len = vec![0usize; n];
        for (i, &g) in growable.iter().enumerate() {
            if g {
                max_len[i] = INF;
            }
        }
        for _ in 0..=n {
            for rule in grammar.rules() {
                if growable[rule.lhs.index()] {
                    continue;
                }
                let total: usize = rule
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Sym::Terminal(_) => 1,
                        Sym::NonTerminal(l) => max_len[l.index()],
                    })
                    .fold(0, usize::saturating_add)
                    .min(INF);
                let slot = &mut max_len[rule.lhs.index()];
                if total > *slot {
                    *slot = total;
                }
            }
        }
        GenTables {
            min_len,
            growable,
            max_len,
        }
    }

    fn rule_min(&self, rule: &Rule) -> usize {
        rule.rhs
            .iter()
            .map(|s| match s {
                Sym::Terminal(_) => 1,
                Sym::NonTerminal(l) => self.min_len[l.index()],
            })
            .sum()
    }

    fn rule_growable(&self, rule: &Rule) -> bool {
        rule.rhs.iter().any(|s| match s {
            Sym::NonTerminal(l) => self.growable[l.index()],
            Sym::Terminal(_) => false,
        })
    }

    fn nt_max(&self, nt: Label) -> usize {
        self.max_len[nt.index()]
    }
}

/// Generate one token sequence in the language with length within +/-20% of
/// `target_len` (always at least the grammar's minimal sentence length).
pub fn generate_program(
    grammar: &Grammar,
    target_len: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Label>, GenError> {
    let tables = GenTables::build(grammar);
    let lo = ((target_len as f64) * 0.8).ceil() as usize;
    let hi = ((target_len as f64) * 1.2).floor() as usize;
    let starts: Vec<Label> = grammar
        .vocab
        .non_terminal_labels()
        .filter(|&nt| {
            let min = tables.min_len[nt.index()];
            min <= hi && (tables.growable[nt.index()] || tables.nt_max(nt) >= lo)
        })
        .collect();
    if starts.is_empty() {
        return Err(GenError::Unreachable {
            target: target_len,
            grammar: grammar.name.to_string(),
        });
    }
    const MAX_ATTEMPTS: usize = 10_000;
    for _ in 0..MAX_ATTEMPTS {
        let start = starts[rng.gen_range(0..starts.len())];
        let mut out = Vec::with_capacity(target_len + 4);
        expand(grammar, &tables, start, target_len.max(1), rng, &mut out);
        if (lo..=hi).contains(&out.len()) {
            return Ok(out);
        }
    }
    Err(GenError::GaveUp {
        attempts: MAX_ATTEMPTS,
        target: target_len,
    })
}

/// Expand one specific rule with every non-terminal slot at its minimal
/// footprint; the curriculum builder uses this for constructor coverage.
pub(super) fn expand_rule_minimal(
    grammar: &Grammar,
    rule: &Rule,
    rng: &mut impl Rng,
) -> Vec<Label> {
    let tables = GenTables::build(grammar);
    let mut out = Vec::new();
    for sym in &rule.rhs {
        match sym {
            Sym::Terminal(l) => out.push(*l),
            Sym::NonTerminal(l) => {
                expand(grammar, &tables, *l, tables.min_len[l.index()], rng, &mut out)
            }
        }
    }
    out
}

fn expand(
    grammar: &Grammar,
    tables: &GenTables,
    nt: Label,
    budget: usize,
    rng: &mut impl Rng,
    out: &mut Vec<Label>,
) {
    let feasible: Vec<&Rule> = grammar
        .rules()
        .iter()
        .filter(|r| r.lhs == nt && tables.rule_min(r) <= budget)
        .collect();
    let candidates: Vec<&Rule> = if budget > tables.min_len[nt.index()].saturating_mul(2) {
        // plenty of budget left: steer toward rules that can keep growing
        let growing: Vec<&Rule> = feasible
            .iter()
            .copied()
            .filter(|r| tables.rule_growable(r))
            .collect();
        if growing.is_empty() {
            feasible
        } else {
            growing
        }
    } else {
        feasible
    };
    let rule = if candidates.is_empty() {
        // over-constrained; fall back to a minimal alternative
        grammar
            .rules()
            .iter()
            .filter(|r| r.lhs == nt)
            .min_by_key(|r| tables.rule_min(r))
            .expect("every non-terminal has at least one rule")
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    };
    // hand out the slack over the non-terminal slots, last growable slot
    // absorbing whatever is left
    let mut slack = budget.saturating_sub(tables.rule_min(rule));
    let last_growable = rule.rhs.iter().rposition(|s| match s {
        Sym::NonTerminal(l) => tables.growable[l.index()],
        Sym::Terminal(_) => false,
    });
    for (i, sym) in rule.rhs.iter().enumerate() {
        match sym {
            Sym::Terminal(l) => out.push(*l),
            Sym::NonTerminal(l) => {
                let min = tables.min_len[l.index()];
                let cap = if tables.growable[l.index()] {
                    slack
                } else {
                    slack.min(tables.nt_max(*l).saturating_sub(min))
                };
                let share = if Some(i) == last_growable {
                    cap
                } else if cap > 0 {
                    rng.gen_range(0..=cap)
                } else {
                    0
                };
                slack -= share;
                expand(grammar, tables, *l, min + share, rng, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{am, lambda, oracle_parse, while_lang};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn am_length_three_is_binary_op() {
        let g = am();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let toks = generate_program(&g, 3, &mut rng).unwrap();
            assert_eq!(toks.len(), 3);
            let names: Vec<&str> = toks.iter().map(|&t| g.vocab.name(t)).collect();
            assert!(["+", "*"].contains(&names[1]), "{names:?}");
            assert!(["x", "y", "0", "1"].contains(&names[0]));
            assert!(["x", "y", "0", "1"].contains(&names[2]));
        }
    }

    #[test]
    fn generated_lengths_land_in_band() {
        for grammar in [am(), while_lang(), lambda()] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for target in [10usize, 30, 50] {
                let lo = ((target as f64) * 0.8).ceil() as usize;
                let hi = ((target as f64) * 1.2).floor() as usize;
                for _ in 0..20 {
                    let toks = generate_program(&grammar, target, &mut rng).unwrap();
                    assert!(
                        (lo..=hi).contains(&toks.len()),
                        "{}: target {target} produced {}",
                        grammar.name,
                        toks.len()
                    );
                }
            }
        }
    }

    #[test]
    fn generated_programs_parse_under_the_oracle() {
        for grammar in [am(), while_lang(), lambda()] {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for target in [5usize, 12, 25] {
                for _ in 0..30 {
                    let toks = generate_program(&grammar, target, &mut rng).unwrap();
                    let text = grammar.vocab.detokenize(&toks);
                    oracle_parse(&grammar, toks)
                        .unwrap_or_else(|e| panic!("{}: {text:?}: {e}", grammar.name));
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = while_lang();
        let a = generate_program(&g, 20, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = generate_program(&g, 20, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}
