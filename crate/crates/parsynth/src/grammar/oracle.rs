//! Deterministic reference parsers for the three languages.
//!
//! Each controller is a pure function of what the machine exposes: the top
//! frame's function ID, the root labels of its list, the next token, and the
//! stack depth. Function IDs encode "which operator opened this frame", which
//! is the only clue for deciding between SHIFT (keep associating) and RETURN
//! (close the sub-expression) when the lookahead is an operator.

use thiserror::Error;

use crate::machine::{run_controller, Instruction, MachineState};
use crate::vocab::{Label, Vocab};

use super::{Example, Grammar, GrammarName};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle stuck: {0}")]
    Stuck(String),
    #[error("input rejected: {0}")]
    Rejected(String),
}

/// Next instruction the reference parser would execute in this state.
pub fn reference_controller(
    grammar: &Grammar,
    state: &MachineState,
) -> Result<Instruction, OracleError> {
    match grammar.name {
        GrammarName::Am => am_next(&grammar.vocab, state),
        GrammarName::While => while_next(&grammar.vocab, state),
        GrammarName::Lambda => lambda_next(&grammar.vocab, state),
    }
}

/// Parse `tokens` with the reference controller, returning the example with
/// its ground-truth tree and the full oracle trace.
pub fn oracle_parse(grammar: &Grammar, tokens: Vec<Label>) -> Result<Example, OracleError> {
    let config = grammar.machine_config_for_input(tokens.len());
    let outcome = run_controller(tokens.clone(), &config, |state| {
        reference_controller(grammar, state)
    })
    .map_err(|failure| OracleError::Rejected(failure.to_string()))?;
    Ok(Example {
        tokens,
        tree: outcome.tree,
        oracle_trace: Some(outcome.trace),
    })
}

fn reduce(non_terminal: Label, positions: &[u8]) -> Instruction {
    Instruction::Reduce {
        non_terminal,
        positions: positions.to_vec(),
    }
}

fn term_name(vocab: &Vocab, label: Label) -> Option<&str> {
    label.is_terminal().then(|| vocab.name(label))
}

fn stuck(vocab: &Vocab, state: &MachineState, lang: &str) -> OracleError {
    let obs = state.observation();
    let roots: Vec<&str> = obs.roots.iter().map(|&r| vocab.name(r)).collect();
    OracleError::Stuck(format!(
        "{lang}: fid {} roots {:?} tok {:?} depth {}",
        obs.fid,
        roots,
        obs.tok.map(|t| vocab.name(t)),
        state.depth()
    ))
}

/// AM: the restriction of the WHILE parser to expressions. fid 0 is the top
/// level, fid 1 a frame opened after "+", fid 2 a frame opened after "*".
fn am_next(vocab: &Vocab, state: &MachineState) -> Result<Instruction, OracleError> {
    let obs = state.observation();
    let l = obs.roots.len();
    if l == 0 {
        return Ok(Instruction::Shift);
    }
    let tok_name = obs.tok.and_then(|t| term_name(vocab, t));
    if l == 1 {
        if let Some(name) = term_name(vocab, obs.roots[0]) {
            match name {
                "x" | "y" => return Ok(reduce(vocab.non_terminal("Id").unwrap(), &[1])),
                "0" | "1" => return Ok(reduce(vocab.non_terminal("Lit").unwrap(), &[1])),
                _ => {}
            }
        }
        return match tok_name {
            Some("+") => Ok(op_shift_or_return(obs.fid < 1)),
            Some("*") => Ok(op_shift_or_return(obs.fid < 2)),
            None if state.depth() == 1 => Ok(Instruction::Final),
            None => Ok(Instruction::Return),
            _ => Err(stuck(vocab, state, "am")),
        };
    }
    if l == 2 {
        let fid = match term_name(vocab, obs.roots[1]) {
            Some("+") => 1,
            Some("*") => 2,
            _ => return Err(stuck(vocab, state, "am")),
        };
        return Ok(Instruction::Call { fid });
    }
    // l == 3
    match term_name(vocab, obs.roots[1]) {
        Some("+") => Ok(reduce(vocab.non_terminal("Op+").unwrap(), &[1, 3])),
        Some("*") => Ok(reduce(vocab.non_terminal("Op*").unwrap(), &[1, 3])),
        _ => Err(stuck(vocab, state, "am")),
    }
}

fn op_shift_or_return(shift: bool) -> Instruction {
    if shift {
        Instruction::Shift
    } else {
        Instruction::Return
    }
}

/// WHILE: operator precedence is encoded in fid thresholds; ";" binds
/// loosest (fid 1), then "if", "=", "==", "+", "*" (fid 6). A while-loop
/// body frame also uses fid 6.
fn while_next(vocab: &Vocab, state: &MachineState) -> Result<Instruction, OracleError> {
    let obs = state.observation();
    let l = obs.roots.len();
    if l == 0 {
        return Ok(Instruction::Shift);
    }
    let nt = |name: &str| vocab.non_terminal(name).unwrap();
    let tok_name = obs.tok.and_then(|t| term_name(vocab, t));
    let root_name = |i: usize| term_name(vocab, obs.roots[i]);
    if l == 1 {
        match root_name(0) {
            Some("while") | Some("{") => return Ok(Instruction::Call { fid: 0 }),
            Some("x") | Some("y") => return Ok(reduce(nt("Identifier"), &[1])),
            Some("0") | Some("1") => return Ok(reduce(nt("Literal"), &[1])),
            _ => {}
        }
        let threshold = match tok_name {
            Some(";") => 1,
            Some("if") => 2,
            Some("=") => 3,
            Some("==") => 4,
            Some("+") => 5,
            Some("*") => 6,
            None => {
                return Ok(if state.depth() == 1 {
                    Instruction::Final
                } else {
                    Instruction::Return
                })
            }
            Some(_) => return Ok(Instruction::Return),
        };
        return Ok(op_shift_or_return(u16::from(obs.fid) < threshold));
    }
    if l == 2 {
        if root_name(0) == Some("{") && tok_name == Some("}") {
            return Ok(Instruction::Shift);
        }
        let fid = if root_name(0) == Some("while") {
            6
        } else {
            match root_name(1) {
                Some(";") => 1,
                Some("if") => 2,
                Some("=") => 3,
                Some("==") => 4,
                Some("+") => 5,
                Some("*") => 6,
                _ => 0,
            }
        };
        return Ok(Instruction::Call { fid });
    }
    // l == 3
    match root_name(1) {
        Some("=") => return Ok(reduce(nt("Assign"), &[1, 3])),
        Some("if") => return Ok(reduce(nt("If"), &[3, 1])),
        Some(";") => return Ok(reduce(nt("Seq"), &[1, 3])),
        _ => {}
    }
    if root_name(0) == Some("while") {
        return Ok(reduce(nt("While"), &[2, 3]));
    }
    if root_name(0) == Some("{") && root_name(2) == Some("}") {
        return Ok(reduce(nt("Block"), &[2]));
    }
    match root_name(1) {
        Some("+") => Ok(reduce(nt("Op+"), &[1, 3])),
        Some("*") => Ok(reduce(nt("Op*"), &[1, 3])),
        Some("==") => Ok(reduce(nt("Eq"), &[1, 3])),
        _ => Err(stuck(vocab, state, "while")),
    }
}

fn is_letter(name: &str) -> bool {
    name.len() == 1 && name.as_bytes()[0].is_ascii_lowercase()
}

/// LAMBDA: fid 1 marks a frame opened to parse the right operand of an
/// application; every other frame uses fid 0.
fn lambda_next(vocab: &Vocab, state: &MachineState) -> Result<Instruction, OracleError> {
    let obs = state.observation();
    let l = obs.roots.len();
    if l == 0 {
        return Ok(Instruction::Shift);
    }
    let nt = |name: &str| vocab.non_terminal(name).unwrap();
    let tok_name = obs.tok.and_then(|t| term_name(vocab, t));
    let root_name = |i: usize| term_name(vocab, obs.roots[i]);
    if l == 1 {
        match root_name(0) {
            Some("let") => return Ok(Instruction::Call { fid: 0 }),
            Some("lam") => return Ok(Instruction::Shift),
            Some(name) if is_letter(name) => return Ok(reduce(nt("Var"), &[1])),
            _ => {}
        }
        return match tok_name {
            Some(name) if is_letter(name) => Ok(if obs.fid == 0 {
                Instruction::Call { fid: 1 }
            } else {
                Instruction::Return
            }),
            Some("=") | Some(".") => Ok(Instruction::Shift),
            None if state.depth() > 1 => Ok(Instruction::Return),
            None => Ok(Instruction::Final),
            Some(_) if state.depth() > 1 => Ok(Instruction::Return),
            Some(_) => Err(stuck(vocab, state, "lambda")),
        };
    }
    if l == 2 {
        if root_name(0) == Some("let") {
            return Ok(Instruction::Shift);
        }
        if root_name(0) == Some("lam") {
            return Ok(reduce(nt("Bind"), &[2]));
        }
        if root_name(1) == Some("=") || obs.roots[0] == nt("Bind") {
            return Ok(Instruction::Call { fid: 0 });
        }
        return Ok(reduce(nt("App"), &[1, 2]));
    }
    if l == 3 {
        if root_name(0) == Some("let") || root_name(0) == Some("lam") {
            return Ok(Instruction::Call { fid: 0 });
        }
        let target = if obs.roots[0] == nt("Bind") {
            nt("Lam")
        } else {
            nt("LetExpr")
        };
        return Ok(reduce(target, &[1, 3]));
    }
    // l == 4
    Ok(reduce(nt("Let"), &[2, 4]))
}

/// Render a tree to text for tests and error messages.
#[cfg(test)]
fn show(grammar: &Grammar, tree: &crate::tree::ParseTree) -> String {
    crate::tree::serialize(tree, &grammar.vocab)
}
