//! Brute-force trace counting.
//!
//! Enumerates every valid instruction-kind trace of a given length, counts
//! full execution traces through the argument-independence identity, and
//! counts traces that reproduce a specific ground-truth tree. Stack-shape
//! evolution depends only on instruction kinds, never on argument values:
//! REDUCE always collapses the top list to one element. Execution traces
//! are therefore counted as (kind, CALL fid, REDUCE n) sequences — a CALL
//! step contributes F choices and a REDUCE step contributes one per
//! non-terminal, while the position list is tied to n by the controller and
//! adds no census entropy.

use thiserror::Error;

use crate::grammar::{oracle_parse, Example, Grammar};
use crate::machine::{InstructionKind, MachineConfig};
use crate::tree::ParseTree;
use crate::vocab::Label;

/// Counts for one input, at the shortest correct trace length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCensus {
    pub input: String,
    pub input_len: usize,
    pub trace_len: usize,
    pub valid_kind_traces: u64,
    pub valid_exec_traces: u128,
    pub correct_kind_traces: u64,
    pub correct_exec_traces: u128,
}

#[derive(Clone, Copy, Debug)]
pub struct CensusOptions {
    /// Refuse inputs longer than this; the space grows exponentially.
    pub max_input_len: usize,
    /// Refuse once this many kind traces have been collected.
    pub max_kind_traces: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            max_input_len: 9,
            max_kind_traces: 3_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("input of length {len} exceeds the census budget (max {max}); refusing rather than hanging")]
    TooLong { len: usize, max: usize },
    #[error("kind-trace set exceeded the census budget of {max}")]
    TooManyTraces { max: usize },
    #[error("no correct trace found within length {cap}")]
    NoCorrectTrace { cap: usize },
    #[error("oracle rejected the input: {0}")]
    Oracle(String),
}

/// Frame shapes only: the list lengths from stack bottom to top.
#[derive(Clone)]
struct ShapeState {
    lens: Vec<usize>,
    remaining: usize,
    last: Option<InstructionKind>,
}

impl ShapeState {
    fn new(input_len: usize) -> Self {
        ShapeState {
            lens: vec![0],
            remaining: input_len,
            last: None,
        }
    }

    fn top(&self) -> usize {
        *self.lens.last().unwrap()
    }

    fn depth(&self) -> usize {
        self.lens.len()
    }

    fn allows(&self, kind: InstructionKind, config: &MachineConfig) -> bool {
        let l = self.top();
        let k = config.max_list_len;
        match kind {
            InstructionKind::Shift => self.remaining > 0 && l < k,
            InstructionKind::Call => {
                self.remaining > 0 && 0 < l && l < k && self.last != Some(InstructionKind::Call)
            }
            InstructionKind::Return => self.depth() > 1 && l == 1,
            InstructionKind::Reduce => l > 0 && self.last != Some(InstructionKind::Reduce),
            InstructionKind::Final => self.remaining == 0 && l == 1 && self.depth() == 1,
        }
    }

    fn apply(&mut self, kind: InstructionKind) {
        match kind {
            InstructionKind::Shift => {
                *self.lens.last_mut().unwrap() += 1;
                self.remaining -= 1;
            }
            InstructionKind::Call => self.lens.push(0),
            InstructionKind::Return => {
                self.lens.pop();
                *self.lens.last_mut().unwrap() += 1;
            }
            InstructionKind::Reduce => *self.lens.last_mut().unwrap() = 1,
            InstructionKind::Final => {}
        }
        self.last = Some(kind);
    }

    /// Cheapest possible completion: shift everything, return from every
    /// frame, terminate.
    fn min_steps_to_final(&self) -> usize {
        self.remaining + (self.depth() - 1) + 1
    }
}

/// All valid kind traces of exactly `exact_len` steps ending in FINAL.
pub fn enumerate_kind_traces(
    input_len: usize,
    config: &MachineConfig,
    exact_len: usize,
) -> Vec<Vec<InstructionKind>> {
    let mut results = Vec::new();
    let mut trace = Vec::with_capacity(exact_len);
    let mut state = ShapeState::new(input_len);
    enumerate_kinds_rec(&mut state, config, exact_len, &mut trace, &mut |t| {
        results.push(t.to_vec());
        true
    });
    results
}

/// Visit every valid kind trace of exactly `exact_len`; the visitor returns
/// false to abort the walk.
fn enumerate_kinds_rec(
    state: &mut ShapeState,
    config: &MachineConfig,
    exact_len: usize,
    trace: &mut Vec<InstructionKind>,
    visit: &mut impl FnMut(&[InstructionKind]) -> bool,
) -> bool {
    for kind in InstructionKind::ALL {
        if !state.allows(kind, config) {
            continue;
        }
        if kind == InstructionKind::Final {
            if trace.len() + 1 == exact_len {
                trace.push(kind);
                let keep_going = visit(trace);
                trace.pop();
                if !keep_going {
                    return false;
                }
            }
            continue;
        }
        let saved = state.clone();
        state.apply(kind);
        if trace.len() + 1 + state.min_steps_to_final() <= exact_len {
            trace.push(kind);
            let keep_going = enumerate_kinds_rec(state, config, exact_len, trace, visit);
            trace.pop();
            if !keep_going {
                *state = saved;
                return false;
            }
        }
        *state = saved;
    }
    true
}

/// Count full execution traces instantiating a set of kind traces:
/// per trace, F choices per CALL and one per non-terminal per REDUCE.
pub fn count_exec_traces(
    kind_traces: &[Vec<InstructionKind>],
    config: &MachineConfig,
    num_non_terminals: usize,
) -> u128 {
    kind_traces
        .iter()
        .map(|t| exec_weight(t, config, num_non_terminals))
        .sum()
}

fn exec_weight(trace: &[InstructionKind], config: &MachineConfig, num_nts: usize) -> u128 {
    let mut weight: u128 = 1;
    for kind in trace {
        match kind {
            InstructionKind::Call => weight *= config.num_fids as u128,
            InstructionKind::Reduce => weight *= num_nts as u128,
            _ => {}
        }
    }
    weight
}

/// Independent cross-check of the product formula: drive real machine
/// states through every (kind, fid, n) instruction sequence and count the
/// ones reaching FINAL at exactly `exact_len` steps. Position lists are
/// fixed to `[1]` since they never influence the stack shape.
pub fn count_exec_traces_by_stepping(
    tokens: &[Label],
    config: &MachineConfig,
    non_terminals: &[Label],
    exact_len: usize,
) -> u128 {
    use crate::machine::{Instruction, MachineState};

    fn rec(
        state: &MachineState,
        config: &MachineConfig,
        non_terminals: &[Label],
        exact_len: usize,
    ) -> u128 {
        let mut total = 0u128;
        let valid = state.valid_kinds(config);
        let mut candidates: Vec<Instruction> = Vec::new();
        for kind in valid.iter() {
            match kind {
                InstructionKind::Shift => candidates.push(Instruction::Shift),
                InstructionKind::Return => candidates.push(Instruction::Return),
                InstructionKind::Final => {
                    if state.steps() + 1 == exact_len {
                        total += 1;
                    }
                }
                InstructionKind::Call => {
                    for fid in 0..config.num_fids as u16 {
                        candidates.push(Instruction::Call { fid });
                    }
                }
                InstructionKind::Reduce => {
                    for &nt in non_terminals {
                        candidates.push(Instruction::Reduce {
                            non_terminal: nt,
                            positions: vec![1],
                        });
                    }
                }
            }
        }
        for inst in candidates {
            let mut next = state.clone();
            next.step(&inst, config).expect("candidate must be valid");
            let min_left = next.remaining() + (next.depth() - 1) + 1;
            if next.steps() + min_left <= exact_len {
                total += rec(&next, config, non_terminals, exact_len);
            }
        }
        total
    }

    let state = MachineState::new(tokens.to_vec());
    rec(&state, config, non_terminals, exact_len)
}

/// All injective position sequences (c1..cm), m >= 1, over 1..=len.
fn injective_sequences(len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(len: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        for c in 1..=len as u8 {
            if current.contains(&c) {
                continue;
            }
            current.push(c);
            out.push(current.clone());
            rec(len, current, out);
            current.pop();
        }
    }
    rec(len, &mut current, &mut out);
    out.sort_by_key(|s| (s.len(), s.clone()));
    out
}

/// Count the (n, positions) argument assignments under which a forced kind
/// trace reproduces `target` exactly, times F per CALL (the fid never
/// affects the built tree).
pub fn correct_instantiations(
    kinds: &[InstructionKind],
    tokens: &[Label],
    target: &ParseTree,
    config: &MachineConfig,
    non_terminals: &[Label],
) -> u128 {
    let target_subtrees: std::collections::HashSet<&ParseTree> =
        target.subtrees().into_iter().collect();
    let nt_needed = target.subtrees().iter().filter(|t| !t.is_leaf()).count();
    let reduce_suffix: Vec<usize> = {
        // reduce_suffix[i] = REDUCE steps at positions >= i
        let mut v = vec![0; kinds.len() + 1];
        for i in (0..kinds.len()).rev() {
            v[i] = v[i + 1] + usize::from(kinds[i] == InstructionKind::Reduce);
        }
        v
    };
    if reduce_suffix[0] < nt_needed {
        return 0;
    }
    let seqs_by_len: Vec<Vec<Vec<u8>>> = (0..=config.max_list_len)
        .map(injective_sequences)
        .collect();

    struct Ctx<'a> {
        kinds: &'a [InstructionKind],
        tokens: &'a [Label],
        target: &'a ParseTree,
        target_subtrees: std::collections::HashSet<&'a ParseTree>,
        nt_needed: usize,
        reduce_suffix: Vec<usize>,
        non_terminals: &'a [Label],
        seqs_by_len: Vec<Vec<Vec<u8>>>,
    }

    fn rec(ctx: &Ctx, step: usize, stack: &mut Vec<Vec<ParseTree>>, cursor: usize, productive: usize) -> u128 {
        if ctx.reduce_suffix[step] + productive < ctx.nt_needed {
            return 0;
        }
        let kind = ctx.kinds[step];
        match kind {
            InstructionKind::Final => {
                let top = stack.last().unwrap();
                u128::from(stack.len() == 1 && top.len() == 1 && &top[0] == ctx.target)
            }
            InstructionKind::Shift => {
                stack
                    .last_mut()
                    .unwrap()
                    .push(ParseTree::leaf(ctx.tokens[cursor]));
                let n = rec(ctx, step + 1, stack, cursor + 1, productive);
                stack.last_mut().unwrap().pop();
                n
            }
            InstructionKind::Call => {
                stack.push(Vec::new());
                let n = rec(ctx, step + 1, stack, cursor, productive);
                stack.pop();
                n
            }
            InstructionKind::Return => {
                let item = stack.last_mut().unwrap().pop().unwrap();
                let frame = stack.pop().unwrap();
                stack.last_mut().unwrap().push(item);
                let n = rec(ctx, step + 1, stack, cursor, productive);
                let item = stack.last_mut().unwrap().pop().unwrap();
                stack.push(frame);
                stack.last_mut().unwrap().push(item);
                n
            }
            InstructionKind::Reduce => {
                let old = std::mem::take(stack.last_mut().unwrap());
                let mut total = 0u128;
                for &nt in ctx.non_terminals {
                    for seq in &ctx.seqs_by_len[old.len()] {
                        let children: Vec<ParseTree> = seq
                            .iter()
                            .map(|&c| old[usize::from(c) - 1].clone())
                            .collect();
                        let tree = ParseTree::new(nt, children);
                        let gained = usize::from(ctx.target_subtrees.contains(&tree));
                        stack.last_mut().unwrap().push(tree);
                        total += rec(
                            ctx,
                            step + 1,
                            stack,
                            cursor,
                            (productive + gained).min(ctx.nt_needed),
                        );
                        stack.last_mut().unwrap().pop();
                    }
                }
                *stack.last_mut().unwrap() = old;
                total
            }
        }
    }

    let ctx = Ctx {
        kinds,
        tokens,
        target,
        target_subtrees,
        nt_needed,
        reduce_suffix,
        non_terminals,
        seqs_by_len,
    };
    let mut stack = vec![Vec::new()];
    let base = rec(&ctx, 0, &mut stack, 0, 0);
    let calls = kinds
        .iter()
        .filter(|&&k| k == InstructionKind::Call)
        .count() as u32;
    base * (config.num_fids as u128).pow(calls)
}

/// Correct counts at one trace length: total instantiations plus the set of
/// kind traces with at least one correct instantiation.
pub fn enumerate_correct_traces(
    example: &Example,
    config: &MachineConfig,
    non_terminals: &[Label],
    exact_len: usize,
) -> (u128, Vec<Vec<InstructionKind>>) {
    let kind_traces = enumerate_kind_traces(example.tokens.len(), config, exact_len);
    let mut total = 0u128;
    let mut correct_kinds = Vec::new();
    for kinds in kind_traces {
        let n = correct_instantiations(
            &kinds,
            &example.tokens,
            &example.tree,
            config,
            non_terminals,
        );
        if n > 0 {
            total += n;
            correct_kinds.push(kinds);
        }
    }
    (total, correct_kinds)
}

/// Discover the shortest correct trace length by iterative deepening.
pub fn shortest_correct_trace_len(
    example: &Example,
    config: &MachineConfig,
    non_terminals: &[Label],
    cap: usize,
) -> Option<usize> {
    let nt_nodes = example
        .tree
        .subtrees()
        .iter()
        .filter(|t| !t.is_leaf())
        .count();
    let lower = example.tokens.len() + nt_nodes + 1;
    (lower..=cap).find(|&len| {
        let traces = enumerate_kind_traces(example.tokens.len(), config, len);
        traces.iter().any(|kinds| {
            correct_instantiations(
                kinds,
                &example.tokens,
                &example.tree,
                config,
                non_terminals,
            ) > 0
        })
    })
}

/// Full census of one input at its shortest correct trace length.
pub fn census(
    grammar: &Grammar,
    tokens: Vec<Label>,
    options: &CensusOptions,
) -> Result<TraceCensus, CensusError> {
    if tokens.len() > options.max_input_len {
        return Err(CensusError::TooLong {
            len: tokens.len(),
            max: options.max_input_len,
        });
    }
    let example = oracle_parse(grammar, tokens).map_err(|e| CensusError::Oracle(e.to_string()))?;
    let config = grammar.machine_config_for_input(example.tokens.len());
    let non_terminals: Vec<Label> = grammar.vocab.non_terminal_labels().collect();
    let oracle_len = example.oracle_trace.as_ref().map(Vec::len).unwrap_or(0);
    let trace_len = shortest_correct_trace_len(&example, &config, &non_terminals, oracle_len)
        .ok_or(CensusError::NoCorrectTrace { cap: oracle_len })?;

    let mut valid_kind = 0u64;
    let mut valid_exec = 0u128;
    let mut overflow = false;
    {
        let mut trace = Vec::with_capacity(trace_len);
        let mut state = ShapeState::new(example.tokens.len());
        enumerate_kinds_rec(&mut state, &config, trace_len, &mut trace, &mut |t| {
            valid_kind += 1;
            valid_exec += exec_weight(t, &config, non_terminals.len());
            if valid_kind as usize > options.max_kind_traces {
                overflow = true;
                return false;
            }
            true
        });
    }
    if overflow {
        return Err(CensusError::TooManyTraces {
            max: options.max_kind_traces,
        });
    }
    let (correct_exec, correct_kinds) =
        enumerate_correct_traces(&example, &config, &non_terminals, trace_len);
    Ok(TraceCensus {
        input: grammar.vocab.detokenize(&example.tokens),
        input_len: example.tokens.len(),
        trace_len,
        valid_kind_traces: valid_kind,
        valid_exec_traces: valid_exec,
        correct_kind_traces: correct_kinds.len() as u64,
        correct_exec_traces: correct_exec,
    })
}
