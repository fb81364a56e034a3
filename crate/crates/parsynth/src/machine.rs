//! The non-differentiable stack machine the controller operates.
//!
//! State is a stack of frames plus the remaining input. Each frame carries a
//! function ID and an ordered list of (root, tree) pairs; the controller
//! only ever observes the top frame's function ID, the root labels of its
//! list, and the next input token, which is what lets a trained controller
//! run on inputs far longer than anything seen in training.

use std::fmt;

use thiserror::Error;

use crate::tree::ParseTree;
use crate::vocab::{Label, Vocab};

/// Instruction kinds in canonical encoding order (0..5).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum InstructionKind {
    Shift,
    Call,
    Return,
    Reduce,
    Final,
}

impl InstructionKind {
    pub const COUNT: usize = 5;
    pub const ALL: [InstructionKind; 5] = [
        InstructionKind::Shift,
        InstructionKind::Call,
        InstructionKind::Return,
        InstructionKind::Reduce,
        InstructionKind::Final,
    ];

    pub fn index(self) -> usize {
        match self {
            InstructionKind::Shift => 0,
            InstructionKind::Call => 1,
            InstructionKind::Return => 2,
            InstructionKind::Reduce => 3,
            InstructionKind::Final => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InstructionKind::Shift => "SHIFT",
            InstructionKind::Call => "CALL",
            InstructionKind::Return => "RETURN",
            InstructionKind::Reduce => "REDUCE",
            InstructionKind::Final => "FINAL",
        }
    }

    /// Single-letter code used in compact trace listings.
    pub fn letter(self) -> char {
        match self {
            InstructionKind::Shift => 'S',
            InstructionKind::Call => 'C',
            InstructionKind::Return => 'R',
            InstructionKind::Reduce => 'D',
            InstructionKind::Final => 'F',
        }
    }

    pub fn from_letter(c: char) -> Option<InstructionKind> {
        match c {
            'S' => Some(InstructionKind::Shift),
            'C' => Some(InstructionKind::Call),
            'R' => Some(InstructionKind::Return),
            'D' => Some(InstructionKind::Reduce),
            'F' => Some(InstructionKind::Final),
            _ => None,
        }
    }
}

/// Compact one-letter-per-kind rendering of a kind trace.
pub fn kind_trace_letters(kinds: &[InstructionKind]) -> String {
    kinds.iter().map(|k| k.letter()).collect()
}

/// Parse the compact rendering back.
pub fn kind_trace_from_letters(text: &str) -> Option<Vec<InstructionKind>> {
    text.chars().map(InstructionKind::from_letter).collect()
}

impl fmt::Display for InstructionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A full instruction with arguments.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Instruction {
    Shift,
    Call {
        fid: u16,
    },
    Return,
    Reduce {
        /// Root of the new node.
        non_terminal: Label,
        /// 1-based positions into the top frame's list; the j-th entry
        /// becomes the j-th child. Unselected items are dropped.
        positions: Vec<u8>,
    },
    Final,
}

impl Instruction {
    pub fn kind(&self) -> InstructionKind {
        match self {
            Instruction::Shift => InstructionKind::Shift,
            Instruction::Call { .. } => InstructionKind::Call,
            Instruction::Return => InstructionKind::Return,
            Instruction::Reduce { .. } => InstructionKind::Reduce,
            Instruction::Final => InstructionKind::Final,
        }
    }

    /// Canonical one-line text form: `SHIFT`, `CALL f`, `RETURN`,
    /// `REDUCE NonTerm c1,c2,...`, `FINAL`.
    pub fn display<'a>(&'a self, vocab: &'a Vocab) -> InstructionDisplay<'a> {
        InstructionDisplay { inst: self, vocab }
    }

    /// Parse the canonical text form.
    pub fn parse(text: &str, vocab: &Vocab) -> Result<Instruction, TraceTextError> {
        let mut parts = text.split_whitespace();
        let head = parts.next().ok_or(TraceTextError::Empty)?;
        let inst = match head {
            "SHIFT" => Instruction::Shift,
            "RETURN" => Instruction::Return,
            "FINAL" => Instruction::Final,
            "CALL" => {
                let arg = parts.next().ok_or_else(|| TraceTextError::BadArgument {
                    line: text.to_string(),
                })?;
                Instruction::Call {
                    fid: arg.parse().map_err(|_| TraceTextError::BadArgument {
                        line: text.to_string(),
                    })?,
                }
            }
            "REDUCE" => {
                let name = parts.next().ok_or_else(|| TraceTextError::BadArgument {
                    line: text.to_string(),
                })?;
                let non_terminal =
                    vocab
                        .non_terminal(name)
                        .ok_or_else(|| TraceTextError::BadArgument {
                            line: text.to_string(),
                        })?;
                let pos_text = parts.next().ok_or_else(|| TraceTextError::BadArgument {
                    line: text.to_string(),
                })?;
                let positions = pos_text
                    .split(',')
                    .map(|p| p.parse::<u8>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| TraceTextError::BadArgument {
                        line: text.to_string(),
                    })?;
                Instruction::Reduce {
                    non_terminal,
                    positions,
                }
            }
            other => {
                return Err(TraceTextError::UnknownInstruction {
                    name: other.to_string(),
                })
            }
        };
        if parts.next().is_some() {
            return Err(TraceTextError::BadArgument {
                line: text.to_string(),
            });
        }
        Ok(inst)
    }
}

pub struct InstructionDisplay<'a> {
    inst: &'a Instruction,
    vocab: &'a Vocab,
}

impl fmt::Display for InstructionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.inst {
            Instruction::Shift => f.write_str("SHIFT"),
            Instruction::Call { fid } => write!(f, "CALL {fid}"),
            Instruction::Return => f.write_str("RETURN"),
            Instruction::Reduce {
                non_terminal,
                positions,
            } => {
                write!(f, "REDUCE {} ", self.vocab.name(*non_terminal))?;
                for (i, p) in positions.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            Instruction::Final => f.write_str("FINAL"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceTextError {
    #[error("empty instruction line")]
    Empty,
    #[error("unknown instruction {name:?}")]
    UnknownInstruction { name: String },
    #[error("malformed instruction arguments in {line:?}")]
    BadArgument { line: String },
}

/// Machine hyper-parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineConfig {
    /// K: maximum length of any frame's list.
    pub max_list_len: usize,
    /// F: number of function IDs.
    pub num_fids: usize,
    /// Hard cap on trace length; exceeding it is a run failure.
    pub max_steps: usize,
}

impl MachineConfig {
    pub fn new(max_list_len: usize, num_fids: usize, max_steps: usize) -> Self {
        assert!(max_list_len >= 2, "K must be at least 2");
        assert!(num_fids >= 1, "F must be at least 1");
        MachineConfig {
            max_list_len,
            num_fids,
            max_steps,
        }
    }

    /// Default trace-length cap for a given input length.
    pub fn default_max_steps(input_len: usize) -> usize {
        20 * input_len + 20
    }
}

/// One stack entry: a function ID plus an ordered list of built trees.
/// Each list item's root label is its tree's root.
#[derive(Clone, Debug)]
pub struct Frame {
    pub fid: u16,
    pub items: Vec<ParseTree>,
}

impl Frame {
    pub fn roots(&self) -> impl Iterator<Item = Label> + '_ {
        self.items.iter().map(|t| t.root)
    }
}

/// What the controller is allowed to see: the three observation components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub fid: u16,
    pub roots: Vec<Label>,
    /// `None` when the input is exhausted (EOF).
    pub tok: Option<Label>,
}

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("machine already terminated")]
    Terminated,
    #[error("{kind} is not valid here (list len {list_len}, depth {depth}, remaining {remaining}, last {last:?})")]
    InvalidKind {
        kind: InstructionKind,
        list_len: usize,
        depth: usize,
        remaining: usize,
        last: Option<InstructionKind>,
    },
    #[error("CALL fid {fid} out of range (F = {num_fids})")]
    FidOutOfRange { fid: u16, num_fids: usize },
    #[error("REDUCE positions {positions:?} invalid for list of length {list_len}")]
    BadReducePositions { positions: Vec<u8>, list_len: usize },
    #[error("REDUCE root {0:?} is not a non-terminal")]
    ReduceRootNotNonTerminal(Label),
}

/// The machine state: frame stack, input cursor, and one instruction of
/// memory (the validity rules for CALL and REDUCE look at the last kind).
#[derive(Clone, Debug)]
pub struct MachineState {
    stack: Vec<Frame>,
    tokens: Vec<Label>,
    cursor: usize,
    last_kind: Option<InstructionKind>,
    steps: usize,
    terminated: bool,
}

impl MachineState {
    /// Initial state: a single frame `(0, [])` over the full input.
    pub fn new(tokens: Vec<Label>) -> Self {
        MachineState {
            stack: vec![Frame {
                fid: 0,
                items: Vec::new(),
            }],
            tokens,
            cursor: 0,
            last_kind: None,
            steps: 0,
            terminated: false,
        }
    }

    pub fn stack(&self) -> &[Frame] {
        &self.stack
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn top(&self) -> &Frame {
        self.stack.last().expect("stack is never empty")
    }

    pub fn list_len(&self) -> usize {
        self.top().items.len()
    }

    /// Next input token, `None` at EOF.
    pub fn tok(&self) -> Option<Label> {
        self.tokens.get(self.cursor).copied()
    }

    pub fn remaining(&self) -> usize {
        self.tokens.len() - self.cursor
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn last_kind(&self) -> Option<InstructionKind> {
        self.last_kind
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn observation(&self) -> Observation {
        let top = self.top();
        Observation {
            fid: top.fid,
            roots: top.roots().collect(),
            tok: self.tok(),
        }
    }

    /// The set of instruction kinds permitted in this state.
    ///
    /// SHIFT iff tok != EOF and L < K; CALL iff tok != EOF, 0 < L < K and the
    /// previous kind was not CALL; RETURN iff depth > 1 and L = 1; REDUCE iff
    /// L > 0 and the previous kind was not REDUCE; FINAL iff tok = EOF, L = 1
    /// and depth = 1.
    pub fn valid_kinds(&self, config: &MachineConfig) -> ValidKinds {
        let mut mask = [false; InstructionKind::COUNT];
        if !self.terminated {
            let l = self.list_len();
            let depth = self.depth();
            let has_tok = self.tok().is_some();
            let k = config.max_list_len;
            mask[InstructionKind::Shift.index()] = has_tok && l < k;
            mask[InstructionKind::Call.index()] =
                has_tok && 0 < l && l < k && self.last_kind != Some(InstructionKind::Call);
            mask[InstructionKind::Return.index()] = depth > 1 && l == 1;
            mask[InstructionKind::Reduce.index()] =
                l > 0 && self.last_kind != Some(InstructionKind::Reduce);
            mask[InstructionKind::Final.index()] = !has_tok && l == 1 && depth == 1;
        }
        ValidKinds { mask }
    }

    /// Execute one instruction. Returns the finished tree on FINAL.
    pub fn step(
        &mut self,
        inst: &Instruction,
        config: &MachineConfig,
    ) -> Result<Option<ParseTree>, MachineError> {
        if self.terminated {
            return Err(MachineError::Terminated);
        }
        let kind = inst.kind();
        if !self.valid_kinds(config).allows(kind) {
            return Err(MachineError::InvalidKind {
                kind,
                list_len: self.list_len(),
                depth: self.depth(),
                remaining: self.remaining(),
                last: self.last_kind,
            });
        }
        let result = match inst {
            Instruction::Shift => {
                let tok = self.tokens[self.cursor];
                self.cursor += 1;
                self.stack
                    .last_mut()
                    .unwrap()
                    .items
                    .push(ParseTree::leaf(tok));
                None
            }
            Instruction::Call { fid } => {
                if usize::from(*fid) >= config.num_fids {
                    return Err(MachineError::FidOutOfRange {
                        fid: *fid,
                        num_fids: config.num_fids,
                    });
                }
                self.stack.push(Frame {
                    fid: *fid,
                    items: Vec::new(),
                });
                None
            }
            Instruction::Return => {
                let mut popped = self.stack.pop().unwrap();
                let item = popped.items.pop().unwrap();
                self.stack.last_mut().unwrap().items.push(item);
                None
            }
            Instruction::Reduce {
                non_terminal,
                positions,
            } => {
                if !non_terminal.is_non_terminal() {
                    return Err(MachineError::ReduceRootNotNonTerminal(*non_terminal));
                }
                let top = self.stack.last_mut().unwrap();
                let l = top.items.len();
                let ok = !positions.is_empty()
                    && positions.iter().all(|&c| 1 <= c && usize::from(c) <= l)
                    && (1..positions.len()).all(|i| !positions[..i].contains(&positions[i]));
                if !ok {
                    return Err(MachineError::BadReducePositions {
                        positions: positions.clone(),
                        list_len: l,
                    });
                }
                let old = std::mem::take(&mut top.items);
                let children = positions
                    .iter()
                    .map(|&c| old[usize::from(c) - 1].clone())
                    .collect();
                top.items.push(ParseTree::new(*non_terminal, children));
                None
            }
            Instruction::Final => {
                self.terminated = true;
                let mut frame = self.stack.pop().unwrap();
                Some(frame.items.pop().unwrap())
            }
        };
        self.last_kind = Some(kind);
        self.steps += 1;
        Ok(result)
    }
}

/// Validity mask over the five instruction kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidKinds {
    mask: [bool; InstructionKind::COUNT],
}

impl ValidKinds {
    pub fn allows(&self, kind: InstructionKind) -> bool {
        self.mask[kind.index()]
    }

    pub fn mask(&self) -> &[bool; InstructionKind::COUNT] {
        &self.mask
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = InstructionKind> + '_ {
        InstructionKind::ALL
            .into_iter()
            .filter(move |k| self.mask[k.index()])
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Why a controller run stopped without producing a tree.
#[derive(Debug)]
pub enum FailureReason {
    /// No instruction kind is valid (believed unreachable for K >= 2, but
    /// surfaced rather than trusted).
    DeadState,
    /// The controller returned an instruction the machine rejected.
    Contract(MachineError),
    /// Trace length exceeded the configured cap.
    StepLimit,
    /// The controller itself failed.
    Controller(String),
}

/// A failed run, with diagnostics.
#[derive(Debug)]
pub struct RunFailure {
    pub reason: FailureReason,
    pub partial_trace: Vec<Instruction>,
    pub state: MachineState,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run failed after {} steps: {:?}",
            self.partial_trace.len(),
            self.reason
        )
    }
}

/// A successful run: the finished tree and the full instruction trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub tree: ParseTree,
    pub trace: Vec<Instruction>,
}

/// Drive the machine with a controller callback until FINAL or failure.
pub fn run_controller<E: fmt::Display>(
    tokens: Vec<Label>,
    config: &MachineConfig,
    mut controller: impl FnMut(&MachineState) -> Result<Instruction, E>,
) -> Result<RunOutcome, Box<RunFailure>> {
    let mut state = MachineState::new(tokens);
    let mut trace = Vec::new();
    loop {
        if state.steps() >= config.max_steps {
            return Err(Box::new(RunFailure {
                reason: FailureReason::StepLimit,
                partial_trace: trace,
                state,
            }));
        }
        if state.valid_kinds(config).is_empty() {
            return Err(Box::new(RunFailure {
                reason: FailureReason::DeadState,
                partial_trace: trace,
                state,
            }));
        }
        let inst = match controller(&state) {
            Ok(inst) => inst,
            Err(e) => {
                return Err(Box::new(RunFailure {
                    reason: FailureReason::Controller(e.to_string()),
                    partial_trace: trace,
                    state,
                }))
            }
        };
        match state.step(&inst, config) {
            Ok(Some(tree)) => {
                trace.push(inst);
                return Ok(RunOutcome { tree, trace });
            }
            Ok(None) => trace.push(inst),
            Err(e) => {
                return Err(Box::new(RunFailure {
                    reason: FailureReason::Contract(e),
                    partial_trace: trace,
                    state,
                }))
            }
        }
    }
}

/// Replay a recorded instruction trace; the machine is deterministic, so this
/// reproduces the original tree exactly.
pub fn replay_trace(
    tokens: Vec<Label>,
    config: &MachineConfig,
    trace: &[Instruction],
) -> Result<ParseTree, MachineError> {
    let mut state = MachineState::new(tokens);
    for inst in trace {
        if let Some(tree) = state.step(inst, config)? {
            return Ok(tree);
        }
    }
    Err(MachineError::Terminated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Vocab;

    fn am_vocab() -> Vocab {
        Vocab::new(vec!["x", "y", "0", "1", "+", "*"], vec!["Id", "Lit", "Op+", "Op*"]).unwrap()
    }

    fn cfg() -> MachineConfig {
        MachineConfig::new(3, 3, 200)
    }

    #[test]
    fn initial_state_allows_only_shift() {
        let v = am_vocab();
        let state = MachineState::new(v.tokenize("x + y").unwrap());
        let valid = state.valid_kinds(&cfg());
        assert_eq!(valid.iter().collect::<Vec<_>>(), vec![InstructionKind::Shift]);
    }

    #[test]
    fn shift_pulls_one_token() {
        let v = am_vocab();
        let mut state = MachineState::new(v.tokenize("x + y").unwrap());
        state.step(&Instruction::Shift, &cfg()).unwrap();
        assert_eq!(state.list_len(), 1);
        assert_eq!(state.remaining(), 2);
        assert_eq!(state.top().items[0], ParseTree::leaf(v.terminal("x").unwrap()));
    }

    // The full x + y walkthrough: nine instructions, (Op+ (Id x) (Id y)).
    #[test]
    fn hand_rolled_x_plus_y() {
        let v = am_vocab();
        let id = v.non_terminal("Id").unwrap();
        let op_plus = v.non_terminal("Op+").unwrap();
        let mut state = MachineState::new(v.tokenize("x + y").unwrap());
        let c = cfg();
        let reduce_id = Instruction::Reduce {
            non_terminal: id,
            positions: vec![1],
        };
        state.step(&Instruction::Shift, &c).unwrap();
        state.step(&reduce_id, &c).unwrap();
        state.step(&Instruction::Shift, &c).unwrap();
        state.step(&Instruction::Call { fid: 1 }, &c).unwrap();
        assert_eq!(state.depth(), 2);
        assert_eq!(state.top().fid, 1);
        state.step(&Instruction::Shift, &c).unwrap();
        state.step(&reduce_id, &c).unwrap();
        // step 7: RETURN moves (Id, T2) down into the first frame's list
        state.step(&Instruction::Return, &c).unwrap();
        assert_eq!(state.depth(), 1);
        assert_eq!(state.list_len(), 3);
        // step 8: REDUCE Op+, (1, 3) collapses the whole list to one pair,
        // dropping the unselected "+" at position 2
        state
            .step(
                &Instruction::Reduce {
                    non_terminal: op_plus,
                    positions: vec![1, 3],
                },
                &c,
            )
            .unwrap();
        assert_eq!(state.list_len(), 1);
        let valid = state.valid_kinds(&c);
        assert_eq!(valid.iter().collect::<Vec<_>>(), vec![InstructionKind::Final]);
        let tree = state.step(&Instruction::Final, &c).unwrap().unwrap();
        assert_eq!(crate::tree::serialize(&tree, &v), "(Op+ (Id x) (Id y))");
        assert_eq!(state.steps(), 9);
    }

    #[test]
    fn final_and_reduce_both_valid_after_shift_at_eof() {
        let v = am_vocab();
        let mut state = MachineState::new(v.tokenize("x").unwrap());
        state.step(&Instruction::Shift, &cfg()).unwrap();
        let valid = state.valid_kinds(&cfg());
        // one frame, L = 1, EOF, last = SHIFT
        assert!(valid.allows(InstructionKind::Final));
        assert!(valid.allows(InstructionKind::Reduce));
        assert!(!valid.allows(InstructionKind::Shift));
        assert!(!valid.allows(InstructionKind::Call));
        assert!(!valid.allows(InstructionKind::Return));
    }

    #[test]
    fn consecutive_reduce_and_call_blocked() {
        let v = am_vocab();
        let c = cfg();
        let mut state = MachineState::new(v.tokenize("x + y").unwrap());
        state.step(&Instruction::Shift, &c).unwrap();
        state
            .step(
                &Instruction::Reduce {
                    non_terminal: v.non_terminal("Id").unwrap(),
                    positions: vec![1],
                },
                &c,
            )
            .unwrap();
        assert!(!state.valid_kinds(&c).allows(InstructionKind::Reduce));
        state.step(&Instruction::Call { fid: 0 }, &c).unwrap();
        assert!(!state.valid_kinds(&c).allows(InstructionKind::Call));
    }

    #[test]
    fn always_shift_controller_dies_at_frame_capacity() {
        let v = am_vocab();
        let failure = run_controller(
            v.tokenize("x y x y").unwrap(),
            &cfg(),
            |_state| Ok::<_, std::convert::Infallible>(Instruction::Shift),
        )
        .unwrap_err();
        // SHIFT becomes invalid once L = K
        assert!(matches!(failure.reason, FailureReason::Contract(_)));
        assert_eq!(failure.partial_trace.len(), 3);
    }

    #[test]
    fn stepping_terminated_machine_fails() {
        let v = am_vocab();
        let c = cfg();
        let mut state = MachineState::new(v.tokenize("x").unwrap());
        state.step(&Instruction::Shift, &c).unwrap();
        state
            .step(
                &Instruction::Reduce {
                    non_terminal: v.non_terminal("Id").unwrap(),
                    positions: vec![1],
                },
                &c,
            )
            .unwrap();
        state.step(&Instruction::Final, &c).unwrap().unwrap();
        assert!(matches!(
            state.step(&Instruction::Shift, &c),
            Err(MachineError::Terminated)
        ));
    }

    #[test]
    fn reduce_rejects_bad_positions() {
        let v = am_vocab();
        let c = cfg();
        let mut state = MachineState::new(v.tokenize("x").unwrap());
        state.step(&Instruction::Shift, &c).unwrap();
        for bad in [vec![], vec![0], vec![2], vec![1, 1]] {
            let err = state
                .clone()
                .step(
                    &Instruction::Reduce {
                        non_terminal: v.non_terminal("Id").unwrap(),
                        positions: bad,
                    },
                    &c,
                )
                .unwrap_err();
            assert!(matches!(err, MachineError::BadReducePositions { .. }));
        }
    }

    #[test]
    fn instruction_text_roundtrip() {
        let v = am_vocab();
        let insts = vec![
            Instruction::Shift,
            Instruction::Call { fid: 2 },
            Instruction::Return,
            Instruction::Reduce {
                non_terminal: v.non_terminal("Op+").unwrap(),
                positions: vec![1, 3],
            },
            Instruction::Final,
        ];
        for inst in insts {
            let text = inst.display(&v).to_string();
            assert_eq!(Instruction::parse(&text, &v).unwrap(), inst);
        }
        assert_eq!(
            Instruction::parse("REDUCE Op+ 1,3", &v).unwrap(),
            Instruction::Reduce {
                non_terminal: v.non_terminal("Op+").unwrap(),
                positions: vec![1, 3],
            }
        );
        assert!(Instruction::parse("POP", &v).is_err());
        assert!(Instruction::parse("CALL", &v).is_err());
    }
}
