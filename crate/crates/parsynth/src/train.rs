//! Learning procedures: weakly supervised steps over forced instruction-kind
//! traces, trace-free REINFORCE steps, the two-phase candidate-trace /
//! specification search, and the curriculum driver.
//!
//! Sign convention: every update minimizes a scalar loss assembled from
//! weighted log-probability terms, so REINFORCE terms enter with weight
//! `-gamma * reward` and supervised cross-entropy terms with `-gamma`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::controller::{sample, ChooseMode, Controller, ControllerDims};
use crate::grammar::{Dataset, Example, Grammar};
use crate::machine::{Instruction, InstructionKind, MachineState, RunOutcome};
use crate::nn::{adam_step, clip_global_norm, masked_softmax, softmax, AdamConfig, NodeId, Tape};
use crate::tree::{diff, mindiff, ParseTree};
use crate::vocab::Label;

use thiserror::Error;

/// Reward shaping and search-budget constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    /// Reward scale inside -log(alpha * d + beta).
    pub alpha: f64,
    pub beta: f64,
    /// Weight of the REINFORCE term on REDUCE position combinations.
    pub gamma_comb: f64,
    /// Weight of the supervised cross-entropy on REDUCE non-terminals.
    pub gamma_nt: f64,
    /// Weight of the REINFORCE term on CALL fids.
    pub gamma_fid: f64,
    /// Step size of the specification-logit update.
    pub tau: f64,
    /// Exploration constant added to softmax values while sampling kinds.
    pub sigma: f64,
    /// Inner-loop iterations verifying one sampled trace (M1).
    pub inner_iters: usize,
    /// Outer-loop samples per example (M2).
    pub outer_iters: usize,
    /// Re-initialize the search model every this many outer iterations (M3).
    pub reinit_every: usize,
    pub clip_norm: f64,
    pub adam: AdamConfig,
    /// Keep at most this many shortest candidate traces per example.
    pub candidate_cap: usize,
    pub phase2_max_attempts: usize,
    /// Weakly supervised epochs per specification attempt.
    pub phase2_epochs: usize,
    pub theta_init_half_range: f64,
    /// Hidden/embedding size D.
    pub hidden: usize,
    /// Emit progress lines on stderr.
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 3.0,
            beta: 0.01,
            gamma_comb: 10.0,
            gamma_nt: 1.0,
            gamma_fid: 0.01,
            tau: 1.0,
            sigma: 0.1,
            inner_iters: 20,
            outer_iters: 10_000,
            reinit_every: 2_000,
            clip_norm: 5.0,
            adam: AdamConfig::default(),
            candidate_cap: 5,
            phase2_max_attempts: 50,
            phase2_epochs: 200,
            theta_init_half_range: 0.01,
            hidden: 50,
            verbose: false,
        }
    }
}

/// -log(alpha * mindiff + beta): positive only for near-exact subtrees.
pub fn reward_reduce(min_difference: u64, cfg: &TrainConfig) -> f64 {
    -(cfg.alpha * min_difference as f64 + cfg.beta).ln()
}

/// Whole-trace reward from the final tree difference, same shape.
pub fn reward_tree(difference: u64, cfg: &TrainConfig) -> f64 {
    -(cfg.alpha * difference as f64 + cfg.beta).ln()
}

/// The specification-logit update: push probability away from a sampled
/// trace in proportion to how wrong the resulting parse was.
pub fn theta_update(theta: &mut [f64], sampled: usize, difference: f64, tau: f64) {
    let p = softmax(theta);
    for (i, t) in theta.iter_mut().enumerate() {
        let grad = f64::from(i == sampled) - p[i];
        *t -= tau * difference * grad;
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("forced kind {kind} invalid at step {step}; candidate trace bookkeeping is broken")]
    TraceRejected { step: usize, kind: InstructionKind },
    #[error("phase 1 found no candidate trace for example {example:?} in lesson {lesson}")]
    Phase1Empty { lesson: usize, example: String },
    #[error("phase 2 exhausted {attempts} attempts in lesson {lesson}")]
    Phase2Exhausted { lesson: usize, attempts: usize },
}

/// Shadow of a built tree that remembers which REDUCE event created each
/// internal node; the supervised non-terminal loss matches these events
/// against the ground-truth tree.
#[derive(Clone)]
struct Shadow {
    reduce_event: Option<usize>,
    children: Vec<Shadow>,
}

impl Shadow {
    fn token() -> Shadow {
        Shadow {
            reduce_event: None,
            children: Vec::new(),
        }
    }
}

fn match_reduce_events(shadow: &Shadow, truth: &ParseTree, out: &mut Vec<(usize, Label)>) {
    if let Some(event) = shadow.reduce_event {
        out.push((event, truth.root));
    }
    let shared = shadow.children.len().min(truth.children.len());
    for i in 0..shared {
        match_reduce_events(&shadow.children[i], &truth.children[i], out);
    }
    // surplus predicted children are matched to nothing and contribute no loss
}

struct CallRecord {
    lp: NodeId,
    step: usize,
}

struct ReduceRecord {
    comb_lp: NodeId,
    nt_logits: NodeId,
    built: ParseTree,
}

/// What one forced-trace training pass produced.
#[derive(Debug)]
pub struct WeakStepOutcome {
    pub tree: ParseTree,
    pub exact: bool,
    pub loss: f64,
}

/// One weakly supervised update: execute the machine forcing the given
/// instruction kinds while sampling arguments from the model, then descend
/// the combined loss (REINFORCE on combinations and fids, cross-entropy on
/// matched non-terminals and on the forced kinds).
pub fn weakly_supervised_step(
    ctl: &mut Controller,
    grammar: &Grammar,
    example: &Example,
    kinds: &[InstructionKind],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<WeakStepOutcome, TrainError> {
    let config = grammar.machine_config_for_input(example.tokens.len());
    let mut tape = Tape::new();
    let mut state = MachineState::new(example.tokens.clone());
    let mut shadow_stack: Vec<Vec<Shadow>> = vec![Vec::new()];

    let mut kind_lp_nodes: Vec<NodeId> = Vec::with_capacity(kinds.len());
    let mut calls: Vec<CallRecord> = Vec::new();
    let mut reduces: Vec<ReduceRecord> = Vec::new();
    let mut final_tree: Option<ParseTree> = None;

    for (step, &kind) in kinds.iter().enumerate() {
        let valid = state.valid_kinds(&config);
        if !valid.allows(kind) {
            return Err(TrainError::TraceRejected { step, kind });
        }
        let obs = state.observation();
        let kind_logits = ctl.kind_logits(&mut tape, &obs);
        kind_lp_nodes.push(tape.masked_log_pick(kind_logits, valid.mask(), kind.index()));

        let inst = match kind {
            InstructionKind::Shift => {
                shadow_stack.last_mut().unwrap().push(Shadow::token());
                Instruction::Shift
            }
            InstructionKind::Return => {
                let item = shadow_stack.last_mut().unwrap().pop().unwrap();
                shadow_stack.pop();
                shadow_stack.last_mut().unwrap().push(item);
                Instruction::Return
            }
            InstructionKind::Final => Instruction::Final,
            InstructionKind::Call => {
                let logits = ctl.fid_logits(&mut tape, &obs);
                // keep every fid explorable: the reward signal for fids is
                // relative, so a saturated head would never be compared
                // against alternatives again
                let weights: Vec<f64> = softmax(tape.value(logits))
                    .into_iter()
                    .map(|p| p + cfg.sigma)
                    .collect();
                let fid = sample(&weights, rng);
                let all = vec![true; weights.len()];
                calls.push(CallRecord {
                    lp: tape.explore_log_pick(logits, &all, cfg.sigma, fid),
                    step,
                });
                shadow_stack.push(Vec::new());
                Instruction::Call { fid: fid as u16 }
            }
            InstructionKind::Reduce => {
                let nt_logits = ctl.nt_logits(&mut tape, &obs.roots);
                let nt_dist = softmax(tape.value(nt_logits));
                let nt_index = sample(&nt_dist, rng);
                let comb_logits = ctl.comb_logits(&mut tape, nt_index);
                let mask = ctl.codec.mask_for_len(obs.roots.len());
                let comb_dist = masked_softmax(tape.value(comb_logits), mask);
                let comb_id = sample(&comb_dist, rng);
                let positions = ctl.codec.decode(comb_id).unwrap().to_vec();
                // mirror the reduce in the shadow stack
                let old = std::mem::take(shadow_stack.last_mut().unwrap());
                let children = positions
                    .iter()
                    .map(|&c| old[usize::from(c) - 1].clone())
                    .collect();
                shadow_stack.last_mut().unwrap().push(Shadow {
                    reduce_event: Some(reduces.len()),
                    children,
                });
                let comb_lp = tape.masked_log_pick(comb_logits, mask, comb_id);
                reduces.push(ReduceRecord {
                    comb_lp,
                    nt_logits,
                    built: ParseTree::new(Label::NonTerminal(nt_index as u16), Vec::new()),
                });
                Instruction::Reduce {
                    non_terminal: Label::NonTerminal(nt_index as u16),
                    positions,
                }
            }
        };
        match state.step(&inst, &config) {
            Ok(Some(tree)) => final_tree = Some(tree),
            Ok(None) => {
                if kind == InstructionKind::Reduce {
                    // capture the actually built subtree for the reward
                    let built = state.top().items.last().unwrap().clone();
                    reduces.last_mut().unwrap().built = built;
                }
            }
            Err(_) => return Err(TrainError::TraceRejected { step, kind }),
        }
    }
    let tree = final_tree.expect("a forced trace ends with FINAL");
    let exact = tree == example.tree;

    let mut terms: Vec<(NodeId, f64)> = Vec::new();
    // supervised learning of the forced kinds
    for &lp in &kind_lp_nodes {
        terms.push((lp, -1.0));
    }
    // REINFORCE on position combinations, rewarded by subtree closeness
    for record in &reduces {
        let reward = reward_reduce(mindiff(&record.built, &example.tree), cfg);
        terms.push((record.comb_lp, -cfg.gamma_comb * reward));
    }
    // supervised cross-entropy on matched non-terminals
    let shadow_root = &shadow_stack.last().unwrap()[0];
    let mut matched = Vec::new();
    match_reduce_events(shadow_root, &example.tree, &mut matched);
    for (event, truth_root) in matched {
        if let Label::NonTerminal(idx) = truth_root {
            let all = vec![true; ctl.dims.num_non_terminals];
            let lp = tape.masked_log_pick(reduces[event].nt_logits, &all, idx as usize);
            terms.push((lp, -cfg.gamma_nt));
        }
    }
    // REINFORCE on fids, rewarded by how predictable the following kinds were
    let kind_lp_values: Vec<f64> = kind_lp_nodes.iter().map(|&n| tape.scalar(n)).collect();
    for (i, call) in calls.iter().enumerate() {
        let segment_end = calls
            .get(i + 1)
            .map(|next| next.step)
            .unwrap_or(kinds.len() - 1);
        let r_f: f64 = kind_lp_values[call.step + 1..=segment_end].iter().sum();
        terms.push((call.lp, -cfg.gamma_fid * r_f));
    }

    let loss: f64 = terms
        .iter()
        .map(|&(node, weight)| weight * tape.scalar(node))
        .sum();
    assert!(loss.is_finite(), "non-finite training loss");
    let mut grads = tape.backward(&ctl.store, &terms);
    clip_global_norm(&mut grads, cfg.clip_norm);
    adam_step(&mut ctl.store, &grads, &cfg.adam);
    Ok(WeakStepOutcome { tree, exact, loss })
}

/// What one exploration rollout produced.
pub struct UnsupStepOutcome {
    pub kinds: Vec<InstructionKind>,
    pub tree: Option<ParseTree>,
    pub exact: bool,
    pub reward: f64,
}

/// One trace-free REINFORCE update: sample a full trace under the
/// exploration distribution, reward it by the final tree difference
/// (worst-case surrogate on failure), and descend.
pub fn unsupervised_step(
    ctl: &mut Controller,
    grammar: &Grammar,
    example: &Example,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> UnsupStepOutcome {
    let config = grammar.machine_config_for_input(example.tokens.len());
    let mut tape = Tape::new();
    let mut state = MachineState::new(example.tokens.clone());

    let mut kinds: Vec<InstructionKind> = Vec::new();
    let mut kind_sample_lps: Vec<NodeId> = Vec::new();
    let mut kind_model_lps: Vec<f64> = Vec::new();
    let mut calls: Vec<CallRecord> = Vec::new();
    let mut reduces: Vec<ReduceRecord> = Vec::new();
    let mut shadow_stack: Vec<Vec<Shadow>> = vec![Vec::new()];
    let mut final_tree: Option<ParseTree> = None;

    loop {
        if state.steps() >= config.max_steps {
            break;
        }
        let valid = state.valid_kinds(&config);
        if valid.is_empty() {
            break;
        }
        let obs = state.observation();
        let kind_logits = ctl.kind_logits(&mut tape, &obs);
        let s = softmax(tape.value(kind_logits));
        let weights: Vec<f64> = s
            .iter()
            .zip(valid.mask())
            .map(|(&p, &m)| if m { p + cfg.sigma } else { 0.0 })
            .collect();
        let kind_idx = sample(&weights, rng);
        let kind = InstructionKind::ALL[kind_idx];
        let step = kinds.len();
        kinds.push(kind);
        kind_sample_lps.push(tape.explore_log_pick(kind_logits, valid.mask(), cfg.sigma, kind_idx));
        kind_model_lps.push(masked_softmax(tape.value(kind_logits), valid.mask())[kind_idx].max(f64::MIN_POSITIVE).ln());

        let inst = match kind {
            InstructionKind::Shift => {
                shadow_stack.last_mut().unwrap().push(Shadow::token());
                Instruction::Shift
            }
            InstructionKind::Return => {
                let item = shadow_stack.last_mut().unwrap().pop().unwrap();
                shadow_stack.pop();
                shadow_stack.last_mut().unwrap().push(item);
                Instruction::Return
            }
            InstructionKind::Final => Instruction::Final,
            InstructionKind::Call => {
                let logits = ctl.fid_logits(&mut tape, &obs);
                // keep every fid explorable: the reward signal for fids is
                // relative, so a saturated head would never be compared
                // against alternatives again
                let weights: Vec<f64> = softmax(tape.value(logits))
                    .into_iter()
                    .map(|p| p + cfg.sigma)
                    .collect();
                let fid = sample(&weights, rng);
                let all = vec![true; weights.len()];
                calls.push(CallRecord {
                    lp: tape.explore_log_pick(logits, &all, cfg.sigma, fid),
                    step,
                });
                shadow_stack.push(Vec::new());
                Instruction::Call { fid: fid as u16 }
            }
            InstructionKind::Reduce => {
                let nt_logits = ctl.nt_logits(&mut tape, &obs.roots);
                let nt_dist = softmax(tape.value(nt_logits));
                let nt_index = sample(&nt_dist, rng);
                let comb_logits = ctl.comb_logits(&mut tape, nt_index);
                let mask = ctl.codec.mask_for_len(obs.roots.len());
                let comb_dist = masked_softmax(tape.value(comb_logits), mask);
                let comb_id = sample(&comb_dist, rng);
                let positions = ctl.codec.decode(comb_id).unwrap().to_vec();
                let old = std::mem::take(shadow_stack.last_mut().unwrap());
                let children = positions
                    .iter()
                    .map(|&c| old[usize::from(c) - 1].clone())
                    .collect();
                shadow_stack.last_mut().unwrap().push(Shadow {
                    reduce_event: Some(reduces.len()),
                    children,
                });
                let comb_lp = tape.masked_log_pick(comb_logits, mask, comb_id);
                reduces.push(ReduceRecord {
                    comb_lp,
                    nt_logits,
                    built: ParseTree::new(Label::NonTerminal(nt_index as u16), Vec::new()),
                });
                Instruction::Reduce {
                    non_terminal: Label::NonTerminal(nt_index as u16),
                    positions,
                }
            }
        };
        match state.step(&inst, &config) {
            Ok(Some(tree)) => {
                final_tree = Some(tree);
                break;
            }
            Ok(None) => {
                if kind == InstructionKind::Reduce {
                    let built = state.top().items.last().unwrap().clone();
                    reduces.last_mut().unwrap().built = built;
                }
            }
            Err(e) => unreachable!("masked sampling emitted an invalid instruction: {e}"),
        }
    }

    let difference = match &final_tree {
        Some(tree) => diff(tree, &example.tree),
        // worst-case surrogate: strictly worse than any terminating parse
        None => example.tree.size() as u64 + reduces.len() as u64,
    };
    let reward = reward_tree(difference, cfg);
    let exact = difference == 0 && final_tree.is_some();

    let mut terms: Vec<(NodeId, f64)> = Vec::new();
    for &lp in &kind_sample_lps {
        terms.push((lp, -reward));
    }
    for record in &reduces {
        let r = reward_reduce(mindiff(&record.built, &example.tree), cfg);
        terms.push((record.comb_lp, -cfg.gamma_comb * r));
    }
    for (i, call) in calls.iter().enumerate() {
        let segment_end = calls
            .get(i + 1)
            .map(|next| next.step)
            .unwrap_or(kinds.len() - 1);
        let r_f: f64 = kind_model_lps[call.step + 1..=segment_end].iter().sum();
        terms.push((call.lp, -cfg.gamma_fid * r_f));
    }
    if final_tree.is_some() {
        let shadow_root = &shadow_stack.last().unwrap()[0];
        let mut matched = Vec::new();
        match_reduce_events(shadow_root, &example.tree, &mut matched);
        let all = vec![true; ctl.dims.num_non_terminals];
        for (event, truth_root) in matched {
            if let Label::NonTerminal(idx) = truth_root {
                let lp = tape.masked_log_pick(reduces[event].nt_logits, &all, idx as usize);
                terms.push((lp, -cfg.gamma_nt));
            }
        }
    }

    let mut grads = tape.backward(&ctl.store, &terms);
    clip_global_norm(&mut grads, cfg.clip_norm);
    adam_step(&mut ctl.store, &grads, &cfg.adam);
    UnsupStepOutcome {
        kinds,
        tree: final_tree,
        exact,
        reward,
    }
}

/// One discovered candidate instruction-kind trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateTrace {
    pub kinds: Vec<InstructionKind>,
    /// Outer-loop iteration at which the trace was verified.
    pub found_at: usize,
}

/// Per-example result of the phase-1 candidate search.
#[derive(Clone, Debug)]
pub struct Phase1Result {
    pub candidates: Vec<CandidateTrace>,
    pub samples: usize,
    pub first_found_at: Option<usize>,
}

fn internal_nodes(tree: &ParseTree) -> usize {
    usize::from(!tree.is_leaf()) + tree.children.iter().map(internal_nodes).sum::<usize>()
}

fn admit_candidate(
    candidates: &mut Vec<CandidateTrace>,
    kinds: Vec<InstructionKind>,
    found_at: usize,
    cap: usize,
) {
    if candidates.iter().any(|c| c.kinds == kinds) {
        return;
    }
    candidates.push(CandidateTrace { kinds, found_at });
    // keep the shortest `cap` distinct traces, earliest discovery first
    candidates.sort_by_key(|c| (c.kinds.len(), c.found_at));
    candidates.truncate(cap);
}

/// Phase 1: search for candidate instruction-kind traces for one example.
///
/// The outer loop samples exploratory traces and REINFORCE-updates the
/// search model; exact parses are admitted directly, and near misses are
/// verified by an inner loop of forced-trace training that is reverted
/// exactly (optimizer moments included) when verification fails.
pub fn phase1_search(
    init: &Controller,
    grammar: &Grammar,
    example: &Example,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<Phase1Result, TrainError> {
    let mut net = init.clone();
    let mut candidates: Vec<CandidateTrace> = Vec::new();
    let mut first_found_at = None;
    // traces that failed verification under the current search model; the
    // memo clears whenever the model is re-initialized, so every model era
    // verifies each novel trace once instead of re-burning the inner loop
    // on every repeat sample
    let mut rejected: std::collections::HashSet<Vec<InstructionKind>> =
        std::collections::HashSet::new();
    for outer in 1..=cfg.outer_iters {
        if outer % cfg.reinit_every == 0 {
            // escape sub-optimal search models
            net = init.clone();
            rejected.clear();
        }
        let outcome = unsupervised_step(&mut net, grammar, example, cfg, rng);
        if outcome.exact {
            first_found_at.get_or_insert(outer);
            admit_candidate(&mut candidates, outcome.kinds, outer, cfg.candidate_cap);
            continue;
        }
        if outcome.tree.is_none() {
            continue;
        }
        let kinds = outcome.kinds;
        if candidates.iter().any(|c| c.kinds == kinds) {
            continue; // already verified
        }
        if rejected.contains(&kinds) {
            continue;
        }
        let displaceable = candidates.len() < cfg.candidate_cap
            || kinds.len() < candidates.last().map(|c| c.kinds.len()).unwrap_or(usize::MAX);
        if !displaceable {
            continue;
        }
        // every internal node of the target needs its own REDUCE event, so
        // traces with too few of them can never verify; skip the inner loop
        // it would only revert
        let reduce_steps = kinds
            .iter()
            .filter(|&&k| k == InstructionKind::Reduce)
            .count();
        if reduce_steps < internal_nodes(&example.tree) {
            continue;
        }
        let snapshot = net.store.clone();
        let mut verified = false;
        for _ in 0..cfg.inner_iters {
            let weak = weakly_supervised_step(&mut net, grammar, example, &kinds, cfg, rng)?;
            if weak.exact {
                verified = true;
            }
        }
        if verified {
            first_found_at.get_or_insert(outer);
            admit_candidate(&mut candidates, kinds, outer, cfg.candidate_cap);
        } else {
            net.store = snapshot;
            rejected.insert(kinds);
        }
    }
    Ok(Phase1Result {
        candidates,
        samples: cfg.outer_iters,
        first_found_at,
    })
}

/// Greedy-parse one example; `None` when the run fails or overruns.
pub fn greedy_parse(ctl: &Controller, grammar: &Grammar, tokens: &[Label]) -> Option<RunOutcome> {
    let config = grammar.machine_config_for_input(tokens.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0); // unused by greedy mode
    crate::machine::run_controller(tokens.to_vec(), &config, |state| {
        Ok::<_, std::convert::Infallible>(ctl.choose_instruction(
            state,
            &config,
            ChooseMode::Greedy,
            &mut rng,
        ))
    })
    .ok()
}

/// An example whose trace is still being searched, with its phase-1
/// candidate set.
#[derive(Clone, Debug)]
pub struct Phase2Item {
    pub example: Example,
    pub candidates: Vec<Vec<InstructionKind>>,
}

#[derive(Clone, Debug)]
pub struct Phase2Outcome {
    pub attempts: usize,
    /// Chosen candidate index per item in the successful specification.
    pub assignment: Vec<usize>,
    pub epochs_in_final_attempt: usize,
}

/// Phase 2: find a satisfiable specification by sampling one candidate
/// trace per example, training a fresh model under that specification, and
/// down-weighting the sampled trace of every example the trained model
/// still parses wrongly.
pub fn phase2_search(
    init: &Controller,
    grammar: &Grammar,
    items: &[Phase2Item],
    replay: &[(Example, Vec<InstructionKind>)],
    cfg: &TrainConfig,
    lesson: usize,
    rng: &mut impl Rng,
) -> Result<(Controller, Phase2Outcome), TrainError> {
    let mut thetas: Vec<Vec<f64>> = items
        .iter()
        .map(|item| {
            (0..item.candidates.len())
                .map(|_| rng.gen_range(-cfg.theta_init_half_range..=cfg.theta_init_half_range))
                .collect()
        })
        .collect();
    for attempt in 1..=cfg.phase2_max_attempts {
        let assignment: Vec<usize> = thetas
            .iter()
            .map(|theta| sample(&softmax(theta), rng))
            .collect();
        // a fresh model per attempt prevents contamination from failed
        // specifications
        let mut net = init.clone();
        let mut trained_to = 0;
        let mut all_exact = false;
        for epoch in 1..=cfg.phase2_epochs {
            for (item, &j) in items.iter().zip(&assignment) {
                weakly_supervised_step(
                    &mut net,
                    grammar,
                    &item.example,
                    &item.candidates[j],
                    cfg,
                    rng,
                )?;
            }
            for (example, kinds) in replay {
                weakly_supervised_step(&mut net, grammar, example, kinds, cfg, rng)?;
            }
            trained_to = epoch;
            all_exact = items
                .iter()
                .map(|item| &item.example)
                .chain(replay.iter().map(|(e, _)| e))
                .all(|example| {
                    greedy_parse(&net, grammar, &example.tokens)
                        .map(|out| out.tree == example.tree)
                        .unwrap_or(false)
                });
            if all_exact {
                break;
            }
        }
        if cfg.verbose {
            eprintln!(
                "[lesson {lesson}] phase2 attempt {attempt}: assignment {assignment:?} {} after {trained_to} epoch(s)",
                if all_exact { "satisfied" } else { "failed" }
            );
        }
        if all_exact {
            return Ok((
                net,
                Phase2Outcome {
                    attempts: attempt,
                    assignment,
                    epochs_in_final_attempt: trained_to,
                },
            ));
        }
        // down-weight the sampled traces of wrongly parsed examples
        for ((item, theta), &j) in items.iter().zip(&mut thetas).zip(&assignment) {
            let difference = match greedy_parse(&net, grammar, &item.example.tokens) {
                Some(out) if out.tree == item.example.tree => continue,
                Some(out) => diff(&out.tree, &item.example.tree) as f64,
                None => (item.example.tree.size() + item.example.tokens.len()) as f64,
            };
            theta_update(theta, j, difference, cfg.tau);
        }
    }
    Err(TrainError::Phase2Exhausted {
        lesson,
        attempts: cfg.phase2_max_attempts,
    })
}

/// Per-lesson training summary.
#[derive(Clone, Debug)]
pub struct LessonReport {
    pub lesson: usize,
    pub new_examples: usize,
    pub phase1: Vec<Phase1Summary>,
    pub phase2_attempts: usize,
    pub phase2_epochs: usize,
    pub assignment: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Phase1Summary {
    pub input: String,
    /// Compact letter form of each retained candidate, shortest first.
    pub candidates: Vec<String>,
    pub candidate_lengths: Vec<usize>,
    pub first_found_at: Option<usize>,
    pub outer_iters: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingReport {
    pub lessons: Vec<LessonReport>,
    pub final_training_accuracy: f64,
}

/// Full curriculum training: lesson by lesson, phase 1 then phase 2, each
/// lesson replaying all earlier examples with their fixed traces.
pub fn curriculum_train(
    grammar: &Grammar,
    dataset: &Dataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(Controller, TrainingReport), TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = ControllerDims::for_grammar(grammar, cfg.hidden);
    let mut ctl = Controller::new(dims, &mut rng);
    let mut fixed: Vec<(Example, Vec<InstructionKind>)> = Vec::new();
    let mut report = TrainingReport::default();

    for (lesson_idx, lesson) in dataset.lessons.iter().enumerate() {
        let lesson_no = lesson_idx + 1;
        // phase 1 per new example, independent searches with derived seeds
        let base = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(lesson_no as u64);
        let phase1_results: Vec<Result<Phase1Result, TrainError>> = lesson
            .par_iter()
            .enumerate()
            .map(|(i, example)| {
                let mut ex_rng = ChaCha8Rng::seed_from_u64(
                    base.wrapping_add((i as u64 + 1).wrapping_mul(0x2545_F491_4F6C_DD1D)),
                );
                phase1_search(&ctl, grammar, example, cfg, &mut ex_rng)
            })
            .collect();
        let mut items = Vec::with_capacity(lesson.len());
        let mut phase1_summaries = Vec::with_capacity(lesson.len());
        for (example, result) in lesson.iter().zip(phase1_results) {
            let result = result?;
            if cfg.verbose {
                eprintln!(
                    "[lesson {lesson_no}] phase1 {:20} -> {} candidate(s), first at iter {:?}",
                    example.input_text(grammar),
                    result.candidates.len(),
                    result.first_found_at,
                );
            }
            if result.candidates.is_empty() {
                return Err(TrainError::Phase1Empty {
                    lesson: lesson_no,
                    example: example.input_text(grammar),
                });
            }
            phase1_summaries.push(Phase1Summary {
                input: example.input_text(grammar),
                candidates: result
                    .candidates
                    .iter()
                    .map(|c| crate::machine::kind_trace_letters(&c.kinds))
                    .collect(),
                candidate_lengths: result.candidates.iter().map(|c| c.kinds.len()).collect(),
                first_found_at: result.first_found_at,
                outer_iters: result.samples,
            });
            items.push(Phase2Item {
                example: example.clone(),
                candidates: result.candidates.into_iter().map(|c| c.kinds).collect(),
            });
        }
        let (net, outcome) =
            phase2_search(&ctl, grammar, &items, &fixed, cfg, lesson_no, &mut rng)?;
        if cfg.verbose {
            eprintln!(
                "[lesson {lesson_no}] phase2 satisfied after {} attempt(s), {} epoch(s)",
                outcome.attempts, outcome.epochs_in_final_attempt
            );
        }
        ctl = net;
        for (item, &j) in items.iter().zip(&outcome.assignment) {
            fixed.push((item.example.clone(), item.candidates[j].clone()));
        }
        report.lessons.push(LessonReport {
            lesson: lesson_no,
            new_examples: lesson.len(),
            phase1: phase1_summaries,
            phase2_attempts: outcome.attempts,
            phase2_epochs: outcome.epochs_in_final_attempt,
            assignment: outcome.assignment,
        });
    }
    let (correct, total) = training_accuracy(&ctl, grammar, dataset);
    report.final_training_accuracy = correct as f64 / total as f64;
    Ok((ctl, report))
}

/// Exact-tree accuracy over every example in the dataset.
pub fn training_accuracy(ctl: &Controller, grammar: &Grammar, dataset: &Dataset) -> (usize, usize) {
    let correct = dataset
        .examples()
        .filter(|e| {
            greedy_parse(ctl, grammar, &e.tokens)
                .map(|out| out.tree == e.tree)
                .unwrap_or(false)
        })
        .count();
    (correct, dataset.len())
}

/// The supervised upper-bound path: train on oracle kind traces directly,
/// skipping both search phases.
pub fn supervised_train(
    grammar: &Grammar,
    dataset: &Dataset,
    cfg: &TrainConfig,
    max_epochs: usize,
    seed: u64,
) -> Result<(Controller, SupervisedReport), TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = ControllerDims::for_grammar(grammar, cfg.hidden);
    let mut ctl = Controller::new(dims, &mut rng);
    let traces: Vec<(Example, Vec<InstructionKind>)> = dataset
        .examples()
        .map(|e| {
            let trace = e
                .oracle_trace
                .clone()
                .unwrap_or_else(|| {
                    crate::grammar::oracle_parse(grammar, e.tokens.clone())
                        .expect("supervised training needs oracle-parsable examples")
                        .oracle_trace
                        .unwrap()
                });
            (e.clone(), trace.iter().map(Instruction::kind).collect())
        })
        .collect();
    let mut history = Vec::new();
    for epoch in 1..=max_epochs {
        for (example, kinds) in &traces {
            weakly_supervised_step(&mut ctl, grammar, example, kinds, cfg, &mut rng)?;
        }
        let (correct, total) = training_accuracy(&ctl, grammar, dataset);
        history.push((epoch, correct));
        if correct == total {
            return Ok((
                ctl,
                SupervisedReport {
                    epochs: epoch,
                    reached_full_accuracy: true,
                    accuracy_history: history,
                },
            ));
        }
    }
    Ok((
        ctl,
        SupervisedReport {
            epochs: max_epochs,
            reached_full_accuracy: false,
            accuracy_history: history,
        },
    ))
}

#[derive(Clone, Debug)]
pub struct SupervisedReport {
    pub epochs: usize,
    pub reached_full_accuracy: bool,
    pub accuracy_history: Vec<(usize, usize)>,
}

/// Exact-match evaluation over a pool, in parallel.
pub struct EvalReport {
    pub correct: usize,
    pub total: usize,
    pub failures: Vec<EvalFailure>,
}

pub struct EvalFailure {
    pub input: String,
    pub predicted: Option<String>,
    pub partial_steps: usize,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

pub fn evaluate(ctl: &Controller, grammar: &Grammar, examples: &[Example]) -> EvalReport {
    let results: Vec<Option<EvalFailure>> = examples
        .par_iter()
        .map(|example| {
            let config = grammar.machine_config_for_input(example.tokens.len());
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let run = crate::machine::run_controller(example.tokens.clone(), &config, |state| {
                Ok::<_, std::convert::Infallible>(ctl.choose_instruction(
                    state,
                    &config,
                    ChooseMode::Greedy,
                    &mut rng,
                ))
            });
            match run {
                Ok(out) if out.tree == example.tree => None,
                Ok(out) => Some(EvalFailure {
                    input: example.input_text(grammar),
                    predicted: Some(crate::tree::serialize(&out.tree, &grammar.vocab)),
                    partial_steps: out.trace.len(),
                }),
                Err(failure) => Some(EvalFailure {
                    input: example.input_text(grammar),
                    predicted: None,
                    partial_steps: failure.partial_trace.len(),
                }),
            }
        })
        .collect();
    let failures: Vec<EvalFailure> = results.into_iter().flatten().collect();
    EvalReport {
        correct: examples.len() - failures.len(),
        total: examples.len(),
        failures,
    }
}
