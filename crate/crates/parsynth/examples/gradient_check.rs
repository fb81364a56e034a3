//! Central finite-difference check of the analytic gradients through every
//! head and every encoder of the controller.
//!
//!     cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parsynth::controller::{Controller, ControllerDims};
use parsynth::grammar::while_lang;
use parsynth::machine::Observation;
use parsynth::nn::{max_relative_grad_error, NodeId, Tape};
use parsynth::vocab::Label;

fn main() {
    let grammar = while_lang();
    let dims = ControllerDims::for_grammar(&grammar, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_overall: f64 = 0.0;

    for config in 0..10 {
        let mut ctl = Controller::new(dims, &mut rng);
        // random observation over the WHILE vocabulary
        let roots: Vec<Label> = (0..rng.gen_range(1..=3))
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Label::Terminal(rng.gen_range(0..dims.num_terminals as u16))
                } else {
                    Label::NonTerminal(rng.gen_range(0..dims.num_non_terminals as u16))
                }
            })
            .collect();
        let obs = Observation {
            fid: rng.gen_range(0..dims.num_fids as u16),
            roots,
            tok: Some(Label::Terminal(rng.gen_range(0..dims.num_terminals as u16))),
        };
        let kind_pick = rng.gen_range(0..5);
        let fid_pick = rng.gen_range(0..dims.num_fids);
        let nt_pick = rng.gen_range(0..dims.num_non_terminals);
        let comb_pick = 0usize;

        let forward = |ctl: &Controller, obs: &Observation| -> (Tape, Vec<(NodeId, f64)>) {
            let mut tape = Tape::new();
            let kind = ctl.kind_logits(&mut tape, obs);
            let fid = ctl.fid_logits(&mut tape, obs);
            let nt = ctl.nt_logits(&mut tape, &obs.roots);
            let comb = ctl.comb_logits(&mut tape, nt_pick);
            let terms = vec![
                (tape.masked_log_pick(kind, &[true; 5], kind_pick), -1.0),
                (
                    tape.explore_log_pick(kind, &[true, true, false, true, false], 0.1, 0),
                    -0.5,
                ),
                (
                    tape.masked_log_pick(fid, &vec![true; dims.num_fids], fid_pick),
                    -2.0,
                ),
                (
                    tape.masked_log_pick(nt, &vec![true; dims.num_non_terminals], nt_pick),
                    -1.5,
                ),
                (
                    tape.masked_log_pick(comb, ctl.codec.mask_for_len(2), comb_pick),
                    -3.0,
                ),
            ];
            (tape, terms)
        };

        let (tape, terms) = forward(&ctl, &obs);
        let grads = tape.backward(&ctl.store, &terms);
        let worst = max_relative_grad_error(
            &mut ctl.store,
            &grads,
            |store| {
                let probe = Controller::from_store(dims, store.clone()).unwrap();
                let (tape, terms) = forward(&probe, &obs);
                terms
                    .iter()
                    .map(|&(node, weight)| weight * tape.scalar(node))
                    .sum()
            },
            6,
            1e-5,
            &mut rng,
        );
        println!("config {config:>2}: max relative error {worst:.3e}");
        worst_overall = worst_overall.max(worst);
    }
    println!("\nworst over all configurations: {worst_overall:.3e} (tolerance 1e-4)");
    assert!(worst_overall < 1e-4);
}
