//! Length-generalization sweep: evaluate a trained checkpoint on freshly
//! generated pools far longer than anything in training.
//!
//!     cargo run --release --example length_generalization -- model.ckpt 10 50 100 500

use parsynth::controller::{Controller, ControllerDims};
use parsynth::grammar::{build_dataset, DatasetSpec, Grammar};
use parsynth::nn::read_checkpoint;
use parsynth::train::evaluate;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().expect("usage: length_generalization <ckpt> [lens...]");
    let lens: Vec<usize> = args.filter_map(|a| a.parse().ok()).collect();
    let lens = if lens.is_empty() { vec![10, 50, 100] } else { lens };

    let (header, store) = read_checkpoint(std::path::Path::new(&path)).expect("readable checkpoint");
    let grammar = Grammar::by_name(header.grammar.parse().expect("known grammar"));
    assert_eq!(
        header.terminals,
        grammar.vocab.terminal_names(),
        "checkpoint vocabulary must match the grammar"
    );
    let dims = ControllerDims {
        num_terminals: header.terminals.len(),
        num_non_terminals: header.non_terminals.len(),
        num_fids: header.num_fids,
        max_list_len: header.max_list_len,
        hidden: header.hidden,
    };
    let ctl = Controller::from_store(dims, store).expect("checkpoint matches controller layout");

    println!("{} checkpoint, hidden size {}", header.grammar, header.hidden);
    for len in lens {
        let count = if len >= 500 { 100 } else { 1000 };
        let pool = build_dataset(&grammar, DatasetSpec::Test { avg_len: len, count }, 1);
        let examples: Vec<_> = pool.examples().cloned().collect();
        let eval = evaluate(&ctl, &grammar, &examples);
        println!(
            "  avg-len {len:>5}: {}/{} exact ({:.4})",
            eval.correct,
            eval.total,
            eval.accuracy()
        );
    }
}
