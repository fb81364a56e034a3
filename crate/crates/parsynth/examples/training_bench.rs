//! Micro-benchmark of the training primitives: wall time per weakly
//! supervised step, per exploration rollout, and per greedy parse, plus a
//! single-example convergence probe.
//!
//!     cargo run --release --example training_bench

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parsynth::controller::{Controller, ControllerDims};
use parsynth::grammar::{am, oracle_parse};
use parsynth::machine::Instruction;
use parsynth::train::{
    greedy_parse, unsupervised_step, weakly_supervised_step, TrainConfig,
};

fn main() {
    let g = am();
    let cfg = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ctl = Controller::new(ControllerDims::for_grammar(&g, cfg.hidden), &mut rng);

    for text in ["x + y", "y + 1 + x + 0"] {
        let ex = oracle_parse(&g, g.tokenize(text).unwrap()).unwrap();
        let kinds: Vec<_> = ex
            .oracle_trace
            .as_ref()
            .unwrap()
            .iter()
            .map(Instruction::kind)
            .collect();

        let t0 = Instant::now();
        let n = 200;
        for _ in 0..n {
            weakly_supervised_step(&mut ctl, &g, &ex, &kinds, &cfg, &mut rng).unwrap();
        }
        let weak = t0.elapsed().as_secs_f64() / n as f64;

        let t0 = Instant::now();
        for _ in 0..n {
            unsupervised_step(&mut ctl, &g, &ex, &cfg, &mut rng);
        }
        let unsup = t0.elapsed().as_secs_f64() / n as f64;

        let t0 = Instant::now();
        for _ in 0..n {
            let _ = greedy_parse(&ctl, &g, &ex.tokens);
        }
        let greedy = t0.elapsed().as_secs_f64() / n as f64;

        println!(
            "{text:>16}: weak {:.3} ms  unsup {:.3} ms  greedy {:.3} ms",
            weak * 1e3,
            unsup * 1e3,
            greedy * 1e3
        );
    }

    // convergence probe: fit one example from scratch
    let ex = oracle_parse(&g, g.tokenize("x + y").unwrap()).unwrap();
    let kinds: Vec<_> = ex
        .oracle_trace
        .as_ref()
        .unwrap()
        .iter()
        .map(Instruction::kind)
        .collect();
    let mut ctl = Controller::new(ControllerDims::for_grammar(&g, cfg.hidden), &mut rng);
    for step in 1..=300 {
        weakly_supervised_step(&mut ctl, &g, &ex, &kinds, &cfg, &mut rng).unwrap();
        if let Some(out) = greedy_parse(&ctl, &g, &ex.tokens) {
            if out.tree == ex.tree {
                println!("fit x + y exactly after {step} weakly supervised step(s)");
                return;
            }
        }
    }
    println!("did not fit x + y in 300 steps");
}
