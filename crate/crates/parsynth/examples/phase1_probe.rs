//! Instrumented phase-1 style search on one AM example, printing what the
//! sampler actually does: how often rollouts terminate, how often the
//! verification inner loop fires, and when candidates are found.
//!
//!     cargo run --release --example phase1_probe -- "x + y" 2000 1

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parsynth::controller::{Controller, ControllerDims};
use parsynth::grammar::{am, oracle_parse};
use parsynth::machine::kind_trace_letters;
use parsynth::train::{unsupervised_step, weakly_supervised_step, TrainConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "x + y".into());
    let outer: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let g = am();
    let ex = oracle_parse(&g, g.tokenize(&text).unwrap()).unwrap();
    let cfg = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Controller::new(ControllerDims::for_grammar(&g, cfg.hidden), &mut rng);
    let mut net = init.clone();

    let mut candidates: Vec<Vec<parsynth::machine::InstructionKind>> = Vec::new();
    let (mut finals, mut failures, mut exacts, mut verifications, mut verified_ok) =
        (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut trace_len_sum = 0usize;
    let t0 = Instant::now();
    let mut t_unsup = 0.0f64;
    let mut t_verify = 0.0f64;
    for iter in 1..=outer {
        if iter % cfg.reinit_every == 0 {
            net = init.clone();
        }
        let t1 = Instant::now();
        let out = unsupervised_step(&mut net, &g, &ex, &cfg, &mut rng);
        t_unsup += t1.elapsed().as_secs_f64();
        trace_len_sum += out.kinds.len();
        match (&out.tree, out.exact) {
            (Some(_), true) => {
                exacts += 1;
                if !candidates.contains(&out.kinds) {
                    println!(
                        "iter {iter}: exact rollout, new candidate {} ({:.1}s)",
                        kind_trace_letters(&out.kinds),
                        t0.elapsed().as_secs_f64()
                    );
                    candidates.push(out.kinds.clone());
                }
            }
            (Some(_), false) => {
                finals += 1;
                if candidates.contains(&out.kinds) || candidates.len() >= cfg.candidate_cap {
                    continue;
                }
                let needed = ex.tree.subtrees().iter().filter(|t| !t.is_leaf()).count();
                let reduces = out
                    .kinds
                    .iter()
                    .filter(|&&k| k == parsynth::machine::InstructionKind::Reduce)
                    .count();
                if reduces < needed {
                    continue;
                }
                verifications += 1;
                let t2 = Instant::now();
                let snapshot = net.store.clone();
                let mut ok = false;
                for _ in 0..cfg.inner_iters {
                    let weak =
                        weakly_supervised_step(&mut net, &g, &ex, &out.kinds, &cfg, &mut rng)
                            .unwrap();
                    if weak.exact {
                        ok = true;
                    }
                }
                t_verify += t2.elapsed().as_secs_f64();
                if ok {
                    verified_ok += 1;
                    println!(
                        "iter {iter}: verified candidate {} ({:.1}s)",
                        kind_trace_letters(&out.kinds),
                        t0.elapsed().as_secs_f64()
                    );
                    candidates.push(out.kinds.clone());
                } else {
                    net.store = snapshot;
                }
            }
            _ => failures += 1,
        }
        if iter % 500 == 0 {
            println!(
                "iter {iter}: finals {finals} failures {failures} exacts {exacts} \
                 verifications {verifications} (ok {verified_ok}) mean-len {:.1} \
                 [unsup {:.1}s verify {:.1}s]",
                trace_len_sum as f64 / iter as f64,
                t_unsup,
                t_verify
            );
        }
    }
    println!(
        "done in {:.1}s: {} candidate(s): {:?}",
        t0.elapsed().as_secs_f64(),
        candidates.len(),
        candidates
            .iter()
            .map(|k| kind_trace_letters(k))
            .collect::<Vec<_>>()
    );
}
