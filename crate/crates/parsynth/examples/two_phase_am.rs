//! End-to-end two-phase reinforcement-learning run on the AM curriculum:
//! phase 1 recovers candidate instruction-kind traces per example, phase 2
//! searches for one consistent trace assignment, lesson by lesson.
//!
//!     cargo run --release --example two_phase_am -- [seed] [M2]

use std::time::Instant;

use parsynth::grammar::{am, build_dataset, DatasetSpec};
use parsynth::report::render_training_report;
use parsynth::train::{curriculum_train, evaluate, TrainConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let outer_iters: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);

    let grammar = am();
    let curriculum = build_dataset(&grammar, DatasetSpec::Curriculum, seed);
    let cfg = TrainConfig {
        outer_iters,
        verbose: true,
        ..TrainConfig::default()
    };
    println!(
        "training on the {}-example AM curriculum, seed {seed}, M2 = {outer_iters}",
        curriculum.len()
    );
    let t0 = Instant::now();
    match curriculum_train(&grammar, &curriculum, &cfg, seed) {
        Ok((ctl, report)) => {
            println!("{}", render_training_report(&report));
            println!("wall time: {:.1}s", t0.elapsed().as_secs_f64());
            for avg_len in [50usize, 100] {
                let pool = build_dataset(
                    &grammar,
                    DatasetSpec::Test {
                        avg_len,
                        count: 200,
                    },
                    seed,
                );
                let examples: Vec<_> = pool.examples().cloned().collect();
                let eval = evaluate(&ctl, &grammar, &examples);
                println!(
                    "test avg-len {avg_len}: {}/{} exact ({:.3})",
                    eval.correct,
                    eval.total,
                    eval.accuracy()
                );
            }
        }
        Err(e) => {
            println!("training failed after {:.1}s: {e}", t0.elapsed().as_secs_f64());
            std::process::exit(1);
        }
    }
}
