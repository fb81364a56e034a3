//! The supervised upper-bound path: train with oracle instruction-kind
//! traces (no search), then measure length generalization on fresh test
//! pools.
//!
//!     cargo run --release --example supervised_training -- while 50 1000

use std::time::Instant;

use parsynth::grammar::{build_dataset, DatasetSpec, Grammar, GrammarName};
use parsynth::train::{evaluate, supervised_train, TrainConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let name: GrammarName = args
        .next()
        .unwrap_or_else(|| "while".into())
        .parse()
        .expect("grammar name");
    let test_len: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let test_count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let grammar = Grammar::by_name(name);
    let curriculum = build_dataset(&grammar, DatasetSpec::Curriculum, seed);
    println!(
        "supervised training on the {} curriculum ({} examples in {} lessons)",
        grammar.name,
        curriculum.len(),
        curriculum.lessons.len()
    );
    let cfg = TrainConfig {
        verbose: true,
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let (ctl, report) =
        supervised_train(&grammar, &curriculum, &cfg, 200, seed).expect("oracle traces are valid");
    println!(
        "reached {} accuracy after {} epoch(s) in {:.1}s",
        if report.reached_full_accuracy { "full" } else { "partial" },
        report.epochs,
        t0.elapsed().as_secs_f64()
    );
    for (epoch, correct) in report
        .accuracy_history
        .iter()
        .filter(|(e, _)| e % 5 == 0 || *e == report.epochs)
    {
        println!("  epoch {epoch:>4}: {correct}/{} exact", curriculum.len());
    }

    let pool = build_dataset(
        &grammar,
        DatasetSpec::Test {
            avg_len: test_len,
            count: test_count,
        },
        seed,
    );
    let examples: Vec<_> = pool.examples().cloned().collect();
    let t0 = Instant::now();
    let eval = evaluate(&ctl, &grammar, &examples);
    println!(
        "test avg-len {test_len}: {}/{} exact ({:.4}) in {:.1}s",
        eval.correct,
        eval.total,
        eval.accuracy(),
        t0.elapsed().as_secs_f64()
    );
    for failure in eval.failures.iter().take(5) {
        println!("  FAIL {}", failure.input);
    }
}
