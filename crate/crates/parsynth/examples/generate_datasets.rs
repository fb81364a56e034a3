//! Build and save every standard dataset: the three curricula plus test
//! pools at several average lengths.
//!
//!     cargo run --release --example generate_datasets -- out_dir

use parsynth::grammar::{build_dataset, save_dataset, DatasetSpec, Grammar, GrammarName};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "datasets".into());
    let out = std::path::PathBuf::from(out);
    std::fs::create_dir_all(&out).expect("create output directory");
    let seed = 1;
    for name in [GrammarName::Am, GrammarName::While, GrammarName::Lambda] {
        let grammar = Grammar::by_name(name);
        let curriculum = build_dataset(&grammar, DatasetSpec::Curriculum, seed);
        let path = out.join(format!("{name}-curriculum.tsv"));
        save_dataset(&path, &grammar, &curriculum).unwrap();
        println!(
            "{}: curriculum {} examples in {} lessons -> {}",
            name,
            curriculum.len(),
            curriculum.lessons.len(),
            path.display()
        );
        for avg_len in [10usize, 50] {
            let pool = build_dataset(
                &grammar,
                DatasetSpec::Test {
                    avg_len,
                    count: 1000,
                },
                seed,
            );
            let path = out.join(format!("{name}-test-{avg_len}.tsv"));
            save_dataset(&path, &grammar, &pool).unwrap();
            println!(
                "{}: test-{} {} examples, mean length {:.2} -> {}",
                name,
                avg_len,
                pool.len(),
                pool.mean_input_len(),
                path.display()
            );
        }
    }
}
