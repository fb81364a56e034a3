//! The search-space census for the AM language: how many valid and correct
//! traces exist per input, exactly the numbers the two-phase search is up
//! against.
//!
//!     cargo run --release --example trace_census

use parsynth::enumerate::{census, count_exec_traces, enumerate_kind_traces, CensusOptions};
use parsynth::grammar::{am, build_dataset, DatasetSpec};
use parsynth::report::render_census_table;

fn main() {
    let grammar = am();
    let options = CensusOptions::default();

    println!("valid traces at the shortest correct length, by input length:");
    let config = grammar.machine_config(200);
    for (input_len, trace_len) in [(3usize, 9usize), (5, 15), (7, 21)] {
        let kinds = enumerate_kind_traces(input_len, &config, trace_len);
        let execs = count_exec_traces(&kinds, &config, grammar.vocab.num_non_terminals());
        println!(
            "  length {input_len}: {:>6} kind traces, {:>13} execution traces (trace length {trace_len})",
            kinds.len(),
            execs
        );
    }

    println!("\nper-example census over the whole AM training curriculum:");
    let curriculum = build_dataset(&grammar, DatasetSpec::Curriculum, 0);
    let mut rows = Vec::new();
    for example in curriculum.examples() {
        rows.push(census(&grammar, example.tokens.clone(), &options).expect("desk-scale input"));
    }
    print!("{}", render_census_table(&rows));
}
