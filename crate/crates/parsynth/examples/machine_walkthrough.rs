//! Step-by-step walkthrough of the stack machine parsing "x + y" under the
//! AM reference parser, printing the full state after every instruction.
//!
//!     cargo run --example machine_walkthrough -- "x + y * 0"

use parsynth::grammar::{am, reference_controller};
use parsynth::machine::MachineState;
use parsynth::tree::serialize;

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "x + y".to_string());
    let grammar = am();
    let tokens = grammar.tokenize(&text).expect("AM tokens only");
    let config = grammar.machine_config_for_input(tokens.len());
    let mut state = MachineState::new(tokens);

    println!("parsing {text:?} with the AM reference parser\n");
    loop {
        let inst = reference_controller(&grammar, &state).expect("oracle never gets stuck");
        let step = state.steps() + 1;
        let result = state.step(&inst, &config).expect("oracle emits valid instructions");
        print!("step {step}: {:<18} ", inst.display(&grammar.vocab).to_string());
        let frames: Vec<String> = state
            .stack()
            .iter()
            .map(|f| {
                let items: Vec<String> = f
                    .items
                    .iter()
                    .map(|t| serialize(t, &grammar.vocab))
                    .collect();
                format!("({}, [{}])", f.fid, items.join(", "))
            })
            .collect();
        let remaining: Vec<&str> = (state.consumed()..state.consumed() + state.remaining())
            .map(|_| "")
            .collect();
        let _ = remaining;
        println!(
            "stack {}  input left {}",
            if frames.is_empty() {
                "-".to_string()
            } else {
                frames.join(" ")
            },
            state.remaining()
        );
        if let Some(tree) = result {
            println!("\nfinal tree: {}", serialize(&tree, &grammar.vocab));
            break;
        }
    }
}
