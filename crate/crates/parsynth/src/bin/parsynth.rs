//! Thin command-line front end over the parsynth library:
//! `gen` builds datasets, `train` fits a controller, `eval` scores a
//! checkpoint against a pool, and `enum` runs the brute-force trace census.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use parsynth::config::RunConfig;
use parsynth::controller::{Controller, ControllerDims};
use parsynth::enumerate::{census, CensusOptions};
use parsynth::grammar::{
    build_dataset, load_dataset, save_dataset, DatasetSpec, Grammar, GrammarName,
};
use parsynth::machine::kind_trace_from_letters;
use parsynth::nn::{read_checkpoint, write_checkpoint, CheckpointHeader};
use parsynth::report::{
    census_to_json, render_census_table, render_eval_report, render_training_report, MetricsSink,
};
use parsynth::train::{curriculum_train, evaluate, supervised_train, training_accuracy};

#[derive(Parser)]
#[command(name = "parsynth", about = "learned LL parsers over a stack machine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file.
    Gen(GenArgs),
    /// Train a controller on a curriculum dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset (exact tree match).
    Eval(EvalArgs),
    /// Enumerate traces: the search-space census.
    Enum(EnumArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Grammar: am | while | lambda.
    grammar: GrammarName,
    /// Dataset kind: curriculum | std | test.
    kind: String,
    #[arg(long, default_value_t = 10)]
    avg_len: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Curriculum dataset file produced by `gen`.
    #[arg(long)]
    dataset: PathBuf,
    /// Output directory for checkpoints, report, metrics, config echo.
    #[arg(long)]
    out: PathBuf,
    /// Train on the dataset's oracle traces, skipping both search phases.
    #[arg(long)]
    supervised_traces: bool,
    /// Optional key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. --set m2=2000 --set seed=7.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained model; not needed with --oracle.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    max_failures: usize,
    /// Evaluate the deterministic reference parser instead of a checkpoint.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct EnumArgs {
    grammar: GrammarName,
    /// One input to census, e.g. "x + y".
    #[arg(long)]
    input: Option<String>,
    /// Census every input of a dataset file.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Census the full fixed AM training set.
    #[arg(long)]
    table2: bool,
    /// Report only the valid trace counts for a 7-token AM input via the
    /// product formula.
    #[arg(long)]
    len7_exec_count: bool,
    /// Check that phase-1 candidate sets recorded in a metrics file are
    /// contained in the enumerator's correct kind-trace sets.
    #[arg(long)]
    verify_phase1: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Enum(args) => cmd_enum(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let grammar = Grammar::by_name(args.grammar);
    let spec = match args.kind.as_str() {
        "curriculum" => DatasetSpec::Curriculum,
        "std" => DatasetSpec::Std {
            avg_len: args.avg_len,
            count: args.count,
        },
        "test" => DatasetSpec::Test {
            avg_len: args.avg_len,
            count: args.count,
        },
        other => bail!("unknown dataset kind {other:?} (curriculum | std | test)"),
    };
    let dataset = build_dataset(&grammar, spec, args.seed);
    save_dataset(&args.out, &grammar, &dataset)?;
    println!(
        "wrote {} examples (mean length {:.2}) to {}",
        dataset.len(),
        dataset.mean_input_len(),
        args.out.display()
    );
    Ok(())
}

fn controller_header(grammar: &Grammar, dims: &ControllerDims) -> CheckpointHeader {
    CheckpointHeader {
        grammar: grammar.name.to_string(),
        max_list_len: grammar.max_list_len,
        num_fids: grammar.num_fids,
        hidden: dims.hidden,
        terminals: grammar.vocab.terminal_names().to_vec(),
        non_terminals: grammar.vocab.non_terminal_names().to_vec(),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (grammar, dataset) = load_dataset(&args.dataset)?;
    let mut config = RunConfig::new(grammar.name);
    if let Some(path) = &args.config {
        config.apply_file(path)?;
    }
    for pair in &args.sets {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {pair:?}"))?;
        config.set(k, v)?;
    }
    std::fs::create_dir_all(&args.out)?;
    config.echo_to(&args.out)?;
    let mut metrics = MetricsSink::to_file(&args.out.join("metrics.jsonl"))?;
    let dims = ControllerDims::for_grammar(&grammar, config.train.hidden);
    let header = controller_header(&grammar, &dims);

    if args.supervised_traces {
        let (ctl, sup) = supervised_train(
            &grammar,
            &dataset,
            &config.train,
            config.supervised_epochs,
            config.seed,
        )?;
        let (correct, total) = training_accuracy(&ctl, &grammar, &dataset);
        metrics.emit(
            "supervised_train",
            json!({
                "grammar": grammar.name.to_string(),
                "epochs": sup.epochs,
                "accuracy": correct as f64 / total as f64,
            }),
        );
        let report_path = args.out.join("report.txt");
        std::fs::write(
            &report_path,
            format!(
                "supervised training: {}/{} exact after {} epoch(s)\n",
                correct, total, sup.epochs
            ),
        )?;
        write_checkpoint(&args.out.join("model.ckpt"), &header, &ctl.store)?;
        println!(
            "supervised training reached {}/{} exact in {} epoch(s)",
            correct, total, sup.epochs
        );
        if !sup.reached_full_accuracy {
            bail!("supervised training did not reach 100% within the epoch budget");
        }
        return Ok(());
    }

    match curriculum_train(&grammar, &dataset, &config.train, config.seed) {
        Ok((ctl, report)) => {
            for lesson in &report.lessons {
                for p1 in &lesson.phase1 {
                    metrics.emit(
                        "phase1_candidates",
                        json!({
                            "grammar": grammar.name.to_string(),
                            "lesson": lesson.lesson,
                            "input": p1.input,
                            "candidates": p1.candidates,
                            "candidate_lengths": p1.candidate_lengths,
                            "first_found_at": p1.first_found_at,
                        }),
                    );
                }
                metrics.emit(
                    "phase2",
                    json!({
                        "lesson": lesson.lesson,
                        "attempts": lesson.phase2_attempts,
                        "epochs": lesson.phase2_epochs,
                    }),
                );
            }
            let text = render_training_report(&report);
            std::fs::write(args.out.join("report.txt"), &text)?;
            write_checkpoint(&args.out.join("model.ckpt"), &header, &ctl.store)?;
            print!("{text}");
            Ok(())
        }
        Err(e) => {
            std::fs::write(args.out.join("report.txt"), format!("training failed: {e}\n"))?;
            Err(e.into())
        }
    }
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let (grammar, dataset) = load_dataset(&args.dataset)?;
    let examples: Vec<_> = dataset.examples().cloned().collect();
    let report = if args.oracle {
        // reference-controller baseline; exact by construction
        let correct = examples
            .iter()
            .filter(|e| {
                parsynth::grammar::oracle_parse(&grammar, e.tokens.clone())
                    .map(|out| out.tree == e.tree)
                    .unwrap_or(false)
            })
            .count();
        println!("oracle: {}/{} exact", correct, examples.len());
        return Ok(());
    } else {
        let path = args
            .checkpoint
            .as_ref()
            .ok_or_else(|| anyhow!("--checkpoint is required unless --oracle is set"))?;
        let (header, store) = read_checkpoint(path)?;
        if header.grammar != grammar.name.to_string() {
            bail!(
                "checkpoint is for grammar {:?}, dataset is {:?}",
                header.grammar,
                grammar.name.to_string()
            );
        }
        if header.terminals != grammar.vocab.terminal_names()
            || header.non_terminals != grammar.vocab.non_terminal_names()
        {
            bail!("checkpoint vocabulary ordering does not match the grammar");
        }
        let dims = ControllerDims {
            num_terminals: header.terminals.len(),
            num_non_terminals: header.non_terminals.len(),
            num_fids: header.num_fids,
            max_list_len: header.max_list_len,
            hidden: header.hidden,
        };
        let ctl = Controller::from_store(dims, store).map_err(|e| anyhow!(e))?;
        evaluate(&ctl, &grammar, &examples)
    };
    print!(
        "{}",
        render_eval_report(&dataset.name, &report, args.max_failures)
    );
    // per-length breakdown
    let mut by_len: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    for e in &examples {
        by_len.entry(e.tokens.len()).or_default().1 += 1;
    }
    for f in &report.failures {
        let len = f.input.split_whitespace().count();
        by_len.entry(len).or_default().0 += 1;
    }
    for (len, (failed, total)) in by_len {
        if total > 0 {
            println!("  len {len:>5}: {}/{} exact", total - failed, total);
        }
    }
    if report.correct != report.total {
        std::process::exit(1);
    }
    Ok(())
}

fn cmd_enum(args: EnumArgs) -> Result<()> {
    let grammar = Grammar::by_name(args.grammar);
    let options = CensusOptions::default();

    if let Some(metrics_path) = &args.verify_phase1 {
        return verify_phase1(&grammar, metrics_path);
    }

    if args.len7_exec_count {
        if grammar.name != GrammarName::Am {
            bail!("--len7-exec-count is an AM census");
        }
        let config = grammar.machine_config(200);
        let traces = parsynth::enumerate::enumerate_kind_traces(7, &config, 21);
        let count = parsynth::enumerate::count_exec_traces(
            &traces,
            &config,
            grammar.vocab.num_non_terminals(),
        );
        println!(
            "length-7 inputs: {} valid kind traces, {} valid execution traces",
            traces.len(),
            count
        );
        return Ok(());
    }

    let mut inputs: Vec<String> = Vec::new();
    if args.table2 {
        if grammar.name != GrammarName::Am {
            bail!("--table2 is the AM training-set census");
        }
        let curriculum = build_dataset(&grammar, DatasetSpec::Curriculum, 0);
        inputs.extend(curriculum.examples().map(|e| e.input_text(&grammar)));
    }
    if let Some(input) = &args.input {
        inputs.push(input.clone());
    }
    if let Some(path) = &args.dataset {
        let (file_grammar, dataset) = load_dataset(path)?;
        if file_grammar.name != grammar.name {
            bail!("dataset grammar mismatch");
        }
        inputs.extend(dataset.examples().map(|e| e.input_text(&grammar)));
    }
    if inputs.is_empty() {
        bail!("nothing to census: pass --input, --dataset, or --table2");
    }
    let mut rows = Vec::new();
    for input in &inputs {
        let tokens = grammar
            .tokenize(input)
            .with_context(|| format!("tokenizing {input:?}"))?;
        rows.push(census(&grammar, tokens, &options)?);
    }
    if args.json {
        println!("{}", census_to_json(&rows));
    } else {
        print!("{}", render_census_table(&rows));
    }
    Ok(())
}

fn verify_phase1(grammar: &Grammar, metrics_path: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(metrics_path)?;
    let options = CensusOptions::default();
    let mut checked = 0usize;
    for line in text.lines() {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if value.get("event").and_then(|e| e.as_str()) != Some("phase1_candidates") {
            continue;
        }
        let input = value
            .get("input")
            .and_then(|v| v.as_str())
            .ok_or_else(|| anyhow!("phase1_candidates event without input"))?;
        let tokens = grammar.tokenize(input)?;
        let example = parsynth::grammar::oracle_parse(grammar, tokens.clone())
            .map_err(|e| anyhow!("{e}"))?;
        let config = grammar.machine_config_for_input(tokens.len());
        let nts: Vec<_> = grammar.vocab.non_terminal_labels().collect();
        let _ = options;
        let candidates = value
            .get("candidates")
            .and_then(|v| v.as_array())
            .ok_or_else(|| anyhow!("phase1_candidates event without candidates"))?;
        for cand in candidates {
            let letters = cand
                .as_str()
                .ok_or_else(|| anyhow!("candidate is not a string"))?;
            let kinds = kind_trace_from_letters(letters)
                .ok_or_else(|| anyhow!("bad kind trace {letters:?}"))?;
            let n = parsynth::enumerate::correct_instantiations(
                &kinds,
                &example.tokens,
                &example.tree,
                &config,
                &nts,
            );
            if n == 0 {
                bail!("candidate {letters} for {input:?} is not a correct kind trace");
            }
            checked += 1;
        }
    }
    println!("verified {checked} phase-1 candidate trace(s) against the enumerator");
    Ok(())
}
