//! The `lasagne` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lasagne_core::gat::{gat_forward_trace, GatParams, NodeEmbeddings, DEFAULT_HEADS, DEFAULT_INPUT_DIM, DEFAULT_OUTPUT_DIM};
use lasagne_core::graph::TypePredicateGraph;
use lasagne_core::lf::{execute, parse_lf};
use lasagne_core::metrics::{aggregate, EvalRecord};
use lasagne_core::ApproxPolicy;

use crate::error::{EngineError, Result};
use crate::generate::{generate_dataset, read_dataset, write_dataset};
use crate::io::{load_kg_dir, read_embeddings, read_eval_records, read_graph, read_lf_batch, read_utterances, value_to_answer, write_embeddings, write_eval_records, write_graph};
use crate::pipeline::Pipeline;
use crate::templates::read_templates;

#[derive(Debug, Parser)]
#[command(name = "lasagne", version, about = "Logical forms over a small knowledge graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute logical forms and print their values.
    Exec {
        /// Directory holding triples.tsv, labels.tsv and types.tsv.
        #[arg(long)]
        kg: PathBuf,
        #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
        lf: Option<String>,
        /// File with one logical form per line.
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Fixed absolute tolerance for `approx` instead of 10% of the target.
        #[arg(long)]
        approx_tolerance: Option<u64>,
    },
    /// Link the entity spans of tagged utterances.
    Link {
        #[arg(long)]
        kg: PathBuf,
        /// File of `token|tag|slot` lines.
        #[arg(long)]
        utterance: PathBuf,
    },
    /// Dump the type–predicate graph of a knowledge graph.
    Graph {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the graph attention layer over a dumped graph.
    Gat {
        #[arg(long)]
        graph: PathBuf,
        /// Embeddings file; seeded embeddings are used when absent.
        #[arg(long)]
        emb: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input dimension of seeded embeddings.
        #[arg(long, default_value_t = DEFAULT_INPUT_DIM)]
        d_in: usize,
        #[arg(long, default_value_t = DEFAULT_OUTPUT_DIM)]
        d_out: usize,
        #[arg(long, default_value_t = DEFAULT_HEADS)]
        heads: usize,
        /// Write the output node embeddings here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the input embeddings here (useful with seeded input).
        #[arg(long)]
        write_input: Option<PathBuf>,
    },
    /// Generate a synthetic question dataset from templates.
    Gen {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer a generated dataset through linking and execution.
    Predict {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against gold answers.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
}

/// Runs the CLI and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if help {
                let _ = write!(out, "{rendered}");
                return 0;
            }
            let _ = write!(err, "{rendered}");
            return 1;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| EngineError::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        emit($out, format_args!($($arg)*))?
    };
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Exec {
            kg,
            lf,
            batch,
            approx_tolerance,
        } => {
            let kg = load_kg_dir(&kg)?;
            let policy = approx_tolerance.map_or_else(ApproxPolicy::default, ApproxPolicy::Fixed);
            if let Some(text) = lf {
                let node = parse_lf(&text)?;
                let value = execute(&node, &kg, policy).map_err(lasagne_core::LfError::from)?;
                say!(out, "{value}");
                return Ok(0);
            }
            let path = batch.expect("clap requires --lf or --batch");
            let mut failed = 0;
            for (n, text) in read_lf_batch(&path)? {
                let result = parse_lf(&text)
                    .map_err(lasagne_core::LfError::from)
                    .and_then(|node| execute(&node, &kg, policy).map_err(Into::into));
                match result {
                    Ok(v) => say!(out, "{v}"),
                    Err(e) => {
                        failed += 1;
                        let _ = writeln!(err, "{}:{n}: {e}", path.display());
                        say!(out, "error");
                    }
                }
            }
            Ok(i32::from(failed > 0))
        }
        Command::Link { kg, utterance } => {
            let kg = load_kg_dir(&kg)?;
            let pipeline = Pipeline::new(&kg);
            let mut failed = 0;
            for (n, seq) in read_utterances(&utterance)? {
                say!(out, "line {n}");
                match pipeline.link(&seq) {
                    Ok((linked, entities)) => {
                        for l in &linked {
                            let text = seq.tokens()[l.span.start..l.span.end].join(" ");
                            say!(
                                out,
                                "  [{}, {}) \"{text}\" type={} slot={} -> {} ({} candidates{})",
                                l.span.start,
                                l.span.end,
                                l.span.predicted_type,
                                l.span.slot,
                                l.entity,
                                l.candidates_considered,
                                if l.type_fallback { ", type fallback" } else { "" }
                            );
                        }
                        let names: Vec<&str> = entities.iter().map(|e| e.as_str()).collect();
                        say!(out, "  entities: {}", names.join(", "));
                    }
                    Err(e) => {
                        failed += 1;
                        let _ = writeln!(err, "{}:{n}: {e}", utterance.display());
                        say!(out, "  error");
                    }
                }
            }
            Ok(i32::from(failed > 0))
        }
        Command::Graph { kg, out: path } => {
            let kg = load_kg_dir(&kg)?;
            let graph = TypePredicateGraph::build(&kg);
            write_graph(&path, &graph)?;
            say!(
                out,
                "{} nodes ({} types, {} predicates), {} links -> {}",
                graph.len(),
                kg.type_count(),
                kg.predicates().len(),
                graph.links().count(),
                path.display()
            );
            Ok(0)
        }
        Command::Gat {
            graph,
            emb,
            seed,
            d_in,
            d_out,
            heads,
            out: out_path,
            write_input,
        } => {
            let graph = read_graph(&graph)?;
            let h = match &emb {
                Some(p) => read_embeddings(p, &graph)?,
                None => NodeEmbeddings::seeded(&graph, seed, d_in),
            };
            if let Some(p) = &write_input {
                write_embeddings(p, &graph, &h)?;
            }
            run_gat(&graph, &h, seed, d_out, heads, out_path.as_deref(), out)?;
            Ok(0)
        }
        Command::Gen {
            kg,
            templates,
            n,
            seed,
            out: dir,
        } => {
            let kg = load_kg_dir(&kg)?;
            let templates = read_templates(&templates)?;
            let examples = generate_dataset(&kg, &templates, n, seed)?;
            write_dataset(&dir, &examples)?;
            say!(out, "wrote {} examples to {}", examples.len(), dir.display());
            Ok(0)
        }
        Command::Predict { kg, dataset, out: path } => {
            let kg = load_kg_dir(&kg)?;
            let pipeline = Pipeline::new(&kg);
            let mut records = Vec::new();
            let mut failed = 0;
            for ex in read_dataset(&dataset)? {
                let answer = pipeline
                    .run(&ex.utterance, &ex.lf_sketch)
                    .map_err(|e| e.to_string())
                    .and_then(|r| value_to_answer(&r.value).ok_or_else(|| "a count map is not an answer".to_string()));
                match answer {
                    Ok(answer) => records.push(EvalRecord {
                        question_id: ex.id,
                        question_type: ex.question_type,
                        answer,
                    }),
                    Err(e) => {
                        failed += 1;
                        let _ = writeln!(err, "{}: {e}", ex.id);
                    }
                }
            }
            write_eval_records(&path, &records)?;
            say!(out, "answered {} questions, {failed} failed -> {}", records.len(), path.display());
            Ok(i32::from(failed > 0))
        }
        Command::Eval { pred, gold } => {
            let preds = read_eval_records(&pred)?;
            let golds = read_eval_records(&gold)?;
            let report = aggregate(&preds, &golds)?;
            write!(out, "{report}").map_err(|e| EngineError::io("<stdout>", e))?;
            Ok(0)
        }
    }
}

fn run_gat(
    graph: &TypePredicateGraph,
    h: &NodeEmbeddings,
    seed: u64,
    d_out: usize,
    heads: usize,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let params = GatParams::seeded(h.dim(), d_out, heads, seed)?;
    let trace = gat_forward_trace(graph, h, &params)?;
    let values = trace.output.matrix().as_slice();
    let sum: f64 = values.iter().sum();
    let abs_sum: f64 = values.iter().map(|v| v.abs()).sum();
    let deviation = trace
        .attention
        .iter()
        .flatten()
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    say!(
        out,
        "nodes {} links {} d_in {} d_out {} heads {} seed {seed}",
        graph.len(),
        graph.links().count(),
        h.dim(),
        d_out,
        heads
    );
    say!(out, "checksum sum {sum:.12e} abs {abs_sum:.12e}");
    say!(out, "attention max |row sum - 1| {deviation:.3e}");
    if let Some(p) = out_path {
        write_embeddings(p, graph, &trace.output)?;
    }
    Ok(())
}
